//! The Porter stemming algorithm, following Martin Porter's reference C
//! implementation (including its two departures from the original
//! description: `bli -> ble` in place of `abli -> able`, and `logi -> log`).
//!
//! Input is expected to be case-folded. Non-ASCII letters are treated as
//! consonants. Words of one or two characters are returned unchanged.

/// Stem a single case-folded word.
pub fn stem(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() <= 2 {
        return word.to_string();
    }
    let mut stemmer = Stemmer { b: chars, j: 0 };
    stemmer.step1ab();
    if stemmer.b.len() > 1 {
        stemmer.step1c();
        stemmer.step2();
        stemmer.step3();
        stemmer.step4();
        stemmer.step5();
    }
    stemmer.b.into_iter().collect()
}

struct Stemmer {
    /// The word being stemmed; its last character is the current end.
    b: Vec<char>,
    /// Index of the last character of the stem before a matched suffix.
    /// May be -1 when the suffix covers the whole word.
    j: isize,
}

impl Stemmer {
    fn k(&self) -> usize {
        self.b.len() - 1
    }

    fn cons(&self, i: usize) -> bool {
        match self.b[i] {
            'a' | 'e' | 'i' | 'o' | 'u' => false,
            'y' => i == 0 || !self.cons(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in b[0..=j], the `m` in `[C](VC)^m[V]`.
    fn m(&self) -> usize {
        let end = self.j;
        let mut n = 0;
        let mut i: isize = 0;
        while i <= end && self.cons(i as usize) {
            i += 1;
        }
        loop {
            while i <= end && !self.cons(i as usize) {
                i += 1;
            }
            if i > end {
                return n;
            }
            while i <= end && self.cons(i as usize) {
                i += 1;
            }
            n += 1;
            if i > end {
                return n;
            }
        }
    }

    fn vowel_in_stem(&self) -> bool {
        (0..=self.j).any(|i| !self.cons(i as usize))
    }

    fn double_consonant(&self, j: usize) -> bool {
        j >= 1 && self.b[j] == self.b[j - 1] && self.cons(j)
    }

    /// consonant-vowel-consonant ending at i, where the final consonant is
    /// not w, x or y.
    fn cvc(&self, i: isize) -> bool {
        if i < 2 {
            return false;
        }
        let i = i as usize;
        if !self.cons(i) || self.cons(i - 1) || !self.cons(i - 2) {
            return false;
        }
        !matches!(self.b[i], 'w' | 'x' | 'y')
    }

    fn ends(&mut self, s: &str) -> bool {
        let len = s.chars().count();
        if len > self.b.len() {
            return false;
        }
        let start = self.b.len() - len;
        if !self.b[start..].iter().copied().eq(s.chars()) {
            return false;
        }
        self.j = start as isize - 1;
        true
    }

    fn set_to(&mut self, s: &str) {
        self.b.truncate((self.j + 1) as usize);
        self.b.extend(s.chars());
    }

    fn replace_if_measured(&mut self, s: &str) {
        if self.m() > 0 {
            self.set_to(s);
        }
    }

    fn step1ab(&mut self) {
        if self.b[self.k()] == 's' {
            if self.ends("sses") {
                self.b.truncate(self.b.len() - 2);
            } else if self.ends("ies") {
                self.set_to("i");
            } else if self.b[self.k() - 1] != 's' {
                self.b.pop();
            }
        }
        if self.ends("eed") {
            if self.m() > 0 {
                self.b.pop();
            }
        } else if (self.ends("ed") || self.ends("ing")) && self.vowel_in_stem() {
            self.b.truncate((self.j + 1) as usize);
            if self.ends("at") {
                self.set_to("ate");
            } else if self.ends("bl") {
                self.set_to("ble");
            } else if self.ends("iz") {
                self.set_to("ize");
            } else if self.double_consonant(self.k()) {
                if !matches!(self.b[self.k() - 1], 'l' | 's' | 'z') {
                    self.b.pop();
                }
            } else {
                self.j = self.k() as isize;
                if self.m() == 1 && self.cvc(self.j) {
                    self.b.push('e');
                }
            }
        }
    }

    fn step1c(&mut self) {
        if self.ends("y") && self.vowel_in_stem() {
            let k = self.k();
            self.b[k] = 'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(char, &[(&str, &str)])] = &[
            ('a', &[("ational", "ate"), ("tional", "tion")]),
            ('c', &[("enci", "ence"), ("anci", "ance")]),
            ('e', &[("izer", "ize")]),
            ('l', &[("bli", "ble"), ("alli", "al"), ("entli", "ent"), ("eli", "e"), ("ousli", "ous")]),
            ('o', &[("ization", "ize"), ("ation", "ate"), ("ator", "ate")]),
            ('s', &[("alism", "al"), ("iveness", "ive"), ("fulness", "ful"), ("ousness", "ous")]),
            ('t', &[("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")]),
            ('g', &[("logi", "log")]),
        ];
        self.apply_table(self.b[self.k() - 1], RULES);
    }

    fn step3(&mut self) {
        const RULES: &[(char, &[(&str, &str)])] = &[
            ('e', &[("icate", "ic"), ("ative", ""), ("alize", "al")]),
            ('i', &[("iciti", "ic")]),
            ('l', &[("ical", "ic"), ("ful", "")]),
            ('s', &[("ness", "")]),
        ];
        self.apply_table(self.b[self.k()], RULES);
    }

    fn apply_table(&mut self, key: char, table: &[(char, &[(&str, &str)])]) {
        let Some((_, rules)) = table.iter().find(|(c, _)| *c == key) else {
            return;
        };
        for (suffix, replacement) in rules.iter() {
            if self.ends(suffix) {
                self.replace_if_measured(replacement);
                return;
            }
        }
    }

    fn step4(&mut self) {
        let matched = match self.b[self.k() - 1] {
            'a' => self.ends("al"),
            'c' => self.ends("ance") || self.ends("ence"),
            'e' => self.ends("er"),
            'i' => self.ends("ic"),
            'l' => self.ends("able") || self.ends("ible"),
            'n' => self.ends("ant") || self.ends("ement") || self.ends("ment") || self.ends("ent"),
            'o' => (self.ends("ion") && self.j >= 0 && matches!(self.b[self.j as usize], 's' | 't')) || self.ends("ou"),
            's' => self.ends("ism"),
            't' => self.ends("ate") || self.ends("iti"),
            'u' => self.ends("ous"),
            'v' => self.ends("ive"),
            'z' => self.ends("ize"),
            _ => false,
        };
        if matched && self.m() > 1 {
            self.b.truncate((self.j + 1) as usize);
        }
    }

    fn step5(&mut self) {
        // As in the reference code, the measure for the second rule still
        // covers a final 'e' dropped by the first.
        self.j = self.k() as isize;
        let mut end = self.b.len();
        if self.b[end - 1] == 'e' {
            let a = self.m();
            if a > 1 || (a == 1 && !self.cvc(self.j - 1)) {
                end -= 1;
            }
        }
        if self.b[end - 1] == 'l' && self.double_consonant(end - 1) && self.m() > 1 {
            end -= 1;
        }
        self.b.truncate(end);
    }
}
