//! Light German suffix stripping.
//!
//! One suffix is removed per word: the longest of `en`, `er`, `es`, `e`,
//! `s`, `n` that the word ends with. The strip only happens when at least
//! [`MIN_STEM_CHARS`] characters remain; otherwise the word is returned
//! unchanged. Compounds are not split and umlauts are left as they are.

/// Minimum number of characters that must remain after stripping.
pub const MIN_STEM_CHARS: usize = 3;

const SUFFIXES: [&str; 6] = ["en", "er", "es", "e", "s", "n"];

pub fn stem(word: &str) -> String {
    let Some(suffix) = SUFFIXES.iter().filter(|s| word.ends_with(**s)).max_by_key(|s| s.len()) else {
        return word.to_string();
    };
    let stem = &word[..word.len() - suffix.len()];
    if stem.chars().count() >= MIN_STEM_CHARS {
        stem.to_string()
    } else {
        word.to_string()
    }
}
