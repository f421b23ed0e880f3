//! Linguistic normalization: tokenize, drop stop words, stem.
//!
//! Everything downstream counts the terms produced here, so the pipeline is
//! pure and deterministic: the same text and [`AnalyzerConfig`] always give
//! the same output.

pub mod german;
pub mod porter;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;

const EN_STOPWORDS: &str = include_str!("../../data/stopwords/en.txt");
const DE_STOPWORDS: &str = include_str!("../../data/stopwords/de.txt");

pub const DEFAULT_MIN_TOKEN_LEN: usize = 2;
pub const DEFAULT_MAX_TOKEN_LEN: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyzerError {
    #[error("unsupported analyzer language '{0}' (expected \"en\" or \"de\")")]
    UnsupportedLanguage(String),
    #[error("invalid token length bounds: min {min}, max {max}")]
    InvalidBounds { min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    De,
}

impl Language {
    pub fn tag(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::De => "de",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = AnalyzerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "en" => Ok(Language::En),
            "de" => Ok(Language::De),
            other => Err(AnalyzerError::UnsupportedLanguage(other.to_string())),
        }
    }
}

/// Stemming algorithm applied after stop word removal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stemmer {
    Porter,
    GermanLight,
}

impl Stemmer {
    pub fn stem(self, token: &str) -> String {
        match self {
            Stemmer::Porter => porter::stem(token),
            Stemmer::GermanLight => german::stem(token),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerConfig {
    pub language: Language,
    /// Case-folded surface tokens.
    pub stopwords: BTreeSet<String>,
    pub stemmer: Stemmer,
    pub min_token_len: usize,
    pub max_token_len: usize,
}

impl AnalyzerConfig {
    /// Built-in stop list and stemmer for `language`, default length bounds.
    pub fn for_language(language: Language) -> Self {
        let (list, stemmer) = match language {
            Language::En => (EN_STOPWORDS, Stemmer::Porter),
            Language::De => (DE_STOPWORDS, Stemmer::GermanLight),
        };
        AnalyzerConfig {
            language,
            stopwords: term_lines(list).map(fold_case).collect(),
            stemmer,
            min_token_len: DEFAULT_MIN_TOKEN_LEN,
            max_token_len: DEFAULT_MAX_TOKEN_LEN,
        }
    }

    /// Adds provider stop words (same line format as the built-in lists).
    pub fn extend_stopwords(&mut self, list: &str) {
        self.stopwords.extend(term_lines(list).map(fold_case));
    }

    pub fn with_token_bounds(mut self, min: usize, max: usize) -> Result<Self, AnalyzerError> {
        self.min_token_len = min;
        self.max_token_len = max;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), AnalyzerError> {
        if self.min_token_len < 1 || self.min_token_len > self.max_token_len {
            return Err(AnalyzerError::InvalidBounds { min: self.min_token_len, max: self.max_token_len });
        }
        Ok(())
    }
}

/// Iterates the usable lines of a one-term-per-line text file: trimmed,
/// skipping blank lines and lines starting with `#`.
pub fn term_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|line| !line.is_empty() && !line.starts_with('#'))
}

pub fn fold_case(s: &str) -> String {
    caseless::default_case_fold_str(s)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

/// Splits `text` into case-folded surface tokens.
///
/// Word characters are letters, digits and combining marks; a hyphen is kept
/// only between two word characters. Tokens without any letter are dropped,
/// as are tokens whose length falls outside the configured bounds.
pub fn tokenize(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let inner_hyphen = c == '-' && !current.is_empty() && chars.get(i + 1).copied().is_some_and(is_word_char);
        if is_word_char(c) || inner_hyphen {
            current.push(c);
        } else if !current.is_empty() {
            push_token(&mut tokens, &current, config);
            current.clear();
        }
    }
    if !current.is_empty() {
        push_token(&mut tokens, &current, config);
    }
    tokens
}

fn push_token(tokens: &mut Vec<String>, raw: &str, config: &AnalyzerConfig) {
    let token = fold_case(raw);
    let len = token.chars().count();
    if len < config.min_token_len || len > config.max_token_len {
        return;
    }
    if !token.chars().any(char::is_alphabetic) {
        return;
    }
    tokens.push(token);
}

/// Order-preserving removal of stop words. Applying it twice is the same as
/// applying it once.
pub fn remove_stopwords(tokens: Vec<String>, config: &AnalyzerConfig) -> Vec<String> {
    tokens.into_iter().filter(|t| !config.stopwords.contains(t)).collect()
}

pub fn stem(token: &str, config: &AnalyzerConfig) -> String {
    config.stemmer.stem(token)
}

/// tokenize, then stop word removal, then stemming. Multiplicities and
/// token order are preserved.
pub fn analyze(text: &str, config: &AnalyzerConfig) -> Vec<String> {
    remove_stopwords(tokenize(text, config), config).iter().map(|t| stem(t, config)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn en() -> AnalyzerConfig {
        AnalyzerConfig::for_language(Language::En)
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("transboundary water management?", &en()), ["transboundary", "water", "management"]);
        assert!(tokenize("", &en()).is_empty());
        assert_eq!(tokenize("co-operation 2005", &en()), ["co-operation"]);
    }

    #[test]
    fn hyphens_only_inside_words() {
        assert_eq!(tokenize("-lead trail- a--b x-y", &en()), ["lead", "trail", "x-y"]);
        assert_eq!(tokenize("2005-2006 covid-19", &en()), ["covid-19"]);
    }

    #[test]
    fn length_bounds() {
        let cfg = en().with_token_bounds(3, 5).unwrap();
        assert_eq!(tokenize("a ab abc abcde abcdef", &cfg), ["abc", "abcde"]);
        assert_eq!(en().with_token_bounds(0, 5), Err(AnalyzerError::InvalidBounds { min: 0, max: 5 }));
        assert!(en().with_token_bounds(6, 5).is_err());
    }

    #[test]
    fn case_folding_and_marks() {
        assert_eq!(tokenize("GELD Straße", &en()), ["geld", "strasse"]);
        // "e" followed by a combining acute accent stays one token.
        assert_eq!(tokenize("cafe\u{301} noir", &en()), ["cafe\u{301}", "noir"]);
    }

    #[test]
    fn stopwords() {
        let cfg = en();
        let out = remove_stopwords(vec!["the".into(), "labour".into(), "market".into()], &cfg);
        assert_eq!(out, ["labour", "market"]);
        assert!(remove_stopwords(vec![], &cfg).is_empty());
        assert_eq!(remove_stopwords(out.clone(), &cfg), out);
    }

    #[test]
    fn stemmer_dispatch() {
        assert_eq!(stem("policies", &en()), "polici");
        assert_eq!(stem("x", &en()), "x");
        let de = AnalyzerConfig::for_language(Language::De);
        assert_eq!(stem("entwicklungen", &de), "entwicklung");
    }

    #[test]
    fn analyze_only_stopwords_is_empty() {
        assert!(analyze("the of and", &en()).is_empty());
        assert!(analyze("und der die", &AnalyzerConfig::for_language(Language::De)).is_empty());
    }

    #[test]
    fn provider_stopwords_are_folded() {
        let mut cfg = en();
        cfg.extend_stopwords("# extra\nPaper\n\n");
        assert!(cfg.stopwords.contains("paper"));
        assert!(analyze("This Paper", &cfg).is_empty());
    }

    #[test]
    fn language_tags() {
        assert_eq!("DE".parse::<Language>(), Ok(Language::De));
        assert_eq!("fr".parse::<Language>(), Err(AnalyzerError::UnsupportedLanguage("fr".into())));
    }
}
