//! Association measures over document frequencies.
//!
//! All functions take plain counts: `fx`, `fy` are the document frequencies
//! of the two terms, `fxy` the number of documents containing both and `n`
//! the corpus size. Both measures are symmetric in `(fx, fy)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Jaccard,
    Nwd,
    /// Reserved for a learned recommender; not available in this build.
    Learned,
}

impl Metric {
    pub fn tag(self) -> &'static str {
        match self {
            Metric::Jaccard => "jaccard",
            Metric::Nwd => "nwd",
            Metric::Learned => "learned",
        }
    }

    pub fn is_available(self) -> bool {
        !matches!(self, Metric::Learned)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "jaccard" => Ok(Metric::Jaccard),
            "nwd" => Ok(Metric::Nwd),
            "learned" => Ok(Metric::Learned),
            other => Err(format!("unknown metric '{other}' (expected jaccard or nwd)")),
        }
    }
}

/// Jaccard similarity as an unreduced fraction `(|X ∩ Y|, |X ∪ Y|)`.
/// The denominator is 0 only when both sets are empty.
pub fn jaccard_fraction(fx: u32, fy: u32, fxy: u32) -> (u32, u32) {
    debug_assert!(fxy <= fx.min(fy));
    (fxy, fx + fy - fxy)
}

/// `fxy / (fx + fy - fxy)`; 0 when the terms never co-occur.
pub fn jaccard_score(fx: u32, fy: u32, fxy: u32) -> f64 {
    match jaccard_fraction(fx, fy, fxy) {
        (0, _) => 0.0,
        (num, den) => f64::from(num) / f64::from(den),
    }
}

/// Normalized Web Distance with natural logarithms:
///
/// `(max(ln fx, ln fy) - ln fxy) / (ln n - min(ln fx, ln fy))`
///
/// `None` when undefined: the terms never co-occur, or either term occurs
/// in every document. In the second case the denominator is zero or, for
/// consistent counts, the distance is exactly 1 whatever `y` is, so the
/// pair carries no evidence.
pub fn nwd_distance(n: u32, fx: u32, fy: u32, fxy: u32) -> Option<f64> {
    if fxy == 0 || fx == 0 || fy == 0 {
        return None;
    }
    let (lx, ly) = (f64::from(fx).ln(), f64::from(fy).ln());
    let denominator = f64::from(n).ln() - lx.min(ly);
    if fx.max(fy) >= n || denominator <= 0.0 {
        return None;
    }
    let numerator = lx.max(ly) - f64::from(fxy).ln();
    Some(numerator / denominator)
}

/// Maps a distance to a confidence in `[0, 1]`.
pub fn nwd_confidence(distance: f64) -> f64 {
    (1.0 - distance).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard_score(3, 3, 2), 0.5);
        assert_eq!(jaccard_score(4, 4, 4), 1.0);
        assert_eq!(jaccard_score(3, 5, 0), 0.0);
        assert_eq!(jaccard_fraction(3, 3, 2), (2, 4));
    }

    #[test]
    fn nwd_anchor_values() {
        let d = nwd_distance(100, 10, 4, 2).unwrap();
        assert!((d - 0.5).abs() < 1e-12, "{d}");
        assert_eq!(nwd_distance(100, 7, 7, 7), Some(0.0));
        assert_eq!(nwd_distance(100, 100, 4, 4), None);
        assert_eq!(nwd_distance(100, 4, 100, 4), None);
        assert_eq!(nwd_distance(100, 10, 4, 0), None);
        assert_eq!(nwd_distance(5, 5, 5, 5), None);
    }

    #[test]
    fn confidence_mapping_clamps() {
        assert_eq!(nwd_confidence(0.0), 1.0);
        assert_eq!(nwd_confidence(0.25), 0.75);
        assert_eq!(nwd_confidence(1.7), 0.0);
    }

    #[test]
    fn metric_tags() {
        assert_eq!("NWD".parse::<Metric>(), Ok(Metric::Nwd));
        assert_eq!("jaccard".parse::<Metric>(), Ok(Metric::Jaccard));
        assert!(!"learned".parse::<Metric>().unwrap().is_available());
        assert!("cosine".parse::<Metric>().is_err());
    }
}
