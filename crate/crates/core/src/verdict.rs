//! The binary real/fake label used everywhere a judgment is expressed.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Binary verdict over an image: authentic photo or AI-generated.
///
/// Exactly two inhabitants; parsing any other token is an error. Token
/// matching is case-insensitive with surrounding whitespace ignored, so
/// `"Real"`, `"REAL"` and `" real "` all map to [`Verdict::Real`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Real,
    Fake,
}

impl Verdict {
    /// Canonical lowercase token.
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Real => "real",
            Verdict::Fake => "fake",
        }
    }

    /// Parse a verdict token, trimming whitespace and ignoring case.
    /// Returns `None` for anything that is not exactly one of the two tokens.
    pub fn parse_token(token: &str) -> Option<Verdict> {
        let t = token.trim();
        if t.eq_ignore_ascii_case("real") {
            Some(Verdict::Real)
        } else if t.eq_ignore_ascii_case("fake") {
            Some(Verdict::Fake)
        } else {
            None
        }
    }

    /// The opposite label.
    pub fn flipped(self) -> Verdict {
        match self {
            Verdict::Real => Verdict::Fake,
            Verdict::Fake => Verdict::Real,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Verdict::parse_token(s).ok_or(())
    }
}
