//! Shared pieces of the tab-separated review files that language experts
//! edit between mining and evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

impl ReviewError {
    pub(crate) fn malformed(line: usize, reason: impl Into<String>) -> Self {
        ReviewError::Malformed {
            line,
            reason: reason.into(),
        }
    }
}

/// Expert judgement appended as the last column of a review file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewDecision {
    Accept,
    Reject,
}

impl FromStr for ReviewDecision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accept" => Ok(ReviewDecision::Accept),
            "reject" => Ok(ReviewDecision::Reject),
            other => Err(format!("verdict must be accept or reject, got {other:?}")),
        }
    }
}

impl fmt::Display for ReviewDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReviewDecision::Accept => "accept",
            ReviewDecision::Reject => "reject",
        })
    }
}

/// A verdict column wins over the miner's own `accepted` flag.
pub(crate) fn included(accepted: bool, review: Option<ReviewDecision>) -> bool {
    match review {
        Some(ReviewDecision::Accept) => true,
        Some(ReviewDecision::Reject) => false,
        None => accepted,
    }
}

pub(crate) fn parse_bool(s: &str, line: usize) -> Result<bool, ReviewError> {
    match s.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ReviewError::malformed(
            line,
            format!("accepted must be true or false, got {other:?}"),
        )),
    }
}

/// Splits a data line into exactly `base` or `base + 1` fields.
pub(crate) fn split_fields(
    line: &str,
    base: usize,
    lineno: usize,
) -> Result<(Vec<&str>, Option<ReviewDecision>), ReviewError> {
    let mut fields: Vec<&str> = line.split('\t').collect();
    let review = match fields.len() {
        n if n == base => None,
        n if n == base + 1 => {
            let v = fields.pop().unwrap();
            if v.trim().is_empty() {
                None
            } else {
                Some(v.parse().map_err(|e| ReviewError::malformed(lineno, e))?)
            }
        }
        n => {
            return Err(ReviewError::malformed(
                lineno,
                format!("expected {base} or {} fields, found {n}", base + 1),
            ))
        }
    };
    Ok((fields, review))
}
