use std::io::BufRead;
use std::ops::RangeInclusive;
use std::path::Path;

use unicode_normalization::char::is_combining_mark;

use super::SegError;

/// Characters that may not begin a segment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ForbiddenInitial {
    /// Any character with Unicode general category Mark, which covers
    /// nukta, virama and the Indic dependent vowel signs.
    #[default]
    CombiningMarks,
    Ranges(Vec<RangeInclusive<char>>),
}

impl ForbiddenInitial {
    pub fn contains(&self, c: char) -> bool {
        match self {
            ForbiddenInitial::CombiningMarks => is_combining_mark(c),
            ForbiddenInitial::Ranges(ranges) => ranges.iter().any(|r| r.contains(&c)),
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, SegError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SegError::RuleFile {
            line: 0,
            reason: format!("{}: {e}", path.display()),
        })?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// One code point (hex, optional `U+`) or range `A-B` / `A..B` per line.
    /// `#` starts a comment.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, SegError> {
        let mut ranges = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let bad = |reason: String| SegError::RuleFile {
                line: idx + 1,
                reason,
            };
            let line = line.map_err(|e| bad(e.to_string()))?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (lo, hi) = match line.split_once("..").or_else(|| line.split_once('-')) {
                Some((a, b)) => (parse_code_point(a), parse_code_point(b)),
                None => (parse_code_point(line), parse_code_point(line)),
            };
            let (lo, hi) = (lo.map_err(&bad)?, hi.map_err(&bad)?);
            if lo > hi {
                return Err(bad(format!("empty range {line}")));
            }
            ranges.push(lo..=hi);
        }
        Ok(ForbiddenInitial::Ranges(ranges))
    }
}

fn parse_code_point(s: &str) -> Result<char, String> {
    let s = s.trim();
    let hex = s
        .strip_prefix("U+")
        .or_else(|| s.strip_prefix("u+"))
        .or_else(|| s.strip_prefix("0x"))
        .unwrap_or(s);
    let v = u32::from_str_radix(hex, 16).map_err(|e| format!("bad code point {s:?}: {e}"))?;
    char::from_u32(v).ok_or_else(|| format!("{s:?} is not a Unicode scalar value"))
}

/// Language-specific checks applied to every segment of a candidate split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    pub forbidden_initial: ForbiddenInitial,
    pub min_segment_chars: usize,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self {
            forbidden_initial: ForbiddenInitial::default(),
            min_segment_chars: 1,
        }
    }
}

impl RuleSet {
    /// Rule set that accepts every non-empty segment.
    pub fn permissive() -> Self {
        Self {
            forbidden_initial: ForbiddenInitial::Ranges(Vec::new()),
            min_segment_chars: 1,
        }
    }

    pub fn check(&self, segments: &[String]) -> bool {
        segments.iter().all(|s| {
            let mut chars = s.chars();
            match chars.next() {
                None => false,
                Some(first) => {
                    !self.forbidden_initial.contains(first)
                        && s.chars().count() >= self.min_segment_chars
                }
            }
        })
    }
}
