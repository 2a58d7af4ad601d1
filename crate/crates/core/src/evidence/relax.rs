use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead};
use std::path::Path;

use super::{open_lines, EvidenceError, PhoneSequence};
use crate::disjoint::DisjointSet;

/// Phone pairs treated as interchangeable when comparing pronunciations.
///
/// Pairs are closed transitively; every phone in a connected group maps to
/// the group's smallest symbol.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelaxationTable {
    pairs: BTreeSet<(String, String)>,
    representative: BTreeMap<String, String>,
}

impl RelaxationTable {
    pub fn new<A, B>(pairs: impl IntoIterator<Item = (A, B)>) -> Self
    where
        A: Into<String>,
        B: Into<String>,
    {
        let pairs: BTreeSet<(String, String)> = pairs
            .into_iter()
            .map(|(a, b)| {
                let (a, b) = (a.into(), b.into());
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();

        let mut sets = DisjointSet::new();
        for (a, b) in &pairs {
            sets.union(a, b);
        }
        let mut representative = BTreeMap::new();
        for group in sets.groups() {
            // groups are sorted, so the first member is the smallest
            let rep = group[0].clone();
            for phone in group {
                representative.insert(phone, rep.clone());
            }
        }
        Self {
            pairs,
            representative,
        }
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self, EvidenceError> {
        let path = path.as_ref();
        Self::from_reader(open_lines(path)?).map_err(|e| e.with_path(path))
    }

    /// One `phoneA phoneB` pair per line; `#` starts a comment line.
    pub fn from_reader(reader: impl BufRead) -> Result<Self, EvidenceError> {
        let mut pairs = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| EvidenceError::io("<reader>", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(EvidenceError::malformed(
                    idx + 1,
                    format!("expected two phones, found {}", fields.len()),
                ));
            }
            pairs.push((fields[0].to_owned(), fields[1].to_owned()));
        }
        Ok(Self::new(pairs))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn representative<'a>(&'a self, phone: &'a str) -> &'a str {
        self.representative
            .get(phone)
            .map(String::as_str)
            .unwrap_or(phone)
    }

    pub fn relax(&self, seq: &PhoneSequence) -> PhoneSequence {
        PhoneSequence::new(
            seq.phones()
                .iter()
                .map(|p| self.representative(p).to_owned())
                .collect(),
        )
    }

    pub fn write(&self, mut out: impl io::Write) -> io::Result<()> {
        for (a, b) in &self.pairs {
            writeln!(out, "{a} {b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(s: &str) -> PhoneSequence {
        PhoneSequence::parse(s)
    }

    #[test]
    fn oh_ow_relaxation() {
        let table = RelaxationTable::new([("oh", "ow")]);
        assert_eq!(
            table.relax(&seq("dr oh m ay s tr ih k")),
            table.relax(&seq("dr ow m ay s tr ih k"))
        );
    }

    #[test]
    fn passthrough_cases() {
        let table = RelaxationTable::new([("iy", "ih")]);
        assert_eq!(table.relax(&seq("")), seq(""));
        assert_eq!(table.relax(&seq("k ah l ah r")), seq("k ah l ah r"));
    }

    #[test]
    fn closure_is_transitive() {
        let table = RelaxationTable::new([("a", "b"), ("c", "b"), ("x", "y")]);
        assert_eq!(table.representative("c"), "a");
        assert_eq!(table.representative("b"), "a");
        assert_eq!(table.representative("y"), "x");
        assert_ne!(table.representative("a"), table.representative("x"));
    }

    #[test]
    fn parses_file_layout() {
        let text = "# vowels\noh ow\n\niy ih\n";
        let table = RelaxationTable::from_reader(text.as_bytes()).unwrap();
        assert_eq!(table.pairs().count(), 2);
        assert!(RelaxationTable::from_reader("oh ow uw\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn representative_is_idempotent(
            pairs in prop::collection::vec(("[a-f]", "[a-f]"), 0..12),
            probe in "[a-h]",
        ) {
            let table = RelaxationTable::new(pairs.clone());
            let rep = table.representative(&probe).to_owned();
            prop_assert_eq!(table.representative(&rep), rep.as_str());
            // phones joined by a pair always share a representative
            for (a, b) in &pairs {
                prop_assert_eq!(table.representative(a), table.representative(b));
            }
        }
    }
}
