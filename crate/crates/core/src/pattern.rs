use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::seqdb::Item;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pattern {
    pub items: Vec<Item>,
    pub support: usize,
}

/// Mined patterns keyed by item list; iteration is lexicographic.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PatternSet {
    patterns: BTreeMap<Vec<Item>, usize>,
}

impl PatternSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, items: Vec<Item>, support: usize) {
        let prev = self.patterns.insert(items, support);
        debug_assert!(prev.is_none(), "pattern emitted twice");
    }

    pub fn extend(&mut self, other: PatternSet) {
        for (items, sup) in other.patterns {
            self.insert(items, sup);
        }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn support(&self, items: &[Item]) -> Option<usize> {
        self.patterns.get(items).copied()
    }

    pub fn contains(&self, items: &[Item]) -> bool {
        self.patterns.contains_key(items)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Item], usize)> {
        self.patterns.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn to_patterns(&self) -> Vec<Pattern> {
        self.iter().map(|(items, support)| Pattern { items: items.to_vec(), support }).collect()
    }

    /// One line per pattern: `i1 i2 ...\t#SUP: n`, sorted by item list.
    pub fn to_output(&self) -> String {
        let mut out = String::new();
        for (items, sup) in self.iter() {
            let joined: Vec<String> = items.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(out, "{}\t#SUP: {sup}", joined.join(" "));
        }
        out
    }

    pub fn parse_output(text: &str) -> Result<Self> {
        let mut set = Self::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Parse { line: ln + 1, msg: format!("malformed pattern line `{line}`") };
            let (items, sup) = line.split_once("\t#SUP:").ok_or_else(bad)?;
            let items =
                items.split_whitespace().map(|t| t.parse::<Item>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
            let sup = sup.trim().parse::<usize>().map_err(|_| bad())?;
            set.patterns.insert(items, sup);
        }
        Ok(set)
    }
}

impl FromIterator<(Vec<Item>, usize)> for PatternSet {
    fn from_iter<T: IntoIterator<Item = (Vec<Item>, usize)>>(iter: T) -> Self {
        Self { patterns: iter.into_iter().collect() }
    }
}
