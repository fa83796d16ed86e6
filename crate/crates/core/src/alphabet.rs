//! Interned string alphabets shared by the feature extractor, the label set
//! and embedding vocabularies.
//!
//! Indices are assigned in first-encounter order, which keeps every consumer
//! deterministic given deterministic input order. The backing hash map is
//! used for lookup only and is never iterated.

use std::collections::HashMap;

#[derive(Debug, Clone, Default)]
pub struct Alphabet {
    entries: Vec<String>,
    index: HashMap<String, u32>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut a = Self::new();
        for e in entries {
            a.intern(&e.into());
        }
        a
    }

    /// Returns the index of `entry`, inserting it if unseen.
    pub fn intern(&mut self, entry: &str) -> u32 {
        if let Some(&i) = self.index.get(entry) {
            return i;
        }
        let i = self.entries.len() as u32;
        self.entries.push(entry.to_string());
        self.index.insert(entry.to_string(), i);
        i
    }

    pub fn lookup(&self, entry: &str) -> Option<u32> {
        self.index.get(entry).copied()
    }

    pub fn get(&self, index: u32) -> Option<&str> {
        self.entries.get(index as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in index order.
    pub fn entries(&self) -> &[String] {
        &self.entries
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}
