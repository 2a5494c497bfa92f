use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub text: String,
    pub count: u64,
}

/// Token inventory. Index order is descending count, ties broken by text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
    total_count: u64,
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    entries: Vec<VocabEntry>,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        Vocabulary::from_entries(r.entries)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr { entries: v.entries }
    }
}

impl Vocabulary {
    fn from_entries(entries: Vec<VocabEntry>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.text.clone(), i))
            .collect();
        let total_count = entries.iter().map(|e| e.count).sum();
        Vocabulary {
            entries,
            index,
            total_count,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn count_of(&self, token: &str) -> Option<u64> {
        self.index_of(token).map(|i| self.entries[i].count)
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    /// Map a token sequence to indices, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens
            .iter()
            .filter_map(|t| self.index_of(t.as_ref()))
            .collect()
    }
}

/// Count tokens and keep those seen at least `min_count` times.
pub fn build_vocabulary<S: AsRef<str>>(corpus: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::config("min_count must be at least 1"));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in corpus {
        for tok in sentence {
            *counts.entry(tok.as_ref()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<VocabEntry> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .map(|(t, c)| VocabEntry {
            text: t.to_string(),
            count: c,
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::Model(format!(
            "vocabulary is empty (no token occurs at least {min_count} time(s))"
        )));
    }
    entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.text.cmp(&b.text)));
    Ok(Vocabulary::from_entries(entries))
}
