//! Labeled code-gadget corpora: the on-disk record format and train/test splitting.
//!
//! A corpus file is a sequence of records, each laid out as
//!
//! ```text
//! <id> <origin text>
//! <code line>
//! ...
//! <label: 0 or 1>
//! --------------------------------
//! ```
//!
//! The separator is exactly 32 `-` characters and terminates every record,
//! including the last one. An empty (or whitespace-only) file is an empty corpus.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SEPARATOR: &str = "--------------------------------";

/// Ground-truth class of a gadget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Safe = 0,
    Vulnerable = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn is_vulnerable(self) -> bool {
        self == Label::Vulnerable
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Label::Safe),
            1 => Ok(Label::Vulnerable),
            other => Err(format!("label not in {{0,1}}: {other}")),
        }
    }
}

impl From<bool> for Label {
    fn from(vulnerable: bool) -> Self {
        if vulnerable {
            Label::Vulnerable
        } else {
            Label::Safe
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeGadget {
    pub id: u64,
    pub origin: String,
    pub lines: Vec<String>,
    pub label: Label,
}

impl CodeGadget {
    pub fn new(id: u64, origin: impl Into<String>, lines: Vec<String>, label: Label) -> Self {
        CodeGadget {
            id,
            origin: origin.into(),
            lines,
            label,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    pub gadgets: Vec<CodeGadget>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, gadgets: Vec<CodeGadget>) -> Self {
        Corpus {
            name: name.into(),
            gadgets,
        }
    }

    pub fn len(&self) -> usize {
        self.gadgets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gadgets.is_empty()
    }

    pub fn get(&self, id: u64) -> Option<&CodeGadget> {
        self.gadgets.iter().find(|g| g.id == id)
    }

    pub fn ids(&self) -> Vec<u64> {
        self.gadgets.iter().map(|g| g.id).collect()
    }

    pub fn count_label(&self, label: Label) -> usize {
        self.gadgets.iter().filter(|g| g.label == label).count()
    }

    /// Check the corpus invariants: non-empty gadgets, no embedded line feeds, unique ids.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for g in &self.gadgets {
            if g.lines.is_empty() {
                return Err(Error::config(format!("gadget {} has no lines", g.id)));
            }
            if g.lines.iter().any(|l| l.contains('\n')) {
                return Err(Error::config(format!(
                    "gadget {} has a line containing a line feed",
                    g.id
                )));
            }
            if !seen.insert(g.id) {
                return Err(Error::config(format!("duplicate gadget id {}", g.id)));
            }
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let mut corpus = parse_corpus(&bytes)?;
        corpus.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(corpus)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = write_corpus(self)?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }
}

/// Parse the record format. Errors carry the 1-based line number of the offending line.
pub fn parse_corpus(bytes: &[u8]) -> Result<Corpus> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(line, "input is not valid UTF-8")
    })?;
    if text.trim().is_empty() {
        return Ok(Corpus::default());
    }

    let mut gadgets = Vec::new();
    let mut seen = HashSet::new();
    // (line number, text) of the record currently being accumulated
    let mut record: Vec<(usize, &str)> = Vec::new();

    for (idx, line) in text.split_terminator('\n').enumerate() {
        let lineno = idx + 1;
        if line != SEPARATOR {
            record.push((lineno, line));
            continue;
        }
        let gadget = parse_record(&record, lineno)?;
        if !seen.insert(gadget.id) {
            return Err(Error::parse(
                record[0].0,
                format!("duplicate id {}", gadget.id),
            ));
        }
        gadgets.push(gadget);
        record.clear();
    }

    if let Some(&(lineno, _)) = record.iter().find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::parse(
            lineno,
            "record is not terminated by a separator line",
        ));
    }
    Ok(Corpus::new("", gadgets))
}

fn parse_record(record: &[(usize, &str)], separator_line: usize) -> Result<CodeGadget> {
    let Some(&(header_line, header)) = record.first() else {
        return Err(Error::parse(separator_line, "empty record (missing header)"));
    };
    let (id_text, origin) = match header.split_once(' ') {
        Some((id, origin)) => (id, origin),
        None => (header, ""),
    };
    let id: u64 = id_text.parse().map_err(|_| {
        Error::parse(
            header_line,
            format!("malformed header {header:?}: expected `<id> <origin>`"),
        )
    })?;

    if record.len() < 2 {
        return Err(Error::parse(separator_line, "missing label line"));
    }
    let (label_line, label_text) = record[record.len() - 1];
    let label = match label_text {
        "0" => Label::Safe,
        "1" => Label::Vulnerable,
        other => {
            return Err(Error::parse(
                label_line,
                format!("label not in {{0,1}}: {other:?}"),
            ))
        }
    };
    let lines: Vec<String> = record[1..record.len() - 1]
        .iter()
        .map(|(_, l)| l.to_string())
        .collect();
    if lines.is_empty() {
        return Err(Error::parse(label_line, "record has no code lines"));
    }
    Ok(CodeGadget {
        id,
        origin: origin.to_string(),
        lines,
        label,
    })
}

/// Serialize a corpus. Lines equal to the separator cannot be represented and are rejected.
pub fn write_corpus(corpus: &Corpus) -> Result<Vec<u8>> {
    let mut out = String::new();
    for g in &corpus.gadgets {
        if g.origin.contains('\n') {
            return Err(Error::Write(format!("gadget {}: origin contains a line feed", g.id)));
        }
        if g.lines.is_empty() {
            return Err(Error::Write(format!("gadget {} has no lines", g.id)));
        }
        for line in &g.lines {
            if line.contains('\n') {
                return Err(Error::Write(format!("gadget {}: line contains a line feed", g.id)));
            }
            if line.contains(SEPARATOR) {
                return Err(Error::Write(format!(
                    "gadget {}: line {line:?} collides with the record separator",
                    g.id
                )));
            }
        }
        if g.origin.is_empty() {
            out.push_str(&g.id.to_string());
        } else {
            out.push_str(&format!("{} {}", g.id, g.origin));
        }
        out.push('\n');
        for line in &g.lines {
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(&g.label.to_string());
        out.push('\n');
        out.push_str(SEPARATOR);
        out.push('\n');
    }
    Ok(out.into_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_fraction: 0.8,
            seed: 0,
            stratified: true,
        }
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Deterministically partition a corpus into train and test parts.
///
/// `|train| = round(train_fraction · n)` (half-up), clamped so both parts are non-empty.
/// With stratification each class contributes either the floor or the ceiling of its
/// proportional share; leftover slots go to the classes with the larger remainders.
/// Both parts keep the original corpus order.
pub fn split_dataset(corpus: &Corpus, cfg: &SplitConfig) -> Result<(Corpus, Corpus)> {
    let f = cfg.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::config(format!(
            "train_fraction must lie strictly between 0 and 1, got {f}"
        )));
    }
    let n = corpus.len();
    if n < 2 {
        return Err(Error::config(format!(
            "cannot split a corpus of {n} gadget(s)"
        )));
    }
    let target = round_half_up(f * n as f64).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut in_train = vec![false; n];
    if cfg.stratified {
        let classes: Vec<Vec<usize>> = [Label::Safe, Label::Vulnerable]
            .iter()
            .map(|&l| {
                (0..n)
                    .filter(|&i| corpus.gadgets[i].label == l)
                    .collect::<Vec<_>>()
            })
            .collect();
        if classes.iter().any(|c| c.is_empty()) {
            return Err(Error::config(
                "stratified split needs at least one gadget of each class",
            ));
        }
        let shares: Vec<f64> = classes.iter().map(|c| f * c.len() as f64).collect();
        let mut quota: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
        let mut remaining = target.saturating_sub(quota.iter().sum());
        let mut order: Vec<usize> = (0..classes.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
        });
        for &c in order.iter().cycle().take(2 * order.len()) {
            if remaining == 0 {
                break;
            }
            if quota[c] < classes[c].len() {
                quota[c] += 1;
                remaining -= 1;
            }
        }
        for (members, &q) in classes.iter().zip(&quota) {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            for &i in &members[..q] {
                in_train[i] = true;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &i in &order[..target] {
            in_train[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (g, &t) in corpus.gadgets.iter().zip(&in_train) {
        if t {
            train.push(g.clone());
        } else {
            test.push(g.clone());
        }
    }
    Ok((
        Corpus::new(format!("{}-train", corpus.name), train),
        Corpus::new(format!("{}-test", corpus.name), test),
    ))
}
