use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use thiserror::Error;

use super::FunctionalGroupLibrary;
use crate::molecule::MolecularGraph;

#[derive(Debug, Error)]
pub enum PrevalenceError {
    #[error("corpus contains no molecules")]
    EmptyCorpus,
    #[error("prevalence table line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("prevalence table lacks group {0:?}")]
    MissingGroup(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fraction of corpus molecules containing each group.
#[derive(Debug, Clone, PartialEq)]
pub struct PrevalenceTable {
    values: BTreeMap<String, f64>,
    corpus_size: u64,
}

impl PrevalenceTable {
    /// Builds a table from explicit values, clamped to [0, 1].
    pub fn from_values<I, S>(values: I, corpus_size: u64) -> PrevalenceTable
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        PrevalenceTable {
            values: values.into_iter().map(|(k, v)| (k.into(), v.clamp(0.0, 1.0))).collect(),
            corpus_size,
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks that every library group has an entry.
    pub fn covers(&self, library: &FunctionalGroupLibrary) -> Result<(), PrevalenceError> {
        match library.names().find(|n| !self.values.contains_key(*n)) {
            Some(missing) => Err(PrevalenceError::MissingGroup(missing.to_string())),
            None => Ok(()),
        }
    }

    /// The `k` most prevalent names, ties broken by ascending name.
    pub fn top_k(&self, k: usize) -> Vec<String> {
        let mut entries: Vec<(&String, f64)> = self.values.iter().map(|(k, v)| (k, *v)).collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries.into_iter().take(k).map(|(name, _)| name.clone()).collect()
    }

    /// Writes `group<TAB>prevalence` rows after a `# corpus_size` comment
    /// and a header row.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# corpus_size\t{}", self.corpus_size)?;
        writeln!(out, "group\tprevalence")?;
        for (name, p) in &self.values {
            writeln!(out, "{name}\t{p}")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write_tsv`](Self::write_tsv). The
    /// comment and header rows are optional.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<PrevalenceTable, PrevalenceError> {
        let mut values = BTreeMap::new();
        let mut corpus_size = 0;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(n) = rest.trim().strip_prefix("corpus_size") {
                    corpus_size = n.trim().parse().map_err(|_| PrevalenceError::Format {
                        line: lineno,
                        reason: "bad corpus_size".into(),
                    })?;
                }
                continue;
            }
            let Some((name, value)) = trimmed.split_once('\t') else {
                return Err(PrevalenceError::Format {
                    line: lineno,
                    reason: "expected two tab-separated columns".into(),
                });
            };
            if name == "group" && value.trim() == "prevalence" {
                continue;
            }
            let p: f64 = value.trim().parse().map_err(|_| PrevalenceError::Format {
                line: lineno,
                reason: format!("bad prevalence {value:?}"),
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(PrevalenceError::Format {
                    line: lineno,
                    reason: format!("prevalence {p} outside [0, 1]"),
                });
            }
            values.insert(name.trim().to_string(), p);
        }
        Ok(PrevalenceTable { values, corpus_size })
    }
}

/// Mergeable per-group molecule counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrevalenceCounter {
    counts: Vec<u64>,
    molecules: u64,
}

impl PrevalenceCounter {
    pub fn new(groups: usize) -> PrevalenceCounter {
        PrevalenceCounter {
            counts: vec![0; groups],
            molecules: 0,
        }
    }

    /// Records one molecule given the distinct group indices it contains.
    pub fn add(&mut self, present: &[usize]) {
        self.molecules += 1;
        for &g in present {
            self.counts[g] += 1;
        }
    }

    pub fn merge(&mut self, other: &PrevalenceCounter) {
        self.molecules += other.molecules;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn molecules(&self) -> u64 {
        self.molecules
    }

    pub fn finish(&self, library: &FunctionalGroupLibrary) -> Result<PrevalenceTable, PrevalenceError> {
        if self.molecules == 0 {
            return Err(PrevalenceError::EmptyCorpus);
        }
        let n = self.molecules as f64;
        Ok(PrevalenceTable {
            values: library
                .names()
                .zip(&self.counts)
                .map(|(name, &c)| (name.to_string(), c as f64 / n))
                .collect(),
            corpus_size: self.molecules,
        })
    }
}

/// P(f) over a corpus of aromaticity-perceived graphs.
pub fn corpus_prevalence<'a, I>(library: &FunctionalGroupLibrary, corpus: I) -> Result<PrevalenceTable, PrevalenceError>
where
    I: IntoIterator<Item = &'a MolecularGraph>,
{
    let mut counter = PrevalenceCounter::new(library.len());
    for graph in corpus {
        counter.add(&library.present_groups(graph));
    }
    counter.finish(library)
}
