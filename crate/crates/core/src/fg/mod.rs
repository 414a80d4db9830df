//! Functional-group templates, matching and corpus prevalence.
//!
//! The default library ships as a tab-separated data file with one
//! `name<TAB>priority<TAB>template` row per group; any file in the same
//! format can replace it.

mod pattern;
mod prevalence;

pub use pattern::{atom_features, AtomConstraint, AtomFeatures, BondMask, FunctionalGroupPattern, PatternError};
pub use prevalence::{corpus_prevalence, PrevalenceCounter, PrevalenceError, PrevalenceTable};

use std::collections::HashSet;

use thiserror::Error;

use crate::molecule::MolecularGraph;

const DEFAULT_LIBRARY: &str = include_str!("../../data/functional_groups.tsv");

/// Number of groups in the bundled library.
pub const DEFAULT_GROUP_COUNT: usize = 31;

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("line {line}: expected name, priority and template separated by tabs")]
    Columns { line: usize },
    #[error("line {line}: priority {value:?} is not an integer")]
    Priority { line: usize, value: String },
    #[error("line {line}: {source}")]
    Pattern { line: usize, source: PatternError },
    #[error("line {line}: duplicate group name {name:?}")]
    DuplicateName { line: usize, name: String },
    #[error("library contains no groups")]
    Empty,
}

/// One embedding of a library group.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupMatch {
    /// Index into [`FunctionalGroupLibrary::patterns`].
    pub group: usize,
    /// Molecule atoms in template-atom order.
    pub atoms: Vec<usize>,
}

/// An immutable, ordered set of named patterns.
#[derive(Debug, Clone)]
pub struct FunctionalGroupLibrary {
    patterns: Vec<FunctionalGroupPattern>,
}

impl FunctionalGroupLibrary {
    /// The bundled 31-group library.
    pub fn default_library() -> FunctionalGroupLibrary {
        Self::from_tsv(DEFAULT_LIBRARY).expect("bundled library is valid")
    }

    /// Parses a library file. Blank lines and lines starting with `#` are
    /// skipped.
    pub fn from_tsv(text: &str) -> Result<FunctionalGroupLibrary, LibraryError> {
        let mut patterns = Vec::new();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            let [name, priority, template] = cols[..] else {
                return Err(LibraryError::Columns { line });
            };
            let priority: i32 = priority.parse().map_err(|_| LibraryError::Priority {
                line,
                value: priority.to_string(),
            })?;
            let pattern = FunctionalGroupPattern::parse(name, priority, template)
                .map_err(|source| LibraryError::Pattern { line, source })?;
            if !seen.insert(name.to_string()) {
                return Err(LibraryError::DuplicateName {
                    line,
                    name: name.to_string(),
                });
            }
            patterns.push(pattern);
        }
        if patterns.is_empty() {
            return Err(LibraryError::Empty);
        }
        Ok(FunctionalGroupLibrary { patterns })
    }

    pub fn patterns(&self) -> &[FunctionalGroupPattern] {
        &self.patterns
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.patterns.iter().map(|p| p.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.patterns.iter().position(|p| p.name == name)
    }

    /// Every embedding of every pattern, sorted by group then atom tuple.
    /// Groups match independently of each other: an ester also reports the
    /// umbrella carbonyl.
    pub fn match_groups(&self, graph: &MolecularGraph) -> Vec<GroupMatch> {
        let features = atom_features(graph);
        let mut out = Vec::new();
        for (group, p) in self.patterns.iter().enumerate() {
            let mut embeddings = p.embeddings(graph, &features);
            embeddings.sort();
            out.extend(embeddings.into_iter().map(|atoms| GroupMatch { group, atoms }));
        }
        out
    }

    /// Indices of the groups present at least once, ascending.
    pub fn present_groups(&self, graph: &MolecularGraph) -> Vec<usize> {
        let features = atom_features(graph);
        self.present_groups_with(graph, &features)
    }

    pub fn present_groups_with(&self, graph: &MolecularGraph, features: &[AtomFeatures]) -> Vec<usize> {
        (0..self.patterns.len())
            .filter(|&g| self.patterns[g].matches(graph, features))
            .collect()
    }

    /// Distinct names of the groups present, in library order.
    pub fn group_names(&self, graph: &MolecularGraph) -> Vec<String> {
        self.present_groups(graph)
            .into_iter()
            .map(|g| self.patterns[g].name.clone())
            .collect()
    }
}

impl Default for FunctionalGroupLibrary {
    fn default() -> Self {
        Self::default_library()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mol_graph::perceive_aromaticity;
    use crate::smiles::parse_smiles;

    fn names(s: &str) -> Vec<String> {
        let g = perceive_aromaticity(&parse_smiles(s).unwrap());
        let mut v = FunctionalGroupLibrary::default_library().group_names(&g);
        v.sort();
        v
    }

    #[test]
    fn bundled_library_has_31_unique_groups() {
        let lib = FunctionalGroupLibrary::default_library();
        assert_eq!(lib.len(), DEFAULT_GROUP_COUNT);
        assert!(lib.patterns().iter().all(|p| (1..=6).contains(&p.atom_count())));
        assert!(lib.index_of("carbonyl").is_some());
        assert!(lib.index_of("iodide").is_some());
    }

    #[test]
    fn hand_matches() {
        assert!(names("CCCCCC").is_empty());
        assert_eq!(names("CC(=O)O"), ["carbonyl", "carboxylic_acid", "hydroxyl"]);
        assert_eq!(names("Ic1ccccc1"), ["iodide"]);
        assert_eq!(names("CCOC(C)=O"), ["carbonyl", "ester", "ether"]);
        assert_eq!(names("Oc1ccccc1"), ["hydroxyl", "phenol"]);
        assert_eq!(names("CC(C)=O"), ["carbonyl", "ketone"]);
        assert_eq!(names("CC#N"), ["nitrile"]);
        assert_eq!(names("[O-][N+](=O)c1ccccc1"), ["nitro"]);
        // the template vocabulary has no hybridization test, so amide NH2 also
        // reads as a primary amine
        assert_eq!(names("NC(N)=O"), ["amide", "carbonyl", "primary_amine", "urea"]);
        assert_eq!(names("CS(C)(=O)=O"), ["sulfone"]);
        assert_eq!(names("c1ccncc1"), Vec::<String>::new());
    }

    #[test]
    fn malformed_library_lines() {
        assert!(matches!(
            FunctionalGroupLibrary::from_tsv("a\t1"),
            Err(LibraryError::Columns { line: 1 })
        ));
        assert!(matches!(
            FunctionalGroupLibrary::from_tsv("# c\na\tx\tC"),
            Err(LibraryError::Priority { line: 2, .. })
        ));
        assert!(matches!(
            FunctionalGroupLibrary::from_tsv("a\t1\tC\na\t2\tO"),
            Err(LibraryError::DuplicateName { line: 2, .. })
        ));
        assert!(matches!(FunctionalGroupLibrary::from_tsv("\n"), Err(LibraryError::Empty)));
    }
}
