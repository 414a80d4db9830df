//! The five structural complexity descriptors and the per-molecule record.
//!
//! Every function here expects an aromaticity-perceived graph; the
//! [`DescriptorEngine`] performs perception itself and is what the pipeline
//! uses.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fg::{atom_features, FunctionalGroupLibrary, PrevalenceError, PrevalenceTable};
use crate::mol_graph::{
    conjugated_components, murcko_scaffold, perceive_with_rings, structural_counts, RingInfo, StructuralCounts,
};
use crate::molecule::{BondOrder, MolecularGraph};
use crate::tiering::Tier;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DescriptorError {
    #[error("molecule has no heavy atoms")]
    EmptyMolecule,
}

/// Descriptors and counts for one molecule. Serializes to the fixed JSON
/// field set used by the annotated corpus files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub id: u64,
    pub smiles: String,
    pub d_scaf: f64,
    pub rarity: f64,
    pub conjugation: usize,
    pub arom_sub: usize,
    pub bertz_ct: f64,
    pub n_ha: usize,
    pub n_het: usize,
    pub n_ring: usize,
    pub n_sc: usize,
    pub n_fg: usize,
    pub mw: f64,
    pub fg_names: Vec<String>,
    #[serde(default)]
    pub tier: Option<Tier>,
}

impl DescriptorRecord {
    pub fn counts(&self) -> StructuralCounts {
        StructuralCounts {
            n_ha: self.n_ha,
            n_het: self.n_het,
            n_ring: self.n_ring,
            n_sc: self.n_sc,
            mw: self.mw,
        }
    }
}

/// `1 - n_scaffold / n_ha`; 1 for molecules without rings.
pub fn scaffold_decoration(graph: &MolecularGraph) -> Result<f64, DescriptorError> {
    scaffold_decoration_with(graph, &RingInfo::new(graph))
}

fn scaffold_decoration_with(graph: &MolecularGraph, rings: &RingInfo) -> Result<f64, DescriptorError> {
    let n_ha = graph.atoms().iter().filter(|a| !a.is_hydrogen()).count();
    if n_ha == 0 {
        return Err(DescriptorError::EmptyMolecule);
    }
    let scaffold = murcko_scaffold(graph, rings);
    Ok((1.0 - scaffold.n_scaffold as f64 / n_ha as f64).clamp(0.0, 1.0))
}

/// Mean of `1 - P(f)` over the distinct bundled-library groups present; 0
/// when none are. Groups absent from `table` count as never seen.
pub fn fg_rarity(graph: &MolecularGraph, table: &PrevalenceTable) -> f64 {
    let library = bundled_library();
    let present = library.present_groups(graph);
    let prevalence: Vec<f64> = library.names().map(|n| table.get(n).unwrap_or(0.0)).collect();
    mean_rarity(&present, &prevalence)
}

fn mean_rarity(present: &[usize], prevalence: &[f64]) -> f64 {
    if present.is_empty() {
        return 0.0;
    }
    let sum: f64 = present.iter().map(|&g| 1.0 - prevalence[g]).sum();
    (sum / present.len() as f64).clamp(0.0, 1.0)
}

/// Atom count of the largest conjugated component.
pub fn conjugation_extent(graph: &MolecularGraph) -> usize {
    conjugated_components(graph).iter().map(Vec::len).max().unwrap_or(0)
}

/// Distinct substitution patterns over aromatic rings plus the number of
/// substituted aromatic-ring positions.
///
/// A ring atom is substituted when it has a heavy neighbor outside that
/// ring, so fusion atoms count. A pattern is the cyclic sequence of gaps
/// between substituted positions, reduced to its smallest rotation of
/// either traversal direction.
pub fn aromatic_substitution_complexity(graph: &MolecularGraph) -> usize {
    aromatic_substitution_with(graph, &RingInfo::new(graph))
}

fn aromatic_substitution_with(graph: &MolecularGraph, rings: &RingInfo) -> usize {
    let mut patterns: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut substituents = 0;
    for ring in &rings.rings {
        if !ring.iter().all(|&a| graph.atom(a).aromatic) {
            continue;
        }
        let positions: Vec<usize> = ring
            .iter()
            .enumerate()
            .filter(|&(_, &a)| {
                graph
                    .neighbors(a)
                    .any(|(nb, _)| !graph.atom(nb).is_hydrogen() && !ring.contains(&nb))
            })
            .map(|(i, _)| i)
            .collect();
        if positions.is_empty() {
            continue;
        }
        substituents += positions.len();
        let k = positions.len();
        let gaps: Vec<usize> = (0..k)
            .map(|i| {
                if i + 1 < k {
                    positions[i + 1] - positions[i]
                } else {
                    ring.len() - positions[i] + positions[0]
                }
            })
            .collect();
        patterns.insert(normalized_gaps(&gaps));
    }
    patterns.len() + substituents
}

/// Lexicographically smallest rotation of `gaps` or of its reversal.
pub fn normalized_gaps(gaps: &[usize]) -> Vec<usize> {
    let reversed: Vec<usize> = gaps.iter().rev().copied().collect();
    let n = gaps.len();
    let mut best: Option<Vec<usize>> = None;
    for seq in [gaps, &reversed[..]] {
        for r in 0..n {
            let cand: Vec<usize> = seq[r..].iter().chain(&seq[..r]).copied().collect();
            if best.as_ref().is_none_or(|b| cand < *b) {
                best = Some(cand);
            }
        }
    }
    best.unwrap_or_default()
}

/// Bond-environment entropy index: `0.5 * (sum n_k log2 n_k + n_e log2 n_e)`.
///
/// An environment is the unordered pair of endpoint descriptors (element,
/// aromatic flag, heavy degree) plus the bond order. Only bonds between two
/// heavy atoms are classified.
pub fn bertz_ct(graph: &MolecularGraph) -> f64 {
    let mut envs: Vec<BondEnvironment> = graph
        .bonds()
        .iter()
        .filter(|b| !graph.atom(b.a).is_hydrogen() && !graph.atom(b.b).is_hydrogen())
        .map(|b| bond_environment(graph, b.a, b.b, b.order))
        .collect();
    if envs.is_empty() {
        return 0.0;
    }
    envs.sort_unstable();
    let mut total = 0.0;
    let mut distinct = 0usize;
    let mut i = 0;
    while i < envs.len() {
        let mut j = i + 1;
        while j < envs.len() && envs[j] == envs[i] {
            j += 1;
        }
        total += xlog2x((j - i) as f64);
        distinct += 1;
        i = j;
    }
    0.5 * (total + xlog2x(distinct as f64))
}

type EndpointDescriptor = (u8, bool, usize);
type BondEnvironment = (EndpointDescriptor, EndpointDescriptor, u8);

fn bond_environment(graph: &MolecularGraph, a: usize, b: usize, order: BondOrder) -> BondEnvironment {
    let desc = |i: usize| {
        let atom = graph.atom(i);
        (atom.element.atomic_number(), atom.aromatic, graph.heavy_degree(i))
    };
    let (da, db) = (desc(a), desc(b));
    let order_code = match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    };
    (da.min(db), da.max(db), order_code)
}

fn xlog2x(x: f64) -> f64 {
    if x <= 1.0 {
        0.0
    } else {
        x * x.log2()
    }
}

fn bundled_library() -> &'static FunctionalGroupLibrary {
    static LIB: OnceLock<FunctionalGroupLibrary> = OnceLock::new();
    LIB.get_or_init(FunctionalGroupLibrary::default_library)
}

/// Full record with the bundled library. The graph is perceived here, so a
/// freshly parsed graph is fine. `id` is 0 and `tier` is unset.
pub fn descriptor_record(graph: &MolecularGraph, table: &PrevalenceTable) -> Result<DescriptorRecord, DescriptorError> {
    let library = bundled_library();
    let prevalence: Vec<f64> = library.names().map(|n| table.get(n).unwrap_or(0.0)).collect();
    compute_record(graph, library, &prevalence)
}

/// Reusable descriptor computation over a fixed library and prevalence
/// table.
#[derive(Debug, Clone)]
pub struct DescriptorEngine {
    library: FunctionalGroupLibrary,
    prevalence: Vec<f64>,
}

impl DescriptorEngine {
    /// Fails if `table` lacks any library group.
    pub fn new(library: FunctionalGroupLibrary, table: &PrevalenceTable) -> Result<DescriptorEngine, PrevalenceError> {
        table.covers(&library)?;
        let prevalence = library.names().map(|n| table.get(n).unwrap_or(0.0)).collect();
        Ok(DescriptorEngine { library, prevalence })
    }

    /// An engine whose records carry rarity 0 until
    /// [`rarity_of`](Self::rarity_of) is evaluated against a real table.
    pub fn without_prevalence(library: FunctionalGroupLibrary) -> DescriptorEngine {
        let prevalence = vec![0.0; library.len()];
        DescriptorEngine { library, prevalence }
    }

    /// Same library, new prevalence table.
    pub fn with_table(&self, table: &PrevalenceTable) -> Result<DescriptorEngine, PrevalenceError> {
        DescriptorEngine::new(self.library.clone(), table)
    }

    pub fn library(&self) -> &FunctionalGroupLibrary {
        &self.library
    }

    /// Rarity of a record's groups under this engine's table. Equals what
    /// [`compute`](Self::compute) would have produced.
    pub fn rarity_of(&self, record: &DescriptorRecord) -> f64 {
        let present: Vec<usize> = record.fg_names.iter().filter_map(|n| self.library.index_of(n)).collect();
        mean_rarity(&present, &self.prevalence)
    }

    pub fn compute(&self, graph: &MolecularGraph) -> Result<DescriptorRecord, DescriptorError> {
        compute_record(graph, &self.library, &self.prevalence)
    }
}

/// Aromaticity perception plus ring information, shared by the
/// descriptors and the prevalence pass.
pub fn prepare(graph: &MolecularGraph) -> (MolecularGraph, RingInfo) {
    let rings = RingInfo::new(graph);
    let perceived = perceive_with_rings(graph, &rings);
    (perceived, rings)
}

fn compute_record(
    graph: &MolecularGraph,
    library: &FunctionalGroupLibrary,
    prevalence: &[f64],
) -> Result<DescriptorRecord, DescriptorError> {
    let (g, rings) = prepare(graph);
    let counts = structural_counts(&g);
    let d_scaf = scaffold_decoration_with(&g, &rings)?;
    let features = atom_features(&g);
    let present = library.present_groups_with(&g, &features);
    Ok(DescriptorRecord {
        id: 0,
        smiles: graph.source().to_string(),
        d_scaf,
        rarity: mean_rarity(&present, prevalence),
        conjugation: conjugation_extent(&g),
        arom_sub: aromatic_substitution_with(&g, &rings),
        bertz_ct: bertz_ct(&g),
        n_ha: counts.n_ha,
        n_het: counts.n_het,
        n_ring: counts.n_ring,
        n_sc: counts.n_sc,
        n_fg: present.len(),
        mw: counts.mw,
        fg_names: present.iter().map(|&i| library.patterns()[i].name.clone()).collect(),
        tier: None,
    })
}
