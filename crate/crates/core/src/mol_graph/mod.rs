//! Graph algorithms over [`MolecularGraph`]: ring perception, aromaticity,
//! Murcko scaffolds, conjugated systems and scalar structural counts.

mod aromaticity;
mod conjugation;
mod rings;
mod scaffold;

pub use aromaticity::perceive_aromaticity;
pub(crate) use aromaticity::perceive_with_rings;
pub use conjugation::{conjugated_bond_flags, conjugated_components};
pub use rings::{ring_bonds, RingInfo, MAX_RING_SIZE};
pub use scaffold::{murcko_scaffold, murcko_scaffold_with_visit_order, ScaffoldResult};

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::molecule::{BondOrder, BondStereo, Chirality, MolecularGraph};

/// Scalar counts read by the tier rules and the corpus statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralCounts {
    /// Heavy (non-hydrogen) atoms.
    pub n_ha: usize,
    /// Heavy atoms other than carbon.
    pub n_het: usize,
    /// Cyclomatic number: bonds - atoms + connected components.
    pub n_ring: usize,
    /// Chirality-marked atoms plus double bonds with directional marks on
    /// both sides.
    pub n_sc: usize,
    /// Average molecular weight in Da, hydrogens included.
    pub mw: f64,
}

pub fn structural_counts(graph: &MolecularGraph) -> StructuralCounts {
    let mut n_ha = 0;
    let mut n_het = 0;
    let mut n_sc = 0;
    let mut mw = 0.0;
    for (i, atom) in graph.atoms().iter().enumerate() {
        mw += atom.element.mass();
        let own_h = atom
            .explicit_h
            .unwrap_or_else(|| graph.implicit_hydrogens(i));
        mw += own_h as f64 * Element::H.mass();
        if atom.is_hydrogen() {
            continue;
        }
        n_ha += 1;
        if atom.element != Element::C {
            n_het += 1;
        }
        if atom.chirality != Chirality::None {
            n_sc += 1;
        }
    }
    for (b, bond) in graph.bonds().iter().enumerate() {
        if bond.order != BondOrder::Double {
            continue;
        }
        let marked = |atom: usize| {
            graph
                .neighbors(atom)
                .any(|(_, nb)| nb != b && graph.bond(nb).stereo != BondStereo::None)
        };
        if marked(bond.a) && marked(bond.b) {
            n_sc += 1;
        }
    }
    let n_ring = graph.bond_count() + graph.component_count() - graph.atom_count();
    StructuralCounts {
        n_ha,
        n_het,
        n_ring,
        n_sc,
        mw,
    }
}
