use crate::element::Element;
use crate::molecule::{BondOrder, MolecularGraph};

use super::rings::RingInfo;

/// Flags Kekulé-form six-membered carbon/nitrogen rings as aromatic.
///
/// Atoms already marked aromatic stay aromatic. A six-membered ring of C/N
/// atoms is perceived when each ring bond is single, double or aromatic and
/// each ring atom is either already aromatic or carries exactly one
/// in-ring double bond. Rings are revisited until nothing changes, so fused
/// Kekulé systems are picked up ring by ring. Perceived rings get aromatic
/// bonds. The operation is idempotent.
pub fn perceive_aromaticity(graph: &MolecularGraph) -> MolecularGraph {
    let rings = RingInfo::new(graph);
    perceive_with_rings(graph, &rings)
}

pub(crate) fn perceive_with_rings(graph: &MolecularGraph, rings: &RingInfo) -> MolecularGraph {
    let mut aromatic: Vec<bool> = graph.atoms().iter().map(|a| a.aromatic).collect();
    let mut orders: Vec<BondOrder> = graph.bonds().iter().map(|b| b.order).collect();
    let candidates: Vec<(&Vec<usize>, Vec<usize>)> = rings
        .rings
        .iter()
        .filter(|r| r.len() == 6)
        .filter(|r| {
            r.iter()
                .all(|&a| matches!(graph.atom(a).element, Element::C | Element::N))
        })
        .map(|r| {
            let bonds = (0..6)
                .map(|k| {
                    graph
                        .bond_between(r[k], r[(k + 1) % 6])
                        .expect("ring atoms are bonded")
                })
                .collect();
            (r, bonds)
        })
        .collect();

    let mut done = vec![false; candidates.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for (ci, (ring, bonds)) in candidates.iter().enumerate() {
            if done[ci] {
                continue;
            }
            if bonds.iter().all(|&b| orders[b] == BondOrder::Aromatic) {
                done[ci] = true;
                continue;
            }
            if bonds.iter().any(|&b| orders[b] == BondOrder::Triple) {
                continue;
            }
            let eligible = ring.iter().enumerate().all(|(k, &atom)| {
                if aromatic[atom] {
                    return true;
                }
                let before = bonds[(k + 5) % 6];
                let after = bonds[k];
                let doubles = [before, after]
                    .iter()
                    .filter(|&&b| orders[b] == BondOrder::Double)
                    .count();
                doubles == 1
            });
            if eligible {
                for &atom in ring.iter() {
                    aromatic[atom] = true;
                }
                for &b in bonds {
                    orders[b] = BondOrder::Aromatic;
                }
                done[ci] = true;
                changed = true;
            }
        }
    }
    graph.with_aromatic_updates(&aromatic, &orders)
}
