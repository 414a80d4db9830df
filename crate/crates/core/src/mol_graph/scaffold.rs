use crate::molecule::{BondOrder, MolecularGraph};

use super::rings::RingInfo;

/// Heavy atoms of the Murcko scaffold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaffoldResult {
    /// Sorted atom indices.
    pub scaffold_atoms: Vec<usize>,
    pub n_scaffold: usize,
    pub is_empty: bool,
}

/// Murcko scaffold: ring systems, the linkers between them and atoms
/// double-bonded to either.
///
/// Non-ring heavy atoms of remaining heavy degree <= 1 are deleted until a
/// fixpoint; exocyclic atoms double-bonded to a surviving atom are then
/// restored.
pub fn murcko_scaffold(graph: &MolecularGraph, rings: &RingInfo) -> ScaffoldResult {
    let order: Vec<usize> = (0..graph.atom_count()).collect();
    murcko_scaffold_with_visit_order(graph, rings, &order)
}

/// [`murcko_scaffold`] with an explicit initial visit order for the
/// pruning queue. The result does not depend on the order.
pub fn murcko_scaffold_with_visit_order(
    graph: &MolecularGraph,
    rings: &RingInfo,
    visit_order: &[usize],
) -> ScaffoldResult {
    let n = graph.atom_count();
    let heavy: Vec<bool> = graph.atoms().iter().map(|a| !a.is_hydrogen()).collect();
    let mut present = heavy.clone();
    let mut degree: Vec<usize> = (0..n).map(|i| graph.heavy_degree(i)).collect();

    let prunable = |i: usize, present: &[bool], degree: &[usize]| {
        present[i] && !rings.ring_atom[i] && degree[i] <= 1
    };
    let mut queue: Vec<usize> = visit_order
        .iter()
        .copied()
        .filter(|&i| prunable(i, &present, &degree))
        .collect();
    queue.reverse();
    while let Some(u) = queue.pop() {
        if !prunable(u, &present, &degree) {
            continue;
        }
        present[u] = false;
        for (v, _) in graph.neighbors(u) {
            if present[v] {
                degree[v] -= 1;
                if prunable(v, &present, &degree) {
                    queue.push(v);
                }
            }
        }
    }

    let core = present.clone();
    for u in 0..n {
        if core[u] || !heavy[u] {
            continue;
        }
        let attached = graph
            .neighbors(u)
            .any(|(v, b)| core[v] && graph.bond(b).order == BondOrder::Double);
        if attached {
            present[u] = true;
        }
    }

    let scaffold_atoms: Vec<usize> = (0..n).filter(|&i| present[i]).collect();
    let n_scaffold = scaffold_atoms.len();
    ScaffoldResult {
        scaffold_atoms,
        n_scaffold,
        is_empty: n_scaffold == 0,
    }
}
