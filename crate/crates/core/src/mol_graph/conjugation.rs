use crate::molecule::{BondOrder, MolecularGraph};

/// True when bond `b` belongs to the conjugated subgraph: it is a pi bond,
/// or a single bond whose endpoints both carry a pi bond.
pub fn conjugated_bond_flags(graph: &MolecularGraph) -> Vec<bool> {
    let mut has_pi = vec![false; graph.atom_count()];
    for bond in graph.bonds() {
        if bond.order.is_pi() {
            has_pi[bond.a] = true;
            has_pi[bond.b] = true;
        }
    }
    graph
        .bonds()
        .iter()
        .map(|bond| bond.order != BondOrder::Single || (has_pi[bond.a] && has_pi[bond.b]))
        .collect()
}

/// Connected components of the subgraph induced by conjugated bonds, each
/// as a sorted atom list. Components are ordered by their smallest atom.
pub fn conjugated_components(graph: &MolecularGraph) -> Vec<Vec<usize>> {
    let conj = conjugated_bond_flags(graph);
    let n = graph.atom_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut in_conj = vec![false; n];
    for (bond, _) in graph.bonds().iter().zip(&conj).filter(|(_, &c)| c) {
        in_conj[bond.a] = true;
        in_conj[bond.b] = true;
        let (ra, rb) = (find(&mut parent, bond.a), find(&mut parent, bond.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for atom in 0..n {
        if !in_conj[atom] {
            continue;
        }
        let root = find(&mut parent, atom);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(atom);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn comps(s: &str) -> Vec<Vec<usize>> {
        conjugated_components(&parse_smiles(s).unwrap())
    }

    #[test]
    fn ethane_has_none() {
        assert!(comps("CC").is_empty());
    }

    #[test]
    fn benzene_one_component() {
        assert_eq!(comps("c1ccccc1"), vec![vec![0, 1, 2, 3, 4, 5]]);
    }

    #[test]
    fn butadiene_central_single_bond_conjugated() {
        assert_eq!(comps("C=CC=C"), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn isolated_double_bonds_separate() {
        assert_eq!(comps("C=CCC=C"), vec![vec![0, 1], vec![3, 4]]);
    }
}
