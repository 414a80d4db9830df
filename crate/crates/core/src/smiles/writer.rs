use std::fmt::Write as _;

use crate::molecule::{Atom, BondOrder, BondStereo, Chirality, MolecularGraph};

/// Writes a SMILES string for `graph`.
///
/// The output is not canonical; it re-parses to a graph isomorphic to the
/// input.
pub fn write_smiles(graph: &MolecularGraph) -> String {
    write_smiles_with_order(graph).0
}

/// Like [`write_smiles`], also returning the output atom order: atom `k` of
/// the re-parsed graph is atom `order[k]` of `graph`.
pub fn write_smiles_with_order(graph: &MolecularGraph) -> (String, Vec<usize>) {
    let n = graph.atom_count();
    let mut visited = vec![false; n];
    let mut out = String::with_capacity(n * 2);
    let mut order = Vec::with_capacity(n);

    // DFS tree: children per atom, ring-closure bonds per atom.
    let mut children: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    let mut ring_bonds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut is_tree_bond = vec![false; graph.bond_count()];

    for start in 0..n {
        if visited[start] {
            continue;
        }
        if !out.is_empty() {
            out.push('.');
        }
        let dfs_order = build_tree(graph, start, &mut visited, &mut children, &mut is_tree_bond);
        for &u in &dfs_order {
            for (v, b) in graph.neighbors(u) {
                if !is_tree_bond[b] && u < v {
                    ring_bonds[u].push(b);
                    ring_bonds[v].push(b);
                }
            }
        }
        emit_component(graph, start, &children, &ring_bonds, &mut out, &mut order);
    }
    (out, order)
}

fn build_tree(
    graph: &MolecularGraph,
    start: usize,
    visited: &mut [bool],
    children: &mut [Vec<(usize, usize)>],
    is_tree_bond: &mut [bool],
) -> Vec<usize> {
    let mut dfs_order = Vec::new();
    let mut stack: Vec<(usize, Option<(usize, usize)>)> = vec![(start, None)];
    while let Some((u, via)) = stack.pop() {
        if visited[u] {
            continue;
        }
        visited[u] = true;
        dfs_order.push(u);
        if let Some((parent, bond)) = via {
            children[parent].push((u, bond));
            is_tree_bond[bond] = true;
        }
        let mut nbrs: Vec<(usize, usize)> = graph.neighbors(u).filter(|&(v, _)| !visited[v]).collect();
        nbrs.reverse();
        for (v, b) in nbrs {
            stack.push((v, Some((u, b))));
        }
    }
    dfs_order
}

enum Task {
    Atom { atom: usize, parent: Option<(usize, usize)> },
    Text(&'static str),
}

fn emit_component(
    graph: &MolecularGraph,
    start: usize,
    children: &[Vec<(usize, usize)>],
    ring_bonds: &[Vec<usize>],
    out: &mut String,
    order: &mut Vec<usize>,
) {
    // label 0 is never used
    let mut labels_in_use: Vec<bool> = vec![true];
    let mut bond_label: std::collections::HashMap<usize, usize> = Default::default();
    let mut emitted = vec![false; graph.atom_count()];

    let mut tasks = vec![Task::Atom { atom: start, parent: None }];
    while let Some(task) = tasks.pop() {
        let (u, parent) = match task {
            Task::Text(s) => {
                out.push_str(s);
                continue;
            }
            Task::Atom { atom, parent } => (atom, parent),
        };
        if let Some((p, b)) = parent {
            push_bond_symbol(graph, b, p, out);
        }
        write_atom(graph.atom(u), out);
        emitted[u] = true;
        order.push(u);

        let mut freed = Vec::new();
        for &b in &ring_bonds[u] {
            let other = graph.bond(b).other(u);
            if emitted[other] && other != u {
                if let Some(label) = bond_label.remove(&b) {
                    write_label(label, out);
                    freed.push(label);
                }
            }
        }
        for &b in &ring_bonds[u] {
            let other = graph.bond(b).other(u);
            if !emitted[other] {
                let label = match labels_in_use.iter().position(|used| !used) {
                    Some(i) => i,
                    None => {
                        labels_in_use.push(false);
                        labels_in_use.len() - 1
                    }
                };
                labels_in_use[label] = true;
                bond_label.insert(b, label);
                push_bond_symbol(graph, b, u, out);
                write_label(label, out);
            }
        }
        for label in freed {
            labels_in_use[label] = false;
        }

        let kids = &children[u];
        // Push in reverse so that the first child is emitted first; all but
        // the last child are wrapped in parentheses.
        for (i, &(child, bond)) in kids.iter().enumerate().rev() {
            let last = i + 1 == kids.len();
            if !last {
                tasks.push(Task::Text(")"));
            }
            tasks.push(Task::Atom {
                atom: child,
                parent: Some((u, bond)),
            });
            if !last {
                tasks.push(Task::Text("("));
            }
        }
    }
}

fn write_label(label: usize, out: &mut String) {
    if label < 10 {
        out.push((b'0' + label as u8) as char);
    } else {
        let _ = write!(out, "%{label:02}");
    }
}

fn push_bond_symbol(graph: &MolecularGraph, bond_idx: usize, from: usize, out: &mut String) {
    let bond = graph.bond(bond_idx);
    let stereo = if bond.a == from {
        bond.stereo
    } else {
        bond.stereo.flipped()
    };
    let both_aromatic = graph.atom(bond.a).aromatic && graph.atom(bond.b).aromatic;
    let symbol = match (bond.order, stereo) {
        (BondOrder::Single, BondStereo::Up) => "/",
        (BondOrder::Single, BondStereo::Down) => "\\",
        (BondOrder::Single, BondStereo::None) if both_aromatic => "-",
        (BondOrder::Single, BondStereo::None) => "",
        (BondOrder::Double, _) => "=",
        (BondOrder::Triple, _) => "#",
        (BondOrder::Aromatic, _) if both_aromatic => "",
        (BondOrder::Aromatic, _) => ":",
    };
    out.push_str(symbol);
}

fn write_atom(atom: &Atom, out: &mut String) {
    let symbol = atom.element.symbol();
    let Some(h) = atom.explicit_h else {
        push_symbol(symbol, atom.aromatic, out);
        return;
    };
    out.push('[');
    if let Some(iso) = atom.isotope {
        let _ = write!(out, "{iso}");
    }
    push_symbol(symbol, atom.aromatic, out);
    match atom.chirality {
        Chirality::None => {}
        Chirality::At => out.push('@'),
        Chirality::AtAt => out.push_str("@@"),
    }
    match h {
        0 => {}
        1 => out.push('H'),
        _ => {
            let _ = write!(out, "H{h}");
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    out.push(']');
}

fn push_symbol(symbol: &str, aromatic: bool, out: &mut String) {
    if aromatic {
        out.extend(symbol.chars().map(|c| c.to_ascii_lowercase()));
    } else {
        out.push_str(symbol);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    fn round_trip(s: &str) -> String {
        let g = parse_smiles(s).unwrap();
        let (text, order) = write_smiles_with_order(&g);
        let back = parse_smiles(&text).unwrap_or_else(|e| panic!("{s} -> {text}: {e}"));
        assert_eq!(back.atom_count(), g.atom_count());
        assert_eq!(back.bond_count(), g.bond_count());
        for (k, &old) in order.iter().enumerate() {
            assert_eq!(back.atom(k), g.atom(old), "{s} -> {text}");
        }
        for b in g.bonds() {
            let na = order.iter().position(|&o| o == b.a).unwrap();
            let nb = order.iter().position(|&o| o == b.b).unwrap();
            let nbond = back.bond(back.bond_between(na, nb).expect("edge preserved"));
            assert_eq!(nbond.order, b.order, "{s} -> {text}");
        }
        text
    }

    #[test]
    fn simple_outputs() {
        assert_eq!(round_trip("C"), "C");
        assert_eq!(round_trip("CC(=O)O"), "CC(=O)O");
        assert_eq!(round_trip("c1ccccc1"), "c1ccccc1");
    }

    #[test]
    fn rings_branches_and_brackets() {
        for s in [
            "c1ccc2ccccc2c1",
            "C1CC2CC1CC2",
            "c1ccccc1-c1ccccc1",
            "[13CH3][C@@H](O)[NH3+].[Cl-]",
            "C%10CC%10",
            "C12C3C4C1C5C2C3C45",
            "O=C1C=CC(=O)C=C1",
            "[O-][N+](=O)c1ccccc1",
            "F/C=C/F",
            "CC(C)(C)C(C)(C)C",
        ] {
            round_trip(s);
        }
    }

    #[test]
    fn many_rings_use_percent_labels() {
        // eleven simultaneously open rings
        let s = "C1C2C3C4C5C6C7C8C9C%10C%11CCCCCCCCCCCC%11C%10C9C8C7C6C5C4C3C2C1";
        let text = round_trip(s);
        assert!(!text.is_empty());
    }
}
