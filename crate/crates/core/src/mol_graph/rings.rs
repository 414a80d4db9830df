//! Ring-bond detection and small-ring enumeration.

use std::collections::{BTreeSet, VecDeque};

use crate::molecule::MolecularGraph;

/// Largest ring size enumerated by [`RingInfo`].
pub const MAX_RING_SIZE: usize = 8;

const MAX_PATHS_PER_BOND: usize = 64;

/// Ring membership and the enumerated small rings of a molecule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingInfo {
    /// `true` for bonds that lie on some cycle (non-bridges).
    pub ring_bond: Vec<bool>,
    /// `true` for atoms incident to a ring bond.
    pub ring_atom: Vec<bool>,
    /// Rings of size <= [`MAX_RING_SIZE`], each as a cyclic atom sequence
    /// starting at its smallest atom index. A ring is listed when it is a
    /// shortest cycle through at least one of its bonds, which makes the set
    /// independent of atom numbering.
    pub rings: Vec<Vec<usize>>,
}

impl RingInfo {
    pub fn new(graph: &MolecularGraph) -> RingInfo {
        let ring_bond = ring_bonds(graph);
        let mut ring_atom = vec![false; graph.atom_count()];
        for (b, &flag) in ring_bond.iter().enumerate() {
            if flag {
                let bond = graph.bond(b);
                ring_atom[bond.a] = true;
                ring_atom[bond.b] = true;
            }
        }
        let rings = small_rings(graph, &ring_bond, MAX_RING_SIZE);
        RingInfo {
            ring_bond,
            ring_atom,
            rings,
        }
    }
}

/// Marks every bond that is not a bridge.
pub fn ring_bonds(graph: &MolecularGraph) -> Vec<bool> {
    let n = graph.atom_count();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; graph.bond_count()];
    let mut timer = 0;
    // (atom, bond used to enter it, next neighbor position)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();

    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (u, via, ref mut pos)) = stack.last_mut() {
            if let Some((v, b)) = graph.neighbors(u).nth(*pos) {
                *pos += 1;
                if b == via {
                    continue;
                }
                if disc[v] == usize::MAX {
                    disc[v] = timer;
                    low[v] = timer;
                    timer += 1;
                    stack.push((v, b, 0));
                } else {
                    low[u] = low[u].min(disc[v]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[u]);
                    if low[u] > disc[parent] {
                        is_bridge[via] = true;
                    }
                }
            }
        }
    }
    is_bridge.into_iter().map(|b| !b).collect()
}

fn small_rings(graph: &MolecularGraph, ring_bond: &[bool], max_size: usize) -> Vec<Vec<usize>> {
    let n = graph.atom_count();
    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut dist = vec![usize::MAX; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();

    for (b, bond) in graph.bonds().iter().enumerate() {
        if !ring_bond[b] {
            continue;
        }
        let (start, target) = (bond.a, bond.b);
        // BFS from start over ring bonds other than b.
        for &t in &touched {
            dist[t] = usize::MAX;
        }
        touched.clear();
        dist[start] = 0;
        touched.push(start);
        queue.clear();
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            if u == target || dist[u] + 1 >= max_size {
                continue;
            }
            for (v, vb) in graph.neighbors(u) {
                if vb == b || !ring_bond[vb] || dist[v] != usize::MAX {
                    continue;
                }
                dist[v] = dist[u] + 1;
                touched.push(v);
                queue.push_back(v);
            }
        }
        if dist[target] == usize::MAX {
            continue;
        }
        // Walk back along strictly decreasing distances to enumerate every
        // shortest path target -> start.
        let mut paths = 0;
        let mut path = vec![target];
        collect_paths(graph, b, ring_bond, &dist, &mut path, &mut paths, &mut found);
    }
    found.into_iter().collect()
}

fn collect_paths(
    graph: &MolecularGraph,
    excluded: usize,
    ring_bond: &[bool],
    dist: &[usize],
    path: &mut Vec<usize>,
    paths: &mut usize,
    found: &mut BTreeSet<Vec<usize>>,
) {
    if *paths >= MAX_PATHS_PER_BOND {
        return;
    }
    let u = *path.last().expect("path is non-empty");
    if dist[u] == 0 {
        *paths += 1;
        found.insert(canonical_cycle(path));
        return;
    }
    for (v, vb) in graph.neighbors(u) {
        if vb == excluded || !ring_bond[vb] || dist[v] == usize::MAX || dist[v] + 1 != dist[u] {
            continue;
        }
        path.push(v);
        collect_paths(graph, excluded, ring_bond, dist, path, paths, found);
        path.pop();
    }
}

/// Rotates a cycle to start at its smallest atom and orients it so that
/// the second atom is the smaller of the two neighbors.
fn canonical_cycle(cycle: &[usize]) -> Vec<usize> {
    let n = cycle.len();
    let (min_pos, _) = cycle
        .iter()
        .enumerate()
        .min_by_key(|&(_, &a)| a)
        .expect("cycle is non-empty");
    let fwd = cycle[(min_pos + 1) % n];
    let bwd = cycle[(min_pos + n - 1) % n];
    if fwd <= bwd {
        (0..n).map(|k| cycle[(min_pos + k) % n]).collect()
    } else {
        (0..n).map(|k| cycle[(min_pos + n - k) % n]).collect()
    }
}
