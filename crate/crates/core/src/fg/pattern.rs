//! Constrained graph templates and the subgraph matcher.

use thiserror::Error;

use crate::element::Element;
use crate::molecule::{BondOrder, MolecularGraph};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("template {template:?}, offset {offset}: {reason}")]
    Syntax {
        template: String,
        offset: usize,
        reason: &'static str,
    },
    #[error("template {0:?} must have between 1 and 6 atoms")]
    Size(String),
    #[error("template {0:?} is not connected")]
    Disconnected(String),
}

/// Per-atom constraint of a template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomConstraint {
    /// Allowed elements; `None` accepts any heavy atom.
    pub elements: Option<Vec<Element>>,
    pub aromatic: Option<bool>,
    /// Inclusive heavy-degree range.
    pub degree: (u8, u8),
    /// Inclusive total-hydrogen range.
    pub hydrogens: (u8, u8),
}

impl Default for AtomConstraint {
    fn default() -> Self {
        AtomConstraint {
            elements: None,
            aromatic: None,
            degree: (0, u8::MAX),
            hydrogens: (0, u8::MAX),
        }
    }
}

/// Allowed bond orders as a bit set over [`BondOrder`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BondMask(u8);

impl BondMask {
    pub const ANY: BondMask = BondMask(0b1111);
    pub const SINGLE_OR_AROMATIC: BondMask = BondMask(0b1001);

    pub fn of(order: BondOrder) -> BondMask {
        BondMask(1 << Self::bit(order))
    }

    fn bit(order: BondOrder) -> u8 {
        match order {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }

    pub fn union(self, other: BondMask) -> BondMask {
        BondMask(self.0 | other.0)
    }

    pub fn accepts(self, order: BondOrder) -> bool {
        self.0 & (1 << Self::bit(order)) != 0
    }
}

/// Atom properties the matcher reads, computed once per molecule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomFeatures {
    pub element: Element,
    pub aromatic: bool,
    pub heavy: bool,
    pub heavy_degree: u8,
    pub hydrogens: u8,
}

pub fn atom_features(graph: &MolecularGraph) -> Vec<AtomFeatures> {
    (0..graph.atom_count())
        .map(|i| {
            let atom = graph.atom(i);
            AtomFeatures {
                element: atom.element,
                aromatic: atom.aromatic,
                heavy: !atom.is_hydrogen(),
                heavy_degree: graph.heavy_degree(i).min(u8::MAX as usize) as u8,
                hydrogens: graph.total_hydrogens(i).min(u8::MAX as u32) as u8,
            }
        })
        .collect()
}

impl AtomConstraint {
    pub fn accepts(&self, f: &AtomFeatures) -> bool {
        if !f.heavy {
            return false;
        }
        if let Some(elements) = &self.elements {
            if !elements.contains(&f.element) {
                return false;
            }
        }
        if let Some(arom) = self.aromatic {
            if arom != f.aromatic {
                return false;
            }
        }
        (self.degree.0..=self.degree.1).contains(&f.heavy_degree)
            && (self.hydrogens.0..=self.hydrogens.1).contains(&f.hydrogens)
    }
}

/// A named functional-group template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalGroupPattern {
    pub name: String,
    pub template: String,
    pub priority: i32,
    pub atoms: Vec<AtomConstraint>,
    /// `(i, j, allowed orders)` template edges.
    pub edges: Vec<(usize, usize, BondMask)>,
    plan: Vec<PlanStep>,
}

// Matching order: each step after the first binds a template atom through a
// bond to an already-bound atom and lists the remaining edges to check.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PlanStep {
    atom: usize,
    anchor: Option<(usize, BondMask)>,
    checks: Vec<(usize, BondMask)>,
}

impl FunctionalGroupPattern {
    pub fn parse(name: &str, priority: i32, template: &str) -> Result<Self, PatternError> {
        let (atoms, edges) = parse_template(template)?;
        if atoms.is_empty() || atoms.len() > 6 {
            return Err(PatternError::Size(template.to_string()));
        }
        let plan = build_plan(atoms.len(), &edges).ok_or_else(|| PatternError::Disconnected(template.to_string()))?;
        Ok(FunctionalGroupPattern {
            name: name.to_string(),
            template: template.to_string(),
            priority,
            atoms,
            edges,
            plan,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Every embedding (injective, constraint-respecting map of template
    /// atoms to molecule atoms), as atom tuples in template-atom order.
    pub fn embeddings(&self, graph: &MolecularGraph, features: &[AtomFeatures]) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        self.search(graph, features, &mut |m| {
            out.push(m.to_vec());
            true
        });
        out
    }

    /// True when at least one embedding exists.
    pub fn matches(&self, graph: &MolecularGraph, features: &[AtomFeatures]) -> bool {
        let mut found = false;
        self.search(graph, features, &mut |_| {
            found = true;
            false
        });
        found
    }

    // `visit` returns false to stop the search.
    fn search(&self, graph: &MolecularGraph, features: &[AtomFeatures], visit: &mut dyn FnMut(&[usize]) -> bool) {
        let mut mapping = vec![usize::MAX; self.atoms.len()];
        let mut used = vec![false; graph.atom_count()];
        let first = &self.plan[0];
        for start in 0..graph.atom_count() {
            if !self.atoms[first.atom].accepts(&features[start]) {
                continue;
            }
            mapping[first.atom] = start;
            used[start] = true;
            let keep_going = self.extend(1, graph, features, &mut mapping, &mut used, visit);
            used[start] = false;
            if !keep_going {
                return;
            }
        }
    }

    fn extend(
        &self,
        step: usize,
        graph: &MolecularGraph,
        features: &[AtomFeatures],
        mapping: &mut [usize],
        used: &mut [bool],
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        let Some(plan) = self.plan.get(step) else {
            return visit(mapping);
        };
        let (anchor, mask) = plan.anchor.expect("steps after the first are anchored");
        let from = mapping[anchor];
        for (cand, bond) in graph.neighbors(from) {
            if used[cand] || !mask.accepts(graph.bond(bond).order) || !self.atoms[plan.atom].accepts(&features[cand]) {
                continue;
            }
            let closes = plan.checks.iter().all(|&(other, m)| {
                graph
                    .bond_between(cand, mapping[other])
                    .is_some_and(|b| m.accepts(graph.bond(b).order))
            });
            if !closes {
                continue;
            }
            mapping[plan.atom] = cand;
            used[cand] = true;
            let keep_going = self.extend(step + 1, graph, features, mapping, used, visit);
            used[cand] = false;
            if !keep_going {
                return false;
            }
        }
        true
    }
}

fn build_plan(n: usize, edges: &[(usize, usize, BondMask)]) -> Option<Vec<PlanStep>> {
    let mut bound = vec![false; n];
    let mut plan = vec![PlanStep {
        atom: 0,
        anchor: None,
        checks: Vec::new(),
    }];
    bound[0] = true;
    while plan.len() < n {
        let (atom, anchor) = edges.iter().find_map(|&(i, j, m)| match (bound[i], bound[j]) {
            (true, false) => Some((j, (i, m))),
            (false, true) => Some((i, (j, m))),
            _ => None,
        })?;
        bound[atom] = true;
        let checks = edges
            .iter()
            .filter_map(|&(i, j, m)| {
                let other = if i == atom { j } else if j == atom { i } else { return None };
                (other != anchor.0 && plan.iter().any(|s| s.atom == other)).then_some((other, m))
            })
            .collect();
        plan.push(PlanStep {
            atom,
            anchor: Some(anchor),
            checks,
        });
    }
    Some(plan)
}

type Template = (Vec<AtomConstraint>, Vec<(usize, usize, BondMask)>);

fn parse_template(template: &str) -> Result<Template, PatternError> {
    let bytes = template.as_bytes();
    let err = |offset: usize, reason: &'static str| PatternError::Syntax {
        template: template.to_string(),
        offset,
        reason,
    };
    let mut atoms = Vec::new();
    let mut edges = Vec::new();
    let mut prev: Option<usize> = None;
    let mut stack: Vec<Option<usize>> = Vec::new();
    let mut pending: Option<BondMask> = None;
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        match c {
            b'(' => {
                if prev.is_none() || pending.is_some() {
                    return Err(err(pos, "branch must follow an atom"));
                }
                stack.push(prev);
                pos += 1;
            }
            b')' => {
                if pending.is_some() {
                    return Err(err(pos, "dangling bond"));
                }
                prev = stack.pop().ok_or_else(|| err(pos, "unbalanced parenthesis"))?;
                pos += 1;
            }
            b'-' | b'=' | b'#' | b':' | b'~' => {
                if prev.is_none() {
                    return Err(err(pos, "dangling bond"));
                }
                let mask = match c {
                    b'-' => BondMask::of(BondOrder::Single),
                    b'=' => BondMask::of(BondOrder::Double),
                    b'#' => BondMask::of(BondOrder::Triple),
                    b':' => BondMask::of(BondOrder::Aromatic),
                    _ => BondMask::ANY,
                };
                pending = Some(match pending {
                    None => mask,
                    Some(_) => return Err(err(pos, "two bond symbols in a row; use ',' for alternatives")),
                });
                pos += 1;
                // `-,=` style alternatives
                while bytes.get(pos) == Some(&b',') {
                    let alt = match bytes.get(pos + 1) {
                        Some(b'-') => BondMask::of(BondOrder::Single),
                        Some(b'=') => BondMask::of(BondOrder::Double),
                        Some(b'#') => BondMask::of(BondOrder::Triple),
                        Some(b':') => BondMask::of(BondOrder::Aromatic),
                        _ => return Err(err(pos, "expected bond symbol after ','")),
                    };
                    pending = pending.map(|m| m.union(alt));
                    pos += 2;
                }
            }
            b'[' => {
                let end = template[pos..]
                    .find(']')
                    .map(|e| pos + e)
                    .ok_or_else(|| err(pos, "unterminated bracket"))?;
                let constraint = parse_constraint(&template[pos + 1..end]).map_err(|reason| err(pos + 1, reason))?;
                let idx = atoms.len();
                atoms.push(constraint);
                if let Some(p) = prev {
                    edges.push((p, idx, pending.take().unwrap_or(BondMask::SINGLE_OR_AROMATIC)));
                }
                prev = Some(idx);
                pos = end + 1;
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'*' => {
                let (constraint, len) = bare_atom(&bytes[pos..]).ok_or_else(|| err(pos, "unknown element"))?;
                let idx = atoms.len();
                atoms.push(constraint);
                if let Some(p) = prev {
                    edges.push((p, idx, pending.take().unwrap_or(BondMask::SINGLE_OR_AROMATIC)));
                }
                prev = Some(idx);
                pos += len;
            }
            _ => return Err(err(pos, "unexpected character")),
        }
    }
    if pending.is_some() {
        return Err(err(bytes.len(), "dangling bond"));
    }
    if !stack.is_empty() {
        return Err(err(bytes.len(), "unbalanced parenthesis"));
    }
    Ok((atoms, edges))
}

fn bare_atom(bytes: &[u8]) -> Option<(AtomConstraint, usize)> {
    if bytes[0] == b'*' {
        return Some((AtomConstraint::default(), 1));
    }
    let two = bytes.get(..2).and_then(|t| std::str::from_utf8(t).ok());
    if let Some(e) = two.filter(|t| t == &"Cl" || t == &"Br").and_then(Element::from_symbol) {
        return Some((
            AtomConstraint {
                elements: Some(vec![e]),
                aromatic: Some(false),
                ..Default::default()
            },
            2,
        ));
    }
    let c = bytes[0];
    let aromatic = c.is_ascii_lowercase();
    let upper = [c.to_ascii_uppercase()];
    let e = Element::from_symbol(std::str::from_utf8(&upper).ok()?)?;
    Some((
        AtomConstraint {
            elements: Some(vec![e]),
            aromatic: Some(aromatic),
            ..Default::default()
        },
        1,
    ))
}

fn parse_range(text: &str) -> Option<(u8, u8)> {
    match text.split_once('-') {
        Some((lo, hi)) => {
            let (lo, hi) = (lo.parse().ok()?, hi.parse().ok()?);
            (lo <= hi).then_some((lo, hi))
        }
        None => {
            let v = text.parse().ok()?;
            Some((v, v))
        }
    }
}

fn parse_constraint(body: &str) -> Result<AtomConstraint, &'static str> {
    let mut c = AtomConstraint::default();
    for prim in body.split(';') {
        let prim = prim.trim();
        match prim {
            "" => return Err("empty constraint"),
            "*" => c.elements = None,
            "a" => c.aromatic = Some(true),
            "A" => c.aromatic = Some(false),
            _ if prim.starts_with('D') && prim[1..].starts_with(|ch: char| ch.is_ascii_digit()) => {
                c.degree = parse_range(&prim[1..]).ok_or("bad degree range")?;
            }
            _ if prim.starts_with('H') && prim[1..].starts_with(|ch: char| ch.is_ascii_digit()) => {
                c.hydrogens = parse_range(&prim[1..]).ok_or("bad hydrogen range")?;
            }
            _ => {
                let elements = prim
                    .split(',')
                    .map(|s| Element::from_symbol(s.trim()).ok_or("unknown element"))
                    .collect::<Result<Vec<_>, _>>()?;
                c.elements = Some(elements);
            }
        }
    }
    Ok(c)
}
