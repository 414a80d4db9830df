//! Molecular graph types shared by every other module.
//!
//! A [`MolecularGraph`] is immutable once built. Construction goes through
//! [`MolecularGraph::from_parts`], which checks the structural invariants and
//! resolves implicit hydrogen counts for unbracketed atoms.

use smallvec::SmallVec;
use thiserror::Error;

use crate::element::Element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Chirality {
    #[default]
    None,
    /// `@`
    At,
    /// `@@`
    AtAt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence sum. Aromatic bonds count one here; the
    /// extra pi electron is accounted for per atom.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// True for double, triple and aromatic bonds.
    pub fn is_pi(self) -> bool {
        !matches!(self, BondOrder::Single)
    }
}

/// Directional mark of a single bond, relative to the bond's `(a, b)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BondStereo {
    #[default]
    None,
    /// `/`
    Up,
    /// `\`
    Down,
}

impl BondStereo {
    pub fn flipped(self) -> BondStereo {
        match self {
            BondStereo::None => BondStereo::None,
            BondStereo::Up => BondStereo::Down,
            BondStereo::Down => BondStereo::Up,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count written inside brackets. `None` marks an unbracketed
    /// organic-subset atom whose hydrogens follow the default valence rules.
    pub explicit_h: Option<u8>,
    /// Parsed and stored, never read by descriptors.
    pub isotope: Option<u16>,
    pub chirality: Chirality,
}

impl Atom {
    /// An unbracketed organic-subset atom.
    pub fn organic(element: Element, aromatic: bool) -> Atom {
        Atom {
            element,
            aromatic,
            formal_charge: 0,
            explicit_h: None,
            isotope: None,
            chirality: Chirality::None,
        }
    }

    pub fn is_hydrogen(&self) -> bool {
        self.element == Element::H
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
    pub stereo: BondStereo,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond {
            a,
            b,
            order,
            stereo: BondStereo::None,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("bond {bond} references atom {atom}, which does not exist")]
    BondOutOfRange { bond: usize, atom: usize },
    #[error("bond {0} joins an atom to itself")]
    SelfLoop(usize),
    #[error("atoms {0} and {1} are joined by more than one bond")]
    DuplicateBond(usize, usize),
    #[error("atom {0} has formal charge outside [-4, 4]")]
    ChargeOutOfRange(usize),
    #[error("atom {0} is unbracketed but is not a neutral organic-subset atom")]
    InvalidOrganicAtom(usize),
    #[error("atom {0} exceeds its maximum valence")]
    ValenceExceeded(usize),
    #[error("aromatic bond {0} joins a non-aromatic atom")]
    AromaticBondOnAliphaticAtom(usize),
    #[error("atom {0} is marked aromatic but its element cannot be aromatic")]
    InvalidAromaticElement(usize),
}

pub(crate) type Neighbors = SmallVec<[(u32, u32); 4]>;

/// Atoms, bonds and the SMILES text they came from.
#[derive(Debug, Clone)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source: String,
    adjacency: Vec<Neighbors>,
    implicit_h: Vec<u8>,
}

impl MolecularGraph {
    /// Validates and assembles a graph.
    pub fn from_parts(
        atoms: Vec<Atom>,
        bonds: Vec<Bond>,
        source: impl Into<String>,
    ) -> Result<MolecularGraph, GraphError> {
        let n = atoms.len();
        let mut adjacency: Vec<Neighbors> = vec![SmallVec::new(); n];
        for (i, bond) in bonds.iter().enumerate() {
            for atom in [bond.a, bond.b] {
                if atom >= n {
                    return Err(GraphError::BondOutOfRange { bond: i, atom });
                }
            }
            if bond.a == bond.b {
                return Err(GraphError::SelfLoop(i));
            }
            if adjacency[bond.a].iter().any(|&(nb, _)| nb as usize == bond.b) {
                return Err(GraphError::DuplicateBond(bond.a.min(bond.b), bond.a.max(bond.b)));
            }
            if bond.order == BondOrder::Aromatic && !(atoms[bond.a].aromatic && atoms[bond.b].aromatic)
            {
                return Err(GraphError::AromaticBondOnAliphaticAtom(i));
            }
            adjacency[bond.a].push((bond.b as u32, i as u32));
            adjacency[bond.b].push((bond.a as u32, i as u32));
        }

        let mut implicit_h = vec![0u8; n];
        for (i, atom) in atoms.iter().enumerate() {
            if !(-4..=4).contains(&atom.formal_charge) {
                return Err(GraphError::ChargeOutOfRange(i));
            }
            if atom.aromatic && !atom.element.can_be_aromatic() {
                return Err(GraphError::InvalidAromaticElement(i));
            }
            if atom.explicit_h.is_some() {
                continue;
            }
            if !atom.element.is_organic_subset()
                || atom.formal_charge != 0
                || atom.isotope.is_some()
                || atom.chirality != Chirality::None
            {
                return Err(GraphError::InvalidOrganicAtom(i));
            }
            let sum: u32 = adjacency[i]
                .iter()
                .map(|&(_, b)| bonds[b as usize].order.valence() as u32)
                .sum();
            implicit_h[i] = implicit_hydrogens(atom, sum).ok_or(GraphError::ValenceExceeded(i))?;
        }

        Ok(MolecularGraph {
            atoms,
            bonds,
            source: source.into(),
            adjacency,
            implicit_h,
        })
    }

    /// Rebuilds the graph with new aromatic flags and bond orders while
    /// keeping the hydrogen counts resolved at construction.
    pub(crate) fn with_aromatic_updates(&self, atom_flags: &[bool], orders: &[BondOrder]) -> MolecularGraph {
        let mut out = self.clone();
        for (atom, &flag) in out.atoms.iter_mut().zip(atom_flags) {
            atom.aromatic = flag;
        }
        for (bond, &order) in out.bonds.iter_mut().zip(orders) {
            bond.order = order;
        }
        out
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    /// `(neighbor, bond index)` pairs of atom `i`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency[i]
            .iter()
            .map(|&(nb, b)| (nb as usize, b as usize))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    /// Number of non-hydrogen neighbors.
    pub fn heavy_degree(&self, i: usize) -> usize {
        self.adjacency[i]
            .iter()
            .filter(|&&(nb, _)| !self.atoms[nb as usize].is_hydrogen())
            .count()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(nb, _)| nb as usize == b)
            .map(|&(_, bond)| bond as usize)
    }

    /// Hydrogens implied by valence rules (zero for bracket atoms).
    pub fn implicit_hydrogens(&self, i: usize) -> u8 {
        self.implicit_h[i]
    }

    /// Implicit, bracket and explicit-atom hydrogens attached to atom `i`.
    pub fn total_hydrogens(&self, i: usize) -> u32 {
        let own = match self.atoms[i].explicit_h {
            Some(h) => h as u32,
            None => self.implicit_h[i] as u32,
        };
        let attached = self.adjacency[i]
            .iter()
            .filter(|&&(nb, _)| self.atoms[nb as usize].is_hydrogen())
            .count() as u32;
        own + attached
    }

    /// Connected component label per atom, labels numbered from zero in
    /// order of first appearance.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let n = self.atoms.len();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for (v, _) in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn component_count(&self) -> usize {
        self.component_labels().1
    }

    /// Returns the same molecule with atoms renumbered: new atom `k` is old
    /// atom `order[k]`. Bond list order follows the old order.
    pub fn permuted(&self, order: &[usize]) -> MolecularGraph {
        assert_eq!(order.len(), self.atoms.len(), "order must be a permutation");
        let mut new_index = vec![usize::MAX; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let atoms = order.iter().map(|&old| self.atoms[old].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond {
                a: new_index[b.a],
                b: new_index[b.b],
                ..*b
            })
            .collect();
        MolecularGraph::from_parts(atoms, bonds, self.source.clone())
            .expect("permutation of a valid graph is valid")
    }
}

fn implicit_hydrogens(atom: &Atom, bond_sum: u32) -> Option<u8> {
    let valences = atom.element.default_valences();
    if atom.aromatic {
        // Aromatic atoms reserve one valence for the pi system at their
        // lowest valence. Atoms already saturated there (furan o, thiophene
        // s, pyridone-style c=O) get no hydrogens.
        let lowest = *valences.first()? as u32;
        if lowest > bond_sum {
            return Some((lowest - bond_sum - 1) as u8);
        }
        return valences.iter().any(|&v| v as u32 >= bond_sum).then_some(0);
    }
    valences
        .iter()
        .find(|&&v| v as u32 >= bond_sum)
        .map(|&v| (v as u32 - bond_sum) as u8)
}
