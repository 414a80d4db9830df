use thiserror::Error;

use crate::element::Element;
use crate::molecule::{Atom, Bond, BondOrder, BondStereo, Chirality, GraphError, MolecularGraph};

/// Failure to read a SMILES string. Every variant carries the byte offset
/// where the problem was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("empty SMILES string")]
    Empty,
    #[error("non-ASCII byte at offset {0}")]
    NonAscii(usize),
    #[error("unexpected character {byte:?} at offset {offset}")]
    UnexpectedCharacter { offset: usize, byte: char },
    #[error("unknown or unsupported element at offset {0}")]
    UnknownElement(usize),
    #[error("invalid bracket atom at offset {offset}: {reason}")]
    InvalidBracketAtom { offset: usize, reason: &'static str },
    #[error("ring closure {label} opened at offset {offset} is never closed")]
    UnmatchedRingClosure { offset: usize, label: u16 },
    #[error("bond symbol at offset {0} is not attached to an atom on both sides")]
    DanglingBond(usize),
    #[error("unbalanced parenthesis at offset {0}")]
    UnbalancedParenthesis(usize),
    #[error("empty branch at offset {0}")]
    EmptyBranch(usize),
    #[error("ring closure at offset {0} specifies two different bond symbols")]
    ConflictingRingBond(usize),
    #[error("unsupported bond symbol at offset {0}")]
    UnsupportedBond(usize),
    #[error("invalid structure near offset {offset}: {source}")]
    InvalidStructure {
        offset: usize,
        #[source]
        source: GraphError,
    },
}

impl SmilesError {
    pub fn offset(&self) -> usize {
        match *self {
            SmilesError::Empty => 0,
            SmilesError::NonAscii(o)
            | SmilesError::UnknownElement(o)
            | SmilesError::DanglingBond(o)
            | SmilesError::UnbalancedParenthesis(o)
            | SmilesError::EmptyBranch(o)
            | SmilesError::ConflictingRingBond(o)
            | SmilesError::UnsupportedBond(o) => o,
            SmilesError::UnexpectedCharacter { offset, .. }
            | SmilesError::InvalidBracketAtom { offset, .. }
            | SmilesError::UnmatchedRingClosure { offset, .. }
            | SmilesError::InvalidStructure { offset, .. } => offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    Up,
    Down,
}

impl BondSymbol {
    fn from_byte(b: u8) -> Option<BondSymbol> {
        Some(match b {
            b'-' => BondSymbol::Single,
            b'=' => BondSymbol::Double,
            b'#' => BondSymbol::Triple,
            b':' => BondSymbol::Aromatic,
            b'/' => BondSymbol::Up,
            b'\\' => BondSymbol::Down,
            _ => return None,
        })
    }

    fn order_and_stereo(self) -> (BondOrder, BondStereo) {
        match self {
            BondSymbol::Single => (BondOrder::Single, BondStereo::None),
            BondSymbol::Double => (BondOrder::Double, BondStereo::None),
            BondSymbol::Triple => (BondOrder::Triple, BondStereo::None),
            BondSymbol::Aromatic => (BondOrder::Aromatic, BondStereo::None),
            BondSymbol::Up => (BondOrder::Single, BondStereo::Up),
            BondSymbol::Down => (BondOrder::Single, BondStereo::Down),
        }
    }

    fn flipped(self) -> BondSymbol {
        match self {
            BondSymbol::Up => BondSymbol::Down,
            BondSymbol::Down => BondSymbol::Up,
            other => other,
        }
    }
}

#[derive(Clone, Copy)]
struct OpenRing {
    atom: usize,
    symbol: Option<BondSymbol>,
    offset: usize,
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<Bond>,
    bond_offsets: Vec<usize>,
    rings: Vec<Option<OpenRing>>,
    open_ring_count: usize,
    branches: Vec<(Option<usize>, usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondSymbol, usize)>,
}

/// Parses a SMILES string into a [`MolecularGraph`].
///
/// Supports the organic subset, bracket atoms (isotope, chirality `@`/`@@`,
/// hydrogen count, charge, atom class), branches, ring closures with single
/// digits or `%nn`, the bond symbols `- = # : / \` and `.`-separated
/// components.
pub fn parse_smiles(text: &str) -> Result<MolecularGraph, SmilesError> {
    parse_bytes(text.as_bytes())
}

/// Same as [`parse_smiles`] for arbitrary bytes.
pub fn parse_bytes(input: &[u8]) -> Result<MolecularGraph, SmilesError> {
    if input.is_empty() {
        return Err(SmilesError::Empty);
    }
    if let Some(i) = input.iter().position(|b| !b.is_ascii()) {
        return Err(SmilesError::NonAscii(i));
    }
    let mut parser = Parser {
        input,
        pos: 0,
        atoms: Vec::with_capacity(input.len()),
        atom_offsets: Vec::with_capacity(input.len()),
        bonds: Vec::with_capacity(input.len()),
        bond_offsets: Vec::with_capacity(input.len()),
        rings: vec![None; 100],
        open_ring_count: 0,
        branches: Vec::new(),
        prev: None,
        pending: None,
    };
    parser.run()?;
    let Parser {
        atoms,
        atom_offsets,
        bonds,
        bond_offsets,
        ..
    } = parser;
    // Text is ASCII, so this cannot fail.
    let source = std::str::from_utf8(input).unwrap_or_default();
    MolecularGraph::from_parts(atoms, bonds, source).map_err(|e| {
        let offset = match e {
            GraphError::BondOutOfRange { bond, .. }
            | GraphError::SelfLoop(bond)
            | GraphError::AromaticBondOnAliphaticAtom(bond) => bond_offsets[bond],
            GraphError::DuplicateBond(a, b) => atom_offsets[a.max(b)],
            GraphError::ChargeOutOfRange(a)
            | GraphError::InvalidOrganicAtom(a)
            | GraphError::ValenceExceeded(a)
            | GraphError::InvalidAromaticElement(a) => atom_offsets[a],
        };
        SmilesError::InvalidStructure { offset, source: e }
    })
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let offset = self.pos;
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(SmilesError::UnexpectedCharacter { offset, byte: '(' });
                    };
                    if let Some((_, at)) = self.pending {
                        return Err(SmilesError::DanglingBond(at));
                    }
                    self.branches.push((Some(prev), self.atoms.len(), offset));
                    self.pos += 1;
                }
                b')' => {
                    if let Some((_, at)) = self.pending {
                        return Err(SmilesError::DanglingBond(at));
                    }
                    let Some((prev, n_atoms, _)) = self.branches.pop() else {
                        return Err(SmilesError::UnbalancedParenthesis(offset));
                    };
                    if n_atoms == self.atoms.len() {
                        return Err(SmilesError::EmptyBranch(offset));
                    }
                    self.prev = prev;
                    self.pos += 1;
                }
                b'.' => {
                    if let Some((_, at)) = self.pending {
                        return Err(SmilesError::DanglingBond(at));
                    }
                    if self.prev.is_none() || !self.branches.is_empty() {
                        return Err(SmilesError::UnexpectedCharacter { offset, byte: '.' });
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                b'$' => return Err(SmilesError::UnsupportedBond(offset)),
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, offset)?;
                }
                _ => {
                    if let Some(sym) = BondSymbol::from_byte(c) {
                        if self.pending.is_some() || self.prev.is_none() {
                            return Err(SmilesError::DanglingBond(offset));
                        }
                        self.pending = Some((sym, offset));
                        self.pos += 1;
                    } else if c.is_ascii_alphabetic() || c == b'*' {
                        let atom = self.organic_atom()?;
                        self.add_atom(atom, offset)?;
                    } else {
                        return Err(SmilesError::UnexpectedCharacter {
                            offset,
                            byte: c as char,
                        });
                    }
                }
            }
        }
        if let Some((_, at)) = self.pending {
            return Err(SmilesError::DanglingBond(at));
        }
        if self.open_ring_count > 0 {
            let (label, ring) = self
                .rings
                .iter()
                .enumerate()
                .filter_map(|(l, r)| r.map(|r| (l, r)))
                .min_by_key(|(_, r)| r.offset)
                .expect("open ring count is positive");
            return Err(SmilesError::UnmatchedRingClosure {
                offset: ring.offset,
                label: label as u16,
            });
        }
        if let Some(&(_, _, offset)) = self.branches.last() {
            return Err(SmilesError::UnbalancedParenthesis(offset));
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, offset: usize) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        let aromatic = atom.aromatic;
        self.atoms.push(atom);
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let (order, stereo, bond_offset) = match self.pending.take() {
                Some((sym, at)) => {
                    let (o, s) = sym.order_and_stereo();
                    (o, s, at)
                }
                None => {
                    let order = if aromatic && self.atoms[prev].aromatic {
                        BondOrder::Aromatic
                    } else {
                        BondOrder::Single
                    };
                    (order, BondStereo::None, offset)
                }
            };
            self.bonds.push(Bond {
                a: prev,
                b: idx,
                order,
                stereo,
            });
            self.bond_offsets.push(bond_offset);
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let offset = self.pos;
        let label = if self.input[self.pos] == b'%' {
            let digits = self.input.get(self.pos + 1..self.pos + 3);
            match digits {
                Some(d) if d.iter().all(u8::is_ascii_digit) => {
                    self.pos += 3;
                    ((d[0] - b'0') * 10 + (d[1] - b'0')) as usize
                }
                _ => return Err(SmilesError::UnexpectedCharacter { offset, byte: '%' }),
            }
        } else {
            self.pos += 1;
            (self.input[offset] - b'0') as usize
        };
        let Some(current) = self.prev else {
            return Err(SmilesError::UnexpectedCharacter {
                offset,
                byte: self.input[offset] as char,
            });
        };
        let pending = self.pending.take();
        match self.rings[label].take() {
            None => {
                self.rings[label] = Some(OpenRing {
                    atom: current,
                    symbol: pending.map(|(s, _)| s),
                    offset,
                });
                self.open_ring_count += 1;
            }
            Some(open) => {
                self.open_ring_count -= 1;
                // A symbol at the closing digit is read from the closing
                // atom's side; store every ring bond as (opener, closer).
                let closing = pending.map(|(s, _)| s.flipped());
                let symbol = match (open.symbol, closing) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(SmilesError::ConflictingRingBond(offset));
                    }
                    (Some(a), _) => Some(a),
                    (None, b) => b,
                };
                let (order, stereo) = match symbol {
                    Some(s) => s.order_and_stereo(),
                    None if self.atoms[open.atom].aromatic && self.atoms[current].aromatic => {
                        (BondOrder::Aromatic, BondStereo::None)
                    }
                    None => (BondOrder::Single, BondStereo::None),
                };
                self.bonds.push(Bond {
                    a: open.atom,
                    b: current,
                    order,
                    stereo,
                });
                self.bond_offsets.push(offset);
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let offset = self.pos;
        let c = self.input[self.pos];
        let next = self.input.get(self.pos + 1).copied();
        let (element, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => (Element::CL, false, 2),
            (b'B', Some(b'r')) => (Element::BR, false, 2),
            (b'B', _) => (Element::B, false, 1),
            (b'C', _) => (Element::C, false, 1),
            (b'N', _) => (Element::N, false, 1),
            (b'O', _) => (Element::O, false, 1),
            (b'P', _) => (Element::P, false, 1),
            (b'S', _) => (Element::S, false, 1),
            (b'F', _) => (Element::F, false, 1),
            (b'I', _) => (Element::I, false, 1),
            (b'b', _) => (Element::B, true, 1),
            (b'c', _) => (Element::C, true, 1),
            (b'n', _) => (Element::N, true, 1),
            (b'o', _) => (Element::O, true, 1),
            (b'p', _) => (Element::P, true, 1),
            (b's', _) => (Element::S, true, 1),
            _ => return Err(SmilesError::UnknownElement(offset)),
        };
        self.pos += len;
        Ok(Atom::organic(element, aromatic))
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        self.pos += 1;
        let bad = |offset: usize, reason: &'static str| SmilesError::InvalidBracketAtom { offset, reason };

        let isotope = self.number(4).map_err(|o| bad(o, "isotope too large"))?;
        let isotope = isotope.map(|v| v as u16);

        let sym_offset = self.pos;
        let (element, aromatic) = self.bracket_symbol()?;

        let mut chirality = Chirality::None;
        if self.peek() == Some(b'@') {
            self.pos += 1;
            chirality = Chirality::At;
            if self.peek() == Some(b'@') {
                self.pos += 1;
                chirality = Chirality::AtAt;
            }
            if self.peek().is_some_and(|c| c.is_ascii_uppercase() && c != b'H') {
                return Err(bad(self.pos, "only @ and @@ chirality classes are supported"));
            }
        }

        let mut hcount = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            hcount = 1;
            if let Some(d) = self.peek().filter(u8::is_ascii_digit) {
                hcount = d - b'0';
                self.pos += 1;
            }
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            let charge_offset = self.pos;
            self.pos += 1;
            if self.peek() == Some(sign) {
                self.pos += 1;
                charge = 2 * unit;
                if self.peek() == Some(sign) {
                    return Err(bad(charge_offset, "charge outside [-4, 4]"));
                }
            } else {
                let magnitude = self
                    .number(2)
                    .map_err(|o| bad(o, "charge outside [-4, 4]"))?
                    .unwrap_or(1);
                charge = unit * magnitude as i32;
            }
            if !(-4..=4).contains(&charge) {
                return Err(bad(charge_offset, "charge outside [-4, 4]"));
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            match self.number(6) {
                Ok(Some(_)) => {}
                _ => return Err(bad(self.pos, "atom class must be a number")),
            }
        }

        match self.peek() {
            Some(b']') => self.pos += 1,
            Some(_) => return Err(bad(self.pos, "unexpected character inside brackets")),
            None => return Err(bad(open, "unterminated bracket atom")),
        }

        if element == Element::H && hcount > 0 {
            return Err(bad(sym_offset, "hydrogen atom cannot carry hydrogens"));
        }

        Ok(Atom {
            element,
            aromatic,
            formal_charge: charge as i8,
            explicit_h: Some(hcount),
            isotope,
            chirality,
        })
    }

    fn bracket_symbol(&mut self) -> Result<(Element, bool), SmilesError> {
        let offset = self.pos;
        let Some(c) = self.peek() else {
            return Err(SmilesError::InvalidBracketAtom {
                offset,
                reason: "unterminated bracket atom",
            });
        };
        if c.is_ascii_lowercase() {
            let two = self.input.get(offset..offset + 2);
            for (text, sym) in [(&b"se"[..], "Se"), (b"as", "As"), (b"te", "Te")] {
                if two == Some(text) {
                    self.pos += 2;
                    return Ok((Element::from_symbol(sym).expect("table entry"), true));
                }
            }
            let sym = match c {
                b'b' => Element::B,
                b'c' => Element::C,
                b'n' => Element::N,
                b'o' => Element::O,
                b'p' => Element::P,
                b's' => Element::S,
                _ => return Err(SmilesError::UnknownElement(offset)),
            };
            self.pos += 1;
            return Ok((sym, true));
        }
        if !c.is_ascii_uppercase() {
            return Err(SmilesError::UnknownElement(offset));
        }
        if let Some(&l) = self.input.get(offset + 1) {
            if l.is_ascii_lowercase() {
                let text = [c, l];
                let s = std::str::from_utf8(&text).unwrap_or_default();
                if let Some(e) = Element::from_symbol(s) {
                    self.pos += 2;
                    return Ok((e, false));
                }
            }
        }
        let text = [c];
        let s = std::str::from_utf8(&text).unwrap_or_default();
        match Element::from_symbol(s) {
            Some(e) => {
                self.pos += 1;
                Ok((e, false))
            }
            None => Err(SmilesError::UnknownElement(offset)),
        }
    }

    /// Reads up to `max_digits` decimal digits. Returns the offset of the
    /// first excess digit on overflow.
    fn number(&mut self, max_digits: usize) -> Result<Option<u32>, usize> {
        let start = self.pos;
        let mut value: u32 = 0;
        while let Some(d) = self.peek().filter(u8::is_ascii_digit) {
            if self.pos - start == max_digits {
                return Err(self.pos);
            }
            value = value * 10 + (d - b'0') as u32;
            self.pos += 1;
        }
        Ok((self.pos > start).then_some(value))
    }
}
