//! Periodic-table data used by the parser and the mass/valence rules.

use std::fmt;

/// A chemical element, stored as its atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

struct ElementInfo {
    symbol: &'static str,
    mass: f64,
}

// Conventional standard atomic weights. Index = atomic number.
const TABLE: &[(u8, &str, f64)] = &[
    (1, "H", 1.008),
    (2, "He", 4.0026),
    (3, "Li", 6.94),
    (4, "Be", 9.0122),
    (5, "B", 10.81),
    (6, "C", 12.011),
    (7, "N", 14.007),
    (8, "O", 15.999),
    (9, "F", 18.998),
    (10, "Ne", 20.180),
    (11, "Na", 22.990),
    (12, "Mg", 24.305),
    (13, "Al", 26.982),
    (14, "Si", 28.085),
    (15, "P", 30.974),
    (16, "S", 32.06),
    (17, "Cl", 35.45),
    (18, "Ar", 39.948),
    (19, "K", 39.098),
    (20, "Ca", 40.078),
    (21, "Sc", 44.956),
    (22, "Ti", 47.867),
    (23, "V", 50.942),
    (24, "Cr", 51.996),
    (25, "Mn", 54.938),
    (26, "Fe", 55.845),
    (27, "Co", 58.933),
    (28, "Ni", 58.693),
    (29, "Cu", 63.546),
    (30, "Zn", 65.38),
    (31, "Ga", 69.723),
    (32, "Ge", 72.630),
    (33, "As", 74.922),
    (34, "Se", 78.971),
    (35, "Br", 79.904),
    (36, "Kr", 83.798),
    (37, "Rb", 85.468),
    (38, "Sr", 87.62),
    (39, "Y", 88.906),
    (40, "Zr", 91.224),
    (41, "Nb", 92.906),
    (42, "Mo", 95.95),
    (43, "Tc", 98.0),
    (44, "Ru", 101.07),
    (45, "Rh", 102.91),
    (46, "Pd", 106.42),
    (47, "Ag", 107.87),
    (48, "Cd", 112.41),
    (49, "In", 114.82),
    (50, "Sn", 118.71),
    (51, "Sb", 121.76),
    (52, "Te", 127.60),
    (53, "I", 126.90),
    (54, "Xe", 131.29),
    (55, "Cs", 132.91),
    (56, "Ba", 137.33),
    (78, "Pt", 195.08),
    (79, "Au", 196.97),
    (80, "Hg", 200.59),
    (81, "Tl", 204.38),
    (82, "Pb", 207.2),
    (83, "Bi", 208.98),
];

const MAX_Z: usize = 83;

static INFO: [Option<ElementInfo>; MAX_Z + 1] = build_info();

const fn build_info() -> [Option<ElementInfo>; MAX_Z + 1] {
    let mut out = [const { None }; MAX_Z + 1];
    let mut i = 0;
    while i < TABLE.len() {
        let (z, symbol, mass) = TABLE[i];
        out[z as usize] = Some(ElementInfo { symbol, mass });
        i += 1;
    }
    out
}

impl Element {
    pub const H: Element = Element(1);
    pub const B: Element = Element(5);
    pub const C: Element = Element(6);
    pub const N: Element = Element(7);
    pub const O: Element = Element(8);
    pub const F: Element = Element(9);
    pub const P: Element = Element(15);
    pub const S: Element = Element(16);
    pub const CL: Element = Element(17);
    pub const BR: Element = Element(35);
    pub const I: Element = Element(53);

    /// Looks up an element by atomic number.
    pub fn from_atomic_number(z: u8) -> Option<Element> {
        INFO.get(z as usize)
            .and_then(|i| i.as_ref())
            .map(|_| Element(z))
    }

    /// Looks up an element by its case-sensitive symbol ("Cl", not "CL").
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE
            .iter()
            .find(|(_, s, _)| *s == symbol)
            .map(|(z, _, _)| Element(*z))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        self.info().symbol
    }

    /// Standard atomic weight in Da.
    pub fn mass(self) -> f64 {
        self.info().mass
    }

    fn info(self) -> &'static ElementInfo {
        INFO[self.0 as usize]
            .as_ref()
            .expect("Element is only constructed for table entries")
    }

    /// True for the elements that may appear outside brackets.
    pub fn is_organic_subset(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// Allowed valences for organic-subset atoms, ascending.
    pub fn default_valences(self) -> &'static [u8] {
        match self.0 {
            5 => &[3],
            6 => &[4],
            7 => &[3],
            8 => &[2],
            15 => &[3, 5],
            16 => &[2, 4, 6],
            9 | 17 | 35 | 53 => &[1],
            _ => &[],
        }
    }

    /// Elements that may be written in lowercase (aromatic) form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}
