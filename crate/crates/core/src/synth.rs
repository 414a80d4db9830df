//! Seeded generator of drug-like SMILES for benchmarks and determinism
//! tests.
//!
//! Molecules are assembled from ring templates joined by linkers and
//! decorated with common substituents. Every output parses.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Ring {
    atoms: &'static [&'static str],
    /// Positions that can take a substituent or a linker.
    open: &'static [usize],
    carbocycle: bool,
}

const RINGS: &[Ring] = &[
    Ring { atoms: &["c", "c", "c", "c", "c", "c"], open: &[0, 1, 2, 3, 4], carbocycle: true },
    Ring { atoms: &["c", "c", "c", "c", "c", "c"], open: &[0, 1, 2, 3, 4], carbocycle: true },
    Ring { atoms: &["c", "c", "n", "c", "c", "c"], open: &[0, 1, 3, 4], carbocycle: false },
    Ring { atoms: &["c", "n", "c", "n", "c", "c"], open: &[0, 2, 4], carbocycle: false },
    Ring { atoms: &["c", "c", "s", "c", "c"], open: &[0, 1, 3], carbocycle: false },
    Ring { atoms: &["c", "c", "o", "c", "c"], open: &[0, 1, 3], carbocycle: false },
    Ring { atoms: &["c", "c", "[nH]", "c", "c"], open: &[0, 1, 3], carbocycle: false },
    Ring { atoms: &["C", "C", "C", "C", "C", "C"], open: &[0, 1, 2, 3, 4], carbocycle: true },
    Ring { atoms: &["C", "C", "C", "C", "C"], open: &[0, 1, 2, 3], carbocycle: true },
    Ring { atoms: &["C", "C", "C"], open: &[0, 1], carbocycle: true },
    Ring { atoms: &["N", "C", "C", "C", "C", "C"], open: &[0, 2, 3], carbocycle: false },
    Ring { atoms: &["N", "C", "C", "O", "C", "C"], open: &[0], carbocycle: false },
    Ring { atoms: &["N", "C", "C", "N", "C", "C"], open: &[0, 3], carbocycle: false },
];

const LINKERS: &[&str] = &[
    "", "", "C", "CC", "C(=O)N", "NC(=O)", "O", "OC", "S(=O)(=O)N", "CN", "C(=O)", "N", "[C@@H](C)", "C=C", "CCO",
];
const CARBON_LINKERS: &[&str] = &["", "C", "CC", "C=C", "C(C)"];

const SUBSTITUENTS: &[&str] = &[
    "F", "Cl", "Br", "C", "C", "CC", "OC", "O", "N", "C#N", "C(F)(F)F", "C(=O)O", "C(=O)OC", "N(C)C", "[N+](=O)[O-]",
    "S(C)(=O)=O", "C(N)=O", "I", "C(C)C", "OC(F)F",
];
const CARBON_SUBSTITUENTS: &[&str] = &["C", "CC", "C(C)C", "C=C", "C#C"];

// Leading groups, written so that the atom bonded to the first ring comes
// last.
const PREFIXES: &[&str] = &["C", "CC", "CC(C)", "CO", "CN", "OC", "FC(F)(F)", "NC(=O)", "CS(=O)(=O)", "N#C", "Cl", "F"];
const CARBON_PREFIXES: &[&str] = &["C", "CC", "CC(C)", "C=C", "C#C"];

/// Seeded SMILES generator.
pub struct SmilesGenerator {
    rng: ChaCha8Rng,
}

impl SmilesGenerator {
    pub fn new(seed: u64) -> SmilesGenerator {
        SmilesGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Next molecule. About one in twenty is a hydrocarbon.
    pub fn next_smiles(&mut self) -> String {
        let hydrocarbon = self.rng.gen_bool(0.05);
        let n_rings = *[1, 2, 2, 3, 3, 4].choose(&mut self.rng).expect("non-empty");
        let mut out = String::new();
        let prefixed = self.rng.gen_bool(0.3);
        if prefixed {
            let pool = if hydrocarbon { CARBON_PREFIXES } else { PREFIXES };
            out.push_str(pool.choose(&mut self.rng).expect("non-empty"));
        }
        self.fragment(0, n_rings, prefixed, hydrocarbon, &mut out);
        out
    }

    pub fn generate(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.next_smiles()).collect()
    }

    fn substituent(&mut self, hydrocarbon: bool) -> &'static str {
        let pool = if hydrocarbon { CARBON_SUBSTITUENTS } else { SUBSTITUENTS };
        pool.choose(&mut self.rng).expect("non-empty")
    }

    fn fragment(&mut self, depth: usize, rings_left: usize, attached: bool, hydrocarbon: bool, out: &mut String) {
        let ring = loop {
            let r = RINGS.choose(&mut self.rng).expect("non-empty");
            if !hydrocarbon || r.carbocycle {
                break r;
            }
        };
        let label = depth + 1;
        // an attached ring bonds to its parent through position 0
        let mut slots: Vec<usize> = ring.open.iter().copied().filter(|&p| p != 0 || !attached).collect();
        slots.shuffle(&mut self.rng);
        let exit = (rings_left > 1).then(|| slots.pop()).flatten();
        let n_subs = self.rng.gen_range(0..=slots.len().min(3));
        let subs: Vec<usize> = slots.into_iter().take(n_subs).collect();

        for (i, atom) in ring.atoms.iter().enumerate() {
            out.push_str(atom);
            if i == 0 || i + 1 == ring.atoms.len() {
                out.push_str(&label.to_string());
            }
            if subs.contains(&i) {
                out.push('(');
                out.push_str(self.substituent(hydrocarbon));
                out.push(')');
            }
            if exit == Some(i) {
                out.push('(');
                let pool = if hydrocarbon { CARBON_LINKERS } else { LINKERS };
                out.push_str(pool.choose(&mut self.rng).expect("non-empty"));
                self.fragment(depth + 1, rings_left - 1, true, hydrocarbon, out);
                out.push(')');
            }
        }
    }
}

/// `n` molecules from a fresh generator.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<String> {
    SmilesGenerator::new(seed).generate(n)
}
