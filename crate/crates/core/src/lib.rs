//! Structural complexity descriptors, curriculum tiering and scheduling for
//! molecule corpora, plus the contrastive/distillation loss kernels used in
//! pre-training.

pub mod descriptors;
pub mod element;
pub mod fg;
pub mod losses;
pub mod mol_graph;
pub mod molecule;
pub mod pipeline;
pub mod scheduler;
pub mod smiles;
pub mod stats;
pub mod synth;
pub mod tiering;

pub use descriptors::{descriptor_record, DescriptorRecord};
pub use molecule::{Atom, Bond, BondOrder, BondStereo, Chirality, MolecularGraph};
pub use smiles::{parse_smiles, write_smiles, SmilesError};
