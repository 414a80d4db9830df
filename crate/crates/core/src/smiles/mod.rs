//! SMILES reading and writing.

mod parser;
mod writer;

pub use parser::{parse_bytes, parse_smiles, SmilesError};
pub use writer::{write_smiles, write_smiles_with_order};
