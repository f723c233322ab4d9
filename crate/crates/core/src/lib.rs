//! Universal part-of-speech toolkit: the twelve-category universal tagset,
//! fine-to-universal tag mappings, a trigram HMM tagger with the
//! original/universal evaluation matrix, and DMV grammar induction over
//! universal tags.

pub mod dmv;
pub mod experiment;
pub mod hmm;
pub mod tagset;
pub mod treebank;

pub use tagset::{parse_mapping, validate_mapping, TagMapping, UniversalTag, ValidationReport};
pub use treebank::{Sentence, TagColumn, Token, TreebankError};
