//! Hierarchical latent tree analysis for topic detection.
//!
//! Binary document-term data is modelled by a tree of binary latent
//! variables over the word variables. Structure is learned bottom-up one
//! level at a time, with parameters estimated by progressive EM on small
//! sub-models, and each latent variable is read off as a topic.

pub mod corpus;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod ltm;
pub mod seed;
pub mod structure;
pub mod topics;

pub use corpus::{BinaryDataset, Bits, Vocabulary};
pub use error::{Error, Result};
pub use estimation::{em, EmOptions, FreeParameterSet};
pub use ltm::{ConditionalTable, Island, LatentTreeModel, Variable};
pub use structure::{pem_hlta, HltaOptions};
pub use topics::{coherence, extract_topics, TopicHierarchy};
