//! Toolkit for building a biomedical knowledge graph from text with distant
//! supervision.
//!
//! The pipeline annotates a corpus with a seed dictionary by forward maximum
//! matching, samples NER training sentences, cleans discovered terms, groups
//! synonyms into concepts by embedding similarity and recursive Ratio-Cut
//! bipartition, assigns semantic types, builds multi-instance relation
//! extraction bags and trains a bag-max logistic model over them, filters
//! machine translations by back-translation similarity, and writes a
//! versioned, provenance-tracked dataset.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision used by the pipeline.

pub mod cluster;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod fmm;
pub mod kg_store;
pub mod lexicon;
pub mod ner;
pub mod pipeline;
pub mod relation;
pub mod scalar;
pub mod semtype;
pub mod stats;
pub mod translation;
pub mod util;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EmbeddingTableF32 = embedding::EmbeddingTable<f32>;
pub type EmbeddingTableF64 = embedding::EmbeddingTable<f64>;
pub type ClusterParamsF64 = cluster::ClusterParams<f64>;
pub type ReModelF64 = relation::ReModel<f64>;
pub type FilterThresholdsF64 = translation::FilterThresholds<f64>;
