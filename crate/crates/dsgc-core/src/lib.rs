//! Signed-graph clustering toolkit.
//!
//! The crate covers the full pipeline: synthetic signed stochastic
//! block models and correlation-based ingestion ([`graph`]), walk-based
//! sign refinement and density augmentation ([`rewire`]), a trainable
//! signed graph encoder with an analytic balanced-cut gradient
//! ([`encoder`], [`cluster`]), classical spectral baselines
//! ([`spectral`]), and evaluation metrics ([`metrics`]).
//!
//! Everything numeric is generic over [`scalar::Scalar`] (`f32` or
//! `f64`); the aliases below fix `f64`, which the binaries use.

pub mod cluster;
pub mod dense;
pub mod eigen;
pub mod encoder;
pub mod error;
pub mod graph;
pub mod metrics;
pub mod rewire;
pub mod scalar;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};

/// Default-precision aliases.
pub type Matrix = dense::DenseMatrix<f64>;
pub type Sparse = sparse::SparseMatrix<f64>;
pub type Graph = graph::SignedGraph<f64>;
pub type Channels = rewire::RewiredChannels<f64>;
pub type Encoder = encoder::EncoderParams<f64>;
pub type Head = cluster::HeadParams<f64>;
pub type Assignment = cluster::AssignmentMatrix<f64>;
pub type Training = cluster::TrainOutput<f64>;
