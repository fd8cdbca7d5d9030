//! Learning overlapping community memberships and topic-word distributions
//! from sparse graphs and document corpora by the method of moments: build
//! second-order moments in low-rank factored form, whiten with randomized
//! projections, decompose the implicit third-order moment tensor by
//! stochastic gradient descent, and validate estimates statistically.

pub mod error;
pub mod linalg;

pub mod graph_io;
pub mod textio;
pub mod synthgen;

pub mod moments;
pub mod whitening;
pub mod stgd;
pub mod postprocess;
pub mod validation;
pub mod pipeline;
pub mod cli;
pub mod config;

pub use error::{Error, Result};
