//! Support vector machines trained as QUBO problems.
//!
//! The dual SVM problem is encoded into a QUBO ([`svm`]) and solved by
//! exhaustive search ([`qubo`]), simulated annealing ([`anneal`]) or a
//! simulated neutral-atom annealer ([`rydberg`], with [`embedding`] choosing
//! the atom layout). Every sampled bitstring decodes to a classifier, and the
//! resulting model distribution can be ensembled ([`ensemble`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod anneal;
pub mod baselines;
pub mod data;
pub mod embedding;
pub mod ensemble;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod qubo;
pub mod rydberg;
pub mod solver;
pub mod svm;

pub use error::{Error, Result};
