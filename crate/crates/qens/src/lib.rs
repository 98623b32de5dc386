//! Instance-based quantum binary classifiers and their weighted ensembles,
//! simulated exactly on a dense statevector backend.
//!
//! The crate is layered bottom-up:
//!
//! * [`sim`]: gates, statevectors, measurement, and a dense reference path;
//! * [`encoding`]: feature scaling and amplitude encoding of training data;
//! * [`classifier`]: three interference classifiers plus closed-form oracles;
//! * [`ensemble`]: the data-selection circuit that runs 2^d subsetted
//!   copies of a classifier in superposition;
//! * [`stacking`]: logistic weight learning over branch outputs;
//! * [`harness`]: dataset ingestion, Monte Carlo cross-validation, and
//!   result emission for the `qens` binary.

pub mod classifier;
pub mod encoding;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod sim;
pub mod stacking;

pub use error::{Error, Result};
