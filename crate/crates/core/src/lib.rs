//! Learning continuous-time Bayesian networks from partially observed
//! trajectories.
//!
//! The crate is organised bottom-up:
//!
//! - [`markov`]: intensity matrices, the matrix exponential, transient
//!   distributions and exact trajectory sampling for a flat Markov process.
//! - [`evidence`]: subsystem evidence, restricted intensity matrices and the
//!   occlusion protocol used to build partially observed datasets.
//! - [`inference`]: exact forward-backward smoothing and expected sufficient
//!   statistics (dwell times and transition counts).
//! - [`network`]: the factored model (conditional intensity matrices over a
//!   possibly cyclic graph), amalgamation into a joint process and the
//!   per-family statistics and likelihood.
//! - [`learning`]: EM, BIC scoring, per-node structure search and structural EM.
//! - [`phase`]: phase-type duration distributions and phase expansion of
//!   network variables.
//! - [`io`] and [`cli`]: JSON model and trajectory files and the command-line
//!   workflows built on them.
//! - [`experiment`]: helpers for synthetic sample/occlude/fit/score studies.

pub mod cli;
pub mod error;
pub mod evidence;
pub mod experiment;
pub mod inference;
pub mod io;
pub mod learning;
pub mod markov;
pub mod network;
pub mod phase;
mod sum;

pub use error::{Error, Result};
