//! Synthesis of flow paths and priority assignments in feed-forward networks
//! under worst-case delay bounds.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`netmodel`] expands every flow into *virtual flows*, one per
//!    (candidate path, priority class), each gated by a selection variable.
//! 2. [`sfa`] derives each virtual flow's end-to-end delay bound as an
//!    expression in those variables, using the closed-form (min,plus)
//!    operations of [`minplus`] on token-bucket and rate-latency curves.
//! 3. [`adgraph`] compiles the expressions once into a tape that evaluates
//!    bounds and reverse-mode gradients quickly and deterministically.
//! 4. [`optim`] relaxes the selection variables to `[0, 1]`, runs
//!    Frank-Wolfe over the product of per-flow simplices, and rounds the
//!    result back to one path and priority per flow.
//!
//! [`objective`] assembles average, utility and max-tail objectives with
//! capacity and deadline penalties, [`gen`] produces random instances and
//! exhaustive optima, and [`cli`] carries the file formats and commands of
//! the `ncsynth` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adgraph;
pub mod cli;
pub mod curve;
pub mod error;
pub mod gen;
pub mod minplus;
pub mod netmodel;
pub mod objective;
pub mod optim;
pub mod sfa;

pub use curve::{RateLatency, TokenBucket};
pub use netmodel::{InstanceFile, ProblemInstance};
