//! Toolkit for studying the precision/error trade-off of floating-point
//! micro-benchmarks and for training surrogate models of that trade-off.
//!
//! The pipeline has three stages:
//!
//! 1. [`flexnum`] emulates reduced-precision floating-point arithmetic and
//!    [`benchmarks`] runs a catalog of micro-benchmarks under per-variable
//!    precision assignments, measuring the output error against the
//!    maximum-precision reference.
//! 2. [`sampling`] and [`dataset`] turn precision configurations sampled by
//!    Latin Hypercube into learning-ready datasets (clamped, input-averaged,
//!    negative-log targets).
//! 3. [`nn`] trains surrogate models of the precision→error map, with three
//!    ways of injecting structural knowledge from the benchmark's
//!    [`graph::DependencyGraph`]: extra per-assignment features, a
//!    graph-convolutional topology, and a monotonicity-regularized loss with
//!    unlabeled data augmentation. [`harness`] orchestrates the experiments.

pub mod benchmarks;
pub mod dataset;
pub mod error;
pub mod flexnum;
pub mod graph;
pub mod harness;
pub mod nn;
pub mod sampling;

pub use error::{Error, Result};
