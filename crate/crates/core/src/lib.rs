//! Minimum sum-of-squares clustering for large datasets.
//!
//! The crate implements Lloyd's K-means together with the big-data variants
//! that build on it (sampling, chunking, streaming, coresets, triangle
//! inequality pruning, density-based seeding and representative-point
//! hierarchical clustering), plus an instrumented benchmark harness that
//! reports relative error, wall time and distance-evaluation counts, and the
//! LIMA simplicity/dominance comparison.
//!
//! Every algorithm takes a [`Dataset`], a cluster count and a seed, counts its
//! squared-distance evaluations on a shared [`DistanceCounter`], and returns a
//! [`ClusteringResult`] whose objective is the full-dataset sum of squares.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accel;
pub mod algorithm;
pub mod bdcsm;
pub mod bench;
pub mod bigmeans;
pub mod config;
pub mod coreset;
pub mod cure;
pub mod dataset;
pub mod density;
pub mod error;
pub mod init;
pub mod io;
pub mod kernel;
pub mod lima;
pub mod lloyd;
pub mod result;
pub mod rng;
pub mod stream;

pub use algorithm::AlgorithmSpec;
pub use dataset::{Assignment, Centroids, Dataset};
pub use error::{Error, Result};
pub use kernel::{assign_points, objective, relative_error, squared_distance, update_centroids, DistanceCounter};
pub use lloyd::{EmptyPolicy, StopRule};
pub use result::{ClusteringResult, RunFlag, Termination};
