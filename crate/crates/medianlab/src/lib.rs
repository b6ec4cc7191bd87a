//! Window estimators and a Monte Carlo risk harness for signals and images
//! with edges.
//!
//! The crate bundles three denoisers over regular grids — the box linear
//! filter, the running median, and a two-scale (block-median then coarse
//! running-median) construction — together with the surrounding laboratory:
//!
//! * [`grid`] — sampled signals/images on `{1,…,n}^d` (d = 1, 2) and the
//!   clipped Euclidean smoothing window;
//! * [`noise`] — the Gaussian / Laplace / Cauchy / uniform noise bundle with
//!   tail-decay metadata, plus contaminated-median machinery;
//! * [`geometry`] — closed planar curves with curvature and chord-arc
//!   metadata, distance queries and near-edge index sets;
//! * [`phantoms`] — exactly evaluable piecewise-Lipschitz test functions
//!   (step, disc, square, seeded random instances);
//! * [`filters`] — the three estimators and an iterated-median chain;
//! * [`stats`] — order-statistic helpers: empirical quantiles, the scaled
//!   median distribution of an odd sample, tail-exponent formulas, and
//!   Monte Carlo moment estimators;
//! * [`risk`] — grid-averaged MSE estimation, width sweeps, bias/variance
//!   profiles, log–log rate fits and the low-noise crossover experiment;
//! * [`plot`] — minimal self-contained SVG line plots.
//!
//! Everything is deterministic given a seed: replicate streams are derived
//! with a splitmix-style mix (see [`rng`]), and all parallel reductions run
//! in a fixed order, so results are bit-identical for any thread count.

pub mod error;
pub mod filters;
pub mod geometry;
pub mod grid;
pub mod noise;
pub mod phantoms;
pub mod plot;
pub mod risk;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{Dim, GridSample};
pub use noise::NoiseModel;
