//! Calderón–Zygmund decompositions on dyadic grids, Littlewood–Paley filter
//! banks, and the one- and two-dimensional paraproducts built from them.
//!
//! The crate works on uniformly sampled functions. [`grid`] holds the sample
//! containers, [`czd`] the dyadic stopping-time decomposition and its
//! fiber-wise version, [`filters`] the mother filters and scale ladder,
//! [`operators`] the paraproducts, duals and maximal function, [`norms`] the
//! discrete Lebesgue and weak-Lebesgue norms, and [`harness`] the experiment
//! drivers used by the `fibercz` binary.

pub mod czd;
pub mod error;
pub mod filters;
pub mod generate;
pub mod grid;
pub mod harness;
pub mod io;
pub mod norms;
pub mod operators;

pub use czd::{
    cz_decompose_1d, exceptional_set, fiberwise_decompose, verify_cz_invariants, CZDecomposition,
    CzReport, ExceptionalSet, FiberDecomposition,
};
pub use error::{Error, Result};
pub use filters::{dilate, kernel_regularity_check, FilterKind, MotherFilter, ScaleLadder};
pub use grid::{
    double_interval, lebesgue_measure, DenseFunction2D, DyadicInterval, Grid1D, SampledFunction1D,
    TensorFunction2D, TensorTerm,
};
pub use norms::{exponent_algebra, lp_norm, superlevel_measure, weak_lp_quasinorm, ExponentTriple, WeakNormEstimate};
pub use operators::{
    convolve_axis, dual_t1, dual_t2, h_majorant, hl_maximal_axis, paraproduct_pi, paraproduct_t,
    paraproduct_t_fiberwise, Axis, ParaproductConfig,
};
