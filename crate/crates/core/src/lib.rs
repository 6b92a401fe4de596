//! Data-driven predictive control with 1-norm regularization.
//!
//! The crate is organized around the pipeline: recorded trajectories are
//! stacked into a data dictionary (`trajdata`), the dictionary's columns are
//! treated as atoms whose mirrored convex hull drives pruning and gauge
//! evaluation (`atomgeo`), the regularized control problem is assembled and
//! solved over the (possibly pruned) dictionary (`ocp`), and the predictive
//! behavior is made explicit as a piecewise-affine map over critical
//! regions (`predictor`). Plants, excitation, and closed-loop simulation
//! live in `simcore`. All optimization goes through the certified dense
//! LP/QP layer in `numsolve`.

pub mod jsonio;
pub mod numsolve;
pub mod tolerances;

pub use tolerances::{RankTolPolicy, ToleranceConfig};
