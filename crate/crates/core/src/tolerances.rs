//! Central tolerance configuration shared by all modules.
//!
//! Every numerical acceptance threshold in the crate is drawn from one
//! [`ToleranceConfig`] so that solver certification, pruning, and the
//! structural verification suites tell a single consistent story.

use serde::{Deserialize, Serialize};

/// Threshold policy for numerical rank decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTolPolicy {
    /// `max(rows, cols) * machine_eps * sigma_max`.
    Default,
    /// Fixed absolute threshold on singular values.
    Absolute(f64),
    /// Threshold relative to the largest singular value.
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    /// KKT residual certification bound (scaled by `1 + |problem data|`).
    pub kkt: f64,
    /// Feasibility tolerance for constraint residuals and membership LPs.
    pub feas: f64,
    /// Duplicate-atom detection threshold.
    pub dup: f64,
    /// Cost/optimizer agreement bound for full-vs-pruned solves.
    pub thm1: f64,
    /// Agreement bound between the full-dictionary 1-norm LP and the
    /// scaled atomic norm.
    pub thm2: f64,
    /// Rank decision policy.
    pub rank: RankTolPolicy,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            kkt: 1e-7,
            feas: 1e-8,
            dup: 1e-10,
            thm1: 1e-6,
            thm2: 1e-7,
            rank: RankTolPolicy::Default,
        }
    }
}

impl ToleranceConfig {
    pub fn new() -> Self {
        Self::default()
    }
}
