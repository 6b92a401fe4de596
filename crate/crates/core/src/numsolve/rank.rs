//! SVD-based numerical rank.

use crate::tolerances::RankTolPolicy;
use nalgebra::DMatrix;

/// Count of singular values above the policy threshold.
///
/// The default threshold is `max(rows, cols) * machine_eps * sigma_max`.
pub fn numeric_rank(matrix: &DMatrix<f64>, policy: RankTolPolicy) -> usize {
    assert!(
        matrix.nrows() > 0 && matrix.ncols() > 0,
        "numeric_rank requires a nonempty matrix"
    );
    let sv = matrix.clone().singular_values();
    let sigma_max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = match policy {
        RankTolPolicy::Default => {
            (matrix.nrows().max(matrix.ncols()) as f64) * f64::EPSILON * sigma_max
        }
        RankTolPolicy::Absolute(t) => t,
        RankTolPolicy::Relative(t) => t * sigma_max,
    };
    sv.iter().filter(|&&s| s > threshold).count()
}
