//! Trajectory banks and the column-stacked data dictionary.
//!
//! Recorded experiments enter as a [`TrajectoryBank`] (input/output records
//! or state-space records) and are stacked into a [`DataDictionary`]: a
//! dense matrix whose columns are fixed-length trajectory windows,
//! row-partitioned into a past block `W`, a future-input block `U`, and a
//! future-output block `Y`. Downstream modules only consume the partitioned
//! abstraction, so the input/output and state-space settings share all
//! machinery; in the state-space setting the past block is the initial
//! state and the output block is the predicted state sequence.

mod csv_io;
mod json_io;

pub use csv_io::{read_trajectory_csv, write_trajectory_csv};

use crate::numsolve::numeric_rank;
use crate::tolerances::RankTolPolicy;
use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajDataError {
    #[error("trajectory bank contains no records")]
    EmptyBank,
    #[error("record {record} has {len} steps, needs at least {required}")]
    RecordTooShort {
        record: usize,
        len: usize,
        required: usize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("regressor window has {got} steps, expected {expected}")]
    WindowLength { expected: usize, got: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Io,
    StateSpace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Windowing {
    HankelSliding,
    OneColumnPerRecord,
}

/// One input/output experiment: `u` is `m x T`, `y` is `p x T`.
#[derive(Debug, Clone)]
pub struct IoRecord {
    pub u: DMatrix<f64>,
    pub y: DMatrix<f64>,
}

/// One state-space experiment: initial state, applied inputs (`m x T`), and
/// the resulting state sequence `x(1..T)` (`n x T`).
#[derive(Debug, Clone)]
pub struct StateRecord {
    pub x0: DVector<f64>,
    pub u: DMatrix<f64>,
    pub x: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub enum TrajectoryBank {
    Io {
        m: usize,
        p: usize,
        records: Vec<IoRecord>,
    },
    StateSpace {
        n: usize,
        m: usize,
        records: Vec<StateRecord>,
    },
}

impl TrajectoryBank {
    pub fn setting(&self) -> Setting {
        match self {
            TrajectoryBank::Io { .. } => Setting::Io,
            TrajectoryBank::StateSpace { .. } => Setting::StateSpace,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TrajectoryBank::Io { records, .. } => records.len(),
            TrajectoryBank::StateSpace { records, .. } => records.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<(), TrajDataError> {
        match self {
            TrajectoryBank::Io { m, p, records } => {
                for (i, r) in records.iter().enumerate() {
                    if r.u.nrows() != *m || r.y.nrows() != *p {
                        return Err(TrajDataError::Dimension(format!(
                            "record {i}: u has {} rows, y has {} rows, expected {m} and {p}",
                            r.u.nrows(),
                            r.y.nrows()
                        )));
                    }
                    if r.u.ncols() != r.y.ncols() {
                        return Err(TrajDataError::Dimension(format!(
                            "record {i}: u spans {} steps but y spans {}",
                            r.u.ncols(),
                            r.y.ncols()
                        )));
                    }
                    if r.u.ncols() == 0 {
                        return Err(TrajDataError::RecordTooShort {
                            record: i,
                            len: 0,
                            required: 1,
                        });
                    }
                }
                Ok(())
            }
            TrajectoryBank::StateSpace { n, m, records } => {
                for (i, r) in records.iter().enumerate() {
                    if r.x0.len() != *n || r.x.nrows() != *n || r.u.nrows() != *m {
                        return Err(TrajDataError::Dimension(format!(
                            "record {i}: state/input dimensions do not match n={n}, m={m}"
                        )));
                    }
                    if r.u.ncols() != r.x.ncols() {
                        return Err(TrajDataError::Dimension(format!(
                            "record {i}: u spans {} steps but x spans {}",
                            r.u.ncols(),
                            r.x.ncols()
                        )));
                    }
                    if r.u.ncols() == 0 {
                        return Err(TrajDataError::RecordTooShort {
                            record: i,
                            len: 0,
                            required: 1,
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// Origin of a dictionary column: which record it came from and the window
/// offset within that record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnOrigin {
    pub record: usize,
    pub offset: usize,
}

/// Report of the generalized excitation rank check.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GpeReport {
    pub holds: bool,
    pub rank: usize,
    pub required: usize,
    pub rows: usize,
}

impl GpeReport {
    /// Row surplus over the excitation requirement; positive surplus means
    /// exact data must be row-rank deficient.
    pub fn row_deficiency(&self) -> isize {
        self.rows as isize - self.required as isize
    }
}

#[derive(Debug, Clone)]
pub struct DataDictionary {
    matrix: DMatrix<f64>,
    setting: Setting,
    m: usize,
    p_out: usize,
    state_dim: Option<usize>,
    n_past: usize,
    n_future: usize,
    w_len: usize,
    u_len: usize,
    y_len: usize,
    provenance: Vec<ColumnOrigin>,
}

impl DataDictionary {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    /// Input channels per step.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Output channels per step (state dimension in the state-space setting).
    pub fn p_out(&self) -> usize {
        self.p_out
    }

    pub fn state_dim(&self) -> Option<usize> {
        self.state_dim
    }

    pub fn n_past(&self) -> usize {
        self.n_past
    }

    pub fn n_future(&self) -> usize {
        self.n_future
    }

    /// Window length `L` covered by one column.
    pub fn horizon_total(&self) -> usize {
        self.n_past + self.n_future
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn w_len(&self) -> usize {
        self.w_len
    }

    pub fn u_len(&self) -> usize {
        self.u_len
    }

    pub fn y_len(&self) -> usize {
        self.y_len
    }

    pub fn w_rows(&self) -> Range<usize> {
        0..self.w_len
    }

    pub fn u_rows(&self) -> Range<usize> {
        self.w_len..self.w_len + self.u_len
    }

    pub fn y_rows(&self) -> Range<usize> {
        self.w_len + self.u_len..self.n_rows()
    }

    /// Rows of `Z = (W' U')'`, the parameter-side block.
    pub fn z_rows(&self) -> Range<usize> {
        0..self.w_len + self.u_len
    }

    pub fn w_block(&self) -> DMatrixView<'_, f64> {
        self.matrix.view((0, 0), (self.w_len, self.n_cols()))
    }

    pub fn u_block(&self) -> DMatrixView<'_, f64> {
        self.matrix.view((self.w_len, 0), (self.u_len, self.n_cols()))
    }

    pub fn y_block(&self) -> DMatrixView<'_, f64> {
        self.matrix
            .view((self.w_len + self.u_len, 0), (self.y_len, self.n_cols()))
    }

    pub fn z_block(&self) -> DMatrixView<'_, f64> {
        self.matrix
            .view((0, 0), (self.w_len + self.u_len, self.n_cols()))
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.matrix.column(j).into_owned()
    }

    pub fn provenance(&self) -> &[ColumnOrigin] {
        &self.provenance
    }

    /// Restriction to a column subset, preserving provenance. Used to form
    /// the pruned dictionary from retained column indices.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self, TrajDataError> {
        let mut matrix = DMatrix::zeros(self.n_rows(), indices.len());
        let mut provenance = Vec::with_capacity(indices.len());
        for (j, &idx) in indices.iter().enumerate() {
            if idx >= self.n_cols() {
                return Err(TrajDataError::Dimension(format!(
                    "column index {idx} out of range ({} columns)",
                    self.n_cols()
                )));
            }
            matrix.column_mut(j).copy_from(&self.matrix.column(idx));
            provenance.push(self.provenance[idx]);
        }
        Ok(Self {
            matrix,
            provenance,
            ..self.clone()
        })
    }

    /// Rank check against the excitation requirement: `L m + n` in the
    /// input/output setting, `n + m N` in the state-space setting.
    pub fn check_gpe(&self, n: usize) -> GpeReport {
        self.check_gpe_with(n, RankTolPolicy::Default)
    }

    pub fn check_gpe_with(&self, n: usize, policy: RankTolPolicy) -> GpeReport {
        let required = match self.setting {
            Setting::Io => self.horizon_total() * self.m + n,
            Setting::StateSpace => n + self.m * self.n_future,
        };
        let rank = numeric_rank(&self.matrix, policy);
        GpeReport {
            holds: rank == required,
            rank,
            required,
            rows: self.n_rows(),
        }
    }

    pub fn check_full_row_rank(&self) -> bool {
        self.check_full_row_rank_with(RankTolPolicy::Default)
    }

    pub fn check_full_row_rank_with(&self, policy: RankTolPolicy) -> bool {
        numeric_rank(&self.matrix, policy) == self.n_rows()
    }

    /// Stack the most recent `n_past` steps of inputs and outputs in the
    /// `W`-block row layout (inputs first, then outputs, each time-major).
    pub fn extract_regressor(
        &self,
        u_recent: &DMatrix<f64>,
        y_recent: &DMatrix<f64>,
    ) -> Result<DVector<f64>, TrajDataError> {
        if self.setting != Setting::Io {
            return Err(TrajDataError::Dimension(
                "regressor extraction applies to the input/output setting; \
                 use the current state in the state-space setting"
                    .into(),
            ));
        }
        if u_recent.ncols() != self.n_past || y_recent.ncols() != self.n_past {
            return Err(TrajDataError::WindowLength {
                expected: self.n_past,
                got: u_recent.ncols().max(y_recent.ncols()),
            });
        }
        if u_recent.nrows() != self.m || y_recent.nrows() != self.p_out {
            return Err(TrajDataError::Dimension(format!(
                "window has {} input rows and {} output rows, expected {} and {}",
                u_recent.nrows(),
                y_recent.nrows(),
                self.m,
                self.p_out
            )));
        }
        Ok(stack_regressor(u_recent, y_recent))
    }

    pub fn to_json(&self) -> String {
        json_io::to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self, TrajDataError> {
        json_io::from_json(text)
    }
}

/// Stack `(u_past, y_past)` time-major into the regressor layout.
pub fn stack_regressor(u_recent: &DMatrix<f64>, y_recent: &DMatrix<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(u_recent.len() + y_recent.len());
    let mut at = 0;
    for k in 0..u_recent.ncols() {
        for i in 0..u_recent.nrows() {
            out[at] = u_recent[(i, k)];
            at += 1;
        }
    }
    for k in 0..y_recent.ncols() {
        for i in 0..y_recent.nrows() {
            out[at] = y_recent[(i, k)];
            at += 1;
        }
    }
    out
}

/// Build the data dictionary from a bank.
///
/// Each column is one length-`L` window of one record, stacked as
/// `(u_past, y_past, u_future, y_future)` in the input/output setting and
/// `(x_initial, u_future, x_future)` in the state-space setting.
pub fn build_dictionary(
    bank: &TrajectoryBank,
    n_past: usize,
    n_future: usize,
    windowing: Windowing,
) -> Result<DataDictionary, TrajDataError> {
    bank.validate()?;
    if bank.is_empty() {
        return Err(TrajDataError::EmptyBank);
    }
    if n_future == 0 {
        return Err(TrajDataError::Dimension(
            "prediction horizon must be at least 1".into(),
        ));
    }
    match bank {
        TrajectoryBank::Io { m, p, records } => {
            if n_past == 0 {
                return Err(TrajDataError::Dimension(
                    "the input/output setting needs a past window of at least 1 step".into(),
                ));
            }
            build_io(records, *m, *p, n_past, n_future, windowing)
        }
        TrajectoryBank::StateSpace { n, m, records } => {
            if n_past != 0 {
                return Err(TrajDataError::Dimension(
                    "the state-space setting replaces the past window by the initial \
                     state; pass n_past = 0"
                        .into(),
                ));
            }
            build_state(records, *n, *m, n_future, windowing)
        }
    }
}

fn window_offsets(
    record: usize,
    len: usize,
    window: usize,
    windowing: Windowing,
) -> Result<Vec<usize>, TrajDataError> {
    if len < window {
        return Err(TrajDataError::RecordTooShort {
            record,
            len,
            required: window,
        });
    }
    match windowing {
        Windowing::HankelSliding => Ok((0..=len - window).collect()),
        Windowing::OneColumnPerRecord => {
            if len != window {
                return Err(TrajDataError::Dimension(format!(
                    "record {record} has {len} steps; one-column windowing needs exactly {window}"
                )));
            }
            Ok(vec![0])
        }
    }
}

fn build_io(
    records: &[IoRecord],
    m: usize,
    p: usize,
    n_past: usize,
    n_future: usize,
    windowing: Windowing,
) -> Result<DataDictionary, TrajDataError> {
    let window = n_past + n_future;
    let rows = (m + p) * window;
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut provenance = Vec::new();
    for (ri, rec) in records.iter().enumerate() {
        for off in window_offsets(ri, rec.u.ncols(), window, windowing)? {
            let mut col = DVector::zeros(rows);
            let mut at = 0;
            for k in off..off + n_past {
                for i in 0..m {
                    col[at] = rec.u[(i, k)];
                    at += 1;
                }
            }
            for k in off..off + n_past {
                for i in 0..p {
                    col[at] = rec.y[(i, k)];
                    at += 1;
                }
            }
            for k in off + n_past..off + window {
                for i in 0..m {
                    col[at] = rec.u[(i, k)];
                    at += 1;
                }
            }
            for k in off + n_past..off + window {
                for i in 0..p {
                    col[at] = rec.y[(i, k)];
                    at += 1;
                }
            }
            columns.push(col);
            provenance.push(ColumnOrigin {
                record: ri,
                offset: off,
            });
        }
    }
    Ok(DataDictionary {
        matrix: DMatrix::from_columns(&columns),
        setting: Setting::Io,
        m,
        p_out: p,
        state_dim: None,
        n_past,
        n_future,
        w_len: (m + p) * n_past,
        u_len: m * n_future,
        y_len: p * n_future,
        provenance,
    })
}

fn build_state(
    records: &[StateRecord],
    n: usize,
    m: usize,
    n_future: usize,
    windowing: Windowing,
) -> Result<DataDictionary, TrajDataError> {
    let rows = n + (m + n) * n_future;
    let mut columns: Vec<DVector<f64>> = Vec::new();
    let mut provenance = Vec::new();
    for (ri, rec) in records.iter().enumerate() {
        let t = rec.u.ncols();
        // x_at(j) is the state at step j, with x_at(0) the initial state.
        let x_at = |j: usize| -> DVector<f64> {
            if j == 0 {
                rec.x0.clone()
            } else {
                rec.x.column(j - 1).into_owned()
            }
        };
        for off in window_offsets(ri, t, n_future, windowing)? {
            let mut col = DVector::zeros(rows);
            let mut at = 0;
            let xi = x_at(off);
            for i in 0..n {
                col[at] = xi[i];
                at += 1;
            }
            for k in off..off + n_future {
                for i in 0..m {
                    col[at] = rec.u[(i, k)];
                    at += 1;
                }
            }
            for k in off + 1..off + n_future + 1 {
                let xk = x_at(k);
                for i in 0..n {
                    col[at] = xk[i];
                    at += 1;
                }
            }
            columns.push(col);
            provenance.push(ColumnOrigin {
                record: ri,
                offset: off,
            });
        }
    }
    Ok(DataDictionary {
        matrix: DMatrix::from_columns(&columns),
        setting: Setting::StateSpace,
        m,
        p_out: n,
        state_dim: Some(n),
        n_past: 0,
        n_future,
        w_len: n,
        u_len: m * n_future,
        y_len: n * n_future,
        provenance,
    })
}

#[cfg(test)]
mod tests;
