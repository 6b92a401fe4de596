//! Data dictionary JSON export and import.

use super::{ColumnOrigin, DataDictionary, Setting, TrajDataError};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimsDto {
    m: usize,
    /// Output channels per step (state dimension in the state-space setting).
    p: usize,
    /// Known system order, when available.
    n: Option<usize>,
    n_past: usize,
    n_future: usize,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PartitionDto {
    w: [usize; 2],
    u: [usize; 2],
    y: [usize; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DictionaryDto {
    setting: Setting,
    dims: DimsDto,
    row_partition: PartitionDto,
    /// Column-major payload: one inner array per dictionary column.
    columns: Vec<Vec<f64>>,
    provenance: Vec<ColumnOrigin>,
}

pub(super) fn to_json(dict: &DataDictionary) -> String {
    let dto = DictionaryDto {
        setting: dict.setting,
        dims: DimsDto {
            m: dict.m,
            p: dict.p_out,
            n: dict.state_dim,
            n_past: dict.n_past,
            n_future: dict.n_future,
            rows: dict.n_rows(),
            cols: dict.n_cols(),
        },
        row_partition: PartitionDto {
            w: [dict.w_rows().start, dict.w_rows().end],
            u: [dict.u_rows().start, dict.u_rows().end],
            y: [dict.y_rows().start, dict.y_rows().end],
        },
        columns: (0..dict.n_cols())
            .map(|j| dict.matrix.column(j).iter().copied().collect())
            .collect(),
        provenance: dict.provenance.clone(),
    };
    serde_json::to_string_pretty(&dto).expect("serialize dictionary")
}

pub(super) fn from_json(text: &str) -> Result<DataDictionary, TrajDataError> {
    let dto: DictionaryDto =
        serde_json::from_str(text).map_err(|e| TrajDataError::Json(e.to_string()))?;
    let rows = dto.dims.rows;
    let cols = dto.dims.cols;
    if dto.columns.len() != cols {
        return Err(TrajDataError::Json(format!(
            "payload has {} columns, dims say {cols}",
            dto.columns.len()
        )));
    }
    if dto.provenance.len() != cols {
        return Err(TrajDataError::Json(format!(
            "provenance covers {} columns, dims say {cols}",
            dto.provenance.len()
        )));
    }
    let w_len = dto.row_partition.w[1] - dto.row_partition.w[0];
    let u_len = dto.row_partition.u[1] - dto.row_partition.u[0];
    let y_len = dto.row_partition.y[1] - dto.row_partition.y[0];
    if dto.row_partition.w[0] != 0
        || dto.row_partition.u[0] != dto.row_partition.w[1]
        || dto.row_partition.y[0] != dto.row_partition.u[1]
        || dto.row_partition.y[1] != rows
    {
        return Err(TrajDataError::Json(
            "row partition must tile the rows as w|u|y".into(),
        ));
    }
    let mut matrix = DMatrix::zeros(rows, cols);
    for (j, col) in dto.columns.iter().enumerate() {
        if col.len() != rows {
            return Err(TrajDataError::Json(format!(
                "column {j} has {} entries, expected {rows}",
                col.len()
            )));
        }
        for (i, &v) in col.iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    Ok(DataDictionary {
        matrix,
        setting: dto.setting,
        m: dto.dims.m,
        p_out: dto.dims.p,
        state_dim: dto.dims.n,
        n_past: dto.dims.n_past,
        n_future: dto.dims.n_future,
        w_len,
        u_len,
        y_len,
        provenance: dto.provenance,
    })
}
