//! Trajectory CSV interchange.
//!
//! Input/output data: header `record,k,u1..um,y1..yp`, one row per time
//! step, rows sorted by `(record, k)` with `k` starting at 0 and no gaps.
//!
//! State-space data: header `record,k,x1..xn,u1..um`. A record with rows
//! `k = 0..T` defines the initial state `x(0)`, inputs `u(0..T-1)`, and
//! states `x(1..T)`; the input cells of the final row are placeholders and
//! are ignored.

use super::{IoRecord, StateRecord, TrajDataError, TrajectoryBank};
use nalgebra::{DMatrix, DVector};
use std::io::{Read, Write};

fn csv_err<E: std::fmt::Display>(e: E) -> TrajDataError {
    TrajDataError::Csv(e.to_string())
}

struct Header {
    is_state: bool,
    first_dim: usize,
    second_dim: usize,
}

fn parse_header(headers: &csv::StringRecord) -> Result<Header, TrajDataError> {
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 3 || names[0] != "record" || names[1] != "k" {
        return Err(TrajDataError::Csv(
            "header must start with 'record,k'".into(),
        ));
    }
    let signal_prefix = |s: &str| -> Option<char> {
        let c = s.chars().next()?;
        matches!(c, 'u' | 'y' | 'x').then_some(c)
    };
    let first = signal_prefix(names[2]).ok_or_else(|| {
        TrajDataError::Csv(format!("unrecognized signal column '{}'", names[2]))
    })?;
    let (lead, trail, is_state) = match first {
        'u' => ('u', 'y', false),
        'x' => ('x', 'u', true),
        _ => {
            return Err(TrajDataError::Csv(
                "signal columns must start with the inputs (io) or states (state-space)".into(),
            ))
        }
    };
    let mut first_dim = 0;
    let mut idx = 2;
    while idx < names.len() && names[idx].starts_with(lead) {
        first_dim += 1;
        idx += 1;
    }
    let mut second_dim = 0;
    while idx < names.len() && names[idx].starts_with(trail) {
        second_dim += 1;
        idx += 1;
    }
    if idx != names.len() {
        return Err(TrajDataError::Csv(format!(
            "unexpected trailing column '{}'",
            names[idx]
        )));
    }
    Ok(Header {
        is_state,
        first_dim,
        second_dim,
    })
}

struct RawRecord {
    rows: Vec<Vec<f64>>,
}

pub fn read_trajectory_csv<R: Read>(reader: R) -> Result<TrajectoryBank, TrajDataError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(reader);
    let header = parse_header(rdr.headers().map_err(csv_err)?)?;
    let width = header.first_dim + header.second_dim;

    let mut raw: Vec<RawRecord> = Vec::new();
    let mut current_id: Option<u64> = None;
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        if row.len() != width + 2 {
            return Err(TrajDataError::Csv(format!(
                "row has {} fields, expected {}",
                row.len(),
                width + 2
            )));
        }
        let rec_id: u64 = row[0].parse().map_err(csv_err)?;
        let k: u64 = row[1].parse().map_err(csv_err)?;
        match current_id {
            Some(id) if rec_id == id => {}
            Some(id) if rec_id > id => {
                current_id = Some(rec_id);
                raw.push(RawRecord { rows: Vec::new() });
            }
            None => {
                current_id = Some(rec_id);
                raw.push(RawRecord { rows: Vec::new() });
            }
            _ => {
                return Err(TrajDataError::Csv(format!(
                    "records must be grouped in ascending order (saw {rec_id} after {current_id:?})"
                )));
            }
        }
        let rec = raw.last_mut().expect("a record is open");
        if k as usize != rec.rows.len() {
            return Err(TrajDataError::Csv(format!(
                "record {rec_id} has a gap: expected k={}, found k={k}",
                rec.rows.len()
            )));
        }
        let values: Result<Vec<f64>, _> = (2..row.len()).map(|i| row[i].parse::<f64>()).collect();
        rec.rows.push(values.map_err(csv_err)?);
    }
    if raw.is_empty() {
        return Err(TrajDataError::EmptyBank);
    }

    if header.is_state {
        let n = header.first_dim;
        let m = header.second_dim;
        let mut records = Vec::with_capacity(raw.len());
        for (ri, rec) in raw.iter().enumerate() {
            if rec.rows.len() < 2 {
                return Err(TrajDataError::RecordTooShort {
                    record: ri,
                    len: rec.rows.len().saturating_sub(1),
                    required: 1,
                });
            }
            let t = rec.rows.len() - 1;
            let x0 = DVector::from_fn(n, |i, _| rec.rows[0][i]);
            let u = DMatrix::from_fn(m, t, |i, k| rec.rows[k][n + i]);
            let x = DMatrix::from_fn(n, t, |i, k| rec.rows[k + 1][i]);
            records.push(StateRecord { x0, u, x });
        }
        Ok(TrajectoryBank::StateSpace { n, m, records })
    } else {
        let m = header.first_dim;
        let p = header.second_dim;
        let mut records = Vec::with_capacity(raw.len());
        for rec in &raw {
            let t = rec.rows.len();
            let u = DMatrix::from_fn(m, t, |i, k| rec.rows[k][i]);
            let y = DMatrix::from_fn(p, t, |i, k| rec.rows[k][m + i]);
            records.push(IoRecord { u, y });
        }
        Ok(TrajectoryBank::Io { m, p, records })
    }
}

pub fn write_trajectory_csv<W: Write>(
    bank: &TrajectoryBank,
    writer: W,
) -> Result<(), TrajDataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    match bank {
        TrajectoryBank::Io { m, p, records } => {
            let mut header = vec!["record".to_string(), "k".to_string()];
            header.extend((1..=*m).map(|i| format!("u{i}")));
            header.extend((1..=*p).map(|i| format!("y{i}")));
            wtr.write_record(&header).map_err(csv_err)?;
            for (ri, rec) in records.iter().enumerate() {
                for k in 0..rec.u.ncols() {
                    let mut row = vec![ri.to_string(), k.to_string()];
                    row.extend((0..*m).map(|i| format!("{}", rec.u[(i, k)])));
                    row.extend((0..*p).map(|i| format!("{}", rec.y[(i, k)])));
                    wtr.write_record(&row).map_err(csv_err)?;
                }
            }
        }
        TrajectoryBank::StateSpace { n, m, records } => {
            let mut header = vec!["record".to_string(), "k".to_string()];
            header.extend((1..=*n).map(|i| format!("x{i}")));
            header.extend((1..=*m).map(|i| format!("u{i}")));
            wtr.write_record(&header).map_err(csv_err)?;
            for (ri, rec) in records.iter().enumerate() {
                let t = rec.u.ncols();
                for k in 0..=t {
                    let mut row = vec![ri.to_string(), k.to_string()];
                    if k == 0 {
                        row.extend((0..*n).map(|i| format!("{}", rec.x0[i])));
                    } else {
                        row.extend((0..*n).map(|i| format!("{}", rec.x[(i, k - 1)])));
                    }
                    if k < t {
                        row.extend((0..*m).map(|i| format!("{}", rec.u[(i, k)])));
                    } else {
                        // Placeholder input cells on the final state row.
                        row.extend((0..*m).map(|_| "0".to_string()));
                    }
                    wtr.write_record(&row).map_err(csv_err)?;
                }
            }
        }
    }
    wtr.flush().map_err(csv_err)?;
    Ok(())
}
