use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Method;
use crate::descent::IterationRecord;
use crate::error::Result;

/// One row of `trace_<method>_<seed>.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub method: Method,
    pub seed: u64,
    pub outer_iteration: usize,
    pub wall_time_seconds: f64,
    pub residual_norm_squared: f64,
    pub spike_count: usize,
    pub active_fraction: f64,
}

impl TraceRow {
    pub fn from_record(method: Method, seed: u64, r: &IterationRecord) -> Self {
        Self {
            method,
            seed,
            outer_iteration: r.iteration,
            wall_time_seconds: r.wall_time_seconds,
            residual_norm_squared: r.residual_norm_squared,
            spike_count: r.spike_count,
            active_fraction: r.active_fraction,
        }
    }
}

pub fn trace_rows(method: Method, seed: u64, records: &[IterationRecord]) -> Vec<TraceRow> {
    records
        .iter()
        .map(|r| TraceRow::from_record(method, seed, r))
        .collect()
}

pub fn write_rows<T: Serialize, W: Write>(rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_rows<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    write_rows(rows, std::fs::File::create(path)?)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Indices `n` where the residual went up from row `n - 1` to row `n` by more than
/// `rel_tol` (relative).
pub fn residual_jumps(rows: &[TraceRow], rel_tol: f64) -> Vec<usize> {
    rows.windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].residual_norm_squared > w[0].residual_norm_squared * (1.0 + rel_tol))
        .map(|(n, _)| n + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(it: usize, res: f64, count: usize) -> TraceRow {
        TraceRow {
            method: Method::Pgd,
            seed: 1,
            outer_iteration: it,
            wall_time_seconds: it as f64 * 0.1,
            residual_norm_squared: res,
            spike_count: count,
            active_fraction: 1.0,
        }
    }

    #[test]
    fn csv_header_and_round_trip() {
        let rows = vec![row(0, 2.0, 5), row(1, 1.5, 4)];
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "method,seed,outer_iteration,wall_time_seconds,residual_norm_squared,spike_count,active_fraction\npgd,1,0,"
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        save_rows(&rows, &path).unwrap();
        assert_eq!(load_trace(&path).unwrap(), rows);
    }

    #[test]
    fn jumps_are_detected() {
        let rows = vec![
            row(0, 3.0, 5),
            row(1, 2.0, 5),
            row(2, 2.5, 4),
            row(3, 1.0, 4),
        ];
        assert_eq!(residual_jumps(&rows, 1e-12), vec![2]);
    }
}
