use serde::Serialize;

use crate::flow::MonitorSeries;

use super::AnalysisError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnDeviation {
    pub column: String,
    /// Largest `|a − b| / max(|a|, |b|, floor)` over common samples.
    pub max_relative: f64,
    pub max_absolute: f64,
    pub floor: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantComparison {
    pub samples: usize,
    pub tolerance: f64,
    pub columns: Vec<ColumnDeviation>,
    pub passed: bool,
}

/// Sample-by-sample comparison of named columns of two runs with the same
/// sampling times. Each column carries an absolute scale `floor` below which
/// differences are measured relative to the floor instead of the values,
/// needed for quantities like `∫R dV` that vanish identically.
pub fn compare_invariants(
    a: &MonitorSeries,
    b: &MonitorSeries,
    columns: &[(&str, f64)],
    tolerance: f64,
) -> Result<InvariantComparison, AnalysisError> {
    let samples = a.len().min(b.len());
    let mut out = Vec::with_capacity(columns.len());
    for &(name, floor) in columns {
        let missing = || AnalysisError::MissingColumn(name.to_string());
        let (ka, kb) = (a.column_index(name).ok_or_else(missing)?, b.column_index(name).ok_or_else(missing)?);
        let (mut rel, mut abs) = (0.0f64, 0.0f64);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            let (x, y) = (ra[ka], rb[kb]);
            let d = (x - y).abs();
            let scale = x.abs().max(y.abs()).max(floor);
            abs = abs.max(d);
            rel = rel.max(if d == 0.0 { 0.0 } else { d / scale });
        }
        out.push(ColumnDeviation {
            column: name.to_string(),
            max_relative: rel,
            max_absolute: abs,
            floor,
            passed: rel <= tolerance,
        });
    }
    let passed = a.len() == b.len() && out.iter().all(|c| c.passed);
    Ok(InvariantComparison { samples, tolerance, columns: out, passed })
}
