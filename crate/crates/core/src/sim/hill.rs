//! Hill tail-index estimators from order statistics.

use crate::data::DataMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct HillEstimate {
    pub k: usize,
    /// Left tail; `None` where the log ratios are not all well defined.
    pub left: Option<f64>,
    pub right: Option<f64>,
}

fn inverse_mean_log(ratios: impl Iterator<Item = f64>, k: usize) -> Option<f64> {
    let mut total = 0.0;
    for r in ratios {
        if !(r > 0.0 && r.is_finite()) {
            return None;
        }
        total += r.ln();
    }
    let mean = total / k as f64;
    (mean > 0.0).then(|| 1.0 / mean)
}

/// Left tail uses the `k` smallest values against the `(k+1)`-th smallest;
/// right tail the `k` largest against the `(k+1)`-th largest.
pub fn hill(series: &[f64], k: usize) -> Result<HillEstimate> {
    let n = series.len();
    if k < 1 || k >= n {
        return Err(Error::domain(format!("k must lie in [1, {}], got {k}", n.saturating_sub(1))));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("series contains non-finite values"));
    }
    let mut y = series.to_vec();
    y.sort_by(f64::total_cmp);
    let left = inverse_mean_log(y[..k].iter().map(|&v| v / y[k]), k);
    let right = inverse_mean_log(y[n - k..].iter().map(|&v| v / y[n - k - 1]), k);
    Ok(HillEstimate { k, left, right })
}

/// One estimate per column.
pub fn hill_columns(d: &DataMatrix, k: usize) -> Result<Vec<HillEstimate>> {
    (0..d.p()).map(|j| hill(&d.column(j).to_vec(), k)).collect()
}
