//! Deterministic multi-scale interval collections for binary segmentation.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sn_test::MIN_WINDOW;

// Guards ceil/floor against representation error, e.g. sqrt(2)^2 > 2.
const EPS: f64 = 1e-9;

fn ceil_tol(x: f64) -> usize {
    (x - EPS).ceil().max(0.0) as usize
}

fn floor_tol(x: f64) -> usize {
    (x + EPS).floor().max(0.0) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Layer {
    pub k: usize,
    /// Number of intervals in the layer, before deduplication.
    pub count: usize,
    /// Common interval length.
    pub length: usize,
    pub shift: f64,
}

/// A closed, 1-based interval and the layer that first produced it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub struct SeededInterval {
    pub a: usize,
    pub b: usize,
    pub layer: usize,
}

impl SeededInterval {
    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SeededIntervalSet {
    pub alpha: f64,
    pub n: usize,
    pub intervals: Vec<SeededInterval>,
    pub layers: Vec<Layer>,
}

/// Layer `k` holds `2 ceil(alpha^{1-k}) - 1` intervals of length
/// `10 ceil(n alpha^{k-1} / 10)` (capped at `n`), evenly shifted across
/// `[1, n]`. Layers run to `ceil(log_{1/alpha} n)`; repeats and intervals
/// shorter than eight are dropped.
pub fn generate(n: usize, alpha: f64) -> Result<SeededIntervalSet> {
    if n < MIN_WINDOW {
        return Err(Error::domain(format!("n must be ≥ {MIN_WINDOW}, got {n}")));
    }
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [1/2, 1), got {alpha}")));
    }
    let depth = ceil_tol((n as f64).ln() / (1.0 / alpha).ln()).max(1);
    let mut layers = Vec::with_capacity(depth);
    let mut intervals = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for k in 1..=depth {
        let decay = alpha.powi(k as i32 - 1);
        let count = 2 * ceil_tol(1.0 / decay) - 1;
        let length = (10 * ceil_tol(n as f64 * decay / 10.0)).min(n);
        let shift = if count == 1 { 0.0 } else { (n - length) as f64 / (count - 1) as f64 };
        layers.push(Layer { k, count, length, shift });
        if length < MIN_WINDOW {
            continue;
        }
        for i in 0..count {
            let a = 1 + floor_tol(i as f64 * shift);
            let b = a + length - 1;
            if seen.insert((a, b)) {
                intervals.push(SeededInterval { a, b, layer: k });
            }
        }
    }
    Ok(SeededIntervalSet { alpha, n, intervals, layers })
}

impl SeededIntervalSet {
    /// Intervals lying inside `[a, b]`, in generation order.
    pub fn within(&self, a: usize, b: usize) -> impl Iterator<Item = &SeededInterval> {
        self.intervals.iter().filter(move |iv| iv.a >= a && iv.b <= b)
    }

    /// Distinct interval lengths.
    pub fn lengths(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.intervals.iter().map(SeededInterval::len).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `a,b,layer` rows with a header.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(["a", "b", "layer"]).map_err(io)?;
        for iv in &self.intervals {
            out.serialize((iv.a, iv.b, iv.layer)).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}
