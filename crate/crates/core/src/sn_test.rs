//! Self-normalized scan statistics over a window `[a, b]`.
//!
//! For every admissible split `k in {a+3, ..., b-4}` the ratio
//! `D(k; a, b)^2 / W_L(k; a, b)` is formed with `L = b - a + 1` and
//!
//! ```text
//! W_L(k; a, b) = (1/L) * ( sum_{t=a+1}^{k-2} D(t; a, k)^2
//!                        + sum_{t=k+2}^{b-2} D(t; k+1, b)^2 )
//! ```
//!
//! The statistic is the largest ratio and the location estimate is the
//! smallest `k` attaining it.

use crate::data::{DataMatrix, SegmentTriple};
use crate::error::{Error, Result};
use crate::family::WindowFamily;
use crate::sign_kernel::{self, PairwiseSignCache, StatKind};

/// Smallest window the scan is defined on.
pub const MIN_WINDOW: usize = 8;

/// Anything that can evaluate `D(k; l, m)` (1-based triple).
pub trait DProvider {
    fn kind(&self) -> StatKind;
    fn d(&self, t: SegmentTriple) -> Result<f64>;
}

/// Brute-force provider that enumerates the quadruple sum.
pub struct OracleD<'a> {
    pub data: &'a DataMatrix,
    pub kind: StatKind,
}

impl DProvider for OracleD<'_> {
    fn kind(&self) -> StatKind {
        self.kind
    }
    fn d(&self, t: SegmentTriple) -> Result<f64> {
        match self.kind {
            StatKind::Sign => sign_kernel::d_sign_oracle(self.data, t).map(|v| v.value),
            StatKind::Mean => sign_kernel::d_mean_oracle(self.data, t).map(|v| v.value),
        }
    }
}

/// Per-triple fast provider (identity for signs, pair sums for means).
pub enum FastD<'a> {
    Sign(&'a PairwiseSignCache),
    Mean(&'a DataMatrix),
}

impl DProvider for FastD<'_> {
    fn kind(&self) -> StatKind {
        match self {
            FastD::Sign(_) => StatKind::Sign,
            FastD::Mean(_) => StatKind::Mean,
        }
    }
    fn d(&self, t: SegmentTriple) -> Result<f64> {
        match self {
            FastD::Sign(c) => sign_kernel::d_sign_fast(c, t).map(|v| v.value),
            FastD::Mean(d) => sign_kernel::d_mean(d, t).map(|v| v.value),
        }
    }
}

fn check_window(a: usize, b: usize) -> Result<()> {
    if a < 1 || b < a || b - a + 1 < MIN_WINDOW {
        return Err(Error::IntervalTooShort {
            a,
            b,
            len: (b + 1).saturating_sub(a),
        });
    }
    Ok(())
}

/// `W_L(k; a, b)` evaluated through an arbitrary provider.
pub fn self_normalizer(dstats: &dyn DProvider, k: usize, a: usize, b: usize) -> Result<f64> {
    check_window(a, b)?;
    if k < a + 3 || k + 4 > b {
        return Err(Error::domain(format!(
            "split {k} outside the admissible range {}..={} of [{a}, {b}]",
            a + 3,
            b - 4
        )));
    }
    let mut total = 0.0;
    for t in a + 1..=k - 2 {
        total += dstats.d(SegmentTriple::new(t, a, k))?.powi(2);
    }
    for t in k + 2..=b - 2 {
        total += dstats.d(SegmentTriple::new(t, k + 1, b))?.powi(2);
    }
    Ok(total / (b - a + 1) as f64)
}

/// Scan result over one window.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SnStatResult {
    /// Largest self-normalized ratio.
    pub stat: f64,
    /// Smallest split attaining `stat` (1-based, last index of the left block).
    pub argmax_k: usize,
    /// Ratio for each `k = a+3, ..., b-4`.
    pub ratios: Vec<f64>,
    /// `D(k; a, b)` for the same splits.
    pub d_values: Vec<f64>,
    /// `W_L(k; a, b)` for the same splits.
    pub normalizers: Vec<f64>,
    pub kind: StatKind,
    pub interval: (usize, usize),
    /// Set when some normalizer vanished with a nonzero numerator.
    pub degenerate: bool,
}

impl SnStatResult {
    /// Ratio at split `k` (1-based).
    pub fn ratio_at(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.interval.0 + 3).and_then(|i| self.ratios.get(i).copied())
    }
}

/// Builds the scan from a window family covering `[a, b]`.
pub fn scan_family(family: &WindowFamily, kind: StatKind, a: usize, b: usize) -> SnStatResult {
    let len = family.len();
    debug_assert_eq!(len, b - a + 1);
    let norm = len as f64;
    let count = len - 7;
    let mut ratios = Vec::with_capacity(count);
    let mut d_values = Vec::with_capacity(count);
    let mut normalizers = Vec::with_capacity(count);
    let mut degenerate = false;
    for k in 3..=len - 5 {
        let num = family.left(k, len - 1);
        let left: f64 = (1..=k - 2).map(|t| family.left(t, k).powi(2)).sum();
        let right: f64 = (k + 2..=len - 3).map(|t| family.right(k + 1, t).powi(2)).sum();
        let w = (left + right) / norm;
        let ratio = if w > 0.0 {
            num * num / w
        } else if num == 0.0 {
            0.0
        } else {
            degenerate = true;
            f64::INFINITY
        };
        ratios.push(ratio);
        d_values.push(num);
        normalizers.push(w);
    }
    let (best, stat) = ratios
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    SnStatResult {
        stat,
        argmax_k: a + 3 + best,
        ratios,
        d_values,
        normalizers,
        kind,
        interval: (a, b),
        degenerate,
    }
}

/// Self-normalized statistic `T(a, b)` on a window of `d` (1-based, inclusive).
pub fn sn_statistic(d: &DataMatrix, a: usize, b: usize, kind: StatKind) -> Result<SnStatResult> {
    check_window(a, b)?;
    if b > d.n() {
        return Err(Error::domain(format!("window end {b} exceeds n = {}", d.n())));
    }
    let family = WindowFamily::build(kind, d, None, a - 1, b - a + 1);
    Ok(scan_family(&family, kind, a, b))
}

/// Scans many windows of one dataset, sharing a single sign cache.
pub struct StatEngine<'a> {
    data: &'a DataMatrix,
    kind: StatKind,
    cache: Option<PairwiseSignCache>,
}

impl<'a> StatEngine<'a> {
    pub fn new(data: &'a DataMatrix, kind: StatKind) -> Self {
        let cache = (kind == StatKind::Sign).then(|| PairwiseSignCache::build(data));
        Self { data, kind, cache }
    }

    pub fn kind(&self) -> StatKind {
        self.kind
    }

    pub fn data(&self) -> &DataMatrix {
        self.data
    }

    pub fn scan(&self, a: usize, b: usize) -> Result<SnStatResult> {
        check_window(a, b)?;
        if b > self.data.n() {
            return Err(Error::domain(format!("window end {b} exceeds n = {}", self.data.n())));
        }
        let family = WindowFamily::build(self.kind, self.data, self.cache.as_ref(), a - 1, b - a + 1);
        Ok(scan_family(&family, self.kind, a, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fixture8() -> DataMatrix {
        DataMatrix::from_rows(&[
            vec![0.3, -1.2],
            vec![1.1, 0.4],
            vec![-0.7, 0.9],
            vec![2.0, -0.3],
            vec![0.5, 0.5],
            vec![-1.5, 1.7],
            vec![0.2, -0.8],
            vec![1.3, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn normalizer_for_eight_points() {
        // Independent quadruple-sum evaluation of (D(2;1,4)^2 + D(6;5,8)^2) / 8.
        let d = fixture8();
        let oracle = OracleD { data: &d, kind: StatKind::Sign };
        let w = self_normalizer(&oracle, 4, 1, 8).unwrap();
        assert_relative_eq!(w, 1.3137938460036995, max_relative = 1e-12);
        let r = sn_statistic(&d, 1, 8, StatKind::Sign).unwrap();
        assert_eq!(r.ratios.len(), 1);
        assert_relative_eq!(r.normalizers[0], w, max_relative = 1e-9);
        assert_relative_eq!(r.d_values[0], -1.995529042003144, max_relative = 1e-9);
    }

    #[test]
    fn normalizer_rejects_bad_split() {
        let d = fixture8();
        let oracle = OracleD { data: &d, kind: StatKind::Mean };
        assert!(self_normalizer(&oracle, 3, 1, 8).is_err());
        assert!(self_normalizer(&oracle, 5, 1, 8).is_err());
        assert!(matches!(self_normalizer(&oracle, 4, 1, 7), Err(Error::IntervalTooShort { .. })));
    }

    #[test]
    fn constant_data_is_zero_not_degenerate() {
        let d = DataMatrix::from_rows(&vec![vec![2.0, 2.0, 2.0]; 10]).unwrap();
        for kind in [StatKind::Sign, StatKind::Mean] {
            let r = sn_statistic(&d, 1, 10, kind).unwrap();
            assert_eq!(r.stat, 0.0);
            assert!(!r.degenerate);
            assert_eq!(r.argmax_k, 4);
            assert_eq!(r.ratios.len(), 3);
        }
    }

    #[test]
    fn short_window_rejected() {
        let d = fixture8();
        assert!(matches!(sn_statistic(&d, 2, 8, StatKind::Sign), Err(Error::IntervalTooShort { len: 7, .. })));
    }

    #[test]
    fn engine_matches_standalone() {
        let rows: Vec<Vec<f64>> = (0..14).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos(), i as f64 * 0.1]).collect();
        let d = DataMatrix::from_rows(&rows).unwrap();
        let eng = StatEngine::new(&d, StatKind::Sign);
        let a = eng.scan(3, 13).unwrap();
        let b = sn_statistic(&d, 3, 13, StatKind::Sign).unwrap();
        for (x, y) in a.ratios.iter().zip(&b.ratios) {
            assert_relative_eq!(x, y, max_relative = 1e-10);
        }
        assert_eq!(a.argmax_k, b.argmax_k);
    }
}
