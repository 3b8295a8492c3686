//! Seeded binary segmentation driven by self-normalized p-values.

use std::io::Write;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::limit::TableSource;
use crate::seeded::{generate, SeededIntervalSet};
use crate::sign_kernel::StatKind;
use crate::sn_test::{StatEngine, MIN_WINDOW};

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SegmenterConfig {
    pub zeta_p: f64,
    pub alpha: f64,
    pub kind: StatKind,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            zeta_p: 0.001,
            alpha: std::f64::consts::FRAC_1_SQRT_2,
            kind: StatKind::Sign,
        }
    }
}

impl SegmenterConfig {
    pub fn new(zeta_p: f64, alpha: f64, kind: StatKind) -> Result<Self> {
        let cfg = Self { zeta_p, alpha, kind };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.zeta_p > 0.0 && self.zeta_p < 1.0) {
            return Err(Error::domain(format!("zeta_p must lie in (0, 1), got {}", self.zeta_p)));
        }
        if !(0.5..1.0).contains(&self.alpha) {
            return Err(Error::domain(format!("alpha must lie in [1/2, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Statistic and p-value of one seeded interval.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct IntervalScore {
    pub a: usize,
    pub b: usize,
    pub stat: f64,
    pub argmax_k: usize,
    pub p_value: f64,
}

impl IntervalScore {
    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Detection {
    pub location: usize,
    pub interval: (usize, usize),
    pub p_value: f64,
    pub stat: f64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ChangePointResult {
    pub m_hat: usize,
    /// Ascending; each is the last index of its left segment.
    pub locations: Vec<usize>,
    /// One per location, same order.
    pub detections: Vec<Detection>,
}

/// Orders candidates by p-value, then shorter interval, then smaller left
/// endpoint, dropping repeated intervals. The first entry is the one the
/// recursion acts on.
pub fn tie_and_dedup_policy(mut candidates: Vec<IntervalScore>) -> Vec<IntervalScore> {
    candidates.sort_by(|x, y| {
        x.p_value
            .total_cmp(&y.p_value)
            .then(x.len().cmp(&y.len()))
            .then(x.a.cmp(&y.a))
    });
    candidates.dedup_by_key(|c| (c.a, c.b));
    candidates
}

/// Statistics and p-values for every interval of `seeded`.
pub fn score_intervals(
    d: &DataMatrix,
    kind: StatKind,
    seeded: &SeededIntervalSet,
    tables: &dyn TableSource,
) -> Result<Vec<IntervalScore>> {
    let engine = StatEngine::new(d, kind);
    let one = |iv: &crate::seeded::SeededInterval| -> Result<IntervalScore> {
        let scan = engine.scan(iv.a, iv.b)?;
        let table = tables.table(iv.len())?;
        Ok(IntervalScore {
            a: iv.a,
            b: iv.b,
            stat: scan.stat,
            argmax_k: scan.argmax_k,
            p_value: table.p_value(scan.stat)?,
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeded.intervals.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeded.intervals.iter().map(one).collect()
    }
}

/// Runs the recursion on precomputed interval scores.
pub fn segment_scores(n: usize, scores: &[IntervalScore], zeta_p: f64) -> ChangePointResult {
    let mut detections = Vec::new();
    let mut stack = vec![(1usize, n)];
    while let Some((a, b)) = stack.pop() {
        if b < a || b - a + 1 < MIN_WINDOW {
            continue;
        }
        let inside: Vec<IntervalScore> = scores.iter().filter(|s| s.a >= a && s.b <= b).copied().collect();
        let Some(best) = tie_and_dedup_policy(inside).into_iter().next() else {
            continue;
        };
        if best.p_value >= zeta_p {
            continue;
        }
        let k = best.argmax_k;
        detections.push(Detection {
            location: k,
            interval: (best.a, best.b),
            p_value: best.p_value,
            stat: best.stat,
        });
        stack.push((k + 1, b));
        stack.push((a, k));
    }
    detections.sort_by_key(|d| d.location);
    ChangePointResult {
        m_hat: detections.len(),
        locations: detections.iter().map(|d| d.location).collect(),
        detections,
    }
}

/// Multiple change-point estimate for `d`.
pub fn segment(d: &DataMatrix, cfg: &SegmenterConfig, tables: &dyn TableSource) -> Result<ChangePointResult> {
    cfg.validate()?;
    let n = d.n();
    if n < MIN_WINDOW {
        return Ok(ChangePointResult {
            m_hat: 0,
            locations: Vec::new(),
            detections: Vec::new(),
        });
    }
    let seeded = generate(n, cfg.alpha)?;
    let scores = score_intervals(d, cfg.kind, &seeded, tables)?;
    Ok(segment_scores(n, &scores, cfg.zeta_p))
}

impl ChangePointResult {
    /// `location,p_value,interval_a,interval_b,statistic` rows with a header.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let fmt = |e: csv::Error| Error::Format(e.to_string());
        out.write_record(["location", "p_value", "interval_a", "interval_b", "statistic"])
            .map_err(fmt)?;
        for d in &self.detections {
            out.write_record([
                d.location.to_string(),
                format!("{:?}", d.p_value),
                d.interval.0.to_string(),
                d.interval.1.to_string(),
                format!("{:?}", d.stat),
            ])
            .map_err(fmt)?;
        }
        out.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    /// JSON report echoing the configuration and data shape.
    pub fn to_json(&self, cfg: &SegmenterConfig, n: usize, p: usize) -> serde_json::Value {
        serde_json::json!({
            "config": cfg,
            "n": n,
            "p": p,
            "m_hat": self.m_hat,
            "locations": self.locations,
            "detections": self.detections,
        })
    }
}
