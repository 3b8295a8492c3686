//! Monte Carlo experiment runners and the preset grids behind `simulate`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use super::dgp::{draw_dgp, DgpCase, DgpSpec, Shift};
use super::metrics::{ari, mse_mhat};
use crate::error::{Error, Result};
use crate::limit::TableSource;
use crate::rng::RandomStream;
use crate::seeded::generate;
use crate::segment::{score_intervals, segment_scores, SegmenterConfig};
use crate::sign_kernel::StatKind;
use crate::sn_test::sn_statistic;

/// Window length whose table stands in for the large-`n` limit.
pub const PROXY_N: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    FixedN,
    SequentialProxy,
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitKind::FixedN => "fixed_n",
            LimitKind::SequentialProxy => "sequential_proxy",
        })
    }
}

impl FromStr for LimitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed_n" => Ok(LimitKind::FixedN),
            "sequential_proxy" => Ok(LimitKind::SequentialProxy),
            _ => Err(Error::domain(format!("unknown limit {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SegmentationOutcome {
    pub m_hat: usize,
    pub m: usize,
    pub ari: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct SegmentationSummary {
    /// Counts of `m_hat - m` in the bins `< -1, -1, 0, 1, > 1`.
    pub m_diff_histogram: [usize; 5],
    pub exact_fraction: f64,
    pub mse: f64,
    pub ari_mean: f64,
}

impl SegmentationSummary {
    pub fn from_outcomes(outcomes: &[SegmentationOutcome]) -> Result<Self> {
        let mse = mse_mhat(&outcomes.iter().map(|o| (o.m_hat, o.m)).collect::<Vec<_>>())?;
        let mut hist = [0usize; 5];
        for o in outcomes {
            let diff = o.m_hat as i64 - o.m as i64;
            hist[(diff.clamp(-2, 2) + 2) as usize] += 1;
        }
        let reps = outcomes.len() as f64;
        Ok(Self {
            m_diff_histogram: hist,
            exact_fraction: hist[2] as f64 / reps,
            mse,
            ari_mean: outcomes.iter().map(|o| o.ari).sum::<f64>() / reps,
        })
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ExperimentReport {
    pub label: String,
    pub signal: String,
    pub dgp: DgpSpec,
    pub kind: StatKind,
    pub replicates: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub limit: Option<LimitKind>,
    pub level: Option<f64>,
    pub critical_value: Option<f64>,
    pub rejection_rate: Option<f64>,
    pub segmenter: Option<SegmenterConfig>,
    pub segmentation: Option<SegmentationSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<SegmentationOutcome>,
}

fn par_replicates<T: Send>(replicates: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..replicates).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..replicates).map(f).collect()
    }
}

/// Full-sample statistics of `replicates` draws; draw `r` uses `stream.child(r)`.
pub fn replicate_statistics(spec: &DgpSpec, kind: StatKind, replicates: usize, stream: RandomStream) -> Result<Vec<f64>> {
    spec.validate()?;
    par_replicates(replicates, |r| {
        let d = draw_dgp(spec, stream.child(r as u64))?;
        Ok(sn_statistic(&d, 1, spec.n, kind)?.stat)
    })
}

/// Fraction of `stats` above the `1 - level` quantile of the chosen table.
pub fn rejection_rate(
    stats: &[f64],
    n: usize,
    limit: LimitKind,
    level: f64,
    tables: &dyn TableSource,
) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level must lie in (0, 1), got {level}")));
    }
    let table = match limit {
        LimitKind::FixedN => tables.table(n)?,
        LimitKind::SequentialProxy => tables.table(PROXY_N)?,
    };
    let crit = table.quantile(1.0 - level);
    let rejected = stats.iter().filter(|&&s| s > crit).count();
    Ok((rejected as f64 / stats.len() as f64, crit))
}

#[allow(clippy::too_many_arguments)]
fn rejection_report(
    spec: &DgpSpec,
    signal: &str,
    kind: StatKind,
    limit: LimitKind,
    level: f64,
    stats: &[f64],
    stream: RandomStream,
    tables: &dyn TableSource,
) -> Result<ExperimentReport> {
    let (rate, crit) = rejection_rate(stats, spec.n, limit, level, tables)?;
    Ok(ExperimentReport {
        label: format!("{}/n{}/{}/{}", spec.case, spec.n, kind, limit),
        signal: signal.to_string(),
        dgp: spec.clone(),
        kind,
        replicates: stats.len(),
        seed: stream.seed,
        stream_id: stream.stream_id,
        limit: Some(limit),
        level: Some(level),
        critical_value: Some(crit),
        rejection_rate: Some(rate),
        segmenter: None,
        segmentation: None,
        outcomes: Vec::new(),
    })
}

/// Empirical rejection rate of the full-sample test at `level`.
pub fn size_power_experiment(
    spec: &DgpSpec,
    kind: StatKind,
    limit: LimitKind,
    level: f64,
    replicates: usize,
    stream: RandomStream,
    tables: &dyn TableSource,
) -> Result<ExperimentReport> {
    if replicates == 0 {
        return Err(Error::domain("at least one replicate is required"));
    }
    let signal = if spec.change_points().is_empty() { "null" } else { "shift" };
    let stats = replicate_statistics(spec, kind, replicates, stream)?;
    rejection_report(spec, signal, kind, limit, level, &stats, stream, tables)
}

/// Segments `replicates` draws of a multi-change model and scores them.
pub fn segmentation_experiment(
    spec: &DgpSpec,
    cfg: &SegmenterConfig,
    replicates: usize,
    stream: RandomStream,
    tables: &dyn TableSource,
) -> Result<ExperimentReport> {
    spec.validate()?;
    cfg.validate()?;
    if replicates == 0 {
        return Err(Error::domain("at least one replicate is required"));
    }
    let truth = spec.change_points();
    if truth.is_empty() {
        return Err(Error::domain("segmentation experiment needs at least one true change"));
    }
    let seeded = generate(spec.n, cfg.alpha)?;
    for len in seeded.lengths() {
        tables.table(len)?;
    }
    let outcomes = par_replicates(replicates, |r| {
        let d = draw_dgp(spec, stream.child(r as u64))?;
        let scores = score_intervals(&d, cfg.kind, &seeded, tables)?;
        let res = segment_scores(spec.n, &scores, cfg.zeta_p);
        Ok(SegmentationOutcome {
            m_hat: res.m_hat,
            m: truth.len(),
            ari: ari(&res.locations, &truth, spec.n),
        })
    })?;
    Ok(ExperimentReport {
        label: format!("{}/n{}/{}/alpha{:.4}", spec.case, spec.n, cfg.kind, cfg.alpha),
        signal: "multi".to_string(),
        dgp: spec.clone(),
        kind: cfg.kind,
        replicates,
        seed: stream.seed,
        stream_id: stream.stream_id,
        limit: None,
        level: None,
        critical_value: None,
        rejection_rate: None,
        segmenter: Some(*cfg),
        segmentation: Some(SegmentationSummary::from_outcomes(&outcomes)?),
        outcomes,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Size and power grid for single-change tests.
    Table2,
    /// Dense multi-change segmentation.
    Table3,
    /// Sparse multi-change segmentation.
    Table4,
    /// Power against growing dense shifts.
    PowerCurve,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "table2" => Ok(Preset::Table2),
            "table3" => Ok(Preset::Table3),
            "table4" => Ok(Preset::Table4),
            "powercurve" => Ok(Preset::PowerCurve),
            _ => Err(Error::domain(format!(
                "unknown preset {s:?}; expected table2, table3, table4 or powercurve"
            ))),
        }
    }
}

/// Multi-change model with changes at 30, 60, 90 on `n = 120`, `p = 50`.
pub fn multi_change_spec(rsrm: bool, h: f64, d: usize) -> DgpSpec {
    let (n, p) = (120, 50);
    let case = if rsrm { DgpCase::RsrmT5 } else { DgpCase::GaussIid };
    DgpSpec::new(case, n, p)
        .with_rho(0.3)
        .with_shift(Shift::alternating(&[30, 60, 90], p, h, d))
}

/// Runs a preset grid. Configuration `c` uses stream `(seed, c)`.
pub fn run_preset(preset: Preset, replicates: usize, seed: u64, tables: &dyn TableSource) -> Result<Vec<ExperimentReport>> {
    let mut out = Vec::new();
    let mut config = 0u64;
    let mut next_stream = || {
        config += 1;
        RandomStream::new(seed, config)
    };
    let kinds = [StatKind::Sign, StatKind::Mean];
    match preset {
        Preset::Table2 | Preset::PowerCurve => {
            let p = 100;
            let grid: Vec<(DgpCase, usize, String, Option<Shift>)> = if preset == Preset::Table2 {
                let mut g = Vec::new();
                for case in DgpCase::ALL {
                    for n in [10, 20, 50] {
                        g.push((case, n, "H0".to_string(), None));
                        g.push((case, n, "Ha1".to_string(), Some(Shift::dense(n, p, 1.0))));
                        g.push((case, n, "Ha2".to_string(), Some(Shift::sparse(n, p))));
                    }
                }
                g
            } else {
                let n = 100;
                [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
                    .into_iter()
                    .map(|c| (DgpCase::GaussIid, n, format!("dense({c})"), (c > 0.0).then(|| Shift::dense(n, p, c))))
                    .collect()
            };
            for (case, n, signal, shift) in grid {
                let mut spec = DgpSpec::new(case, n, p);
                spec.shift = shift;
                for kind in kinds {
                    let stream = next_stream();
                    let stats = replicate_statistics(&spec, kind, replicates, stream)?;
                    let limits: &[LimitKind] = if preset == Preset::Table2 {
                        &[LimitKind::FixedN, LimitKind::SequentialProxy]
                    } else {
                        &[LimitKind::FixedN]
                    };
                    for &limit in limits {
                        out.push(rejection_report(&spec, &signal, kind, limit, 0.05, &stats, stream, tables)?);
                    }
                }
            }
        }
        Preset::Table3 | Preset::Table4 => {
            let d = if preset == Preset::Table3 { 50 } else { 5 };
            let name = if preset == Preset::Table3 { "Dense" } else { "Sparse" };
            for h in [2.5, 4.0] {
                for rsrm in [false, true] {
                    let spec = multi_change_spec(rsrm, h, d);
                    for kind in kinds {
                        for alpha in [2f64.powf(-0.5), 2f64.powf(-0.25)] {
                            let cfg = SegmenterConfig::new(0.001, alpha, kind)?;
                            let mut rep = segmentation_experiment(&spec, &cfg, replicates, next_stream(), tables)?;
                            rep.signal = format!("{name}({h})");
                            out.push(rep);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

pub const REPORT_CSV_HEADER: [&str; 23] = [
    "label",
    "case",
    "n",
    "p",
    "rho",
    "signal",
    "kind",
    "limit",
    "level",
    "critical_value",
    "rejection_rate",
    "alpha",
    "zeta_p",
    "replicates",
    "seed",
    "m_diff_lt_minus1",
    "m_diff_minus1",
    "m_diff_0",
    "m_diff_plus1",
    "m_diff_gt_plus1",
    "exact_fraction",
    "mse",
    "ari_mean",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn csv_record(&self) -> Vec<String> {
        let seg = self.segmentation.as_ref();
        let hist = |i: usize| opt(seg.map(|s| s.m_diff_histogram[i]));
        vec![
            self.label.clone(),
            self.dgp.case.to_string(),
            self.dgp.n.to_string(),
            self.dgp.p.to_string(),
            self.dgp.rho.to_string(),
            self.signal.clone(),
            self.kind.to_string(),
            opt(self.limit),
            opt(self.level),
            opt(self.critical_value),
            opt(self.rejection_rate),
            opt(self.segmenter.map(|c| c.alpha)),
            opt(self.segmenter.map(|c| c.zeta_p)),
            self.replicates.to_string(),
            self.seed.to_string(),
            hist(0),
            hist(1),
            hist(2),
            hist(3),
            hist(4),
            opt(seg.map(|s| s.exact_fraction)),
            opt(seg.map(|s| s.mse)),
            opt(seg.map(|s| s.ari_mean)),
        ]
    }
}

/// One row per report, with a header.
pub fn write_reports_csv(reports: &[ExperimentReport], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let fmt = |e: csv::Error| Error::Format(e.to_string());
    out.write_record(REPORT_CSV_HEADER).map_err(fmt)?;
    for r in reports {
        out.write_record(r.csv_record()).map_err(fmt)?;
    }
    out.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}
