//! Data-generating processes for size, power and segmentation studies.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, StandardNormal, StudentT};

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Steps discarded before the first coordinate of a t-innovation AR(1).
const AR_BURN_IN: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DgpCase {
    GaussIid,
    T5Iid,
    T3Iid,
    Ar1Gauss,
    Ar1T5,
    RsrmGauss,
    RsrmT5,
}

impl DgpCase {
    pub const ALL: [DgpCase; 7] = [
        DgpCase::GaussIid,
        DgpCase::T5Iid,
        DgpCase::T3Iid,
        DgpCase::Ar1Gauss,
        DgpCase::Ar1T5,
        DgpCase::RsrmGauss,
        DgpCase::RsrmT5,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DgpCase::GaussIid => "gauss_iid",
            DgpCase::T5Iid => "t5_iid",
            DgpCase::T3Iid => "t3_iid",
            DgpCase::Ar1Gauss => "ar1_gauss",
            DgpCase::Ar1T5 => "ar1_t5",
            DgpCase::RsrmGauss => "rsrm_gauss",
            DgpCase::RsrmT5 => "rsrm_t5",
        }
    }

    /// Roman numeral used in the usual case listing, `i` through `vii`.
    pub fn numeral(self) -> &'static str {
        ["i", "ii", "iii", "iv", "v", "vi", "vii"][self as usize]
    }
}

impl fmt::Display for DgpCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DgpCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        DgpCase::ALL
            .into_iter()
            .find(|c| c.name() == s || c.numeral() == s)
            .ok_or_else(|| Error::domain(format!("unknown case {s:?}")))
    }
}

/// Mean structure added to the noise.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shift {
    /// Rows `i > kstar` (1-based) are shifted by `delta`.
    Single { delta: Vec<f64>, kstar: usize },
    /// `means[j]` is the mean of segment `j`; segments end at `breaks`.
    Piecewise { breaks: Vec<usize>, means: Vec<Vec<f64>> },
}

impl Shift {
    /// `delta = scale * 1_p / sqrt(p)` after the midpoint.
    pub fn dense(n: usize, p: usize, scale: f64) -> Shift {
        Shift::Single {
            delta: vec![scale / (p as f64).sqrt(); p],
            kstar: n / 2,
        }
    }

    /// `delta = (1, 1, 0, ..., 0)` after the midpoint.
    pub fn sparse(n: usize, p: usize) -> Shift {
        let mut delta = vec![0.0; p];
        delta.iter_mut().take(2).for_each(|v| *v = 1.0);
        Shift::Single { delta, kstar: n / 2 }
    }

    /// Alternating changes `theta, -theta, theta, ...` at `breaks`, with
    /// `theta = sqrt(h/d) (1_d, 0_{p-d})`.
    pub fn alternating(breaks: &[usize], p: usize, h: f64, d: usize) -> Shift {
        let d = d.min(p);
        let mut theta = vec![0.0; p];
        theta.iter_mut().take(d).for_each(|v| *v = (h / d as f64).sqrt());
        let zero = vec![0.0; p];
        let means = (0..=breaks.len())
            .map(|j| if j % 2 == 1 { theta.clone() } else { zero.clone() })
            .collect();
        Shift::Piecewise {
            breaks: breaks.to_vec(),
            means,
        }
    }

    pub fn change_points(&self) -> Vec<usize> {
        match self {
            Shift::Single { delta, kstar } => {
                if delta.iter().any(|&v| v != 0.0) {
                    vec![*kstar]
                } else {
                    Vec::new()
                }
            }
            Shift::Piecewise { breaks, means } => breaks
                .iter()
                .enumerate()
                .filter(|&(j, _)| means[j] != means[j + 1])
                .map(|(_, &b)| b)
                .collect(),
        }
    }

    fn validate(&self, n: usize, p: usize) -> Result<()> {
        match self {
            Shift::Single { delta, kstar } => {
                if delta.len() != p {
                    return Err(Error::domain(format!("shift has {} coordinates, p = {p}", delta.len())));
                }
                if *kstar < 1 || *kstar >= n {
                    return Err(Error::domain(format!("kstar must lie in [1, {}], got {kstar}", n - 1)));
                }
            }
            Shift::Piecewise { breaks, means } => {
                if means.len() != breaks.len() + 1 || means.iter().any(|m| m.len() != p) {
                    return Err(Error::domain("piecewise shift needs one p-vector per segment"));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|&b| b < 1 || b >= n) {
                    return Err(Error::domain("breaks must be strictly ascending within [1, n-1]"));
                }
            }
        }
        Ok(())
    }

    fn apply(&self, x: &mut Array2<f64>) {
        match self {
            Shift::Single { delta, kstar } => {
                for mut row in x.rows_mut().into_iter().skip(*kstar) {
                    row.iter_mut().zip(delta).for_each(|(v, d)| *v += d);
                }
            }
            Shift::Piecewise { breaks, means } => {
                let mut seg = 0;
                for (i, mut row) in x.rows_mut().into_iter().enumerate() {
                    while seg < breaks.len() && i >= breaks[seg] {
                        seg += 1;
                    }
                    row.iter_mut().zip(&means[seg]).for_each(|(v, m)| *v += m);
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DgpSpec {
    pub case: DgpCase,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub shift: Option<Shift>,
}

impl DgpSpec {
    /// Null model with `rho = 0.7`.
    pub fn new(case: DgpCase, n: usize, p: usize) -> Self {
        Self {
            case,
            n,
            p,
            rho: 0.7,
            shift: None,
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_shift(mut self, shift: Shift) -> Self {
        self.shift = Some(shift);
        self
    }

    pub fn change_points(&self) -> Vec<usize> {
        self.shift.as_ref().map(Shift::change_points).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::domain("n and p must be positive"));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::domain(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        if let Some(s) = &self.shift {
            s.validate(self.n, self.p)?;
        }
        Ok(())
    }
}

/// Multivariate t row with identity covariance: `z sqrt((nu-2)/chi2_nu)`.
fn t_row<R: Rng + ?Sized>(rng: &mut R, nu: f64, row: &mut [f64]) -> Result<()> {
    if nu <= 2.0 {
        return Err(Error::domain(format!("t covariance needs nu > 2, got {nu}")));
    }
    let chi = ChiSquared::new(nu).map_err(|e| Error::domain(e.to_string()))?;
    for v in row.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let scale = ((nu - 2.0) / chi.sample(rng)).sqrt();
    row.iter_mut().for_each(|v| *v *= scale);
    Ok(())
}

/// AR(1) across coordinates. Gaussian innovations start from the stationary
/// law; t innovations start after a burn-in.
fn ar_row<R: Rng + ?Sized>(rng: &mut R, rho: f64, t_innov: Option<&StudentT<f64>>, row: &mut [f64]) {
    let innov = |rng: &mut R| -> f64 {
        match t_innov {
            Some(t) => t.sample(rng) / 2.0,
            None => rng.sample::<f64, _>(StandardNormal) / 2.0,
        }
    };
    let mut x = match t_innov {
        None => rng.sample::<f64, _>(StandardNormal) * 0.5 / (1.0 - rho * rho).sqrt(),
        Some(_) => {
            let mut x = 0.0;
            for _ in 0..AR_BURN_IN {
                x = rho * x + innov(rng);
            }
            rho * x + innov(rng)
        }
    };
    row[0] = x;
    for v in row.iter_mut().skip(1) {
        x = rho * x + innov(rng);
        *v = x;
    }
}

/// One `n x p` draw; rows are independent.
pub fn draw_dgp(spec: &DgpSpec, stream: RandomStream) -> Result<DataMatrix> {
    spec.validate()?;
    let mut rng = stream.rng();
    let mut x = Array2::<f64>::zeros((spec.n, spec.p));
    let t5 = StudentT::new(5.0).map_err(|e| Error::domain(e.to_string()))?;
    for mut row in x.rows_mut() {
        let row = row.as_slice_mut().expect("standard layout");
        match spec.case {
            DgpCase::GaussIid => row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            DgpCase::T5Iid => t_row(&mut rng, 5.0, row)?,
            DgpCase::T3Iid => t_row(&mut rng, 3.0, row)?,
            DgpCase::Ar1Gauss => ar_row(&mut rng, spec.rho, None, row),
            DgpCase::Ar1T5 => ar_row(&mut rng, spec.rho, Some(&t5), row),
            DgpCase::RsrmGauss | DgpCase::RsrmT5 => {
                let innov = (spec.case == DgpCase::RsrmT5).then_some(&t5);
                ar_row(&mut rng, spec.rho, innov, row);
                let u: f64 = rng.sample(Exp1);
                row.iter_mut().for_each(|v| *v /= u);
            }
        }
    }
    if let Some(s) = &spec.shift {
        s.apply(&mut x);
    }
    DataMatrix::new(x)
}
