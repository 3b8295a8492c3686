//! Monte Carlo simulation of the fixed-`n` null limit of the scan statistic.
//!
//! The limit is a functional of a centered Gaussian field `Q_n(a/n, b/n)`
//! built from i.i.d. standard normals `z_ij`, `1 <= j < i <= n`, which stand
//! in for the normalized pairwise inner products `X_i' X_j`:
//!
//! ```text
//! Q_n(a/n, b/n) = (sqrt 2 / n) * sum_{a <= j < i <= b} z_ij
//! ```
//!
//! and `G_n(k; l, m)` is the three-term combination of `Q_n` values that the
//! block statistic converges to. A replicate of the limit is
//!
//! ```text
//! sup_{k=4..n-4}  n G(k;1,n)^2 / ( sum_{t=2}^{k-2} G(t;1,k)^2 + sum_{t=k+2}^{n-2} G(t;k+1,n)^2 )
//! ```
//!
//! The noncentral version replaces every `G` with `sqrt(2) G + c Delta`.

mod cache;
mod table;

pub use cache::{TableCache, TableSource, DEFAULT_REPLICATES};
pub use table::{load_table, read_table, save_table, write_table, QuantileTable, TABLE_FORMAT_VERSION};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Local-alternative parameters: signal level `c` and change fraction `b*`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoncentralSpec {
    pub c: f64,
    pub bstar: f64,
}

impl NoncentralSpec {
    pub fn new(c: f64, bstar: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::domain(format!("signal level c must be finite and >= 0, got {c}")));
        }
        if !(bstar > 0.0 && bstar < 1.0) {
            return Err(Error::domain(format!("change fraction must lie in (0, 1), got {bstar}")));
        }
        Ok(Self { c, bstar })
    }

    /// `k* = floor(n b*)`.
    pub fn kstar(&self, n: usize) -> usize {
        (n as f64 * self.bstar).floor() as usize
    }
}

/// One realization of the Gaussian building blocks with window sums ready.
#[derive(Clone, Debug)]
pub struct LimitDraw {
    n: usize,
    z: Vec<f64>,
    // window[a * (n + 1) + b] = sum_{a <= j < i <= b} z_ij, 1 <= a <= b <= n
    window: Vec<f64>,
}

#[inline]
fn z_index(i: usize, j: usize) -> usize {
    (i - 1) * (i - 2) / 2 + (j - 1)
}

impl LimitDraw {
    /// Draws `n(n-1)/2` standard normals from `rng`.
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut draw = Self {
            n,
            z: vec![0.0; n * n.saturating_sub(1) / 2],
            window: vec![0.0; (n + 1) * (n + 1)],
        };
        draw.resample(rng);
        draw
    }

    /// Builds a draw from given `z_ij`, ordered by `i` then `j`
    /// (`z_21, z_31, z_32, z_41, ...`).
    pub fn from_z(n: usize, z: Vec<f64>) -> Result<Self> {
        if z.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::domain(format!(
                "expected {} entries for n = {n}, got {}",
                n * n.saturating_sub(1) / 2,
                z.len()
            )));
        }
        let mut draw = Self {
            n,
            z,
            window: vec![0.0; (n + 1) * (n + 1)],
        };
        draw.fill_windows();
        Ok(draw)
    }

    pub(crate) fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for v in self.z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        self.fill_windows();
    }

    fn fill_windows(&mut self) {
        let n = self.n;
        let w = n + 1;
        // F(a, b) = F(a+1, b) + sum_{i=a+1}^{b} z_{i a}
        for a in (1..=n).rev() {
            self.window[a * w + a] = 0.0;
            let mut col = 0.0;
            for b in a + 1..=n {
                col += self.z[z_index(b, a)];
                let inner = if a < n { self.window[(a + 1) * w + b] } else { 0.0 };
                self.window[a * w + b] = inner + col;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self, i: usize, j: usize) -> f64 {
        self.z[z_index(i, j)]
    }

    /// `Q_n(a/n, b/n)` without argument checks; zero when `a == b`.
    #[inline]
    fn q_raw(&self, a: usize, b: usize) -> f64 {
        std::f64::consts::SQRT_2 / self.n as f64 * self.window[a * (self.n + 1) + b]
    }

    /// `G_n(k; l, m)` without argument checks.
    #[inline]
    fn g_raw(&self, k: usize, l: usize, m: usize) -> f64 {
        let n2 = (self.n * self.n) as f64;
        let (ml, mk1, kl) = ((m - l) as f64, (m - k - 1) as f64, (k - l) as f64);
        (ml * mk1 * self.q_raw(l, k) + ml * kl * self.q_raw(k + 1, m) - kl * mk1 * self.q_raw(l, m)) / n2
    }
}

/// `Q_n(a/n, b/n)` for grid indices `1 <= a < b <= n`.
pub fn q_process(draw: &LimitDraw, a: usize, b: usize) -> Result<f64> {
    if a < 1 || a >= b || b > draw.n {
        return Err(Error::domain(format!(
            "Q_n needs 1 <= a < b <= n, got a = {a}, b = {b}, n = {}",
            draw.n
        )));
    }
    Ok(draw.q_raw(a, b))
}

/// `G_n(k; l, m)` for `1 <= l <= k < m <= n`.
pub fn g_process(draw: &LimitDraw, k: usize, l: usize, m: usize) -> Result<f64> {
    if l < 1 || k < l || m <= k || m > draw.n {
        return Err(Error::domain(format!(
            "G_n needs 1 <= l <= k < m <= n, got ({k}; {l}, {m}), n = {}",
            draw.n
        )));
    }
    Ok(draw.g_raw(k, l, m))
}

fn choose2(x: usize) -> f64 {
    (x * x.saturating_sub(1) / 2) as f64
}

/// Mean-shift drift `Delta_n(k; l, m)` for a change after `kstar`.
pub fn delta_shift(n: usize, k: usize, l: usize, m: usize, kstar: usize) -> f64 {
    let n4 = (n as f64).powi(4);
    if l < k && k <= kstar && kstar < m {
        4.0 * choose2(k - l + 1) * choose2(m - kstar) / n4
    } else if l < kstar && kstar < k && k < m {
        4.0 * choose2(kstar - l + 1) * choose2(m - k) / n4
    } else {
        0.0
    }
}

/// Evaluates the limit functional on one draw.
pub fn limit_functional(draw: &LimitDraw, spec: Option<&NoncentralSpec>) -> f64 {
    let n = draw.n;
    match spec {
        None => sup_ratio(n, |k, l, m| draw.g_raw(k, l, m)),
        Some(s) => {
            let (kstar, c) = (s.kstar(n), s.c);
            sup_ratio(n, |k, l, m| {
                std::f64::consts::SQRT_2 * draw.g_raw(k, l, m) + c * delta_shift(n, k, l, m, kstar)
            })
        }
    }
}

fn sup_ratio(n: usize, term: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for k in 4..=n - 4 {
        let num = n as f64 * term(k, 1, n).powi(2);
        let mut den = 0.0;
        for t in 2..=k - 2 {
            den += term(t, 1, k).powi(2);
        }
        for t in k + 2..=n - 2 {
            den += term(t, k + 1, n).powi(2);
        }
        let r = if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        best = best.max(r);
    }
    best
}

/// Simulates `replicates` draws of the fixed-`n` limit. Replicate `r` uses
/// stream `stream.child(r)`, so the table is independent of parallelism.
pub fn simulate_limit(
    n: usize,
    replicates: usize,
    stream: RandomStream,
    spec: Option<NoncentralSpec>,
) -> Result<QuantileTable> {
    if n < 8 {
        return Err(Error::domain(format!("n must be ≥ 8, got {n}")));
    }
    if replicates == 0 {
        return Err(Error::domain("at least one replicate is required"));
    }
    let one = |r: usize, draw: &mut LimitDraw| {
        let mut rng = stream.child(r as u64).rng();
        draw.resample(&mut rng);
        limit_functional(draw, spec.as_ref())
    };
    let fresh = || LimitDraw {
        n,
        z: vec![0.0; n * (n - 1) / 2],
        window: vec![0.0; (n + 1) * (n + 1)],
    };
    #[cfg(feature = "parallel")]
    let mut values: Vec<f64> = {
        use rayon::prelude::*;
        (0..replicates).into_par_iter().map_init(fresh, |d, r| one(r, d)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut values: Vec<f64> = {
        let mut d = fresh();
        (0..replicates).map(|r| one(r, &mut d)).collect()
    };
    values.sort_by(f64::total_cmp);
    Ok(QuantileTable {
        n,
        replicates,
        seed: stream.seed,
        stream_id: stream.stream_id,
        sorted_values: values,
        noncentral: spec,
    })
}

/// `(1 + #{draws >= observed}) / (B + 1)`.
pub fn p_value(table: &QuantileTable, observed: f64) -> Result<f64> {
    table.p_value(observed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn fixed_draw(n: usize) -> LimitDraw {
        let m = n * (n - 1) / 2;
        let z: Vec<f64> = (0..m).map(|i| ((i as f64) * 0.37).sin()).collect();
        LimitDraw::from_z(n, z).unwrap()
    }

    #[test]
    fn q_matches_direct_sum() {
        let d = fixed_draw(9);
        for a in 1..9 {
            for b in a + 1..=9 {
                let mut s = 0.0;
                for i in a..=b {
                    for j in a..i {
                        s += d.z(i, j);
                    }
                }
                assert_relative_eq!(q_process(&d, a, b).unwrap(), 2f64.sqrt() / 9.0 * s, epsilon = 1e-12);
            }
        }
        assert_relative_eq!(q_process(&d, 4, 5).unwrap(), 2f64.sqrt() / 9.0 * d.z(5, 4), epsilon = 1e-14);
        assert!(q_process(&d, 5, 5).is_err());
        assert!(q_process(&d, 0, 5).is_err());
    }

    #[test]
    fn g_matches_coefficients() {
        // Independent re-evaluation of the three-term combination at (4; 1, 8).
        let d = fixed_draw(8);
        let q = |a: usize, b: usize| {
            let mut s = 0.0;
            for i in a..=b {
                for j in a..i {
                    s += d.z(i, j);
                }
            }
            2f64.sqrt() / 8.0 * s
        };
        let expect = (7.0 / 8.0) * (3.0 / 8.0) * q(1, 4) + (7.0 / 8.0) * (3.0 / 8.0) * q(5, 8)
            - (3.0 / 8.0) * (3.0 / 8.0) * q(1, 8);
        assert_relative_eq!(g_process(&d, 4, 1, 8).unwrap(), expect, epsilon = 1e-12);
        // k = l: only the first coefficient survives and Q(l, l) = 0.
        assert_eq!(g_process(&d, 2, 2, 8).unwrap(), (6.0 * 5.0 / 64.0) * d.q_raw(2, 2));
        assert!(g_process(&d, 8, 1, 8).is_err());
    }

    #[test]
    fn delta_branches() {
        assert_relative_eq!(delta_shift(10, 5, 1, 10, 5), 0.04, epsilon = 1e-15);
        assert_eq!(delta_shift(10, 5, 1, 8, 8), 0.0);
        assert_eq!(delta_shift(10, 4, 1, 8, 7), 0.0);
        // second branch: 4 C(4,2) C(3,2) / 10^4
        assert_relative_eq!(delta_shift(10, 7, 1, 10, 4), 4.0 * 6.0 * 3.0 / 1e4, epsilon = 1e-15);
    }

    #[test]
    fn functional_is_nonnegative() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for n in [8, 9, 15] {
            let d = LimitDraw::sample(n, &mut rng);
            let v = limit_functional(&d, None);
            assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn simulate_rejects_small_n() {
        assert!(simulate_limit(7, 10, RandomStream::new(1, 0), None).is_err());
        assert!(simulate_limit(8, 0, RandomStream::new(1, 0), None).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let a = simulate_limit(12, 200, RandomStream::new(9, 3), None).unwrap();
        let b = simulate_limit(12, 200, RandomStream::new(9, 3), None).unwrap();
        assert_eq!(a, b);
        assert!(a.sorted_values.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.sorted_values.iter().all(|v| v.is_finite() && *v >= 0.0));
    }
}
