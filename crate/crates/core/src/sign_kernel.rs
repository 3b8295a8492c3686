//! Spatial signs and the bilinear block statistics `D(k; l, m)`.
//!
//! For a split `k` of the window `[l, m]` with left block `A = [l, k]` and
//! right block `B = [k+1, m]`,
//!
//! ```text
//! D(k; l, m) = sum_{j1 != j3 in A} sum_{j2 != j4 in B} h(j1, j2)' h(j3, j4)
//! ```
//!
//! where `h(i, j) = S(Y_i - Y_j)` for the sign statistic and `Y_i - Y_j`
//! for the mean statistic. The fast paths rewrite the quadruple sum as
//!
//! ```text
//! ||V||^2 - sum_{j1} ||u_{j1}||^2 - sum_{j2} ||w_{j2}||^2 + #{untied pairs}
//! ```
//!
//! with `V` the sum of all cross signs, `u` its row sums and `w` its column
//! sums. The mean statistic reduces further to within-window Gram sums.

use crate::data::{DataMatrix, SegmentTriple};
use crate::error::Result;

/// Which kernel the block statistic is built on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    Sign,
    Mean,
}

impl std::str::FromStr for StatKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sign" => Ok(StatKind::Sign),
            "mean" => Ok(StatKind::Mean),
            other => Err(format!("unknown statistic kind {other:?} (expected sign or mean)")),
        }
    }
}

impl std::fmt::Display for StatKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StatKind::Sign => "sign",
            StatKind::Mean => "mean",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct DValue {
    pub value: f64,
    pub kind: StatKind,
    pub triple: SegmentTriple,
}

/// `x / ||x||`, or the zero vector when `x == 0`.
pub fn spatial_sign(x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    if !normalize_in_place(&mut out) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    out
}

/// Normalizes to unit length; returns false (leaving `x` untouched) for the
/// zero vector. Scales by the max-abs entry first so tiny differences do not
/// underflow to a spurious tie.
fn normalize_in_place(x: &mut [f64]) -> bool {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return false;
    }
    let norm = x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt() * scale;
    x.iter_mut().for_each(|v| *v /= norm);
    true
}

/// All pairwise signs `s_ij = S(Y_i - Y_j)` for `i < j` (0-based rows).
///
/// Signs for `i > j` are served as `-s_ji`. Exactly tied rows carry the zero
/// vector and are tracked so that the identity's pair count can skip them.
#[derive(Clone, Debug)]
pub struct PairwiseSignCache {
    n: usize,
    p: usize,
    signs: Vec<f64>,
    tied: Vec<bool>,
    n_tied: usize,
}

impl PairwiseSignCache {
    pub fn build(d: &DataMatrix) -> Self {
        let (n, p) = (d.n(), d.p());
        let pairs = n * n.saturating_sub(1) / 2;
        let mut signs = vec![0.0; pairs * p];
        let mut tied = vec![false; pairs];
        let mut idx = 0;
        for i in 0..n {
            let yi = d.row(i);
            for j in i + 1..n {
                let out = &mut signs[idx * p..(idx + 1) * p];
                for ((o, a), b) in out.iter_mut().zip(yi).zip(d.row(j)) {
                    *o = a - b;
                }
                if !normalize_in_place(out) {
                    tied[idx] = true;
                }
                idx += 1;
            }
        }
        let n_tied = tied.iter().filter(|&&t| t).count();
        Self {
            n,
            p,
            signs,
            tied,
            n_tied,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of exactly tied pairs.
    pub fn tied_pairs(&self) -> usize {
        self.n_tied
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn is_tied(&self, i: usize, j: usize) -> bool {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => true,
            std::cmp::Ordering::Less => self.tied[self.pair_index(i, j)],
            std::cmp::Ordering::Greater => self.tied[self.pair_index(j, i)],
        }
    }

    /// `s_ij` as a stored slice plus the orientation factor (+1 or -1).
    /// Returns `None` for `i == j` and for tied pairs (zero sign).
    pub fn signed(&self, i: usize, j: usize) -> Option<(&[f64], f64)> {
        let (lo, hi, f) = match i.cmp(&j) {
            std::cmp::Ordering::Equal => return None,
            std::cmp::Ordering::Less => (i, j, 1.0),
            std::cmp::Ordering::Greater => (j, i, -1.0),
        };
        let idx = self.pair_index(lo, hi);
        if self.tied[idx] {
            return None;
        }
        Some((&self.signs[idx * self.p..(idx + 1) * self.p], f))
    }

    /// Adds `factor * s_ij` into `acc`.
    #[inline]
    pub(crate) fn add_to(&self, acc: &mut [f64], i: usize, j: usize, factor: f64) {
        if let Some((s, f)) = self.signed(i, j) {
            let f = f * factor;
            for (a, v) in acc.iter_mut().zip(s) {
                *a += f * v;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Literal quadruple-sum definition of the sign statistic. Cost is
/// `O(|A|^2 |B|^2 p)`; intended as a reference for testing.
pub fn d_sign_oracle(d: &DataMatrix, t: SegmentTriple) -> Result<DValue> {
    t.validate(d.n())?;
    let sign = |i: usize, j: usize| {
        let diff: Vec<f64> = d.row(i - 1).iter().zip(d.row(j - 1)).map(|(a, b)| a - b).collect();
        spatial_sign(&diff)
    };
    let value = quadruple_sum(t, sign);
    Ok(DValue {
        value,
        kind: StatKind::Sign,
        triple: t,
    })
}

/// Literal quadruple-sum definition of the mean statistic.
pub fn d_mean_oracle(d: &DataMatrix, t: SegmentTriple) -> Result<DValue> {
    t.validate(d.n())?;
    let diff = |i: usize, j: usize| -> Vec<f64> {
        d.row(i - 1).iter().zip(d.row(j - 1)).map(|(a, b)| a - b).collect()
    };
    let value = quadruple_sum(t, diff);
    Ok(DValue {
        value,
        kind: StatKind::Mean,
        triple: t,
    })
}

fn quadruple_sum(t: SegmentTriple, h: impl Fn(usize, usize) -> Vec<f64>) -> f64 {
    let SegmentTriple { k, l, m } = t;
    // h(j1, j2) for every cross pair, computed once.
    let left: Vec<usize> = (l..=k).collect();
    let right: Vec<usize> = (k + 1..=m).collect();
    let hs: Vec<Vec<Vec<f64>>> = left
        .iter()
        .map(|&i| right.iter().map(|&j| h(i, j)).collect())
        .collect();
    let mut total = 0.0;
    for a1 in 0..left.len() {
        for a3 in 0..left.len() {
            if a1 == a3 {
                continue;
            }
            for b2 in 0..right.len() {
                for b4 in 0..right.len() {
                    if b2 == b4 {
                        continue;
                    }
                    total += dot(&hs[a1][b2], &hs[a3][b4]);
                }
            }
        }
    }
    total
}

/// Sign statistic for one triple via the inclusion-exclusion identity.
pub fn d_sign_fast(cache: &PairwiseSignCache, t: SegmentTriple) -> Result<DValue> {
    t.validate(cache.n())?;
    let p = cache.p();
    let (l0, k0, m0) = (t.l - 1, t.k - 1, t.m - 1);
    let mut total = vec![0.0; p];
    let mut cols = vec![0.0; (m0 - k0) * p];
    let mut row = vec![0.0; p];
    let mut row_sq = 0.0;
    let mut untied = 0usize;
    for i in l0..=k0 {
        row.iter_mut().for_each(|v| *v = 0.0);
        for (c, j) in (k0 + 1..=m0).enumerate() {
            if let Some((s, f)) = cache.signed(i, j) {
                untied += 1;
                for ((r, col), v) in row.iter_mut().zip(&mut cols[c * p..(c + 1) * p]).zip(s) {
                    *r += f * v;
                    *col += f * v;
                }
            }
        }
        row_sq += norm_sq(&row);
        total.iter_mut().zip(&row).for_each(|(a, r)| *a += r);
    }
    let col_sq: f64 = cols.chunks_exact(p).map(norm_sq).sum();
    let value = norm_sq(&total) - row_sq - col_sq + untied as f64;
    Ok(DValue {
        value,
        kind: StatKind::Sign,
        triple: t,
    })
}

/// Within-window pair sums `Z(x, y) = sum_{x <= j < i <= y} Y_i' Y_j` for a
/// window of consecutive rows, stored for local indices `0 <= x <= y < len`.
///
/// Rows are demeaned over the window first; the statistic is translation
/// invariant, and centring keeps the Gram sums from cancelling.
pub(crate) struct PairSums {
    len: usize,
    z: Vec<f64>,
}

impl PairSums {
    pub(crate) fn build(d: &DataMatrix, start: usize, len: usize) -> Self {
        let p = d.p();
        let mut mean = vec![0.0; p];
        for i in start..start + len {
            mean.iter_mut().zip(d.row(i)).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= len as f64);
        let rows: Vec<Vec<f64>> = (start..start + len)
            .map(|i| d.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect())
            .collect();
        let mut gram = vec![0.0; len * len];
        for i in 0..len {
            for j in 0..i {
                gram[i * len + j] = dot(&rows[i], &rows[j]);
            }
        }
        // Z(x, y) = Z(x + 1, y) + sum_{i = x+1}^{y} G[i][x]
        let mut z = vec![0.0; len * len];
        for x in (0..len).rev() {
            let mut col = 0.0;
            for y in x + 1..len {
                col += gram[y * len + x];
                z[x * len + y] = z[(x + 1) * len + y] + col;
            }
        }
        Self { len, z }
    }

    #[inline]
    fn z(&self, x: usize, y: usize) -> f64 {
        if x >= y {
            0.0
        } else {
            self.z[x * self.len + y]
        }
    }

    /// `D(t; l, m)` in window-local indices.
    #[inline]
    pub(crate) fn d(&self, t: usize, l: usize, m: usize) -> f64 {
        let (ml, mt1, tl) = ((m - l) as f64, (m - t - 1) as f64, (t - l) as f64);
        2.0 * (mt1 * ml * self.z(l, t) + tl * ml * self.z(t + 1, m) - tl * mt1 * self.z(l, m))
    }
}

/// Mean-based statistic for one triple through window pair sums.
pub fn d_mean(d: &DataMatrix, t: SegmentTriple) -> Result<DValue> {
    t.validate(d.n())?;
    let len = t.m - t.l + 1;
    let sums = PairSums::build(d, t.l - 1, len);
    Ok(DValue {
        value: sums.d(t.k - t.l, 0, len - 1),
        kind: StatKind::Mean,
        triple: t,
    })
}
