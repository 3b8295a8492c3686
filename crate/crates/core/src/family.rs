//! Every block statistic a window's self-normalized scan needs.
//!
//! For a window of `len` consecutive observations (local indices
//! `0..len`), the scan uses
//!
//! * `left(t, m)  = D(t; 0, m)` for `0 <= t < m < len` (left-anchored), and
//! * `right(l, t) = D(t; l, len-1)` for `0 <= l <= t < len-1` (right-anchored).
//!
//! The sign kernel builds the left-anchored table in `O(len^3 p)` using,
//! per anchor row `i`, the Gram matrix of its prefix sums
//! `R_i(x) = sum_{j<x} s_ij`. Because `D` is symmetric in its two blocks,
//! the right-anchored table is the left-anchored table of the time-reversed
//! window.

use ndarray::ArrayView2;

use crate::data::DataMatrix;
use crate::sign_kernel::{PairSums, PairwiseSignCache, StatKind};

/// Left- and right-anchored block statistics of one window.
pub struct WindowFamily {
    len: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl WindowFamily {
    /// Sign-kernel family for rows `start..start+len` (0-based) of the
    /// data the cache was built on.
    pub fn sign(cache: &PairwiseSignCache, start: usize, len: usize) -> Self {
        let left = left_anchored_sign(cache, start, len, false);
        let rev = left_anchored_sign(cache, start, len, true);
        let mut right = vec![0.0; len * len];
        // D(t; l, len-1) on the window equals D(len-2-t; 0, len-1-l) reversed.
        for l in 0..len.saturating_sub(1) {
            for t in l..len - 1 {
                right[l * len + t] = rev[(len - 2 - t) * len + (len - 1 - l)];
            }
        }
        Self { len, left, right }
    }

    pub fn mean(d: &DataMatrix, start: usize, len: usize) -> Self {
        let sums = PairSums::build(d, start, len);
        let mut left = vec![0.0; len * len];
        let mut right = vec![0.0; len * len];
        for t in 0..len {
            for m in t + 1..len {
                left[t * len + m] = sums.d(t, 0, m);
            }
        }
        for l in 0..len {
            for t in l..len.saturating_sub(1) {
                right[l * len + t] = sums.d(t, l, len - 1);
            }
        }
        Self { len, left, right }
    }

    pub fn build(kind: StatKind, d: &DataMatrix, cache: Option<&PairwiseSignCache>, start: usize, len: usize) -> Self {
        match kind {
            StatKind::Sign => match cache {
                Some(c) => Self::sign(c, start, len),
                None => {
                    let sub = DataMatrix::new(d.values().slice(ndarray::s![start..start + len, ..]).to_owned())
                        .expect("window of valid data");
                    Self::sign(&PairwiseSignCache::build(&sub), 0, len)
                }
            },
            StatKind::Mean => Self::mean(d, start, len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `D(t; 0, m)`, local indices.
    #[inline]
    pub fn left(&self, t: usize, m: usize) -> f64 {
        debug_assert!(t < m && m < self.len);
        self.left[t * self.len + m]
    }

    /// `D(t; l, len-1)`, local indices.
    #[inline]
    pub fn right(&self, l: usize, t: usize) -> f64 {
        debug_assert!(l <= t && t + 1 < self.len);
        self.right[l * self.len + t]
    }
}

/// `D(t; 0, m)` for all `t < m` on the window, optionally time-reversed.
/// Entry `(t, m)` is stored at `t * len + m`.
fn left_anchored_sign(cache: &PairwiseSignCache, start: usize, len: usize, reversed: bool) -> Vec<f64> {
    let p = cache.p();
    let global = |i: usize| if reversed { start + len - 1 - i } else { start + i };
    let stride = (len + 1) * p;

    // prefix[i][x] = R_i(x) = sum_{j < x} s_ij ; untied[i][x] counts the
    // untied j < x.
    let mut prefix = vec![0.0; len * stride];
    let mut untied = vec![0usize; len * (len + 1)];
    for i in 0..len {
        let block = &mut prefix[i * stride..(i + 1) * stride];
        for x in 0..len {
            let (done, rest) = block.split_at_mut((x + 1) * p);
            let next = &mut rest[..p];
            next.copy_from_slice(&done[x * p..]);
            cache.add_to(next, global(i), global(x), 1.0);
            let tie = i == x || cache.is_tied(global(i), global(x));
            untied[i * (len + 1) + x + 1] = untied[i * (len + 1) + x] + usize::from(!tie);
        }
    }
    let r = |i: usize, x: usize| &prefix[i * stride + x * p..i * stride + (x + 1) * p];

    let mut within = vec![0.0; len * len]; // sum_{i<=t} ||R_i(m+1) - R_i(t+1)||^2
    let mut pairs = vec![0.0; len * len]; // untied cross pairs
    let mut cross = vec![0.0; len * len]; // ||V||^2
    let mut col_acc = vec![0.0; stride]; // sum_{i' <= i} R_{i'}(y)

    for i in 0..len {
        let rows = len - i; // R_i(x) for x in i+1..=len
        let view = ArrayView2::from_shape((rows, p), &prefix[i * stride + (i + 1) * p..(i + 1) * stride])
            .expect("contiguous prefix rows");
        let gram = view.dot(&view.t());
        let h = |x: usize, y: usize| gram[[x - i - 1, y - i - 1]];
        let cnt = &untied[i * (len + 1)..(i + 1) * (len + 1)];
        for t in i..len {
            let htt = h(t + 1, t + 1);
            let row_w = &mut within[t * len..(t + 1) * len];
            let row_p = &mut pairs[t * len..(t + 1) * len];
            for m in t + 1..len {
                row_w[m] += h(m + 1, m + 1) - 2.0 * h(t + 1, m + 1) + htt;
                row_p[m] += (cnt[m + 1] - cnt[t + 1]) as f64;
            }
        }
        for (a, v) in col_acc.iter_mut().zip(&prefix[i * stride..(i + 1) * stride]) {
            *a += v;
        }
        // After anchor i, col_acc[y] = sum_{i' <= i} sum_{j < y} s_{i'j}, which
        // is V(i; 0, m) for y = m + 1 (within-block terms cancel).
        for m in i + 1..len {
            let v = &col_acc[(m + 1) * p..(m + 2) * p];
            cross[i * len + m] = v.iter().map(|x| x * x).sum();
        }
    }

    // sum_{j in [t+1, m]} ||w_j||^2 with w_j = -R_j(t+1).
    let mut out = vec![0.0; len * len];
    for t in 0..len {
        let mut col_sq = 0.0;
        for m in t + 1..len {
            let w = r(m, t + 1);
            col_sq += w.iter().map(|x| x * x).sum::<f64>();
            let idx = t * len + m;
            out[idx] = cross[idx] - within[idx] - col_sq + pairs[idx];
        }
    }
    out
}
