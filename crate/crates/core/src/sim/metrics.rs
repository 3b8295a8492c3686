//! Agreement and error measures for estimated segmentations.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn pairs(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

fn segment_labels(cps: &[usize], n: usize) -> Vec<usize> {
    let mut labels = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 1..=n {
        labels.push(seg);
        if cps.get(seg) == Some(&i) {
            seg += 1;
        }
    }
    labels
}

/// Adjusted Rand index between two labelings of the same items.
pub fn ari_labels<A, B>(a: &[A], b: &[B]) -> f64
where
    A: std::hash::Hash + Eq,
    B: std::hash::Hash + Eq,
{
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len() as f64;
    let mut cells: HashMap<(&A, &B), f64> = HashMap::new();
    let mut rows: HashMap<&A, f64> = HashMap::new();
    let mut cols: HashMap<&B, f64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *cells.entry((x, y)).or_default() += 1.0;
        *rows.entry(x).or_default() += 1.0;
        *cols.entry(y).or_default() += 1.0;
    }
    let index: f64 = cells.values().map(|&c| pairs(c)).sum();
    let sa: f64 = rows.values().map(|&c| pairs(c)).sum();
    let sb: f64 = cols.values().map(|&c| pairs(c)).sum();
    let expected = sa * sb / pairs(n);
    let max = (sa + sb) / 2.0;
    if max == expected {
        // Both partitions are all-in-one or all-singletons.
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Adjusted Rand index between the segmentations of `{1, ..., n}` induced by
/// two ascending change-point lists.
pub fn ari(a: &[usize], b: &[usize], n: usize) -> f64 {
    ari_labels(&segment_labels(a, n), &segment_labels(b, n))
}

/// Mean of `(m_hat - m)^2` over `(m_hat, m)` pairs.
pub fn mse_mhat(outcomes: &[(usize, usize)]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::domain("no outcomes"));
    }
    let total: f64 = outcomes.iter().map(|&(h, m)| (h as f64 - m as f64).powi(2)).sum();
    Ok(total / outcomes.len() as f64)
}
