//! The observed panel and dataset ingestion.
//!
//! Rows are time points and columns are coordinates. All user-facing time
//! indices are 1-based: observation `Y_t` lives in row `t - 1`, and a
//! reported change point `k` is the last index of the left segment.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// An `n x p` panel of finite observations.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, p) = values.dim();
        if n == 0 || p == 0 {
            return Err(Error::EmptyInput);
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Parse {
                row: i + 1,
                msg: format!("non-finite value {v} in column {}", j + 1),
            });
        }
        Ok(Self {
            values: values.as_standard_layout().into_owned(),
        })
    }

    /// Builds a matrix from row vectors; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        let p = rows[0].len();
        let mut flat = Vec::with_capacity(n * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Parse {
                    row: i + 1,
                    msg: format!("expected {p} columns, found {}", r.len()),
                });
            }
            flat.extend_from_slice(r);
        }
        let values = Array2::from_shape_vec((n, p), flat).expect("shape checked");
        Self::new(values)
    }

    /// Sample size (number of time points).
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Dimension (number of coordinates).
    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Row `i` (0-based storage index).
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.values.as_slice().expect("standard layout")[i * p..(i + 1) * p]
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.column(j)
    }

    /// Copy of the rows in reverse time order.
    pub fn reversed(&self) -> DataMatrix {
        let mut v = self.values.clone();
        v.invert_axis(ndarray::Axis(0));
        DataMatrix {
            values: v.as_standard_layout().into_owned(),
        }
    }

    /// Applies `f` to every entry; the result must stay finite.
    pub fn map(&self, f: impl Fn(usize, usize, f64) -> f64) -> Result<DataMatrix> {
        let values = Array2::from_shape_fn(self.values.dim(), |(i, j)| f(i, j, self.values[[i, j]]));
        DataMatrix::new(values)
    }
}

/// A split `k` inside the closed window `[l, m]` (all 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SegmentTriple {
    pub k: usize,
    pub l: usize,
    pub m: usize,
}

impl SegmentTriple {
    pub fn new(k: usize, l: usize, m: usize) -> Self {
        Self { k, l, m }
    }

    /// Checks `1 <= l`, `m <= n` and that both blocks hold at least two points.
    pub fn validate(&self, n: usize) -> Result<()> {
        let SegmentTriple { k, l, m } = *self;
        if l < 1 || m > n {
            return Err(Error::domain(format!(
                "triple ({k}; {l}, {m}) lies outside 1..={n}"
            )));
        }
        if k < l + 1 || m < k + 2 {
            return Err(Error::domain(format!(
                "triple ({k}; {l}, {m}) needs at least two points on each side"
            )));
        }
        Ok(())
    }

    pub fn left_len(&self) -> usize {
        self.k + 1 - self.l
    }

    pub fn right_len(&self) -> usize {
        self.m - self.k
    }
}

impl fmt::Display for SegmentTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; {}, {})", self.k, self.l, self.m)
    }
}

pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, has_header)
}

/// Parses comma-separated numeric rows. Rows are time points.
pub fn read_csv(reader: impl Read, has_header: bool) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut flat = Vec::new();
    let mut p = None;
    let mut n = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            row: e.position().map_or(n + 1, |pos| pos.line() as usize),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(n + 1, |pos| pos.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        match p {
            None => p = Some(rec.len()),
            Some(p) if p != rec.len() => {
                return Err(Error::Parse {
                    row: line,
                    msg: format!("expected {p} columns, found {}", rec.len()),
                })
            }
            _ => {}
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                msg: format!("cell {:?} in column {} is not a number", cell, j + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: line,
                    msg: format!("cell {:?} in column {} is not finite", cell, j + 1),
                });
            }
            flat.push(v);
        }
        n += 1;
    }
    let Some(p) = p else {
        return Err(Error::EmptyInput);
    };
    let values = Array2::from_shape_vec((n, p), flat).expect("rectangular by construction");
    DataMatrix::new(values)
}

/// Writes the panel as CSV using the shortest round-trip float representation.
pub fn write_csv(d: &DataMatrix, mut w: impl Write, header: Option<&[String]>) -> std::io::Result<()> {
    if let Some(h) = header {
        writeln!(w, "{}", h.join(","))?;
    }
    for i in 0..d.n() {
        let line: Vec<String> = d.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_csv(d: &DataMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(d, &mut w, None)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Raised when a panel looks transposed for the high-dimensional regime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeWarning {
    pub n: usize,
    pub p: usize,
}

impl fmt::Display for ShapeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "data has n={} time points and p={} coordinates (n > p); rows must be time points",
            self.n, self.p
        )
    }
}

/// Never transposes; only reports a warning when `n > p` was not expected.
pub fn transpose_guard(d: DataMatrix, expect_n_less_than_p: bool) -> (DataMatrix, Option<ShapeWarning>) {
    let warning = (expect_n_less_than_p && d.n() > d.p()).then(|| ShapeWarning { n: d.n(), p: d.p() });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    (d, warning)
}
