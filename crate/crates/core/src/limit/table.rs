//! Sorted replicate tables and their on-disk format.
//!
//! A table file is two lines: a JSON header
//! `{"format":"signseg-quantile-table","format_version":1,"n":..,"replicates":..,"seed":..,"stream_id":..,"noncentral":null}`
//! followed by the base64 encoding of the sorted replicates as little-endian
//! IEEE-754 doubles. The round trip is bit-exact.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use base64::Engine as _;

use super::NoncentralSpec;
use crate::error::{Error, Result};

pub const TABLE_FORMAT_VERSION: u32 = 1;
const FORMAT_TAG: &str = "signseg-quantile-table";

/// Sorted Monte Carlo draws of the fixed-`n` limit.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantileTable {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub sorted_values: Vec<f64>,
    pub noncentral: Option<NoncentralSpec>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct Header {
    format: String,
    format_version: u32,
    n: usize,
    replicates: usize,
    seed: u64,
    stream_id: u64,
    noncentral: Option<NoncentralSpec>,
}

impl QuantileTable {
    /// Empirical `gamma`-quantile, `sorted[ceil(gamma B) - 1]`.
    pub fn quantile(&self, gamma: f64) -> f64 {
        let b = self.sorted_values.len();
        let idx = ((gamma * b as f64).ceil() as usize).clamp(1, b) - 1;
        self.sorted_values[idx]
    }

    /// `(1 + #{draws >= observed}) / (B + 1)`; monotone nonincreasing in
    /// `observed`.
    pub fn p_value(&self, observed: f64) -> Result<f64> {
        let b = self.sorted_values.len();
        if b == 0 {
            return Err(Error::domain("p-value requested from an empty table"));
        }
        if observed.is_nan() {
            return Err(Error::domain("p-value of NaN"));
        }
        let below = self.sorted_values.partition_point(|&v| v < observed);
        Ok((1 + b - below) as f64 / (b + 1) as f64)
    }

    /// Checks that the table is the one a caller asked for.
    pub fn expect(&self, n: usize, replicates: usize, seed: u64) -> Result<()> {
        if (self.n, self.replicates, self.seed) != (n, replicates, seed) {
            return Err(Error::TableMismatch(format!(
                "table holds n={}, B={}, seed={} but n={n}, B={replicates}, seed={seed} was requested",
                self.n, self.replicates, self.seed
            )));
        }
        Ok(())
    }
}

pub fn write_table(table: &QuantileTable, mut w: impl Write) -> std::io::Result<()> {
    let header = Header {
        format: FORMAT_TAG.to_string(),
        format_version: TABLE_FORMAT_VERSION,
        n: table.n,
        replicates: table.replicates,
        seed: table.seed,
        stream_id: table.stream_id,
        noncentral: table.noncentral,
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(table.sorted_values.len() * 8);
    for v in &table.sorted_values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(base64::engine::general_purpose::STANDARD.encode(bytes).as_bytes())?;
    w.write_all(b"\n")
}

pub fn read_table(r: impl Read) -> Result<QuantileTable> {
    let mut r = BufReader::new(r);
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| Error::Format(e.to_string()))?;
    let raw: serde_json::Value =
        serde_json::from_str(line.trim()).map_err(|e| Error::Format(format!("header: {e}")))?;
    if raw.get("format").and_then(|v| v.as_str()) != Some(FORMAT_TAG) {
        return Err(Error::Format("not a quantile table".into()));
    }
    let version = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Format("missing format_version".into()))?;
    if version != TABLE_FORMAT_VERSION as u64 {
        return Err(Error::Version {
            found: version as u32,
            expected: TABLE_FORMAT_VERSION,
        });
    }
    let header: Header = serde_json::from_value(raw).map_err(|e| Error::Format(format!("header: {e}")))?;
    let mut payload = String::new();
    r.read_to_string(&mut payload).map_err(|e| Error::Format(e.to_string()))?;
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(payload.trim())
        .map_err(|e| Error::Format(format!("payload: {e}")))?;
    if bytes.len() != header.replicates * 8 {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {}",
            bytes.len(),
            header.replicates * 8
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if values.windows(2).any(|w| w[0] > w[1]) || values.iter().any(|v| v.is_nan() || *v < 0.0) {
        return Err(Error::Format("payload is not an ascending list of nonnegative values".into()));
    }
    Ok(QuantileTable {
        n: header.n,
        replicates: header.replicates,
        seed: header.seed,
        stream_id: header.stream_id,
        sorted_values: values,
        noncentral: header.noncentral,
    })
}

pub fn save_table(table: &QuantileTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    let file = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_table(table, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&tmp, e))?;
    drop(w);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_table(path: impl AsRef<Path>) -> Result<QuantileTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_table(file)
}
