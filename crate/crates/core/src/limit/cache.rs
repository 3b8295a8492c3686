use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{load_table, save_table, simulate_limit, QuantileTable};
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Supplies the null table for a given window length.
pub trait TableSource: Sync {
    fn table(&self, n: usize) -> Result<Arc<QuantileTable>>;
}

/// Central tables keyed by window length, simulated on first use.
///
/// With a directory attached, tables are read from and written to
/// `tn_n{n}_B{B}_seed{seed}.sqt`; a file whose header disagrees with the
/// requested `(n, B, seed)` is an error rather than a silent resimulation.
pub struct TableCache {
    dir: Option<PathBuf>,
    replicates: usize,
    seed: u64,
    tables: Mutex<HashMap<usize, Arc<QuantileTable>>>,
}

pub const DEFAULT_REPLICATES: usize = 50_000;

impl TableCache {
    pub fn new(dir: Option<PathBuf>, replicates: usize, seed: u64) -> Self {
        Self {
            dir,
            replicates,
            seed,
            tables: Mutex::new(HashMap::new()),
        }
    }

    /// In-memory only.
    pub fn in_memory(replicates: usize, seed: u64) -> Self {
        Self::new(None, replicates, seed)
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn path_for(&self, n: usize) -> Option<PathBuf> {
        self.dir
            .as_ref()
            .map(|d| d.join(format!("tn_n{n}_B{}_seed{}.sqt", self.replicates, self.seed)))
    }

    /// Stream used for the length-`n` table; distinct lengths use distinct
    /// streams.
    pub fn stream_for(&self, n: usize) -> RandomStream {
        RandomStream::new(self.seed, n as u64)
    }

    /// Makes sure every listed length is available, simulating in parallel.
    pub fn warm(&self, lengths: &[usize]) -> Result<()> {
        let missing: Vec<usize> = {
            let held = self.tables.lock().expect("table cache poisoned");
            let mut v: Vec<usize> = lengths.iter().copied().filter(|n| !held.contains_key(n)).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            missing.par_iter().try_for_each(|&n| self.table(n).map(|_| ()))
        }
        #[cfg(not(feature = "parallel"))]
        {
            missing.iter().try_for_each(|&n| self.table(n).map(|_| ()))
        }
    }

    fn obtain(&self, n: usize) -> Result<QuantileTable> {
        if let Some(path) = self.path_for(n) {
            if path.exists() {
                let t = load_table(&path)?;
                t.expect(n, self.replicates, self.seed)?;
                if t.noncentral.is_some() {
                    return Err(Error::TableMismatch(format!("{} holds a noncentral table", path.display())));
                }
                return Ok(t);
            }
            log::warn!(
                "no cached table for n = {n} in {}; simulating {} replicates",
                path.parent().map_or_else(|| ".".into(), |p| p.display().to_string()),
                self.replicates
            );
            let t = simulate_limit(n, self.replicates, self.stream_for(n), None)?;
            if let Some(dir) = &self.dir {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            save_table(&t, &path)?;
            return Ok(t);
        }
        simulate_limit(n, self.replicates, self.stream_for(n), None)
    }
}

impl TableSource for TableCache {
    fn table(&self, n: usize) -> Result<Arc<QuantileTable>> {
        if let Some(t) = self.tables.lock().expect("table cache poisoned").get(&n) {
            return Ok(Arc::clone(t));
        }
        // Simulate outside the lock; a racing duplicate is identical anyway.
        let t = Arc::new(self.obtain(n)?);
        let mut held = self.tables.lock().expect("table cache poisoned");
        Ok(Arc::clone(held.entry(n).or_insert(t)))
    }
}
