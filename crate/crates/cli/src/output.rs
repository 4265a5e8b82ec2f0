//! Run directory: config snapshot, summary and provenance-stamped CSVs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::columns::Table;
use crate::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct RunDir {
    dir: PathBuf,
    snapshot: String,
    hash: String,
    seed: u64,
}

/// Shortest round-trip decimal form; `NaN` and `inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

impl RunDir {
    /// Creates `dir` and writes `config.snapshot`.
    pub fn create(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let snapshot = cfg.snapshot();
        let hash = hex::encode(Sha256::digest(snapshot.as_bytes()));
        fs::write(dir.join("config.snapshot"), &snapshot)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            snapshot,
            hash,
            seed: cfg.seed,
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn preamble(&self) -> String {
        format!(
            "# trmusic {VERSION}\n# config_sha256 {}\n# master_seed {}\n",
            self.hash, self.seed
        )
    }

    /// Writes `rows` under the header of `table` (with `repeat` copies of
    /// its repeated group).
    pub fn write_csv(&self, table: &Table, repeat: usize, rows: &[Vec<String>]) -> Result<()> {
        let header = table.header(repeat);
        let mut w = csv::Writer::from_writer(self.preamble().into_bytes());
        w.write_record(&header)?;
        for r in rows {
            debug_assert_eq!(r.len(), header.len());
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        let path = self.dir.join(table.file);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// Writes `summary.json` with provenance fields and `results`.
    pub fn write_summary(&self, experiment: &str, results: Value) -> Result<()> {
        let v = json!({
            "tool": "trmusic",
            "version": VERSION,
            "experiment": experiment,
            "config_sha256": self.hash,
            "master_seed": self.seed,
            "config": self.snapshot,
            "results": results,
        });
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        fs::write(self.dir.join("summary.json"), text)?;
        Ok(())
    }
}
