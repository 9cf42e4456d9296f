//! CSV rows and the JSON summary written next to them.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, SCHEMA};
use crate::fit::Columns;

pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha), seed_from_u64";

pub trait ReportRow: Serialize + Columns + Send {
    const HEADER: &'static [&'static str];

    fn violates(&self) -> bool;
}

#[derive(Debug, Clone)]
pub struct Report {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    pub csv: Vec<u8>,
    pub rows: usize,
    /// Zero-based indices of rows that break their bound.
    pub violations: Vec<usize>,
    pub stats: Value,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn from_rows<R: ReportRow>(
        experiment: Experiment,
        seed: Option<u64>,
        rows: &[R],
        stats: Value,
        warnings: Vec<String>,
    ) -> Result<Self, csv::Error> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(R::HEADER)?;
        for r in rows {
            w.serialize(r)?;
        }
        let csv = w.into_inner().map_err(|e| e.into_error())?;
        let violations = rows
            .iter()
            .enumerate()
            .filter(|(_, r)| r.violates())
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            experiment,
            seed,
            csv,
            rows: rows.len(),
            violations,
            stats,
            warnings,
        })
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self, runtime_ms: u128) -> Value {
        json!({
            "schema": SCHEMA,
            "experiment": self.experiment.name(),
            "seed": self.seed,
            "generator": GENERATOR,
            "rows": self.rows,
            "violations": self.violations,
            "passed": self.passed(),
            "warnings": self.warnings,
            "stats": self.stats,
            "runtime_ms": runtime_ms as u64,
        })
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}.csv", self.experiment.name()))
    }

    pub fn summary_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("{}_summary.json", self.experiment.name()))
    }

    pub fn write(&self, dir: &Path, runtime_ms: u128) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(self.csv_path(dir), &self.csv)?;
        let mut text = serde_json::to_string_pretty(&self.summary(runtime_ms)).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(self.summary_path(dir), text)
    }
}
