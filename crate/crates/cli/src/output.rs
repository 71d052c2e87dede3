//! Result files and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Derived;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub label: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct WallClock {
    pub started_unix_s: f64,
    pub elapsed_s: f64,
}

/// Everything needed to reproduce a run. Only `wall_clock` and `threads`
/// vary between reruns of the same config and seed.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub software_version: String,
    pub config_hash: String,
    pub root_seed: u64,
    pub derived: Derived,
    pub seeds: Vec<SeedRecord>,
    pub files: Vec<FileRecord>,
    pub threads: usize,
    pub wall_clock: WallClock,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that records what it writes.
pub struct Output {
    dir: PathBuf,
    pub format: Format,
    files: Vec<FileRecord>,
    seeds: Vec<SeedRecord>,
    started: Instant,
    started_unix_s: f64,
}

impl Output {
    pub fn create(dir: &Path, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let started_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            files: Vec::new(),
            seeds: Vec::new(),
            started: Instant::now(),
            started_unix_s,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn seed(&mut self, label: impl Into<String>, seed: u64) {
        self.seeds.push(SeedRecord {
            label: label.into(),
            seed,
        });
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(FileRecord {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Flat records as `<stem>.jsonl` or `<stem>.csv`, per the format.
    pub fn write_table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<String> {
        let (name, bytes) = match self.format {
            Format::Json => {
                let mut bytes = Vec::new();
                for row in rows {
                    serde_json::to_writer(&mut bytes, row)?;
                    bytes.push(b'\n');
                }
                (format!("{stem}.jsonl"), bytes)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                for row in rows {
                    w.serialize(row)?;
                }
                (format!("{stem}.csv"), w.into_inner().map_err(|e| e.into_error())?)
            }
        };
        self.write_bytes(&name, &bytes)?;
        Ok(name)
    }

    /// Writes `manifest.json` last, so that it lists every other file.
    pub fn finish(mut self, command: &str, config_hash: String, root_seed: u64, derived: Derived) -> Result<()> {
        let manifest = RunManifest {
            command: command.to_string(),
            software_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            root_seed,
            derived,
            seeds: std::mem::take(&mut self.seeds),
            files: std::mem::take(&mut self.files),
            threads: rayon::current_num_threads(),
            wall_clock: WallClock {
                started_unix_s: self.started_unix_s,
                elapsed_s: self.started.elapsed().as_secs_f64(),
            },
        };
        let bytes = serde_json::to_vec_pretty(&manifest)?;
        let path = self.path("manifest.json");
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
