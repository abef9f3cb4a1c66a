//! Artifact writing: CSV tables, JSON documents and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// `sha256("blob {len}\0" ++ bytes)`, the git object hash with SHA-256.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Single writer for one run's output directory.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<FileRecord>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(FileRecord {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: content_hash(bytes),
        });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn records(&self) -> &[FileRecord] {
        &self.written
    }
}

/// CSV with a header row; floats use the shortest representation that round-trips.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let parts: Vec<String> = cells.iter().map(Cell::render).collect();
        self.writer.write_record(&parts).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

pub enum Cell {
    F(f64),
    I(u64),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // `{}` on f64 is the shortest string that parses back to the same value
            Cell::F(v) => format!("{v}"),
            Cell::I(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}
