//! CSV tables, tabulated potentials, checkpoints and matrix dumps.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use lobatto_core::hamiltonian::SparseHamiltonian;
use lobatto_core::potential::CubicSpline;
use lobatto_core::propagator::WavefunctionState;
use lobatto_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Comma-separated table with `#` comment lines ahead of the header.
pub struct Table {
    comments: Vec<String>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { comments: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn comment(mut self, line: impl Into<String>) -> Self {
        self.comments.push(line.into());
        self
    }

    pub fn push<I, T>(&mut self, row: I)
    where
        I: IntoIterator<Item = T>,
        T: Cell,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.cell()).collect();
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path) -> AppResult<()> {
        let ctx = || format!("writing {}", path.display());
        let mut f = BufWriter::new(File::create(path).map_err(|e| AppError::io(ctx(), e))?);
        let mut body = String::new();
        for c in &self.comments {
            body.push_str("# ");
            body.push_str(c);
            body.push('\n');
        }
        body.push_str(&self.columns.join(","));
        body.push('\n');
        for r in &self.rows {
            body.push_str(&r.join(","));
            body.push('\n');
        }
        f.write_all(body.as_bytes()).and_then(|_| f.flush()).map_err(|e| AppError::io(ctx(), e))
    }
}

pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        format!("{self:.17e}")
    }
}

impl Cell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        self.to_string()
    }
}

/// Reads `r, V` pairs separated by commas or whitespace; `#` starts a
/// comment line.
pub fn read_tabulated(path: &Path) -> AppResult<CubicSpline> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
    let normalized: String = text
        .lines()
        .map(|l| l.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n");
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_reader(normalized.as_bytes());
    let bad = |message: String| AppError::Data { path: path.to_path_buf(), message };
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        if rec.is_empty() || rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 2 {
            return Err(bad(format!("record {} has {} fields, expected 2", line + 1, rec.len())));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("record {}: {e}", line + 1)));
        x.push(parse(&rec[0])?);
        y.push(parse(&rec[1])?);
    }
    CubicSpline::new(x, y).map_err(|e| bad(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub time: f64,
    pub dimension: usize,
    /// Hex fingerprint of the grid the amplitudes live on.
    pub grid_hash: String,
}

/// Writes `<stem>.bin` (little-endian interleaved re/im doubles) and
/// `<stem>.json`; returns both paths.
pub fn write_checkpoint(stem: &Path, psi: &WavefunctionState, grid_hash: u64) -> AppResult<(PathBuf, PathBuf)> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let mut bytes = Vec::with_capacity(psi.amplitudes.len() * 16);
    for z in &psi.amplitudes {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    std::fs::write(&bin, bytes).map_err(|e| AppError::io(format!("writing {}", bin.display()), e))?;
    let meta = CheckpointMeta { time: psi.time, dimension: psi.amplitudes.len(), grid_hash: format!("{grid_hash:016x}") };
    let text = serde_json::to_string_pretty(&meta).expect("checkpoint metadata serializes");
    std::fs::write(&json, text).map_err(|e| AppError::io(format!("writing {}", json.display()), e))?;
    Ok((bin, json))
}

pub fn read_checkpoint(stem: &Path) -> AppResult<(WavefunctionState, CheckpointMeta)> {
    let bin = stem.with_extension("bin");
    let json = stem.with_extension("json");
    let text = std::fs::read_to_string(&json).map_err(|e| AppError::io(format!("reading {}", json.display()), e))?;
    let meta: CheckpointMeta =
        serde_json::from_str(&text).map_err(|e| AppError::Data { path: json.clone(), message: e.to_string() })?;
    let bytes = std::fs::read(&bin).map_err(|e| AppError::io(format!("reading {}", bin.display()), e))?;
    if bytes.len() != meta.dimension * 16 {
        return Err(AppError::Data {
            path: bin,
            message: format!("{} bytes for dimension {}", bytes.len(), meta.dimension),
        });
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let amplitudes = bytes.chunks_exact(16).map(|c| Complex64::new(f(&c[..8]), f(&c[8..]))).collect();
    Ok((WavefunctionState { amplitudes, time: meta.time }, meta))
}

/// Upper-triangle entries as `row col value` lines after a `N M dimension`
/// header.
pub fn write_matrix(path: &Path, h: &SparseHamiltonian) -> AppResult<()> {
    let ctx = || format!("writing {}", path.display());
    let mut f = BufWriter::new(File::create(path).map_err(|e| AppError::io(ctx(), e))?);
    let a = &h.matrix;
    let io = |r: std::io::Result<()>| r.map_err(|e| AppError::io(ctx(), e));
    io(writeln!(f, "{} {} {}", h.order, h.num_elements, a.dim()))?;
    for i in 0..a.dim() {
        for j in i..(i + a.bandwidth() + 1).min(a.dim()) {
            let v = a.get(i, j);
            if v != 0.0 {
                io(writeln!(f, "{i} {j} {v:.17e}"))?;
            }
        }
    }
    io(f.flush())
}
