//! Labeled embedding sets: loading, validation, writing, and stratified
//! splitting.
//!
//! Labels are strings on disk and dense indices in memory; the mapping is
//! the sorted order of the distinct labels, so per-class score vectors are
//! reproducible across runs. Vectors are stored as 32-bit floats in the
//! binary format and computed on as `f64` in memory.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};
use crate::rng::{stream_rng, Stream};

const BINARY_MAGIC: &[u8; 4] = b"NEDB";
const BINARY_VERSION: u8 = 1;

/// On-disk embedding file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    /// `NEDB` header, little-endian counts, f32 payload.
    Binary,
    /// One `{"id", "label", "vector"}` object per line.
    JsonLines,
    /// Header `id,label,v0,...,v{m-1}`.
    Csv,
}

impl std::str::FromStr for FileFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "binary" => Ok(FileFormat::Binary),
            "jsonl" => Ok(FileFormat::JsonLines),
            "csv" => Ok(FileFormat::Csv),
            other => Err(format!("unknown format `{other}` (binary|jsonl|csv)")),
        }
    }
}

impl std::fmt::Display for FileFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FileFormat::Binary => "binary",
            FileFormat::JsonLines => "jsonl",
            FileFormat::Csv => "csv",
        })
    }
}

/// Whether a file is loaded as a gallery or as queries. Query sets may
/// leave classes of the label space empty; support sets may not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetRole {
    Support,
    Query,
}

/// One labeled point: identifier, embedding vector, dense label index.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub vector: Vec<f64>,
    pub label: usize,
}

/// Ordered set of distinct class names; index = position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    labels: Vec<String>,
}

impl LabelSpace {
    /// Builds the space from arbitrary label occurrences: distinct, sorted.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        LabelSpace {
            labels: set.into_iter().collect(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn names(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Immutable collection of labeled embeddings sharing one dimension and
/// label space.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportSet {
    records: Vec<EmbeddingRecord>,
    dim: usize,
    label_space: LabelSpace,
    class_counts: Vec<usize>,
}

/// A record as parsed from disk, before label indexing and validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    label: String,
    vector: Vec<f64>,
}

impl SupportSet {
    /// Validates raw records into a set. With `space = None` the label
    /// space is inferred from the records themselves (sorted distinct
    /// labels); with a fixed space, unknown labels are rejected and, for
    /// [`SetRole::Support`], so are classes left without records.
    pub fn from_raw(
        raw: Vec<(String, String, Vec<f64>)>,
        space: Option<LabelSpace>,
        role: SetRole,
    ) -> Result<SupportSet> {
        let raw: Vec<RawRecord> = raw
            .into_iter()
            .map(|(id, label, vector)| RawRecord { id, label, vector })
            .collect();
        Self::build(raw, space, role)
    }

    fn build(raw: Vec<RawRecord>, space: Option<LabelSpace>, role: SetRole) -> Result<SupportSet> {
        let label_space = match space {
            Some(s) => s,
            None => LabelSpace::from_labels(raw.iter().map(|r| r.label.clone())),
        };
        let dim = raw.first().map(|r| r.vector.len()).unwrap_or(0);
        let mut records = Vec::with_capacity(raw.len());
        let mut class_counts = vec![0usize; label_space.len()];
        for r in raw {
            if r.vector.len() != dim {
                return Err(NedError::DimensionMismatch {
                    id: r.id,
                    expected: dim,
                    got: r.vector.len(),
                });
            }
            if r.vector.iter().any(|v| !v.is_finite()) {
                return Err(NedError::NonFinite { id: r.id });
            }
            let label = label_space
                .index_of(&r.label)
                .ok_or_else(|| NedError::UnknownLabel {
                    id: r.id.clone(),
                    label: r.label.clone(),
                })?;
            class_counts[label] += 1;
            records.push(EmbeddingRecord {
                id: r.id,
                vector: r.vector,
                label,
            });
        }
        if role == SetRole::Support {
            if let Some(empty) = class_counts.iter().position(|&c| c == 0) {
                return Err(NedError::EmptyClass {
                    label: label_space.name(empty).to_string(),
                });
            }
        }
        Ok(SupportSet {
            records,
            dim,
            label_space,
            class_counts,
        })
    }

    /// Rebuilds a set from already-validated records (internal use).
    fn from_validated(
        records: Vec<EmbeddingRecord>,
        dim: usize,
        label_space: LabelSpace,
    ) -> SupportSet {
        let mut class_counts = vec![0usize; label_space.len()];
        for r in &records {
            class_counts[r.label] += 1;
        }
        SupportSet {
            records,
            dim,
            label_space,
            class_counts,
        }
    }

    /// Loads a file, inferring the label space from its records.
    pub fn load(path: impl AsRef<Path>, format: FileFormat) -> Result<SupportSet> {
        let raw = read_raw(path.as_ref(), format)?;
        Self::build(raw, None, SetRole::Support)
    }

    /// Loads a file against a fixed label space.
    pub fn load_with_space(
        path: impl AsRef<Path>,
        format: FileFormat,
        space: &LabelSpace,
        role: SetRole,
    ) -> Result<SupportSet> {
        let raw = read_raw(path.as_ref(), format)?;
        Self::build(raw, Some(space.clone()), role)
    }

    pub fn write(&self, path: impl AsRef<Path>, format: FileFormat) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| NedError::io(path, e))?;
        let mut w = BufWriter::new(file);
        match format {
            FileFormat::Binary => self.write_binary(&mut w),
            FileFormat::JsonLines => self.write_jsonl(&mut w),
            FileFormat::Csv => self.write_csv(&mut w),
        }
        .map_err(|e| NedError::io(path, e))
    }

    fn write_binary(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&[BINARY_VERSION])?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        for r in &self.records {
            let label = self.label_space.name(r.label);
            for field in [r.id.as_bytes(), label.as_bytes()] {
                let len = u16::try_from(field.len()).map_err(|_| {
                    std::io::Error::new(
                        std::io::ErrorKind::InvalidInput,
                        "id or label longer than 65535 bytes",
                    )
                })?;
                w.write_all(&len.to_le_bytes())?;
                w.write_all(field)?;
            }
            for &v in &r.vector {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        w.flush()
    }

    fn write_jsonl(&self, w: &mut impl Write) -> std::io::Result<()> {
        for r in &self.records {
            let raw = RawRecord {
                id: r.id.clone(),
                label: self.label_space.name(r.label).to_string(),
                vector: r.vector.clone(),
            };
            serde_json::to_writer(&mut *w, &raw)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend((0..self.dim).map(|i| format!("v{i}")));
        csv.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.id.clone(), self.label_space.name(r.label).to_string()];
            row.extend(r.vector.iter().map(|v| v.to_string()));
            csv.write_record(&row)?;
        }
        csv.flush()
    }

    /// Stratified split: every class contributes `ceil(fraction * N_j)`
    /// records to the returned holdout (second) set, leaving at least one
    /// in the first. Deterministic in `seed`; both halves keep the input's
    /// record order and full label space.
    pub fn split_holdout(&self, fraction: f64, seed: u64) -> Result<(SupportSet, SupportSet)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(NedError::config(format!(
                "holdout fraction must be in (0, 1), got {fraction}"
            )));
        }
        for (class, &count) in self.class_counts.iter().enumerate() {
            if count < 2 {
                return Err(NedError::SingleRecordClass {
                    label: self.label_space.name(class).to_string(),
                });
            }
        }
        let mut held = vec![false; self.records.len()];
        for class in 0..self.label_space.len() {
            let mut members: Vec<usize> = (0..self.records.len())
                .filter(|&i| self.records[i].label == class)
                .collect();
            let n_j = members.len();
            let take = ((fraction * n_j as f64).ceil() as usize).min(n_j - 1);
            let mut rng = stream_rng(seed, Stream::Split, class as u64);
            members.shuffle(&mut rng);
            for &i in members.iter().take(take) {
                held[i] = true;
            }
        }
        let (mut rest, mut holdout) = (Vec::new(), Vec::new());
        for (i, r) in self.records.iter().enumerate() {
            if held[i] {
                holdout.push(r.clone());
            } else {
                rest.push(r.clone());
            }
        }
        Ok((
            SupportSet::from_validated(rest, self.dim, self.label_space.clone()),
            SupportSet::from_validated(holdout, self.dim, self.label_space.clone()),
        ))
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn num_classes(&self) -> usize {
        self.label_space.len()
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Classes with fewer than `k` records; a warning-level diagnostic for
    /// callers that are about to run k-NN scoring.
    pub fn classes_below(&self, k: usize) -> Vec<&str> {
        self.class_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c < k)
            .map(|(j, _)| self.label_space.name(j))
            .collect()
    }
}

fn read_raw(path: &Path, format: FileFormat) -> Result<Vec<RawRecord>> {
    let file = File::open(path).map_err(|e| NedError::io(path, e))?;
    let mut reader = BufReader::new(file);
    match format {
        FileFormat::Binary => read_binary(path, &mut reader),
        FileFormat::JsonLines => read_jsonl(path, &mut reader),
        FileFormat::Csv => read_csv(path, &mut reader),
    }
}

fn read_binary(path: &Path, r: &mut impl Read) -> Result<Vec<RawRecord>> {
    let bad = |detail: &str| NedError::malformed(path, None, detail);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| bad("missing NEDB magic"))?;
    if &magic != BINARY_MAGIC {
        return Err(bad("bad magic bytes, not a NEDB file"));
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)
        .map_err(|_| bad("truncated header"))?;
    if version[0] != BINARY_VERSION {
        return Err(bad(&format!("unsupported version {}", version[0])));
    }
    let count = read_u64(r).map_err(|_| bad("truncated header"))? as usize;
    let dim = read_u64(r).map_err(|_| bad("truncated header"))? as usize;
    let mut records = Vec::with_capacity(count);
    for i in 0..count {
        let trunc = || NedError::malformed(path, None, format!("truncated record {i}"));
        let id = read_string(r).map_err(|_| trunc())?;
        let label = read_string(r).map_err(|_| trunc())?;
        let mut payload = vec![0u8; dim * 4];
        r.read_exact(&mut payload).map_err(|_| trunc())?;
        let vector = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        records.push(RawRecord { id, label, vector });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| NedError::io(path, e))? != 0 {
        return Err(bad("trailing bytes after last record"));
    }
    Ok(records)
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_string(r: &mut impl Read) -> std::io::Result<String> {
    let mut len = [0u8; 2];
    r.read_exact(&mut len)?;
    let mut bytes = vec![0u8; u16::from_le_bytes(len) as usize];
    r.read_exact(&mut bytes)?;
    String::from_utf8(bytes)
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, "invalid UTF-8"))
}

fn read_jsonl(path: &Path, r: &mut impl BufRead) -> Result<Vec<RawRecord>> {
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let lineno = i as u64 + 1;
        let line = line.map_err(|e| NedError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| NedError::malformed(path, Some(lineno), e.to_string()))?;
        records.push(raw);
    }
    Ok(records)
}

fn read_csv(path: &Path, r: &mut impl Read) -> Result<Vec<RawRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader
        .headers()
        .map_err(|e| NedError::malformed(path, Some(1), e.to_string()))?
        .clone();
    if header.len() < 2 || &header[0] != "id" || &header[1] != "label" {
        return Err(NedError::malformed(
            path,
            Some(1),
            "header must start with `id,label`",
        ));
    }
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("v{i}") {
            return Err(NedError::malformed(
                path,
                Some(1),
                format!("expected column `v{i}`, found `{name}`"),
            ));
        }
    }
    let dim = header.len() - 2;
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line());
            NedError::malformed(path, line, e.to_string())
        })?;
        let line = row.position().map(|p| p.line());
        if row.len() != dim + 2 {
            return Err(NedError::malformed(
                path,
                line,
                format!("expected {} fields, found {}", dim + 2, row.len()),
            ));
        }
        let mut vector = Vec::with_capacity(dim);
        for field in row.iter().skip(2) {
            let v: f64 = field.parse().map_err(|_| {
                NedError::malformed(path, line, format!("not a number: `{field}`"))
            })?;
            vector.push(v);
        }
        records.push(RawRecord {
            id: row[0].to_string(),
            label: row[1].to_string(),
            vector,
        });
    }
    Ok(records)
}
