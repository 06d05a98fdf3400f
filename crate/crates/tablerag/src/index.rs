//! Chunking, embedding, and exact cosine top-k search over a persistable
//! store.
//!
//! The built-in embedder is a hashed bag-of-words: deterministic across
//! platforms, so every pipeline stage runs offline and reproducibly.
//! Search is an exact scan — corpora here are document collections, not
//! web scale — which keeps results provably equal to a naive oracle.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enrich::TableRef;

pub const FORMAT_VERSION: u64 = 1;
pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_MAX_CHARS: usize = 1000;
pub const DEFAULT_OVERLAP: usize = 150;
pub const HASHED_BOW_ID: &str = "hashed-bow-v1";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("embedding has dimension {got}, index expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("embedding norm {norm} is neither unit nor zero")]
    InvalidEmbedding { norm: f64 },
    #[error("chunk {chunk_id}: {detail}")]
    InvalidChunk { chunk_id: String, detail: String },
    #[error("unknown embedder key {0:?} (expected \"hashed-bow-v1\" or \"remote:<name>\")")]
    UnknownEmbedder(String),
    #[error("no remote embedding provider is registered for {0:?}")]
    RemoteEmbedder(String),
    #[error("index file {path}: version {found} unsupported (this build reads {expected})")]
    VersionMismatch {
        path: PathBuf,
        found: u64,
        expected: u64,
    },
    #[error("index file {path}, line {line}: {detail}")]
    CorruptRecord {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("index file {path}: {detail}")]
    Io { path: PathBuf, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChunkKind {
    Text,
    TableRow,
}

impl ChunkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChunkKind::Text => "text",
            ChunkKind::TableRow => "table_row",
        }
    }
}

/// An indexed unit of text with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    /// "<doc_id>:<kind>:<ordinal>", unique within an index.
    pub chunk_id: String,
    pub doc_id: String,
    pub page_index: usize,
    pub kind: ChunkKind,
    pub text: String,
    /// Present exactly when kind is TableRow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_ref: Option<TableRef>,
}

impl Chunk {
    pub fn text_chunk(doc_id: &str, page_index: usize, ordinal: usize, text: String) -> Self {
        Self {
            chunk_id: format!("{doc_id}:text:{ordinal}"),
            doc_id: doc_id.to_string(),
            page_index,
            kind: ChunkKind::Text,
            text,
            table_ref: None,
        }
    }

    pub fn table_row_chunk(table_ref: TableRef, page_index: usize, ordinal: usize, text: String) -> Self {
        Self {
            chunk_id: format!("{}:table_row:{ordinal}", table_ref.doc_id),
            doc_id: table_ref.doc_id.clone(),
            page_index,
            kind: ChunkKind::TableRow,
            text,
            table_ref: Some(table_ref),
        }
    }

    fn validate(&self) -> Result<(), IndexError> {
        let consistent = match self.kind {
            ChunkKind::Text => self.table_ref.is_none(),
            ChunkKind::TableRow => self.table_ref.is_some(),
        };
        if !consistent {
            return Err(IndexError::InvalidChunk {
                chunk_id: self.chunk_id.clone(),
                detail: format!(
                    "kind {} and table_ref presence disagree",
                    self.kind.as_str()
                ),
            });
        }
        if self.text.is_empty() {
            return Err(IndexError::InvalidChunk {
                chunk_id: self.chunk_id.clone(),
                detail: "empty text".into(),
            });
        }
        Ok(())
    }
}

/// A fixed-dimension vector, unit-length or all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub values: Vec<f64>,
}

impl Embedding {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    fn check_invariant(&self) -> Result<(), IndexError> {
        let norm = self.norm();
        if self.is_zero() || (norm - 1.0).abs() <= 1e-9 {
            Ok(())
        } else {
            Err(IndexError::InvalidEmbedding { norm })
        }
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Split on blank-line paragraph boundaries and greedily pack paragraphs
/// into pieces of at most `max_chars` characters. A single paragraph
/// longer than `max_chars` is hard-split, each later piece re-starting
/// with the previous piece's final `overlap` characters.
pub fn chunk_text(text: &str, max_chars: usize, overlap: usize) -> Vec<String> {
    debug_assert!(max_chars > overlap, "max_chars must exceed overlap");
    let paragraphs: Vec<&str> = text
        .split("\n\n")
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut buffer = String::new();
    for para in paragraphs {
        let para_len = para.chars().count();
        if para_len > max_chars {
            if !buffer.is_empty() {
                out.push(std::mem::take(&mut buffer));
            }
            hard_split(para, max_chars, overlap, &mut out);
            continue;
        }
        let buffer_len = buffer.chars().count();
        if buffer.is_empty() {
            buffer.push_str(para);
        } else if buffer_len + 2 + para_len <= max_chars {
            buffer.push_str("\n\n");
            buffer.push_str(para);
        } else {
            out.push(std::mem::replace(&mut buffer, para.to_string()));
        }
    }
    if !buffer.is_empty() {
        out.push(buffer);
    }
    out
}

fn hard_split(para: &str, max_chars: usize, overlap: usize, out: &mut Vec<String>) {
    let chars: Vec<char> = para.chars().collect();
    let step = max_chars - overlap;
    let mut start = 0;
    loop {
        let end = (start + max_chars).min(chars.len());
        out.push(chars[start..end].iter().collect());
        if end == chars.len() {
            return;
        }
        start += step;
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Text-to-vector strategies selectable by config key.
#[derive(Debug, Clone, PartialEq)]
pub enum Embedder {
    /// Hashed bag of words: lowercase, alphanumeric token runs, FNV-1a
    /// slot assignment, term counts, L2 normalization.
    HashedBow { dim: usize },
    /// Named external service; calling `embed` requires a registered
    /// provider, and none ship with this crate.
    Remote { name: String, dim: usize },
}

impl Embedder {
    /// Accepts "hashed-bow-v1" or "remote:<name>".
    pub fn from_key(key: &str, dim: usize) -> Result<Self, IndexError> {
        if key == HASHED_BOW_ID {
            return Ok(Embedder::HashedBow { dim });
        }
        if let Some(name) = key.strip_prefix("remote:") {
            if !name.is_empty() {
                return Ok(Embedder::Remote {
                    name: name.to_string(),
                    dim,
                });
            }
        }
        Err(IndexError::UnknownEmbedder(key.to_string()))
    }

    pub fn id(&self) -> String {
        match self {
            Embedder::HashedBow { .. } => HASHED_BOW_ID.to_string(),
            Embedder::Remote { name, .. } => format!("remote:{name}"),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Embedder::HashedBow { dim } | Embedder::Remote { dim, .. } => *dim,
        }
    }

    pub fn embed(&self, text: &str) -> Result<Embedding, IndexError> {
        match self {
            Embedder::HashedBow { dim } => Ok(hashed_bow(text, *dim)),
            Embedder::Remote { name, .. } => Err(IndexError::RemoteEmbedder(name.clone())),
        }
    }
}

fn hashed_bow(text: &str, dim: usize) -> Embedding {
    let mut values = vec![0.0f64; dim];
    let lowered = text.to_lowercase();
    let mut any = false;
    for token in lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
    {
        let slot = (fnv1a64(token.as_bytes()) % dim as u64) as usize;
        values[slot] += 1.0;
        any = true;
    }
    if !any {
        return Embedding { values };
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut values {
        *v /= norm;
    }
    Embedding { values }
}

/// Exact-scan cosine store. Records live in chunk-id order, which makes
/// every operation deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    embedder_id: String,
    records: BTreeMap<String, (Chunk, Embedding)>,
}

impl VectorIndex {
    pub fn new(dim: usize, embedder_id: impl Into<String>) -> Self {
        Self {
            dim,
            embedder_id: embedder_id.into(),
            records: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedder_id(&self) -> &str {
        &self.embedder_id
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, chunk_id: &str) -> Option<&Chunk> {
        self.records.get(chunk_id).map(|(chunk, _)| chunk)
    }

    pub fn chunks(&self) -> impl Iterator<Item = &Chunk> {
        self.records.values().map(|(chunk, _)| chunk)
    }

    /// Insert or replace by chunk id.
    pub fn upsert(&mut self, chunk: Chunk, embedding: Embedding) -> Result<(), IndexError> {
        if embedding.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                got: embedding.dim(),
                want: self.dim,
            });
        }
        embedding.check_invariant()?;
        chunk.validate()?;
        self.records.insert(chunk.chunk_id.clone(), (chunk, embedding));
        Ok(())
    }

    /// Exact top-k by dot product (cosine on unit vectors). Ties break by
    /// ascending chunk id; fewer than k records returns them all.
    pub fn search(&self, query: &Embedding, k: usize) -> Vec<(String, f64)> {
        let mut scored: Vec<(String, f64)> = self
            .records
            .iter()
            .map(|(id, (_, embedding))| {
                let score = query.dot(embedding);
                // Collapse -0.0 so ordering never depends on its sign.
                (id.clone(), if score == 0.0 { 0.0 } else { score })
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }

    /// Write as JSON lines: a header line, then one record per chunk.
    /// Embedding floats are printed with 17 significant digits, enough to
    /// reparse to the identical f64.
    pub fn persist(&self, path: impl AsRef<Path>) -> Result<(), IndexError> {
        let path = path.as_ref();
        let io_err = |e: std::io::Error| IndexError::Io {
            path: path.to_path_buf(),
            detail: e.to_string(),
        };
        let file = std::fs::File::create(path).map_err(io_err)?;
        let mut w = std::io::BufWriter::new(file);
        let header = serde_json::json!({
            "version": FORMAT_VERSION,
            "dim": self.dim,
            "embedder_id": self.embedder_id,
        });
        writeln!(w, "{header}").map_err(io_err)?;
        for (chunk, embedding) in self.records.values() {
            let chunk_json = serde_json::to_string(chunk).expect("chunk serializes");
            let mut values = String::with_capacity(embedding.values.len() * 24);
            for (i, v) in embedding.values.iter().enumerate() {
                if i > 0 {
                    values.push(',');
                }
                write!(values, "{v:.16e}").expect("string write");
            }
            writeln!(w, "{{\"chunk\":{chunk_json},\"embedding\":[{values}]}}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IndexError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| IndexError::Io {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let mut lines = BufReader::new(file).lines().enumerate();

        let (_, header_line) = lines.next().ok_or_else(|| IndexError::CorruptRecord {
            path: path.to_path_buf(),
            line: 1,
            detail: "empty file (missing header)".into(),
        })?;
        let header_line = header_line.map_err(|e| IndexError::Io {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        #[derive(Deserialize)]
        struct Header {
            version: u64,
            dim: usize,
            embedder_id: String,
        }
        let header: Header =
            serde_json::from_str(&header_line).map_err(|e| IndexError::CorruptRecord {
                path: path.to_path_buf(),
                line: 1,
                detail: format!("bad header: {e}"),
            })?;
        if header.version != FORMAT_VERSION {
            return Err(IndexError::VersionMismatch {
                path: path.to_path_buf(),
                found: header.version,
                expected: FORMAT_VERSION,
            });
        }

        #[derive(Deserialize)]
        struct Record {
            chunk: Chunk,
            embedding: Vec<f64>,
        }
        let mut index = VectorIndex::new(header.dim, header.embedder_id);
        for (zero_based, line) in lines {
            let line_no = zero_based + 1;
            let corrupt = |detail: String| IndexError::CorruptRecord {
                path: path.to_path_buf(),
                line: line_no,
                detail,
            };
            let line = line.map_err(|e| IndexError::Io {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: Record =
                serde_json::from_str(&line).map_err(|e| corrupt(e.to_string()))?;
            let embedding = Embedding {
                values: record.embedding,
            };
            index
                .upsert(record.chunk, embedding)
                .map_err(|e| corrupt(e.to_string()))?;
        }
        Ok(index)
    }
}
