//! Run configuration: a TOML file describing mode, index location,
//! chunking, table detection, retrieval, and the two model gateways.
//!
//! Every field has a default, so an empty file (or no file) is a valid
//! configuration. Values are range-checked on load; command-line flags
//! override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{Embedder, IndexError};
use crate::rag::{IngestOptions, PipelineMode};
use crate::table::DetectParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {detail}")]
    Read { path: PathBuf, detail: String },
    #[error("config {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("config field {field}: {detail}")]
    Invalid { field: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkingConfig {
    pub max_chars: usize,
    pub overlap: usize,
    /// Vertical tolerance when grouping spans into text lines.
    pub line_tol: f64,
}

impl Default for ChunkingConfig {
    fn default() -> Self {
        Self {
            max_chars: crate::index::DEFAULT_MAX_CHARS,
            overlap: crate::index::DEFAULT_OVERLAP,
            line_tol: crate::pdf::DEFAULT_LINE_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    pub row_tol: f64,
    pub col_tol: f64,
    pub min_support: usize,
    pub min_table_rows: usize,
    pub header_rows: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        let d = DetectParams::default();
        Self {
            row_tol: d.row_tol,
            col_tol: d.col_tol,
            min_support: d.min_support,
            min_table_rows: d.min_table_rows,
            header_rows: d.header_rows,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: crate::rag::DEFAULT_K,
        }
    }
}

/// One model endpoint: how to reach it and how to prompt it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewaySection {
    /// "http", "mock-echo", "replay", or "record".
    pub backend: String,
    /// Chat-completions URL ("http" backend; also upgrades "record" from
    /// a mock inner to a live one).
    pub endpoint: String,
    /// Model identifier sent with each request; empty uses the
    /// role-specific default.
    pub model_id: String,
    /// Environment variable holding the bearer token; empty = no auth.
    pub auth_env: String,
    pub max_tokens: u32,
    /// Transcript file: read by "replay", written by "record".
    pub transcript: String,
    /// Prompt template file; empty uses the built-in template.
    pub template: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_base_secs: f64,
    pub max_in_flight: usize,
}

impl Default for GatewaySection {
    fn default() -> Self {
        let base = crate::gateway::GatewayConfig::default();
        Self {
            backend: "mock-echo".to_string(),
            endpoint: String::new(),
            model_id: String::new(),
            auth_env: String::new(),
            max_tokens: 512,
            transcript: String::new(),
            template: String::new(),
            timeout_secs: base.timeout_secs,
            max_retries: base.max_retries,
            backoff_base_secs: base.backoff_base_secs,
            max_in_flight: base.max_in_flight,
        }
    }
}

impl GatewaySection {
    /// The configured model id, or the role's default when unset.
    pub fn model_or<'a>(&'a self, fallback: &'a str) -> &'a str {
        if self.model_id.is_empty() {
            fallback
        } else {
            &self.model_id
        }
    }

    pub fn gateway_config(&self) -> crate::gateway::GatewayConfig {
        crate::gateway::GatewayConfig {
            endpoint: self.endpoint.clone(),
            auth_env: self.auth_env.clone(),
            timeout_secs: self.timeout_secs,
            max_retries: self.max_retries,
            backoff_base_secs: self.backoff_base_secs,
            max_in_flight: self.max_in_flight,
        }
    }

    fn validate(&self, section: &str) -> Result<(), ConfigError> {
        let invalid = |field: &str, detail: String| ConfigError::Invalid {
            field: format!("{section}.{field}"),
            detail,
        };
        match self.backend.as_str() {
            "http" => {
                if self.endpoint.is_empty() {
                    return Err(invalid("endpoint", "required for the http backend".into()));
                }
            }
            "mock-echo" => {}
            "replay" | "record" => {
                if self.transcript.is_empty() {
                    return Err(invalid(
                        "transcript",
                        format!("required for the {} backend", self.backend),
                    ));
                }
            }
            other => {
                return Err(invalid(
                    "backend",
                    format!("unknown backend {other:?} (expected http, mock-echo, replay, or record)"),
                ));
            }
        }
        if !(self.timeout_secs > 0.0) {
            return Err(invalid("timeout_secs", "must be positive".into()));
        }
        if self.backoff_base_secs < 0.0 {
            return Err(invalid("backoff_base_secs", "must be non-negative".into()));
        }
        if self.max_in_flight == 0 {
            return Err(invalid("max_in_flight", "must be at least 1".into()));
        }
        if self.max_tokens == 0 {
            return Err(invalid("max_tokens", "must be at least 1".into()));
        }
        Ok(())
    }
}

/// The full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mode: PipelineMode,
    pub index_path: PathBuf,
    /// "hashed-bow-v1" or "remote:<name>".
    pub embedder: String,
    pub embedder_dim: usize,
    /// Keep table text inline in page chunks even when row chunks are
    /// indexed.
    pub duplicate_table_text: bool,
    pub chunking: ChunkingConfig,
    pub detection: DetectionConfig,
    pub retrieval: RetrievalConfig,
    /// Gateway for the row-rewriting model (table_llm mode).
    pub enrichment: GatewaySection,
    /// Gateway for the answer-writing model.
    pub generator: GatewaySection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: PipelineMode::BaselineText,
            index_path: PathBuf::from("index.jsonl"),
            embedder: crate::index::HASHED_BOW_ID.to_string(),
            embedder_dim: crate::index::DEFAULT_DIM,
            duplicate_table_text: false,
            chunking: ChunkingConfig::default(),
            detection: DetectionConfig::default(),
            retrieval: RetrievalConfig::default(),
            enrichment: GatewaySection::default(),
            generator: GatewaySection::default(),
        }
    }
}

impl RunConfig {
    /// Parse and validate a TOML config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |field: &str, detail: &str| ConfigError::Invalid {
            field: field.to_string(),
            detail: detail.to_string(),
        };
        Embedder::from_key(&self.embedder, self.embedder_dim).map_err(|e| match e {
            IndexError::UnknownEmbedder(_) => invalid("embedder", &e.to_string()),
            other => invalid("embedder", &other.to_string()),
        })?;
        if self.embedder_dim == 0 {
            return Err(invalid("embedder_dim", "must be at least 1"));
        }
        if self.chunking.max_chars == 0 {
            return Err(invalid("chunking.max_chars", "must be at least 1"));
        }
        if self.chunking.overlap >= self.chunking.max_chars {
            return Err(invalid("chunking.overlap", "must be smaller than max_chars"));
        }
        if !(self.chunking.line_tol > 0.0) {
            return Err(invalid("chunking.line_tol", "must be positive"));
        }
        if !(self.detection.row_tol > 0.0) {
            return Err(invalid("detection.row_tol", "must be positive"));
        }
        if !(self.detection.col_tol > 0.0) {
            return Err(invalid("detection.col_tol", "must be positive"));
        }
        if self.detection.min_support < 2 {
            return Err(invalid("detection.min_support", "must be at least 2"));
        }
        if self.detection.min_table_rows < 3 {
            return Err(invalid("detection.min_table_rows", "must be at least 3"));
        }
        if self.detection.header_rows == 0 {
            return Err(invalid("detection.header_rows", "must be at least 1"));
        }
        if self.retrieval.k == 0 {
            return Err(invalid("retrieval.k", "must be at least 1"));
        }
        self.enrichment.validate("enrichment")?;
        self.generator.validate("generator")?;
        Ok(())
    }

    pub fn detect_params(&self) -> DetectParams {
        DetectParams {
            row_tol: self.detection.row_tol,
            col_tol: self.detection.col_tol,
            min_support: self.detection.min_support,
            min_table_rows: self.detection.min_table_rows,
            header_rows: self.detection.header_rows,
        }
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            detect: self.detect_params(),
            max_chars: self.chunking.max_chars,
            overlap: self.chunking.overlap,
            line_tol: self.chunking.line_tol,
            duplicate_table_text: self.duplicate_table_text,
        }
    }

    pub fn build_embedder(&self) -> Result<Embedder, IndexError> {
        Embedder::from_key(&self.embedder, self.embedder_dim)
    }
}
