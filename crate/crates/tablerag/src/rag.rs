//! End-to-end pipeline: ingest parsed documents into a vector index under
//! one of three table-handling strategies, then answer questions with
//! retrieved context.
//!
//! The strategies differ only in how tables reach the index: left inline
//! in page text, rewritten as header-value rows, or rewritten by a
//! language model with the header-value form as fallback.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enrich::{self, EnrichError, OneShotPrompt};
use crate::gateway::{ChatMessage, ChatRequest, Gateway, GatewayError};
use crate::index::{Chunk, Embedder, IndexError, VectorIndex};
use crate::pdf::{self, SourceDocument};
use crate::table::{self, DetectParams};

/// Default system instruction for the answer prompt.
pub const DEFAULT_ANSWER_SYSTEM: &str = "Answer using only the provided context.";
/// Default number of retrieved contexts per question.
pub const DEFAULT_K: usize = 5;

#[derive(Debug, Error)]
pub enum RagError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Enrich(#[from] EnrichError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("table_llm mode requires an enrichment gateway")]
    MissingEnrichmentGateway,
}

/// How table content is represented in the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Page text is chunked as-is; tables stay inline.
    BaselineText,
    /// Detected tables become one header-value row chunk per data row.
    TableConcat,
    /// Row chunks are rewritten by a language model, falling back to the
    /// header-value form when the model's output cannot be aligned.
    TableLlm,
}

impl PipelineMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PipelineMode::BaselineText => "baseline_text",
            PipelineMode::TableConcat => "table_concat",
            PipelineMode::TableLlm => "table_llm",
        }
    }

    pub fn handles_tables(self) -> bool {
        !matches!(self, PipelineMode::BaselineText)
    }
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PipelineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "baseline_text" => Ok(PipelineMode::BaselineText),
            "table_concat" => Ok(PipelineMode::TableConcat),
            "table_llm" => Ok(PipelineMode::TableLlm),
            other => Err(format!(
                "unknown mode {other:?} (expected baseline_text, table_concat, or table_llm)"
            )),
        }
    }
}

/// Counters describing one document's trip through `ingest`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub pages: usize,
    pub text_chunks: usize,
    pub tables: usize,
    pub enriched_rows: usize,
    pub llm_fallbacks: usize,
}

impl IngestStats {
    pub fn add(&mut self, other: &IngestStats) {
        self.pages += other.pages;
        self.text_chunks += other.text_chunks;
        self.tables += other.tables;
        self.enriched_rows += other.enriched_rows;
        self.llm_fallbacks += other.llm_fallbacks;
    }
}

/// Tunables for ingestion, shared across modes.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub detect: DetectParams,
    /// Maximum characters per text chunk.
    pub max_chars: usize,
    /// Carried-over characters when an oversized paragraph is hard-split.
    pub overlap: usize,
    /// Vertical tolerance when grouping spans into text lines.
    pub line_tol: f64,
    /// Keep table text inline in page chunks even when row chunks are
    /// also indexed (default false: row chunks replace it).
    pub duplicate_table_text: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            detect: DetectParams::default(),
            max_chars: crate::index::DEFAULT_MAX_CHARS,
            overlap: crate::index::DEFAULT_OVERLAP,
            line_tol: pdf::DEFAULT_LINE_TOL,
            duplicate_table_text: false,
        }
    }
}

/// Everything needed to call the row-rewriting model.
#[derive(Clone)]
pub struct EnrichmentClient<'a> {
    pub gateway: &'a Gateway,
    pub template: &'a OneShotPrompt,
    pub model_id: &'a str,
    pub max_tokens: u32,
}

/// Everything needed to call the answer-writing model.
#[derive(Debug, Clone)]
pub struct GeneratorOptions {
    pub model_id: String,
    pub max_tokens: u32,
    pub system_instruction: String,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            model_id: "answer-model".to_string(),
            max_tokens: 512,
            system_instruction: DEFAULT_ANSWER_SYSTEM.to_string(),
        }
    }
}

/// A generated answer with its retrieved evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Answer {
    pub text: String,
    /// Retrieval hits in rank order: scores non-increasing, at most k.
    pub supporting: Vec<SupportingChunk>,
    pub mode: PipelineMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportingChunk {
    pub chunk_id: String,
    pub score: f64,
}

/// Index one parsed document under the given mode. Table modes detect
/// tables per page, index one chunk per data row, and (unless
/// `duplicate_table_text` is set) strip table regions from the page text
/// before chunking it.
pub fn ingest(
    doc: &SourceDocument,
    mode: PipelineMode,
    index: &mut VectorIndex,
    embedder: &Embedder,
    options: &IngestOptions,
    enrichment: Option<&EnrichmentClient<'_>>,
) -> Result<IngestStats, RagError> {
    if mode == PipelineMode::TableLlm && enrichment.is_none() {
        return Err(RagError::MissingEnrichmentGateway);
    }
    let mut stats = IngestStats {
        pages: doc.pages.len(),
        ..IngestStats::default()
    };
    let mut text_ordinal = 0usize;
    let mut row_ordinal = 0usize;

    for page in &doc.pages {
        let tables = if mode.handles_tables() {
            table::detect_tables(&doc.doc_id, page, &options.detect)
        } else {
            Vec::new()
        };
        stats.tables += tables.len();

        for grid in &tables {
            let (rows, fell_back) = match (mode, enrichment) {
                (PipelineMode::TableLlm, Some(client)) => {
                    let outcome = enrich::llm_enrich_table(
                        grid,
                        client.gateway,
                        client.template,
                        client.model_id,
                        client.max_tokens,
                    )?;
                    (outcome.rows, outcome.fallback)
                }
                _ => (enrich::concat_enrich_table(grid), false),
            };
            if fell_back {
                stats.llm_fallbacks += rows.len();
            }
            for row in rows {
                let chunk =
                    Chunk::table_row_chunk(row.table_ref, page.page_index, row_ordinal, row.text);
                row_ordinal += 1;
                let embedding = embedder.embed(&chunk.text)?;
                index.upsert(chunk, embedding)?;
                stats.enriched_rows += 1;
            }
        }

        let text = if tables.is_empty() || options.duplicate_table_text {
            pdf::page_text(page, options.line_tol)
        } else {
            let regions: Vec<_> = tables.iter().map(|t| t.bbox).collect();
            let stripped = pdf::strip_regions(page, &regions);
            pdf::page_text(&stripped, options.line_tol)
        };
        for piece in crate::index::chunk_text(&text, options.max_chars, options.overlap) {
            let chunk = Chunk::text_chunk(&doc.doc_id, page.page_index, text_ordinal, piece);
            text_ordinal += 1;
            let embedding = embedder.embed(&chunk.text)?;
            index.upsert(chunk, embedding)?;
            stats.text_chunks += 1;
        }
    }
    Ok(stats)
}

/// Retrieve top-k contexts for the question and ask the generator for an
/// answer grounded in them.
pub fn answer(
    question: &str,
    index: &VectorIndex,
    embedder: &Embedder,
    gateway: &Gateway,
    generator: &GeneratorOptions,
    k: usize,
    mode: PipelineMode,
) -> Result<Answer, RagError> {
    let query = embedder.embed(question)?;
    let hits = index.search(&query, k);
    let user = render_answer_prompt(index, &hits, question);
    let request = ChatRequest {
        model_id: generator.model_id.clone(),
        messages: vec![
            ChatMessage::system(&generator.system_instruction),
            ChatMessage::user(&user),
        ],
        temperature: 0.0,
        max_tokens: generator.max_tokens,
    };
    let response = gateway.complete(&request)?;
    Ok(Answer {
        text: response.content,
        supporting: hits
            .into_iter()
            .map(|(chunk_id, score)| SupportingChunk { chunk_id, score })
            .collect(),
        mode,
    })
}

/// Build the user message: numbered context blocks with provenance, then
/// the question. With no hits the blocks (and their trailing separator)
/// are omitted entirely.
pub fn render_answer_prompt(
    index: &VectorIndex,
    hits: &[(String, f64)],
    question: &str,
) -> String {
    let mut blocks = Vec::with_capacity(hits.len());
    for (rank, (chunk_id, score)) in hits.iter().enumerate() {
        let text = index.get(chunk_id).map(|c| c.text.as_str()).unwrap_or("");
        blocks.push(format!(
            "[{}] (chunk {chunk_id}, score {score:.4})\n{text}",
            rank + 1
        ));
    }
    if blocks.is_empty() {
        format!("Question: {question}\nAnswer:")
    } else {
        format!(
            "{}\n\nQuestion: {question}\nAnswer:",
            blocks.join("\n\n")
        )
    }
}

/// Count chunks of each kind currently indexed — handy for asserting
/// conservation properties in tests and the CLI's ingest summary.
pub fn chunk_counts(index: &VectorIndex) -> (usize, usize) {
    let mut text = 0;
    let mut rows = 0;
    for chunk in index.chunks() {
        match chunk.kind {
            crate::index::ChunkKind::Text => text += 1,
            crate::index::ChunkKind::TableRow => rows += 1,
        }
    }
    (text, rows)
}
