//! Command-line interface: one subcommand per pipeline stage.
//!
//! Data goes to stdout, diagnostics to stderr; every command exits 0 on
//! success and nonzero on any error. Config-file values are overridden
//! by command-line flags.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{ConfigError, GatewaySection, RunConfig};
use crate::enrich::{self, EnrichError, OneShotPrompt};
use crate::eval::{self, EvalError};
use crate::gateway::{DefaultRule, Gateway, GatewayError, MockScript};
use crate::index::{Embedder, IndexError, VectorIndex};
use crate::pdf::{self, PdfError, SourceDocument};
use crate::rag::{
    self, EnrichmentClient, GeneratorOptions, PipelineMode, RagError, DEFAULT_ANSWER_SYSTEM,
};
use crate::table;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pdf(#[from] PdfError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Rag(#[from] RagError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Enrich(#[from] EnrichError),
    #[error("page {page} out of range (document has pages 0..={max})")]
    PageOutOfRange { page: usize, max: usize },
    #[error("{path}: {detail}")]
    File { path: PathBuf, detail: String },
    #[error("index was built with embedder {index:?} but config names {config:?}")]
    EmbedderMismatch { index: String, config: String },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "tablerag",
    version,
    about = "Table-aware retrieval-augmented question answering over PDF documents"
)]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse PDFs and add their chunks to the vector index file.
    Ingest {
        /// PDF files to ingest.
        #[arg(required = true)]
        pdfs: Vec<PathBuf>,
        /// Pipeline mode (baseline_text, table_concat, table_llm).
        #[arg(long)]
        mode: Option<PipelineMode>,
        /// Index file to create or update.
        #[arg(long)]
        index: Option<PathBuf>,
        /// Parse documents with up to N worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Detect tables in one PDF and print their grids.
    Tables {
        pdf: PathBuf,
        /// Restrict detection to one zero-based page.
        #[arg(long)]
        page: Option<usize>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Print enriched rows for every detected table in one PDF.
    Enrich {
        pdf: PathBuf,
        /// table_llm rewrites rows with the enrichment model; any other
        /// mode prints the header-value form.
        #[arg(long)]
        mode: Option<PipelineMode>,
    },
    /// Answer one question against the persisted index.
    Query {
        question: String,
        #[arg(long)]
        mode: Option<PipelineMode>,
        #[arg(long)]
        index: Option<PathBuf>,
        /// Number of contexts to retrieve.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
    },
    /// Judge a query set against the persisted index and print the report.
    Eval {
        query_set: PathBuf,
        #[arg(long)]
        mode: Option<PipelineMode>,
        #[arg(long)]
        index: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate several modes over a corpus directory side by side.
    Compare {
        query_set: PathBuf,
        /// Directory of PDF files (ingested freshly per mode).
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated modes; default compares all three.
        #[arg(long, value_delimiter = ',')]
        modes: Vec<PipelineMode>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        format: OutputFormat,
        /// Also write the JSON reports to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Dispatch a parsed invocation; the Ok value is the process exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Ingest {
            pdfs,
            mode,
            index,
            jobs,
        } => cmd_ingest(&config, &pdfs, mode, index, jobs),
        Command::Tables { pdf, page, format } => cmd_tables(&config, &pdf, page, format),
        Command::Enrich { pdf, mode } => cmd_enrich(&config, &pdf, mode),
        Command::Query {
            question,
            mode,
            index,
            k,
            format,
        } => cmd_query(&config, &question, mode, index, k, format),
        Command::Eval {
            query_set,
            mode,
            index,
            k,
            out,
        } => cmd_eval(&config, &query_set, mode, index, k, out),
        Command::Compare {
            query_set,
            corpus,
            modes,
            k,
            format,
            out,
        } => cmd_compare(&config, &query_set, &corpus, modes, k, format, out),
    }
}

fn build_gateway(section: &GatewaySection) -> Result<Gateway, CliError> {
    let config = section.gateway_config();
    let echo = |config| {
        Gateway::mock(
            config,
            MockScript::new().with_default(DefaultRule::EchoLastUser),
        )
    };
    match section.backend.as_str() {
        "http" => Ok(Gateway::http(config)),
        "mock-echo" => Ok(echo(config)),
        "replay" => Ok(Gateway::replay(config, &section.transcript)?),
        "record" => {
            let inner = if section.endpoint.is_empty() {
                echo(config)
            } else {
                Gateway::http(config)
            };
            Ok(inner.record(&section.transcript)?)
        }
        other => Err(CliError::Usage(format!("unknown gateway backend {other:?}"))),
    }
}

/// Owns the gateway and template an `EnrichmentClient` borrows.
struct EnrichmentBundle {
    gateway: Gateway,
    template: OneShotPrompt,
    model_id: String,
    max_tokens: u32,
}

impl EnrichmentBundle {
    fn from_section(section: &GatewaySection) -> Result<Self, CliError> {
        let template = if section.template.is_empty() {
            OneShotPrompt::default_template()
        } else {
            OneShotPrompt::from_template_file(&section.template)?
        };
        Ok(Self {
            gateway: build_gateway(section)?,
            template,
            model_id: section.model_or("rewrite-model").to_string(),
            max_tokens: section.max_tokens,
        })
    }

    fn client(&self) -> EnrichmentClient<'_> {
        EnrichmentClient {
            gateway: &self.gateway,
            template: &self.template,
            model_id: &self.model_id,
            max_tokens: self.max_tokens,
        }
    }
}

fn build_generator(section: &GatewaySection) -> Result<(Gateway, GeneratorOptions), CliError> {
    let system_instruction = if section.template.is_empty() {
        DEFAULT_ANSWER_SYSTEM.to_string()
    } else {
        let text =
            std::fs::read_to_string(&section.template).map_err(|e| CliError::File {
                path: PathBuf::from(&section.template),
                detail: e.to_string(),
            })?;
        let trimmed = text.trim().to_string();
        if trimmed.is_empty() {
            return Err(CliError::File {
                path: PathBuf::from(&section.template),
                detail: "answer template is empty".to_string(),
            });
        }
        trimmed
    };
    Ok((
        build_gateway(section)?,
        GeneratorOptions {
            model_id: section.model_or("answer-model").to_string(),
            max_tokens: section.max_tokens,
            system_instruction,
        },
    ))
}

/// Open or create the index and check it agrees with the configured
/// embedder.
fn open_index(path: &Path, embedder: &Embedder, must_exist: bool) -> Result<VectorIndex, CliError> {
    if !path.exists() {
        if must_exist {
            return Err(CliError::File {
                path: path.to_path_buf(),
                detail: "index file not found (run ingest first)".to_string(),
            });
        }
        return Ok(VectorIndex::new(embedder.dim(), embedder.id()));
    }
    let index = VectorIndex::load(path)?;
    if index.embedder_id() != embedder.id() {
        return Err(CliError::EmbedderMismatch {
            index: index.embedder_id().to_string(),
            config: embedder.id(),
        });
    }
    if index.dim() != embedder.dim() {
        return Err(CliError::Usage(format!(
            "index dimension {} does not match configured dimension {}",
            index.dim(),
            embedder.dim()
        )));
    }
    Ok(index)
}

/// Parse documents with up to `jobs` threads, preserving input order.
fn open_documents(
    paths: &[PathBuf],
    jobs: usize,
) -> Vec<Result<SourceDocument, PdfError>> {
    let jobs = jobs.max(1).min(paths.len().max(1));
    if jobs == 1 {
        return paths.iter().map(pdf::open_document).collect();
    }
    let slots: Mutex<Vec<Option<Result<SourceDocument, PdfError>>>> =
        Mutex::new((0..paths.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= paths.len() {
                    break;
                }
                let result = pdf::open_document(&paths[i]);
                slots.lock().expect("no panics while holding lock")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("all workers joined")
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect()
}

fn cmd_ingest(
    config: &RunConfig,
    pdfs: &[PathBuf],
    mode: Option<PipelineMode>,
    index_path: Option<PathBuf>,
    jobs: usize,
) -> Result<i32, CliError> {
    let mode = mode.unwrap_or(config.mode);
    let index_path = index_path.unwrap_or_else(|| config.index_path.clone());
    let embedder = config.build_embedder()?;
    let mut index = open_index(&index_path, &embedder, false)?;
    let options = config.ingest_options();
    let enrichment = if mode == PipelineMode::TableLlm {
        Some(EnrichmentBundle::from_section(&config.enrichment)?)
    } else {
        None
    };
    let client = enrichment.as_ref().map(|b| b.client());

    let mut any_failed = false;
    for (path, parsed) in pdfs.iter().zip(open_documents(pdfs, jobs)) {
        let doc = match parsed {
            Ok(doc) => doc,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                any_failed = true;
                continue;
            }
        };
        match rag::ingest(&doc, mode, &mut index, &embedder, &options, client.as_ref()) {
            Ok(stats) => println!(
                "{}: pages={} text_chunks={} tables={} enriched_rows={} llm_fallbacks={}",
                path.display(),
                stats.pages,
                stats.text_chunks,
                stats.tables,
                stats.enriched_rows,
                stats.llm_fallbacks
            ),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                any_failed = true;
            }
        }
    }
    index.persist(&index_path)?;
    eprintln!(
        "index {} now holds {} chunks",
        index_path.display(),
        index.len()
    );
    Ok(if any_failed { 1 } else { 0 })
}

fn cmd_tables(
    config: &RunConfig,
    pdf_path: &Path,
    page: Option<usize>,
    format: OutputFormat,
) -> Result<i32, CliError> {
    let doc = pdf::open_document(pdf_path)?;
    let pages: Vec<&pdf::PageContent> = match page {
        Some(p) => {
            let max = doc.pages.len() - 1;
            let page_ref = doc
                .pages
                .get(p)
                .ok_or(CliError::PageOutOfRange { page: p, max })?;
            vec![page_ref]
        }
        None => doc.pages.iter().collect(),
    };
    let params = config.detect_params();
    let grids: Vec<table::TableGrid> = pages
        .iter()
        .flat_map(|page| table::detect_tables(&doc.doc_id, page, &params))
        .collect();

    eprintln!("{} tables", grids.len());
    match format {
        OutputFormat::Json => {
            let values: Vec<serde_json::Value> = grids.iter().map(|g| g.to_json()).collect();
            println!("{}", serde_json::to_string_pretty(&values).expect("grids serialize"));
        }
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(std::io::stdout());
            writer
                .write_record(["doc_id", "page_index", "table_index", "row", "col", "text"])
                .and_then(|()| {
                    for grid in &grids {
                        for row in 0..grid.n_rows {
                            for col in 0..grid.n_cols {
                                writer.write_record([
                                    grid.doc_id.as_str(),
                                    &grid.page_index.to_string(),
                                    &grid.table_index.to_string(),
                                    &row.to_string(),
                                    &col.to_string(),
                                    grid.cell_text(row, col),
                                ])?;
                            }
                        }
                    }
                    writer.flush()?;
                    Ok(())
                })
                .map_err(|e| CliError::Usage(format!("csv output failed: {e}")))?;
        }
        OutputFormat::Text => {
            return Err(CliError::Usage(
                "tables supports --format json or csv".to_string(),
            ));
        }
    }
    Ok(0)
}

fn cmd_enrich(
    config: &RunConfig,
    pdf_path: &Path,
    mode: Option<PipelineMode>,
) -> Result<i32, CliError> {
    let mode = mode.unwrap_or(config.mode);
    let doc = pdf::open_document(pdf_path)?;
    let params = config.detect_params();
    let enrichment = if mode == PipelineMode::TableLlm {
        Some(EnrichmentBundle::from_section(&config.enrichment)?)
    } else {
        None
    };

    let mut n_tables = 0usize;
    let mut n_rows = 0usize;
    for page in &doc.pages {
        for grid in table::detect_tables(&doc.doc_id, page, &params) {
            n_tables += 1;
            let rows = match &enrichment {
                Some(bundle) => {
                    let client = bundle.client();
                    enrich::llm_enrich_table(
                        &grid,
                        client.gateway,
                        client.template,
                        client.model_id,
                        client.max_tokens,
                    )?
                    .rows
                }
                None => enrich::concat_enrich_table(&grid),
            };
            for row in rows {
                println!("{}", serde_json::to_string(&row).expect("row serializes"));
                n_rows += 1;
            }
        }
    }
    eprintln!("{n_tables} tables, {n_rows} rows");
    Ok(0)
}

fn cmd_query(
    config: &RunConfig,
    question: &str,
    mode: Option<PipelineMode>,
    index_path: Option<PathBuf>,
    k: Option<usize>,
    format: OutputFormat,
) -> Result<i32, CliError> {
    let mode = mode.unwrap_or(config.mode);
    let index_path = index_path.unwrap_or_else(|| config.index_path.clone());
    let k = k.unwrap_or(config.retrieval.k).max(1);
    let embedder = config.build_embedder()?;
    let index = open_index(&index_path, &embedder, true)?;
    if index.is_empty() {
        eprintln!("warning: index is empty; answering without context");
    }
    let (gateway, generator) = build_generator(&config.generator)?;
    let answer = rag::answer(question, &index, &embedder, &gateway, &generator, k, mode)?;
    match format {
        OutputFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&answer).expect("answer serializes"));
        }
        OutputFormat::Text => {
            println!("{}", answer.text);
            if !answer.supporting.is_empty() {
                println!();
                for (rank, s) in answer.supporting.iter().enumerate() {
                    println!("[{}] {} score={:.4}", rank + 1, s.chunk_id, s.score);
                }
            }
        }
        OutputFormat::Csv => {
            return Err(CliError::Usage(
                "query supports --format text or json".to_string(),
            ));
        }
    }
    Ok(0)
}

fn cmd_eval(
    config: &RunConfig,
    query_set: &Path,
    mode: Option<PipelineMode>,
    index_path: Option<PathBuf>,
    k: Option<usize>,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let mode = mode.unwrap_or(config.mode);
    let index_path = index_path.unwrap_or_else(|| config.index_path.clone());
    let k = k.unwrap_or(config.retrieval.k).max(1);
    let cases = eval::load_query_set(query_set)?;
    let embedder = config.build_embedder()?;
    let index = open_index(&index_path, &embedder, true)?;
    let (gateway, generator) = build_generator(&config.generator)?;
    let report = match eval::run_eval(&cases, mode, &index, &embedder, &gateway, &generator, k) {
        Ok(report) => report,
        Err(EvalError::Aborted { report, detail }) => {
            // Emit the partial report (flagged incomplete) before failing.
            println!("{}", eval::render_report_json(&report));
            eprintln!("error: evaluation aborted: {detail}");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let json = eval::render_report_json(&report);
    println!("{json}");
    if let Some(out_path) = out {
        write_out(&out_path, &json)?;
    }
    Ok(0)
}

fn cmd_compare(
    config: &RunConfig,
    query_set: &Path,
    corpus: &Path,
    modes: Vec<PipelineMode>,
    k: Option<usize>,
    format: OutputFormat,
    out: Option<PathBuf>,
) -> Result<i32, CliError> {
    let modes = if modes.is_empty() {
        vec![
            PipelineMode::BaselineText,
            PipelineMode::TableConcat,
            PipelineMode::TableLlm,
        ]
    } else {
        modes
    };
    let k = k.unwrap_or(config.retrieval.k).max(1);
    let cases = eval::load_query_set(query_set)?;
    let docs = load_corpus(corpus)?;
    let embedder = config.build_embedder()?;
    let options = config.ingest_options();
    let (generator_gateway, generator) = build_generator(&config.generator)?;
    let enrichment = if modes.contains(&PipelineMode::TableLlm) {
        Some(EnrichmentBundle::from_section(&config.enrichment)?)
    } else {
        None
    };
    let client = enrichment.as_ref().map(|b| b.client());
    let settings = eval::CompareSettings {
        embedder: &embedder,
        ingest: &options,
        generator_gateway: &generator_gateway,
        generator: &generator,
        enrichment: client.as_ref(),
        k,
    };
    let reports = eval::compare_modes(&cases, &modes, &docs, &settings)?;
    match format {
        OutputFormat::Json => println!("{}", eval::render_comparison_json(&reports)),
        OutputFormat::Text => print!("{}", eval::render_comparison_text(&reports)),
        OutputFormat::Csv => {
            return Err(CliError::Usage(
                "compare supports --format text or json".to_string(),
            ));
        }
    }
    if let Some(out_path) = out {
        write_out(&out_path, &eval::render_comparison_json(&reports))?;
    }
    Ok(0)
}

fn load_corpus(dir: &Path) -> Result<Vec<SourceDocument>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::File {
        path: dir.to_path_buf(),
        detail: e.to_string(),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("pdf"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::File {
            path: dir.to_path_buf(),
            detail: "no PDF files found".to_string(),
        });
    }
    paths.iter().map(|p| Ok(pdf::open_document(p)?)).collect()
}

fn write_out(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, format!("{content}\n")).map_err(|e| CliError::File {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}
