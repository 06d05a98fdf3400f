//! Table-aware retrieval-augmented generation over PDF documents.
//!
//! The pipeline parses PDFs into positioned text, detects tables from
//! span alignment, linearizes table rows into self-describing text
//! (plain header–value concatenation or LLM-rewritten sentences), indexes
//! everything in a cosine vector store, and answers or evaluates queries
//! against the result.

pub mod cli;
pub mod config;
pub mod enrich;
pub mod eval;
pub mod fixtures;
pub mod gateway;
pub mod geom;
pub mod index;
pub mod pdf;
pub mod rag;
pub mod table;
