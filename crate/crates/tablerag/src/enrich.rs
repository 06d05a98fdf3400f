//! Table-row linearization: turn grid rows into self-describing text.
//!
//! Two styles: deterministic header–value concatenation ("Name: Alice;
//! Age: 30"), and LLM rewriting of those lines into sentences via a
//! one-shot prompt. The LLM path sends one request per table and falls
//! back to plain concatenation whenever the response does not line up
//! with the table's rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{ChatMessage, ChatRequest, Gateway, GatewayError};
use crate::table::{extract_header, TableGrid};

/// Where an enriched row came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TableRef {
    pub doc_id: String,
    pub page_index: usize,
    pub table_index: usize,
    /// Data-row ordinal, 0-based, header rows excluded.
    pub row_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnrichStyle {
    Concat,
    Llm,
}

/// One linearized table row ready for indexing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedRow {
    pub table_ref: TableRef,
    pub text: String,
    pub style: EnrichStyle,
}

/// The four parts of a one-shot rewriting prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct OneShotPrompt {
    pub system_instruction: String,
    pub example_input: String,
    pub example_output: String,
    pub task_input: String,
}

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("row has {values} values but {headers} headers")]
    LengthMismatch { headers: usize, values: usize },
    #[error("cannot linearize an empty row")]
    EmptyRow,
    #[error("not a header-value row: segment {segment:?} has no \": \" separator")]
    MalformedRow { segment: String },
    #[error("prompt template: {0}")]
    Template(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

pub const DEFAULT_SYSTEM_INSTRUCTION: &str = "You rewrite table rows into plain sentences. \
Each input line lists header: value pairs describing one row. Write exactly one sentence per \
input line, in the same order, stating every value together with its header. Output nothing \
except those sentences.";
pub const DEFAULT_EXAMPLE_INPUT: &str = "Name: Alice; Age: 30";
pub const DEFAULT_EXAMPLE_OUTPUT: &str = "Alice is 30 years old.";

impl OneShotPrompt {
    /// The built-in rewriting template; `task_input` starts as the example
    /// and is replaced per table.
    pub fn default_template() -> Self {
        Self {
            system_instruction: DEFAULT_SYSTEM_INSTRUCTION.to_string(),
            example_input: DEFAULT_EXAMPLE_INPUT.to_string(),
            example_output: DEFAULT_EXAMPLE_OUTPUT.to_string(),
            task_input: DEFAULT_EXAMPLE_INPUT.to_string(),
        }
    }

    pub fn with_task_input(&self, task_input: impl Into<String>) -> Self {
        Self {
            task_input: task_input.into(),
            ..self.clone()
        }
    }

    /// Parse a template file: four sections separated by lines containing
    /// only "---" (instruction, example input, example output, default
    /// task input). Sections are trimmed and must be non-empty.
    pub fn from_template_text(text: &str) -> Result<Self, EnrichError> {
        let mut sections: Vec<Vec<&str>> = vec![Vec::new()];
        for line in text.lines() {
            if line.trim_end() == "---" {
                sections.push(Vec::new());
            } else {
                sections.last_mut().unwrap().push(line);
            }
        }
        if sections.len() != 4 {
            return Err(EnrichError::Template(format!(
                "expected 4 sections separated by --- lines, found {}",
                sections.len()
            )));
        }
        let mut parts = sections
            .into_iter()
            .map(|lines| lines.join("\n").trim().to_string());
        let prompt = Self {
            system_instruction: parts.next().unwrap(),
            example_input: parts.next().unwrap(),
            example_output: parts.next().unwrap(),
            task_input: parts.next().unwrap(),
        };
        for (name, value) in [
            ("system instruction", &prompt.system_instruction),
            ("example input", &prompt.example_input),
            ("example output", &prompt.example_output),
            ("task input", &prompt.task_input),
        ] {
            if value.is_empty() {
                return Err(EnrichError::Template(format!("{name} section is empty")));
            }
        }
        Ok(prompt)
    }

    pub fn from_template_file(path: impl AsRef<std::path::Path>) -> Result<Self, EnrichError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| EnrichError::Template(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_template_text(&text)
    }
}

/// Fixed rendering of the one-shot prompt; byte-stable for a given input.
pub fn render_prompt(p: &OneShotPrompt) -> String {
    format!(
        "{}\n\nExample input:\n{}\nExample output:\n{}\n\nInput:\n{}\nOutput:\n",
        p.system_instruction, p.example_input, p.example_output, p.task_input
    )
}

/// "h0: v0; h1: v1; ..." — values verbatim, including empty ones.
pub fn concat_enrich_row(headers: &[String], values: &[String]) -> Result<String, EnrichError> {
    if headers.is_empty() {
        return Err(EnrichError::EmptyRow);
    }
    if headers.len() != values.len() {
        return Err(EnrichError::LengthMismatch {
            headers: headers.len(),
            values: values.len(),
        });
    }
    Ok(headers
        .iter()
        .zip(values)
        .map(|(h, v)| format!("{h}: {v}"))
        .collect::<Vec<_>>()
        .join("; "))
}

/// Inverse of [`concat_enrich_row`] for delimiter-free headers/values:
/// split on "; ", then each segment on its first ": ".
pub fn parse_concat_row(text: &str) -> Result<Vec<(String, String)>, EnrichError> {
    text.split("; ")
        .map(|segment| {
            segment
                .split_once(": ")
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .ok_or_else(|| EnrichError::MalformedRow {
                    segment: segment.to_string(),
                })
        })
        .collect()
}

fn table_ref(grid: &TableGrid, row_index: usize) -> TableRef {
    TableRef {
        doc_id: grid.doc_id.clone(),
        page_index: grid.page_index,
        table_index: grid.table_index,
        row_index,
    }
}

/// One concat-style row per data row, in row order.
pub fn concat_enrich_table(grid: &TableGrid) -> Vec<EnrichedRow> {
    let headers = extract_header(grid);
    (0..grid.n_data_rows())
        .map(|i| {
            let values: Vec<String> = grid.data_row(i).iter().map(|s| s.to_string()).collect();
            // A dense grid always has n_cols ≥ 2 headers and as many values.
            let text = concat_enrich_row(&headers, &values)
                .expect("dense grid rows match header length");
            EnrichedRow {
                table_ref: table_ref(grid, i),
                text,
                style: EnrichStyle::Concat,
            }
        })
        .collect()
}

/// Result of LLM enrichment: the rows, plus whether the table fell back
/// to concat style because the response didn't align with its rows.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichOutcome {
    pub rows: Vec<EnrichedRow>,
    pub fallback: bool,
}

/// Rewrite a whole table's rows in one completion request. The prompt's
/// task input is the newline-joined concat rows; the response must come
/// back as exactly one non-blank line per data row, otherwise the table
/// keeps its concat rows and the outcome is marked as a fallback.
pub fn llm_enrich_table(
    grid: &TableGrid,
    gateway: &Gateway,
    template: &OneShotPrompt,
    model_id: &str,
    max_tokens: u32,
) -> Result<EnrichOutcome, EnrichError> {
    let concat_rows = concat_enrich_table(grid);
    let task_input = concat_rows
        .iter()
        .map(|r| r.text.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let prompt = template.with_task_input(task_input);
    let request = ChatRequest {
        model_id: model_id.to_string(),
        messages: vec![ChatMessage::user(render_prompt(&prompt))],
        temperature: 0.0,
        max_tokens,
    };
    let response = gateway.complete(&request)?;
    let lines: Vec<&str> = response
        .content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() != concat_rows.len() {
        return Ok(EnrichOutcome {
            rows: concat_rows,
            fallback: true,
        });
    }
    let rows = lines
        .into_iter()
        .enumerate()
        .map(|(i, line)| EnrichedRow {
            table_ref: table_ref(grid, i),
            text: line.to_string(),
            style: EnrichStyle::Llm,
        })
        .collect();
    Ok(EnrichOutcome {
        rows,
        fallback: false,
    })
}
