//! Deterministic PDF generators for tests, demos, and the bundled
//! evaluation suite, plus the suite's scripted model behaviors.
//!
//! The writer emits the same subset of the format the reader supports
//! (classic cross-reference table, standard Type1 font, plain text
//! operators, optional Flate compression), and identical inputs produce
//! byte-identical files.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use flate2::write::ZlibEncoder;
use flate2::Compression;

use crate::enrich::parse_concat_row;
use crate::eval::{Category, QueryCase};
use crate::gateway::{ChatRequest, DefaultRule};

/// Escape a literal string for a PDF `( ... )` token.
fn escape_literal(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '(' => out.push_str("\\("),
            ')' => out.push_str("\\)"),
            _ => out.push(ch),
        }
    }
    out
}

/// Render a coordinate with enough precision to round-trip test layouts.
fn fmt_num(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.4}")
    }
}

/// One page under construction: size plus accumulated content operators.
pub struct PageBuilder {
    width: f64,
    height: f64,
    ops: String,
}

impl PageBuilder {
    /// Show `text` with its baseline origin at (x, y), font size `size`.
    pub fn text(&mut self, x: f64, y: f64, size: f64, text: &str) -> &mut Self {
        self.ops.push_str(&format!(
            "BT /F1 {} Tf {} {} Td ({}) Tj ET\n",
            fmt_num(size),
            fmt_num(x),
            fmt_num(y),
            escape_literal(text)
        ));
        self
    }

    /// Lay out a grid of cells: one text run per non-empty cell, row r at
    /// y = y_top − r·row_step, column c at x = x_cols[c].
    pub fn grid(&mut self, x_cols: &[f64], y_top: f64, row_step: f64, size: f64, rows: &[Vec<String>]) -> &mut Self {
        for (r, row) in rows.iter().enumerate() {
            let y = y_top - r as f64 * row_step;
            for (c, cell) in row.iter().enumerate() {
                if !cell.is_empty() {
                    self.text(x_cols[c], y, size, cell);
                }
            }
        }
        self
    }

    /// Append raw content-stream operators verbatim.
    pub fn raw(&mut self, ops: &str) -> &mut Self {
        self.ops.push_str(ops);
        if !ops.ends_with('\n') {
            self.ops.push('\n');
        }
        self
    }
}

/// Builds complete PDF files from page descriptions.
pub struct PdfBuilder {
    pages: Vec<PageBuilder>,
    compress: bool,
}

impl Default for PdfBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl PdfBuilder {
    pub fn new() -> Self {
        Self {
            pages: Vec::new(),
            compress: false,
        }
    }

    /// Flate-compress content streams (exercises the decode path).
    pub fn compressed(mut self) -> Self {
        self.compress = true;
        self
    }

    /// Start a new US-letter page and return it for population.
    pub fn page(&mut self) -> &mut PageBuilder {
        self.page_sized(612.0, 792.0)
    }

    pub fn page_sized(&mut self, width: f64, height: f64) -> &mut PageBuilder {
        self.pages.push(PageBuilder {
            width,
            height,
            ops: String::new(),
        });
        self.pages.last_mut().unwrap()
    }

    /// Serialize to complete file bytes.
    pub fn build(&self) -> Vec<u8> {
        // Object numbering: 1 catalog, 2 page tree, 3 font, then for page i
        // (0-based): 4+2i page dict, 5+2i content stream.
        let n_pages = self.pages.len();
        let mut bodies: Vec<Vec<u8>> = Vec::new();
        let kids: Vec<String> = (0..n_pages).map(|i| format!("{} 0 R", 4 + 2 * i)).collect();
        bodies.push(b"<< /Type /Catalog /Pages 2 0 R >>".to_vec());
        bodies.push(
            format!(
                "<< /Type /Pages /Kids [{}] /Count {} >>",
                kids.join(" "),
                n_pages
            )
            .into_bytes(),
        );
        bodies.push(
            b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>".to_vec(),
        );
        for (i, page) in self.pages.iter().enumerate() {
            bodies.push(
                format!(
                    "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {} {}] \
                     /Resources << /Font << /F1 3 0 R >> >> /Contents {} 0 R >>",
                    fmt_num(page.width),
                    fmt_num(page.height),
                    5 + 2 * i
                )
                .into_bytes(),
            );
            let content = page.ops.as_bytes();
            let (data, filter) = if self.compress {
                let mut enc = ZlibEncoder::new(Vec::new(), Compression::new(6));
                enc.write_all(content).expect("in-memory compression");
                (enc.finish().expect("in-memory compression"), " /Filter /FlateDecode")
            } else {
                (content.to_vec(), "")
            };
            let mut stream =
                format!("<< /Length {}{} >>\nstream\n", data.len(), filter).into_bytes();
            stream.extend_from_slice(&data);
            stream.extend_from_slice(b"\nendstream");
            bodies.push(stream);
        }

        let mut out = b"%PDF-1.4\n".to_vec();
        let mut offsets = Vec::with_capacity(bodies.len());
        for (i, body) in bodies.iter().enumerate() {
            offsets.push(out.len());
            out.extend_from_slice(format!("{} 0 obj\n", i + 1).as_bytes());
            out.extend_from_slice(body);
            out.extend_from_slice(b"\nendobj\n");
        }
        let xref_at = out.len();
        out.extend_from_slice(format!("xref\n0 {}\n", bodies.len() + 1).as_bytes());
        out.extend_from_slice(b"0000000000 65535 f \n");
        for off in &offsets {
            out.extend_from_slice(format!("{off:010} 00000 n \n").as_bytes());
        }
        out.extend_from_slice(
            format!(
                "trailer\n<< /Size {} /Root 1 0 R >>\nstartxref\n{}\n%%EOF\n",
                bodies.len() + 1,
                xref_at
            )
            .as_bytes(),
        );
        out
    }

    /// Build and write to `path`.
    pub fn write(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        std::fs::write(path, self.build())
    }
}

/// Blueprint for one document of the bundled evaluation corpus.
pub struct DocSpec {
    pub slug: &'static str,
    pub company: &'static str,
    /// Lowercase noun for the tabulated items ("plan", "route", ...).
    pub noun: &'static str,
    pub attr1: &'static str,
    pub attr2: &'static str,
    pub auditor: &'static str,
    /// (item name, attr1 value, attr2 value); values are three-digit
    /// numbers unique across the whole corpus.
    pub rows: [(&'static str, &'static str, &'static str); 3],
}

/// The bundled corpus: six companies with mutually disjoint item names,
/// attribute vocabularies, auditors, and cell values.
pub const CORPUS_DOCS: [DocSpec; 6] = [
    DocSpec {
        slug: "atlas",
        company: "Atlas Insurance",
        noun: "plan",
        attr1: "Annual Premium",
        attr2: "Deductible",
        auditor: "Hollis Gray",
        rows: [("Gold", "980", "250"), ("Silver", "640", "500"), ("Bronze", "310", "900")],
    },
    DocSpec {
        slug: "borealis",
        company: "Borealis Health",
        noun: "tier",
        attr1: "Monthly Fee",
        attr2: "Visit Cap",
        auditor: "Mercer Quinn",
        rows: [("Basic", "145", "212"), ("Plus", "385", "630"), ("Ultra", "157", "394")],
    },
    DocSpec {
        slug: "cascade",
        company: "Cascade Motors",
        noun: "model",
        attr1: "Top Speed",
        attr2: "Battery Range",
        auditor: "Verity Lowe",
        rows: [("Falcon", "183", "521"), ("Heron", "214", "486"), ("Osprey", "247", "419")],
    },
    DocSpec {
        slug: "dune",
        company: "Dune Logistics",
        noun: "route",
        attr1: "Transit Hours",
        attr2: "Load Limit",
        auditor: "Ostrand Pike",
        rows: [("Northern", "432", "126"), ("Eastern", "764", "268"), ("Western", "917", "348")],
    },
    DocSpec {
        slug: "ember",
        company: "Ember Energy",
        noun: "tariff",
        attr1: "Unit Price",
        attr2: "Standing Charge",
        auditor: "Calder Finch",
        rows: [("Daytime", "319", "557"), ("Evening", "186", "627"), ("Weekend", "475", "738")],
    },
    DocSpec {
        slug: "flint",
        company: "Flint Bank",
        noun: "account",
        attr1: "Interest Yield",
        attr2: "Overdraft Ceiling",
        auditor: "Rowan Hale",
        rows: [("Saver", "304", "417"), ("Everyday", "158", "694"), ("Premier", "249", "861")],
    },
];

/// Generic page-two filler: dilutes whole-page chunks without sharing
/// vocabulary with any query.
const BOILERPLATE: [&str; 10] = [
    "Figures undergo verification ahead of release.",
    "Methodology notes accompany archived editions.",
    "Regional offices contribute consolidated submissions.",
    "Archival copies remain available on request.",
    "Publication follows a fixed quarterly calendar.",
    "Corrections appear in subsequent editions.",
    "Submission windows close before each cycle.",
    "Independent reviewers certify reported figures.",
    "Historical series extend back several years.",
    "Formatting conventions follow house style.",
];

const SALT_FILLER: &str = "Sector digests circulate quarterly among member firms.";

/// One sentence echoing another document's query vocabulary — placed in
/// every OTHER document so that page-level retrieval has tempting
/// distractors that never contain an answer value.
fn salt_sentence(spec: &DocSpec) -> String {
    format!(
        "Analysts track {} and {} figures across {} {} options.",
        spec.attr1.to_lowercase(),
        spec.attr2.to_lowercase(),
        spec.company,
        spec.noun
    )
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => String::new(),
    }
}

/// Build one corpus document: an intro page, a table page whose numbers
/// appear nowhere else, and one distractor page per other document.
pub fn corpus_doc_pdf(index: usize) -> PdfBuilder {
    let spec = &CORPUS_DOCS[index];
    let mut builder = PdfBuilder::new();

    let page = builder.page();
    page.text(72.0, 730.0, 16.0, &format!("{} Overview", spec.company));
    page.text(
        72.0,
        700.0,
        9.0,
        &format!(
            "This overview lists published figures covering every {} in force.",
            spec.noun
        ),
    );
    page.text(
        72.0,
        684.0,
        9.0,
        &format!("The auditor for {} is {}.", spec.company, spec.auditor),
    );

    let page = builder.page();
    page.text(
        72.0,
        720.0,
        9.0,
        &format!("{} {} figures, current term.", spec.company, spec.noun),
    );
    let mut rows = vec![vec![
        capitalize(spec.noun),
        spec.attr1.to_string(),
        spec.attr2.to_string(),
    ]];
    for (name, v1, v2) in spec.rows {
        rows.push(vec![name.to_string(), v1.to_string(), v2.to_string()]);
    }
    page.grid(&[72.0, 250.0, 430.0], 660.0, 20.0, 10.0, &rows);
    for (i, line) in BOILERPLATE.iter().enumerate() {
        page.text(72.0, 540.0 - 16.0 * i as f64, 9.0, line);
    }

    for other in CORPUS_DOCS.iter().filter(|o| o.slug != spec.slug) {
        let page = builder.page();
        page.text(72.0, 700.0, 9.0, &salt_sentence(other));
        page.text(72.0, 680.0, 9.0, SALT_FILLER);
    }
    builder
}

/// Labeled questions over the corpus: one prose question, one direct
/// table lookup, and one row-integrity lookup per document.
pub fn corpus_query_cases() -> Vec<QueryCase> {
    let mut cases = Vec::new();
    for spec in &CORPUS_DOCS {
        cases.push(QueryCase {
            id: format!("{}-text", spec.slug),
            question: format!("Who is the auditor for {}?", spec.company),
            expected: vec![spec.auditor.to_string()],
            category: Category::Text,
        });
        let (name, v1, _) = spec.rows[0];
        cases.push(QueryCase {
            id: format!("{}-simple", spec.slug),
            question: format!(
                "What is the {} for the {} {} at {}?",
                spec.attr1, name, spec.noun, spec.company
            ),
            expected: vec![v1.to_string()],
            category: Category::TableSimple,
        });
        let (_, v1, v2) = spec.rows[2];
        cases.push(QueryCase {
            id: format!("{}-complex", spec.slug),
            question: format!(
                "What {} applies to the {} whose {} is {}?",
                spec.attr2, spec.noun, spec.attr1, v1
            ),
            expected: vec![v2.to_string()],
            category: Category::TableComplex,
        });
    }
    cases
}

/// A corpus written to disk plus its query set.
pub struct BuiltCorpus {
    pub pdf_paths: Vec<PathBuf>,
    pub cases: Vec<QueryCase>,
}

/// Write every corpus PDF into `dir` (one file per document).
pub fn build_synthetic_corpus(dir: &Path) -> std::io::Result<BuiltCorpus> {
    let mut pdf_paths = Vec::new();
    for (i, spec) in CORPUS_DOCS.iter().enumerate() {
        let path = dir.join(format!("{}.pdf", spec.slug));
        corpus_doc_pdf(i).write(&path)?;
        pdf_paths.push(path);
    }
    Ok(BuiltCorpus {
        pdf_paths,
        cases: corpus_query_cases(),
    })
}

/// Generator rule for the evaluation suite: reply with the retrieved
/// chunk texts verbatim and nothing else, so judged accuracy reflects
/// retrieval quality rather than mock phrasing.
pub fn answer_from_contexts_rule() -> DefaultRule {
    DefaultRule::Custom(Arc::new(|req: &ChatRequest| {
        let user = req.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        let blocks = match user.rsplit_once("\n\nQuestion: ") {
            Some((blocks, _)) => blocks,
            None => return "No context was provided.".to_string(),
        };
        let texts: Vec<&str> = blocks
            .lines()
            .filter(|line| !(line.starts_with('[') && line.contains("] (chunk ")))
            .filter(|line| !line.trim().is_empty())
            .collect();
        if texts.is_empty() {
            "No context was provided.".to_string()
        } else {
            texts.join("\n")
        }
    }))
}

/// Enrichment rule for the evaluation suite: rewrite each header-value
/// row as a sentence while preserving its token multiset, so retrieval
/// stays comparable across enrichment styles.
pub fn row_rewrite_rule() -> DefaultRule {
    DefaultRule::Custom(Arc::new(|req: &ChatRequest| {
        let prompt = req.messages.last().map(|m| m.content.as_str()).unwrap_or("");
        let task = prompt.rsplit_once("Input:\n").map(|(_, t)| t).unwrap_or(prompt);
        let task = task.strip_suffix("\nOutput:\n").unwrap_or(task);
        task.lines().map(rewrite_row_line).collect::<Vec<_>>().join("\n")
    }))
}

fn rewrite_row_line(line: &str) -> String {
    match parse_concat_row(line) {
        Ok(pairs) if !pairs.is_empty() => {
            let (h0, v0) = &pairs[0];
            let rest: Vec<String> = pairs[1..]
                .iter()
                .map(|(h, v)| format!("{} {v}", h.to_lowercase()))
                .collect();
            if rest.is_empty() {
                format!("{v0} {}.", h0.to_lowercase())
            } else {
                format!("{v0} {}: {}.", h0.to_lowercase(), rest.join(", "))
            }
        }
        _ => line.to_string(),
    }
}
