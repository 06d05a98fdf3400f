//! PDF text extraction: positioned spans per page in a canonical reading
//! order.
//!
//! Supported input is the born-digital subset of the format: classic
//! cross-reference tables, uncompressed or Flate-compressed content
//! streams, and standard-font text operators. Glyph widths are
//! approximated (no font metrics), which is exact for files produced by
//! [`crate::fixtures::PdfBuilder`] and close enough for alignment-based
//! layout analysis elsewhere.

mod content;
mod document;
mod object;

use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geom::BBox;
use content::RawSpan;

#[derive(Debug, Error)]
pub enum PdfError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: String,
        source: std::io::Error,
    },
    #[error("not a PDF file (missing %PDF- header)")]
    NotAPdf,
    #[error("file is encrypted; password-protected input is not supported")]
    EncryptedPdf,
    #[error("malformed structure: {0}")]
    Structure(String),
    #[error("document contains no pages")]
    EmptyDocument,
    #[error("indirect object {0} {1} is missing")]
    MissingObject(u32, u16),
    #[error("unsupported stream filter /{0}")]
    UnsupportedFilter(String),
}

/// One horizontal text run, trimmed, positioned on the page.
#[derive(Debug, Clone, PartialEq)]
pub struct TextSpan {
    pub text: String,
    pub page_index: usize,
    /// In PDF points, origin at the page's lower-left corner, y up.
    pub bbox: BBox,
    pub font_size: f64,
}

/// All spans of one page, sorted top-to-bottom then left-to-right
/// (descending y-center, ascending x0).
#[derive(Debug, Clone, PartialEq)]
pub struct PageContent {
    pub page_index: usize,
    pub width: f64,
    pub height: f64,
    pub spans: Vec<TextSpan>,
    /// Shown strings dropped because they were not upright.
    pub dropped_rotated: usize,
}

/// A parsed document: content-addressed id plus extracted pages.
#[derive(Debug, Clone)]
pub struct SourceDocument {
    /// Hex SHA-256 of the file bytes; identical files get identical ids.
    pub doc_id: String,
    pub path: String,
    pub pages: Vec<PageContent>,
}

/// Adjacent runs on one baseline merge when the gap between them is below
/// this fraction of the font size (covers kerning splits without joining
/// separate words).
const MERGE_GAP_EM: f64 = 0.3;

/// Default line tolerance for [`page_text`].
pub const DEFAULT_LINE_TOL: f64 = 3.0;

/// Parse a PDF file into positioned spans.
pub fn open_document(path: impl AsRef<Path>) -> Result<SourceDocument, PdfError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| PdfError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })?;
    let doc_id = hex::encode(Sha256::digest(&bytes));
    let doc = document::Document::parse(bytes)?;
    let raw_pages = doc.pages()?;
    if raw_pages.is_empty() {
        return Err(PdfError::EmptyDocument);
    }
    let mut pages = Vec::with_capacity(raw_pages.len());
    for (page_index, raw) in raw_pages.iter().enumerate() {
        let content = doc.page_content(raw)?;
        let interpreted = content::interpret(&content);
        pages.push(assemble_page(page_index, raw.media_box, interpreted));
    }
    Ok(SourceDocument {
        doc_id,
        path: path.display().to_string(),
        pages,
    })
}

fn assemble_page(
    page_index: usize,
    media_box: [f64; 4],
    interpreted: content::InterpretOutput,
) -> PageContent {
    let width = media_box[2] - media_box[0];
    let height = media_box[3] - media_box[1];
    let merged = merge_adjacent_runs(interpreted.spans);
    let mut spans: Vec<TextSpan> = merged
        .into_iter()
        .filter_map(|raw| finish_span(raw, page_index, media_box, width, height))
        .collect();
    spans.sort_by(|a, b| {
        b.bbox
            .y_center()
            .total_cmp(&a.bbox.y_center())
            .then(a.bbox.x0.total_cmp(&b.bbox.x0))
            .then(a.bbox.x1.total_cmp(&b.bbox.x1))
    });
    PageContent {
        page_index,
        width,
        height,
        spans,
        dropped_rotated: interpreted.dropped_rotated,
    }
}

/// Join consecutive shown strings that continue the same run: identical
/// baseline and size, horizontal gap under [`MERGE_GAP_EM`] of the size.
/// Concatenation is direct; real word gaps (≥ one glyph advance) stay
/// separate spans.
fn merge_adjacent_runs(raws: Vec<RawSpan>) -> Vec<RawSpan> {
    let mut out: Vec<RawSpan> = Vec::with_capacity(raws.len());
    for raw in raws {
        if let Some(prev) = out.last_mut() {
            let gap = raw.x0 - prev.x1;
            let same_line = (raw.baseline - prev.baseline).abs() < 1e-6
                && (raw.font_size - prev.font_size).abs() < 1e-6;
            let limit = MERGE_GAP_EM * prev.font_size;
            if same_line && gap < limit && gap > -limit {
                prev.text.push_str(&raw.text);
                prev.x1 = raw.x1;
                continue;
            }
        }
        out.push(raw);
    }
    out
}

fn finish_span(
    raw: RawSpan,
    page_index: usize,
    media_box: [f64; 4],
    width: f64,
    height: f64,
) -> Option<TextSpan> {
    if raw.font_size <= 0.0 {
        return None;
    }
    let char_count = raw.text.chars().count();
    let trimmed = raw.text.trim();
    if trimmed.is_empty() {
        return None;
    }
    // Shave trimmed whitespace off the box using the average advance, so
    // x0/x1 track the first and last visible glyphs.
    let leading = raw.text.chars().take_while(|c| c.is_whitespace()).count();
    let trailing = raw
        .text
        .chars()
        .rev()
        .take_while(|c| c.is_whitespace())
        .count();
    let avg_advance = (raw.x1 - raw.x0) / char_count as f64;
    let x0 = raw.x0 + leading as f64 * avg_advance - media_box[0];
    let x1 = raw.x1 - trailing as f64 * avg_advance - media_box[0];
    let baseline = raw.baseline - media_box[1];
    let bbox = BBox::new(
        x0,
        baseline - 0.2 * raw.font_size,
        x1,
        baseline + 0.8 * raw.font_size,
    )
    .clamped(width, height);
    if !bbox.is_valid() {
        return None;
    }
    Some(TextSpan {
        text: trimmed.to_string(),
        page_index,
        bbox,
        font_size: raw.font_size,
    })
}

/// Reconstruct plain reading text: spans whose y-centers chain within
/// `line_tol` form one line (joined by single spaces in x order); lines
/// are emitted top to bottom.
pub fn page_text(page: &PageContent, line_tol: f64) -> String {
    let mut lines: Vec<Vec<&TextSpan>> = Vec::new();
    let mut prev_y = f64::INFINITY;
    for span in &page.spans {
        let yc = span.bbox.y_center();
        match lines.last_mut() {
            Some(line) if prev_y - yc <= line_tol => line.push(span),
            _ => lines.push(vec![span]),
        }
        prev_y = yc;
    }
    lines
        .iter_mut()
        .map(|line| {
            line.sort_by(|a, b| a.bbox.x0.total_cmp(&b.bbox.x0));
            line.iter()
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Remove spans whose bbox center falls inside any of `regions`.
pub fn strip_regions(page: &PageContent, regions: &[BBox]) -> PageContent {
    let spans = page
        .spans
        .iter()
        .filter(|span| {
            let (cx, cy) = (span.bbox.x_center(), span.bbox.y_center());
            !regions.iter().any(|r| r.contains_point(cx, cy))
        })
        .cloned()
        .collect();
    PageContent {
        page_index: page.page_index,
        width: page.width,
        height: page.height,
        spans,
        dropped_rotated: page.dropped_rotated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::PdfBuilder;

    fn write_pdf(builder: &PdfBuilder) -> tempfile::NamedTempFile {
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), builder.build()).unwrap();
        file
    }

    #[test]
    fn single_span_fixture_round_trips() {
        let mut b = PdfBuilder::new();
        b.page().text(72.0, 700.0, 12.0, "Hello");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        assert_eq!(doc.pages.len(), 1);
        let spans = &doc.pages[0].spans;
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].text, "Hello");
        assert!((spans[0].bbox.x0 - 72.0).abs() < 1e-9);
        assert!((spans[0].bbox.y_center() - (700.0 + 0.3 * 12.0)).abs() < 1e-9);
        assert_eq!(spans[0].page_index, 0);
    }

    #[test]
    fn empty_page_has_no_spans() {
        let mut b = PdfBuilder::new();
        b.page();
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        assert_eq!(doc.pages.len(), 1);
        assert!(doc.pages[0].spans.is_empty());
    }

    #[test]
    fn doc_id_is_stable_across_opens() {
        let mut b = PdfBuilder::new();
        b.page().text(72.0, 700.0, 12.0, "same bytes");
        let f = write_pdf(&b);
        let a = open_document(f.path()).unwrap();
        let b2 = open_document(f.path()).unwrap();
        assert_eq!(a.doc_id, b2.doc_id);
        assert_eq!(a.doc_id.len(), 64);
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = open_document("/nonexistent/nope.pdf").unwrap_err();
        assert!(matches!(err, PdfError::FileUnreadable { .. }));
        assert!(err.to_string().contains("nope.pdf"));
    }

    #[test]
    fn compressed_content_streams_decode() {
        let mut b = PdfBuilder::new().compressed();
        b.page().text(72.0, 700.0, 12.0, "Packed");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        assert_eq!(doc.pages[0].spans[0].text, "Packed");
    }

    #[test]
    fn spans_are_sorted_top_down_then_left_right() {
        let mut b = PdfBuilder::new();
        b.page()
            .text(300.0, 700.0, 12.0, "B")
            .text(72.0, 700.0, 12.0, "A")
            .text(72.0, 650.0, 12.0, "C");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        let texts: Vec<_> = doc.pages[0].spans.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, ["A", "B", "C"]);
    }

    #[test]
    fn kerned_runs_merge_but_words_do_not() {
        let mut b = PdfBuilder::new();
        // TJ gap of 0.1 em merges; explicit 0.5 em word gap stays split.
        b.page()
            .raw("BT /F1 10 Tf 72 700 Td [(Ta) -100 (ble)] TJ ET")
            .raw("BT /F1 10 Tf 72 650 Td (two) Tj ET")
            .raw("BT /F1 10 Tf 92 650 Td (words) Tj ET");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        let texts: Vec<_> = doc.pages[0].spans.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, ["Table", "two", "words"]);
    }

    #[test]
    fn rotated_text_dropped_with_counter() {
        let mut b = PdfBuilder::new();
        b.page()
            .text(72.0, 700.0, 12.0, "upright")
            .raw("BT /F1 12 Tf 0 1 -1 0 300 300 Tm (sideways) Tj ET");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        assert_eq!(doc.pages[0].spans.len(), 1);
        assert_eq!(doc.pages[0].dropped_rotated, 1);
    }

    #[test]
    fn spans_clamp_to_page_bounds() {
        let mut b = PdfBuilder::new();
        b.page().text(600.0, 700.0, 12.0, "overflowing text run");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        let span = &doc.pages[0].spans[0];
        assert!(span.bbox.x1 <= doc.pages[0].width);
    }

    #[test]
    fn page_text_merges_lines_and_orders_top_down() {
        let mut b = PdfBuilder::new();
        b.page()
            .text(72.0, 700.0, 12.0, "alpha")
            .text(140.0, 700.5, 12.0, "beta")
            .text(72.0, 650.0, 12.0, "gamma");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        assert_eq!(page_text(&doc.pages[0], DEFAULT_LINE_TOL), "alpha beta\ngamma");
    }

    #[test]
    fn page_text_of_empty_page_is_empty() {
        let page = PageContent {
            page_index: 0,
            width: 612.0,
            height: 792.0,
            spans: vec![],
            dropped_rotated: 0,
        };
        assert_eq!(page_text(&page, DEFAULT_LINE_TOL), "");
    }

    #[test]
    fn strip_regions_identity_and_removal() {
        let mut b = PdfBuilder::new();
        b.page()
            .text(72.0, 700.0, 12.0, "keep")
            .text(72.0, 400.0, 12.0, "drop");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        let page = &doc.pages[0];

        let unchanged = strip_regions(page, &[]);
        assert_eq!(&unchanged, page);

        let region = BBox::new(0.0, 350.0, 612.0, 450.0);
        let stripped = strip_regions(page, &[region]);
        assert_eq!(stripped.spans.len(), 1);
        assert_eq!(stripped.spans[0].text, "keep");

        // Stripping again with the same region changes nothing.
        let again = strip_regions(&stripped, &[region]);
        assert_eq!(again, stripped);
    }

    #[test]
    fn multi_page_indexes_are_contiguous() {
        let mut b = PdfBuilder::new();
        b.page().text(72.0, 700.0, 12.0, "one");
        b.page().text(72.0, 700.0, 12.0, "two");
        b.page().text(72.0, 700.0, 12.0, "three");
        let f = write_pdf(&b);
        let doc = open_document(f.path()).unwrap();
        let indexes: Vec<_> = doc.pages.iter().map(|p| p.page_index).collect();
        assert_eq!(indexes, [0, 1, 2]);
        for page in &doc.pages {
            for span in &page.spans {
                assert_eq!(span.page_index, page.page_index);
            }
        }
    }
}
