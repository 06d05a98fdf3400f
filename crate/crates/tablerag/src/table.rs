//! Table detection from positioned spans: whitespace/alignment analysis
//! only, no ruling lines.
//!
//! Rows come from single-linkage clustering of span y-centers, columns
//! from single-linkage clustering of span left edges across the candidate
//! rows. A contiguous run of rows qualifies as a table when every row
//! places at least two spans into at least two distinct column intervals;
//! rows that fail split the run, and the fragments are re-examined with
//! their own column layout.

use serde_json::json;

use crate::geom::BBox;
use crate::pdf::{PageContent, TextSpan};

/// Clustering tolerances and table-shape thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectParams {
    /// Max y-center gap chaining two spans into one row band (points).
    pub row_tol: f64,
    /// Max left-edge gap chaining two spans into one column cluster (points).
    pub col_tol: f64,
    /// Minimum number of distinct row bands that must share a column.
    pub min_support: usize,
    /// Minimum qualifying rows for a run to count as a table.
    pub min_table_rows: usize,
    /// Leading rows treated as the header.
    pub header_rows: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            row_tol: 2.0,
            col_tol: 6.0,
            min_support: 2,
            min_table_rows: 3,
            header_rows: 1,
        }
    }
}

/// A horizontal cluster of spans: one candidate table row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowBand {
    /// Mean of member span y-centers.
    pub y_center: f64,
    /// Members sorted by x0.
    pub spans: Vec<TextSpan>,
}

/// One grid cell; `bbox` is absent when the cell was filled in as empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub row_index: usize,
    pub col_index: usize,
    pub text: String,
    pub bbox: Option<BBox>,
}

/// A dense detected table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableGrid {
    pub doc_id: String,
    pub page_index: usize,
    /// Ordinal among the page's tables, top to bottom.
    pub table_index: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    /// Row-major, exactly n_rows × n_cols entries.
    pub cells: Vec<Cell>,
    pub header_rows: usize,
    /// Union of member span boxes.
    pub bbox: BBox,
}

impl TableGrid {
    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.n_cols + col]
    }

    pub fn cell_text(&self, row: usize, col: usize) -> &str {
        &self.cell(row, col).text
    }

    /// Number of rows below the header.
    pub fn n_data_rows(&self) -> usize {
        self.n_rows - self.header_rows
    }

    /// Texts of data row `i` (0-based below the header).
    pub fn data_row(&self, i: usize) -> Vec<&str> {
        let row = self.header_rows + i;
        (0..self.n_cols).map(|c| self.cell_text(row, c)).collect()
    }

    /// JSON form used by the `tables` command:
    /// {doc_id, page_index, table_index, n_rows, n_cols, header_rows, cells}.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<&str>> = (0..self.n_rows)
            .map(|r| (0..self.n_cols).map(|c| self.cell_text(r, c)).collect())
            .collect();
        json!({
            "doc_id": self.doc_id,
            "page_index": self.page_index,
            "table_index": self.table_index,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "header_rows": self.header_rows,
            "cells": rows,
        })
    }
}

/// Group spans into row bands by single-linkage over y-centers: spans
/// belong together iff a chain of pairwise gaps ≤ `row_tol` connects them.
/// Bands come back top to bottom, members left to right.
pub fn cluster_rows(spans: &[TextSpan], row_tol: f64) -> Vec<RowBand> {
    let mut sorted: Vec<&TextSpan> = spans.iter().collect();
    sorted.sort_by(|a, b| {
        b.bbox
            .y_center()
            .total_cmp(&a.bbox.y_center())
            .then(a.bbox.x0.total_cmp(&b.bbox.x0))
    });
    let mut bands: Vec<Vec<&TextSpan>> = Vec::new();
    let mut prev_y = f64::INFINITY;
    for span in sorted {
        let yc = span.bbox.y_center();
        match bands.last_mut() {
            Some(band) if prev_y - yc <= row_tol => band.push(span),
            _ => bands.push(vec![span]),
        }
        prev_y = yc;
    }
    bands
        .into_iter()
        .map(|members| {
            let mut spans: Vec<TextSpan> = members.iter().map(|s| (*s).clone()).collect();
            spans.sort_by(|a, b| a.bbox.x0.total_cmp(&b.bbox.x0));
            let y_center =
                spans.iter().map(|s| s.bbox.y_center()).sum::<f64>() / spans.len() as f64;
            RowBand { y_center, spans }
        })
        .collect()
}

/// Infer column x-intervals from the bands' span left edges.
///
/// Left edges are clustered by single linkage with `col_tol`; clusters
/// appearing in at least `min_support` distinct bands survive. Each
/// surviving cluster owns the interval from its smallest x0 up to the
/// next column's start; the last column runs to the bands' largest x1.
/// Fewer than two surviving columns means no table: empty result.
pub fn detect_columns(bands: &[RowBand], col_tol: f64, min_support: usize) -> Vec<(f64, f64)> {
    // (x0, band index) pairs, sorted by edge position.
    let mut edges: Vec<(f64, usize)> = Vec::new();
    let mut max_x1 = f64::NEG_INFINITY;
    for (band_idx, band) in bands.iter().enumerate() {
        for span in &band.spans {
            edges.push((span.bbox.x0, band_idx));
            max_x1 = max_x1.max(span.bbox.x1);
        }
    }
    if edges.is_empty() {
        return Vec::new();
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut clusters: Vec<Vec<(f64, usize)>> = Vec::new();
    let mut prev_x = f64::NEG_INFINITY;
    for edge in edges {
        match clusters.last_mut() {
            Some(cluster) if edge.0 - prev_x <= col_tol => cluster.push(edge),
            _ => clusters.push(vec![edge]),
        }
        prev_x = edge.0;
    }

    let starts: Vec<f64> = clusters
        .iter()
        .filter(|cluster| {
            let mut bands_seen: Vec<usize> = cluster.iter().map(|&(_, b)| b).collect();
            bands_seen.sort_unstable();
            bands_seen.dedup();
            bands_seen.len() >= min_support
        })
        .map(|cluster| cluster[0].0)
        .collect();
    if starts.len() < 2 {
        return Vec::new();
    }
    starts
        .iter()
        .enumerate()
        .map(|(i, &start)| {
            let end = starts.get(i + 1).copied().unwrap_or(max_x1);
            (start, end)
        })
        .collect()
}

/// Index of the column interval owning `x` (by x-center assignment);
/// a point exactly on a boundary goes to the left interval.
fn column_of(x: f64, columns: &[(f64, f64)]) -> Option<usize> {
    if x < columns[0].0 {
        return None;
    }
    for (i, &(_, end)) in columns.iter().enumerate() {
        if x <= end {
            return Some(i);
        }
    }
    None
}

/// True when the band puts at least two spans into at least two distinct
/// column intervals.
fn band_qualifies(band: &RowBand, columns: &[(f64, f64)]) -> bool {
    let mut seen: Option<usize> = None;
    for span in &band.spans {
        if let Some(col) = column_of(span.bbox.x_center(), columns) {
            match seen {
                None => seen = Some(col),
                Some(first) if first != col => return true,
                Some(_) => {}
            }
        }
    }
    false
}

/// Detect tables on a page. Grids are dense (missing cells hold empty
/// text), ordered top to bottom, with `header_rows` clamped to leave at
/// least one data row.
pub fn detect_tables(doc_id: &str, page: &PageContent, params: &DetectParams) -> Vec<TableGrid> {
    let bands = cluster_rows(&page.spans, params.row_tol);

    // Seed runs: maximal contiguous stretches of bands with ≥ 2 spans.
    let mut queue: Vec<(usize, usize)> = Vec::new(); // [start, end) into bands
    let mut run_start: Option<usize> = None;
    for (i, band) in bands.iter().enumerate() {
        if band.spans.len() >= 2 {
            run_start.get_or_insert(i);
        } else if let Some(start) = run_start.take() {
            queue.push((start, i));
        }
    }
    if let Some(start) = run_start {
        queue.push((start, bands.len()));
    }

    // Refine: a run survives when, under its own column layout, every band
    // qualifies; otherwise it splits at the failing bands and the pieces
    // are re-examined. Runs strictly shrink, so this terminates.
    let mut accepted: Vec<(usize, usize, Vec<(f64, f64)>)> = Vec::new();
    while let Some((start, end)) = queue.pop() {
        if end - start < params.min_table_rows {
            continue;
        }
        let run = &bands[start..end];
        let columns = detect_columns(run, params.col_tol, params.min_support);
        if columns.len() < 2 {
            continue;
        }
        let failing: Vec<usize> = run
            .iter()
            .enumerate()
            .filter(|(_, band)| !band_qualifies(band, &columns))
            .map(|(i, _)| start + i)
            .collect();
        if failing.is_empty() {
            accepted.push((start, end, columns));
            continue;
        }
        let mut piece_start = start;
        for &fail in &failing {
            if fail > piece_start {
                queue.push((piece_start, fail));
            }
            piece_start = fail + 1;
        }
        if end > piece_start {
            queue.push((piece_start, end));
        }
    }

    // Top-to-bottom order on the page, regardless of refinement order.
    accepted.sort_by_key(|&(start, _, _)| start);

    accepted
        .into_iter()
        .enumerate()
        .map(|(table_index, (start, end, columns))| {
            assemble_grid(doc_id, page.page_index, table_index, &bands[start..end], &columns, params)
        })
        .collect()
}

fn assemble_grid(
    doc_id: &str,
    page_index: usize,
    table_index: usize,
    run: &[RowBand],
    columns: &[(f64, f64)],
    params: &DetectParams,
) -> TableGrid {
    let n_rows = run.len();
    let n_cols = columns.len();
    let mut cells = Vec::with_capacity(n_rows * n_cols);
    let mut table_bbox: Option<BBox> = None;
    for (row_index, band) in run.iter().enumerate() {
        // Bucket this band's spans by owning column (members are already
        // in x order, so joined text stays in reading order).
        let mut buckets: Vec<Vec<&TextSpan>> = vec![Vec::new(); n_cols];
        for span in &band.spans {
            if let Some(col) = column_of(span.bbox.x_center(), columns) {
                buckets[col].push(span);
            }
        }
        for (col_index, bucket) in buckets.iter().enumerate() {
            let text = bucket
                .iter()
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let bbox = bucket
                .iter()
                .map(|s| s.bbox)
                .reduce(|a, b| a.union(&b));
            if let Some(b) = bbox {
                table_bbox = Some(match table_bbox {
                    Some(t) => t.union(&b),
                    None => b,
                });
            }
            cells.push(Cell {
                row_index,
                col_index,
                text,
                bbox,
            });
        }
    }
    let header_rows = params.header_rows.clamp(1, n_rows - 1);
    TableGrid {
        doc_id: doc_id.to_string(),
        page_index,
        table_index,
        n_rows,
        n_cols,
        cells,
        header_rows,
        // A qualifying run always has at least one non-empty cell.
        bbox: table_bbox.expect("qualifying run has spans"),
    }
}

/// Column names: texts of the header rows, one string per column. With a
/// multi-row header, the rows' texts are joined by single spaces (empties
/// skipped); a column whose header is still empty gets "col<j>".
pub fn extract_header(grid: &TableGrid) -> Vec<String> {
    (0..grid.n_cols)
        .map(|col| {
            let joined = (0..grid.header_rows)
                .map(|row| grid.cell_text(row, col))
                .filter(|t| !t.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            if joined.is_empty() {
                format!("col{col}")
            } else {
                joined
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Span with the width model used by the extractor: 0.5 em per char.
    fn span(text: &str, x0: f64, baseline: f64, size: f64) -> TextSpan {
        let x1 = x0 + 0.5 * size * text.chars().count() as f64;
        TextSpan {
            text: text.to_string(),
            page_index: 0,
            bbox: BBox::new(x0, baseline - 0.2 * size, x1, baseline + 0.8 * size),
            font_size: size,
        }
    }

    fn page(spans: Vec<TextSpan>) -> PageContent {
        let mut spans = spans;
        spans.sort_by(|a, b| {
            b.bbox
                .y_center()
                .total_cmp(&a.bbox.y_center())
                .then(a.bbox.x0.total_cmp(&b.bbox.x0))
        });
        PageContent {
            page_index: 0,
            width: 612.0,
            height: 792.0,
            spans,
            dropped_rotated: 0,
        }
    }

    #[test]
    fn close_centers_share_a_band() {
        let spans = vec![span("a", 72.0, 700.0, 10.0), span("b", 150.0, 699.5, 10.0)];
        let bands = cluster_rows(&spans, 2.0);
        assert_eq!(bands.len(), 1);
        assert_eq!(bands[0].spans.len(), 2);
    }

    #[test]
    fn distant_centers_split_bands() {
        let spans = vec![span("a", 72.0, 700.0, 10.0), span("b", 72.0, 690.0, 10.0)];
        let bands = cluster_rows(&spans, 2.0);
        assert_eq!(bands.len(), 2);
        // Top to bottom.
        assert!(bands[0].y_center > bands[1].y_center);
    }

    #[test]
    fn chained_gaps_link_one_band() {
        let spans = vec![
            span("a", 72.0, 700.0, 10.0),
            span("b", 150.0, 698.5, 10.0),
            span("c", 220.0, 697.0, 10.0),
        ];
        assert_eq!(cluster_rows(&spans, 2.0).len(), 1);
    }

    #[test]
    fn bands_partition_all_spans() {
        let spans: Vec<TextSpan> = (0..40)
            .map(|i| span("x", 72.0 + (i % 4) as f64 * 60.0, 700.0 - (i / 4) as f64 * 13.0, 10.0))
            .collect();
        let bands = cluster_rows(&spans, 2.0);
        let total: usize = bands.iter().map(|b| b.spans.len()).sum();
        assert_eq!(total, spans.len());
        assert_eq!(bands.len(), 10);
    }

    #[test]
    fn band_members_are_x_sorted_and_centered() {
        let spans = vec![span("right", 300.0, 700.4, 10.0), span("left", 72.0, 699.6, 10.0)];
        let bands = cluster_rows(&spans, 2.0);
        assert_eq!(bands[0].spans[0].text, "left");
        let expect = (spans[0].bbox.y_center() + spans[1].bbox.y_center()) / 2.0;
        assert!((bands[0].y_center - expect).abs() < 1e-9);
    }

    #[test]
    fn aligned_edges_become_columns() {
        let spans: Vec<TextSpan> = (0..3)
            .flat_map(|r| {
                let y = 700.0 - r as f64 * 14.0;
                vec![span("a", 72.0, y, 10.0), span("b", 200.0, y, 10.0)]
            })
            .collect();
        let bands = cluster_rows(&spans, 2.0);
        let cols = detect_columns(&bands, 6.0, 2);
        assert_eq!(cols.len(), 2);
        assert!((cols[0].0 - 72.0).abs() < 1e-9);
        assert!((cols[1].0 - 200.0).abs() < 1e-9);
        // First interval ends where the second begins; last runs to max x1.
        assert!((cols[0].1 - 200.0).abs() < 1e-9);
        assert!((cols[1].1 - 205.0).abs() < 1e-9);
    }

    #[test]
    fn single_column_is_no_table() {
        let spans: Vec<TextSpan> = [72.0, 74.0, 71.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| span("only", x, 700.0 - i as f64 * 14.0, 10.0))
            .collect();
        let bands = cluster_rows(&spans, 2.0);
        assert!(detect_columns(&bands, 6.0, 2).is_empty());
    }

    #[test]
    fn low_support_edges_are_discarded() {
        let mut spans: Vec<TextSpan> = (0..3)
            .flat_map(|r| {
                let y = 700.0 - r as f64 * 14.0;
                vec![span("a", 72.0, y, 10.0), span("b", 200.0, y, 10.0)]
            })
            .collect();
        // A one-off edge far from both columns, in a single band.
        spans.push(span("stray", 400.0, 700.0, 10.0));
        let bands = cluster_rows(&spans, 2.0);
        let cols = detect_columns(&bands, 6.0, 2);
        assert_eq!(cols.len(), 2);
        // Last real column absorbs the stray's extent.
        assert!((cols[1].1 - 425.0).abs() < 1e-9);
    }

    fn grid_spans(
        x_cols: &[f64],
        y_top: f64,
        row_step: f64,
        rows: &[Vec<&str>],
    ) -> Vec<TextSpan> {
        let mut out = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if !cell.is_empty() {
                    out.push(span(cell, x_cols[c], y_top - r as f64 * row_step, 10.0));
                }
            }
        }
        out
    }

    #[test]
    fn four_by_three_grid_with_stray_title_above() {
        let mut spans = grid_spans(
            &[72.0, 220.0, 380.0],
            700.0,
            14.0,
            &[
                vec!["Plan", "Premium", "Fee"],
                vec!["Gold", "980", "12"],
                vec!["Silver", "640", "9"],
                vec!["Bronze", "410", "7"],
            ],
        );
        // Two stray title tokens above, both landing in the first column's
        // neighborhood: the title band fails the two-distinct-columns test.
        spans.push(span("Coverage", 72.0, 730.0, 14.0));
        spans.push(span("Overview", 140.0, 730.0, 14.0));
        let tables = detect_tables("doc", &page(spans), &DetectParams::default());
        assert_eq!(tables.len(), 1);
        let t = &tables[0];
        assert_eq!((t.n_rows, t.n_cols), (4, 3));
        assert_eq!(t.cell_text(0, 0), "Plan");
        assert_eq!(t.cell_text(3, 2), "7");
        assert_eq!(t.table_index, 0);
    }

    #[test]
    fn prose_page_has_no_tables() {
        let spans: Vec<TextSpan> = (0..8)
            .map(|i| span("a prose line of text", 72.0, 700.0 - i as f64 * 14.0, 10.0))
            .collect();
        assert!(detect_tables("doc", &page(spans), &DetectParams::default()).is_empty());
    }

    #[test]
    fn missing_cell_yields_empty_text() {
        let spans = grid_spans(
            &[72.0, 220.0, 380.0],
            700.0,
            14.0,
            &[
                vec!["H1", "H2", "H3"],
                vec!["a", "b", "c"],
                vec!["d", "", "f"],
                vec!["g", "h", "i"],
            ],
        );
        let tables = detect_tables("doc", &page(spans), &DetectParams::default());
        assert_eq!(tables.len(), 1);
        let t = &tables[0];
        assert_eq!(t.cell_text(2, 1), "");
        assert!(t.cell(2, 1).bbox.is_none());
        assert_eq!(t.cell_text(2, 0), "d");
        assert_eq!(t.cell_text(2, 2), "f");
        assert_eq!(t.cells.len(), t.n_rows * t.n_cols);
    }

    #[test]
    fn multi_word_cells_join_in_x_order() {
        let mut spans = grid_spans(
            &[72.0, 250.0],
            700.0,
            14.0,
            &[vec!["Plan", "Notes"], vec!["Gold", ""], vec!["Silver", ""]],
        );
        // Two words inside the (1, 1) cell.
        spans.push(span("best", 250.0, 686.0, 10.0));
        spans.push(span("value", 280.0, 686.0, 10.0));
        spans.push(span("cheap", 250.0, 672.0, 10.0));
        let tables = detect_tables("doc", &page(spans), &DetectParams::default());
        assert_eq!(tables[0].cell_text(1, 1), "best value");
    }

    #[test]
    fn two_tables_sharing_a_page_stay_separate() {
        let mut spans = grid_spans(
            &[72.0, 200.0],
            700.0,
            14.0,
            &[vec!["A", "B"], vec!["1", "2"], vec!["3", "4"]],
        );
        // A prose band between the grids breaks contiguity.
        spans.push(span("interlude", 72.0, 640.0, 10.0));
        spans.extend(grid_spans(
            &[90.0, 300.0],
            600.0,
            14.0,
            &[vec!["C", "D"], vec!["5", "6"], vec!["7", "8"]],
        ));
        let tables = detect_tables("doc", &page(spans), &DetectParams::default());
        assert_eq!(tables.len(), 2);
        assert_eq!(tables[0].table_index, 0);
        assert_eq!(tables[0].cell_text(0, 0), "A");
        assert_eq!(tables[1].table_index, 1);
        assert_eq!(tables[1].cell_text(0, 0), "C");
    }

    #[test]
    fn grid_bbox_contains_every_member_span() {
        let spans = grid_spans(
            &[72.0, 220.0, 380.0],
            700.0,
            14.0,
            &[
                vec!["H1", "H2", "H3"],
                vec!["a", "b", "c"],
                vec!["d", "e", "f"],
            ],
        );
        let copies = spans.clone();
        let tables = detect_tables("doc", &page(spans), &DetectParams::default());
        let bbox = tables[0].bbox;
        for s in &copies {
            assert!(bbox.contains_point(s.bbox.x_center(), s.bbox.y_center()));
        }
    }

    #[test]
    fn header_row_identity() {
        let spans = grid_spans(
            &[72.0, 220.0],
            700.0,
            14.0,
            &[vec!["Name", "Age"], vec!["Alice", "30"], vec!["Bob", "25"]],
        );
        let tables = detect_tables("doc", &page(spans), &DetectParams::default());
        assert_eq!(extract_header(&tables[0]), ["Name", "Age"]);
    }

    #[test]
    fn empty_header_gets_placeholder() {
        let spans = grid_spans(
            &[72.0, 220.0, 380.0],
            700.0,
            14.0,
            &[
                vec!["Name", "", "Age"],
                vec!["Alice", "x", "30"],
                vec!["Bob", "y", "25"],
            ],
        );
        let tables = detect_tables("doc", &page(spans), &DetectParams::default());
        assert_eq!(extract_header(&tables[0]), ["Name", "col1", "Age"]);
    }

    /// Hand-built grid for header-only tests (no detection involved).
    fn manual_grid(rows: &[Vec<&str>], header_rows: usize) -> TableGrid {
        let n_rows = rows.len();
        let n_cols = rows[0].len();
        let cells = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter().enumerate().map(move |(c, text)| Cell {
                    row_index: r,
                    col_index: c,
                    text: text.to_string(),
                    bbox: None,
                })
            })
            .collect();
        TableGrid {
            doc_id: "doc".into(),
            page_index: 0,
            table_index: 0,
            n_rows,
            n_cols,
            cells,
            header_rows,
            bbox: BBox::new(0.0, 0.0, 1.0, 1.0),
        }
    }

    #[test]
    fn two_row_header_joins_and_skips_empties() {
        let grid = manual_grid(
            &[
                vec!["Premium", ""],
                vec!["Annual", "Monthly"],
                vec!["980", "12"],
            ],
            2,
        );
        assert_eq!(extract_header(&grid), ["Premium Annual", "Monthly"]);
        assert_eq!(grid.n_data_rows(), 1);
        assert_eq!(grid.data_row(0), ["980", "12"]);
    }

    #[test]
    fn detected_two_row_header_joins_texts() {
        let spans = grid_spans(
            &[72.0, 220.0],
            700.0,
            14.0,
            &[
                vec!["Premium", "Service"],
                vec!["Annual", "Monthly"],
                vec!["980", "12"],
                vec!["640", "9"],
            ],
        );
        let params = DetectParams {
            header_rows: 2,
            ..DetectParams::default()
        };
        let tables = detect_tables("doc", &page(spans), &params);
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].header_rows, 2);
        assert_eq!(extract_header(&tables[0]), ["Premium Annual", "Service Monthly"]);
        assert_eq!(tables[0].n_data_rows(), 2);
        assert_eq!(tables[0].data_row(0), ["980", "12"]);
    }

    #[test]
    fn header_rows_clamp_leaves_a_data_row() {
        let spans = grid_spans(
            &[72.0, 220.0],
            700.0,
            14.0,
            &[vec!["A", "B"], vec!["1", "2"], vec!["3", "4"]],
        );
        let params = DetectParams {
            header_rows: 9,
            ..DetectParams::default()
        };
        let tables = detect_tables("doc", &page(spans), &params);
        assert_eq!(tables[0].header_rows, 2);
        assert_eq!(tables[0].n_data_rows(), 1);
    }

    #[test]
    fn raising_thresholds_never_adds_tables() {
        let mut spans = grid_spans(
            &[72.0, 220.0, 380.0],
            700.0,
            14.0,
            &[
                vec!["H1", "H2", "H3"],
                vec!["a", "b", "c"],
                vec!["d", "e", "f"],
                vec!["g", "h", "i"],
            ],
        );
        spans.push(span("filler prose", 72.0, 500.0, 10.0));
        spans.extend(grid_spans(
            &[72.0, 300.0],
            470.0,
            14.0,
            &[vec!["X", "Y"], vec!["1", "2"], vec!["3", "4"]],
        ));
        let p = page(spans);
        let base = detect_tables("doc", &p, &DetectParams::default()).len();
        for min_support in 2..6 {
            for min_table_rows in 3..7 {
                let params = DetectParams {
                    min_support,
                    min_table_rows,
                    ..DetectParams::default()
                };
                let n = detect_tables("doc", &p, &params).len();
                assert!(
                    n <= base,
                    "support={min_support} rows={min_table_rows} gave {n} > {base}"
                );
            }
        }
    }

    #[test]
    fn boundary_center_goes_to_left_column() {
        let cols = vec![(72.0, 200.0), (200.0, 320.0)];
        assert_eq!(column_of(200.0, &cols), Some(0));
        assert_eq!(column_of(200.1, &cols), Some(1));
        assert_eq!(column_of(71.0, &cols), None);
        assert_eq!(column_of(321.0, &cols), None);
    }

    #[test]
    fn json_shape_matches_contract() {
        let spans = grid_spans(
            &[72.0, 220.0],
            700.0,
            14.0,
            &[vec!["A", "B"], vec!["1", "2"], vec!["3", "4"]],
        );
        let tables = detect_tables("doc9", &page(spans), &DetectParams::default());
        let v = tables[0].to_json();
        assert_eq!(v["doc_id"], "doc9");
        assert_eq!(v["n_rows"], 3);
        assert_eq!(v["n_cols"], 2);
        assert_eq!(v["header_rows"], 1);
        assert_eq!(v["cells"][1][0], "1");
        assert_eq!(v["cells"].as_array().unwrap().len(), 3);
    }
}
