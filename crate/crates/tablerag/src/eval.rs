//! Accuracy evaluation: run labeled question sets through a pipeline
//! mode, judge answers by normalized containment, and report per-category
//! percentages.
//!
//! Categories split questions into prose-answerable ("text") and
//! table-answerable ("table_simple" / "table_complex") groups, with a
//! combined table figure and an overall figure.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::Gateway;
use crate::index::{Embedder, VectorIndex};
use crate::pdf::SourceDocument;
use crate::rag::{
    self, EnrichmentClient, GeneratorOptions, IngestOptions, PipelineMode, RagError,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cannot compute a percentage over zero cases")]
    ZeroTotal,
    #[error("evaluation aborted after a gateway failure: {detail}")]
    Aborted {
        /// Progress up to the failure, flagged incomplete.
        report: Box<EvalReport>,
        detail: String,
    },
    #[error("mode comparison needs at least two modes, got {0}")]
    TooFewModes(usize),
    #[error("query set {path}, line {line}: {detail}")]
    QuerySet {
        path: PathBuf,
        line: usize,
        detail: String,
    },
    #[error("query set {path}: {detail}")]
    Io { path: PathBuf, detail: String },
    #[error(transparent)]
    Rag(#[from] RagError),
}

/// Question grouping used for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Text,
    TableSimple,
    TableComplex,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Text => "text",
            Category::TableSimple => "table_simple",
            Category::TableComplex => "table_complex",
        }
    }

    pub fn is_table(self) -> bool {
        !matches!(self, Category::Text)
    }
}

/// One labeled question: any expected string counting as correct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCase {
    pub id: String,
    pub question: String,
    pub expected: Vec<String>,
    pub category: Category,
}

/// Correct/total counters with the derived percentage (absent when no
/// cases fell in the group).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub correct: usize,
    pub total: usize,
    pub accuracy_pct: Option<f64>,
}

impl CategoryStats {
    pub fn from_counts(correct: usize, total: usize) -> Self {
        let accuracy_pct = accuracy_pct(correct, total).ok();
        Self {
            correct,
            total,
            accuracy_pct,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryBreakdown {
    pub text: CategoryStats,
    pub table_simple: CategoryStats,
    pub table_complex: CategoryStats,
}

/// Accuracy summary for one pipeline mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: PipelineMode,
    pub categories: CategoryBreakdown,
    /// table_simple and table_complex pooled.
    pub table_combined: CategoryStats,
    pub overall: CategoryStats,
    /// True when a gateway failure cut the run short.
    pub incomplete: bool,
}

impl EvalReport {
    /// Build a report from raw per-category counts, recomputing every
    /// derived figure. Raw counts stay exposed so the arithmetic can be
    /// independently checked.
    pub fn from_counts(
        mode: PipelineMode,
        counts: &[(Category, usize, usize)],
        incomplete: bool,
    ) -> Self {
        let pick = |cat: Category| {
            counts
                .iter()
                .find(|(c, _, _)| *c == cat)
                .map(|&(_, correct, total)| (correct, total))
                .unwrap_or((0, 0))
        };
        let (t_c, t_n) = pick(Category::Text);
        let (s_c, s_n) = pick(Category::TableSimple);
        let (x_c, x_n) = pick(Category::TableComplex);
        EvalReport {
            mode,
            categories: CategoryBreakdown {
                text: CategoryStats::from_counts(t_c, t_n),
                table_simple: CategoryStats::from_counts(s_c, s_n),
                table_complex: CategoryStats::from_counts(x_c, x_n),
            },
            table_combined: CategoryStats::from_counts(s_c + x_c, s_n + x_n),
            overall: CategoryStats::from_counts(t_c + s_c + x_c, t_n + s_n + x_n),
            incomplete,
        }
    }
}

/// Lowercase, map whitespace to single spaces, and drop every character
/// that is not alphanumeric, space, period, or percent.
fn normalize(s: &str) -> String {
    let mut kept = String::with_capacity(s.len());
    for c in s.to_lowercase().chars() {
        if c.is_whitespace() {
            kept.push(' ');
        } else if c.is_alphanumeric() || c == '.' || c == '%' {
            kept.push(c);
        }
    }
    let mut out = String::with_capacity(kept.len());
    let mut pending_space = false;
    for c in kept.chars() {
        if c == ' ' {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// An answer is correct when any expected string, after normalization,
/// appears inside the normalized answer.
pub fn judge(answer_text: &str, expected: &[String]) -> bool {
    debug_assert!(!expected.is_empty(), "expected list must be non-empty");
    let answer = normalize(answer_text);
    expected.iter().any(|e| {
        let e = normalize(e);
        !e.is_empty() && answer.contains(&e)
    })
}

/// 100 × correct / total, rounded half-up to one decimal place. The
/// rounding runs in integer arithmetic so boundary halves never suffer
/// float error.
pub fn accuracy_pct(correct: usize, total: usize) -> Result<f64, EvalError> {
    if total == 0 {
        return Err(EvalError::ZeroTotal);
    }
    assert!(correct <= total, "correct ({correct}) exceeds total ({total})");
    let n = correct as u128 * 1000;
    let tenths = (2 * n + total as u128) / (2 * total as u128);
    Ok(tenths as f64 / 10.0)
}

struct Tally {
    counts: Vec<(Category, usize, usize)>,
}

impl Tally {
    fn new() -> Self {
        Self {
            counts: vec![
                (Category::Text, 0, 0),
                (Category::TableSimple, 0, 0),
                (Category::TableComplex, 0, 0),
            ],
        }
    }

    fn record(&mut self, category: Category, correct: bool) {
        let entry = self
            .counts
            .iter_mut()
            .find(|(c, _, _)| *c == category)
            .expect("all categories present");
        entry.2 += 1;
        if correct {
            entry.1 += 1;
        }
    }
}

/// Answer and judge every case against an already-ingested index. A
/// gateway failure aborts the run; the error carries the partial report.
pub fn run_eval(
    cases: &[QueryCase],
    mode: PipelineMode,
    index: &VectorIndex,
    embedder: &Embedder,
    generator_gateway: &Gateway,
    generator: &GeneratorOptions,
    k: usize,
) -> Result<EvalReport, EvalError> {
    if cases.is_empty() {
        return Err(EvalError::ZeroTotal);
    }
    let mut tally = Tally::new();
    for case in cases {
        match rag::answer(
            &case.question,
            index,
            embedder,
            generator_gateway,
            generator,
            k,
            mode,
        ) {
            Ok(answer) => tally.record(case.category, judge(&answer.text, &case.expected)),
            Err(e) => {
                return Err(EvalError::Aborted {
                    report: Box::new(EvalReport::from_counts(mode, &tally.counts, true)),
                    detail: e.to_string(),
                });
            }
        }
    }
    Ok(EvalReport::from_counts(mode, &tally.counts, false))
}

/// Shared wiring for a multi-mode comparison run.
pub struct CompareSettings<'a> {
    pub embedder: &'a Embedder,
    pub ingest: &'a IngestOptions,
    pub generator_gateway: &'a Gateway,
    pub generator: &'a GeneratorOptions,
    pub enrichment: Option<&'a EnrichmentClient<'a>>,
    pub k: usize,
}

/// Ingest the corpus freshly per mode into an isolated index, evaluate
/// the cases, and return one report per mode in the order given.
pub fn compare_modes(
    cases: &[QueryCase],
    modes: &[PipelineMode],
    corpus: &[SourceDocument],
    settings: &CompareSettings<'_>,
) -> Result<Vec<EvalReport>, EvalError> {
    if modes.len() < 2 {
        return Err(EvalError::TooFewModes(modes.len()));
    }
    let mut reports = Vec::with_capacity(modes.len());
    for &mode in modes {
        let mut index = VectorIndex::new(settings.embedder.dim(), settings.embedder.id());
        for doc in corpus {
            rag::ingest(
                doc,
                mode,
                &mut index,
                settings.embedder,
                settings.ingest,
                settings.enrichment,
            )?;
        }
        reports.push(run_eval(
            cases,
            mode,
            &index,
            settings.embedder,
            settings.generator_gateway,
            settings.generator,
            settings.k,
        )?);
    }
    Ok(reports)
}

/// Read a JSON-lines query set; every error names the offending line.
pub fn load_query_set(path: impl AsRef<Path>) -> Result<Vec<QueryCase>, EvalError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|e| EvalError::Io {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let mut cases = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |detail: String| EvalError::QuerySet {
            path: path.to_path_buf(),
            line: line_no,
            detail,
        };
        let case: QueryCase = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if case.id.trim().is_empty() {
            return Err(err("id must be non-empty".into()));
        }
        if !seen.insert(case.id.clone()) {
            return Err(err(format!("duplicate id {:?}", case.id)));
        }
        if case.expected.is_empty() {
            return Err(err("expected must list at least one answer".into()));
        }
        if case.expected.iter().any(|e| e.trim().is_empty()) {
            return Err(err("expected entries must be non-empty".into()));
        }
        cases.push(case);
    }
    Ok(cases)
}

/// Append one case per line to a JSON-lines string.
pub fn render_query_set(cases: &[QueryCase]) -> String {
    let mut out = String::new();
    for case in cases {
        out.push_str(&serde_json::to_string(case).expect("case serializes"));
        out.push('\n');
    }
    out
}

fn fmt_pct(stats: &CategoryStats) -> String {
    match stats.accuracy_pct {
        Some(v) => format!("{v:.1}"),
        None => "-".to_string(),
    }
}

/// Pretty JSON for a single report.
pub fn render_report_json(report: &EvalReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Pretty JSON array, one element per mode.
pub fn render_comparison_json(reports: &[EvalReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}

/// Aligned plain-text table: one row per mode with text, combined-table,
/// and overall accuracy columns.
pub fn render_comparison_text(reports: &[EvalReport]) -> String {
    let header = ["mode", "text_acc", "table_acc", "overall_acc"];
    let mut rows: Vec<[String; 4]> = Vec::with_capacity(reports.len());
    for r in reports {
        let mut mode = r.mode.as_str().to_string();
        if r.incomplete {
            mode.push_str(" (incomplete)");
        }
        rows.push([
            mode,
            fmt_pct(&r.categories.text),
            fmt_pct(&r.table_combined),
            fmt_pct(&r.overall),
        ]);
    }
    let mut widths = [0usize; 4];
    for (i, h) in header.iter().enumerate() {
        widths[i] = h.len();
    }
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: [&str; 4]| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            if i == 0 {
                out.push_str(&format!("{cell:<width$}", width = widths[i]));
            } else {
                out.push_str(&format!("{cell:>width$}", width = widths[i]));
            }
        }
        out.push('\n');
    };
    push_row(header);
    for row in &rows {
        push_row([&row[0], &row[1], &row[2], &row[3]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{ChatMessage, ChatRequest, DefaultRule, GatewayConfig, MockScript};
    use crate::rag::DEFAULT_ANSWER_SYSTEM;
    use std::sync::Arc;

    #[test]
    fn judge_matches_contained_answers() {
        assert!(judge("Alice is 30 years old.", &["30".to_string()]));
        assert!(!judge("no data", &["30".to_string()]));
        assert!(judge(
            "THE LIMIT IS  $5,000",
            &["5000".to_string(), "absent".to_string()]
        ));
    }

    #[test]
    fn judge_survives_case_and_punctuation_noise() {
        let expected = vec!["93.3%".to_string()];
        for variant in [
            "accuracy: 93.3%",
            "Accuracy — [93.3%]!",
            "ACCURACY\t93.3%",
            "accuracy   93.3%",
        ] {
            assert!(judge(variant, &expected), "variant {variant:?}");
        }
    }

    #[test]
    fn judge_ignores_unmatchable_blank_expectations() {
        assert!(!judge("anything", &["$,".to_string()]));
    }

    #[test]
    fn normalization_drops_currency_and_commas() {
        assert_eq!(normalize("THE LIMIT IS  $5,000"), "the limit is 5000");
        assert_eq!(normalize("  93.3%  "), "93.3%");
        assert_eq!(normalize("a\nb\tc"), "a b c");
    }

    #[test]
    fn accuracy_pins() {
        assert_eq!(accuracy_pct(108, 200).unwrap(), 54.0);
        assert_eq!(accuracy_pct(28, 30).unwrap(), 93.3);
        assert_eq!(accuracy_pct(0, 10).unwrap(), 0.0);
        assert_eq!(accuracy_pct(26, 30).unwrap(), 86.7);
        assert_eq!(accuracy_pct(104, 170).unwrap(), 61.2);
        assert_eq!(accuracy_pct(118, 200).unwrap(), 59.0);
        assert_eq!(accuracy_pct(132, 200).unwrap(), 66.0);
        assert_eq!(accuracy_pct(82, 170).unwrap(), 48.2);
    }

    #[test]
    fn accuracy_rounds_half_up() {
        // 12.5 exactly representable; 6.25 rounds up to 6.3.
        assert_eq!(accuracy_pct(1, 8).unwrap(), 12.5);
        assert_eq!(accuracy_pct(1, 16).unwrap(), 6.3);
        assert_eq!(accuracy_pct(1, 3).unwrap(), 33.3);
        assert_eq!(accuracy_pct(2, 3).unwrap(), 66.7);
    }

    #[test]
    fn zero_total_is_an_error() {
        assert!(matches!(accuracy_pct(0, 0), Err(EvalError::ZeroTotal)));
    }

    #[test]
    fn report_arithmetic_is_consistent() {
        let report = EvalReport::from_counts(
            PipelineMode::BaselineText,
            &[
                (Category::Text, 26, 30),
                (Category::TableSimple, 30, 60),
                (Category::TableComplex, 52, 110),
            ],
            false,
        );
        assert_eq!(report.overall.correct, 108);
        assert_eq!(report.overall.total, 200);
        assert_eq!(report.overall.accuracy_pct, Some(54.0));
        assert_eq!(report.table_combined.correct, 82);
        assert_eq!(report.table_combined.total, 170);
        assert_eq!(report.table_combined.accuracy_pct, Some(48.2));
        assert_eq!(
            report.overall.correct,
            report.categories.text.correct
                + report.categories.table_simple.correct
                + report.categories.table_complex.correct
        );
        // Percentages recompute from the stored raw counts.
        assert_eq!(
            accuracy_pct(report.categories.text.correct, report.categories.text.total).unwrap(),
            report.categories.text.accuracy_pct.unwrap()
        );
    }

    fn make_cases(n_text: usize, n_simple: usize, n_complex: usize) -> Vec<QueryCase> {
        let mut cases = Vec::new();
        let mut specs: Vec<(Category, usize)> = vec![
            (Category::Text, n_text),
            (Category::TableSimple, n_simple),
            (Category::TableComplex, n_complex),
        ];
        for (category, count) in specs.drain(..) {
            for i in 0..count {
                cases.push(QueryCase {
                    id: format!("{}-{i}", category.as_str()),
                    question: format!("{} question {i}", category.as_str()),
                    expected: vec!["yes".to_string()],
                    category,
                });
            }
        }
        cases
    }

    /// Mock generator that answers "yes" for the first `correct` questions
    /// of each category and "no" afterwards, keyed off the question text
    /// that answer() embeds in the prompt.
    fn scripted_generator(correct_text: usize, correct_simple: usize, correct_complex: usize) -> Gateway {
        let rule = DefaultRule::Custom(Arc::new(move |req: &ChatRequest| {
            let user = &req.messages.last().unwrap().content;
            let question = user
                .rsplit_once("Question: ")
                .map(|(_, q)| q.trim_end_matches("\nAnswer:"))
                .unwrap_or("");
            let mut parts = question.rsplitn(2, ' ');
            let i: usize = parts.next().unwrap().parse().unwrap();
            let rest = parts.next().unwrap();
            let budget = if rest.starts_with("text") {
                correct_text
            } else if rest.starts_with("table_simple") {
                correct_simple
            } else {
                correct_complex
            };
            if i < budget { "yes".to_string() } else { "no".to_string() }
        }));
        Gateway::mock(
            GatewayConfig::default(),
            MockScript::new().with_default(rule),
        )
    }

    fn empty_index_fixture() -> (VectorIndex, Embedder) {
        let embedder = Embedder::HashedBow { dim: 64 };
        (VectorIndex::new(64, embedder.id()), embedder)
    }

    #[test]
    fn all_correct_run_scores_hundred() {
        let cases = make_cases(2, 1, 1);
        let (index, embedder) = empty_index_fixture();
        let gateway = scripted_generator(2, 1, 1);
        let report = run_eval(
            &cases,
            PipelineMode::BaselineText,
            &index,
            &embedder,
            &gateway,
            &GeneratorOptions::default(),
            5,
        )
        .unwrap();
        assert_eq!(report.overall.accuracy_pct, Some(100.0));
        assert_eq!(report.categories.text.accuracy_pct, Some(100.0));
        assert!(!report.incomplete);
    }

    #[test]
    fn two_hundred_case_run_matches_pinned_overall() {
        let cases = make_cases(30, 60, 110);
        let (index, embedder) = empty_index_fixture();
        // 26 text correct; 30 + 52 = 82 table correct.
        let gateway = scripted_generator(26, 30, 52);
        let report = run_eval(
            &cases,
            PipelineMode::BaselineText,
            &index,
            &embedder,
            &gateway,
            &GeneratorOptions::default(),
            5,
        )
        .unwrap();
        assert_eq!(report.categories.text.accuracy_pct, Some(86.7));
        assert_eq!(report.table_combined.accuracy_pct, Some(48.2));
        assert_eq!(report.overall.accuracy_pct, Some(54.0));
    }

    #[test]
    fn empty_case_list_is_zero_total() {
        let (index, embedder) = empty_index_fixture();
        let gateway = scripted_generator(0, 0, 0);
        assert!(matches!(
            run_eval(
                &[],
                PipelineMode::BaselineText,
                &index,
                &embedder,
                &gateway,
                &GeneratorOptions::default(),
                5
            ),
            Err(EvalError::ZeroTotal)
        ));
    }

    #[test]
    fn gateway_failure_aborts_with_partial_report() {
        let cases = make_cases(2, 0, 0);
        let (index, embedder) = empty_index_fixture();
        let generator = GeneratorOptions::default();
        // Script only the first case's exact request; the second hits an
        // unscripted mock and fails.
        let first = ChatRequest {
            model_id: generator.model_id.clone(),
            messages: vec![
                ChatMessage::system(DEFAULT_ANSWER_SYSTEM),
                ChatMessage::user(&format!("Question: {}\nAnswer:", cases[0].question)),
            ],
            temperature: 0.0,
            max_tokens: generator.max_tokens,
        };
        let gateway = Gateway::mock(
            GatewayConfig::default(),
            MockScript::new().stub(&first, "yes"),
        );
        match run_eval(
            &cases,
            PipelineMode::BaselineText,
            &index,
            &embedder,
            &gateway,
            &generator,
            5,
        ) {
            Err(EvalError::Aborted { report, .. }) => {
                assert!(report.incomplete);
                assert_eq!(report.categories.text.correct, 1);
                assert_eq!(report.categories.text.total, 1);
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn comparison_requires_two_modes() {
        let embedder = Embedder::HashedBow { dim: 64 };
        let gateway = scripted_generator(0, 0, 0);
        let settings = CompareSettings {
            embedder: &embedder,
            ingest: &IngestOptions::default(),
            generator_gateway: &gateway,
            generator: &GeneratorOptions::default(),
            enrichment: None,
            k: 5,
        };
        assert!(matches!(
            compare_modes(&make_cases(1, 0, 0), &[PipelineMode::BaselineText], &[], &settings),
            Err(EvalError::TooFewModes(1))
        ));
    }

    #[test]
    fn identical_judgments_give_identical_rows() {
        let cases = make_cases(3, 2, 2);
        let embedder = Embedder::HashedBow { dim: 64 };
        let gateway = scripted_generator(2, 1, 2);
        let settings = CompareSettings {
            embedder: &embedder,
            ingest: &IngestOptions::default(),
            generator_gateway: &gateway,
            generator: &GeneratorOptions::default(),
            enrichment: None,
            k: 5,
        };
        // Empty corpus: retrieval returns nothing in every mode, so the
        // scripted generator sees identical prompts per mode.
        let reports = compare_modes(
            &cases,
            &[PipelineMode::BaselineText, PipelineMode::TableConcat],
            &[],
            &settings,
        )
        .unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].overall, reports[1].overall);
        assert_eq!(reports[0].categories, reports[1].categories);

        let json_a = render_comparison_json(&reports);
        let json_b = render_comparison_json(&reports);
        assert_eq!(json_a, json_b, "serialization is byte-stable");
    }

    #[test]
    fn text_table_is_aligned_and_complete() {
        let reports = vec![
            EvalReport::from_counts(
                PipelineMode::BaselineText,
                &[
                    (Category::Text, 26, 30),
                    (Category::TableSimple, 30, 60),
                    (Category::TableComplex, 52, 110),
                ],
                false,
            ),
            EvalReport::from_counts(
                PipelineMode::TableLlm,
                &[
                    (Category::Text, 28, 30),
                    (Category::TableSimple, 50, 60),
                    (Category::TableComplex, 54, 110),
                ],
                false,
            ),
        ];
        let text = render_comparison_text(&reports);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("mode"));
        assert!(lines[1].contains("baseline_text"));
        assert!(lines[1].contains("54.0"));
        assert!(lines[2].contains("table_llm"));
        assert!(lines[2].contains("66.0"));
        assert_eq!(lines[1].len(), lines[2].len(), "rows align");
    }

    #[test]
    fn query_set_round_trips_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cases.jsonl");
        let cases = make_cases(2, 1, 0);
        std::fs::write(&path, render_query_set(&cases)).unwrap();
        let loaded = load_query_set(&path).unwrap();
        assert_eq!(loaded, cases);
    }

    #[test]
    fn malformed_query_line_names_its_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cases.jsonl");
        let good = serde_json::to_string(&make_cases(1, 0, 0)[0]).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        match load_query_set(&path) {
            Err(EvalError::QuerySet { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected query-set error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_and_empty_expectations_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cases.jsonl");
        let case = &make_cases(1, 0, 0)[0];
        let line = serde_json::to_string(case).unwrap();
        std::fs::write(&path, format!("{line}\n{line}\n")).unwrap();
        match load_query_set(&path) {
            Err(EvalError::QuerySet { line, detail, .. }) => {
                assert_eq!(line, 2);
                assert!(detail.contains("duplicate"));
            }
            other => panic!("expected duplicate-id error, got {other:?}"),
        }

        let mut empty_expected = case.clone();
        empty_expected.id = "other".into();
        empty_expected.expected.clear();
        std::fs::write(
            &path,
            serde_json::to_string(&empty_expected).unwrap() + "\n",
        )
        .unwrap();
        assert!(matches!(
            load_query_set(&path),
            Err(EvalError::QuerySet { line: 1, .. })
        ));
    }

    #[test]
    fn report_json_shape_is_stable() {
        let report = EvalReport::from_counts(
            PipelineMode::TableConcat,
            &[(Category::Text, 1, 2)],
            false,
        );
        let json = render_report_json(&report);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["mode"], "table_concat");
        assert_eq!(value["categories"]["text"]["correct"], 1);
        assert_eq!(value["categories"]["table_simple"]["total"], 0);
        assert!(value["categories"]["table_simple"]["accuracy_pct"].is_null());
        assert_eq!(value["overall"]["accuracy_pct"], 50.0);
        assert_eq!(value["incomplete"], false);
    }
}
