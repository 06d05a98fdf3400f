//! End-to-end command-line behavior, exercised through the built binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tablerag::fixtures::{corpus_doc_pdf, corpus_query_cases, PdfBuilder};

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut command = Command::new(env!("CARGO_BIN_EXE_tablerag"));
    for arg in args {
        command.arg(arg.as_ref());
    }
    command.output().expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is utf-8")
}

/// One bundled-corpus document written into `dir`.
fn sample_pdf(dir: &Path) -> PathBuf {
    let path = dir.join("sample.pdf");
    corpus_doc_pdf(0).write(&path).unwrap();
    path
}

#[test]
fn ingest_reports_stats_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let index_a = dir.path().join("a.jsonl");
    let index_b = dir.path().join("b.jsonl");

    for index in [&index_a, &index_b] {
        let out = run(&[
            &"ingest",
            &pdf,
            &"--mode",
            &"table_concat",
            &"--index",
            index,
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
        let stdout = stdout_of(&out);
        assert!(stdout.contains("pages=7"), "unexpected stats: {stdout}");
        assert!(stdout.contains("tables=1"), "unexpected stats: {stdout}");
        assert!(stdout.contains("enriched_rows=3"), "unexpected stats: {stdout}");
        assert!(stderr_of(&out).contains("now holds"));
    }
    assert_eq!(
        fs::read(&index_a).unwrap(),
        fs::read(&index_b).unwrap(),
        "repeating an ingest must write byte-identical index files"
    );
}

#[test]
fn ingest_missing_file_keeps_going_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let good = sample_pdf(dir.path());
    let missing = dir.path().join("absent.pdf");
    let index = dir.path().join("index.jsonl");

    let out = run(&[&"ingest", &missing, &good, &"--index", &index]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("absent.pdf"), "stderr must name the bad file");
    // The good file was still ingested and the index persisted.
    assert!(stdout_of(&out).contains("pages=7"));
    assert!(index.exists());
}

#[test]
fn tables_json_lists_grids() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let out = run(&[&"tables", &pdf, &"--format", &"json"]);
    assert!(out.status.success());
    let grids: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let grids = grids.as_array().unwrap();
    assert_eq!(grids.len(), 1);
    assert_eq!(grids[0]["n_rows"], 4);
    assert_eq!(grids[0]["n_cols"], 3);
    assert_eq!(grids[0]["cells"][1][0], "Gold");
    assert!(stderr_of(&out).contains("1 tables"));
}

#[test]
fn tables_csv_emits_one_line_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let out = run(&[&"tables", &pdf, &"--format", &"csv"]);
    assert!(out.status.success());
    let stdout = stdout_of(&out);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "doc_id,page_index,table_index,row,col,text");
    assert_eq!(lines.len(), 1 + 4 * 3, "header plus one line per cell");
}

#[test]
fn tables_rejects_text_format() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let out = run(&[&"tables", &pdf, &"--format", &"text"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("json or csv"));
}

#[test]
fn tables_page_out_of_range_names_valid_pages() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let out = run(&[&"tables", &pdf, &"--page", &"99", &"--format", &"json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = stderr_of(&out);
    assert!(stderr.contains("page 99 out of range"), "stderr: {stderr}");
    assert!(stderr.contains("0..=6"), "stderr must name the valid range: {stderr}");
}

#[test]
fn enrich_prints_one_json_row_per_data_row() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let out = run(&[&"enrich", &pdf]);
    assert!(out.status.success());
    let stdout = stdout_of(&out);
    let rows: Vec<serde_json::Value> = stdout
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0]["style"], "concat");
    assert_eq!(
        rows[0]["text"],
        "Plan: Gold; Annual Premium: 980; Deductible: 250"
    );
    assert!(stderr_of(&out).contains("1 tables, 3 rows"));
}

#[test]
fn query_flag_overrides_configured_k() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let index = dir.path().join("index.jsonl");
    let config = dir.path().join("run.toml");
    fs::write(&config, "[retrieval]\nk = 3\n").unwrap();

    let out = run(&[&"ingest", &pdf, &"--mode", &"table_concat", &"--index", &index]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));

    // Configured k = 3 retrieves three contexts...
    let out = run(&[
        &"--config",
        &config,
        &"query",
        &"What is the Annual Premium for the Gold plan?",
        &"--index",
        &index,
    ]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("[3] "));

    // ...and the flag narrows it to one.
    let out = run(&[
        &"--config",
        &config,
        &"query",
        &"What is the Annual Premium for the Gold plan?",
        &"--index",
        &index,
        &"--k",
        &"1",
    ]);
    assert!(out.status.success());
    let stdout = stdout_of(&out);
    assert!(stdout.contains("[1] "), "stdout: {stdout}");
    assert!(!stdout.contains("[2] "), "flag must override config: {stdout}");
}

#[test]
fn query_json_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let index = dir.path().join("index.jsonl");
    let out = run(&[&"ingest", &pdf, &"--index", &index]);
    assert!(out.status.success());

    let out = run(&[
        &"query",
        &"Who audits Atlas Insurance?",
        &"--index",
        &index,
        &"--format",
        &"json",
    ]);
    assert!(out.status.success());
    let answer: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(answer["text"].is_string());
    assert!(answer["supporting"].as_array().is_some());
    assert_eq!(answer["mode"], "baseline_text");
}

#[test]
fn query_without_index_explains_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("never-created.jsonl");
    let out = run(&[&"query", &"anything", &"--index", &index]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("run ingest first"));
}

#[test]
fn query_on_empty_index_warns_but_answers() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.pdf");
    let mut builder = PdfBuilder::new();
    builder.page();
    builder.write(&blank).unwrap();
    let index = dir.path().join("index.jsonl");

    let out = run(&[&"ingest", &blank, &"--index", &index]);
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("text_chunks=0"));

    let out = run(&[&"query", &"anything at all", &"--index", &index]);
    assert!(out.status.success());
    assert!(stderr_of(&out).contains("index is empty"));
    assert!(!stdout_of(&out).is_empty(), "an answer is still produced");
}

#[test]
fn eval_names_the_malformed_query_set_line() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let index = dir.path().join("index.jsonl");
    let out = run(&[&"ingest", &pdf, &"--index", &index]);
    assert!(out.status.success());

    let query_set = dir.path().join("cases.jsonl");
    fs::write(
        &query_set,
        "{\"id\":\"ok\",\"question\":\"q\",\"expected\":[\"a\"],\"category\":\"text\"}\n\
         {\"id\":\"bad\",\"question\":\"q\"}\n",
    )
    .unwrap();
    let out = run(&[&"eval", &query_set, &"--index", &index]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = stderr_of(&out);
    assert!(stderr.contains("line 2"), "stderr must name the line: {stderr}");
}

#[test]
fn eval_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let pdf = sample_pdf(dir.path());
    let index = dir.path().join("index.jsonl");
    let out = run(&[&"ingest", &pdf, &"--mode", &"table_concat", &"--index", &index]);
    assert!(out.status.success());

    let cases: Vec<_> = corpus_query_cases().into_iter().take(3).collect();
    let query_set = dir.path().join("cases.jsonl");
    fs::write(&query_set, tablerag::eval::render_query_set(&cases)).unwrap();

    let report_path = dir.path().join("report.json");
    let out = run(&[
        &"eval",
        &query_set,
        &"--mode",
        &"table_concat",
        &"--index",
        &index,
        &"--out",
        &report_path,
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["mode"], "table_concat");
    assert_eq!(report["overall"]["total"], 3);
    assert_eq!(report["incomplete"], false);
    // The file holds exactly what was printed.
    assert_eq!(
        stdout_of(&out).trim_end(),
        fs::read_to_string(&report_path).unwrap().trim_end()
    );
}

#[test]
fn compare_needs_at_least_two_modes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    fs::create_dir(&corpus_dir).unwrap();
    sample_pdf(&corpus_dir);
    let cases: Vec<_> = corpus_query_cases().into_iter().take(2).collect();
    let query_set = dir.path().join("cases.jsonl");
    fs::write(&query_set, tablerag::eval::render_query_set(&cases)).unwrap();

    let out = run(&[
        &"compare",
        &query_set,
        &"--corpus",
        &corpus_dir,
        &"--modes",
        &"baseline_text",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("at least two modes"));
}

#[test]
fn compare_text_table_lists_each_mode() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    fs::create_dir(&corpus_dir).unwrap();
    sample_pdf(&corpus_dir);
    let cases: Vec<_> = corpus_query_cases().into_iter().take(3).collect();
    let query_set = dir.path().join("cases.jsonl");
    fs::write(&query_set, tablerag::eval::render_query_set(&cases)).unwrap();

    let out = run(&[
        &"compare",
        &query_set,
        &"--corpus",
        &corpus_dir,
        &"--modes",
        &"baseline_text,table_concat",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let stdout = stdout_of(&out);
    assert!(stdout.contains("mode"), "header row expected: {stdout}");
    assert!(stdout.contains("baseline_text"));
    assert!(stdout.contains("table_concat"));
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "surprise = true\n").unwrap();
    let out = run(&[&"--config", &config, &"query", &"q"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("surprise"), "stderr: {}", stderr_of(&out));
}
