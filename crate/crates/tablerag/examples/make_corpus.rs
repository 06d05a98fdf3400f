//! Write the bundled evaluation corpus (PDFs plus query set) to a
//! directory, for driving the CLI by hand:
//!
//!   cargo run -p tablerag --example make_corpus -- /tmp/corpus

use tablerag::eval::render_query_set;
use tablerag::fixtures::build_synthetic_corpus;

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .expect("usage: make_corpus <output-dir>");
    let dir = std::path::PathBuf::from(dir);
    std::fs::create_dir_all(&dir)?;
    let corpus = build_synthetic_corpus(&dir)?;
    let query_path = dir.join("queries.jsonl");
    std::fs::write(&query_path, render_query_set(&corpus.cases))?;
    for path in &corpus.pdf_paths {
        println!("{}", path.display());
    }
    println!("{}", query_path.display());
    Ok(())
}
