//! Fans shared by the benchmarks.

use std::path::PathBuf;
use std::sync::Arc;

use toric_ic::{Fan, Sites};

pub fn corpus_fan(name: &str) -> Arc<Sites> {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", &format!("{name}.json")].iter().collect();
    let text = std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    Sites::new(Fan::from_json(&text).expect("corpus fans are valid"))
}
