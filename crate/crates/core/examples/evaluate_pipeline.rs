//! Runs the full `evaluate` and `correlate` commands on the bundled fixture
//! and prints the summary table.

use topiqa::pipeline::{cmd_correlate, cmd_evaluate, Overrides, RunConfig};

fn main() -> topiqa::Result<()> {
    let out = std::env::temp_dir().join("topiqa-evaluate-example");
    let overrides = Overrides {
        out: Some(out.clone()),
        ..Default::default()
    };
    let cfg = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/evaluate.toml"), &overrides)?;
    let outcome = cmd_evaluate(&cfg)?;
    println!("wrote {} files, {} failed domains", outcome.written.len(), outcome.failures.len());
    print!("{}", std::fs::read_to_string(out.join("summary.csv")).map_err(|e| topiqa::Error::Config(e.to_string()))?);

    let corr = cmd_correlate(&cfg)?;
    for (what, why) in &corr.failures {
        println!("correlate: {what}: {why}");
    }
    if corr.failures.is_empty() {
        print!("{}", std::fs::read_to_string(out.join("correlation.csv")).map_err(|e| topiqa::Error::Config(e.to_string()))?);
    }
    Ok(())
}
