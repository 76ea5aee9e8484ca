use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use topiqa::pipeline::{cmd_bleu, cmd_correlate, cmd_evaluate, cmd_stats, exit_code, Overrides, RunConfig, RunOutcome};

#[derive(Parser)]
#[command(name = "topiqa", version, about = "Topic-based, reference-free translation evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus and noun statistics per domain
    Stats(Common),
    /// Topic models, alignment and scores per domain
    Evaluate(Common),
    /// Pearson matrix over the summary table
    Correlate(Common),
    /// Sentence BLEU over a JSONL file of {"hyp": [..], "refs": [[..]]}
    Bleu {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_order: usize,
    },
}

fn with_config(c: Common, run: fn(&RunConfig) -> topiqa::Result<RunOutcome>) -> topiqa::Result<RunOutcome> {
    let overrides = Overrides {
        seed: c.seed,
        out: c.out,
        workers: c.workers,
    };
    RunConfig::load(&c.config, &overrides).and_then(|cfg| run(&cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Stats(c) => with_config(c, cmd_stats),
        Command::Evaluate(c) => with_config(c, cmd_evaluate),
        Command::Correlate(c) => with_config(c, cmd_correlate),
        Command::Bleu { input, max_order } => std::fs::read_to_string(&input)
            .map_err(|e| topiqa::Error::Config(format!("cannot read {}: {e}", input.display())))
            .and_then(|raw| cmd_bleu(&raw, max_order))
            .map(|(out, outcome)| {
                print!("{out}");
                outcome
            }),
    };
    match &result {
        Ok(outcome) => {
            for (what, why) in &outcome.failures {
                eprintln!("failed: {what}: {why}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
