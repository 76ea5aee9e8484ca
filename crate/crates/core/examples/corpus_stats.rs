//! Per-domain character, word and sentence totals for the bundled corpus.

use topiqa::corpus::{compute_stats, load_corpus, FormatConfig};

fn main() -> topiqa::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/corpus.jsonl");
    let corpus = load_corpus(path, &FormatConfig::default())?;
    println!("{} pairs in {} domains", corpus.len(), corpus.domains().len());
    for s in compute_stats(&corpus)? {
        println!(
            "{:<10} pairs={:<3} source: {} sentences, {:.1} words/sentence  target: {} sentences, {:.1} words/sentence",
            s.domain,
            s.pair_count,
            s.source.sentences,
            s.source_avg.words_per_sentence.unwrap_or(0.0),
            s.target.sentences,
            s.target_avg.words_per_sentence.unwrap_or(0.0),
        );
    }
    Ok(())
}
