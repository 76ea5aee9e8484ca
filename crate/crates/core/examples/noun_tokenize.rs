//! Lexicon-driven noun extraction on one Korean and one English document.

use topiqa::corpus::{load_corpus, FormatConfig, Language};
use topiqa::tokenize::{token_stats, tokenize_nouns, FallbackAnalyzer};

fn main() -> topiqa::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let corpus = load_corpus(format!("{dir}/corpus.jsonl"), &FormatConfig::default())?;
    let ko = FallbackAnalyzer::from_file("ko-lexicon", Language::Source, format!("{dir}/lexicon_ko.txt"))?;
    let en = FallbackAnalyzer::from_file("en-lexicon", Language::Target, format!("{dir}/lexicon_en.txt"))?;

    let pair = &corpus.pairs[0];
    let src = tokenize_nouns(&pair.source_doc, &ko)?;
    let tgt = tokenize_nouns(&pair.target_doc, &en)?;
    println!("{}", pair.source_doc.text.split(". ").next().unwrap_or(""));
    println!("  nouns: {:?}", &src.tokens[..src.sentence_counts[0]]);
    println!("{}", pair.target_doc.text.split(". ").next().unwrap_or(""));
    println!("  nouns: {:?}", &tgt.tokens[..tgt.sentence_counts[0]]);

    let docs: Vec<_> = corpus
        .domain_pairs("sports")
        .map(|p| tokenize_nouns(&p.target_doc, &en))
        .collect::<topiqa::Result<_>>()?;
    let stats = token_stats(&docs)?;
    println!(
        "sports/en: {} nouns, {} unique, {:.2} per sentence",
        stats.total_tokens,
        stats.unique_tokens,
        stats.avg_per_sentence.unwrap_or(0.0)
    );
    Ok(())
}
