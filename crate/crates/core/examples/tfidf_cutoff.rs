//! Frequency-ranked vocabulary, the max-features cutoff and the TF-IDF matrix.

use topiqa::corpus::{load_corpus, FormatConfig, Language};
use topiqa::tokenize::{tokenize_nouns, FallbackAnalyzer};
use topiqa::vectorize::{build_vocab, cutoff_rank, idf, tfidf_matrix};

fn main() -> topiqa::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let corpus = load_corpus(format!("{dir}/corpus.jsonl"), &FormatConfig::default())?;
    let en = FallbackAnalyzer::from_file("en-lexicon", Language::Target, format!("{dir}/lexicon_en.txt"))?;
    let docs: Vec<_> = corpus
        .domain_pairs("education")
        .map(|p| tokenize_nouns(&p.target_doc, &en))
        .collect::<topiqa::Result<_>>()?;

    let full = build_vocab(&docs, None)?;
    let keep = cutoff_rank(&full);
    println!("{} distinct nouns, max tf {}, cutoff keeps {keep}", full.len(), full.tf[0]);
    for (i, t) in full.tokens.iter().take(5).enumerate() {
        println!("  {t:<12} tf={:<4} df={:<3} idf={:.4}", full.tf[i], full.df[i], idf(&full, t)?);
    }

    let vocab = full.truncated(keep);
    let m = tfidf_matrix(&docs, &vocab);
    println!("matrix {} x {}, {} non-zero cells", m.n_rows(), vocab.len(), m.nnz());
    Ok(())
}
