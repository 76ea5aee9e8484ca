//! Sentence BLEU with the per-order breakdown and degenerate-case flags.

use topiqa::metrics::{bleu, BleuConfig};

fn show(hyp: &str, refs: &[&str]) -> topiqa::Result<()> {
    let h: Vec<&str> = hyp.split_whitespace().collect();
    let r: Vec<Vec<&str>> = refs.iter().map(|r| r.split_whitespace().collect()).collect();
    let b = bleu(&h, &r, &BleuConfig::default())?;
    println!("{hyp:?}");
    println!(
        "  score={:.4} bp={:.4} precisions={:.3?} zero_precision={} short={}",
        b.score, b.brevity_penalty, b.precisions, b.zero_precision, b.short_hypothesis
    );
    Ok(())
}

fn main() -> topiqa::Result<()> {
    let refs = ["the cat is on the mat", "there is a cat on the mat"];
    show("the cat is on the mat", &refs)?;
    show("the the the the", &refs)?;
    show("a cat sat on the mat today", &refs)?;
    show("cat mat", &refs)?;
    Ok(())
}
