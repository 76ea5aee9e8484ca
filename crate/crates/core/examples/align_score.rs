//! Cross-lingual alignment of two hand-written topics and the cosine score,
//! including proper-noun variant matches.

use topiqa::align::{score_pair, BilingualDictionary, VariantTables};
use topiqa::corpus::Language;
use topiqa::topic::{ModelKind, TopicRepresentation, WeightSemantics};

fn topic(language: Language, tokens: &[&str]) -> topiqa::Result<TopicRepresentation> {
    let scored: Vec<(&str, f64)> = tokens.iter().enumerate().map(|(i, t)| (*t, 1.0 / (i + 1) as f64)).collect();
    TopicRepresentation::from_scores(ModelKind::Lda, language, "sports", &scored, WeightSemantics::WordProbability)
}

fn main() -> topiqa::Result<()> {
    let mut dict = BilingualDictionary::parse(
        "김연아\tKim Yeona\tPN\n피겨\tskating\n올림픽\tolympics\n금메달\tgold\n경기\tmatch|game\n",
    )?;
    let mut variants = VariantTables::default();
    variants.add_romanization("eo\tu\n")?;
    dict = dict.with_variants(variants);

    let ko: Vec<String> = ["김연아", "피겨", "올림픽", "금메달", "경기"]
        .into_iter()
        .map(String::from)
        .chain((0..15).map(|i| format!("기타{i}")))
        .collect();
    let en: Vec<String> = ["skating", "Kim Yuna", "gold", "game", "olympics"]
        .into_iter()
        .map(String::from)
        .chain((0..15).map(|i| format!("other{i}")))
        .collect();
    let source = topic(Language::Source, &ko.iter().map(String::as_str).collect::<Vec<_>>())?;
    let target = topic(Language::Target, &en.iter().map(String::as_str).collect::<Vec<_>>())?;

    let score = score_pair("sports", ModelKind::Lda, &source, &target, &dict)?;
    for e in &score.evidence {
        println!(
            "  #{:<2} {:<4} -> #{:<2} {:<9} {:?} {:?}",
            e.source_rank, e.source_token, e.target_rank, e.target_token, e.match_kind, e.rule
        );
    }
    println!("similarity {:.4} (recomputed {:.4})", score.similarity, score.recompute_from_evidence());
    Ok(())
}
