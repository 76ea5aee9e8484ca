//! Regenerates the bundled bilingual fixture under `fixtures/`.
//!
//! Three domains, each with three subtopics of unequal size, disjoint
//! domain vocabularies and a small shared pool. Four proper nouns are
//! planted whose dictionary spelling differs from the one used in the
//! target text. A shuffled counterpart rotates target texts across domains.
//!
//! Run with `cargo run --example synthetic_corpus [-- <dir>]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topiqa::corpus::{Document, Language};
use topiqa::tokenize::{FallbackAnalyzer, NounAnalyzer};

/// (korean, english) pairs
type Lexicon = &'static [(&'static str, &'static str)];

struct Domain {
    name: &'static str,
    general: Lexicon,
    subtopics: [Lexicon; 3],
    bleu_mean: f64,
    kiwi_mean: f64,
}

const SHARED: Lexicon = &[
    ("사회", "society"),
    ("시간", "time"),
    ("결과", "result"),
    ("계획", "plan"),
    ("문제", "issue"),
    ("지역", "region"),
];

const DOMAINS: [Domain; 3] = [
    Domain {
        name: "education",
        general: &[
            ("교육", "education"),
            ("학생", "student"),
            ("교사", "teacher"),
            ("학교", "school"),
            ("수업", "class"),
            ("과정", "curriculum"),
            ("학년", "grade"),
            ("학부모", "parent"),
        ],
        subtopics: [
            &[
                ("대학", "university"),
                ("입시", "admission"),
                ("시험", "exam"),
                ("점수", "score"),
                ("전형", "screening"),
                ("지원자", "applicant"),
                ("합격", "acceptance"),
                ("논술", "essay"),
                ("면접", "interview"),
                ("서울대", "SNU"),
                ("등록금", "tuition"),
                ("장학금", "scholarship"),
            ],
            &[
                ("강의", "lecture"),
                ("화면", "screen"),
                ("인터넷", "internet"),
                ("기기", "device"),
                ("플랫폼", "platform"),
                ("코로나19", "COVID19"),
                ("방역", "quarantine"),
                ("출석", "attendance"),
                ("과제", "assignment"),
                ("영상", "video"),
                ("접속", "access"),
                ("교재", "textbook"),
            ],
            &[
                ("도서관", "library"),
                ("독서", "reading"),
                ("동아리", "club"),
                ("방과후", "afterschool"),
                ("토론", "debate"),
                ("작문", "writing"),
                ("예술", "art"),
                ("음악", "music"),
                ("체험", "experience"),
                ("봉사", "volunteering"),
                ("상담", "counseling"),
                ("진로", "career"),
            ],
        ],
        bleu_mean: 0.62,
        kiwi_mean: 0.81,
    },
    Domain {
        name: "sports",
        general: &[
            ("경기", "match"),
            ("선수", "athlete"),
            ("감독", "coach"),
            ("구단", "franchise"),
            ("관중", "spectator"),
            ("시즌", "season"),
            ("훈련", "training"),
            ("우승", "championship"),
        ],
        subtopics: [
            &[
                ("피겨", "skating"),
                ("올림픽", "olympics"),
                ("금메달", "gold"),
                ("연기", "performance"),
                ("점프", "jump"),
                ("심판", "judge"),
                ("빙상", "rink"),
                ("안무", "choreography"),
                ("김연아", "Kim Yuna"),
                ("국가대표", "national"),
                ("예선", "qualifier"),
                ("결선", "final"),
            ],
            &[
                ("야구", "baseball"),
                ("투수", "pitcher"),
                ("타자", "batter"),
                ("홈런", "homerun"),
                ("구장", "ballpark"),
                ("타율", "average"),
                ("이닝", "inning"),
                ("포수", "catcher"),
                ("안타", "hit"),
                ("불펜", "bullpen"),
                ("삼진", "strikeout"),
                ("외야", "outfield"),
            ],
            &[
                ("마라톤", "marathon"),
                ("코스", "course"),
                ("완주", "finish"),
                ("페이스", "pace"),
                ("주자", "runner"),
                ("구간", "section"),
                ("급수", "hydration"),
                ("반환점", "turnaround"),
                ("기온", "temperature"),
                ("출발선", "startline"),
                ("결승선", "finishline"),
                ("러닝화", "shoes"),
            ],
        ],
        bleu_mean: 0.48,
        kiwi_mean: 0.77,
    },
    Domain {
        name: "politics",
        general: &[
            ("정부", "government"),
            ("국회", "assembly"),
            ("정책", "policy"),
            ("의원", "lawmaker"),
            ("대통령", "president"),
            ("여당", "majority"),
            ("야당", "opposition"),
            ("선거", "election"),
        ],
        subtopics: [
            &[
                ("청와대", "Blue House"),
                ("비서실", "secretariat"),
                ("수석", "aide"),
                ("회견", "briefing"),
                ("대변인", "spokesperson"),
                ("집무실", "office"),
                ("국정", "administration"),
                ("지지율", "approval"),
                ("개편", "reshuffle"),
                ("참모", "staff"),
                ("순방", "tour"),
                ("정상회담", "summit"),
            ],
            &[
                ("예산", "budget"),
                ("세금", "tax"),
                ("재정", "finance"),
                ("지출", "spending"),
                ("적자", "deficit"),
                ("부채", "debt"),
                ("세수", "revenue"),
                ("추경", "supplement"),
                ("복지", "welfare"),
                ("연금", "pension"),
                ("국채", "bond"),
                ("감세", "taxcut"),
            ],
            &[
                ("후보", "candidate"),
                ("공약", "pledge"),
                ("유권자", "voter"),
                ("투표", "vote"),
                ("여론", "opinion"),
                ("개표", "count"),
                ("정당", "party"),
                ("연대", "coalition"),
                ("지역구", "district"),
                ("경선", "primary"),
                ("토론회", "forum"),
                ("득표", "ballots"),
            ],
        ],
        bleu_mean: 0.55,
        kiwi_mean: 0.79,
    },
];

/// Dictionary spelling of planted proper nouns, where it differs from the
/// target text.
const PROPER_NOUNS: &[(&str, &str)] = &[
    ("김연아", "Kim Yeona"),
    ("서울대", "Seoul National University"),
    ("코로나19", "COVID-19"),
    ("청와대", "Cheong Wa Dae"),
];

const SUBTOPIC_SIZES: [usize; 3] = [30, 18, 12];

fn has_batchim(word: &str) -> bool {
    word.chars()
        .last()
        .map(|c| (0xAC00..=0xD7A3).contains(&(c as u32)) && !(c as u32 - 0xAC00).is_multiple_of(28))
        .unwrap_or(false)
}

fn topic_marker(w: &str) -> &'static str {
    if has_batchim(w) { "은" } else { "는" }
}

fn subject_marker(w: &str) -> &'static str {
    if has_batchim(w) { "이" } else { "가" }
}

fn object_marker(w: &str) -> &'static str {
    if has_batchim(w) { "을" } else { "를" }
}

fn with_marker(w: &str) -> &'static str {
    if has_batchim(w) { "과" } else { "와" }
}

/// One parallel sentence from 2 or 3 noun pairs. English templates never put
/// a noun first, so capitalization only marks names.
fn sentence(rng: &mut ChaCha8Rng, n: &[(&str, &str)]) -> (String, String) {
    let (a, b) = (n[0], n[1]);
    if n.len() == 3 {
        let c = n[2];
        return (
            format!("{}{} {}{} {}{} 다루었다.", a.0, topic_marker(a.0), b.0, with_marker(b.0), c.0, object_marker(c.0)),
            format!("Overall {} dealt with {} and {}.", a.1, b.1, c.1),
        );
    }
    match rng.random_range(0..3) {
        0 => (
            format!("{}{} {}{} 중심으로 진행되었다.", a.0, topic_marker(a.0), b.0, object_marker(b.0)),
            format!("Last week {} moved forward around {}.", a.1, b.1),
        ),
        1 => (
            format!("{}{} {}{} 함께 논의되었다.", a.0, with_marker(a.0), b.0, subject_marker(b.0)),
            format!("Yesterday {} and {} were discussed together.", a.1, b.1),
        ),
        _ => (
            format!("이번 {} 소식에서 {}{} 주목받았다.", a.0, b.0, subject_marker(b.0)),
            format!("Recently {} drew attention in news about {}.", b.1, a.1),
        ),
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, domain: &'a Domain, sub: usize) -> (&'a str, &'a str) {
    let roll: f64 = rng.random();
    let pool = if roll < 0.75 {
        domain.subtopics[sub]
    } else if roll < 0.93 {
        domain.general
    } else {
        SHARED
    };
    // planted names are drawn more often so they reach the topic lists
    let weights: Vec<u32> = pool
        .iter()
        .map(|(ko, _)| if PROPER_NOUNS.iter().any(|(k, _)| k == ko) { 3 } else { 1 })
        .collect();
    let total: u32 = weights.iter().sum();
    let mut r = rng.random_range(0..total);
    for (entry, w) in pool.iter().zip(&weights) {
        if r < *w {
            return *entry;
        }
        r -= w;
    }
    unreachable!()
}

struct Pair {
    id: String,
    domain: &'static str,
    source: String,
    target: String,
    nouns: (Vec<Vec<String>>, Vec<Vec<String>>),
    scores: BTreeMap<&'static str, f64>,
}

fn generate(seed: u64) -> Vec<Pair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::new();
    for domain in &DOMAINS {
        let mut n = 0;
        for (sub, &size) in SUBTOPIC_SIZES.iter().enumerate() {
            for _ in 0..size {
                let mut ko = Vec::new();
                let mut en = Vec::new();
                let mut ko_nouns = Vec::new();
                let mut en_nouns = Vec::new();
                for _ in 0..rng.random_range(8..=12) {
                    let k = if rng.random_bool(0.3) { 3 } else { 2 };
                    let mut chosen: Vec<(&str, &str)> = Vec::new();
                    while chosen.len() < k {
                        let p = pick(&mut rng, domain, sub);
                        if !chosen.contains(&p) {
                            chosen.push(p);
                        }
                    }
                    let (s, t) = sentence(&mut rng, &chosen);
                    ko.push(s);
                    en.push(t);
                    ko_nouns.push(chosen.iter().map(|c| c.0.to_string()).collect::<Vec<_>>());
                    let mut e: Vec<String> = chosen.iter().map(|c| c.1.replace(' ', "_")).collect();
                    if chosen.len() == 2 && en.last().unwrap().starts_with("Recently") {
                        e.swap(0, 1);
                    }
                    en_nouns.push(e);
                }
                let noise = |rng: &mut ChaCha8Rng| rng.random_range(-0.08..0.08);
                let scores = BTreeMap::from([
                    ("bleu", ((domain.bleu_mean + noise(&mut rng)) * 1e4).round() / 1e4),
                    ("cometkiwi", ((domain.kiwi_mean + noise(&mut rng) / 2.0) * 1e4).round() / 1e4),
                ]);
                pairs.push(Pair {
                    id: format!("{}-{n:03}", domain.name),
                    domain: domain.name,
                    source: ko.join(" "),
                    target: en.join(" "),
                    nouns: (ko_nouns, en_nouns),
                    scores,
                });
                n += 1;
            }
        }
    }
    pairs
}

fn jsonl(pairs: &[Pair], targets: &[&str]) -> String {
    let mut out = String::new();
    for (p, t) in pairs.iter().zip(targets) {
        let rec = serde_json::json!({
            "id": p.id,
            "domain": p.domain,
            "source": p.source,
            "target": t,
            "scores": p.scores,
        });
        writeln!(out, "{rec}").unwrap();
    }
    out
}

fn all_nouns() -> Vec<(&'static str, &'static str)> {
    let mut v: Vec<(&str, &str)> = SHARED.to_vec();
    for d in &DOMAINS {
        v.extend(d.general);
        for s in d.subtopics {
            v.extend(s);
        }
    }
    v
}

/// The fallback analyzers must recover exactly the planted nouns.
fn verify(pairs: &[Pair], ko: &FallbackAnalyzer, en: &FallbackAnalyzer) {
    for p in pairs {
        let src = Document::new(&p.id, p.domain, Language::Source, &p.source).unwrap();
        let tgt = Document::new(&p.id, p.domain, Language::Target, &p.target).unwrap();
        assert_eq!(ko.sentence_nouns(&src).unwrap(), p.nouns.0, "source nouns of {}", p.id);
        assert_eq!(en.sentence_nouns(&tgt).unwrap(), p.nouns.1, "target nouns of {}", p.id);
    }
}

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    fs::create_dir_all(&dir).unwrap();

    let nouns = all_nouns();
    let mut seen = std::collections::HashSet::new();
    for (ko, en) in &nouns {
        assert!(seen.insert(*ko) && seen.insert(*en), "duplicate noun {ko}/{en}");
    }
    let ko_lexicon: Vec<&str> = nouns.iter().map(|n| n.0).collect();
    // names are found by capitalization, not by the lexicon
    let en_lexicon: Vec<&str> = nouns.iter().map(|n| n.1).filter(|e| e.chars().all(|c| c.is_lowercase())).collect();

    let pairs = generate(20_240_601);
    verify(
        &pairs,
        &FallbackAnalyzer::new("ko", Language::Source, ko_lexicon.iter().copied()),
        &FallbackAnalyzer::new("en", Language::Target, en_lexicon.iter().copied()),
    );

    let faithful: Vec<&str> = pairs.iter().map(|p| p.target.as_str()).collect();
    // each domain's sources get the next domain's targets, position by position
    let per = SUBTOPIC_SIZES.iter().sum::<usize>();
    let shuffled: Vec<&str> = (0..pairs.len()).map(|i| faithful[(i + per) % pairs.len()]).collect();

    let mut dict = String::from("# source\tcandidates\tflags\n");
    for (ko, en) in &nouns {
        match PROPER_NOUNS.iter().find(|(k, _)| k == ko) {
            Some((_, spelled)) => writeln!(dict, "{ko}\t{spelled}\tPN").unwrap(),
            None => writeln!(dict, "{ko}\t{en}").unwrap(),
        }
    }

    let files = [
        ("corpus.jsonl", jsonl(&pairs, &faithful)),
        ("corpus_shuffled.jsonl", jsonl(&pairs, &shuffled)),
        ("lexicon_ko.txt", ko_lexicon.join("\n") + "\n"),
        ("lexicon_en.txt", en_lexicon.join("\n") + "\n"),
        ("dictionary.tsv", dict),
        (
            "aliases.tsv",
            "Seoul National University\tSNU\nCheong Wa Dae\tBlue House\nKorea University\tKU\n".to_string(),
        ),
        ("romanization.tsv", "eo\tu\noo\tu\nee\ti\n".to_string()),
    ];
    for (name, body) in files {
        fs::write(dir.join(name), body).unwrap();
    }
    for (name, corpus) in [("evaluate.toml", "corpus.jsonl"), ("evaluate_shuffled.toml", "corpus_shuffled.jsonl")] {
        let toml = format!(
            r#"corpus = "{corpus}"
seed = 17
out = "out"

[analyzers.source]
kind = "fallback"
lexicon = "lexicon_ko.txt"

[analyzers.target]
kind = "fallback"
lexicon = "lexicon_en.txt"

[dictionary]
path = "dictionary.tsv"
aliases = "aliases.tsv"
romanization = "romanization.tsv"

[lda]
k_min = 2
k_max = 10
iterations = 200

[embed]
min_cluster_size = 8
"#
        );
        fs::write(dir.join(name), toml).unwrap();
    }
    println!("wrote {} pairs to {}", pairs.len(), dir.display());
}
