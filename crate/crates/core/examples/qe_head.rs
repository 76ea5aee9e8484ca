//! Trains a tiny quality-estimation head on synthetic embeddings with the
//! joint regression and ranking objective, then saves and reloads it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topiqa::metrics::{qe_features, qe_losses, qe_score, QeHead, RankTriple, RegressionSample};

fn main() -> topiqa::Result<()> {
    let dim = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // a hypothesis drifts from its source in proportion to (1 - quality)
    let drift = |src: &[f64], quality: f64, rng: &mut ChaCha8Rng| -> Vec<f64> {
        src.iter().map(|s| s + (1.0 - quality) * rng.random_range(-1.5..1.5)).collect()
    };
    let mut data = Vec::new();
    for _ in 0..30 {
        let src: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (hi, lo) = (rng.random_range(0.5..1.0), rng.random_range(0.0..0.5));
        let better = drift(&src, hi, &mut rng);
        let worse = drift(&src, lo, &mut rng);
        data.push((src, better, hi, worse, lo));
    }
    let regression: Vec<RegressionSample> = data
        .iter()
        .flat_map(|(s, b, hi, w, lo)| {
            [
                RegressionSample { src: s, hyp: b, target: *hi },
                RegressionSample { src: s, hyp: w, target: *lo },
            ]
        })
        .collect();
    let ranking: Vec<RankTriple> = data
        .iter()
        .map(|(s, b, _, w, _)| RankTriple { src: s, better: b, worse: w })
        .collect();

    let mut head = QeHead::new(dim, 16, 0.1, 11)?;
    for epoch in 0..=300 {
        let l = qe_losses(&head, &regression, &ranking)?;
        if epoch % 50 == 0 {
            println!("epoch {epoch:>3}: mse={:.4} rank={:.4}", l.mse, l.rank);
        }
        head.sgd_step(&l.gradients, 0.02);
    }

    let reloaded = QeHead::from_json(&head.to_json()?)?;
    let (s, h, q, _, _) = &data[0];
    let f = qe_features(s, h)?;
    println!("first sample: quality {q:.3}, predicted {:.3}", qe_score(&reloaded, &f)?);
    Ok(())
}
