//! Pearson correlation between metric columns keyed by domain.

use topiqa::metrics::{correlation_matrix, pearson, MetricSeries};

fn main() -> topiqa::Result<()> {
    let domains = ["education", "sports", "politics", "economy", "culture"];
    let columns = [
        ("lda", [0.71, 0.58, 0.66, 0.49, 0.62]),
        ("bleu", [0.62, 0.48, 0.55, 0.41, 0.57]),
        ("constant", [0.5; 5]),
    ];
    let series: Vec<MetricSeries> = columns
        .iter()
        .map(|(name, vals)| {
            let mut s = MetricSeries::new(*name);
            s.values = domains.iter().map(|d| d.to_string()).zip(vals.iter().copied()).collect();
            s
        })
        .collect();

    println!("r(lda, bleu) = {:.4}", pearson(&columns[0].1, &columns[1].1)?);
    let m = correlation_matrix(&series);
    for (s, row) in series.iter().zip(&m) {
        let cells: Vec<String> = row.iter().map(|c| c.map_or("   -  ".into(), |v| format!("{v:6.3}"))).collect();
        println!("{:<9} {}", s.name, cells.join(" "));
    }
    Ok(())
}
