//! Baseline metrics: BLEU, a reference-free QE regression head, and
//! Pearson correlation across metrics.

mod bleu;
mod pearson;
mod qe;

pub use bleu::{bleu, effective_reference_length, BleuBreakdown, BleuConfig};
pub use pearson::{correlation_matrix, pearson, pearson_series, MetricSeries};
pub use qe::{qe_features, qe_losses, qe_score, QeGradients, QeHead, QeLosses, RankTriple, RegressionSample};
