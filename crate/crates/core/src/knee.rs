//! Knee selection on a discrete curve.
//!
//! The curve is min-max normalized to `f`, `g` is the chord from the first to
//! the last point, and the knee is the first index maximizing `f - g`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Differences at or below this are treated as a flat `d`.
const FLAT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Knee {
    /// 1-based position of the knee.
    pub k_star: usize,
    /// True when `d` never rises above zero (constant or linear curves).
    pub degenerate: bool,
    pub differences: Vec<f64>,
}

pub fn kneedle(values: &[f64]) -> Result<Knee> {
    let n = values.len();
    if n < 3 {
        return Err(Error::Parameter(format!("kneedle needs at least 3 points, got {n}")));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("kneedle input contains non-finite values".into()));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo == 0.0 {
        return Ok(Knee {
            k_star: 1,
            degenerate: true,
            differences: vec![0.0; n],
        });
    }
    let f: Vec<f64> = values.iter().map(|v| (v - lo) / (hi - lo)).collect();
    let (f1, fk) = (f[0], f[n - 1]);
    let span = (n - 1) as f64;
    let differences: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(i, fi)| fi - (f1 + (fk - f1) * i as f64 / span))
        .collect();

    let mut best = 0;
    for (i, d) in differences.iter().enumerate() {
        if *d > differences[best] {
            best = i;
        }
    }
    if differences[best] <= FLAT_TOL {
        return Ok(Knee {
            k_star: 1,
            degenerate: true,
            differences,
        });
    }
    Ok(Knee {
        k_star: best + 1,
        degenerate: false,
        differences,
    })
}
