use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(Error::Parameter(format!("correlation needs at least 3 points, got {}", a.len())));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Parameter("correlation input contains non-finite values".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("correlation is undefined for a constant series".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// One metric's value per domain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub name: String,
    pub values: BTreeMap<String, f64>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>) -> Self {
        MetricSeries {
            name: name.into(),
            values: BTreeMap::new(),
        }
    }
}

/// Correlation over the domains both series share.
pub fn pearson_series(a: &MetricSeries, b: &MetricSeries) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .values
        .iter()
        .filter_map(|(k, x)| b.values.get(k).map(|y| (*x, *y)))
        .unzip();
    pearson(&xs, &ys)
}

/// Symmetric correlation matrix. The diagonal is 1; cells whose
/// correlation is undefined are `None`.
pub fn correlation_matrix(series: &[MetricSeries]) -> Vec<Vec<Option<f64>>> {
    let n = series.len();
    let mut m = vec![vec![None; n]; n];
    for i in 0..n {
        m[i][i] = Some(1.0);
        for j in i + 1..n {
            let r = match pearson_series(&series[i], &series[j]) {
                Ok(r) => Some(r),
                Err(e) => {
                    log::warn!("correlation of {} and {} undefined: {e}", series[i].name, series[j].name);
                    None
                }
            };
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    m
}
