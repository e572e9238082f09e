//! Descriptive statistics for return series.
//!
//! Conventions follow the usual dataframe `describe()` output: sample
//! standard deviation with an `n - 1` denominator, quantiles by linear
//! interpolation at position `(n - 1) * p`, and bias-adjusted skewness and
//! excess kurtosis.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("series is empty")]
    EmptySeries,
    #[error("need at least {required} observations, got {actual}")]
    TooShort { required: usize, actual: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("column {column} has {actual} rows, expected {expected}")]
    RaggedColumns {
        column: usize,
        expected: usize,
        actual: usize,
    },
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

/// Summary of one series. `std` needs two observations, `skew` three and
/// `excess_kurtosis` four; all three are `None` below that or when the
/// series is constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub count: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub skew: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

impl StatsSummary {
    pub fn variance(&self) -> Option<f64> {
        self.std.map(|s| s * s)
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Central moment sums `(Σd², Σd³, Σd⁴)` around the sample mean.
fn central_sums(x: &[f64]) -> (f64, f64, f64) {
    let m = mean(x);
    x.iter().fold((0.0, 0.0, 0.0), |(s2, s3, s4), &v| {
        let d = v - m;
        let d2 = d * d;
        (s2 + d2, s3 + d2 * d, s4 + d2 * d2)
    })
}

/// Sample variance with the `n - 1` denominator.
pub fn variance(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            required: 2,
            actual: x.len(),
        });
    }
    let (s2, _, _) = central_sums(x);
    Ok(s2 / (x.len() - 1) as f64)
}

/// Quantile of an ascending-sorted slice by linear interpolation at `(n - 1) * p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let pos = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Bias-adjusted sample skewness
/// `G1 = n² / ((n-1)(n-2)) · m3 / s³`, `m3` with `1/n`, `s` with `n - 1`.
pub fn skewness(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooShort {
            required: 3,
            actual: n,
        });
    }
    let (s2, s3, _) = central_sums(x);
    if s2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let nf = n as f64;
    let m3 = s3 / nf;
    let sample_var = s2 / (nf - 1.0);
    Ok(nf * nf / ((nf - 1.0) * (nf - 2.0)) * m3 / sample_var.powf(1.5))
}

/// Bias-adjusted sample excess kurtosis
/// `G2 = (n+1)n / ((n-1)(n-2)(n-3)) · Σd⁴ / s⁴ - 3(n-1)² / ((n-2)(n-3))`.
pub fn excess_kurtosis(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 4 {
        return Err(StatsError::TooShort {
            required: 4,
            actual: n,
        });
    }
    let (s2, _, s4) = central_sums(x);
    if s2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let nf = n as f64;
    let sample_var = s2 / (nf - 1.0);
    let lead = (nf + 1.0) * nf / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    let tail = 3.0 * (nf - 1.0) * (nf - 1.0) / ((nf - 2.0) * (nf - 3.0));
    Ok(lead * s4 / (sample_var * sample_var) - tail)
}

pub fn describe(x: &[f64]) -> Result<StatsSummary> {
    if x.is_empty() {
        return Err(StatsError::EmptySeries);
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(StatsSummary {
        count: x.len(),
        mean: mean(x),
        std: variance(x).ok().map(f64::sqrt),
        min: sorted[0],
        q25: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        skew: skewness(x).ok(),
        excess_kurtosis: excess_kurtosis(x).ok(),
    })
}

/// Sample covariance matrix with labelled rows and columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceMatrix {
    pub labels: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CovarianceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }
}

/// Covariances of the given columns (`n - 1` denominator). The result is
/// exactly symmetric.
pub fn covariance_matrix<S: AsRef<str>>(
    labels: &[S],
    columns: &[Vec<f64>],
) -> Result<CovarianceMatrix> {
    let n = columns.first().map_or(0, Vec::len);
    if n < 2 {
        return Err(StatsError::TooShort {
            required: 2,
            actual: n,
        });
    }
    if let Some((column, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != n) {
        return Err(StatsError::RaggedColumns {
            column,
            expected: n,
            actual: c.len(),
        });
    }
    let deviations: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let t = columns.len();
    let denom = (n - 1) as f64;
    let mut values = vec![vec![0.0; t]; t];
    for i in 0..t {
        for j in i..t {
            let s: f64 = deviations[i]
                .iter()
                .zip(&deviations[j])
                .map(|(a, b)| a * b)
                .sum();
            values[i][j] = s / denom;
            values[j][i] = s / denom;
        }
    }
    Ok(CovarianceMatrix {
        labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
        values,
    })
}
