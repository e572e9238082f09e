//! Three-factor time-series regression `y = a + b·mex + s·smb + h·hml + e`.
//!
//! Solved through a QR factorization of the `n x 4` design matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Factor};

/// Smallest admissible `|R_ii| / max_j |R_jj|` before the design is
/// treated as rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;
const N_PARAMS: usize = 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OlsError {
    #[error("need more than {N_PARAMS} observations, got {0}")]
    TooShort(usize),
    #[error("design matrix [1, mex, smb, hml] is rank deficient")]
    RankDeficient,
    #[error("excess returns requested but no risk-free series given")]
    MissingRiskFree,
    #[error("risk-free series has {actual} rows, dataset has {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("target index {0} out of range")]
    UnknownTarget(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLoadings {
    pub target: String,
    pub n: usize,
    pub excess: bool,
    /// Intercept, per day.
    pub a: f64,
    pub b: f64,
    pub s: f64,
    pub h: f64,
    pub r_squared: f64,
    /// `SSR / (n - 4)`.
    pub residual_variance: f64,
}

impl FactorLoadings {
    pub fn predict(&self, mex: f64, smb: f64, hml: f64) -> f64 {
        self.a + self.b * mex + self.s * smb + self.h * hml
    }
}

/// Fit the regression for one target column. With `excess`, the regressand
/// is `R(t) - rf(t)` and `rf` must be supplied row-aligned with the dataset.
pub fn fit_ols(
    dataset: &Dataset,
    target: usize,
    excess: bool,
    rf: Option<&[f64]>,
) -> Result<FactorLoadings, OlsError> {
    if target >= dataset.n_targets() {
        return Err(OlsError::UnknownTarget(target));
    }
    let n = dataset.len();
    if n <= N_PARAMS {
        return Err(OlsError::TooShort(n));
    }
    let raw = dataset.target(target);
    let y: Vec<f64> = if excess {
        let rf = rf.ok_or(OlsError::MissingRiskFree)?;
        if rf.len() != n {
            return Err(OlsError::LengthMismatch {
                expected: n,
                actual: rf.len(),
            });
        }
        raw.iter().zip(rf).map(|(r, f)| r - f).collect()
    } else {
        raw.to_vec()
    };

    let design = DMatrix::from_fn(n, N_PARAMS, |i, j| match j {
        0 => 1.0,
        j => dataset.feature(Factor::ALL[j - 1])[i],
    });
    let y = DVector::from_vec(y);
    let qr = design.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..N_PARAMS).map(|i| r[(i, i)].abs()).collect();
    let largest = diag.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 || diag.iter().any(|d| *d < RANK_TOLERANCE * largest) {
        return Err(OlsError::RankDeficient);
    }
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or(OlsError::RankDeficient)?;

    let residuals = &y - &design * &beta;
    let ssr = residuals.norm_squared();
    let mean = y.mean();
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let constant = y.iter().all(|v| *v == y[0]);
    let r_squared = if !constant && sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else {
        0.0
    };

    Ok(FactorLoadings {
        target: dataset.target_names()[target].clone(),
        n,
        excess,
        a: beta[0],
        b: beta[1],
        s: beta[2],
        h: beta[3],
        r_squared,
        residual_variance: ssr / (n - N_PARAMS) as f64,
    })
}
