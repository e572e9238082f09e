//! Test-only oracles, deliberately written the slow and obvious way and
//! sharing no code with the library's fitting paths.

#![allow(dead_code, clippy::needless_range_loop)]

use chrono::NaiveDate;
use fftree::{Dataset, Factor};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2015, 5, 1).unwrap();
    (0..n)
        .map(|i| start + chrono::Days::new(i as u64))
        .collect()
}

pub fn make_dataset(features: [Vec<f64>; 3], targets: Vec<Vec<f64>>) -> Dataset {
    let n = features[0].len();
    let names = (0..targets.len()).map(|i| format!("T{i}")).collect();
    Dataset::new(dates(n), features, targets, names).unwrap()
}

/// Factor-like features and targets with a planted dependence on mex so
/// splits are informative but not trivially separable.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, n_targets: usize) -> Dataset {
    let mex = Normal::new(0.0004, 0.012).unwrap();
    let small = Normal::new(0.0, 0.006).unwrap();
    let noise = Normal::new(0.0, 0.01).unwrap();
    let features = [
        (0..n).map(|_| mex.sample(rng)).collect::<Vec<f64>>(),
        (0..n).map(|_| small.sample(rng)).collect(),
        (0..n).map(|_| small.sample(rng)).collect(),
    ];
    let targets = (0..n_targets)
        .map(|_| {
            let beta = rng.random_range(0.3..1.5);
            let gamma = rng.random_range(-0.5..0.5);
            (0..n)
                .map(|i| beta * features[0][i] + gamma * features[1][i] + noise.sample(rng))
                .collect()
        })
        .collect();
    make_dataset(features, targets)
}

fn two_pass_sse(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Summed squared error of `rows` across all targets, directly from the
/// definition.
pub fn brute_sse(ds: &Dataset, rows: &[usize]) -> f64 {
    (0..ds.n_targets())
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|&r| ds.target(k)[r]).collect();
            two_pass_sse(&col)
        })
        .sum()
}

pub fn brute_sse_target(ds: &Dataset, rows: &[usize], k: usize) -> f64 {
    let col: Vec<f64> = rows.iter().map(|&r| ds.target(k)[r]).collect();
    two_pass_sse(&col)
}

#[derive(Debug, Clone)]
pub struct BruteSplit {
    pub feature: Factor,
    pub threshold: f64,
    /// `true` for rows sent left, indexed by dataset row.
    pub left: Vec<bool>,
    pub cost: f64,
}

/// Exhaustive double loop: every feature, every midpoint between distinct
/// values, cost from a fresh partition scan. Ties keep the first seen
/// (lower feature, then smaller threshold).
pub fn brute_best_split(ds: &Dataset, min_leaf: usize) -> Option<BruteSplit> {
    let n = ds.len();
    let mut best: Option<BruteSplit> = None;
    for f in Factor::ALL {
        let column = ds.feature(f);
        let mut distinct: Vec<f64> = Vec::new();
        for &v in column {
            if !distinct.contains(&v) {
                distinct.push(v);
            }
        }
        distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in distinct.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let mut left_rows = Vec::new();
            let mut right_rows = Vec::new();
            for r in 0..n {
                if column[r] < threshold {
                    left_rows.push(r);
                } else {
                    right_rows.push(r);
                }
            }
            if left_rows.len() < min_leaf || right_rows.len() < min_leaf {
                continue;
            }
            let cost = brute_sse(ds, &left_rows) + brute_sse(ds, &right_rows);
            if best.as_ref().is_none_or(|b| cost < b.cost) {
                let mut left = vec![false; n];
                for r in left_rows {
                    left[r] = true;
                }
                best = Some(BruteSplit {
                    feature: f,
                    threshold,
                    left,
                    cost,
                });
            }
        }
    }
    best
}

/// Left-membership of every row under a `(feature, threshold)` rule.
pub fn membership(ds: &Dataset, feature: Factor, threshold: f64) -> Vec<bool> {
    ds.feature(feature).iter().map(|v| *v < threshold).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn q(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

fn qn(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

fn exact_central(x: &[f64]) -> (BigRational, Vec<BigRational>) {
    let n = qn(x.len());
    let sum = x.iter().fold(BigRational::zero(), |acc, v| acc + q(*v));
    let mean = sum / &n;
    let dev = x.iter().map(|v| q(*v) - &mean).collect();
    (mean, dev)
}

/// Exact-arithmetic bias-adjusted skewness.
pub fn exact_skewness(x: &[f64]) -> f64 {
    let n = x.len();
    let (_, dev) = exact_central(x);
    let s2: BigRational = dev.iter().map(|d| d * d).sum();
    let s3: BigRational = dev.iter().map(|d| d * d * d).sum();
    let nq = qn(n);
    let m3 = s3 / &nq;
    let var = s2 / qn(n - 1);
    let c = &nq * &nq / (qn(n - 1) * qn(n - 2));
    // G1² = c² m3² / var³, exact; take the root once at the end.
    let g1_sq = &c * &c * &m3 * &m3 / (&var * &var * &var);
    let mag = to_f64(&g1_sq).sqrt();
    if m3.is_negative() {
        -mag
    } else {
        mag
    }
}

/// Exact-arithmetic bias-adjusted excess kurtosis.
pub fn exact_excess_kurtosis(x: &[f64]) -> f64 {
    let n = x.len();
    let (_, dev) = exact_central(x);
    let s2: BigRational = dev.iter().map(|d| d * d).sum();
    let s4: BigRational = dev.iter().map(|d| d * d * d * d).sum();
    let var = s2 / qn(n - 1);
    let lead = qn(n + 1) * qn(n) / (qn(n - 1) * qn(n - 2) * qn(n - 3));
    let tail = qn(3) * qn(n - 1) * qn(n - 1) / (qn(n - 2) * qn(n - 3));
    to_f64(&(lead * s4 / (&var * &var) - tail))
}

pub fn exact_covariance(a: &[f64], b: &[f64]) -> f64 {
    let (_, da) = exact_central(a);
    let (_, db) = exact_central(b);
    let s: BigRational = da.iter().zip(&db).map(|(x, y)| x * y).sum();
    to_f64(&(s / qn(a.len() - 1)))
}

/// Solve `XᵀX β = Xᵀy` exactly for `X = [1, mex, smb, hml]`.
pub fn exact_normal_equations(ds: &Dataset, y: &[f64]) -> [f64; 4] {
    let n = ds.len();
    let row = |i: usize| -> [BigRational; 4] {
        [
            BigRational::from_integer(BigInt::from(1)),
            q(ds.feature(Factor::Mex)[i]),
            q(ds.feature(Factor::Smb)[i]),
            q(ds.feature(Factor::Hml)[i]),
        ]
    };
    let mut a: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); 5]; 4];
    for i in 0..n {
        let x = row(i);
        let yi = q(y[i]);
        for r in 0..4 {
            for c in 0..4 {
                a[r][c] += &x[r] * &x[c];
            }
            a[r][4] += &x[r] * &yi;
        }
    }
    for col in 0..4 {
        let pivot = (col..4).find(|&r| !a[r][col].is_zero()).expect("full rank");
        a.swap(col, pivot);
        for r in 0..4 {
            if r != col && !a[r][col].is_zero() {
                let factor = &a[r][col] / &a[col][col];
                for c in col..5 {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    let mut beta = [0.0; 4];
    for (i, b) in beta.iter_mut().enumerate() {
        *b = to_f64(&(&a[i][4] / &a[i][i]));
    }
    beta
}

/// `random_dataset` with sizes drawn from the same generator.
pub fn random_sized(
    rng: &mut ChaCha8Rng,
    n: std::ops::RangeInclusive<usize>,
    n_targets: std::ops::RangeInclusive<usize>,
) -> Dataset {
    let n = rng.random_range(n);
    let t = rng.random_range(n_targets);
    random_dataset(rng, n, t)
}
