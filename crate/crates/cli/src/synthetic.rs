//! Seeded factor-like data for demos and smoke tests.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use fftree::{Dataset, DatasetError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};

/// `n` business days from 2015-05-01. Each ticker loads on the factors
/// with its own betas plus heavy-tailed idiosyncratic noise.
pub fn dataset(n: usize, tickers: &[String], seed: u64) -> Result<Dataset, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dates = Vec::with_capacity(n);
    let mut day = NaiveDate::from_ymd_opt(2015, 5, 1).expect("valid date");
    while dates.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day = day + Days::new(1);
    }

    let tails = StudentT::new(4.0).expect("valid dof");
    let small = Normal::new(0.0, 0.005).expect("valid sd");
    let mex: Vec<f64> = (0..n)
        .map(|_| 0.0004 + 0.008 * tails.sample(&mut rng))
        .collect();
    let smb: Vec<f64> = (0..n).map(|_| small.sample(&mut rng)).collect();
    let hml: Vec<f64> = (0..n).map(|_| small.sample(&mut rng)).collect();

    let targets = tickers
        .iter()
        .map(|_| {
            let b = rng.random_range(0.6..1.4);
            let s = rng.random_range(-0.4..0.4);
            let h = rng.random_range(-0.4..0.4);
            let noise = 0.004 + rng.random_range(0.0..0.008);
            (0..n)
                .map(|i| b * mex[i] + s * smb[i] + h * hml[i] + noise * tails.sample(&mut rng))
                .collect()
        })
        .collect();
    Dataset::new(dates, [mex, smb, hml], targets, tickers.to_vec())
}
