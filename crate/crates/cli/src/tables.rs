use fftree::stats::covariance_matrix;
use fftree::{describe, Dataset, DisplayUnit, Factor, FactorLoadings, StatsError, StatsSummary};

use crate::args::Format;

fn columns(ds: &Dataset, with_factors: bool) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut labels = ds.target_names().to_vec();
    let mut cols = ds.targets().to_vec();
    if with_factors {
        for f in Factor::ALL {
            labels.push(f.name().to_string());
            cols.push(ds.feature(f).to_vec());
        }
    }
    (labels, cols)
}

fn summary_rows(s: &StatsSummary) -> [(&'static str, Option<f64>); 10] {
    [
        ("count", Some(s.count as f64)),
        ("mean", Some(s.mean)),
        ("std", s.std),
        ("min", Some(s.min)),
        ("25%", Some(s.q25)),
        ("50%", Some(s.median)),
        ("75%", Some(s.q75)),
        ("max", Some(s.max)),
        ("skew", s.skew),
        ("kurtosis", s.excess_kurtosis),
    ]
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".to_string(), |v| format!("{v:.6}"))
}

fn aligned(grid: &[Vec<String>]) -> String {
    let width = |j: usize| grid.iter().map(|r| r[j].len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..grid[0].len()).map(width).collect();
    let mut out = String::new();
    for row in grid {
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for (j, c) in row.iter().enumerate().skip(1) {
            line.push_str(&format!("  {c:>w$}", w = widths[j]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn to_csv(grid: &[Vec<String>]) -> String {
    let quote = |c: &String| {
        if c.contains([',', '"', '\n']) {
            format!("\"{}\"", c.replace('"', "\"\""))
        } else {
            c.clone()
        }
    };
    grid.iter()
        .map(|r| r.iter().map(quote).collect::<Vec<_>>().join(",") + "\n")
        .collect()
}

/// Describe-style summary per column, then the covariance matrix.
pub fn stats(ds: &Dataset, format: Format, with_factors: bool) -> Result<String, StatsError> {
    let (labels, cols) = columns(ds, with_factors);
    let summaries = cols
        .iter()
        .map(|c| describe(c))
        .collect::<Result<Vec<_>, _>>()?;
    let cov = covariance_matrix(&labels, &cols)?;

    if format == Format::Json {
        let summary: Vec<serde_json::Value> = labels
            .iter()
            .zip(&summaries)
            .map(|(l, s)| serde_json::json!({ "series": l, "summary": s }))
            .collect();
        let doc = serde_json::json!({ "summary": summary, "covariance": cov });
        return Ok(serde_json::to_string_pretty(&doc).expect("stats serialize") + "\n");
    }

    let mut head = vec![String::new()];
    head.extend(labels.iter().cloned());
    let mut summary_grid = vec![head.clone()];
    for (i, (name, _)) in summary_rows(&summaries[0]).iter().enumerate() {
        let mut row = vec![name.to_string()];
        row.extend(summaries.iter().map(|s| cell(summary_rows(s)[i].1)));
        summary_grid.push(row);
    }
    let mut cov_grid = vec![head];
    for (i, l) in labels.iter().enumerate() {
        let mut row = vec![l.clone()];
        row.extend((0..labels.len()).map(|j| format!("{:.6}", cov.get(i, j))));
        cov_grid.push(row);
    }

    Ok(if format == Format::Csv {
        summary_grid[0][0] = "metric".into();
        for row in cov_grid.iter_mut().skip(1) {
            row[0] = format!("cov {}", row[0]);
        }
        summary_grid.extend(cov_grid.into_iter().skip(1));
        to_csv(&summary_grid)
    } else {
        format!(
            "{}\ncovariance\n{}n = {}\n",
            aligned(&summary_grid),
            aligned(&cov_grid),
            ds.len()
        )
    })
}

pub fn ols(fits: &[FactorLoadings], format: Format, unit: DisplayUnit) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(fits).expect("loadings serialize") + "\n",
        Format::Csv => {
            let mut grid = vec![[
                "target",
                "n",
                "excess",
                "a",
                "b",
                "s",
                "h",
                "r_squared",
                "residual_variance",
            ]
            .map(String::from)
            .to_vec()];
            for f in fits {
                grid.push(vec![
                    f.target.clone(),
                    f.n.to_string(),
                    f.excess.to_string(),
                    f.a.to_string(),
                    f.b.to_string(),
                    f.s.to_string(),
                    f.h.to_string(),
                    f.r_squared.to_string(),
                    f.residual_variance.to_string(),
                ]);
            }
            to_csv(&grid)
        }
        _ => {
            let mut grid = vec![["target", "n", "a", "b", "s", "h", "R2"]
                .map(String::from)
                .to_vec()];
            for f in fits {
                grid.push(vec![
                    f.target.clone(),
                    f.n.to_string(),
                    unit.format(f.a),
                    format!("{:.4}", f.b),
                    format!("{:.4}", f.s),
                    format!("{:.4}", f.h),
                    format!("{:.4}", f.r_squared),
                ]);
            }
            let kind = if fits.iter().any(|f| f.excess) {
                "excess"
            } else {
                "raw"
            };
            format!("{}{kind} returns, a per day\n", aligned(&grid))
        }
    }
}
