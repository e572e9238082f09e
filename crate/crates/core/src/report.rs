//! Diagnostics and renderings for fitted trees.
//!
//! Covers root-split balance, leaf expected returns, per-target dominance
//! of a joint split, text/DOT/JSON tree renderings and the solo/joint
//! replication table.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetError, Factor};
use crate::stats;
use crate::tree::{self, FitConfig, Tree, TreeError, TreeNode};

/// One basis point in decimal return units.
pub const BP: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("tree root is a leaf; there is no split to report")]
    NotASplit,
    #[error("split achieves no reduction in squared error")]
    ZeroDrop,
    #[error("tree was fit on {tree} samples but the dataset has {dataset}")]
    SizeMismatch { tree: usize, dataset: usize },
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T, E = ReportError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisplayUnit {
    #[default]
    Decimal,
    Percent,
    Bp,
}

impl DisplayUnit {
    pub fn format(self, value: f64) -> String {
        match self {
            DisplayUnit::Decimal => format!("{value:.4}"),
            DisplayUnit::Percent => format!("{:.2}%", value * 100.0),
            DisplayUnit::Bp => format!("{:.1}bp", value / BP),
        }
    }
}

impl FromStr for DisplayUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "decimal" => Ok(DisplayUnit::Decimal),
            "percent" => Ok(DisplayUnit::Percent),
            "bp" => Ok(DisplayUnit::Bp),
            other => Err(format!("unknown unit `{other}` (decimal|percent|bp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeFormat {
    Text,
    Dot,
    Json,
}

impl FromStr for TreeFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(TreeFormat::Text),
            "dot" => Ok(TreeFormat::Dot),
            "json" => Ok(TreeFormat::Json),
            other => Err(format!("unknown tree format `{other}` (text|dot|json)")),
        }
    }
}

/// Share of samples on each side of the root split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Balance {
    pub left_count: usize,
    pub right_count: usize,
    /// Percent of `n`.
    pub left_fraction: f64,
    pub right_fraction: f64,
}

impl Balance {
    pub fn from_counts(left_count: usize, right_count: usize, n: usize) -> Balance {
        Balance {
            left_count,
            right_count,
            left_fraction: left_count as f64 / n as f64 * 100.0,
            right_fraction: right_count as f64 / n as f64 * 100.0,
        }
    }

    /// `"13.66 - 86.34%"`.
    pub fn display(&self) -> String {
        format!("{:.2} - {:.2}%", self.left_fraction, self.right_fraction)
    }
}

/// Sample split at the root, as percentages of `n`.
pub fn balance(tree: &Tree, n: usize) -> Result<Balance> {
    match &tree.root {
        TreeNode::Leaf { .. } => Err(ReportError::NotASplit),
        TreeNode::Internal { left, right, .. } => {
            Ok(Balance::from_counts(left.count(), right.count(), n))
        }
    }
}

fn root_partition(dataset: &Dataset, tree: &Tree) -> Result<(Factor, f64, Vec<usize>, Vec<usize>)> {
    let (feature, threshold) = tree.root_split().ok_or(ReportError::NotASplit)?;
    if tree.n_samples() != dataset.len() {
        return Err(ReportError::SizeMismatch {
            tree: tree.n_samples(),
            dataset: dataset.len(),
        });
    }
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let (left, right) = dataset.partition(&rows, feature, threshold);
    Ok((feature, threshold, left, right))
}

/// Each target's share of the joint squared-error drop at the root split.
///
/// Shares are non-negative and sum to one.
pub fn dominance_shares(dataset: &Dataset, tree: &Tree) -> Result<Vec<f64>> {
    let (_, _, left, right) = root_partition(dataset, tree)?;
    let rows: Vec<usize> = (0..dataset.len()).collect();
    shares_for_partition(dataset, &rows, &left, &right)
}

/// Per-target drop shares for an explicit partition of `rows`.
pub fn shares_for_partition(
    dataset: &Dataset,
    rows: &[usize],
    left: &[usize],
    right: &[usize],
) -> Result<Vec<f64>> {
    let parent = tree::node_sse_by_target(dataset, rows)?;
    let l = tree::node_sse_by_target(dataset, left)?;
    let r = tree::node_sse_by_target(dataset, right)?;
    let drops: Vec<f64> = (0..parent.len())
        .map(|k| (parent[k] - l[k] - r[k]).max(0.0))
        .collect();
    let total: f64 = drops.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(ReportError::ZeroDrop);
    }
    // 1 / Σ_j (d_j / d_k) keeps exact ratios exact, e.g. (0.8, 0.2) for 4:1.
    Ok(drops
        .iter()
        .map(|&d| {
            if d > 0.0 {
                1.0 / drops.iter().map(|e| e / d).sum::<f64>()
            } else {
                0.0
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSplit {
    pub ticker: String,
    pub left_mean: f64,
    pub right_mean: f64,
    pub left_mean_bp: f64,
    pub right_mean_bp: f64,
    pub dominance_share: f64,
}

/// Root-split diagnostics for one fitted tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub feature: Factor,
    pub feature_name: String,
    pub threshold: f64,
    pub threshold_bp: f64,
    pub n: usize,
    #[serde(flatten)]
    pub balance: Balance,
    pub per_target: Vec<TargetSplit>,
}

pub fn split_report(dataset: &Dataset, tree: &Tree) -> Result<SplitReport> {
    let (feature, threshold, left, right) = root_partition(dataset, tree)?;
    let mean = |column: &[f64], rows: &[usize]| {
        rows.iter().map(|&r| column[r]).sum::<f64>() / rows.len() as f64
    };
    let rows: Vec<usize> = (0..dataset.len()).collect();
    // A split with no drop still has well-defined balance and means.
    let shares = match shares_for_partition(dataset, &rows, &left, &right) {
        Ok(s) => s,
        Err(ReportError::ZeroDrop) => vec![0.0; dataset.n_targets()],
        Err(e) => return Err(e),
    };
    let per_target = dataset
        .target_names()
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let column = dataset.target(k);
            let (lm, rm) = (mean(column, &left), mean(column, &right));
            TargetSplit {
                ticker: name.clone(),
                left_mean: lm,
                right_mean: rm,
                left_mean_bp: lm / BP,
                right_mean_bp: rm / BP,
                dominance_share: shares[k],
            }
        })
        .collect();
    Ok(SplitReport {
        feature,
        feature_name: feature.name().to_string(),
        threshold,
        threshold_bp: threshold / BP,
        n: dataset.len(),
        balance: Balance::from_counts(left.len(), right.len(), dataset.len()),
        per_target,
    })
}

impl SplitReport {
    pub fn to_text(&self, unit: DisplayUnit) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "split: {} < {}  (n={})",
            self.feature_name,
            unit.format(self.threshold),
            self.n
        );
        let _ = writeln!(
            out,
            "balance: {}  ({} / {})",
            self.balance.display(),
            self.balance.left_count,
            self.balance.right_count
        );
        for t in &self.per_target {
            let _ = writeln!(
                out,
                "{}: left ER {}  right ER {}  dominance {:.4}",
                t.ticker,
                unit.format(t.left_mean),
                unit.format(t.right_mean),
                t.dominance_share
            );
        }
        out
    }
}

fn leaf_summary(prediction: &[f64], count: usize, names: &[String], unit: DisplayUnit) -> String {
    let means: Vec<String> = names
        .iter()
        .zip(prediction)
        .map(|(name, v)| format!("{name}={}", unit.format(*v)))
        .collect();
    format!("leaf n={count}: {}", means.join(" "))
}

fn render_text(
    node: &TreeNode,
    names: &[String],
    unit: DisplayUnit,
    indent: usize,
    out: &mut String,
) {
    let pad = "  ".repeat(indent);
    match node {
        TreeNode::Leaf {
            prediction, count, ..
        } => {
            let _ = writeln!(
                out,
                "{pad}{}",
                leaf_summary(prediction, *count, names, unit)
            );
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let _ = writeln!(
                out,
                "{pad}if {feature} < {}:  [n={}]",
                unit.format(*threshold),
                node.count()
            );
            render_text(left, names, unit, indent + 1, out);
            let _ = writeln!(out, "{pad}else:");
            render_text(right, names, unit, indent + 1, out);
        }
    }
}

fn render_dot(
    node: &TreeNode,
    names: &[String],
    unit: DisplayUnit,
    next_id: &mut usize,
    out: &mut String,
) -> usize {
    let id = *next_id;
    *next_id += 1;
    match node {
        TreeNode::Leaf {
            prediction, count, ..
        } => {
            let mut label = format!("n = {count}");
            for (name, v) in names.iter().zip(prediction) {
                let _ = write!(label, "\\n{name} = {}", unit.format(*v));
            }
            let _ = writeln!(out, "  n{id} [label=\"{label}\"];");
        }
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let _ = writeln!(
                out,
                "  n{id} [label=\"{feature} < {}\\nn = {}\"];",
                unit.format(*threshold),
                node.count()
            );
            let l = render_dot(left, names, unit, next_id, out);
            let r = render_dot(right, names, unit, next_id, out);
            let _ = writeln!(out, "  n{id} -> n{l} [label=\"true\"];");
            let _ = writeln!(out, "  n{id} -> n{r} [label=\"false\"];");
        }
    }
    id
}

/// Render a tree. JSON is the canonical full-precision serialization and
/// ignores `unit`.
pub fn render(tree: &Tree, format: TreeFormat, unit: DisplayUnit) -> String {
    match format {
        TreeFormat::Json => tree.to_json(),
        TreeFormat::Text => {
            let mut out = String::new();
            render_text(&tree.root, &tree.target_names, unit, 0, &mut out);
            out
        }
        TreeFormat::Dot => {
            let mut out = String::from("digraph tree {\n  node [shape=box];\n");
            let mut next = 0;
            render_dot(&tree.root, &tree.target_names, unit, &mut next, &mut out);
            out.push_str("}\n");
            out
        }
    }
}

/// One ticker's column of the replication table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationColumn {
    pub ticker: String,
    pub variance: Option<f64>,
    pub skew: Option<f64>,
    pub kurtosis: Option<f64>,
    /// `None` when the solo tree did not split.
    pub solo: Option<SplitReport>,
    /// Joint fit with the anchor; `None` for the anchor itself or when the
    /// joint tree did not split.
    pub joint: Option<SplitReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationTable {
    pub n: usize,
    pub anchor: String,
    pub config: FitConfig,
    pub columns: Vec<ReplicationColumn>,
}

fn fit_report(
    dataset: &Dataset,
    names: &[&str],
    config: &FitConfig,
) -> Result<Option<SplitReport>> {
    let sub = dataset.select_targets(names)?;
    let tree = tree::fit(&sub, config)?;
    if tree.root.is_leaf() {
        return Ok(None);
    }
    Ok(Some(split_report(&sub, &tree)?))
}

/// Solo trees for every ticker and joint `(anchor, ticker)` trees for
/// every other ticker.
pub fn replicate_table(
    dataset: &Dataset,
    anchor: &str,
    config: &FitConfig,
) -> Result<ReplicationTable> {
    dataset.target_index(anchor)?;
    let mut columns = Vec::with_capacity(dataset.n_targets());
    for (k, ticker) in dataset.target_names().iter().enumerate() {
        let x = dataset.target(k);
        let solo = fit_report(dataset, &[ticker.as_str()], config)?;
        let joint = if ticker == anchor {
            None
        } else {
            fit_report(dataset, &[anchor, ticker.as_str()], config)?
        };
        columns.push(ReplicationColumn {
            ticker: ticker.clone(),
            variance: stats::variance(x).ok(),
            skew: stats::skewness(x).ok(),
            kurtosis: stats::excess_kurtosis(x).ok(),
            solo,
            joint,
        });
    }
    Ok(ReplicationTable {
        n: dataset.len(),
        anchor: anchor.to_string(),
        config: *config,
        columns,
    })
}

/// Nearest 10bp, e.g. `-0.00705` -> `"-70bp"`.
pub fn round_bp10(value: f64) -> String {
    let rounded = (value / BP / 10.0).round() * 10.0;
    format!("{}bp", if rounded == 0.0 { 0.0 } else { rounded })
}

const NA: &str = "na";

impl ReplicationTable {
    /// Metric rows by ticker columns, matching the layout of the solo/joint
    /// summary table. Thresholds and leaf means are rounded to 10bp.
    pub fn grid(&self) -> Vec<Vec<String>> {
        let mut header = vec!["metric".to_string()];
        header.extend(self.columns.iter().map(|c| c.ticker.clone()));
        let opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map_or(NA.to_string(), f);
        let row = |label: &str, f: &dyn Fn(&ReplicationColumn) -> String| {
            let mut r = vec![label.to_string()];
            r.extend(self.columns.iter().map(f));
            r
        };
        let leaf_er = |s: &SplitReport, ticker: &str| {
            s.per_target
                .iter()
                .find(|t| t.ticker == ticker)
                .map_or(NA.to_string(), |t| {
                    format!("{} / {}", round_bp10(t.left_mean), round_bp10(t.right_mean))
                })
        };
        let anchor = self.anchor.as_str();
        vec![
            header,
            row("variance", &|c| {
                opt(c.variance, &|v| format!("{:.2}bp", v / BP))
            }),
            row("skew", &|c| opt(c.skew, &|v| format!("{v:.3}"))),
            row("kurtosis", &|c| opt(c.kurtosis, &|v| format!("{v:.2}"))),
            row("solo split factor", &|c| {
                c.solo
                    .as_ref()
                    .map_or(NA.into(), |s| s.feature_name.clone())
            }),
            row("1st split", &|c| {
                c.solo
                    .as_ref()
                    .map_or(NA.into(), |s| round_bp10(s.threshold))
            }),
            row("Solo tree balance", &|c| {
                c.solo.as_ref().map_or(NA.into(), |s| s.balance.display())
            }),
            row("solo leaf ER (L / R)", &|c| {
                c.solo.as_ref().map_or(NA.into(), |s| leaf_er(s, &c.ticker))
            }),
            row("joint split factor", &|c| {
                c.joint
                    .as_ref()
                    .map_or(NA.into(), |s| s.feature_name.clone())
            }),
            row("Joint tree balance", &|c| {
                c.joint.as_ref().map_or(NA.into(), |s| s.balance.display())
            }),
            row("1st Joint split", &|c| {
                c.joint
                    .as_ref()
                    .map_or(NA.into(), |s| round_bp10(s.threshold))
            }),
            row("joint leaf ER (L / R)", &|c| {
                c.joint
                    .as_ref()
                    .map_or(NA.into(), |s| leaf_er(s, &c.ticker))
            }),
            row(&format!("joint leaf ER {anchor} (L / R)"), &|c| {
                c.joint.as_ref().map_or(NA.into(), |s| leaf_er(s, anchor))
            }),
            row("joint drop share", &|c| {
                c.joint.as_ref().map_or(NA.into(), |s| {
                    s.per_target
                        .iter()
                        .map(|t| format!("{} {:.2}", t.ticker, t.dominance_share))
                        .collect::<Vec<_>>()
                        .join(" / ")
                })
            }),
        ]
    }

    pub fn to_text(&self) -> String {
        let grid = self.grid();
        let widths: Vec<usize> = (0..grid[0].len())
            .map(|j| grid.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, r) in grid.iter().enumerate() {
            let cells: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(j, cell)| {
                    if j == 0 {
                        format!("{cell:<w$}", w = widths[j])
                    } else {
                        format!("{cell:>w$}", w = widths[j])
                    }
                })
                .collect();
            let line = if i == 0 {
                cells[1..]
                    .iter()
                    .fold(format!("{:<w$}", "", w = widths[0]), |acc, c| {
                        acc + "  " + c
                    })
            } else {
                cells.join("  ")
            };
            out.push_str(line.trim_end());
            out.push('\n');
        }
        let _ = writeln!(out, "n = {}, anchor = {}", self.n, self.anchor);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for r in self.grid() {
            wtr.write_record(&r).expect("writing to memory");
        }
        String::from_utf8(wtr.into_inner().expect("flush to memory")).expect("utf8 csv")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serialization cannot fail")
    }
}
