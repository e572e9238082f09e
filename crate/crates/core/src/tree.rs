//! Depth-limited regression trees over the three factor columns.
//!
//! A node's samples are split into `x[feature] < threshold` (left) and the
//! rest (right). Every split point between consecutive distinct feature
//! values is considered and the one with the smallest summed squared error
//! of the two children wins. With several targets the cost is the plain sum
//! of the per-target costs, so one tree is fit jointly to all of them.
//!
//! Split search sorts the node once per feature and sweeps the sorted rows
//! with running sums of the (node-centered) targets and their squares,
//! which makes each feature scan linear after the sort. The winning split's
//! cost is then recomputed exactly with a two-pass sum over both children.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Factor, N_FACTORS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeError {
    #[error("node has no samples")]
    EmptyNode,
    #[error("split leaves {left_count} / {right_count} samples, need at least {min_samples_leaf} on each side")]
    DegenerateSplit {
        left_count: usize,
        right_count: usize,
        min_samples_leaf: usize,
    },
    #[error("target columns have different lengths")]
    RaggedTargets,
    #[error("invalid fit config: {0}")]
    InvalidConfig(String),
    #[error("malformed tree json: {0}")]
    Json(String),
}

pub type Result<T, E = TreeError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_cost_drop: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_depth: 1,
            min_samples_leaf: 1,
            min_cost_drop: 0.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(TreeError::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(TreeError::InvalidConfig(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        if self.min_cost_drop.is_nan() || self.min_cost_drop < 0.0 {
            return Err(TreeError::InvalidConfig(
                "min_cost_drop must be a finite value >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// A scored `(feature, threshold)` split of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: Factor,
    pub threshold: f64,
    pub left_count: usize,
    pub right_count: usize,
    /// Sum over targets of the two children's squared errors.
    pub cost: f64,
}

mod factor_index {
    use super::Factor;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(f: &Factor, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(f.index() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Factor, D::Error> {
        let i = u64::deserialize(d)?;
        Factor::from_index(i as usize)
            .ok_or_else(|| D::Error::custom(format!("feature index {i} out of range")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Internal {
        #[serde(with = "factor_index")]
        feature: Factor,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        prediction: Vec<f64>,
        count: usize,
        sse: f64,
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Number of training samples that reached this node.
    pub fn count(&self) -> usize {
        match self {
            TreeNode::Leaf { count, .. } => *count,
            TreeNode::Internal { left, right, .. } => left.count() + right.count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Leaf { .. } => out.push(node),
                TreeNode::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }
}

/// A fitted regression tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: TreeNode,
    pub target_names: Vec<String>,
    pub config: FitConfig,
    pub total_sse_before: f64,
    pub total_sse_after: f64,
}

impl Tree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_samples(&self) -> usize {
        self.root.count()
    }

    /// Leaf mean vector for a factor triple `[mex, smb, hml]`.
    pub fn predict(&self, x: &[f64; N_FACTORS]) -> &[f64] {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return prediction,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[feature.index()] < *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// The root split, if the root is an internal node.
    pub fn root_split(&self) -> Option<(Factor, f64)> {
        match &self.root {
            TreeNode::Internal {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serialization cannot fail")
    }

    pub fn from_json(raw: &str) -> Result<Tree> {
        serde_json::from_str(raw).map_err(|e| TreeError::Json(e.to_string()))
    }
}

fn column_sse_rows(column: &[f64], rows: &[usize]) -> f64 {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&r| column[r]).sum::<f64>() / n;
    rows.iter()
        .map(|&r| {
            let d = column[r] - mean;
            d * d
        })
        .sum()
}

fn column_mean_rows(column: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&r| column[r]).sum::<f64>() / rows.len() as f64
}

/// Mean and squared error summed in sorted order, so the result depends only
/// on the multiset of values and not on row order.
fn canonical_moments(column: &[f64], rows: &[usize]) -> (f64, f64) {
    let mut values: Vec<f64> = rows.iter().map(|&r| column[r]).collect();
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sse = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, sse)
}

/// Per-target squared error of `rows` around their own mean.
pub fn node_sse_by_target(dataset: &Dataset, rows: &[usize]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Err(TreeError::EmptyNode);
    }
    Ok(dataset
        .targets()
        .iter()
        .map(|c| column_sse_rows(c, rows))
        .collect())
}

fn rows_sse(dataset: &Dataset, rows: &[usize]) -> Result<f64> {
    Ok(node_sse_by_target(dataset, rows)?.iter().sum())
}

/// Summed squared error of a node whose target columns are given directly
/// (one slice per target, all of the node's samples).
pub fn node_sse<C: AsRef<[f64]>>(columns: &[C]) -> Result<f64> {
    let k = columns.first().map_or(0, |c| c.as_ref().len());
    if k == 0 {
        return Err(TreeError::EmptyNode);
    }
    if columns.iter().any(|c| c.as_ref().len() != k) {
        return Err(TreeError::RaggedTargets);
    }
    let rows: Vec<usize> = (0..k).collect();
    Ok(columns
        .iter()
        .map(|c| column_sse_rows(c.as_ref(), &rows))
        .sum())
}

/// A threshold strictly above `lo` and at most `hi`, so that `x < t`
/// separates the two values.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mut m = lo + (hi - lo) / 2.0;
    if !m.is_finite() {
        m = lo / 2.0 + hi / 2.0;
    }
    if m <= lo || m > hi {
        hi
    } else {
        m
    }
}

/// Midpoints between consecutive distinct values, ascending.
pub fn candidate_thresholds(feature_values: &[f64]) -> Vec<f64> {
    let mut sorted = feature_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup_by(|a, b| a == b);
    sorted.windows(2).map(|w| midpoint(w[0], w[1])).collect()
}

/// Score one split of `rows`.
pub fn split_cost(
    dataset: &Dataset,
    rows: &[usize],
    feature: Factor,
    threshold: f64,
    min_samples_leaf: usize,
) -> Result<SplitCandidate> {
    let (left, right) = dataset.partition(rows, feature, threshold);
    let min = min_samples_leaf.max(1);
    if left.len() < min || right.len() < min {
        return Err(TreeError::DegenerateSplit {
            left_count: left.len(),
            right_count: right.len(),
            min_samples_leaf: min,
        });
    }
    Ok(SplitCandidate {
        feature,
        threshold,
        left_count: left.len(),
        right_count: right.len(),
        cost: rows_sse(dataset, &left)? + rows_sse(dataset, &right)?,
    })
}

/// Candidates whose swept cost is within this fraction of the node SSE of
/// the best are re-scored exactly, so rounding in the prefix sums cannot
/// override the tie-break order.
const NEAR_TIE: f64 = 1e-9;
const MAX_RESCORED: usize = 64;

#[derive(Debug, Clone, Copy)]
struct SweptCandidate {
    cost: f64,
    threshold: f64,
}

/// Scan one feature of a node. `values` holds the node's feature values,
/// `centered` the node's targets minus the node mean, row-major with
/// `n_targets` columns; `totals` the per-target `(Σy, Σy²)` of `centered`.
/// Returns every admissible threshold in increasing order.
fn sweep_feature(
    values: &[f64],
    centered: &[f64],
    n_targets: usize,
    totals: &[(f64, f64)],
    min_leaf: usize,
) -> Vec<SweptCandidate> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut left_sum = vec![0.0; n_targets];
    let mut left_sq = vec![0.0; n_targets];
    let mut out = Vec::new();
    for pos in 0..n - 1 {
        let r = order[pos];
        let row = &centered[r * n_targets..(r + 1) * n_targets];
        for k in 0..n_targets {
            left_sum[k] += row[k];
            left_sq[k] += row[k] * row[k];
        }
        let n_left = pos + 1;
        let n_right = n - n_left;
        if n_right < min_leaf {
            break;
        }
        let lo = values[r];
        let hi = values[order[pos + 1]];
        if n_left < min_leaf || lo >= hi {
            continue;
        }
        let (nl, nr) = (n_left as f64, n_right as f64);
        let mut cost = 0.0;
        for k in 0..n_targets {
            let (sum, sq) = totals[k];
            let (ls, lq) = (left_sum[k], left_sq[k]);
            let (rs, rq) = (sum - ls, sq - lq);
            cost += (lq - ls * ls / nl).max(0.0) + (rq - rs * rs / nr).max(0.0);
        }
        out.push(SweptCandidate {
            cost,
            threshold: midpoint(lo, hi),
        });
    }
    out
}

/// Lowest-cost split of `rows` over every feature and candidate threshold.
///
/// Ties go to the lower feature index, then the smaller threshold. Returns
/// `None` when no feature varies, the node is too small for two leaves, or
/// the best drop in cost is below `config.min_cost_drop`.
pub fn best_split(dataset: &Dataset, rows: &[usize], config: &FitConfig) -> Option<SplitCandidate> {
    let min_leaf = config.min_samples_leaf.max(1);
    let n = rows.len();
    if n < 2 * min_leaf {
        return None;
    }
    let n_targets = dataset.n_targets();
    let means: Vec<f64> = dataset
        .targets()
        .iter()
        .map(|c| column_mean_rows(c, rows))
        .collect();
    let mut centered = Vec::with_capacity(n * n_targets);
    for &r in rows {
        for (k, column) in dataset.targets().iter().enumerate() {
            centered.push(column[r] - means[k]);
        }
    }
    let mut totals = vec![(0.0, 0.0); n_targets];
    for row in centered.chunks_exact(n_targets) {
        for (t, v) in totals.iter_mut().zip(row) {
            t.0 += v;
            t.1 += v * v;
        }
    }

    let per_feature: Vec<Vec<SweptCandidate>> = Factor::ALL
        .par_iter()
        .map(|&f| {
            let column = dataset.feature(f);
            let values: Vec<f64> = rows.iter().map(|&r| column[r]).collect();
            sweep_feature(&values, &centered, n_targets, &totals, min_leaf)
        })
        .collect();

    let swept_min = per_feature
        .iter()
        .flatten()
        .map(|c| c.cost)
        .fold(f64::INFINITY, f64::min);
    if !swept_min.is_finite() {
        return None;
    }
    let node = rows_sse(dataset, rows).ok()?;
    let cutoff = swept_min + NEAR_TIE * node;
    let mut shortlist: Vec<(Factor, SweptCandidate)> = Factor::ALL
        .into_iter()
        .zip(&per_feature)
        .flat_map(|(f, cands)| {
            cands
                .iter()
                .filter(|c| c.cost <= cutoff)
                .map(move |c| (f, *c))
        })
        .collect();
    if shortlist.len() > MAX_RESCORED {
        shortlist.sort_by(|a, b| a.1.cost.total_cmp(&b.1.cost));
        shortlist.truncate(MAX_RESCORED);
        shortlist.sort_by(|a, b| {
            (a.0.index(), a.1.threshold)
                .partial_cmp(&(b.0.index(), b.1.threshold))
                .expect("finite thresholds")
        });
    }

    let mut winner: Option<SplitCandidate> = None;
    for (feature, c) in shortlist {
        let exact = split_cost(dataset, rows, feature, c.threshold, min_leaf).ok()?;
        if winner.as_ref().is_none_or(|w| exact.cost < w.cost) {
            winner = Some(exact);
        }
    }
    let candidate = winner?;
    if node - candidate.cost < config.min_cost_drop {
        return None;
    }
    Some(candidate)
}

fn leaf(dataset: &Dataset, rows: &[usize]) -> TreeNode {
    let moments: Vec<(f64, f64)> = dataset
        .targets()
        .iter()
        .map(|c| canonical_moments(c, rows))
        .collect();
    TreeNode::Leaf {
        prediction: moments.iter().map(|m| m.0).collect(),
        count: rows.len(),
        sse: moments.iter().map(|m| m.1).sum(),
    }
}

fn grow(dataset: &Dataset, rows: &[usize], depth: usize, config: &FitConfig) -> TreeNode {
    if depth >= config.max_depth || rows_sse(dataset, rows).unwrap_or(0.0) <= 0.0 {
        return leaf(dataset, rows);
    }
    match best_split(dataset, rows, config) {
        None => leaf(dataset, rows),
        Some(split) => {
            let (left_rows, right_rows) = dataset.partition(rows, split.feature, split.threshold);
            TreeNode::Internal {
                feature: split.feature,
                threshold: split.threshold,
                left: Box::new(grow(dataset, &left_rows, depth + 1, config)),
                right: Box::new(grow(dataset, &right_rows, depth + 1, config)),
            }
        }
    }
}

/// Grow a tree greedily from the root until `max_depth`, a pure node, or no
/// admissible split.
pub fn fit(dataset: &Dataset, config: &FitConfig) -> Result<Tree> {
    config.validate()?;
    let rows: Vec<usize> = (0..dataset.len()).collect();
    let total_sse_before = dataset
        .targets()
        .iter()
        .map(|c| canonical_moments(c, &rows).1)
        .sum();
    let root = grow(dataset, &rows, 0, config);
    let total_sse_after = root
        .leaves()
        .iter()
        .map(|l| match l {
            TreeNode::Leaf { sse, .. } => *sse,
            TreeNode::Internal { .. } => unreachable!(),
        })
        .sum();
    Ok(Tree {
        root,
        target_names: dataset.target_names().to_vec(),
        config: *config,
        total_sse_before,
        total_sse_after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    pub(crate) fn dataset(features: [Vec<f64>; 3], targets: Vec<Vec<f64>>) -> Dataset {
        let n = features[0].len();
        let start = NaiveDate::from_ymd_opt(2015, 5, 1).unwrap();
        let dates = (0..n)
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        let names = (0..targets.len()).map(|i| format!("T{i}")).collect();
        Dataset::new(dates, features, targets, names).unwrap()
    }

    fn separable() -> Dataset {
        dataset(
            [vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4], vec![0.0; 4]],
            vec![vec![0.0, 0.0, 10.0, 10.0]],
        )
    }

    #[test]
    fn node_sse_examples() {
        assert_eq!(node_sse(&[vec![3.5], vec![-1.0]]).unwrap(), 0.0);
        // mean 5, four deviations of ±5
        assert_eq!(node_sse(&[vec![0.0, 0.0, 10.0, 10.0]]).unwrap(), 100.0);
        assert_eq!(node_sse(&[vec![0.0, 2.0], vec![0.0, 2.0]]).unwrap(), 4.0);
        assert_eq!(node_sse::<Vec<f64>>(&[vec![]]), Err(TreeError::EmptyNode));
        assert_eq!(
            node_sse(&[vec![1.0], vec![1.0, 2.0]]),
            Err(TreeError::RaggedTargets)
        );
    }

    #[test]
    fn thresholds_are_distinct_midpoints() {
        assert_eq!(candidate_thresholds(&[0.0, 1.0, 2.0, 3.0]), [0.5, 1.5, 2.5]);
        assert!(candidate_thresholds(&[1.0, 1.0, 1.0]).is_empty());
        assert_eq!(candidate_thresholds(&[3.0, 1.0, 1.0, 2.0]), [1.5, 2.5]);
        assert!(candidate_thresholds(&[-0.0, 0.0]).is_empty());
    }

    #[test]
    fn midpoint_separates_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(lo < m && m <= hi);
        assert_eq!(midpoint(-f64::MAX, f64::MAX), 0.0);
    }

    #[test]
    fn split_cost_examples() {
        let ds = separable();
        let rows = [0, 1, 2, 3];
        let c = split_cost(&ds, &rows, Factor::Mex, 1.5, 1).unwrap();
        assert_eq!((c.cost, c.left_count, c.right_count), (0.0, 2, 2));

        // right child (0, 10, 10): mean 20/3, SSE = 400/9 + 2·100/9 = 200/3
        let c = split_cost(&ds, &rows, Factor::Mex, 0.5, 1).unwrap();
        assert_eq!((c.left_count, c.right_count), (1, 3));
        assert!((c.cost - 200.0 / 3.0).abs() < 1e-12);

        let joint = dataset(
            [vec![0.0, 1.0, 2.0, 3.0], vec![0.0; 4], vec![0.0; 4]],
            vec![vec![0.0, 0.0, 10.0, 10.0], vec![10.0, 10.0, 0.0, 0.0]],
        );
        assert_eq!(
            split_cost(&joint, &rows, Factor::Mex, 1.5, 1).unwrap().cost,
            0.0
        );

        assert!(matches!(
            split_cost(&ds, &rows, Factor::Mex, -1.0, 1),
            Err(TreeError::DegenerateSplit { left_count: 0, .. })
        ));
        assert!(matches!(
            split_cost(&ds, &rows, Factor::Mex, 0.5, 2),
            Err(TreeError::DegenerateSplit { left_count: 1, .. })
        ));
    }

    #[test]
    fn best_split_picks_informative_feature() {
        let ds = dataset(
            [vec![-1.0, 0.0, 1.0, 2.0], vec![0.0; 4], vec![0.0; 4]],
            vec![vec![0.0, 0.0, 10.0, 10.0]],
        );
        let c = best_split(&ds, &[0, 1, 2, 3], &FitConfig::default()).unwrap();
        assert_eq!((c.feature, c.threshold, c.cost), (Factor::Mex, 0.5, 0.0));

        let flat = dataset(
            [vec![1.0; 4], vec![2.0; 4], vec![3.0; 4]],
            vec![vec![0.0, 1.0, 2.0, 3.0]],
        );
        assert_eq!(
            best_split(&flat, &[0, 1, 2, 3], &FitConfig::default()),
            None
        );
    }

    #[test]
    fn best_split_respects_min_leaf_and_min_drop() {
        let ds = dataset(
            [
                vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
                vec![0.0; 6],
                vec![0.0; 6],
            ],
            vec![vec![-10.0, 0.0, 0.0, 0.0, 0.0, 0.0]],
        );
        let rows: Vec<usize> = (0..6).collect();
        let free = best_split(&ds, &rows, &FitConfig::default()).unwrap();
        assert_eq!(free.left_count, 1);
        let floored = FitConfig {
            min_samples_leaf: 2,
            ..FitConfig::default()
        };
        let c = best_split(&ds, &rows, &floored).unwrap();
        assert_eq!((c.left_count, c.right_count), (2, 4));
        let too_big = FitConfig {
            min_samples_leaf: 4,
            ..FitConfig::default()
        };
        assert_eq!(best_split(&ds, &rows, &too_big), None);
        let strict = FitConfig {
            min_cost_drop: 1e6,
            ..FitConfig::default()
        };
        assert_eq!(best_split(&ds, &rows, &strict), None);
    }

    #[test]
    fn ties_go_to_lowest_feature_then_smallest_threshold() {
        // every feature separates identically; two thresholds on mex tie
        let ds = dataset(
            [
                vec![0.0, 1.0, 2.0, 3.0],
                vec![0.0, 1.0, 2.0, 3.0],
                vec![0.0, 1.0, 2.0, 3.0],
            ],
            vec![vec![1.0, 0.0, 0.0, 1.0]],
        );
        let c = best_split(&ds, &[0, 1, 2, 3], &FitConfig::default()).unwrap();
        assert_eq!(c.feature, Factor::Mex);
        assert_eq!(c.threshold, 0.5);
    }

    #[test]
    fn fit_separable_stump() {
        let ds = dataset(
            [vec![-1.0, 0.0, 1.0, 2.0], vec![0.0; 4], vec![0.0; 4]],
            vec![vec![0.0, 0.0, 10.0, 10.0]],
        );
        let tree = fit(&ds, &FitConfig::default()).unwrap();
        match &tree.root {
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                assert_eq!((*feature, *threshold), (Factor::Mex, 0.5));
                assert_eq!(
                    **left,
                    TreeNode::Leaf {
                        prediction: vec![0.0],
                        count: 2,
                        sse: 0.0
                    }
                );
                assert_eq!(
                    **right,
                    TreeNode::Leaf {
                        prediction: vec![10.0],
                        count: 2,
                        sse: 0.0
                    }
                );
            }
            TreeNode::Leaf { .. } => panic!("expected a split"),
        }
        assert_eq!(tree.total_sse_before, 100.0);
        assert_eq!(tree.total_sse_after, 0.0);
        assert_eq!(tree.predict(&[-5.0, 0.0, 0.0]), [0.0]);
        assert_eq!(tree.predict(&[0.5, 0.0, 0.0]), [10.0]);
        assert_eq!(tree.predict(&[0.4999, 0.0, 0.0]), [0.0]);
    }

    #[test]
    fn constant_targets_give_single_leaf() {
        let ds = dataset(
            [vec![0.0, 1.0, 2.0], vec![3.0, 1.0, 2.0], vec![0.0; 3]],
            vec![vec![0.02; 3], vec![-0.01; 3]],
        );
        let tree = fit(&ds, &FitConfig::default()).unwrap();
        assert_eq!(
            tree.root,
            TreeNode::Leaf {
                prediction: vec![0.02, -0.01],
                count: 3,
                sse: 0.0
            }
        );
        assert_eq!(tree.predict(&[100.0, -3.0, 1.0]), [0.02, -0.01]);
    }

    #[test]
    fn deeper_trees_respect_max_depth() {
        let x: Vec<f64> = (0..16).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| (v * 0.7).sin()).collect();
        let ds = dataset(
            [x.clone(), x.iter().map(|v| -v).collect(), vec![0.0; 16]],
            vec![y],
        );
        for depth in 1..=4 {
            let cfg = FitConfig {
                max_depth: depth,
                ..FitConfig::default()
            };
            let tree = fit(&ds, &cfg).unwrap();
            assert!(tree.depth() <= depth);
            assert_eq!(tree.n_samples(), 16);
            assert!(tree.total_sse_after <= tree.total_sse_before);
        }
        let deep = fit(
            &ds,
            &FitConfig {
                max_depth: 10,
                ..FitConfig::default()
            },
        )
        .unwrap();
        assert!(deep.total_sse_after.abs() < 1e-24);
    }

    #[test]
    fn invalid_config_rejected() {
        let ds = separable();
        let bad = FitConfig {
            max_depth: 0,
            ..FitConfig::default()
        };
        assert!(matches!(fit(&ds, &bad), Err(TreeError::InvalidConfig(_))));
        let bad = FitConfig {
            min_cost_drop: f64::NAN,
            ..FitConfig::default()
        };
        assert!(matches!(fit(&ds, &bad), Err(TreeError::InvalidConfig(_))));
    }

    #[test]
    fn json_shape() {
        let tree = fit(&separable(), &FitConfig::default()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&tree.to_json()).unwrap();
        assert_eq!(v["root"]["feature"], 0);
        assert_eq!(v["root"]["threshold"], 1.5);
        assert_eq!(v["root"]["left"]["prediction"][0], 0.0);
        assert_eq!(v["root"]["right"]["count"], 2);
        assert_eq!(Tree::from_json(&tree.to_json()).unwrap(), tree);
        assert!(Tree::from_json(r#"{"root":{"feature":7}}"#).is_err());
    }
}
