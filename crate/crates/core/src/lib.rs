//! Regression trees of bounded depth fit to daily stock returns on the three
//! Fama-French factors (market excess return, SMB, HML).
//!
//! The crate covers the whole pipeline: reading price and factor files into
//! an aligned [`Dataset`], descriptive statistics, single- and multi-target
//! tree fitting, the linear three-factor baseline, and reports on the
//! resulting splits.

pub mod dataset;
pub mod ingest;
pub mod ols;
pub mod report;
pub mod stats;
pub mod tree;

pub use dataset::{Dataset, DatasetError, Factor};
pub use ols::{fit_ols, FactorLoadings, OlsError};
pub use report::{DisplayUnit, ReplicationTable, ReportError, SplitReport, TreeFormat};
pub use stats::{describe, CovarianceMatrix, StatsError, StatsSummary};
pub use tree::{best_split, fit, FitConfig, SplitCandidate, Tree, TreeError, TreeNode};
