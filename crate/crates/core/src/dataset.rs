//! Date-aligned feature/target matrix shared by every fitting stage.
//!
//! Features are always the three factors in the fixed order `mex, smb, hml`.
//! Targets are one column per ticker. Storage is column-major so a split
//! search can walk one column at a time.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Number of factor columns in every dataset.
pub const N_FACTORS: usize = 3;

/// One of the three Fama-French factors, in feature-column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    /// Market return in excess of the risk-free rate.
    Mex,
    /// Small minus big.
    Smb,
    /// High minus low book-to-market.
    Hml,
}

impl Factor {
    pub const ALL: [Factor; N_FACTORS] = [Factor::Mex, Factor::Smb, Factor::Hml];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Factor> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Factor::Mex => "mex",
            Factor::Smb => "smb",
            Factor::Hml => "hml",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Factor {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mex" | "mkt-rf" => Ok(Factor::Mex),
            "smb" => Ok(Factor::Smb),
            "hml" => Ok(Factor::Hml),
            other => Err(DatasetError::Format(format!("unknown factor `{other}`"))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("dataset needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("dataset needs at least one target column")]
    NoTargets,
    #[error("column `{name}` has {actual} rows, expected {expected}")]
    RaggedColumn {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("dates must be strictly increasing (at row {0})")]
    UnorderedDates(usize),
    #[error("non-finite value in column `{name}` at row {row}")]
    NonFinite { name: String, row: usize },
    #[error("duplicate target name `{0}`")]
    DuplicateTarget(String),
    #[error("unknown ticker `{0}`")]
    UnknownTicker(String),
    #[error("malformed dataset csv: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Aligned factors and targets.
///
/// Invariants: every column has `dates.len()` rows, there are at least two
/// rows and one target, dates are strictly increasing and all values are
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dates: Vec<NaiveDate>,
    features: [Vec<f64>; N_FACTORS],
    targets: Vec<Vec<f64>>,
    target_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        dates: Vec<NaiveDate>,
        features: [Vec<f64>; N_FACTORS],
        targets: Vec<Vec<f64>>,
        target_names: Vec<String>,
    ) -> Result<Self, DatasetError> {
        let n = dates.len();
        if n < 2 {
            return Err(DatasetError::TooFewRows(n));
        }
        if targets.is_empty() {
            return Err(DatasetError::NoTargets);
        }
        if targets.len() != target_names.len() {
            return Err(DatasetError::Format(format!(
                "{} target columns but {} names",
                targets.len(),
                target_names.len()
            )));
        }
        if let Some(i) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(DatasetError::UnorderedDates(i + 1));
        }
        for (i, name) in target_names.iter().enumerate() {
            if target_names[..i].contains(name) {
                return Err(DatasetError::DuplicateTarget(name.clone()));
            }
        }
        let columns = Factor::ALL
            .iter()
            .map(|f| (f.name(), &features[f.index()]))
            .chain(target_names.iter().map(String::as_str).zip(targets.iter()));
        for (name, column) in columns {
            if column.len() != n {
                return Err(DatasetError::RaggedColumn {
                    name: name.to_string(),
                    expected: n,
                    actual: column.len(),
                });
            }
            if let Some(row) = column.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite {
                    name: name.to_string(),
                    row,
                });
            }
        }
        Ok(Self {
            dates,
            features,
            targets,
            target_names,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    /// Always false; a dataset holds at least two rows.
    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn n_targets(&self) -> usize {
        self.targets.len()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn feature(&self, factor: Factor) -> &[f64] {
        &self.features[factor.index()]
    }

    pub fn features(&self) -> &[Vec<f64>; N_FACTORS] {
        &self.features
    }

    pub fn feature_row(&self, row: usize) -> [f64; N_FACTORS] {
        [
            self.features[0][row],
            self.features[1][row],
            self.features[2][row],
        ]
    }

    pub fn target(&self, index: usize) -> &[f64] {
        &self.targets[index]
    }

    pub fn targets(&self) -> &[Vec<f64>] {
        &self.targets
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    pub fn target_index(&self, name: &str) -> Result<usize, DatasetError> {
        self.target_names
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| DatasetError::UnknownTicker(name.to_string()))
    }

    /// Restrict the dataset to the named targets, in the order given.
    pub fn select_targets<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset, DatasetError> {
        let mut targets = Vec::with_capacity(names.len());
        let mut target_names = Vec::with_capacity(names.len());
        for name in names {
            let idx = self.target_index(name.as_ref())?;
            targets.push(self.targets[idx].clone());
            target_names.push(self.target_names[idx].clone());
        }
        Dataset::new(
            self.dates.clone(),
            self.features.clone(),
            targets,
            target_names,
        )
    }

    /// Rows whose `factor` value is strictly below `threshold`, and the rest.
    pub fn partition(
        &self,
        rows: &[usize],
        factor: Factor,
        threshold: f64,
    ) -> (Vec<usize>, Vec<usize>) {
        let column = self.feature(factor);
        rows.iter().partition(|&&r| column[r] < threshold)
    }

    /// Read the interchange CSV: `date,mex,smb,hml,<ticker...>`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let expected = ["date", "mex", "smb", "hml"];
        if header.len() < expected.len() + 1
            || header
                .iter()
                .zip(expected)
                .any(|(h, e)| !h.eq_ignore_ascii_case(e))
        {
            return Err(DatasetError::Format(format!(
                "header must start with `date,mex,smb,hml` and name at least one ticker, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let target_names: Vec<String> = header.iter().skip(4).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut features: [Vec<f64>; N_FACTORS] = Default::default();
        let mut targets = vec![Vec::new(); target_names.len()];
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|_| {
                DatasetError::Format(format!("line {line}: bad date `{}`", &record[0]))
            })?;
            dates.push(date);
            for (col, field) in record.iter().enumerate().skip(1) {
                let value: f64 = field.parse().map_err(|_| {
                    DatasetError::Format(format!("line {line}: bad number `{field}`"))
                })?;
                if col <= N_FACTORS {
                    features[col - 1].push(value);
                } else {
                    targets[col - 1 - N_FACTORS].push(value);
                }
            }
        }
        Dataset::new(dates, features, targets, target_names)
    }

    /// Write the interchange CSV. Values use the shortest representation
    /// that parses back to the same `f64`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(Factor::ALL.iter().map(|f| f.name().to_string()));
        header.extend(self.target_names.iter().cloned());
        wtr.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for row in 0..self.len() {
            record.clear();
            record.push(self.dates[row].format("%Y-%m-%d").to_string());
            record.extend(self.features.iter().map(|c| c[row].to_string()));
            record.extend(self.targets.iter().map(|c| c[row].to_string()));
            wtr.write_record(&record)?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}
