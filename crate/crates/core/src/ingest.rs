//! Price and factor file parsing, return computation and date alignment.
//!
//! Everything is stored in decimal fractions (0.01 = 1%). Percent-unit
//! factor files are converted on read.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DatasetError};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: unparseable date `{value}`")]
    BadDate { line: u64, value: String },
    #[error("line {line}: unparseable price `{value}`")]
    BadPrice { line: u64, value: String },
    #[error("line {line}: non-positive price {value}")]
    NonPositivePrice { line: u64, value: f64 },
    #[error("duplicate date {0}")]
    DuplicateDate(NaiveDate),
    #[error("need at least 2 prices to compute returns, got {0}")]
    TooShort(usize),
    #[error("no header row naming {0} found")]
    HeaderNotFound(String),
    #[error("line {line}: {reason}")]
    BadRow { line: usize, reason: String },
    #[error("data section is empty")]
    EmptyPanel,
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no dates common to all inputs{0}")]
    EmptyIntersection(String),
    #[error("invalid date range: start {start} is after end {end}")]
    InvalidRange { start: NaiveDate, end: NaiveDate },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub adjusted_close: f64,
}

/// Adjusted closing prices for one symbol, ascending by date.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub symbol: String,
    pub observations: Vec<PricePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnPoint {
    pub date: NaiveDate,
    pub value: f64,
}

/// Simple daily returns for one symbol, ascending by date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub symbol: String,
    pub observations: Vec<ReturnPoint>,
}

impl ReturnSeries {
    pub fn values(&self) -> Vec<f64> {
        self.observations.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorObservation {
    pub date: NaiveDate,
    pub mex: f64,
    pub smb: f64,
    pub hml: f64,
    pub rf: f64,
}

/// Daily factor returns in decimal fractions, ascending by date.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPanel {
    observations: Vec<FactorObservation>,
}

impl FactorPanel {
    pub fn new(mut observations: Vec<FactorObservation>) -> Result<Self> {
        observations.sort_by_key(|o| o.date);
        if let Some(w) = observations.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(IngestError::DuplicateDate(w[0].date));
        }
        Ok(Self { observations })
    }

    /// Build a panel from separately computed columns sharing one date axis.
    pub fn from_columns(
        dates: &[NaiveDate],
        mex: &[f64],
        smb: &[f64],
        hml: &[f64],
        rf: &[f64],
    ) -> Result<Self> {
        for len in [mex.len(), smb.len(), hml.len(), rf.len()] {
            if len != dates.len() {
                return Err(IngestError::LengthMismatch {
                    left: dates.len(),
                    right: len,
                });
            }
        }
        let observations = (0..dates.len())
            .map(|i| FactorObservation {
                date: dates[i],
                mex: mex[i],
                smb: smb[i],
                hml: hml[i],
                rf: rf[i],
            })
            .collect();
        Self::new(observations)
    }

    pub fn observations(&self) -> &[FactorObservation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Risk-free rate for each requested date, or `None` if any is missing.
    pub fn rf_on(&self, dates: &[NaiveDate]) -> Option<Vec<f64>> {
        let by_date: HashMap<NaiveDate, f64> =
            self.observations.iter().map(|o| (o.date, o.rf)).collect();
        dates.iter().map(|d| by_date.get(d).copied()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixPortfolioObservation {
    pub date: NaiveDate,
    pub small_value: f64,
    pub small_neutral: f64,
    pub small_growth: f64,
    pub big_value: f64,
    pub big_neutral: f64,
    pub big_growth: f64,
}

/// The 2x3 size/book-to-market value-weight portfolios.
#[derive(Debug, Clone, PartialEq)]
pub struct SixPortfolioPanel {
    observations: Vec<SixPortfolioObservation>,
}

impl SixPortfolioPanel {
    pub fn new(mut observations: Vec<SixPortfolioObservation>) -> Result<Self> {
        observations.sort_by_key(|o| o.date);
        if let Some(w) = observations.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(IngestError::DuplicateDate(w[0].date));
        }
        Ok(Self { observations })
    }

    pub fn observations(&self) -> &[SixPortfolioObservation] {
        &self.observations
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.observations.iter().map(|o| o.date).collect()
    }
}

/// Units used by a factor file's data section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorUnit {
    #[default]
    Percent,
    Decimal,
}

impl FactorUnit {
    /// Decimal value of a numeric field. Percent fields are shifted in
    /// decimal text, so `0.55` becomes the double nearest `0.0055` rather
    /// than `0.55 / 100`.
    fn scale(self, field: &str) -> Option<f64> {
        match self {
            FactorUnit::Decimal => field.parse().ok(),
            FactorUnit::Percent if field.contains(['e', 'E']) => {
                field.parse::<f64>().ok().map(|v| v / 100.0)
            }
            FactorUnit::Percent => format!("{field}e-2").parse().ok(),
        }
    }
}

impl FromStr for FactorUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "percent" => Ok(FactorUnit::Percent),
            "decimal" => Ok(FactorUnit::Decimal),
            other => Err(format!("unknown factor unit `{other}` (percent|decimal)")),
        }
    }
}

/// Column names for [`parse_price_csv`].
#[derive(Debug, Clone)]
pub struct PriceCsvOptions {
    pub date_column: String,
    pub price_column: String,
    pub delimiter: u8,
}

impl Default for PriceCsvOptions {
    fn default() -> Self {
        Self {
            date_column: "Date".into(),
            price_column: "Adj Close".into(),
            delimiter: b',',
        }
    }
}

/// Parse a delimited price file with ISO dates.
///
/// Unparseable or non-positive prices are errors, never skipped rows.
pub fn parse_price_csv<R: Read>(
    raw: R,
    symbol: &str,
    options: &PriceCsvOptions,
) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .from_reader(raw);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let date_idx = find(&options.date_column)?;
    let price_idx = find(&options.price_column)?;

    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let raw_date = record.get(date_idx).unwrap_or("");
        let date =
            NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|_| IngestError::BadDate {
                line,
                value: raw_date.to_string(),
            })?;
        let raw_price = record.get(price_idx).unwrap_or("");
        let price: f64 = raw_price.parse().map_err(|_| IngestError::BadPrice {
            line,
            value: raw_price.to_string(),
        })?;
        if !price.is_finite() {
            return Err(IngestError::BadPrice {
                line,
                value: raw_price.to_string(),
            });
        }
        if price <= 0.0 {
            return Err(IngestError::NonPositivePrice { line, value: price });
        }
        observations.push(PricePoint {
            date,
            adjusted_close: price,
        });
    }
    observations.sort_by_key(|p| p.date);
    if let Some(w) = observations.windows(2).find(|w| w[0].date == w[1].date) {
        return Err(IngestError::DuplicateDate(w[0].date));
    }
    Ok(PriceSeries {
        symbol: symbol.to_string(),
        observations,
    })
}

/// Close-to-close simple returns, each attributed to the later date.
pub fn compute_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    let obs = &prices.observations;
    if obs.len() < 2 {
        return Err(IngestError::TooShort(obs.len()));
    }
    let observations = obs
        .windows(2)
        .map(|w| ReturnPoint {
            date: w[1].date,
            value: w[1].adjusted_close / w[0].adjusted_close - 1.0,
        })
        .collect();
    Ok(ReturnSeries {
        symbol: prices.symbol.clone(),
        observations,
    })
}

/// Market excess return: pointwise `market - rf`.
pub fn compute_mex(market: &[f64], rf: &[f64]) -> Result<Vec<f64>> {
    if market.len() != rf.len() {
        return Err(IngestError::LengthMismatch {
            left: market.len(),
            right: rf.len(),
        });
    }
    Ok(market.iter().zip(rf).map(|(m, r)| m - r).collect())
}

/// Small minus big: mean of the three small portfolios minus mean of the three big ones.
pub fn compute_smb(panel: &SixPortfolioPanel) -> Vec<f64> {
    panel
        .observations
        .iter()
        .map(|o| {
            (o.small_value + o.small_neutral + o.small_growth) / 3.0
                - (o.big_value + o.big_neutral + o.big_growth) / 3.0
        })
        .collect()
}

/// High minus low: mean of the two value portfolios minus mean of the two growth ones.
pub fn compute_hml(panel: &SixPortfolioPanel) -> Vec<f64> {
    panel
        .observations
        .iter()
        .map(|o| (o.small_value + o.big_value) / 2.0 - (o.small_growth + o.big_growth) / 2.0)
        .collect()
}

/// Missing-value sentinels used by the French data library.
const MISSING_SENTINELS: [f64; 2] = [-99.99, -999.0];

/// Locate the first header row naming every `required` column, then read
/// date-keyed rows until the section ends. Returns values in `required`
/// order, unscaled.
fn parse_french_section(
    raw: &str,
    required: &[&str],
    unit: FactorUnit,
) -> Result<Vec<(NaiveDate, Vec<f64>)>> {
    let lines: Vec<&str> = raw
        .trim_start_matches('\u{feff}')
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .collect();

    let mut header: Option<(usize, Vec<usize>)> = None;
    for (i, line) in lines.iter().enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let positions: Option<Vec<usize>> = required
            .iter()
            .map(|name| fields.iter().position(|f| f.eq_ignore_ascii_case(name)))
            .collect();
        if let Some(positions) = positions {
            header = Some((i, positions));
            break;
        }
    }
    let (header_line, positions) =
        header.ok_or_else(|| IngestError::HeaderNotFound(required.join(", ")))?;

    let mut rows = Vec::new();
    for (offset, line) in lines[header_line + 1..].iter().enumerate() {
        let line_no = header_line + offset + 2;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let key = fields[0];
        if !key.starts_with(|c: char| c.is_ascii_digit()) {
            // Blank separator or copyright footer; a leading blank line right
            // after the header is tolerated.
            if rows.is_empty() && key.is_empty() && fields.len() == 1 {
                continue;
            }
            break;
        }
        let bad = |reason: String| IngestError::BadRow {
            line: line_no,
            reason,
        };
        if key.len() != 8 || !key.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad(format!("expected YYYYMMDD date key, got `{key}`")));
        }
        let date = NaiveDate::parse_from_str(key, "%Y%m%d")
            .map_err(|_| bad(format!("invalid date `{key}`")))?;
        let mut values = Vec::with_capacity(positions.len());
        for (&pos, name) in positions.iter().zip(required) {
            let field = fields
                .get(pos)
                .copied()
                .filter(|f| !f.is_empty())
                .ok_or_else(|| bad(format!("missing value for {name}")))?;
            let value: f64 = field
                .parse()
                .map_err(|_| bad(format!("bad number `{field}` for {name}")))?;
            if !value.is_finite() || MISSING_SENTINELS.contains(&value) {
                return Err(bad(format!("missing value `{field}` for {name}")));
            }
            values.push(unit.scale(field).expect("field already parsed"));
        }
        rows.push((date, values));
    }
    if rows.is_empty() {
        return Err(IngestError::EmptyPanel);
    }
    Ok(rows)
}

fn read_text<R: Read>(mut raw: R) -> Result<String> {
    let mut buf = Vec::new();
    raw.read_to_end(&mut buf)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

/// Parse a Ken-French-style daily research factors file (`Mkt-RF, SMB, HML, RF`).
pub fn parse_factor_file<R: Read>(raw: R, unit: FactorUnit) -> Result<FactorPanel> {
    let text = read_text(raw)?;
    let rows = parse_french_section(&text, &["Mkt-RF", "SMB", "HML", "RF"], unit)?;
    let observations = rows
        .into_iter()
        .map(|(date, v)| FactorObservation {
            date,
            mex: v[0],
            smb: v[1],
            hml: v[2],
            rf: v[3],
        })
        .collect();
    FactorPanel::new(observations)
}

/// Parse the first (value-weighted) section of a 2x3 size/book-to-market
/// daily portfolio file.
pub fn parse_six_portfolio_file<R: Read>(raw: R, unit: FactorUnit) -> Result<SixPortfolioPanel> {
    let text = read_text(raw)?;
    let rows = parse_french_section(
        &text,
        &[
            "SMALL HiBM",
            "ME1 BM2",
            "SMALL LoBM",
            "BIG HiBM",
            "ME2 BM2",
            "BIG LoBM",
        ],
        unit,
    )?;
    let observations = rows
        .into_iter()
        .map(|(date, v)| SixPortfolioObservation {
            date,
            small_value: v[0],
            small_neutral: v[1],
            small_growth: v[2],
            big_value: v[3],
            big_neutral: v[4],
            big_growth: v[5],
        })
        .collect();
    SixPortfolioPanel::new(observations)
}

/// Number of a source's dates that did not make it into the aligned dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceDrop {
    pub source: String,
    pub available: usize,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct Alignment {
    pub dataset: Dataset,
    pub dropped: Vec<SourceDrop>,
}

/// Strict inner join of the factor panel and every return series on date,
/// optionally limited to an inclusive date range.
pub fn align(
    returns: &[ReturnSeries],
    factors: &FactorPanel,
    date_range: Option<(NaiveDate, NaiveDate)>,
) -> Result<Alignment> {
    if let Some((start, end)) = date_range {
        if start > end {
            return Err(IngestError::InvalidRange { start, end });
        }
    }
    if factors.is_empty() {
        return Err(IngestError::EmptyPanel);
    }
    if returns.is_empty() {
        return Err(DatasetError::NoTargets.into());
    }

    let mut common: BTreeSet<NaiveDate> = factors.observations.iter().map(|o| o.date).collect();
    let lookups: Vec<HashMap<NaiveDate, f64>> = returns
        .iter()
        .map(|s| s.observations.iter().map(|p| (p.date, p.value)).collect())
        .collect();
    for lookup in &lookups {
        common.retain(|d| lookup.contains_key(d));
    }
    if let Some((start, end)) = date_range {
        common.retain(|d| *d >= start && *d <= end);
    }
    if common.is_empty() {
        let range = date_range
            .map(|(s, e)| format!(" within {s}..={e}"))
            .unwrap_or_default();
        return Err(IngestError::EmptyIntersection(range));
    }

    let dates: Vec<NaiveDate> = common.into_iter().collect();
    let factor_rows: HashMap<NaiveDate, &FactorObservation> =
        factors.observations.iter().map(|o| (o.date, o)).collect();
    let mut features: [Vec<f64>; 3] = Default::default();
    for date in &dates {
        let o = factor_rows[date];
        features[0].push(o.mex);
        features[1].push(o.smb);
        features[2].push(o.hml);
    }
    let targets: Vec<Vec<f64>> = lookups
        .iter()
        .map(|lookup| dates.iter().map(|d| lookup[d]).collect())
        .collect();
    let names: Vec<String> = returns.iter().map(|s| s.symbol.clone()).collect();

    let n = dates.len();
    let mut dropped = vec![SourceDrop {
        source: "factors".into(),
        available: factors.len(),
        dropped: factors.len() - n,
    }];
    dropped.extend(returns.iter().map(|s| SourceDrop {
        source: s.symbol.clone(),
        available: s.observations.len(),
        dropped: s.observations.len() - n,
    }));

    let dataset = Dataset::new(dates, features, targets, names)?;
    Ok(Alignment { dataset, dropped })
}
