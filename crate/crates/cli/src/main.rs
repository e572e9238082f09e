mod args;
mod output;
mod synthetic;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::Parser;
use fftree::ingest::{self, FactorPanel, PriceCsvOptions};
use fftree::report::{render, replicate_table, split_report};
use fftree::{fit, fit_ols, Dataset, FitConfig, Tree, TreeFormat};
use fftree_client::{fetch_factor_archive, ArchiveKind, FetchConfig};

use args::{Cli, Command, Format, TreeArgs};

#[derive(Debug, thiserror::Error)]
enum CliError {
    /// Reported like a flag error: exit status 2.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] fftree::DatasetError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Tree(#[from] fftree::TreeError),
    #[error(transparent)]
    Ols(#[from] fftree::OlsError),
    #[error(transparent)]
    Stats(#[from] fftree::StatsError),
    #[error(transparent)]
    Report(#[from] fftree::ReportError),
    #[error(transparent)]
    Fetch(#[from] fftree_client::FetchError),
    #[error("{0}")]
    Data(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_dataset(path: &Path) -> Result<Dataset> {
    Ok(Dataset::read_csv(read_file(path)?.as_slice())?)
}

fn load_targets(path: &Path, targets: &[String]) -> Result<Dataset> {
    let ds = load_dataset(path)?;
    if targets.is_empty() {
        return Ok(ds);
    }
    Ok(ds.select_targets(targets)?)
}

fn date_range(
    start: Option<NaiveDate>,
    end: Option<NaiveDate>,
) -> Result<Option<(NaiveDate, NaiveDate)>> {
    match (start, end) {
        (None, None) => Ok(None),
        (s, e) => {
            let s = s.unwrap_or(NaiveDate::MIN);
            let e = e.unwrap_or(NaiveDate::MAX);
            if s > e {
                return Err(usage(format!("--start {s} is after --end {e}")));
            }
            Ok(Some((s, e)))
        }
    }
}

fn fetch_config(kind: ArchiveKind, f: &args::FetchArgs) -> FetchConfig {
    let mut cfg = FetchConfig::new(kind, f.cache_dir());
    if let Some(url) = &f.factor_url {
        cfg.url = url.clone();
    }
    cfg.timeout = Duration::from_secs(f.timeout);
    cfg.refresh = f.refresh;
    cfg
}

fn factor_panel(
    path: Option<&Path>,
    unit: ingest::FactorUnit,
    f: &args::FetchArgs,
) -> Result<FactorPanel> {
    let raw = match path {
        Some(p) => read_file(p)?,
        None => fetch_factor_archive(&fetch_config(ArchiveKind::DailyFactors, f))?,
    };
    Ok(ingest::parse_factor_file(raw.as_slice(), unit)?)
}

fn fit_config(t: &TreeArgs) -> FitConfig {
    FitConfig {
        max_depth: t.max_depth,
        min_samples_leaf: t.min_samples_leaf,
        min_cost_drop: t.min_cost_drop,
    }
}

fn only(format: Format, allowed: &[Format], command: &str) -> Result<()> {
    if allowed.contains(&format) {
        Ok(())
    } else {
        let names: Vec<String> = allowed.iter().map(|f| f.to_string()).collect();
        Err(usage(format!(
            "{command} supports --format {}",
            names.join("|")
        )))
    }
}

fn run(cli: Cli) -> Result<(String, Option<PathBuf>)> {
    match cli.command {
        Command::Fetch { kind, fetch, out } => {
            let bytes = fetch_factor_archive(&fetch_config(kind, &fetch))?;
            Ok((String::from_utf8_lossy(&bytes).into_owned(), out))
        }
        Command::Ingest(a) => {
            let text = if let Some(n) = a.synthetic {
                let tickers = if a.tickers.is_empty() {
                    vec!["A".to_string(), "B".to_string()]
                } else {
                    a.tickers.clone()
                };
                csv_text(synthetic::dataset(n, &tickers, a.seed)?)?
            } else {
                if a.prices.is_empty() {
                    return Err(usage("ingest needs --prices (or --synthetic N)"));
                }
                if !a.tickers.is_empty() && a.tickers.len() != a.prices.len() {
                    return Err(usage(format!(
                        "{} tickers given for {} price files",
                        a.tickers.len(),
                        a.prices.len()
                    )));
                }
                let range = date_range(a.start, a.end)?;
                let options = PriceCsvOptions {
                    date_column: a.date_column.clone(),
                    price_column: a.price_column.clone(),
                    ..PriceCsvOptions::default()
                };
                let mut returns = Vec::with_capacity(a.prices.len());
                for (i, path) in a.prices.iter().enumerate() {
                    let symbol = match a.tickers.get(i) {
                        Some(t) => t.clone(),
                        None => path
                            .file_stem()
                            .map(|s| s.to_string_lossy().to_uppercase())
                            .unwrap_or_else(|| format!("T{i}")),
                    };
                    let prices =
                        ingest::parse_price_csv(read_file(path)?.as_slice(), &symbol, &options)?;
                    returns.push(ingest::compute_returns(&prices)?);
                }
                let panel = factor_panel(a.factors.as_deref(), a.factor_unit, &a.fetch)?;
                let aligned = ingest::align(&returns, &panel, range)?;
                for d in &aligned.dropped {
                    eprintln!(
                        "{}: {} of {} rows outside the common dates",
                        d.source, d.dropped, d.available
                    );
                }
                csv_text(aligned.dataset)?
            };
            Ok((text, a.out))
        }
        Command::Stats(a) => {
            only(
                a.format,
                &[Format::Text, Format::Json, Format::Csv],
                "stats",
            )?;
            let ds = load_targets(&a.dataset, &a.targets)?;
            Ok((tables::stats(&ds, a.format, a.factors)?, a.out))
        }
        Command::Fit(a) => {
            only(a.format, &[Format::Text, Format::Json, Format::Dot], "fit")?;
            let ds = load_targets(&a.dataset, &a.targets)?;
            let tree = fit(&ds, &fit_config(&a.tree))?;
            let format = match a.format {
                Format::Json => TreeFormat::Json,
                Format::Dot => TreeFormat::Dot,
                _ => TreeFormat::Text,
            };
            Ok((render(&tree, format, a.unit), a.out))
        }
        Command::Ols(a) => {
            only(a.format, &[Format::Text, Format::Json, Format::Csv], "ols")?;
            let ds = load_targets(&a.dataset, &a.targets)?;
            let rf = if a.excess {
                let panel = factor_panel(a.factors.as_deref(), a.factor_unit, &a.fetch)?;
                Some(panel.rf_on(ds.dates()).ok_or_else(|| {
                    CliError::Data("the factor file does not cover every dataset date".into())
                })?)
            } else {
                None
            };
            let fits = (0..ds.n_targets())
                .map(|k| fit_ols(&ds, k, a.excess, rf.as_deref()))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            Ok((tables::ols(&fits, a.format, a.unit), a.out))
        }
        Command::Report(a) => {
            only(a.format, &[Format::Text, Format::Json], "report")?;
            let ds = load_targets(&a.dataset, &a.targets)?;
            let (ds, tree) = match &a.tree_json {
                Some(path) => {
                    let tree = Tree::from_json(&String::from_utf8_lossy(&read_file(path)?))?;
                    (ds.select_targets(&tree.target_names)?, tree)
                }
                None => {
                    let tree = fit(&ds, &fit_config(&a.tree))?;
                    (ds, tree)
                }
            };
            Ok((report_text(&ds, &tree, a.format, a.unit)?, a.out))
        }
        Command::Replicate(a) => {
            only(
                a.format,
                &[Format::Text, Format::Json, Format::Csv],
                "replicate",
            )?;
            let ds = load_targets(&a.dataset, &a.targets)?;
            let table = replicate_table(&ds, &a.anchor, &fit_config(&a.tree))?;
            let text = match a.format {
                Format::Json => table.to_json() + "\n",
                Format::Csv => table.to_csv(),
                _ => table.to_text(),
            };
            Ok((text, a.out))
        }
    }
}

fn report_text(
    ds: &Dataset,
    tree: &Tree,
    format: Format,
    unit: fftree::DisplayUnit,
) -> Result<String> {
    let rep = split_report(ds, tree)?;
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&rep).expect("report serializes") + "\n",
        _ => {
            let mut text = rep.to_text(unit);
            if tree.depth() > 1 {
                text.push('\n');
                text.push_str(&render(tree, TreeFormat::Text, unit));
            }
            text
        }
    })
}

fn csv_text(ds: Dataset) -> Result<String> {
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf).expect("dataset CSV is UTF-8"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli).and_then(|(mut text, out)| {
        if !text.is_empty() && !text.ends_with('\n') {
            text.push('\n');
        }
        match out {
            Some(path) => output::write_atomic(&path, text.as_bytes())
                .map_err(|source| CliError::Io { path, source }),
            None => output::write_stdout(text.as_bytes()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("fftree: error: {line}");
            match e {
                CliError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
