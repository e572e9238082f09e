//! Download and cache the daily factor files published in the Ken French
//! data library.
//!
//! Downloads are cached under `<destination>/<sha256(url)>/<file name>`
//! exactly as received. A warm cache never touches the network; pass
//! `refresh` to download again.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Cursor, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use sha2::{Digest, Sha256};

const LIBRARY: &str = "https://mba.tuck.dartmouth.edu/pages/faculty/ken.french/ftp";
pub const DAILY_FACTORS_URL: &str =
    "https://mba.tuck.dartmouth.edu/pages/faculty/ken.french/ftp/F-F_Research_Data_Factors_daily_CSV.zip";
pub const SIX_PORTFOLIOS_URL: &str =
    "https://mba.tuck.dartmouth.edu/pages/faculty/ken.french/ftp/6_Portfolios_2x3_daily_CSV.zip";

const ZIP_MAGIC: &[u8] = b"PK\x03\x04";
const MAX_DOWNLOAD: u64 = 256 << 20;
const ATTEMPTS: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum FetchError {
    #[error("invalid fetch configuration: {0}")]
    InvalidConfig(String),
    #[error("request to {url} failed: {message}")]
    Network { url: String, message: String },
    #[error("request to {url} timed out after {seconds}s")]
    Timeout { url: String, seconds: u64 },
    #[error("{0}")]
    NotAnArchive(String),
    #[error("archive holds {0} entries, expected exactly one")]
    MultipleEntries(usize),
    #[error("downloaded file does not look like {0}")]
    WrongKind(ArchiveKind),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = FetchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArchiveKind {
    #[default]
    DailyFactors,
    SixPortfolios,
}

impl ArchiveKind {
    pub fn default_url(self) -> &'static str {
        match self {
            ArchiveKind::DailyFactors => DAILY_FACTORS_URL,
            ArchiveKind::SixPortfolios => SIX_PORTFOLIOS_URL,
        }
    }

    /// A column label every file of this kind carries.
    fn marker(self) -> &'static str {
        match self {
            ArchiveKind::DailyFactors => "Mkt-RF",
            ArchiveKind::SixPortfolios => "SMALL",
        }
    }
}

impl std::fmt::Display for ArchiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArchiveKind::DailyFactors => "daily-factors",
            ArchiveKind::SixPortfolios => "six-portfolios",
        })
    }
}

impl FromStr for ArchiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "daily-factors" | "factors" => Ok(ArchiveKind::DailyFactors),
            "six-portfolios" | "portfolios" => Ok(ArchiveKind::SixPortfolios),
            other => Err(format!("unknown archive kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchConfig {
    pub url: String,
    /// Cache root.
    pub destination: PathBuf,
    pub timeout: Duration,
    pub expected_kind: ArchiveKind,
    /// Ignore any cached copy and download again.
    pub refresh: bool,
}

impl FetchConfig {
    pub fn new(kind: ArchiveKind, destination: impl Into<PathBuf>) -> FetchConfig {
        FetchConfig {
            url: kind.default_url().to_string(),
            destination: destination.into(),
            timeout: Duration::from_secs(30),
            expected_kind: kind,
            refresh: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.url.trim().is_empty() {
            return Err(FetchError::InvalidConfig("url is empty".into()));
        }
        if self.timeout.is_zero() {
            return Err(FetchError::InvalidConfig("timeout must be positive".into()));
        }
        Ok(())
    }

    /// Where the raw download for this URL lives.
    pub fn cache_path(&self) -> PathBuf {
        let digest = Sha256::digest(self.url.as_bytes());
        let key: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.destination.join(key).join(file_name(&self.url))
    }
}

fn file_name(url: &str) -> String {
    let path = url.split(['?', '#']).next().unwrap_or(url);
    match path.trim_end_matches('/').rsplit('/').next() {
        Some(name) if !name.is_empty() && !name.contains(':') => name.to_string(),
        _ => "download".to_string(),
    }
}

/// The text of the archive named by `config`, from cache when present.
///
/// A zip download must hold exactly one file, which is returned; anything
/// else that looks like text is returned as is.
pub fn fetch_factor_archive(config: &FetchConfig) -> Result<Vec<u8>> {
    config.validate()?;
    let path = config.cache_path();
    let dir = path.parent().expect("cache path has a parent");
    fs::create_dir_all(dir)?;

    let lock = OpenOptions::new()
        .create(true)
        .truncate(false)
        .write(true)
        .open(dir.join(".lock"))?;
    lock.lock()?;

    let raw = match (config.refresh, read_cached(&path)?) {
        (false, Some(raw)) => raw,
        _ => {
            let raw = download(config)?;
            write_atomic(&path, &raw)?;
            raw
        }
    };
    drop(lock);

    let text = unpack(&raw)?;
    if !contains(&text, config.expected_kind.marker().as_bytes()) {
        return Err(FetchError::WrongKind(config.expected_kind));
    }
    Ok(text)
}

fn read_cached(path: &Path) -> Result<Option<Vec<u8>>> {
    match fs::read(path) {
        Ok(raw) => Ok(Some(raw)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    let mut f = File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn download(config: &FetchConfig) -> Result<Vec<u8>> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .build()
        .into();
    let mut last = None;
    for _ in 0..ATTEMPTS {
        match get(&agent, config) {
            Ok(raw) => return Ok(raw),
            Err(e @ FetchError::Network { .. }) | Err(e @ FetchError::Timeout { .. }) => {
                last = Some(e)
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn get(agent: &ureq::Agent, config: &FetchConfig) -> Result<Vec<u8>> {
    let url = &config.url;
    let classify = |e: ureq::Error| match e {
        ureq::Error::Timeout(_) => FetchError::Timeout {
            url: url.clone(),
            seconds: config.timeout.as_secs(),
        },
        ureq::Error::Io(e) if e.kind() == io::ErrorKind::TimedOut => FetchError::Timeout {
            url: url.clone(),
            seconds: config.timeout.as_secs(),
        },
        e => FetchError::Network {
            url: url.clone(),
            message: e.to_string(),
        },
    };
    let mut response = agent.get(url).call().map_err(classify)?;
    response
        .body_mut()
        .with_config()
        .limit(MAX_DOWNLOAD)
        .read_to_vec()
        .map_err(classify)
}

/// Extract the single file from a zip archive, or pass plain text through.
pub fn unpack(raw: &[u8]) -> Result<Vec<u8>> {
    if raw.starts_with(ZIP_MAGIC) {
        let mut archive = zip::ZipArchive::new(Cursor::new(raw))
            .map_err(|e| FetchError::NotAnArchive(format!("corrupt zip archive: {e}")))?;
        let files: Vec<usize> = (0..archive.len())
            .filter(|&i| archive.by_index(i).map(|f| f.is_file()).unwrap_or(true))
            .collect();
        if files.len() != 1 {
            return Err(FetchError::MultipleEntries(files.len()));
        }
        let mut entry = archive
            .by_index(files[0])
            .map_err(|e| FetchError::NotAnArchive(format!("corrupt zip entry: {e}")))?;
        let mut out = Vec::with_capacity(entry.size() as usize);
        entry.read_to_end(&mut out)?;
        return Ok(out);
    }
    if raw.is_empty() || raw.contains(&0) {
        return Err(FetchError::NotAnArchive(
            "neither a zip archive nor text".into(),
        ));
    }
    let head = String::from_utf8_lossy(&raw[..raw.len().min(256)])
        .trim_start()
        .to_ascii_lowercase();
    if head.starts_with("<!doctype") || head.starts_with("<html") {
        return Err(FetchError::NotAnArchive(
            "got an HTML page instead of a data file".into(),
        ));
    }
    Ok(raw.to_vec())
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Default URL for a file in the data library by name.
pub fn library_url(file: &str) -> String {
    format!("{LIBRARY}/{file}")
}
