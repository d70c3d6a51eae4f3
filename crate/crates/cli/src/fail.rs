use std::fmt;
use std::path::Path;

use matman::Error;

pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => USAGE,
            Failure::Core(e) if e.is_numerical() => NUMERICAL,
            Failure::Core(_) => DATA,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

pub type Result<T> = std::result::Result<T, Failure>;

pub fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Core(Error::io(path, e))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

pub fn from_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Core(Error::format(path, e.to_string())))
}

/// Writes a CSV table with proper quoting (spec strings contain commas).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Failure {
    Failure::Core(Error::format(path, e.to_string()))
}

/// Formats an optional number, `NA` when absent.
pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}
