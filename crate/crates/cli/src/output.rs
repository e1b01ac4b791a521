//! Provenance envelopes, file readers and writers.

use std::fmt;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::Path;

use manifold_rbf::io::{read_matrix_csv, read_pgm, write_matrix_csv, Dataset};
use manifold_rbf::{Error, ErrorCategory, Matrix};
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(Error),
}

impl CliError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            CliError::Usage(_) => ErrorCategory::Usage,
            CliError::Lib(e) => e.category(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(s) => f.write_str(s),
            CliError::Lib(e) => e.fmt(f),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Lib(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Command, configuration, seed and library version of a run. Contains no
/// timestamps so that reruns are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub version: &'static str,
    pub seed: u64,
    pub config: Value,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> CliResult<Self> {
        Ok(Provenance {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config: serde_json::to_value(config)?,
        })
    }

    /// `key=value` header lines for CSV outputs.
    pub fn header(&self) -> Vec<String> {
        vec![
            format!("command={}", self.command),
            format!("version={}", self.version),
            format!("seed={}", self.seed),
            format!("config={}", self.config),
        ]
    }
}

fn sink(path: Option<&Path>, body: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, body)?,
        None => io::stdout().lock().write_all(body)?,
    }
    Ok(())
}

/// Writes `{"provenance": …, key: value, …}` as pretty JSON.
pub fn write_json(
    path: Option<&Path>,
    prov: &Provenance,
    fields: Vec<(&str, Value)>,
) -> CliResult<()> {
    let mut obj = Map::new();
    obj.insert("provenance".into(), serde_json::to_value(prov)?);
    for (k, v) in fields {
        obj.insert(k.into(), v);
    }
    let mut body = serde_json::to_vec_pretty(&Value::Object(obj))?;
    body.push(b'\n');
    sink(path, &body)
}

pub fn write_csv(
    path: Option<&Path>,
    prov: &Provenance,
    extra: Vec<String>,
    m: &Matrix,
) -> CliResult<()> {
    let mut header = prov.header();
    header.extend(extra);
    let mut body = Vec::new();
    write_matrix_csv(&mut body, &header, m)?;
    sink(path, &body)
}

fn read_value(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Lib(Error::Io(format!("{}: {e}", path.display()))))?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a dataset file, either bare or wrapped in a provenance envelope
/// under the `dataset` key.
pub fn read_dataset(path: &Path) -> CliResult<Dataset> {
    let v = read_value(path)?;
    let inner = match v.get("dataset") {
        Some(d) => d.clone(),
        None => v,
    };
    Ok(serde_json::from_value(inner)?)
}

/// Reads a JSON document and returns the value under `key` if the document is
/// an envelope, or the whole document otherwise.
pub fn read_field(path: &Path, key: &str) -> CliResult<Value> {
    let v = read_value(path)?;
    Ok(match v.get(key) {
        Some(inner) => inner.clone(),
        None => v,
    })
}

pub fn read_csv(path: &Path) -> CliResult<Matrix> {
    let f = fs::File::open(path)
        .map_err(|e| CliError::Lib(Error::Io(format!("{}: {e}", path.display()))))?;
    Ok(read_matrix_csv(BufReader::new(f))?)
}

/// Grayscale image from a PGM file, or any other extension as a CSV matrix.
pub fn read_image(path: &Path) -> CliResult<Matrix> {
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    if is_pgm {
        let bytes = fs::read(path)
            .map_err(|e| CliError::Lib(Error::Io(format!("{}: {e}", path.display()))))?;
        Ok(read_pgm(&bytes)?)
    } else {
        read_csv(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_reads_bare_and_enveloped() {
        let dir = tempfile::tempdir().unwrap();
        let bare = r#"{"kind":"euclidean","dim":1,"points":[[1.0],[2.0]]}"#;
        std::fs::write(dir.path().join("bare.json"), bare).unwrap();
        std::fs::write(
            dir.path().join("env.json"),
            format!(r#"{{"provenance":{{}},"dataset":{bare}}}"#),
        )
        .unwrap();
        let a = read_dataset(&dir.path().join("bare.json")).unwrap();
        let b = read_dataset(&dir.path().join("env.json")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn csv_header_carries_provenance() {
        let prov = Provenance::new("gram", 4, &serde_json::json!({"k": 1})).unwrap();
        let h = prov.header();
        assert_eq!(h[0], "command=gram");
        assert_eq!(h[2], "seed=4");
        assert_eq!(h[3], r#"config={"k":1}"#);
    }
}
