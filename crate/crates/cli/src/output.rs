use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Envelope shared by every JSON result.
#[derive(Debug, Serialize)]
pub struct ResultRecord<O: Serialize, P: Serialize> {
    #[serde(flatten)]
    pub outputs: O,
    pub params: P,
    pub timestamp: String,
    pub version: &'static str,
}

impl<O: Serialize, P: Serialize> ResultRecord<O, P> {
    pub fn new(outputs: O, params: P) -> Self {
        Self {
            outputs,
            params,
            timestamp: chrono::Utc::now().to_rfc3339(),
            version: VERSION,
        }
    }
}

pub fn to_json<S: Serialize>(value: &S) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Sends `text` to `out` when given, otherwise returns it for stdout.
pub fn emit(out: Option<&Path>, text: String) -> Result<String, CliError> {
    match out {
        Some(path) => {
            write_atomic(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn fixed6(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}
