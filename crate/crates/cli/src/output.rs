//! Output locations and gnuplot data files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const OUT_ENV: &str = "MONLAB_OUT";
const DEFAULT_ROOT: &str = "monlab-out";

/// `explicit` if given, else `<root>/<id>` with the root from `MONLAB_OUT`.
pub fn output_dir(explicit: Option<&Path>, id: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_ROOT));
            root.join(id)
        }
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(CliError::runtime)?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(CliError::runtime)?;
    write_file(path, text + "\n")
}

/// A gnuplot data file: two `#` header lines, whitespace-separated columns,
/// blank-line-separated blocks.
pub struct DatFile {
    text: String,
    rows: usize,
}

impl DatFile {
    pub fn new(title: &str, columns: &[&str]) -> Self {
        DatFile {
            text: format!("# {title}\n# columns: {}\n", columns.join(" ")),
            rows: 0,
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(self.text, "{}", cells.join(" "));
        self.rows += 1;
    }

    /// Starts a new gnuplot index block.
    pub fn block(&mut self) {
        if self.rows > 0 {
            self.text.push_str("\n\n");
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.text)
    }
}

/// Lower-case hex fingerprint of the parts, order-sensitive.
pub fn content_id(prefix: &str, parts: &[&[u8]]) -> String {
    let mut joined = Vec::new();
    for p in parts {
        joined.extend_from_slice(&(p.len() as u64).to_le_bytes());
        joined.extend_from_slice(p);
    }
    format!("{prefix}-{:016x}", monlab_harness::bench::fingerprint(&joined))
}
