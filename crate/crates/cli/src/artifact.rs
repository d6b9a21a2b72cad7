//! Artifact output: atomic file writes and metadata parsing.

use crate::AppError;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Where an artifact goes. Files are written atomically (temp file in
/// the same directory, then rename) so readers never observe a partial
/// artifact.
pub enum OutputTarget {
    Stdout,
    File(PathBuf),
}

impl OutputTarget {
    pub fn from_flag(path: Option<PathBuf>) -> Self {
        match path {
            Some(p) => OutputTarget::File(p),
            None => OutputTarget::Stdout,
        }
    }
}

pub fn write_artifact(target: &OutputTarget, content: &str) -> Result<(), AppError> {
    match target {
        OutputTarget::Stdout => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| AppError::Computation(format!("cannot write to stdout: {e}")))
        }
        OutputTarget::File(path) => write_file_atomically(path, content),
    }
}

fn write_file_atomically(path: &Path, content: &str) -> Result<(), AppError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| AppError::Usage(format!("{} is not a file path", path.display())))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(
        ".{}.tmp-{}",
        file_name.to_string_lossy(),
        std::process::id()
    ));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(content.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        AppError::Computation(format!("cannot write {}: {e}", path.display()))
    })
}

/// Extract the `# key = value` metadata lines from a CSV artifact.
pub fn parse_csv_metadata(text: &str) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let Some(rest) = line.strip_prefix("# ") else {
            continue;
        };
        if let Some((key, value)) = rest.split_once(" = ") {
            map.insert(key.to_string(), value.to_string());
        }
    }
    map
}

/// The data portion of a CSV artifact: header row and data rows, with
/// comment lines stripped.
pub fn csv_data_section(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}
