//! Report writers. JSON goes through `serde_json::Value`, whose maps keep
//! keys sorted, so reports are byte-stable.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

pub fn json_text(value: &impl Serialize) -> String {
    let v = serde_json::to_value(value).expect("report types serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// Writes `<dir>/<stem>.json` and/or `<dir>/<stem>.csv`; returns the paths.
pub fn emit(
    dir: &Path,
    stem: &str,
    format: Format,
    json: &impl Serialize,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    if format.json() {
        let p = dir.join(format!("{stem}.json"));
        write_file(&p, json_text(json).as_bytes())?;
        written.push(p);
    }
    if format.csv() {
        let p = dir.join(format!("{stem}.csv"));
        write_file(&p, csv_text(header, rows).as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `*.json` files of a directory in name order, or the path itself if it
/// is a file.
pub fn json_inputs(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let meta = std::fs::metadata(path).map_err(|e| CliError::io(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}
