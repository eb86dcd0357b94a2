//! Option defaults read from `--config`. Keys mirror the long flag names;
//! a flag given on the command line always wins.

use std::path::Path;

use clap::ValueEnum;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    #[default]
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeArg {
    #[default]
    Rectangle,
    Ellipse,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub white_threshold: Option<u8>,
    pub min_fraction: Option<f64>,
    pub erosion: Option<u32>,
    pub max_iter: Option<usize>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
    pub confidence: Option<f64>,
    pub iou_thresholds: Option<Vec<f64>>,
    pub max_dets: Option<usize>,
    pub rarity: Option<bool>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub shape: Option<ShapeArg>,
    pub background: Option<String>,
    pub stroke: Option<u32>,
    pub semantic_keys: Option<Vec<String>>,
    pub units: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::env(format!("{}: bad config: {e}", path.display())))
    }
}

/// Flag value, else config value, else default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Env(msg()))
    }
}
