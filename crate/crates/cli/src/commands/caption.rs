use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use paracap_core::caption::{
    apply_script, enrich_caption, parse_annotations, parse_caption, parse_script, serialize_caption,
    validate_document, AnnotationBundle, CoordForm, EnrichOptions,
};
use serde::Serialize;

use crate::config::{pick, FileConfig};
use crate::error::CliError;
use crate::output::{json_inputs, json_text, read_text, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Unit,
    Percent,
}

impl Units {
    fn form(self) -> CoordForm {
        match self {
            Units::Unit => CoordForm::Unit,
            Units::Percent => CoordForm::Percent,
        }
    }
}

fn units(flag: Option<Units>, cfg: &FileConfig) -> Result<CoordForm, CliError> {
    let file = match cfg.units.as_deref() {
        None => None,
        Some(s) => Some(Units::from_str(s, true).map_err(|_| CliError::env(format!("bad units {s:?} in config")))?),
    };
    Ok(pick(flag, file, Units::Unit).form())
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Caption file or directory of `*.json` captions
    pub captions: PathBuf,
}

pub fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let files = json_inputs(&args.captions)?;
    let mut invalid = 0;
    for f in &files {
        let text = read_text(f)?;
        let lines = match validate_document(&text) {
            Ok(v) => v.iter().map(|v| v.to_string()).collect(),
            Err(e) => vec![format!("malformed JSON: {e}")],
        };
        if !lines.is_empty() {
            invalid += 1;
        }
        for l in lines {
            println!("{}: {l}", f.display());
        }
    }
    if invalid > 0 {
        return Err(CliError::domain(format!("{invalid} of {} captions invalid", files.len())));
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EnrichArgs {
    /// Directory (or single file) of base captions
    #[arg(long)]
    pub captions: PathBuf,
    /// Directory of annotation bundles named like the captions
    #[arg(long)]
    pub annotations: PathBuf,
    /// Output directory for enriched captions and `enrich_report.json`
    #[arg(long)]
    pub out: PathBuf,
    /// Attribute keys removed once numeric values are attached
    #[arg(long, value_delimiter = ',')]
    pub semantic_keys: Option<Vec<String>>,
    #[arg(long, value_enum)]
    pub units: Option<Units>,
}

#[derive(Debug, Serialize)]
struct EnrichFileReport {
    file: String,
    unannotated: Vec<String>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct EnrichReport {
    files: Vec<EnrichFileReport>,
    failed: usize,
}

pub fn enrich(args: &EnrichArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let opts = match args.semantic_keys.clone().or_else(|| cfg.semantic_keys.clone()) {
        Some(semantic_keys) => EnrichOptions { semantic_keys },
        None => EnrichOptions::default(),
    };
    let form = units(args.units, cfg)?;
    if !args.annotations.is_dir() {
        return Err(CliError::io(&args.annotations, "not a directory"));
    }
    let mut files = Vec::new();
    for f in json_inputs(&args.captions)? {
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let outcome = enrich_one(&f, &args.annotations.join(&name), &opts)?;
        let (unannotated, error) = match outcome {
            Ok(e) => {
                write_file(&args.out.join(&name), serialize_caption(&e.caption, form).as_bytes())?;
                (e.unannotated, None)
            }
            Err(msg) => (Vec::new(), Some(msg)),
        };
        files.push(EnrichFileReport { file: name, unannotated, error });
    }
    let failed = files.iter().filter(|f| f.error.is_some()).count();
    for f in &files {
        match &f.error {
            Some(e) => println!("{}: error: {e}", f.file),
            None if !f.unannotated.is_empty() => println!("{}: unannotated: {}", f.file, f.unannotated.join(", ")),
            None => {}
        }
    }
    let report = EnrichReport { files, failed };
    write_file(&args.out.join("enrich_report.json"), json_text(&report).as_bytes())?;
    if failed > 0 {
        return Err(CliError::domain(format!("{failed} captions failed to enrich")));
    }
    Ok(())
}

/// Outer error: I/O. Inner error: per-file domain failure.
fn enrich_one(
    caption: &Path,
    bundle: &Path,
    opts: &EnrichOptions,
) -> Result<Result<paracap_core::caption::Enriched, String>, CliError> {
    let text = read_text(caption)?;
    let base = match parse_caption(&text) {
        Ok(c) => c,
        Err(e) => return Ok(Err(e.to_string())),
    };
    let ann = if bundle.exists() {
        match parse_annotations(&read_text(bundle)?) {
            Ok(a) => a,
            Err(e) => return Ok(Err(e.to_string())),
        }
    } else {
        AnnotationBundle::default()
    };
    Ok(enrich_caption(&base, &ann, opts).map_err(|e| e.to_string()))
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub caption: PathBuf,
    /// JSON array of edit records
    #[arg(long)]
    pub script: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub units: Option<Units>,
}

pub fn refine(args: &RefineArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let form = units(args.units, cfg)?;
    let caption = parse_caption(&read_text(&args.caption)?)
        .map_err(|e| CliError::domain(format!("{}: {e}", args.caption.display())))?;
    let script = parse_script(&read_text(&args.script)?)
        .map_err(|e| CliError::domain(format!("{}: {e}", args.script.display())))?;
    let edited = apply_script(&caption, &script).map_err(|(i, e)| CliError::domain(format!("edit {i} failed: {e}")))?;
    write_file(&args.out, serialize_caption(&edited, form).as_bytes())
}
