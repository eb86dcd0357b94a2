//! `paracap`: validate, edit, enrich and render structured captions, and
//! score generated images against them.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::boxes::{eval_box, EvalBoxArgs};
use commands::caption::{enrich, refine, validate, EnrichArgs, RefineArgs, ValidateArgs};
use commands::color::{eval_color, EvalColorArgs};
use commands::render::{overlay, render, OverlayArgs, RenderArgs};
use commands::tabr::{tabr, TabrArgs};
use config::FileConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "paracap", version, about = "Structured-caption tooling and evaluation")]
struct Cli {
    /// JSON file of option defaults keyed by long flag name; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check captions against the schema
    Validate(ValidateArgs),
    /// Attach annotation-bundle boxes, colors and depth to captions
    Enrich(EnrichArgs),
    /// Apply an edit script to a caption
    Refine(RefineArgs),
    /// Color fidelity of single-object images against target colors
    EvalColor(EvalColorArgs),
    /// COCO-style AP/AR of detections against ground-truth boxes
    EvalBox(EvalBoxArgs),
    /// Win rates with Wilson intervals from pairwise preferences
    Tabr(TabrArgs),
    /// Rasterize captions to flat reference PNGs
    Render(RenderArgs),
    /// Draw a caption's boxes over an image
    Overlay(OverlayArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Enrich(a) => enrich(a, &cfg),
        Command::Refine(a) => refine(a, &cfg),
        Command::EvalColor(a) => eval_color(a, &cfg),
        Command::EvalBox(a) => eval_box(a, &cfg),
        Command::Tabr(a) => tabr(a, &cfg),
        Command::Render(a) => render(a, &cfg),
        Command::Overlay(a) => overlay(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
