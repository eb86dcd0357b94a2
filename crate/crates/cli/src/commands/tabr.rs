use std::path::PathBuf;

use clap::Args;
use paracap_core::prefs::{parse_records_csv, parse_records_json, percent_1dp, win_rate_reports, WinRateReport};
use serde::Serialize;

use crate::config::{check, pick, FileConfig, Format};
use crate::error::CliError;
use crate::output::{emit, read_text};

#[derive(Debug, Args)]
pub struct TabrArgs {
    /// Preference records, `.csv` (item_id,candidate,baseline,verdict) or `.json`
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Confidence level of the Wilson interval
    #[arg(long)]
    pub confidence: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Serialize)]
struct Row {
    #[serde(flatten)]
    report: WinRateReport,
    decisive: u64,
    win_rate_pct: f64,
    ci_low_pct: f64,
    ci_high_pct: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    confidence: f64,
    rows: Vec<Row>,
}

pub fn tabr(args: &TabrArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let confidence = pick(args.confidence, cfg.confidence, 0.95);
    check(confidence > 0.0 && confidence < 1.0, || format!("--confidence must lie in (0, 1), got {confidence}"))?;
    let format = pick(args.format, cfg.format, Format::Both);

    let text = read_text(&args.records)?;
    let is_csv = args.records.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let records = if is_csv { parse_records_csv(&text) } else { parse_records_json(&text) }
        .map_err(|e| CliError::domain(format!("{}: {e}", args.records.display())))?;
    let reports = win_rate_reports(&records, confidence).map_err(CliError::domain)?;

    let rows: Vec<Row> = reports
        .into_iter()
        .map(|r| Row {
            decisive: r.wins + r.losses,
            win_rate_pct: percent_1dp(r.win_rate),
            ci_low_pct: percent_1dp(r.ci_low),
            ci_high_pct: percent_1dp(r.ci_high),
            report: r,
        })
        .collect();
    for r in &rows {
        println!(
            "{} vs {}: {:.1}% [{:.1}, {:.1}] ({}/{}/{})",
            r.report.candidate,
            r.report.baseline,
            r.win_rate_pct,
            r.ci_low_pct,
            r.ci_high_pct,
            r.report.wins,
            r.report.losses,
            r.report.ties
        );
    }
    let header = [
        "candidate", "baseline", "wins", "losses", "ties", "decisive", "win_rate", "ci_low", "ci_high",
        "win_rate_pct", "ci_low_pct", "ci_high_pct",
    ];
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.report.candidate.clone(),
                r.report.baseline.clone(),
                r.report.wins.to_string(),
                r.report.losses.to_string(),
                r.report.ties.to_string(),
                r.decisive.to_string(),
                r.report.win_rate.to_string(),
                r.report.ci_low.to_string(),
                r.report.ci_high.to_string(),
                format!("{:.1}", r.win_rate_pct),
                format!("{:.1}", r.ci_low_pct),
                format!("{:.1}", r.ci_high_pct),
            ]
        })
        .collect();
    emit(&args.out, "tabr", format, &Report { confidence, rows }, &header, &csv_rows)?;
    Ok(())
}
