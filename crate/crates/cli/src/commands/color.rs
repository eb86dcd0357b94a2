use std::path::{Path, PathBuf};

use clap::Args;
use paracap_core::image::Image;
use paracap_core::palette::{aggregate_color, eval_color_case, ColorCaseResult, ColorEvalConfig, Summary};
use paracap_core::RgbColor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{check, pick, FileConfig, Format};
use crate::error::CliError;
use crate::output::{emit, read_text};

#[derive(Debug, Args)]
pub struct EvalColorArgs {
    /// JSON array of {caseId, imagePath, target}; image paths resolve
    /// relative to the manifest
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Cluster counts, repeatable or comma separated [default: 5,8]
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Border pixels with every channel at or above this are background
    #[arg(long)]
    pub white_threshold: Option<u8>,
    /// Clusters lighter than this fraction of foreground are dropped
    #[arg(long)]
    pub min_fraction: Option<f64>,
    /// Erosion passes applied to the foreground mask
    #[arg(long)]
    pub erosion: Option<u32>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Worker threads; does not affect output
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CaseSpec {
    case_id: String,
    image_path: PathBuf,
    target: RgbColor,
}

#[derive(Debug, Serialize)]
struct StatsRow {
    k: usize,
    cases: usize,
    excluded: usize,
    ab_distance: Summary,
    delta_e00: Summary,
}

#[derive(Debug, Serialize)]
struct Excluded {
    case_id: String,
    k: usize,
    reason: String,
}

#[derive(Debug, Serialize)]
struct RunSettings {
    k: Vec<usize>,
    seed: u64,
    white_threshold: u8,
    min_fraction: f64,
    erosion: u32,
    max_iter: usize,
}

#[derive(Debug, Serialize)]
struct Report {
    config: RunSettings,
    stats: Vec<StatsRow>,
    cases: Vec<ColorCaseResult>,
    excluded: Vec<Excluded>,
}

fn load_manifest(path: &Path) -> Result<Vec<CaseSpec>, CliError> {
    let mut cases: Vec<CaseSpec> = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?;
    if cases.is_empty() {
        return Err(CliError::domain(format!("{}: manifest has no cases", path.display())));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    for c in &mut cases {
        if c.image_path.is_relative() {
            c.image_path = base.join(&c.image_path);
        }
    }
    cases.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    if let Some(w) = cases.windows(2).find(|w| w[0].case_id == w[1].case_id) {
        return Err(CliError::domain(format!("duplicate caseId {:?}", w[0].case_id)));
    }
    Ok(cases)
}

pub fn eval_color(args: &EvalColorArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let mut ks = pick(args.k.clone(), cfg.k.clone(), vec![5, 8]);
    ks.sort_unstable();
    ks.dedup();
    check(!ks.is_empty() && ks.iter().all(|&k| k >= 1), || "--k values must be ≥ 1".into())?;
    let defaults = ColorEvalConfig::default();
    let ecfg = ColorEvalConfig {
        white_threshold: pick(args.white_threshold, cfg.white_threshold, defaults.white_threshold),
        erosion: pick(args.erosion, cfg.erosion, defaults.erosion),
        min_fraction: pick(args.min_fraction, cfg.min_fraction, defaults.min_fraction),
        seed: pick(args.seed, cfg.seed, defaults.seed),
        max_iter: pick(args.max_iter, cfg.max_iter, defaults.max_iter),
        tol: defaults.tol,
    };
    check((0.0..=1.0).contains(&ecfg.min_fraction), || "--min-fraction must lie in [0, 1]".into())?;
    check(ecfg.max_iter >= 1, || "--max-iter must be ≥ 1".into())?;
    let workers = pick(args.workers, cfg.workers, 1);
    check(workers >= 1, || "--workers must be ≥ 1".into())?;
    let format = pick(args.format, cfg.format, Format::Both);

    let cases = load_manifest(&args.manifest)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(CliError::env)?;

    let images: Vec<Image> = pool.install(|| {
        cases
            .par_iter()
            .map(|c| Image::load_png(&c.image_path).map_err(|e| CliError::io(&c.image_path, e)))
            .collect::<Result<_, _>>()
    })?;

    let jobs: Vec<(usize, usize)> = ks.iter().flat_map(|&k| (0..cases.len()).map(move |i| (k, i))).collect();
    let outcomes: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, i)| eval_color_case(&cases[i].case_id, &images[i], cases[i].target, k, &ecfg))
            .collect()
    });

    let mut results = Vec::new();
    let mut excluded = Vec::new();
    for (&(k, i), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => excluded.push(Excluded { case_id: cases[i].case_id.clone(), k, reason: e.to_string() }),
        }
    }

    let mut stats = Vec::new();
    for &k in &ks {
        let rows: Vec<ColorCaseResult> = results.iter().filter(|r| r.k == k).cloned().collect();
        let s = aggregate_color(&rows).map_err(|e| CliError::domain(format!("k = {k}: {e}")))?;
        stats.push(StatsRow {
            k,
            cases: s.cases,
            excluded: excluded.iter().filter(|e| e.k == k).count(),
            ab_distance: s.ab_distance,
            delta_e00: s.delta_e00,
        });
    }

    for s in &stats {
        println!(
            "k={}: a-b mean {:.3} median {:.3} p90 {:.3} | dE00 mean {:.3} median {:.3} p90 {:.3} ({} cases, {} excluded)",
            s.k,
            s.ab_distance.mean,
            s.ab_distance.median,
            s.ab_distance.p90,
            s.delta_e00.mean,
            s.delta_e00.median,
            s.delta_e00.p90,
            s.cases,
            s.excluded
        );
    }
    let header = [
        "k", "cases", "excluded", "ab_mean", "ab_median", "ab_p90", "de00_mean", "de00_median", "de00_p90",
    ];
    let csv_rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            vec![
                s.k.to_string(),
                s.cases.to_string(),
                s.excluded.to_string(),
                s.ab_distance.mean.to_string(),
                s.ab_distance.median.to_string(),
                s.ab_distance.p90.to_string(),
                s.delta_e00.mean.to_string(),
                s.delta_e00.median.to_string(),
                s.delta_e00.p90.to_string(),
            ]
        })
        .collect();
    let report = Report {
        config: RunSettings {
            k: ks,
            seed: ecfg.seed,
            white_threshold: ecfg.white_threshold,
            min_fraction: ecfg.min_fraction,
            erosion: ecfg.erosion,
            max_iter: ecfg.max_iter,
        },
        stats,
        cases: results,
        excluded,
    };
    emit(&args.out, "color_report", format, &report, &header, &csv_rows)?;
    Ok(())
}
