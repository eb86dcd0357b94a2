use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use paracap_core::boxeval::{
    coco_iou_thresholds, evaluate_boxes, parse_category_meta, parse_coco_detections, parse_coco_ground_truth,
    parse_image_dims, ApReport, BoxEvalOptions, GroundTruthBox, ImageDims,
};
use paracap_core::caption::parse_caption;

use crate::config::{check, pick, FileConfig, Format};
use crate::error::CliError;
use crate::output::{emit, json_inputs, opt, read_text, stem};

#[derive(Debug, Args)]
pub struct EvalBoxArgs {
    /// COCO results array: {image_id, category | category_id, bbox: [x, y, w, h] px, score}
    #[arg(long)]
    pub detections: PathBuf,
    /// COCO annotations file with images, annotations and categories
    #[arg(long, conflicts_with_all = ["gt_captions", "dims"])]
    pub gt: Option<PathBuf>,
    /// Directory of captions; the file stem is the image id
    #[arg(long, requires = "dims")]
    pub gt_captions: Option<PathBuf>,
    /// {image_id: {width, height}} for caption ground truth
    #[arg(long)]
    pub dims: Option<PathBuf>,
    /// {category: rare | common | frequent}
    #[arg(long)]
    pub meta: Option<PathBuf>,
    /// Also report AP per rarity bucket (needs --meta)
    #[arg(long)]
    pub rarity: bool,
    #[arg(long, value_delimiter = ',')]
    pub iou_thresholds: Option<Vec<f64>>,
    #[arg(long)]
    pub max_dets: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn caption_ground_truth(dir: &std::path::Path) -> Result<Vec<GroundTruthBox>, CliError> {
    let mut gts = Vec::new();
    for f in json_inputs(dir)? {
        let c = parse_caption(&read_text(&f)?).map_err(|e| CliError::domain(format!("{}: {e}", f.display())))?;
        let image_id = stem(&f);
        gts.extend(c.objects.iter().filter_map(|o| {
            o.bbox.map(|bbox| GroundTruthBox { image_id: image_id.clone(), category: o.category(), bbox })
        }));
    }
    Ok(gts)
}

pub fn eval_box(args: &EvalBoxArgs, cfg: &FileConfig) -> Result<(), CliError> {
    let opts = BoxEvalOptions {
        iou_thresholds: pick(args.iou_thresholds.clone(), cfg.iou_thresholds.clone(), coco_iou_thresholds()),
        max_dets: pick(args.max_dets, cfg.max_dets, 100),
        area_buckets: true,
        rarity_buckets: args.rarity || cfg.rarity.unwrap_or(false),
    };
    check(!opts.iou_thresholds.is_empty(), || "--iou-thresholds must not be empty".into())?;
    check(opts.iou_thresholds.iter().all(|t| (0.0..=1.0).contains(t)), || {
        "--iou-thresholds must lie in [0, 1]".into()
    })?;
    check(opts.max_dets >= 1, || "--max-dets must be ≥ 1".into())?;
    let format = pick(args.format, cfg.format, Format::Both);

    let (gts, dims, categories): (Vec<GroundTruthBox>, BTreeMap<String, ImageDims>, BTreeMap<String, String>) =
        match (&args.gt, &args.gt_captions, &args.dims) {
            (Some(p), _, _) => {
                let g = parse_coco_ground_truth(&read_text(p)?)
                    .map_err(|e| CliError::domain(format!("{}: {e}", p.display())))?;
                (g.boxes, g.dims, g.categories)
            }
            (None, Some(dir), Some(d)) => {
                let dims =
                    parse_image_dims(&read_text(d)?).map_err(|e| CliError::domain(format!("{}: {e}", d.display())))?;
                (caption_ground_truth(dir)?, dims, BTreeMap::new())
            }
            _ => return Err(CliError::env("ground truth needs --gt or --gt-captions with --dims")),
        };
    let meta = match &args.meta {
        Some(p) => {
            Some(parse_category_meta(&read_text(p)?).map_err(|e| CliError::domain(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let dets = parse_coco_detections(&read_text(&args.detections)?, &dims, &categories)
        .map_err(|e| CliError::domain(format!("{}: {e}", args.detections.display())))?;

    let report = evaluate_boxes(&dets, &gts, meta.as_ref(), Some(&dims), &opts).map_err(CliError::domain)?;
    print_report(&report);
    let header =
        ["ap", "ap50", "ar", "ap_small", "ap_medium", "ap_large", "ap_rare", "ap_common", "ap_frequent"];
    let row = vec![
        report.ap.to_string(),
        report.ap50.to_string(),
        report.ar.to_string(),
        opt(report.ap_small),
        opt(report.ap_medium),
        opt(report.ap_large),
        opt(report.ap_rare),
        opt(report.ap_common),
        opt(report.ap_frequent),
    ];
    emit(&args.out, "box_report", format, &report, &header, &[row])?;
    Ok(())
}

fn print_report(r: &ApReport) {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{:.3}", x));
    println!(
        "AP {:.3} AP50 {:.3} AR {:.3} | AP_s {} AP_m {} AP_l {} | AP_r {} AP_c {} AP_f {}",
        r.ap,
        r.ap50,
        r.ar,
        cell(r.ap_small),
        cell(r.ap_medium),
        cell(r.ap_large),
        cell(r.ap_rare),
        cell(r.ap_common),
        cell(r.ap_frequent)
    );
}
