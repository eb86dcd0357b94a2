//! COCO-style box alignment scoring: greedy score-ordered matching,
//! 101-point interpolated AP over IoU 0.50:0.05:0.95, AR at 100 detections
//! per image, plus area and LVIS-style rarity buckets.

mod io;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caption::BoundingBox;

pub use io::{
    parse_category_meta, parse_coco_detections, parse_coco_ground_truth, parse_image_dims, CocoGroundTruth,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxEvalError {
    #[error("detection {index} has score {score} outside [0, 1]")]
    InvalidScore { index: usize, score: f64 },
    #[error("box of {what} {index} is invalid: {reason}")]
    InvalidBox { what: &'static str, index: usize, reason: String },
    #[error("no ground-truth boxes to evaluate against")]
    NoGroundTruth,
    #[error("area buckets need dimensions for image {0:?}")]
    MissingDims(String),
    #[error("rarity buckets requested without category metadata")]
    MissingMeta,
    #[error("no rarity recorded for category {0:?}")]
    MissingRarity(String),
    #[error("{0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub category: String,
    pub score: f64,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthBox {
    pub image_id: String,
    pub category: String,
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl ImageDims {
    pub fn pixel_area(&self, b: &BoundingBox) -> f64 {
        b.area() * f64::from(self.width) * f64::from(self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rarity {
    Rare,
    Common,
    Frequent,
}

pub type CategoryMeta = BTreeMap<String, Rarity>;

/// Intersection over union of two boxes. Scale-invariant, so normalized
/// coordinates give the same value as pixel coordinates.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let ih = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        (inter / union).clamp(0.0, 1.0)
    }
}

/// Total order used to rank detections: score descending, then a content
/// key so ties never depend on input order.
fn rank_cmp(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.image_id.cmp(&b.image_id))
        .then_with(|| a.category.cmp(&b.category))
        .then_with(|| {
            let (x, y) = (a.bbox.to_array(), b.bbox.to_array());
            x.iter().zip(&y).map(|(p, q)| p.total_cmp(q)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
        })
}

/// (image or category, the other key) → (ranked detection indices, ground-truth indices)
type Groups<'a> = BTreeMap<(&'a str, &'a str), (Vec<usize>, Vec<usize>)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Tp,
    Fp,
    Ignored,
}

/// Greedy matching of score-ranked detections against ground truths of one
/// image and category. `gt_ignored` must list non-ignored ground truths
/// first. Returns the matched ground truth (if any) per detection.
fn greedy_match(ious: &[Vec<f64>], gt_ignored: &[bool], threshold: f64) -> Vec<Option<usize>> {
    let mut taken = vec![false; gt_ignored.len()];
    ious.iter()
        .map(|row| {
            let mut best: Option<usize> = None;
            let mut best_iou = threshold.min(1.0 - 1e-10);
            for (g, &v) in row.iter().enumerate() {
                if taken[g] {
                    continue;
                }
                if let Some(b) = best {
                    if !gt_ignored[b] && gt_ignored[g] {
                        break;
                    }
                }
                if v < best_iou {
                    continue;
                }
                best_iou = v;
                best = Some(g);
            }
            if let Some(g) = best {
                taken[g] = true;
            }
            best
        })
        .collect()
}

/// Per-detection matching outcome at a single IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedDetection {
    /// Index into the input detection list.
    pub detection: usize,
    /// Index into the input ground-truth list when matched.
    pub ground_truth: Option<usize>,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchResult {
    /// Detections in global rank order.
    pub detections: Vec<MatchedDetection>,
    pub unmatched_ground_truths: Vec<usize>,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.detections.iter().filter(|d| d.ground_truth.is_some()).count()
    }

    pub fn false_positives(&self) -> usize {
        self.detections.len() - self.true_positives()
    }

    pub fn false_negatives(&self) -> usize {
        self.unmatched_ground_truths.len()
    }

    /// Ranked TP flags, the input of [`average_precision`].
    pub fn ranked_hits(&self) -> Vec<bool> {
        self.detections.iter().map(|d| d.ground_truth.is_some()).collect()
    }
}

/// Greedy category-scoped matching at one IoU threshold. Detections are
/// taken in descending score order within each image; each claims the
/// unmatched ground truth of its category with the highest IoU at or above
/// the threshold.
pub fn match_detections(dets: &[Detection], gts: &[GroundTruthBox], iou_thresh: f64) -> MatchResult {
    let mut det_order: Vec<usize> = (0..dets.len()).collect();
    det_order.sort_by(|&a, &b| rank_cmp(&dets[a], &dets[b]).then(a.cmp(&b)));

    let mut groups: Groups = BTreeMap::new();
    for &d in &det_order {
        groups.entry((&dets[d].image_id, &dets[d].category)).or_default().0.push(d);
    }
    for (g, gt) in gts.iter().enumerate() {
        groups.entry((&gt.image_id, &gt.category)).or_default().1.push(g);
    }

    let mut matched: BTreeMap<usize, (Option<usize>, f64)> = BTreeMap::new();
    let mut used = vec![false; gts.len()];
    for (ds, gs) in groups.values() {
        let ious: Vec<Vec<f64>> = ds.iter().map(|&d| gs.iter().map(|&g| iou(&dets[d].bbox, &gts[g].bbox)).collect()).collect();
        let hits = greedy_match(&ious, &vec![false; gs.len()], iou_thresh);
        for (i, (&d, hit)) in ds.iter().zip(hits).enumerate() {
            let gt = hit.map(|h| gs[h]);
            if let Some(g) = gt {
                used[g] = true;
            }
            matched.insert(d, (gt, hit.map_or(0.0, |h| ious[i][h])));
        }
    }

    MatchResult {
        detections: det_order
            .iter()
            .map(|&d| {
                let (ground_truth, iou) = matched[&d];
                MatchedDetection { detection: d, ground_truth, iou }
            })
            .collect(),
        unmatched_ground_truths: (0..gts.len()).filter(|&g| !used[g]).collect(),
    }
}

/// Number of sampled recall levels (0.00, 0.01, …, 1.00).
pub const RECALL_POINTS: usize = 101;

/// 101-point interpolated AP of a ranked TP/FP sequence.
///
/// Precision is made non-increasing by a running max from the right and
/// sampled at the first rank reaching each recall level (0 if never
/// reached). Returns `None` when there are no ground truths.
pub fn average_precision(ranked_hits: &[bool], num_gt: usize) -> Option<f64> {
    let (precision, recall) = pr_curve(ranked_hits, num_gt)?;
    Some(interpolated_ap(&precision, &recall))
}

fn pr_curve(ranked_hits: &[bool], num_gt: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    if num_gt == 0 {
        return None;
    }
    let mut tp = 0usize;
    let mut precision = Vec::with_capacity(ranked_hits.len());
    let mut recall = Vec::with_capacity(ranked_hits.len());
    for (i, &hit) in ranked_hits.iter().enumerate() {
        tp += usize::from(hit);
        precision.push(tp as f64 / (i + 1) as f64);
        recall.push(tp as f64 / num_gt as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    Some((precision, recall))
}

fn interpolated_ap(precision: &[f64], recall: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut ptr = 0;
    for r in 0..RECALL_POINTS {
        let level = r as f64 / 100.0;
        while ptr < recall.len() && recall[ptr] < level {
            ptr += 1;
        }
        if ptr < recall.len() {
            sum += precision[ptr];
        }
    }
    sum / RECALL_POINTS as f64
}

/// IoU thresholds 0.50, 0.55, …, 0.95.
pub fn coco_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

/// Ground-truth pixel-area buckets (COCO convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaBucket {
    All,
    Small,
    Medium,
    Large,
}

impl AreaBucket {
    fn range(self) -> (f64, f64) {
        const SMALL: f64 = 32.0 * 32.0;
        const MEDIUM: f64 = 96.0 * 96.0;
        const MAX: f64 = 1e10;
        match self {
            AreaBucket::All => (0.0, MAX),
            AreaBucket::Small => (0.0, SMALL),
            AreaBucket::Medium => (SMALL, MEDIUM),
            AreaBucket::Large => (MEDIUM, MAX),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxEvalOptions {
    pub iou_thresholds: Vec<f64>,
    pub max_dets: usize,
    pub area_buckets: bool,
    pub rarity_buckets: bool,
}

impl Default for BoxEvalOptions {
    fn default() -> Self {
        Self { iou_thresholds: coco_iou_thresholds(), max_dets: 100, area_buckets: true, rarity_buckets: false }
    }
}

/// Box-alignment summary. Bucket entries are `None` when no category has a
/// ground truth in that bucket (or the bucket was not requested).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub ap: f64,
    pub ap50: f64,
    pub ar: f64,
    pub ap_small: Option<f64>,
    pub ap_medium: Option<f64>,
    pub ap_large: Option<f64>,
    pub ap_rare: Option<f64>,
    pub ap_common: Option<f64>,
    pub ap_frequent: Option<f64>,
}

/// AP and final recall for one (category, threshold, area bucket).
#[derive(Debug, Clone, Copy)]
struct CellScore {
    ap: f64,
    recall: f64,
}

struct Evaluator<'a> {
    dets: &'a [Detection],
    gts: &'a [GroundTruthBox],
    dims: Option<&'a BTreeMap<String, ImageDims>>,
    opts: &'a BoxEvalOptions,
    /// Keyed by (category, image).
    groups: Groups<'a>,
}

impl<'a> Evaluator<'a> {
    fn new(
        dets: &'a [Detection],
        gts: &'a [GroundTruthBox],
        dims: Option<&'a BTreeMap<String, ImageDims>>,
        opts: &'a BoxEvalOptions,
    ) -> Self {
        let mut order: Vec<usize> = (0..dets.len()).collect();
        order.sort_by(|&a, &b| rank_cmp(&dets[a], &dets[b]).then(a.cmp(&b)));
        let mut groups: Groups = BTreeMap::new();
        for d in order {
            let e = groups.entry((&dets[d].category, &dets[d].image_id)).or_default();
            if e.0.len() < opts.max_dets {
                e.0.push(d);
            }
        }
        for (g, gt) in gts.iter().enumerate() {
            groups.entry((&gt.category, &gt.image_id)).or_default().1.push(g);
        }
        Self { dets, gts, dims, opts, groups }
    }

    fn categories_with_gt(&self) -> BTreeSet<&'a str> {
        self.gts.iter().map(|g| g.category.as_str()).collect()
    }

    fn pixel_area(&self, image: &str, b: &BoundingBox) -> f64 {
        match self.dims.and_then(|d| d.get(image)) {
            Some(d) => d.pixel_area(b),
            None => 0.0,
        }
    }

    /// Scores of one category per IoU threshold, or `None` if the category
    /// has no non-ignored ground truth in `bucket`.
    fn score_category(&self, category: &str, bucket: AreaBucket) -> Option<Vec<CellScore>> {
        let (lo, hi) = bucket.range();
        let outside = |area: f64| bucket != AreaBucket::All && (area < lo || area > hi);
        let thresholds = &self.opts.iou_thresholds;

        let mut num_gt = 0usize;
        // Per threshold: (detection index, outcome) across images.
        let mut per_threshold: Vec<Vec<(usize, Outcome)>> = vec![Vec::new(); thresholds.len()];

        for ((_, image), (ds, gs)) in self.groups.range((category, "")..).take_while(|((c, _), _)| *c == category) {
            let mut gs: Vec<(usize, bool)> =
                gs.iter().map(|&g| (g, outside(self.pixel_area(image, &self.gts[g].bbox)))).collect();
            gs.sort_by_key(|&(_, ignored)| ignored);
            num_gt += gs.iter().filter(|(_, ignored)| !ignored).count();
            let gt_ignored: Vec<bool> = gs.iter().map(|&(_, i)| i).collect();
            let ious: Vec<Vec<f64>> = ds
                .iter()
                .map(|&d| gs.iter().map(|&(g, _)| iou(&self.dets[d].bbox, &self.gts[g].bbox)).collect())
                .collect();
            for (t, &thr) in thresholds.iter().enumerate() {
                let hits = greedy_match(&ious, &gt_ignored, thr);
                for (&d, hit) in ds.iter().zip(hits) {
                    let outcome = match hit {
                        Some(g) if gt_ignored[g] => Outcome::Ignored,
                        Some(_) => Outcome::Tp,
                        None if outside(self.pixel_area(image, &self.dets[d].bbox)) => Outcome::Ignored,
                        None => Outcome::Fp,
                    };
                    per_threshold[t].push((d, outcome));
                }
            }
        }
        if num_gt == 0 {
            return None;
        }
        Some(
            per_threshold
                .into_iter()
                .map(|mut rows| {
                    rows.sort_by(|a, b| rank_cmp(&self.dets[a.0], &self.dets[b.0]).then(a.0.cmp(&b.0)));
                    let hits: Vec<bool> =
                        rows.iter().filter(|r| r.1 != Outcome::Ignored).map(|r| r.1 == Outcome::Tp).collect();
                    let (precision, recall) = pr_curve(&hits, num_gt).expect("num_gt > 0");
                    CellScore { ap: interpolated_ap(&precision, &recall), recall: recall.last().copied().unwrap_or(0.0) }
                })
                .collect(),
        )
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Full box-alignment report.
///
/// `dims` is needed only for area buckets; `meta` only for rarity buckets.
pub fn evaluate_boxes(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    meta: Option<&CategoryMeta>,
    dims: Option<&BTreeMap<String, ImageDims>>,
    opts: &BoxEvalOptions,
) -> Result<ApReport, BoxEvalError> {
    for (index, d) in dets.iter().enumerate() {
        if !(0.0..=1.0).contains(&d.score) {
            return Err(BoxEvalError::InvalidScore { index, score: d.score });
        }
        d.bbox
            .check()
            .map_err(|e| BoxEvalError::InvalidBox { what: "detection", index, reason: e.to_string() })?;
    }
    for (index, g) in gts.iter().enumerate() {
        g.bbox
            .check()
            .map_err(|e| BoxEvalError::InvalidBox { what: "ground truth", index, reason: e.to_string() })?;
    }
    if gts.is_empty() {
        return Err(BoxEvalError::NoGroundTruth);
    }
    if opts.area_buckets {
        let d = dims.ok_or_else(|| BoxEvalError::MissingDims(gts[0].image_id.clone()))?;
        let images = gts.iter().map(|g| &g.image_id).chain(dets.iter().map(|d| &d.image_id));
        if let Some(missing) = images.into_iter().find(|id| !d.contains_key(*id)) {
            return Err(BoxEvalError::MissingDims(missing.clone()));
        }
    }
    let ev = Evaluator::new(dets, gts, dims, opts);
    let categories = ev.categories_with_gt();
    if opts.rarity_buckets {
        let m = meta.ok_or(BoxEvalError::MissingMeta)?;
        if let Some(c) = categories.iter().find(|c| !m.contains_key(**c)) {
            return Err(BoxEvalError::MissingRarity(c.to_string()));
        }
    }

    let all: BTreeMap<&str, Vec<CellScore>> =
        categories.iter().filter_map(|&c| ev.score_category(c, AreaBucket::All).map(|s| (c, s))).collect();
    let ap_over = |cells: &mut dyn Iterator<Item = &Vec<CellScore>>| {
        mean(&cells.flat_map(|s| s.iter().map(|c| c.ap)).collect::<Vec<_>>())
    };

    let ap = ap_over(&mut all.values()).unwrap_or(0.0);
    let t50 = opts.iou_thresholds.iter().position(|&t| (t - 0.5).abs() < 1e-12);
    let ap50 = match t50 {
        Some(t) => mean(&all.values().map(|s| s[t].ap).collect::<Vec<_>>()).unwrap_or(0.0),
        None => ap,
    };
    let ar = mean(&all.values().flat_map(|s| s.iter().map(|c| c.recall)).collect::<Vec<_>>()).unwrap_or(0.0);

    let bucket = |b: AreaBucket| -> Option<f64> {
        if !opts.area_buckets {
            return None;
        }
        let scores: Vec<Vec<CellScore>> = categories.iter().filter_map(|&c| ev.score_category(c, b)).collect();
        ap_over(&mut scores.iter())
    };
    let rarity = |r: Rarity| -> Option<f64> {
        let m = meta.filter(|_| opts.rarity_buckets)?;
        ap_over(&mut all.iter().filter(|(c, _)| m.get(**c) == Some(&r)).map(|(_, s)| s))
    };

    Ok(ApReport {
        ap,
        ap50,
        ar,
        ap_small: bucket(AreaBucket::Small),
        ap_medium: bucket(AreaBucket::Medium),
        ap_large: bucket(AreaBucket::Large),
        ap_rare: rarity(Rarity::Rare),
        ap_common: rarity(Rarity::Common),
        ap_frequent: rarity(Rarity::Frequent),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    fn det(image: &str, cat: &str, score: f64, b: BoundingBox) -> Detection {
        Detection { image_id: image.into(), category: cat.into(), score, bbox: b }
    }

    fn gt(image: &str, cat: &str, b: BoundingBox) -> GroundTruthBox {
        GroundTruthBox { image_id: image.into(), category: cat.into(), bbox: b }
    }

    #[test]
    fn iou_examples() {
        let b = bx(0.1, 0.2, 0.7, 0.9);
        assert_eq!(iou(&b, &b), 1.0);
        assert_eq!(iou(&bx(0.0, 0.0, 0.5, 1.0), &bx(0.5, 0.0, 1.0, 1.0)), 0.0);
        assert_eq!(iou(&bx(0.0, 0.0, 1.0, 1.0), &bx(0.0, 0.0, 0.5, 1.0)), 0.5);
    }

    #[test]
    fn matching_examples() {
        let g = vec![gt("i", "cat", bx(0.1, 0.1, 0.5, 0.5))];
        let m = match_detections(&[det("i", "cat", 0.9, bx(0.1, 0.1, 0.5, 0.5))], &g, 0.5);
        assert_eq!((m.true_positives(), m.false_positives(), m.false_negatives()), (1, 0, 0));

        let dets = vec![det("i", "cat", 0.4, bx(0.1, 0.1, 0.5, 0.5)), det("i", "cat", 0.8, bx(0.1, 0.1, 0.5, 0.48))];
        let m = match_detections(&dets, &g, 0.5);
        assert_eq!(m.detections[0].detection, 1);
        assert_eq!(m.detections[0].ground_truth, Some(0));
        assert_eq!(m.detections[1].ground_truth, None);

        let m = match_detections(&[det("i", "dog", 0.9, bx(0.1, 0.1, 0.5, 0.5))], &g, 0.5);
        assert_eq!((m.true_positives(), m.false_positives(), m.false_negatives()), (0, 1, 1));
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[true], 1), Some(1.0));
        assert_eq!(average_precision(&[true], 2), Some(51.0 / 101.0));
        assert_eq!(average_precision(&[], 3), Some(0.0));
        assert_eq!(average_precision(&[true], 0), None);
    }

    #[test]
    fn thresholds_are_decimal() {
        let t = coco_iou_thresholds();
        assert_eq!(t.len(), 10);
        assert_eq!(t[0], 0.5);
        assert_eq!(t[7], 0.85);
        assert_eq!(t[9], 0.95);
    }

    #[test]
    fn oracle_detections_score_one() {
        let gts = vec![gt("a", "cat", bx(0.1, 0.1, 0.4, 0.4)), gt("a", "dog", bx(0.5, 0.5, 0.9, 0.9))];
        let dets: Vec<Detection> = gts.iter().map(|g| det(&g.image_id, &g.category, 1.0, g.bbox)).collect();
        let opts = BoxEvalOptions { area_buckets: false, ..Default::default() };
        let r = evaluate_boxes(&dets, &gts, None, None, &opts).unwrap();
        assert_eq!((r.ap, r.ap50, r.ar), (1.0, 1.0, 1.0));
        assert_eq!(r.ap_small, None);
    }

    #[test]
    fn errors() {
        let gts = vec![gt("a", "cat", bx(0.1, 0.1, 0.4, 0.4))];
        let opts = BoxEvalOptions::default();
        assert_eq!(evaluate_boxes(&[], &gts, None, None, &opts), Err(BoxEvalError::MissingDims("a".into())));
        let no_area = BoxEvalOptions { area_buckets: false, rarity_buckets: true, ..Default::default() };
        assert_eq!(evaluate_boxes(&[], &gts, None, None, &no_area), Err(BoxEvalError::MissingMeta));
        let meta: CategoryMeta = [("dog".to_string(), Rarity::Rare)].into();
        assert_eq!(
            evaluate_boxes(&[], &gts, Some(&meta), None, &no_area),
            Err(BoxEvalError::MissingRarity("cat".into()))
        );
        let bad = vec![det("a", "cat", 1.5, bx(0.1, 0.1, 0.4, 0.4))];
        let plain = BoxEvalOptions { area_buckets: false, ..Default::default() };
        assert!(matches!(evaluate_boxes(&bad, &gts, None, None, &plain), Err(BoxEvalError::InvalidScore { .. })));
        assert_eq!(evaluate_boxes(&[], &[], None, None, &plain), Err(BoxEvalError::NoGroundTruth));
    }

    #[test]
    fn max_dets_caps_per_image() {
        let gts = vec![gt("a", "cat", bx(0.1, 0.1, 0.4, 0.4))];
        let mut dets: Vec<Detection> = (0..3).map(|i| det("a", "cat", 0.9 - 0.1 * i as f64, bx(0.6, 0.6, 0.9, 0.9))).collect();
        dets.push(det("a", "cat", 0.1, gts[0].bbox));
        let opts = BoxEvalOptions { area_buckets: false, max_dets: 3, ..Default::default() };
        let r = evaluate_boxes(&dets, &gts, None, None, &opts).unwrap();
        assert_eq!(r.ar, 0.0);
    }
}
