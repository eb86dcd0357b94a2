//! Readers for COCO-style result and annotation files.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{BoxEvalError, CategoryMeta, Detection, GroundTruthBox, ImageDims};
use crate::caption::BoundingBox;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Id {
    Int(i64),
    Str(String),
}

impl Id {
    fn key(&self) -> String {
        match self {
            Id::Int(i) => i.to_string(),
            Id::Str(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
struct RawDetection {
    image_id: Id,
    #[serde(default)]
    category: Option<String>,
    #[serde(default)]
    category_id: Option<Id>,
    bbox: [f64; 4],
    score: f64,
}

#[derive(Deserialize)]
struct RawAnnotation {
    image_id: Id,
    #[serde(default)]
    category: Option<String>,
    #[serde(default)]
    category_id: Option<Id>,
    bbox: [f64; 4],
}

#[derive(Deserialize)]
struct RawImage {
    id: Id,
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct RawCategory {
    id: Id,
    name: String,
}

#[derive(Deserialize)]
struct RawCoco {
    images: Vec<RawImage>,
    annotations: Vec<RawAnnotation>,
    #[serde(default)]
    categories: Vec<RawCategory>,
}

/// Ground truth read from a COCO annotations file.
#[derive(Debug, Clone, PartialEq)]
pub struct CocoGroundTruth {
    pub boxes: Vec<GroundTruthBox>,
    pub dims: BTreeMap<String, ImageDims>,
    /// Category id → name, used to resolve `category_id` in result files.
    pub categories: BTreeMap<String, String>,
}

fn format_err(e: impl std::fmt::Display) -> BoxEvalError {
    BoxEvalError::Format(e.to_string())
}

fn resolve_category(
    name: Option<String>,
    id: Option<Id>,
    names: &BTreeMap<String, String>,
    index: usize,
) -> Result<String, BoxEvalError> {
    match (name, id) {
        (Some(n), _) => Ok(n),
        (None, Some(id)) => {
            let key = id.key();
            Ok(names.get(&key).cloned().unwrap_or(key))
        }
        (None, None) => Err(format_err(format!("entry {index}: missing category or category_id"))),
    }
}

/// Converts a pixel `[x, y, w, h]` box to normalized corners, clipped to
/// the image.
fn normalize_xywh(
    xywh: [f64; 4],
    dims: &ImageDims,
    what: &'static str,
    index: usize,
) -> Result<BoundingBox, BoxEvalError> {
    let [x, y, w, h] = xywh;
    let (iw, ih) = (f64::from(dims.width), f64::from(dims.height));
    let clip = |v: f64| v.clamp(0.0, 1.0);
    BoundingBox::new(clip(x / iw), clip(y / ih), clip((x + w) / iw), clip((y + h) / ih))
        .map_err(|e| BoxEvalError::InvalidBox { what, index, reason: e.to_string() })
}

fn dims_for<'a>(dims: &'a BTreeMap<String, ImageDims>, image: &str) -> Result<&'a ImageDims, BoxEvalError> {
    dims.get(image).ok_or_else(|| BoxEvalError::MissingDims(image.to_string()))
}

/// Parses a COCO results array. Pixel boxes are normalized with `dims`;
/// `category_id` values are mapped through `categories` when present.
pub fn parse_coco_detections(
    text: &str,
    dims: &BTreeMap<String, ImageDims>,
    categories: &BTreeMap<String, String>,
) -> Result<Vec<Detection>, BoxEvalError> {
    let raw: Vec<RawDetection> = serde_json::from_str(text).map_err(format_err)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| {
            let image_id = r.image_id.key();
            let bbox = normalize_xywh(r.bbox, dims_for(dims, &image_id)?, "detection", i)?;
            Ok(Detection {
                category: resolve_category(r.category, r.category_id, categories, i)?,
                image_id,
                score: r.score,
                bbox,
            })
        })
        .collect()
}

pub fn parse_coco_ground_truth(text: &str) -> Result<CocoGroundTruth, BoxEvalError> {
    let raw: RawCoco = serde_json::from_str(text).map_err(format_err)?;
    let dims: BTreeMap<String, ImageDims> = raw
        .images
        .iter()
        .map(|im| (im.id.key(), ImageDims { width: im.width, height: im.height }))
        .collect();
    if let Some(bad) = dims.iter().find(|(_, d)| d.width == 0 || d.height == 0) {
        return Err(format_err(format!("image {:?} has zero size", bad.0)));
    }
    let categories: BTreeMap<String, String> = raw.categories.into_iter().map(|c| (c.id.key(), c.name)).collect();
    let boxes = raw
        .annotations
        .into_iter()
        .enumerate()
        .map(|(i, a)| {
            let image_id = a.image_id.key();
            let bbox = normalize_xywh(a.bbox, dims_for(&dims, &image_id)?, "ground truth", i)?;
            Ok(GroundTruthBox { category: resolve_category(a.category, a.category_id, &categories, i)?, image_id, bbox })
        })
        .collect::<Result<_, BoxEvalError>>()?;
    Ok(CocoGroundTruth { boxes, dims, categories })
}

/// Parses `{"image_id": {"width": W, "height": H}, …}`.
pub fn parse_image_dims(text: &str) -> Result<BTreeMap<String, ImageDims>, BoxEvalError> {
    let dims: BTreeMap<String, ImageDims> = serde_json::from_str(text).map_err(format_err)?;
    if let Some(bad) = dims.iter().find(|(_, d)| d.width == 0 || d.height == 0) {
        return Err(format_err(format!("image {:?} has zero size", bad.0)));
    }
    Ok(dims)
}

/// Parses `{"category": "rare" | "common" | "frequent", …}`.
pub fn parse_category_meta(text: &str) -> Result<CategoryMeta, BoxEvalError> {
    serde_json::from_str(text).map_err(format_err)
}
