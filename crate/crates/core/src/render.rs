//! Flat reference rasterizer for captions and figure-style box overlays.
//!
//! Objects are drawn as hard-edged shapes of their first color. A pixel is
//! covered when its center lies inside the shape; for rectangles that is
//! `x0·W ≤ px + 0.5 < x1·W` (and likewise vertically).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxeval::Detection;
use crate::caption::{BoundingBox, RgbColor, StructuredCaption};
use crate::image::{Image, ImageError};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("object {0:?} has no box")]
    MissingBox(String),
    #[error("object {0:?} has no colors")]
    MissingColors(String),
    #[error("background from palette requested but caption has no palette")]
    MissingPalette,
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    #[default]
    Rectangle,
    Ellipse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    Color(RgbColor),
    /// First color of the caption's scene palette.
    Palette,
    #[default]
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub shape: Shape,
    pub background: Background,
}

impl RenderConfig {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, shape: Shape::Rectangle, background: Background::White }
    }
}

/// Half-open pixel column/row range covered by `[lo, hi)` along an axis of
/// `size` pixels under the pixel-center rule.
fn covered_range(lo: f64, hi: f64, size: u32) -> std::ops::Range<u32> {
    let s = f64::from(size);
    // Smallest p with p + 0.5 ≥ lo·s, smallest p with p + 0.5 ≥ hi·s.
    let first = (lo * s - 0.5).ceil().max(0.0);
    let end = (hi * s - 0.5).ceil().clamp(0.0, s);
    (first as u32)..(end.max(first) as u32)
}

/// Pixel rectangle covered by `b`: `(columns, rows)`.
pub fn pixel_coverage(b: &BoundingBox, width: u32, height: u32) -> (std::ops::Range<u32>, std::ops::Range<u32>) {
    (covered_range(b.x0, b.x1, width), covered_range(b.y0, b.y1, height))
}

pub fn rasterize(c: &StructuredCaption, cfg: &RenderConfig) -> Result<Image, RenderError> {
    let background = match cfg.background {
        Background::White => RgbColor::WHITE,
        Background::Color(col) => col,
        Background::Palette => c
            .palette
            .as_ref()
            .and_then(|p| p.colors.first().copied())
            .ok_or(RenderError::MissingPalette)?,
    };
    let mut img = Image::filled(cfg.width, cfg.height, background)?;

    let mut order = Vec::with_capacity(c.objects.len());
    for (i, o) in c.objects.iter().enumerate() {
        let b = o.bbox.ok_or_else(|| RenderError::MissingBox(o.id.clone()))?;
        let col = *o.colors.first().ok_or_else(|| RenderError::MissingColors(o.id.clone()))?;
        order.push((o.depth.unwrap_or(0.0), i, b, col));
    }
    // Far to near; equal depths keep list order so later objects land on top.
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    for (_, _, b, col) in order {
        let (cols, rows) = pixel_coverage(&b, cfg.width, cfg.height);
        match cfg.shape {
            Shape::Rectangle => {
                for y in rows {
                    for x in cols.clone() {
                        img.set(x, y, col);
                    }
                }
            }
            Shape::Ellipse => {
                let (w, h) = (f64::from(cfg.width), f64::from(cfg.height));
                let cx = (b.x0 + b.x1) / 2.0 * w;
                let cy = (b.y0 + b.y1) / 2.0 * h;
                let rx = b.width() / 2.0 * w;
                let ry = b.height() / 2.0 * h;
                for y in rows {
                    for x in cols.clone() {
                        let dx = (f64::from(x) + 0.5 - cx) / rx;
                        let dy = (f64::from(y) + 0.5 - cy) / ry;
                        if dx * dx + dy * dy <= 1.0 {
                            img.set(x, y, col);
                        }
                    }
                }
            }
        }
    }
    Ok(img)
}

/// Draws rectangle outlines `stroke` pixels wide along the inside of each
/// box's covered pixel rectangle. Pixels further inside are left alone.
pub fn overlay_boxes(img: &Image, boxes: &[(BoundingBox, RgbColor)], stroke: u32) -> Image {
    let mut out = img.clone();
    if stroke == 0 {
        return out;
    }
    for (b, col) in boxes {
        let (cols, rows) = pixel_coverage(b, img.width(), img.height());
        if cols.is_empty() || rows.is_empty() {
            continue;
        }
        for y in rows.clone() {
            for x in cols.clone() {
                let edge = x < cols.start + stroke
                    || x + stroke >= cols.end
                    || y < rows.start + stroke
                    || y + stroke >= rows.end;
                if edge {
                    out.set(x, y, *col);
                }
            }
        }
    }
    out
}

/// One score-1 detection per object, labelled with the object's category.
pub fn boxes_as_detections(c: &StructuredCaption, image_id: &str) -> Result<Vec<Detection>, RenderError> {
    c.objects
        .iter()
        .map(|o| {
            let b = o.bbox.ok_or_else(|| RenderError::MissingBox(o.id.clone()))?;
            Ok(Detection { image_id: image_id.to_string(), category: o.category(), score: 1.0, bbox: b })
        })
        .collect()
}
