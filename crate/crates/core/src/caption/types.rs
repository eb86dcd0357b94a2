use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical coordinates are multiples of 1/COORD_SCALE (four decimals).
pub const COORD_SCALE: f64 = 10_000.0;

/// Snaps a normalized coordinate onto the canonical four-decimal grid.
///
/// Dividing by the exact integer scale yields the double nearest to
/// `k / 10000`, i.e. the same value a parser produces for that decimal.
pub fn quantize_coord(v: f64) -> f64 {
    (v * COORD_SCALE).round() / COORD_SCALE
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxError {
    #[error("{coord} is not a finite number")]
    NonFinite { coord: &'static str },
    #[error("{coord} = {value} lies outside [0, 1]")]
    OutOfRange { coord: &'static str, value: f64 },
    #[error("x1 ≤ x0")]
    XOrder,
    #[error("y1 ≤ y0")]
    YOrder,
}

/// Axis-aligned box in normalized image coordinates.
///
/// The origin is the top-left corner of the image, x grows rightward and y
/// grows downward. `(x0, y0)` is the top-left corner of the box and
/// `(x1, y1)` the bottom-right one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, BoxError> {
        let b = Self { x0, y0, x1, y1 };
        b.check()?;
        Ok(b)
    }

    /// Checks `0 ≤ x0 < x1 ≤ 1` and `0 ≤ y0 < y1 ≤ 1`.
    pub fn check(&self) -> Result<(), BoxError> {
        for (coord, value) in [("x0", self.x0), ("y0", self.y0), ("x1", self.x1), ("y1", self.y1)] {
            if !value.is_finite() {
                return Err(BoxError::NonFinite { coord });
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(BoxError::OutOfRange { coord, value });
            }
        }
        if self.x1 <= self.x0 {
            return Err(BoxError::XOrder);
        }
        if self.y1 <= self.y0 {
            return Err(BoxError::YOrder);
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn quantized(&self) -> Self {
        Self {
            x0: quantize_coord(self.x0),
            y0: quantize_coord(self.y0),
            x1: quantize_coord(self.x1),
            y1: quantize_coord(self.y1),
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }

    /// Figure-style percent notation, e.g.
    /// `top left: (27.2, 36.3), bottom right: (54.8, 98.0)`.
    pub fn percent_label(&self) -> String {
        format!(
            "top left: ({:.1}, {:.1}), bottom right: ({:.1}, {:.1})",
            self.x0 * 100.0,
            self.y0 * 100.0,
            self.x1 * 100.0,
            self.y1 * 100.0
        )
    }
}

/// An 8-bit sRGB triplet. Serialized as `[r, g, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[u8; 3]", into = "[u8; 3]")]
pub struct RgbColor {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl RgbColor {
    pub const WHITE: RgbColor = RgbColor::new(255, 255, 255);
    pub const BLACK: RgbColor = RgbColor::new(0, 0, 0);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Self { r, g, b }
    }

    pub fn channels(&self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }
}

impl From<[u8; 3]> for RgbColor {
    fn from([r, g, b]: [u8; 3]) -> Self {
        Self { r, g, b }
    }
}

impl From<RgbColor> for [u8; 3] {
    fn from(c: RgbColor) -> Self {
        c.channels()
    }
}

impl fmt::Display for RgbColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.r, self.g, self.b)
    }
}

/// One object of a structured caption.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub id: String,
    pub description: String,
    pub bbox: Option<BoundingBox>,
    /// Dominant color first.
    pub colors: Vec<RgbColor>,
    /// Relative depth; larger is farther.
    pub depth: Option<f64>,
    /// Non-parametric fields (location words, style, lighting, ...).
    pub attributes: BTreeMap<String, String>,
}

impl ObjectSpec {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            description: description.into(),
            bbox: None,
            colors: Vec::new(),
            depth: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_box(mut self, bbox: BoundingBox) -> Self {
        self.bbox = Some(bbox);
        self
    }

    pub fn with_colors(mut self, colors: Vec<RgbColor>) -> Self {
        self.colors = colors;
        self
    }

    pub fn with_depth(mut self, depth: f64) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    /// Detection category of the object: the `category` attribute when set,
    /// else the first description word after any leading article, else the
    /// id.
    pub fn category(&self) -> String {
        if let Some(cat) = self.attributes.get("category") {
            if !cat.trim().is_empty() {
                return cat.trim().to_string();
            }
        }
        self.description
            .split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
            .find(|w| !w.is_empty() && !matches!(w.as_str(), "a" | "an" | "the"))
            .unwrap_or_else(|| self.id.clone())
    }
}

pub const MAX_PALETTE_COLORS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenePalette {
    pub colors: Vec<RgbColor>,
}

/// Width:height ratio, written as `"W:H"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Aspect {
    pub width: u32,
    pub height: u32,
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.width, self.height)
    }
}

impl std::str::FromStr for Aspect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(':')
            .ok_or_else(|| format!("expected \"W:H\", got {s:?}"))?;
        let parse = |part: &str| {
            part.trim()
                .parse::<u32>()
                .ok()
                .filter(|v| *v > 0)
                .ok_or_else(|| format!("expected positive integers in \"W:H\", got {s:?}"))
        };
        Ok(Aspect { width: parse(w)?, height: parse(h)? })
    }
}

/// A parametric structured caption: scene text, objects, optional palette.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StructuredCaption {
    pub scene: String,
    pub objects: Vec<ObjectSpec>,
    pub palette: Option<ScenePalette>,
    pub aspect: Option<Aspect>,
}

impl StructuredCaption {
    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.id == id)
    }
}

/// A schema violation located by a JSON-style path such as `objects[2].box`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_invariants() {
        assert!(BoundingBox::new(0.0, 0.0, 1.0, 1.0).is_ok());
        assert_eq!(BoundingBox::new(0.5, 0.2, 0.4, 0.9), Err(BoxError::XOrder));
        assert_eq!(BoundingBox::new(0.1, 0.2, 0.4, 0.2), Err(BoxError::YOrder));
        assert!(matches!(
            BoundingBox::new(-0.1, 0.2, 0.4, 0.9),
            Err(BoxError::OutOfRange { coord: "x0", .. })
        ));
        assert!(matches!(
            BoundingBox::new(0.1, f64::NAN, 0.4, 0.9),
            Err(BoxError::NonFinite { coord: "y0" })
        ));
        assert_eq!(BoxError::XOrder.to_string(), "x1 ≤ x0");
    }

    #[test]
    fn percent_label_matches_figure_notation() {
        let b = BoundingBox::new(0.272, 0.363, 0.548, 0.98).unwrap();
        assert_eq!(b.percent_label(), "top left: (27.2, 36.3), bottom right: (54.8, 98.0)");
    }

    #[test]
    fn aspect_parsing() {
        assert_eq!("16:9".parse::<Aspect>(), Ok(Aspect { width: 16, height: 9 }));
        assert!("16x9".parse::<Aspect>().is_err());
        assert!("0:9".parse::<Aspect>().is_err());
    }

    #[test]
    fn category_fallbacks() {
        let o = ObjectSpec::new("obj-1", "Dog sitting on grass");
        assert_eq!(o.category(), "dog");
        assert_eq!(o.clone().with_attribute("category", "animal").category(), "animal");
        assert_eq!(ObjectSpec::new("lonely", "").category(), "lonely");
        assert_eq!(ObjectSpec::new("x", "A Cat, sleeping").category(), "cat");
        assert_eq!(ObjectSpec::new("y", "the").category(), "y");
    }
}
