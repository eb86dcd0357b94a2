//! Merging perception annotations into a caption.
//!
//! Boxes, colors and depth produced by external detectors replace the
//! qualitative location and color words of the annotated objects.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use super::codec::Reader;
use super::types::{BoundingBox, BoxError, RgbColor, ScenePalette, StructuredCaption, Violation};

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectAnnotation {
    pub bbox: BoundingBox,
    pub colors: Vec<RgbColor>,
    pub depth: Option<f64>,
}

/// Per-object perception outputs plus an optional scene palette.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationBundle {
    pub objects: BTreeMap<String, ObjectAnnotation>,
    pub palette: Option<ScenePalette>,
}

#[derive(Debug, Clone)]
pub struct EnrichOptions {
    /// Attribute keys holding semantic location or color words.
    pub semantic_keys: Vec<String>,
}

impl Default for EnrichOptions {
    fn default() -> Self {
        Self { semantic_keys: ["location", "position", "color"].map(String::from).to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enriched {
    pub caption: StructuredCaption,
    /// Ids of objects the bundle did not annotate, in caption order.
    pub unannotated: Vec<String>,
}

#[derive(Debug, Error)]
pub enum EnrichError {
    #[error("annotation references unknown object id {0:?}")]
    UnknownObject(String),
    #[error("annotation box for {id:?} is invalid: {source}")]
    InvalidBox { id: String, source: BoxError },
    #[error("annotation depth for {0:?} must be finite and ≥ 0")]
    InvalidDepth(String),
    #[error("malformed annotation bundle: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("annotation bundle schema: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Schema(Vec<Violation>),
}

pub fn enrich_caption(
    base: &StructuredCaption,
    ann: &AnnotationBundle,
    opts: &EnrichOptions,
) -> Result<Enriched, EnrichError> {
    let mut caption = base.clone();
    for (id, a) in &ann.objects {
        let i = caption.object_index(id).ok_or_else(|| EnrichError::UnknownObject(id.clone()))?;
        let bbox = a.bbox.quantized();
        bbox.check().map_err(|source| EnrichError::InvalidBox { id: id.clone(), source })?;
        if a.depth.is_some_and(|d| !d.is_finite() || d < 0.0) {
            return Err(EnrichError::InvalidDepth(id.clone()));
        }
        let obj = &mut caption.objects[i];
        obj.bbox = Some(bbox);
        if !a.colors.is_empty() {
            obj.colors = a.colors.clone();
        }
        if a.depth.is_some() {
            obj.depth = a.depth;
        }
        for key in &opts.semantic_keys {
            obj.attributes.remove(key);
        }
    }
    if let Some(p) = &ann.palette {
        caption.palette = Some(p.clone());
    }
    let unannotated = caption
        .objects
        .iter()
        .filter(|o| !ann.objects.contains_key(&o.id))
        .map(|o| o.id.clone())
        .collect();
    Ok(Enriched { caption, unannotated })
}

/// Reads `{"objects": {id: {"box", "colors", "depth"}}, "palette"}`.
///
/// Box coordinates follow the caption rule: an explicit `"units"` key, or
/// percent when any coordinate exceeds 1.
pub fn parse_annotations(text: &str) -> Result<AnnotationBundle, EnrichError> {
    let value: Value = serde_json::from_str(text)?;
    let mut r = Reader::default();
    let mut bundle = AnnotationBundle::default();

    let Some(doc) = value.as_object() else {
        return Err(EnrichError::Schema(vec![Violation::new("$", "expected an object")]));
    };
    for k in doc.keys() {
        if !["objects", "palette", "units"].contains(&k.as_str()) {
            r.violations.push(Violation::new(k.clone(), "unknown field"));
        }
    }
    let entries = match doc.get("objects") {
        None | Some(Value::Null) => None,
        Some(Value::Object(m)) => Some(m),
        Some(_) => {
            r.violations.push(Violation::new("objects", "expected an object keyed by id"));
            None
        }
    };
    let boxes: Vec<&Value> = entries.iter().flat_map(|m| m.values().filter_map(|o| o.get("box"))).collect();
    r.detect_units(doc, &boxes);

    for (id, entry) in entries.into_iter().flatten() {
        let path = format!("objects.{id}");
        let Some(m) = entry.as_object() else {
            r.violations.push(Violation::new(path, "expected an object"));
            continue;
        };
        let bbox = match m.get("box") {
            Some(v) => r.bbox(v, &format!("{path}.box")),
            None => {
                r.violations.push(Violation::new(format!("{path}.box"), "missing required field"));
                None
            }
        };
        let colors = match m.get("colors") {
            None | Some(Value::Null) => Some(Vec::new()),
            Some(v) => r.color_list(v, &format!("{path}.colors")),
        };
        let depth = match m.get("depth") {
            None | Some(Value::Null) => Some(None),
            Some(v) => r.depth(v, &format!("{path}.depth")).map(Some),
        };
        if let (Some(bbox), Some(colors), Some(depth)) = (bbox, colors, depth) {
            bundle.objects.insert(id.clone(), ObjectAnnotation { bbox, colors, depth });
        }
    }
    if let Some(p) = doc.get("palette").filter(|p| !p.is_null()) {
        bundle.palette = r.palette(p, "palette");
    }
    if r.violations.is_empty() {
        Ok(bundle)
    } else {
        Err(EnrichError::Schema(r.violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caption::{validate_caption, ObjectSpec};

    fn base() -> StructuredCaption {
        StructuredCaption {
            scene: "a red car parked at the corner".into(),
            objects: vec![
                ObjectSpec::new("car", "a small car")
                    .with_attribute("location", "bottom right")
                    .with_attribute("color", "red")
                    .with_attribute("texture", "glossy"),
                ObjectSpec::new("tree", "an oak tree").with_attribute("position", "left"),
            ],
            palette: None,
            aspect: None,
        }
    }

    fn car_annotation() -> AnnotationBundle {
        let mut objects = BTreeMap::new();
        objects.insert(
            "car".to_string(),
            ObjectAnnotation {
                bbox: BoundingBox::new(0.6, 0.55, 0.95, 0.9).unwrap(),
                colors: vec![RgbColor::new(204, 1, 1)],
                depth: Some(2.0),
            },
        );
        AnnotationBundle { objects, palette: Some(ScenePalette { colors: vec![RgbColor::new(10, 20, 30)] }) }
    }

    #[test]
    fn replaces_semantic_terms() {
        let out = enrich_caption(&base(), &car_annotation(), &EnrichOptions::default()).unwrap();
        let car = &out.caption.objects[0];
        assert_eq!(car.bbox, Some(BoundingBox::new(0.6, 0.55, 0.95, 0.9).unwrap()));
        assert_eq!(car.colors, vec![RgbColor::new(204, 1, 1)]);
        assert_eq!(car.depth, Some(2.0));
        assert!(!car.attributes.contains_key("location"));
        assert!(!car.attributes.contains_key("color"));
        assert_eq!(car.attributes.get("texture").map(String::as_str), Some("glossy"));
        assert_eq!(out.caption.objects[1], base().objects[1]);
        assert_eq!(out.unannotated, vec!["tree".to_string()]);
        assert!(out.caption.palette.is_some());
        assert!(validate_caption(&out.caption).is_empty());
    }

    #[test]
    fn empty_bundle_is_identity() {
        let out = enrich_caption(&base(), &AnnotationBundle::default(), &EnrichOptions::default()).unwrap();
        assert_eq!(out.caption, base());
        assert_eq!(out.unannotated, vec!["car".to_string(), "tree".to_string()]);
    }

    #[test]
    fn unknown_id_is_named() {
        let mut ann = car_annotation();
        let a = ann.objects.remove("car").unwrap();
        ann.objects.insert("bus".into(), a);
        let err = enrich_caption(&base(), &ann, &EnrichOptions::default()).unwrap_err();
        assert!(err.to_string().contains("\"bus\""));
    }

    #[test]
    fn invalid_annotation_box() {
        let mut ann = car_annotation();
        ann.objects.get_mut("car").unwrap().bbox = BoundingBox { x0: 0.5, y0: 0.1, x1: 0.5, y1: 0.2 };
        assert!(matches!(
            enrich_caption(&base(), &ann, &EnrichOptions::default()),
            Err(EnrichError::InvalidBox { .. })
        ));
    }

    #[test]
    fn parses_bundle_file() {
        let text = r#"{
            "objects": {"car": {"box": [60, 55, 95, 90], "colors": [[204, 1, 1]], "depth": 2.0}},
            "palette": [[10, 20, 30]]
        }"#;
        assert_eq!(parse_annotations(text).unwrap(), car_annotation());
        let bad = r#"{"objects": {"car": {"box": [0.1, 0.1, 0.2, 0.2], "colors": [[1, 2, 256]]}}}"#;
        match parse_annotations(bad) {
            Err(EnrichError::Schema(v)) => assert_eq!(v[0].path, "objects.car.colors[0][2]"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
