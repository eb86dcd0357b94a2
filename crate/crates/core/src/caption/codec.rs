//! JSON reading and canonical writing of caption documents.
//!
//! Parsing walks the raw JSON tree so that every schema problem is reported
//! with the path of the offending value; the typed caption is only produced
//! when no violation was found.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use super::types::{
    quantize_coord, Aspect, BoundingBox, ObjectSpec, RgbColor, ScenePalette, StructuredCaption,
    Violation, MAX_PALETTE_COLORS,
};

#[derive(Debug, Error)]
pub enum CaptionError {
    #[error("malformed caption document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("{}", join_violations(.0))]
    Schema(Vec<Violation>),
}

impl CaptionError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            CaptionError::Schema(v) => v,
            CaptionError::Malformed(_) => &[],
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Coordinate notation of a serialized document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoordForm {
    /// Normalized `[0, 1]` coordinates, four decimals.
    #[default]
    Unit,
    /// Percent `[0, 100]` coordinates, one decimal.
    Percent,
}

impl CoordForm {
    fn keyword(self) -> &'static str {
        match self {
            CoordForm::Unit => "unit",
            CoordForm::Percent => "percent",
        }
    }
}

pub fn parse_caption(text: &str) -> Result<StructuredCaption, CaptionError> {
    let value: Value = serde_json::from_str(text)?;
    caption_from_value(&value)
}

/// Full schema check of a document. Returns every violation found, including
/// typed invariants (duplicate ids, palette size, ...).
pub fn validate_document(text: &str) -> Result<Vec<Violation>, serde_json::Error> {
    let value: Value = serde_json::from_str(text)?;
    Ok(match caption_from_value(&value) {
        Ok(_) => Vec::new(),
        Err(CaptionError::Schema(v)) => v,
        Err(CaptionError::Malformed(_)) => unreachable!("value already parsed"),
    })
}

pub fn caption_from_value(value: &Value) -> Result<StructuredCaption, CaptionError> {
    let mut r = Reader::default();
    let caption = r.caption(value);
    if let Some(c) = &caption {
        r.violations.extend(validate_caption(c));
    }
    match caption {
        Some(c) if r.violations.is_empty() => Ok(c),
        _ => Err(CaptionError::Schema(dedup(r.violations))),
    }
}

fn dedup(violations: Vec<Violation>) -> Vec<Violation> {
    let mut seen = HashSet::new();
    violations.into_iter().filter(|v| seen.insert(v.clone())).collect()
}

/// Checks the typed invariants of an in-memory caption.
pub fn validate_caption(c: &StructuredCaption) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, obj) in c.objects.iter().enumerate() {
        let path = format!("objects[{i}]");
        if obj.id.is_empty() {
            out.push(Violation::new(format!("{path}.id"), "empty object id"));
        } else if !seen.insert(obj.id.as_str()) {
            out.push(Violation::new(format!("{path}.id"), format!("duplicate object id {:?}", obj.id)));
        }
        if let Some(b) = &obj.bbox {
            if let Err(e) = b.check() {
                out.push(Violation::new(format!("{path}.box"), e.to_string()));
            }
        }
        if let Some(d) = obj.depth {
            if !d.is_finite() || d < 0.0 {
                out.push(Violation::new(format!("{path}.depth"), format!("depth must be finite and ≥ 0, got {d}")));
            }
        }
    }
    if let Some(p) = &c.palette {
        out.extend(palette_violations(p.colors.len(), "palette"));
    }
    if let Some(a) = &c.aspect {
        if a.width == 0 || a.height == 0 {
            out.push(Violation::new("aspect", "aspect terms must be positive"));
        }
    }
    out
}

pub(crate) fn palette_violations(len: usize, path: &str) -> Vec<Violation> {
    if len == 0 {
        vec![Violation::new(path, "palette must not be empty")]
    } else if len > MAX_PALETTE_COLORS {
        vec![Violation::new(path, format!("palette has {len} colors, at most {MAX_PALETTE_COLORS} allowed"))]
    } else {
        Vec::new()
    }
}

/// Collects violations while decoding raw JSON into typed values.
#[derive(Default)]
pub(crate) struct Reader {
    pub(crate) violations: Vec<Violation>,
    percent: bool,
}

impl Reader {
    fn push(&mut self, path: &str, msg: impl Into<String>) {
        self.violations.push(Violation::new(path, msg));
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        match v.as_object() {
            Some(m) => Some(m),
            None => {
                self.push(path, "expected an object");
                None
            }
        }
    }

    fn string(&mut self, v: &Value, path: &str) -> Option<String> {
        match v.as_str() {
            Some(s) => Some(s.to_string()),
            None => {
                self.push(path, "expected a string");
                None
            }
        }
    }

    fn unknown_keys(&mut self, m: &Map<String, Value>, allowed: &[&str], path: &str) {
        for k in m.keys() {
            if !allowed.contains(&k.as_str()) {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                self.push(&p, "unknown field");
            }
        }
    }

    /// Decides the coordinate form of a document: explicit `units` wins,
    /// otherwise any coordinate above 1 marks the document as percent.
    pub(crate) fn detect_units(&mut self, doc: &Map<String, Value>, boxes: &[&Value]) {
        match doc.get("units") {
            Some(Value::String(s)) if s == "percent" => self.percent = true,
            Some(Value::String(s)) if s == "unit" => self.percent = false,
            Some(_) => self.push("units", "expected \"unit\" or \"percent\""),
            None => {
                self.percent = boxes.iter().any(|b| {
                    b.as_array()
                        .is_some_and(|a| a.iter().any(|x| x.as_f64().is_some_and(|x| x > 1.0)))
                })
            }
        }
    }

    fn caption(&mut self, v: &Value) -> Option<StructuredCaption> {
        let doc = self.object(v, "$")?;
        self.unknown_keys(doc, &["scene", "units", "aspect", "palette", "objects"], "");

        let boxes: Vec<&Value> = doc
            .get("objects")
            .and_then(Value::as_array)
            .map(|objs| objs.iter().filter_map(|o| o.get("box")).collect())
            .unwrap_or_default();
        self.detect_units(doc, &boxes);

        let scene = match doc.get("scene") {
            Some(s) => self.string(s, "scene"),
            None => {
                self.push("scene", "missing required field");
                None
            }
        };
        let aspect = match doc.get("aspect") {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.string(v, "aspect").and_then(|s| match s.parse::<Aspect>() {
                Ok(a) => Some(Some(a)),
                Err(e) => {
                    self.push("aspect", e);
                    None
                }
            }),
        };
        let palette = match doc.get("palette") {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.palette(v, "palette").map(Some),
        };
        let objects = match doc.get("objects") {
            None => {
                self.push("objects", "missing required field");
                None
            }
            Some(Value::Array(items)) => {
                let parsed: Vec<_> = items
                    .iter()
                    .enumerate()
                    .map(|(i, o)| self.object_spec(o, &format!("objects[{i}]")))
                    .collect();
                parsed.into_iter().collect::<Option<Vec<_>>>()
            }
            Some(_) => {
                self.push("objects", "expected an array");
                None
            }
        };

        Some(StructuredCaption { scene: scene?, objects: objects?, palette: palette?, aspect: aspect? })
    }

    fn object_spec(&mut self, v: &Value, path: &str) -> Option<ObjectSpec> {
        let m = self.object(v, path)?;
        self.unknown_keys(m, &["id", "description", "box", "colors", "depth", "attributes"], path);
        let id = match m.get("id") {
            Some(v) => self.string(v, &format!("{path}.id")),
            None => {
                self.push(&format!("{path}.id"), "missing required field");
                None
            }
        };
        let description = match m.get("description") {
            Some(v) => self.string(v, &format!("{path}.description")),
            None => {
                self.push(&format!("{path}.description"), "missing required field");
                None
            }
        };
        let bbox = match m.get("box") {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.bbox(v, &format!("{path}.box")).map(Some),
        };
        let colors = match m.get("colors") {
            None | Some(Value::Null) => Some(Vec::new()),
            Some(v) => self.color_list(v, &format!("{path}.colors")),
        };
        let depth = match m.get("depth") {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.depth(v, &format!("{path}.depth")).map(Some),
        };
        let attributes = match m.get("attributes") {
            None | Some(Value::Null) => Some(BTreeMap::new()),
            Some(v) => self.attributes(v, &format!("{path}.attributes")),
        };
        Some(ObjectSpec {
            id: id?,
            description: description?,
            bbox: bbox?,
            colors: colors?,
            depth: depth?,
            attributes: attributes?,
        })
    }

    pub(crate) fn bbox(&mut self, v: &Value, path: &str) -> Option<BoundingBox> {
        let Some(items) = v.as_array() else {
            self.push(path, "expected [x0, y0, x1, y1]");
            return None;
        };
        if items.len() != 4 {
            self.push(path, format!("expected 4 coordinates, got {}", items.len()));
            return None;
        }
        let mut coords = [0.0; 4];
        for (i, item) in items.iter().enumerate() {
            match item.as_f64() {
                Some(x) => coords[i] = x,
                None => {
                    self.push(&format!("{path}[{i}]"), "expected a number");
                    return None;
                }
            }
        }
        let scale = if self.percent { 100.0 } else { 1.0 };
        let [x0, y0, x1, y1] = coords.map(|c| quantize_coord(c / scale));
        let b = BoundingBox { x0, y0, x1, y1 };
        match b.check() {
            Ok(()) => Some(b),
            Err(e) => {
                self.push(path, e.to_string());
                None
            }
        }
    }

    fn color(&mut self, v: &Value, path: &str) -> Option<RgbColor> {
        let Some(items) = v.as_array() else {
            self.push(path, "expected [r, g, b]");
            return None;
        };
        if items.len() != 3 {
            self.push(path, format!("expected 3 channels, got {}", items.len()));
            return None;
        }
        let mut ch = [0u8; 3];
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let p = format!("{path}[{i}]");
            match item.as_i64() {
                Some(x) if (0..=255).contains(&x) => ch[i] = x as u8,
                Some(x) => {
                    self.push(&p, format!("channel value {x} outside [0, 255]"));
                    ok = false;
                }
                None => {
                    self.push(&p, "expected an integer channel value");
                    ok = false;
                }
            }
        }
        ok.then(|| RgbColor::from(ch))
    }

    pub(crate) fn color_list(&mut self, v: &Value, path: &str) -> Option<Vec<RgbColor>> {
        let Some(items) = v.as_array() else {
            self.push(path, "expected an array of [r, g, b]");
            return None;
        };
        let parsed: Vec<_> = items
            .iter()
            .enumerate()
            .map(|(i, c)| self.color(c, &format!("{path}[{i}]")))
            .collect();
        parsed.into_iter().collect()
    }

    pub(crate) fn palette(&mut self, v: &Value, path: &str) -> Option<ScenePalette> {
        let colors = self.color_list(v, path)?;
        let problems = palette_violations(colors.len(), path);
        if problems.is_empty() {
            Some(ScenePalette { colors })
        } else {
            self.violations.extend(problems);
            None
        }
    }

    pub(crate) fn depth(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(d) if d.is_finite() && d >= 0.0 => Some(d),
            Some(d) => {
                self.push(path, format!("depth must be finite and ≥ 0, got {d}"));
                None
            }
            None => {
                self.push(path, "expected a number");
                None
            }
        }
    }

    fn attributes(&mut self, v: &Value, path: &str) -> Option<BTreeMap<String, String>> {
        let m = self.object(v, path)?;
        let mut out = BTreeMap::new();
        let mut ok = true;
        for (k, val) in m {
            match val.as_str() {
                Some(s) => {
                    out.insert(k.clone(), s.to_string());
                }
                None => {
                    self.push(&format!("{path}.{k}"), "expected a string");
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }
}

/// Canonical text of a caption.
///
/// Field order is fixed, attribute keys are sorted, coordinates carry four
/// decimals (unit form) or one decimal (percent form). Output always ends
/// with a newline.
pub fn serialize_caption(c: &StructuredCaption, form: CoordForm) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"scene\": {},", json_str(&c.scene));
    if form == CoordForm::Percent {
        let _ = writeln!(out, "  \"units\": {},", json_str(form.keyword()));
    }
    if let Some(a) = &c.aspect {
        let _ = writeln!(out, "  \"aspect\": {},", json_str(&a.to_string()));
    }
    if let Some(p) = &c.palette {
        let _ = writeln!(out, "  \"palette\": {},", color_list(&p.colors));
    }
    if c.objects.is_empty() {
        out.push_str("  \"objects\": []\n");
    } else {
        out.push_str("  \"objects\": [\n");
        for (i, obj) in c.objects.iter().enumerate() {
            write_object(&mut out, obj, form);
            out.push_str(if i + 1 < c.objects.len() { ",\n" } else { "\n" });
        }
        out.push_str("  ]\n");
    }
    out.push_str("}\n");
    out
}

fn write_object(out: &mut String, obj: &ObjectSpec, form: CoordForm) {
    let mut fields = vec![
        format!("\"id\": {}", json_str(&obj.id)),
        format!("\"description\": {}", json_str(&obj.description)),
    ];
    if let Some(b) = &obj.bbox {
        fields.push(format!("\"box\": {}", box_text(b, form)));
    }
    fields.push(format!("\"colors\": {}", color_list(&obj.colors)));
    if let Some(d) = obj.depth {
        fields.push(format!("\"depth\": {}", number(d)));
    }
    if obj.attributes.is_empty() {
        fields.push("\"attributes\": {}".to_string());
    } else {
        let entries: Vec<String> = obj
            .attributes
            .iter()
            .map(|(k, v)| format!("        {}: {}", json_str(k), json_str(v)))
            .collect();
        fields.push(format!("\"attributes\": {{\n{}\n      }}", entries.join(",\n")));
    }
    out.push_str("    {\n");
    let body: Vec<String> = fields.into_iter().map(|f| format!("      {f}")).collect();
    out.push_str(&body.join(",\n"));
    out.push_str("\n    }");
}

fn box_text(b: &BoundingBox, form: CoordForm) -> String {
    let parts: Vec<String> = b
        .to_array()
        .iter()
        .map(|&v| match form {
            CoordForm::Unit => format!("{:.4}", v),
            CoordForm::Percent => format!("{:.1}", v * 100.0),
        })
        .collect();
    format!("[{}]", parts.join(", "))
}

fn color_list(colors: &[RgbColor]) -> String {
    let parts: Vec<String> = colors.iter().map(|c| format!("[{}, {}, {}]", c.r, c.g, c.b)).collect();
    format!("[{}]", parts.join(", "))
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Shortest round-trip representation of a finite number.
fn number(v: f64) -> String {
    match serde_json::Number::from_f64(v) {
        Some(n) => n.to_string(),
        None => "null".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scene": "a red ball on a table",
        "objects": [
            {"id": "ball", "description": "a ball", "box": [0.25, 0.25, 0.75, 0.75], "colors": [[204, 1, 1]]}
        ]
    }"#;

    fn minimal_expected() -> StructuredCaption {
        StructuredCaption {
            scene: "a red ball on a table".into(),
            objects: vec![ObjectSpec::new("ball", "a ball")
                .with_box(BoundingBox::new(0.25, 0.25, 0.75, 0.75).unwrap())
                .with_colors(vec![RgbColor::new(204, 1, 1)])],
            palette: None,
            aspect: None,
        }
    }

    #[test]
    fn parses_minimal_document() {
        assert_eq!(parse_caption(MINIMAL).unwrap(), minimal_expected());
    }

    #[test]
    fn percent_flag_and_autodetect() {
        let flagged = r#"{"scene": "a red ball on a table", "units": "percent", "objects": [
            {"id": "ball", "description": "a ball", "box": [25, 25, 75, 75], "colors": [[204, 1, 1]]}]}"#;
        assert_eq!(parse_caption(flagged).unwrap(), minimal_expected());
        let detected = flagged.replace("\"units\": \"percent\", ", "");
        assert_eq!(parse_caption(&detected).unwrap(), minimal_expected());
        // Percent flag with all coordinates ≤ 1 still scales.
        let tiny = r#"{"scene": "", "units": "percent", "objects": [
            {"id": "a", "description": "", "box": [0.1, 0.1, 0.9, 0.9]}]}"#;
        let c = parse_caption(tiny).unwrap();
        assert_eq!(c.objects[0].bbox.unwrap().to_array(), [0.001, 0.001, 0.009, 0.009]);
    }

    #[test]
    fn degenerate_box_names_path() {
        let doc = MINIMAL.replace("[0.25, 0.25, 0.75, 0.75]", "[0.5, 0.2, 0.4, 0.9]");
        let err = parse_caption(&doc).unwrap_err();
        assert_eq!(err.violations(), &[Violation::new("objects[0].box", "x1 ≤ x0")]);
        assert!(err.to_string().contains("x1 ≤ x0"));
    }

    #[test]
    fn channel_out_of_range_names_channel() {
        let doc = MINIMAL.replace("[204, 1, 1]", "[204, 300, 1]");
        let v = validate_document(&doc).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "objects[0].colors[0][1]");
    }

    #[test]
    fn duplicate_ids_reported_once() {
        let mut c = minimal_expected();
        c.objects.push(c.objects[0].clone());
        let v = validate_caption(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "objects[1].id");
        assert!(v[0].message.contains("ball"));
        assert!(validate_caption(&minimal_expected()).is_empty());
    }

    #[test]
    fn missing_fields_and_malformed() {
        let err = parse_caption(r#"{"objects": [{"id": "a"}]}"#).unwrap_err();
        let paths: Vec<_> = err.violations().iter().map(|v| v.path.as_str()).collect();
        assert_eq!(paths, ["scene", "objects[0].description"]);
        assert!(matches!(parse_caption("{not json"), Err(CaptionError::Malformed(_))));
        let err = parse_caption(r#"{"scene": "", "objects": [], "extra": 1}"#).unwrap_err();
        assert_eq!(err.violations()[0].path, "extra");
    }

    #[test]
    fn palette_bounds() {
        let empty = r#"{"scene": "", "palette": [], "objects": []}"#;
        assert_eq!(validate_document(empty).unwrap()[0].path, "palette");
        let many = format!(r#"{{"scene": "", "palette": [{}], "objects": []}}"#, vec!["[1,2,3]"; 17].join(","));
        assert_eq!(validate_document(&many).unwrap().len(), 1);
    }

    #[test]
    fn canonical_text_shape() {
        let mut c = minimal_expected();
        c.aspect = Some(Aspect { width: 16, height: 9 });
        c.palette = Some(ScenePalette { colors: vec![RgbColor::new(1, 2, 3)] });
        c.objects[0].depth = Some(1.5);
        c.objects[0].attributes.insert("style".into(), "glossy".into());
        c.objects[0].attributes.insert("lighting".into(), "soft".into());
        let expected = r#"{
  "scene": "a red ball on a table",
  "aspect": "16:9",
  "palette": [[1, 2, 3]],
  "objects": [
    {
      "id": "ball",
      "description": "a ball",
      "box": [0.2500, 0.2500, 0.7500, 0.7500],
      "colors": [[204, 1, 1]],
      "depth": 1.5,
      "attributes": {
        "lighting": "soft",
        "style": "glossy"
      }
    }
  ]
}
"#;
        assert_eq!(serialize_caption(&c, CoordForm::Unit), expected);
        assert_eq!(parse_caption(expected).unwrap(), c);
    }

    #[test]
    fn percent_form_uses_figure_precision() {
        let mut c = minimal_expected();
        c.objects[0].bbox = Some(BoundingBox::new(0.272, 0.363, 0.548, 0.98).unwrap());
        let text = serialize_caption(&c, CoordForm::Percent);
        assert!(text.contains("\"units\": \"percent\""));
        assert!(text.contains("\"box\": [27.2, 36.3, 54.8, 98.0]"), "{text}");
        assert_eq!(parse_caption(&text).unwrap(), c);
    }

    #[test]
    fn empty_objects_document() {
        let c = StructuredCaption { scene: "empty".into(), ..Default::default() };
        let text = serialize_caption(&c, CoordForm::Unit);
        assert_eq!(text, "{\n  \"scene\": \"empty\",\n  \"objects\": []\n}\n");
        assert_eq!(parse_caption(&text).unwrap(), c);
    }
}
