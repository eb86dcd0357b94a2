//! Deterministic parametric edits of a caption.
//!
//! Each edit touches only the fields it addresses; everything else in the
//! caption is carried over unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::codec::palette_violations;
use super::types::{BoundingBox, BoxError, RgbColor, ScenePalette, StructuredCaption};

/// One edit record of an edit script (JSON, tagged by `op`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum EditOp {
    /// Translate a box by `[dx, dy]` in normalized units.
    MoveBox { target: String, delta: [f64; 2] },
    /// Set a box's `[width, height]`, keeping its top-left corner.
    ResizeBox { target: String, size: [f64; 2] },
    SwapBoxes { targets: [String; 2] },
    SetColor { target: String, colors: Vec<RgbColor> },
    SetPalette { colors: Vec<RgbColor> },
    SetAttribute { target: String, key: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditError {
    #[error("unknown target id {0:?}")]
    UnknownTarget(String),
    #[error("object {0:?} has no box to edit")]
    MissingBox(String),
    #[error("resulting box of {target:?} is invalid: {source}")]
    InvalidBox { target: String, source: BoxError },
    #[error("edit payload is not finite")]
    NonFinite,
    #[error("invalid palette: {0}")]
    InvalidPalette(String),
}

impl EditOp {
    /// Document paths (as in canonical JSON) this edit may change, e.g.
    /// `objects[2].box`. Unknown targets address nothing.
    pub fn addressed_paths(&self, caption: &StructuredCaption) -> Vec<String> {
        let obj = |id: &str, field: &str| caption.object_index(id).map(|i| format!("objects[{i}].{field}"));
        match self {
            EditOp::MoveBox { target, .. } | EditOp::ResizeBox { target, .. } => obj(target, "box").into_iter().collect(),
            EditOp::SwapBoxes { targets: [a, b] } => obj(a, "box").into_iter().chain(obj(b, "box")).collect(),
            EditOp::SetColor { target, .. } => obj(target, "colors").into_iter().collect(),
            EditOp::SetPalette { .. } => vec!["palette".to_string()],
            EditOp::SetAttribute { target, key, .. } => obj(target, &format!("attributes.{key}")).into_iter().collect(),
        }
    }
}

/// Returns a copy of `caption` with `edit` applied.
pub fn apply_edit(caption: &StructuredCaption, edit: &EditOp) -> Result<StructuredCaption, EditError> {
    let mut out = caption.clone();
    match edit {
        EditOp::MoveBox { target, delta: [dx, dy] } => {
            if !dx.is_finite() || !dy.is_finite() {
                return Err(EditError::NonFinite);
            }
            let i = index_of(&out, target)?;
            let b = out.objects[i].bbox.ok_or_else(|| EditError::MissingBox(target.clone()))?;
            let moved = BoundingBox { x0: b.x0 + dx, y0: b.y0 + dy, x1: b.x1 + dx, y1: b.y1 + dy };
            out.objects[i].bbox = Some(checked(moved, target)?);
        }
        EditOp::ResizeBox { target, size: [w, h] } => {
            if !w.is_finite() || !h.is_finite() {
                return Err(EditError::NonFinite);
            }
            let i = index_of(&out, target)?;
            let b = out.objects[i].bbox.ok_or_else(|| EditError::MissingBox(target.clone()))?;
            let resized = BoundingBox { x1: b.x0 + w, y1: b.y0 + h, ..b };
            out.objects[i].bbox = Some(checked(resized, target)?);
        }
        EditOp::SwapBoxes { targets: [a, b] } => {
            let i = index_of(&out, a)?;
            let j = index_of(&out, b)?;
            let (bi, bj) = (out.objects[i].bbox, out.objects[j].bbox);
            out.objects[i].bbox = bj;
            out.objects[j].bbox = bi;
        }
        EditOp::SetColor { target, colors } => {
            let i = index_of(&out, target)?;
            out.objects[i].colors = colors.clone();
        }
        EditOp::SetPalette { colors } => {
            if let Some(v) = palette_violations(colors.len(), "palette").first() {
                return Err(EditError::InvalidPalette(v.message.clone()));
            }
            out.palette = Some(ScenePalette { colors: colors.clone() });
        }
        EditOp::SetAttribute { target, key, value } => {
            let i = index_of(&out, target)?;
            out.objects[i].attributes.insert(key.clone(), value.clone());
        }
    }
    Ok(out)
}

/// Applies a script in order. On failure returns the index of the failing op.
pub fn apply_script(
    caption: &StructuredCaption,
    script: &[EditOp],
) -> Result<StructuredCaption, (usize, EditError)> {
    script
        .iter()
        .enumerate()
        .try_fold(caption.clone(), |c, (i, op)| apply_edit(&c, op).map_err(|e| (i, e)))
}

pub fn parse_script(text: &str) -> Result<Vec<EditOp>, serde_json::Error> {
    serde_json::from_str(text)
}

fn index_of(c: &StructuredCaption, id: &str) -> Result<usize, EditError> {
    c.object_index(id).ok_or_else(|| EditError::UnknownTarget(id.to_string()))
}

fn checked(b: BoundingBox, target: &str) -> Result<BoundingBox, EditError> {
    let b = b.quantized();
    b.check().map_err(|source| EditError::InvalidBox { target: target.to_string(), source })?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caption::{serialize_caption, CoordForm, ObjectSpec};

    fn couple() -> StructuredCaption {
        StructuredCaption {
            scene: "a man and a woman in a park, a fire hydrant nearby".into(),
            objects: vec![
                ObjectSpec::new("man", "a man in a coat")
                    .with_box(BoundingBox::new(0.1, 0.2, 0.4, 0.9).unwrap())
                    .with_colors(vec![RgbColor::new(20, 30, 120)]),
                ObjectSpec::new("woman", "a woman in a dress")
                    .with_box(BoundingBox::new(0.55, 0.25, 0.85, 0.95).unwrap())
                    .with_colors(vec![RgbColor::new(200, 40, 40)]),
                ObjectSpec::new("hydrant", "a fire hydrant")
                    .with_box(BoundingBox::new(0.708, 0.875, 0.752, 0.952).unwrap())
                    .with_colors(vec![RgbColor::new(204, 1, 1)]),
            ],
            palette: None,
            aspect: None,
        }
    }

    #[test]
    fn swap_exchanges_boxes_only() {
        let c = couple();
        let out = apply_edit(&c, &EditOp::SwapBoxes { targets: ["man".into(), "woman".into()] }).unwrap();
        assert_eq!(out.objects[0].bbox, c.objects[1].bbox);
        assert_eq!(out.objects[1].bbox, c.objects[0].bbox);
        assert_eq!(out.objects[0].colors, c.objects[0].colors);
        assert_eq!(out.objects[2], c.objects[2]);
    }

    #[test]
    fn recolor_touches_only_target_colors() {
        let c = couple();
        let out = apply_edit(
            &c,
            &EditOp::SetColor { target: "hydrant".into(), colors: vec![RgbColor::new(212, 106, 140)] },
        )
        .unwrap();
        let mut expected = c.clone();
        expected.objects[2].colors = vec![RgbColor::new(212, 106, 140)];
        assert_eq!(out, expected);
    }

    #[test]
    fn zero_move_is_identity() {
        let c = couple();
        let out = apply_edit(&c, &EditOp::MoveBox { target: "man".into(), delta: [0.0, 0.0] }).unwrap();
        assert_eq!(out, c);
        assert_eq!(serialize_caption(&out, CoordForm::Unit), serialize_caption(&c, CoordForm::Unit));
    }

    #[test]
    fn move_and_resize() {
        let c = couple();
        let out = apply_edit(&c, &EditOp::MoveBox { target: "man".into(), delta: [0.1, -0.1] }).unwrap();
        assert_eq!(out.objects[0].bbox.unwrap().to_array(), [0.2, 0.1, 0.5, 0.8]);
        let out = apply_edit(&c, &EditOp::ResizeBox { target: "man".into(), size: [0.2, 0.3] }).unwrap();
        assert_eq!(out.objects[0].bbox.unwrap().to_array(), [0.1, 0.2, 0.3, 0.5]);
    }

    #[test]
    fn edit_errors() {
        let c = couple();
        assert_eq!(
            apply_edit(&c, &EditOp::SetColor { target: "dog".into(), colors: vec![] }),
            Err(EditError::UnknownTarget("dog".into()))
        );
        assert!(matches!(
            apply_edit(&c, &EditOp::MoveBox { target: "woman".into(), delta: [0.2, 0.0] }),
            Err(EditError::InvalidBox { .. })
        ));
        assert!(matches!(
            apply_edit(&c, &EditOp::ResizeBox { target: "woman".into(), size: [0.0, 0.1] }),
            Err(EditError::InvalidBox { source: BoxError::XOrder, .. })
        ));
        assert!(matches!(apply_edit(&c, &EditOp::SetPalette { colors: vec![] }), Err(EditError::InvalidPalette(_))));
        let mut no_box = c.clone();
        no_box.objects[0].bbox = None;
        assert_eq!(
            apply_edit(&no_box, &EditOp::MoveBox { target: "man".into(), delta: [0.0, 0.0] }),
            Err(EditError::MissingBox("man".into()))
        );
    }

    #[test]
    fn script_reports_failing_index() {
        let script = parse_script(
            r#"[
                {"op": "swap-boxes", "targets": ["man", "woman"]},
                {"op": "set-attribute", "target": "ghost", "key": "pose", "value": "waving"}
            ]"#,
        )
        .unwrap();
        let err = apply_script(&couple(), &script).unwrap_err();
        assert_eq!(err.0, 1);
        assert_eq!(apply_script(&couple(), &[]).unwrap(), couple());
    }

    #[test]
    fn script_json_shape() {
        let ops = parse_script(
            r#"[{"op": "move-box", "target": "a", "delta": [0.1, 0]},
                {"op": "set-palette", "colors": [[1, 2, 3]]}]"#,
        )
        .unwrap();
        assert_eq!(ops[0], EditOp::MoveBox { target: "a".into(), delta: [0.1, 0.0] });
        assert!(parse_script(r#"[{"op": "set-color", "target": "a", "colors": [[300, 0, 0]]}]"#).is_err());
    }
}
