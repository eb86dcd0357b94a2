#![allow(dead_code)]

use std::collections::BTreeMap;

use paracap_core::boxeval::{Detection, GroundTruthBox};
use paracap_core::caption::{
    quantize_coord, Aspect, BoundingBox, EditOp, ObjectSpec, RgbColor, ScenePalette, StructuredCaption,
};
use proptest::collection::{btree_map, vec};
use proptest::option;
use proptest::prelude::*;
use serde_json::Value;

const WORDS: &[&str] = &["cat", "dog", "lamp", "vase", "chair", "kite", "boat"];

pub fn arb_color() -> impl Strategy<Value = RgbColor> {
    any::<[u8; 3]>().prop_map(|[r, g, b]| RgbColor::new(r, g, b))
}

/// A valid box on the 1e-4 grid with each side at least `min_side`.
pub fn arb_box(min_side: f64) -> impl Strategy<Value = BoundingBox> {
    let steps = 10_000u32;
    let min = (min_side * f64::from(steps)).ceil() as u32;
    (min..=steps, min..=steps).prop_flat_map(move |(w, h)| {
        (0..=steps - w, 0..=steps - h).prop_map(move |(x, y)| {
            let q = |v: u32| quantize_coord(f64::from(v) / f64::from(steps));
            BoundingBox::new(q(x), q(y), q(x + w), q(y + h)).unwrap()
        })
    })
}

fn arb_object(i: usize, min_side: f64) -> impl Strategy<Value = ObjectSpec> {
    (
        prop::sample::select(WORDS),
        option::of(arb_box(min_side)),
        vec(arb_color(), 0..3),
        option::of((0u32..2000).prop_map(|d| f64::from(d) / 100.0)),
        btree_map("[a-z]{1,6}", "[a-z ]{0,8}", 0..3),
    )
        .prop_map(move |(word, bbox, colors, depth, attributes)| ObjectSpec {
            id: format!("o{i}"),
            description: format!("a {word}"),
            bbox,
            colors,
            depth,
            attributes,
        })
}

pub fn arb_caption() -> impl Strategy<Value = StructuredCaption> {
    arb_caption_with(1e-4)
}

/// Captions whose boxes all have sides of at least `min_side`.
pub fn arb_caption_with(min_side: f64) -> impl Strategy<Value = StructuredCaption> {
    (0usize..6).prop_flat_map(move |n| {
        (
            "[a-z ]{0,20}",
            (0..n).map(|i| arb_object(i, min_side)).collect::<Vec<_>>(),
            option::of(vec(arb_color(), 1..5).prop_map(|colors| ScenePalette { colors })),
            option::of((1u32..20, 1u32..20).prop_map(|(width, height)| Aspect { width, height })),
        )
            .prop_map(|(scene, objects, palette, aspect)| StructuredCaption { scene, objects, palette, aspect })
    })
}

/// An edit addressing existing objects of `c` (falls back to a palette edit
/// when `c` has no objects).
pub fn arb_edit(c: &StructuredCaption) -> BoxedStrategy<EditOp> {
    let palette = vec(arb_color(), 1..5).prop_map(|colors| EditOp::SetPalette { colors });
    if c.objects.is_empty() {
        return palette.boxed();
    }
    let ids: Vec<String> = c.objects.iter().map(|o| o.id.clone()).collect();
    let id = prop::sample::select(ids.clone());
    let step = (-500i32..=500).prop_map(|v| f64::from(v) / 10_000.0);
    prop_oneof![
        (id.clone(), step.clone(), step.clone()).prop_map(|(target, dx, dy)| EditOp::MoveBox { target, delta: [dx, dy] }),
        (id.clone(), 1u32..3000, 1u32..3000).prop_map(|(target, w, h)| EditOp::ResizeBox {
            target,
            size: [f64::from(w) / 10_000.0, f64::from(h) / 10_000.0]
        }),
        (id.clone(), prop::sample::select(ids)).prop_map(|(a, b)| EditOp::SwapBoxes { targets: [a, b] }),
        (id.clone(), vec(arb_color(), 0..3)).prop_map(|(target, colors)| EditOp::SetColor { target, colors }),
        palette,
        (id, "[a-z]{1,6}", "[a-z ]{0,8}").prop_map(|(target, key, value)| EditOp::SetAttribute { target, key, value }),
    ]
    .boxed()
}

/// Paths at which two JSON documents differ, e.g. `objects[1].box[2]`.
pub fn diff_paths(a: &Value, b: &Value) -> Vec<String> {
    let mut out = Vec::new();
    diff_into(a, b, String::new(), &mut out);
    out
}

fn diff_into(a: &Value, b: &Value, path: String, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            let keys: std::collections::BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            for k in keys {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match (x.get(k), y.get(k)) {
                    (Some(u), Some(v)) => diff_into(u, v, p, out),
                    _ => out.push(p),
                }
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                diff_into(u, v, format!("{path}[{i}]"), out);
            }
        }
        _ if a == b => {}
        _ => out.push(path),
    }
}

/// True when `path` equals `prefix` or lies beneath it.
pub fn under(path: &str, prefix: &str) -> bool {
    path.strip_prefix(prefix).is_some_and(|rest| rest.is_empty() || rest.starts_with('.') || rest.starts_with('['))
}

pub fn gt(image: &str, cat: &str, b: BoundingBox) -> GroundTruthBox {
    GroundTruthBox { image_id: image.into(), category: cat.into(), bbox: b }
}

pub fn det(image: &str, cat: &str, score: f64, b: BoundingBox) -> Detection {
    Detection { image_id: image.into(), category: cat.into(), score, bbox: b }
}

pub fn bx(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

/// Random ground truths and detections over a few images and two
/// categories; detections are GT boxes perturbed by up to `noise`.
pub fn arb_box_problem() -> impl Strategy<Value = (Vec<GroundTruthBox>, Vec<Detection>)> {
    let gt_s = vec((0usize..3, 0usize..2, arb_box(0.05)), 1..8);
    gt_s.prop_flat_map(|gts| {
        let n = gts.len();
        let dets = vec((0..n, -0.1f64..0.1, -0.1f64..0.1, 0.0f64..1.0, any::<bool>()), 0..12);
        let spurious = vec((0usize..3, 0usize..2, arb_box(0.05), 0.0f64..1.0), 0..4);
        (Just(gts), dets, spurious)
    })
    .prop_map(|(gts, dets, spurious)| {
        let name = |i: usize| format!("img{i}");
        let cat = |c: usize| ["cat", "dog"][c].to_string();
        let gts: Vec<GroundTruthBox> =
            gts.into_iter().map(|(i, c, b)| GroundTruthBox { image_id: name(i), category: cat(c), bbox: b }).collect();
        let mut out: Vec<Detection> = dets
            .into_iter()
            .filter_map(|(g, dx, dy, score, grow)| {
                let b = gts[g].bbox;
                let s = if grow { 0.05 } else { 0.0 };
                let clip = |v: f64| v.clamp(0.0, 1.0);
                let moved = BoundingBox::new(clip(b.x0 + dx - s), clip(b.y0 + dy), clip(b.x1 + dx), clip(b.y1 + dy + s)).ok()?;
                Some(Detection { image_id: gts[g].image_id.clone(), category: gts[g].category.clone(), score, bbox: moved })
            })
            .collect();
        out.extend(spurious.into_iter().map(|(i, c, b, score)| Detection { image_id: name(i), category: cat(c), score, bbox: b }));
        (gts, out)
    })
}

pub fn unit_dims(images: impl IntoIterator<Item = String>) -> BTreeMap<String, paracap_core::boxeval::ImageDims> {
    images.into_iter().map(|i| (i, paracap_core::boxeval::ImageDims { width: 256, height: 256 })).collect()
}
