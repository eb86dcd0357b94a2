mod common;

use common::{arb_caption, arb_caption_with, arb_edit, diff_paths, under};
use paracap_core::caption::{
    apply_edit, enrich_caption, parse_caption, serialize_caption, validate_caption, AnnotationBundle, CoordForm,
    EnrichOptions, ObjectAnnotation, StructuredCaption,
};
use proptest::prelude::*;
use serde_json::Value;

fn canonical_value(c: &StructuredCaption) -> Value {
    serde_json::from_str(&serialize_caption(c, CoordForm::Unit)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn round_trip(c in arb_caption()) {
        let text = serialize_caption(&c, CoordForm::Unit);
        let back = parse_caption(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize_caption(&back, CoordForm::Unit), text);
    }

    // One-decimal percent resolves 0.001; sides of 0.002 survive rounding.
    #[test]
    fn percent_form_loses_at_most_declared_precision(c in arb_caption_with(0.002)) {
        let back = parse_caption(&serialize_caption(&c, CoordForm::Percent)).unwrap();
        for (a, b) in c.objects.iter().zip(&back.objects) {
            match (a.bbox, b.bbox) {
                (Some(x), Some(y)) => {
                    for (u, v) in x.to_array().iter().zip(y.to_array()) {
                        prop_assert!((u - v).abs() <= 5e-4 + 1e-12);
                    }
                }
                (x, y) => prop_assert_eq!(x, y),
            }
        }
        let again = serialize_caption(&back, CoordForm::Percent);
        prop_assert_eq!(serialize_caption(&parse_caption(&again).unwrap(), CoordForm::Percent), again);
    }

    #[test]
    fn edits_are_local_and_pure((c, e) in arb_caption().prop_flat_map(|c| { let e = arb_edit(&c); (Just(c), e) })) {
        let Ok(edited) = apply_edit(&c, &e) else { return Ok(()); };
        prop_assert_eq!(apply_edit(&c, &e).unwrap(), edited.clone());
        let addressed = e.addressed_paths(&c);
        for path in diff_paths(&canonical_value(&c), &canonical_value(&edited)) {
            prop_assert!(addressed.iter().any(|a| under(&path, a)), "{} changed by {:?}", path, e);
        }
        prop_assert!(validate_caption(&edited).is_empty());
    }

    #[test]
    fn enrich_then_validate_is_clean(c in arb_caption(), seed in any::<u64>()) {
        let mut bundle = AnnotationBundle::default();
        for (i, o) in c.objects.iter().enumerate() {
            if (seed >> (i % 64)) & 1 == 1 {
                let b = paracap_core::BoundingBox::new(0.1, 0.2, 0.3, 0.4).unwrap();
                bundle.objects.insert(o.id.clone(), ObjectAnnotation { bbox: b, colors: vec![], depth: Some(1.5) });
            }
        }
        let out = enrich_caption(&c, &bundle, &EnrichOptions::default()).unwrap();
        prop_assert!(validate_caption(&out.caption).is_empty());
        prop_assert_eq!(out.unannotated.len(), c.objects.len() - bundle.objects.len());
    }
}

#[test]
fn empty_script_is_byte_identity() {
    let text = "{\"scene\": \"x\", \"objects\": [{\"id\": \"a\", \"description\": \"b\", \"box\": [0.1, 0.1, 0.2, 0.2]}]}";
    let c = parse_caption(text).unwrap();
    let out = paracap_core::caption::apply_script(&c, &[]).unwrap();
    assert_eq!(serialize_caption(&out, CoordForm::Unit), serialize_caption(&c, CoordForm::Unit));
}
