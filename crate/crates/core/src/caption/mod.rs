//! Parametric structured captions: numeric boxes and RGB colors attached to
//! the objects of a scene description.

mod codec;
mod edit;
mod enrich;
mod types;

pub use codec::{
    caption_from_value, parse_caption, serialize_caption, validate_caption, validate_document, CaptionError,
    CoordForm,
};
pub use edit::{apply_edit, apply_script, parse_script, EditError, EditOp};
pub use enrich::{
    enrich_caption, parse_annotations, AnnotationBundle, EnrichError, EnrichOptions, Enriched, ObjectAnnotation,
};
pub use types::{
    quantize_coord, Aspect, BoundingBox, BoxError, ObjectSpec, RgbColor, ScenePalette, StructuredCaption,
    Violation, COORD_SCALE, MAX_PALETTE_COLORS,
};
