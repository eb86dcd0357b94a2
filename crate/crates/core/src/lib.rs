//! Structured-caption tooling and the evaluation metrics that go with it:
//! color fidelity (CIELab K-means with CIEDE2000 and a–b distance), box
//! alignment (COCO-style AP/AR) and pairwise preference win rates with
//! Wilson intervals. A flat reference rasterizer closes the loop so every
//! metric can be checked without a generative model.

pub mod boxeval;
pub mod caption;
pub mod colorlab;
pub mod image;
pub mod palette;
pub mod prefs;
pub mod render;

pub use caption::{BoundingBox, RgbColor, StructuredCaption};
