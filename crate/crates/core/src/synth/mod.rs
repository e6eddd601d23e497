//! Synthetic character data: font registry, glyph rendering, capture-like
//! augmentation and labelled datasets.

mod augment;
mod dataset;
pub mod font;
mod image;
pub mod io;
pub mod raster;
mod registry;
mod render;

pub use self::image::GlyphImage;
pub use augment::{augment, AugmentationConfig, Span, StageProbabilities};
pub use dataset::{
    synthesize_dataset, synthesize_test_set, Dataset, DatasetKind, DatasetProvenance, GlyphSample, ProvenanceFont,
};
pub use io::{load_dataset, save_dataset};
pub use registry::{bundled_manifest_path, FontAsset, FontRegistry, FontRole, LoadedFont};
pub use render::{digit_char, render_char, render_glyph, Polarity, RenderConfig};
