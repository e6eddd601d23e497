//! Forged-font detection for single printed characters.
//!
//! The crate trains micro-CNNs that decide whether a character crop was
//! printed with a reference font (genuine) or with a look-alike substitute
//! (forged). Two classifier kinds are supported: a multi-task network that
//! predicts both the character and the font bit (`2M` classes), and a binary
//! network that predicts the font bit only.
//!
//! Modules, bottom-up:
//!
//! * [`synth`]: font registry, glyph rendering, augmentation and dataset files.
//! * [`nn`]: a small CPU neural-network engine (conv, dense, ReLU, SGD).
//! * [`classifier`]: label codec, reference architecture, training and inference.
//! * [`metrics`]: sensitivity/specificity, the per-class result-type matrix and
//!   the exclusion / force-forged sensitivity analyses.
//! * [`verdict`]: combines a character classifier with the authenticity
//!   classifier into a field-level decision.
//! * [`cli`]: the `fontcheck` command-line surface.

pub mod classifier;
pub mod cli;
mod error;
pub mod fixtures;
pub mod metrics;
pub mod nn;
pub mod synth;
pub mod util;
pub mod verdict;

pub use error::{Error, Result};

/// Width of every glyph image, in pixels.
pub const IMAGE_WIDTH: usize = 15;
/// Height of every glyph image, in pixels.
pub const IMAGE_HEIGHT: usize = 19;
/// Pixels per glyph image.
pub const IMAGE_PIXELS: usize = IMAGE_WIDTH * IMAGE_HEIGHT;
/// Alphabet size for the digit configurations shipped with the crate.
pub const DIGITS: usize = 10;

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
