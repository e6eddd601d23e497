//! The two authenticity classifiers and their label layout.
//!
//! * C-type: `2M` classes, one per (character, font bit) pair, laid out as
//!   `char_index + M * forged`.
//! * C′-type: two classes, genuine and forged.
//!
//! A third kind, a plain `M`-way character classifier, serves as the
//! standard recognizer in the field verdict.

mod model;
mod train;

use serde::{Deserialize, Serialize};

use crate::nn::{LayerSpec, Network, Tensor};
use crate::synth::GlyphImage;
use crate::{Error, Result, IMAGE_HEIGHT, IMAGE_PIXELS, IMAGE_WIDTH};

pub use model::{TrainedModel, TrainingProvenance};
pub use train::{train, EpochLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierKind {
    /// Joint character and font bit.
    CType { m: usize },
    /// Font bit only.
    CPrime,
    /// Character only.
    Character { m: usize },
}

impl ClassifierKind {
    pub fn output_width(&self) -> usize {
        match *self {
            ClassifierKind::CType { m } => 2 * m,
            ClassifierKind::CPrime => 2,
            ClassifierKind::Character { m } => m,
        }
    }

    /// Alphabet size, if the kind predicts characters.
    pub fn alphabet(&self) -> Option<usize> {
        match *self {
            ClassifierKind::CType { m } | ClassifierKind::Character { m } => Some(m),
            ClassifierKind::CPrime => None,
        }
    }

    pub fn predicts_font(&self) -> bool {
        !matches!(self, ClassifierKind::Character { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::CType { .. } => "c",
            ClassifierKind::CPrime => "cprime",
            ClassifierKind::Character { .. } => "char",
        }
    }

    /// Parses `c`, `cprime` or `char`.
    pub fn parse(name: &str, m: usize) -> Result<Self> {
        match name {
            "c" => Ok(ClassifierKind::CType { m }),
            "cprime" => Ok(ClassifierKind::CPrime),
            "char" => Ok(ClassifierKind::Character { m }),
            other => Err(Error::InvalidConfig(format!("unknown classifier kind '{other}' (c, cprime, char)"))),
        }
    }

    pub(crate) fn tag(&self) -> u8 {
        match self {
            ClassifierKind::CType { .. } => 0,
            ClassifierKind::CPrime => 1,
            ClassifierKind::Character { .. } => 2,
        }
    }

    pub(crate) fn from_tag(tag: u8, m: usize) -> Result<Self> {
        match tag {
            0 => Ok(ClassifierKind::CType { m }),
            1 => Ok(ClassifierKind::CPrime),
            2 => Ok(ClassifierKind::Character { m }),
            other => Err(Error::Format(format!("unknown classifier kind tag {other}"))),
        }
    }
}

/// Maps (character, font bit) pairs to class indices and back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LabelCodec {
    pub kind: ClassifierKind,
}

impl LabelCodec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self { kind }
    }

    pub fn encode(&self, char_index: usize, forged: bool) -> Result<usize> {
        encode_label(char_index, forged, self.kind)
    }

    /// `(char_index, forged)` of class `k`; the character is absent for
    /// C′-type and the font bit is always `false` for the character kind.
    pub fn decode(&self, k: usize) -> Result<(Option<usize>, bool)> {
        let width = self.kind.output_width();
        if k >= width {
            return Err(Error::LabelOutOfRange { label: k, classes: width });
        }
        Ok(match self.kind {
            ClassifierKind::CType { m } => (Some(k % m), k >= m),
            ClassifierKind::CPrime => (None, k == 1),
            ClassifierKind::Character { .. } => (Some(k), false),
        })
    }
}

pub fn encode_label(char_index: usize, forged: bool, kind: ClassifierKind) -> Result<usize> {
    match kind {
        ClassifierKind::CPrime => Ok(forged as usize),
        ClassifierKind::CType { m } | ClassifierKind::Character { m } if char_index >= m => {
            Err(Error::LabelOutOfRange { label: char_index, classes: m })
        }
        ClassifierKind::CType { m } => Ok(char_index + m * forged as usize),
        ClassifierKind::Character { .. } => Ok(char_index),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub probabilities: Vec<f64>,
    /// Argmax class, ties broken towards the lower index.
    pub class_index: usize,
    /// Font bit of the argmax class.
    pub forged: bool,
    pub char_index: Option<usize>,
    /// Probability of the argmax class.
    pub confidence: f64,
    /// Total probability of the forged classes.
    pub p_forged: f64,
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    values.iter().enumerate().fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) }).0
}

pub fn decode_output(probabilities: &[f64], kind: ClassifierKind) -> Result<Prediction> {
    let width = kind.output_width();
    if probabilities.len() != width {
        return Err(Error::Shape(format!(
            "{} classifier expects {width} probabilities, got {}",
            kind.name(),
            probabilities.len()
        )));
    }
    let k = argmax(probabilities);
    let (char_index, forged) = LabelCodec::new(kind).decode(k)?;
    let p_forged = match kind {
        ClassifierKind::CType { m } => probabilities[m..].iter().sum(),
        ClassifierKind::CPrime => probabilities[1],
        ClassifierKind::Character { .. } => 0.0,
    };
    Ok(Prediction {
        probabilities: probabilities.to_vec(),
        class_index: k,
        forged,
        char_index,
        confidence: probabilities[k],
        p_forged,
    })
}

/// Reference layer stack: three 3×3 convolutions (1→8 stride 1, 8→8
/// stride 2, 8→12 stride 2, each followed by ReLU) and one dense layer
/// from the flattened 5×4×12 map to the output width.
pub fn reference_specs(kind: ClassifierKind) -> Vec<LayerSpec> {
    vec![
        LayerSpec::conv(3, 1, 8, 1, 1),
        LayerSpec::relu(),
        LayerSpec::conv(3, 8, 8, 2, 1),
        LayerSpec::relu(),
        LayerSpec::conv(3, 8, 12, 2, 1),
        LayerSpec::relu(),
        LayerSpec::dense(5 * 4 * 12, kind.output_width()),
    ]
}

/// Zero-initialized reference network for `kind`.
pub fn build_network(kind: ClassifierKind) -> Network {
    Network::new([IMAGE_HEIGHT, IMAGE_WIDTH, 1], &reference_specs(kind)).expect("reference stack is consistent")
}

/// Stacks images into a `[B, 19, 15, 1]` tensor.
pub fn images_to_tensor<'a>(images: impl IntoIterator<Item = &'a GlyphImage>) -> Tensor {
    let mut data = Vec::new();
    for img in images {
        data.extend(img.to_f64());
    }
    let b = data.len() / IMAGE_PIXELS;
    Tensor::new(vec![b, IMAGE_HEIGHT, IMAGE_WIDTH, 1], data).expect("whole images")
}

#[cfg(test)]
mod tests {
    use super::*;

    const C10: ClassifierKind = ClassifierKind::CType { m: 10 };

    #[test]
    fn label_layout() {
        assert_eq!(encode_label(0, false, C10).unwrap(), 0);
        assert_eq!(encode_label(3, true, C10).unwrap(), 13);
        assert_eq!(encode_label(9, true, ClassifierKind::CPrime).unwrap(), 1);
        assert!(matches!(encode_label(10, false, C10), Err(Error::LabelOutOfRange { .. })));
    }

    #[test]
    fn decode_one_hot() {
        let mut p = vec![0.0; 20];
        p[13] = 1.0;
        let pred = decode_output(&p, C10).unwrap();
        assert_eq!(pred.char_index, Some(3));
        assert!(pred.forged);
    }

    #[test]
    fn uniform_output_has_even_font_marginal() {
        let pred = decode_output(&[0.05; 20], C10).unwrap();
        assert!((pred.p_forged - 0.5).abs() < 1e-12);
        assert_eq!(pred.class_index, 0);
    }

    #[test]
    fn split_mass_uses_argmax() {
        let mut p = vec![0.0; 20];
        p[2] = 0.4;
        p[12] = 0.6;
        let pred = decode_output(&p, C10).unwrap();
        assert_eq!(pred.char_index, Some(2));
        assert!(pred.forged);
        assert!((pred.p_forged - 0.6).abs() < 1e-12);
    }

    #[test]
    fn width_mismatch_rejected() {
        assert!(matches!(decode_output(&[0.5, 0.5], C10), Err(Error::Shape(_))));
    }

    #[test]
    fn reference_architecture_budget() {
        let c = build_network(C10);
        assert_eq!(c.output_width(), 20);
        assert_eq!(c.param_count(), 6360);
        assert!((6000..=9000).contains(&c.param_count()));
        assert_eq!(build_network(ClassifierKind::CPrime).output_width(), 2);
        assert_eq!(build_network(ClassifierKind::CPrime).param_count(), 2022);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [C10, ClassifierKind::CPrime, ClassifierKind::Character { m: 10 }] {
            assert_eq!(ClassifierKind::parse(k.name(), 10).unwrap(), k);
            assert_eq!(ClassifierKind::from_tag(k.tag(), 10).unwrap(), k);
        }
    }
}
