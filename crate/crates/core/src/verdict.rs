//! Field-level authenticity verdict over a sequence of character crops.
//!
//! 1. A standard character classifier reads every symbol; its confidence
//!    times a per-class reliability becomes the symbol's weight.
//! 2. The authenticity classifier reads every symbol again. A symbol is
//!    flagged when it looks forged or when the two readings disagree.
//! 3. The field is forged when the weighted share of flagged symbols
//!    exceeds a threshold.

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierKind, Prediction, TrainedModel};
use crate::metrics::ModifiedConfusionMatrix;
use crate::synth::GlyphImage;
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.2;
/// Lower clamp for per-class reliability; also the value for classes with
/// no validation samples.
pub const RELIABILITY_MIN: f64 = 0.05;
/// Default recall below which a class may be treated as always flagged.
pub const DEFAULT_FORCE_BELOW: f64 = 0.5;

/// Per-class weight multipliers learned from a validation matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub reliability: Vec<f64>,
    /// Classes whose symbols are flagged regardless of the prediction.
    pub always_flag: Vec<bool>,
}

impl ReliabilityTable {
    /// Every class fully reliable, nothing forced.
    pub fn uniform(m: usize) -> Self {
        Self { reliability: vec![1.0; m], always_flag: vec![false; m] }
    }

    pub fn m(&self) -> usize {
        self.reliability.len()
    }
}

/// Reliability of class `c` is its font recall on the validation matrix,
/// clamped to `[0.05, 1]`. With `force_below = Some(f)`, classes whose
/// recall is below `f` are marked as always flagged.
pub fn build_reliability_table(matrix: &ModifiedConfusionMatrix, force_below: Option<f64>) -> ReliabilityTable {
    let recalls: Vec<Option<f64>> = (0..matrix.m()).map(|c| matrix.class_recall(c)).collect();
    ReliabilityTable {
        reliability: recalls.iter().map(|r| r.unwrap_or(RELIABILITY_MIN).clamp(RELIABILITY_MIN, 1.0)).collect(),
        always_flag: recalls.iter().map(|r| matches!((r, force_below), (Some(r), Some(f)) if *r < f)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolAssessment {
    pub position: usize,
    pub std_char: usize,
    pub std_confidence: f64,
    /// Absent when the authenticity model does not read characters.
    pub auth_char: Option<usize>,
    pub auth_forged: bool,
    /// Flagged only because its class is marked always-flagged.
    pub forced: bool,
    pub flagged: bool,
    pub weight: f64,
}

/// Combines the two readings of one symbol.
pub fn combine(
    position: usize,
    std: &Prediction,
    auth: &Prediction,
    table: &ReliabilityTable,
) -> Result<SymbolAssessment> {
    let std_char =
        std.char_index.ok_or_else(|| Error::KindMismatch("standard classifier must read characters".into()))?;
    if std_char >= table.m() {
        return Err(Error::LabelOutOfRange { label: std_char, classes: table.m() });
    }
    let disagree = auth.char_index.is_some_and(|c| c != std_char);
    let natural = auth.forged || disagree;
    let forced = table.always_flag[std_char] && !natural;
    Ok(SymbolAssessment {
        position,
        std_char,
        std_confidence: std.confidence,
        auth_char: auth.char_index,
        auth_forged: auth.forged,
        forced,
        flagged: natural || forced,
        weight: (std.confidence * table.reliability[std_char]).clamp(0.0, 1.0),
    })
}

fn check_models(std_model: &TrainedModel, auth_model: &TrainedModel, table: &ReliabilityTable) -> Result<()> {
    let ClassifierKind::Character { m } = std_model.kind else {
        return Err(Error::KindMismatch(format!(
            "standard model must be a character classifier, got {}",
            std_model.kind.name()
        )));
    };
    match auth_model.kind {
        ClassifierKind::CType { m: am } if am == m => {}
        ClassifierKind::CPrime => {}
        other => {
            return Err(Error::KindMismatch(format!("authenticity model {} does not match M = {m}", other.name())));
        }
    }
    if table.m() != m {
        return Err(Error::KindMismatch(format!("reliability table has {} classes, models have {m}", table.m())));
    }
    Ok(())
}

pub fn assess_symbol(
    std_model: &TrainedModel,
    auth_model: &TrainedModel,
    image: &GlyphImage,
    position: usize,
    table: &ReliabilityTable,
) -> Result<SymbolAssessment> {
    check_models(std_model, auth_model, table)?;
    combine(position, &std_model.predict(image)?, &auth_model.predict(image)?, table)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Genuine,
    Forged,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Weighted,
    /// Every weight was zero; each symbol counted once.
    UnweightedFallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldVerdict {
    pub assessments: Vec<SymbolAssessment>,
    pub flagged_weight_fraction: f64,
    pub verdict: Decision,
    pub threshold: f64,
    pub weighting: Weighting,
}

/// Forged iff the weighted share of flagged symbols exceeds `threshold`.
pub fn field_verdict(assessments: Vec<SymbolAssessment>, threshold: f64) -> Result<FieldVerdict> {
    if assessments.is_empty() {
        return Err(Error::EmptySequence);
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!("threshold {threshold} must lie in [0, 1)")));
    }
    if let Some(a) = assessments.iter().find(|a| !(a.weight.is_finite() && a.weight >= 0.0)) {
        return Err(Error::InvalidConfig(format!("symbol {} has invalid weight {}", a.position, a.weight)));
    }
    // Folding from +0.0 keeps an all-genuine fraction at +0.0.
    let total = assessments.iter().fold(0.0, |acc, a| acc + a.weight);
    let (fraction, weighting) = if total > 0.0 {
        let flagged = assessments.iter().filter(|a| a.flagged).fold(0.0, |acc, a| acc + a.weight);
        (flagged / total, Weighting::Weighted)
    } else {
        let flagged = assessments.iter().filter(|a| a.flagged).count();
        (flagged as f64 / assessments.len() as f64, Weighting::UnweightedFallback)
    };
    Ok(FieldVerdict {
        assessments,
        flagged_weight_fraction: fraction,
        verdict: if fraction > threshold { Decision::Forged } else { Decision::Genuine },
        threshold,
        weighting,
    })
}

/// Runs all three steps over the crops of one field, in order.
pub fn verify_field(
    std_model: &TrainedModel,
    auth_model: &TrainedModel,
    images: &[GlyphImage],
    table: &ReliabilityTable,
    threshold: f64,
) -> Result<FieldVerdict> {
    check_models(std_model, auth_model, table)?;
    if images.is_empty() {
        return Err(Error::EmptySequence);
    }
    let std = std_model.predict_batch(images)?;
    let auth = auth_model.predict_batch(images)?;
    let assessments =
        std.iter().zip(&auth).enumerate().map(|(i, (s, a))| combine(i, s, a, table)).collect::<Result<Vec<_>>>()?;
    field_verdict(assessments, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::decode_output;

    fn std_pred(c: usize, conf: f64) -> Prediction {
        let mut p = vec![(1.0 - conf) / 9.0; 10];
        p[c] = conf;
        decode_output(&p, ClassifierKind::Character { m: 10 }).unwrap()
    }

    fn auth_pred(c: usize, forged: bool) -> Prediction {
        let mut p = vec![0.0; 20];
        p[c + 10 * forged as usize] = 1.0;
        decode_output(&p, ClassifierKind::CType { m: 10 }).unwrap()
    }

    fn symbol(flagged: bool, weight: f64) -> SymbolAssessment {
        SymbolAssessment {
            position: 0,
            std_char: 0,
            std_confidence: weight,
            auth_char: Some(if flagged { 1 } else { 0 }),
            auth_forged: false,
            forced: false,
            flagged,
            weight,
        }
    }

    #[test]
    fn agreement_is_not_flagged() {
        let t = ReliabilityTable::uniform(10);
        let a = combine(0, &std_pred(5, 0.99), &auth_pred(5, false), &t).unwrap();
        assert!(!a.flagged);
        assert!((a.weight - 0.99).abs() < 1e-12);
    }

    #[test]
    fn forged_reading_is_flagged() {
        let t = ReliabilityTable::uniform(10);
        assert!(combine(0, &std_pred(5, 0.9), &auth_pred(5, true), &t).unwrap().flagged);
    }

    #[test]
    fn disagreement_is_flagged() {
        let t = ReliabilityTable::uniform(10);
        assert!(combine(0, &std_pred(5, 0.9), &auth_pred(3, false), &t).unwrap().flagged);
    }

    #[test]
    fn unanimous_fields() {
        let genuine = field_verdict(vec![symbol(false, 1.0); 10], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(genuine.verdict, Decision::Genuine);
        assert!(genuine.flagged_weight_fraction.is_sign_positive() && genuine.flagged_weight_fraction == 0.0);
        let forged = field_verdict(vec![symbol(true, 1.0); 10], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(forged.verdict, Decision::Forged);
        assert_eq!(forged.flagged_weight_fraction, 1.0);
    }

    #[test]
    fn three_of_ten_exceeds_quarter() {
        let mut s = vec![symbol(false, 1.0); 10];
        for a in &mut s[..3] {
            a.flagged = true;
        }
        let v = field_verdict(s, 0.25).unwrap();
        assert!((v.flagged_weight_fraction - 0.3).abs() < 1e-12);
        assert_eq!(v.verdict, Decision::Forged);
    }

    #[test]
    fn zero_weights_fall_back_to_counting() {
        let v = field_verdict(vec![symbol(true, 0.0), symbol(false, 0.0)], 0.2).unwrap();
        assert_eq!(v.weighting, Weighting::UnweightedFallback);
        assert_eq!(v.flagged_weight_fraction, 0.5);
    }

    #[test]
    fn bad_inputs_rejected() {
        assert!(matches!(field_verdict(vec![], 0.2), Err(Error::EmptySequence)));
        assert!(field_verdict(vec![symbol(false, 1.0)], 1.0).is_err());
        assert!(field_verdict(vec![symbol(false, f64::NAN)], 0.2).is_err());
    }

    #[test]
    fn reliability_from_matrix() {
        let m = ModifiedConfusionMatrix { counts: vec![[8, 1, 1, 0], [1, 0, 9, 0], [0, 0, 0, 0], [1, 0, 0, 0]] };
        let t = build_reliability_table(&m, Some(DEFAULT_FORCE_BELOW));
        assert!((t.reliability[0] - 0.9).abs() < 1e-12);
        assert!((t.reliability[1] - 0.1).abs() < 1e-12);
        assert_eq!(t.reliability[2], RELIABILITY_MIN);
        assert_eq!(t.reliability[3], 1.0);
        assert_eq!(t.always_flag, vec![false, true, false, false]);
    }

    #[test]
    fn reliability_from_reference_matrices() {
        let id = crate::fixtures::reference_experiment("passport_id_number").unwrap().matrix();
        let t = build_reliability_table(&id, None);
        assert!((t.reliability[1] - (30917.0 + 10.0) / 33185.0).abs() < 1e-12);
        assert!((t.reliability[1] - 0.932).abs() < 5e-4);
        let mrz = crate::fixtures::reference_experiment("mrz").unwrap().matrix();
        let t = build_reliability_table(&mrz, Some(DEFAULT_FORCE_BELOW));
        assert!((t.reliability[0] - (29474.0 + 125.0) / 48201.0).abs() < 1e-12);
        assert!((t.reliability[0] - 0.614).abs() < 5e-4);
        assert!(t.always_flag.iter().all(|f| !f));
    }

    #[test]
    fn perfect_recall_gives_full_reliability() {
        let m = ModifiedConfusionMatrix { counts: vec![[7, 3, 0, 0]; 10] };
        assert_eq!(build_reliability_table(&m, None).reliability, vec![1.0; 10]);
    }

    #[test]
    fn forced_class_flags_agreeing_symbol() {
        let mut t = ReliabilityTable::uniform(10);
        t.always_flag[0] = true;
        let a = combine(0, &std_pred(0, 0.9), &auth_pred(0, false), &t).unwrap();
        assert!(a.flagged && a.forced);
    }
}
