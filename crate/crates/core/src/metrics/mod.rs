//! Font-decision evaluation: binary counts, the per-class modified
//! confusion matrix over four result types, and the exclusion and
//! force-forged sensitivity analyses.

mod report;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::classifier::Prediction;
use crate::synth::GlyphSample;
use crate::{Error, Result};

pub use report::{
    evaluate, load_report, matrix_from_csv, matrix_to_csv, render_report, Analysis, AnalysisKind, EvalReport,
    SetCounts, SetRole, REPORT_SCHEMA_VERSION,
};

/// An exact fraction of counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    /// `None` when the denominator is zero.
    pub fn value(&self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }

    pub fn percent(&self) -> Option<f64> {
        self.value().map(|v| 100.0 * v)
    }

    /// Percentage with two decimals, rounded half up in exact integer
    /// arithmetic (the rule that reproduces every reported reference value).
    pub fn percent_2dp(&self) -> String {
        if self.den == 0 {
            return "n/a".into();
        }
        let (num, den) = (self.num as u128, self.den as u128);
        let hundredths = (2 * num * 10_000 + den) / (2 * den);
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent_2dp())
    }
}

/// Font-decision counts; forged is the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl BinaryCounts {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn sensitivity(&self) -> Ratio {
        Ratio::new(self.tp, self.tp + self.fn_)
    }

    pub fn specificity(&self) -> Ratio {
        Ratio::new(self.tn, self.tn + self.fp)
    }

    /// Sensitivity + specificity − 1.
    pub fn youden(&self) -> Option<f64> {
        Some(self.sensitivity().value()? + self.specificity().value()? - 1.0)
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TrueNegative => self.tn += 1,
            Outcome::FalsePositive => self.fp += 1,
            o if o.is_true_positive() => self.tp += 1,
            _ => self.fn_ += 1,
        }
    }

    pub fn merge(&mut self, other: &BinaryCounts) {
        self.tp += other.tp;
        self.tn += other.tn;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

/// Joint correctness of font and character for a forged sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResultType {
    /// Font and character correct.
    Type1 = 1,
    /// Font correct, character wrong.
    Type2 = 2,
    /// Font wrong, character correct.
    Type3 = 3,
    /// Both wrong.
    Type4 = 4,
}

impl ResultType {
    pub const ALL: [ResultType; 4] = [ResultType::Type1, ResultType::Type2, ResultType::Type3, ResultType::Type4];

    pub fn from_flags(font_correct: bool, char_correct: bool) -> Self {
        match (font_correct, char_correct) {
            (true, true) => ResultType::Type1,
            (true, false) => ResultType::Type2,
            (false, true) => ResultType::Type3,
            (false, false) => ResultType::Type4,
        }
    }

    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn font_correct(self) -> bool {
        matches!(self, ResultType::Type1 | ResultType::Type2)
    }
}

/// Outcome of one prediction against its ground truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Forged sample scored by a model that also predicts the character.
    Forged(ResultType),
    /// Forged sample scored by a font-only model.
    ForgedFontOnly {
        detected: bool,
    },
    TrueNegative,
    FalsePositive,
}

impl Outcome {
    pub fn is_true_positive(self) -> bool {
        match self {
            Outcome::Forged(t) => t.font_correct(),
            Outcome::ForgedFontOnly { detected } => detected,
            _ => false,
        }
    }
}

pub fn classify_result_type(prediction: &Prediction, truth: &GlyphSample) -> Outcome {
    if !truth.forged {
        return if prediction.forged { Outcome::FalsePositive } else { Outcome::TrueNegative };
    }
    match prediction.char_index {
        Some(c) => Outcome::Forged(ResultType::from_flags(prediction.forged, c == truth.char_index)),
        None => Outcome::ForgedFontOnly { detected: prediction.forged },
    }
}

/// Counts of the four result types for each forged character class;
/// `counts[c][t]` is result type `t + 1` for class `c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModifiedConfusionMatrix {
    pub counts: Vec<[u64; 4]>,
}

impl ModifiedConfusionMatrix {
    pub fn new(m: usize) -> Self {
        Self { counts: vec![[0; 4]; m] }
    }

    /// Builds a matrix from four rows of `m` per-class counts (one row per
    /// result type).
    pub fn from_rows(rows: &[Vec<u64>; 4]) -> Result<Self> {
        let m = rows[0].len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Format("matrix rows differ in length".into()));
        }
        Ok(Self { counts: (0..m).map(|c| [rows[0][c], rows[1][c], rows[2][c], rows[3][c]]).collect() })
    }

    pub fn rows(&self) -> [Vec<u64>; 4] {
        std::array::from_fn(|t| self.counts.iter().map(|col| col[t]).collect())
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn record(&mut self, char_index: usize, t: ResultType) {
        self.counts[char_index][t.index()] += 1;
    }

    pub fn column_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    /// Rows 1+2 of class `c`.
    pub fn detected(&self, c: usize) -> u64 {
        self.counts[c][0] + self.counts[c][1]
    }

    /// Rows 3+4 of class `c`.
    pub fn missed(&self, c: usize) -> u64 {
        self.counts[c][2] + self.counts[c][3]
    }

    pub fn tp(&self) -> u64 {
        (0..self.m()).map(|c| self.detected(c)).sum()
    }

    pub fn fn_(&self) -> u64 {
        (0..self.m()).map(|c| self.missed(c)).sum()
    }

    /// Font recall of class `c`; `None` for an empty column.
    pub fn class_recall(&self, c: usize) -> Option<f64> {
        Ratio::new(self.detected(c), self.column_sum(c)).value()
    }

    /// Font misclassification rate (rows 3+4 over the column sum).
    pub fn misclassification_rate(&self, c: usize) -> Option<f64> {
        Ratio::new(self.missed(c), self.column_sum(c)).value()
    }

    /// Classes ordered by decreasing font misclassification rate (empty
    /// columns last, ties by class index).
    pub fn misclassification_ranking(&self) -> Vec<(usize, Option<f64>)> {
        let mut ranked: Vec<_> = (0..self.m()).map(|c| (c, self.misclassification_rate(c))).collect();
        ranked.sort_by(|a, b| match (a.1, b.1) {
            (Some(x), Some(y)) => y.total_cmp(&x).then(a.0.cmp(&b.0)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.0.cmp(&b.0),
        });
        ranked
    }

    fn check_classes(&self, classes: &[usize]) -> Result<()> {
        match classes.iter().find(|&&c| c >= self.m()) {
            Some(c) => Err(Error::InvalidConfig(format!("class {c} outside [0, {})", self.m()))),
            None => Ok(()),
        }
    }
}

/// Sensitivity over the classes not in `excluded`.
pub fn exclusion_sensitivity(matrix: &ModifiedConfusionMatrix, excluded: &[usize]) -> Result<Ratio> {
    matrix.check_classes(excluded)?;
    let kept = (0..matrix.m()).filter(|c| !excluded.contains(c));
    let (tp, fn_) = kept.fold((0, 0), |(tp, fn_), c| (tp + matrix.detected(c), fn_ + matrix.missed(c)));
    if tp + fn_ == 0 {
        return Err(Error::AllClassesExcluded);
    }
    Ok(Ratio::new(tp, tp + fn_))
}

/// Sensitivity when every sample of a `forced` class is declared forged.
/// `base` must agree with the matrix (rows 1+2 = tp, rows 3+4 = fn).
pub fn force_forged_sensitivity(
    matrix: &ModifiedConfusionMatrix,
    base: &BinaryCounts,
    forced: &[usize],
) -> Result<Ratio> {
    matrix.check_classes(forced)?;
    if matrix.tp() != base.tp || matrix.fn_() != base.fn_ {
        return Err(Error::CheckFailed(format!(
            "matrix totals (tp {}, fn {}) disagree with counts (tp {}, fn {})",
            matrix.tp(),
            matrix.fn_(),
            base.tp,
            base.fn_
        )));
    }
    let (mut tp, mut fn_) = (0, 0);
    for c in 0..matrix.m() {
        if forced.contains(&c) {
            tp += matrix.column_sum(c);
        } else {
            tp += matrix.detected(c);
            fn_ += matrix.missed(c);
        }
    }
    Ok(Ratio::new(tp, tp + fn_))
}

/// Every class subset of size `1..=max_size` with its exclusion
/// sensitivity, in lexicographic order.
pub fn exclusion_search(matrix: &ModifiedConfusionMatrix, max_size: usize) -> Vec<(Vec<usize>, Ratio)> {
    fn extend(m: usize, start: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for c in start..m {
            cur.push(c);
            out.push(cur.clone());
            if left > 1 {
                extend(m, c + 1, left - 1, cur, out);
            }
            cur.pop();
        }
    }
    let mut subsets = Vec::new();
    extend(matrix.m(), 0, max_size, &mut Vec::new(), &mut subsets);
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    subsets.into_iter().filter_map(|s| exclusion_sensitivity(matrix, &s).ok().map(|r| (s, r))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{decode_output, ClassifierKind};
    use crate::synth::GlyphImage;

    fn sample(char_index: usize, forged: bool) -> GlyphSample {
        GlyphSample { image: GlyphImage::filled(1.0), char_index, font_id: "x".into(), forged }
    }

    fn predicted(char_index: usize, forged: bool) -> Prediction {
        let mut p = vec![0.0; 20];
        p[char_index + 10 * forged as usize] = 1.0;
        decode_output(&p, ClassifierKind::CType { m: 10 }).unwrap()
    }

    #[test]
    fn result_types() {
        assert_eq!(classify_result_type(&predicted(4, true), &sample(4, true)), Outcome::Forged(ResultType::Type1));
        let t2 = classify_result_type(&predicted(7, true), &sample(4, true));
        assert_eq!(t2, Outcome::Forged(ResultType::Type2));
        assert!(t2.is_true_positive());
        let t3 = classify_result_type(&predicted(4, false), &sample(4, true));
        assert_eq!(t3, Outcome::Forged(ResultType::Type3));
        assert!(!t3.is_true_positive());
        assert_eq!(classify_result_type(&predicted(1, true), &sample(1, false)), Outcome::FalsePositive);
    }

    #[test]
    fn font_only_outcome() {
        let p = decode_output(&[0.2, 0.8], ClassifierKind::CPrime).unwrap();
        assert_eq!(classify_result_type(&p, &sample(3, true)), Outcome::ForgedFontOnly { detected: true });
    }

    #[test]
    fn percent_rounding_is_half_up() {
        assert_eq!(Ratio::new(1, 8).percent_2dp(), "12.50");
        assert_eq!(Ratio::new(1, 3).percent_2dp(), "33.33");
        assert_eq!(Ratio::new(2, 3).percent_2dp(), "66.67");
        assert_eq!(Ratio::new(1, 20001).percent_2dp(), "0.00");
        assert_eq!(Ratio::new(1, 20000).percent_2dp(), "0.01");
        assert_eq!(Ratio::new(5, 5).percent_2dp(), "100.00");
        assert_eq!(Ratio::new(0, 0).percent_2dp(), "n/a");
    }

    #[test]
    fn always_forged_model() {
        let counts = BinaryCounts::new(50, 0, 40, 0);
        assert_eq!(counts.sensitivity().value(), Some(1.0));
        assert_eq!(counts.specificity().value(), Some(0.0));
    }

    #[test]
    fn excluding_everything_is_an_error() {
        let mut m = ModifiedConfusionMatrix::new(2);
        m.record(0, ResultType::Type1);
        assert!(matches!(exclusion_sensitivity(&m, &[0, 1]), Err(Error::AllClassesExcluded)));
        assert!(exclusion_sensitivity(&m, &[2]).is_err());
    }

    #[test]
    fn search_enumerates_all_small_subsets() {
        let m = ModifiedConfusionMatrix { counts: vec![[1, 0, 1, 0]; 10] };
        assert_eq!(exclusion_search(&m, 2).len(), 10 + 45);
    }
}
