use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    classify_result_type, exclusion_sensitivity, force_forged_sensitivity, BinaryCounts, ModifiedConfusionMatrix,
    Outcome, Ratio, ResultType,
};
use crate::classifier::{ClassifierKind, TrainedModel};
use crate::synth::Dataset;
use crate::util::write_atomic;
use crate::{Error, Result, TOOL_VERSION};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetRole {
    /// Every sample is genuine.
    Negative,
    /// Every sample is forged.
    Positive,
}

impl SetRole {
    fn name(self) -> &'static str {
        match self {
            SetRole::Negative => "negative",
            SetRole::Positive => "positive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetCounts {
    pub label: String,
    pub role: SetRole,
    pub dataset_hash: Option<String>,
    pub counts: BinaryCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Exclusion,
    ForceForged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub kind: AnalysisKind,
    pub classes: Vec<usize>,
    pub sensitivity: Ratio,
    pub percent: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub label: String,
    pub classifier: Option<ClassifierKind>,
    pub model_hash: Option<String>,
    pub sets: Vec<SetCounts>,
    pub overall: BinaryCounts,
    pub sensitivity: Ratio,
    pub specificity: Ratio,
    /// Only for models that predict the character as well as the font.
    pub matrix: Option<ModifiedConfusionMatrix>,
    pub analyses: Vec<Analysis>,
    /// Effective configuration of the run that produced the report.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl EvalReport {
    /// Report over given counts, e.g. from a fixture.
    pub fn from_counts(label: &str, overall: BinaryCounts, matrix: Option<ModifiedConfusionMatrix>) -> Result<Self> {
        if let Some(m) = &matrix {
            check_matrix(m, &overall)?;
        }
        Ok(Self {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            label: label.to_string(),
            classifier: None,
            model_hash: None,
            sets: vec![],
            overall,
            sensitivity: overall.sensitivity(),
            specificity: overall.specificity(),
            matrix,
            analyses: vec![],
            config: serde_json::Value::Null,
        })
    }

    fn require_matrix(&self) -> Result<&ModifiedConfusionMatrix> {
        self.matrix
            .as_ref()
            .ok_or_else(|| Error::KindMismatch("class analyses need a per-class matrix (C-type model)".into()))
    }

    pub fn add_exclusion(&mut self, classes: &[usize]) -> Result<&Analysis> {
        let r = exclusion_sensitivity(self.require_matrix()?, classes)?;
        Ok(self.push(AnalysisKind::Exclusion, classes, r))
    }

    pub fn add_force_forged(&mut self, classes: &[usize]) -> Result<&Analysis> {
        let r = force_forged_sensitivity(self.require_matrix()?, &self.overall, classes)?;
        Ok(self.push(AnalysisKind::ForceForged, classes, r))
    }

    fn push(&mut self, kind: AnalysisKind, classes: &[usize], sensitivity: Ratio) -> &Analysis {
        self.analyses.retain(|a| !(a.kind == kind && a.classes == classes));
        self.analyses.push(Analysis {
            kind,
            classes: classes.to_vec(),
            sensitivity,
            percent: sensitivity.percent_2dp(),
        });
        self.analyses.last().unwrap()
    }

    /// Recomputes every derived field from the stored counts.
    pub fn verify(&self) -> Result<()> {
        let mismatch = |what: &str| Err(Error::CheckFailed(format!("report field '{what}' disagrees with its counts")));
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Version { found: self.schema_version as u16, expected: REPORT_SCHEMA_VERSION as u16 });
        }
        if !self.sets.is_empty() {
            let mut sum = BinaryCounts::default();
            self.sets.iter().for_each(|s| sum.merge(&s.counts));
            if sum != self.overall {
                return mismatch("overall");
            }
        }
        if self.sensitivity != self.overall.sensitivity() {
            return mismatch("sensitivity");
        }
        if self.specificity != self.overall.specificity() {
            return mismatch("specificity");
        }
        if let Some(m) = &self.matrix {
            check_matrix(m, &self.overall)?;
        }
        for a in &self.analyses {
            let m = self.require_matrix()?;
            let r = match a.kind {
                AnalysisKind::Exclusion => exclusion_sensitivity(m, &a.classes)?,
                AnalysisKind::ForceForged => force_forged_sensitivity(m, &self.overall, &a.classes)?,
            };
            if r != a.sensitivity || a.percent != r.percent_2dp() {
                return mismatch("analyses");
            }
        }
        Ok(())
    }

    /// Plain-text summary laid out like the result tables.
    pub fn summary(&self) -> String {
        let mut out = format!("{}\n", self.label);
        if let Some(k) = self.classifier {
            out.push_str(&format!("classifier: {}\n", k.name()));
        }
        if let Some(h) = &self.model_hash {
            out.push_str(&format!("model: {h}\n"));
        }
        if !self.sets.is_empty() {
            out.push_str(&format!("{:<24} {:>8} {:>8} {:>8} {:>8} {:>8}\n", "set", "role", "TP", "TN", "FP", "FN"));
            for s in &self.sets {
                let c = s.counts;
                out.push_str(&format!(
                    "{:<24} {:>8} {:>8} {:>8} {:>8} {:>8}\n",
                    s.label,
                    s.role.name(),
                    c.tp,
                    c.tn,
                    c.fp,
                    c.fn_
                ));
            }
        }
        let c = self.overall;
        out.push_str(&format!(
            "TP {}  TN {}  FP {}  FN {}\nspecificity {}  sensitivity {}\n",
            c.tp, c.tn, c.fp, c.fn_, self.specificity, self.sensitivity
        ));
        if let Some(m) = &self.matrix {
            out.push_str("\nresult type");
            for c in 0..m.m() {
                out.push_str(&format!(" {:>7}", format!("{c}_w")));
            }
            out.push('\n');
            for (t, row) in m.rows().iter().enumerate() {
                out.push_str(&format!("{:<11}", t + 1));
                for v in row {
                    out.push_str(&format!(" {v:>7}"));
                }
                out.push('\n');
            }
            let ranking: Vec<String> = m
                .misclassification_ranking()
                .iter()
                .take(3)
                .filter_map(|(c, r)| r.map(|r| format!("{c}_w {:.2}%", 100.0 * r)))
                .collect();
            out.push_str(&format!("highest font misclassification: {}\n", ranking.join(", ")));
        }
        for a in &self.analyses {
            let name = match a.kind {
                AnalysisKind::Exclusion => "excluding",
                AnalysisKind::ForceForged => "forcing forged",
            };
            let classes: Vec<String> = a.classes.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("sensitivity {name} {{{}}}: {}%\n", classes.join(","), a.percent));
        }
        out
    }
}

fn check_matrix(m: &ModifiedConfusionMatrix, counts: &BinaryCounts) -> Result<()> {
    if m.tp() != counts.tp || m.fn_() != counts.fn_ {
        return Err(Error::CheckFailed(format!(
            "matrix rows 1+2 = {}, rows 3+4 = {}, but tp = {}, fn = {}",
            m.tp(),
            m.fn_(),
            counts.tp,
            counts.fn_
        )));
    }
    Ok(())
}

fn check_role(ds: &Dataset, role: SetRole) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::EmptyTestSet(ds.provenance.label.clone()));
    }
    let want_forged = role == SetRole::Positive;
    if ds.samples.iter().any(|s| s.forged != want_forged) {
        return Err(Error::TestSetRole { set: ds.provenance.label.clone(), role: role.name() });
    }
    Ok(())
}

/// Scores `model` on one genuine set and any number of forged sets.
/// Counting is done sequentially over integer outcomes, so the result does
/// not depend on how predictions were scheduled.
pub fn evaluate(model: &TrainedModel, negative: &Dataset, positives: &[Dataset]) -> Result<EvalReport> {
    if !model.kind.predicts_font() {
        return Err(Error::KindMismatch("a character-only model has no font decision to evaluate".into()));
    }
    check_role(negative, SetRole::Negative)?;
    for p in positives {
        check_role(p, SetRole::Positive)?;
    }
    let with_matrix = matches!(model.kind, ClassifierKind::CType { .. });
    let m = model.kind.alphabet().unwrap_or(negative.m);
    let mut matrix = ModifiedConfusionMatrix::new(m);
    let mut sets = Vec::new();
    let mut overall = BinaryCounts::default();

    let roles = std::iter::once((negative, SetRole::Negative)).chain(positives.iter().map(|p| (p, SetRole::Positive)));
    for (ds, role) in roles {
        if with_matrix && ds.m != m {
            return Err(Error::KindMismatch(format!(
                "set '{}' has M = {}, model has M = {m}",
                ds.provenance.label, ds.m
            )));
        }
        let images: Vec<_> = ds.samples.iter().map(|s| s.image.clone()).collect();
        let preds = model.predict_batch(&images)?;
        let mut counts = BinaryCounts::default();
        for (p, s) in preds.iter().zip(&ds.samples) {
            let outcome = classify_result_type(p, s);
            counts.record(outcome);
            if let Outcome::Forged(t) = outcome {
                matrix.record(s.char_index, t);
            }
        }
        overall.merge(&counts);
        sets.push(SetCounts {
            label: ds.provenance.label.clone(),
            role,
            dataset_hash: Some(ds.content_hash()),
            counts,
        });
    }

    let mut report = EvalReport::from_counts("evaluation", overall, with_matrix.then_some(matrix))?;
    report.classifier = Some(model.kind);
    report.model_hash = Some(model.content_hash());
    report.sets = sets;
    Ok(report)
}

/// CSV with one row per result type and one integer column per class.
pub fn matrix_to_csv(m: &ModifiedConfusionMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["result_type".to_string()];
    header.extend((0..m.m()).map(|c| format!("{c}_w")));
    w.write_record(&header)?;
    for (t, row) in m.rows().iter().enumerate() {
        let mut rec = vec![(t + 1).to_string()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ASCII"))
}

pub fn matrix_from_csv(text: &str) -> Result<ModifiedConfusionMatrix> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let m = r.headers()?.len().saturating_sub(1);
    let mut rows: [Vec<u64>; 4] = Default::default();
    let mut seen = 0;
    for rec in r.records() {
        let rec = rec?;
        let t: usize = rec[0].parse().map_err(|_| Error::Format(format!("bad result type '{}'", &rec[0])))?;
        if !(1..=4).contains(&t) || !rows[t - 1].is_empty() {
            return Err(Error::Format(format!("unexpected result type row {t}")));
        }
        rows[t - 1] = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<u64>().map_err(|_| Error::Format(format!("bad count '{v}'"))))
            .collect::<Result<_>>()?;
        if rows[t - 1].len() != m {
            return Err(Error::Format(format!("row {t} has {} cells, expected {m}", rows[t - 1].len())));
        }
        seen += 1;
    }
    if seen != ResultType::ALL.len() {
        return Err(Error::Format(format!("expected 4 result-type rows, found {seen}")));
    }
    ModifiedConfusionMatrix::from_rows(&rows)
}

fn counts_to_csv(report: &EvalReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["set", "role", "tp", "tn", "fp", "fn", "sensitivity_pct", "specificity_pct"])?;
    let row = |label: &str, role: &str, c: &BinaryCounts| -> Vec<String> {
        vec![
            label.to_string(),
            role.to_string(),
            c.tp.to_string(),
            c.tn.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.sensitivity().percent_2dp(),
            c.specificity().percent_2dp(),
        ]
    };
    for s in &report.sets {
        w.write_record(row(&s.label, s.role.name(), &s.counts))?;
    }
    w.write_record(row("overall", "all", &report.overall))?;
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ASCII"))
}

/// Writes `report.json`, `counts.csv` and, for C-type reports,
/// `matrix.csv` into `dir`. Returns the written paths.
pub fn render_report(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    report.verify()?;
    let mut out = vec![dir.join("report.json"), dir.join("counts.csv")];
    write_atomic(&out[0], serde_json::to_string_pretty(report)?.as_bytes())?;
    write_atomic(&out[1], counts_to_csv(report)?.as_bytes())?;
    if let Some(m) = &report.matrix {
        let p = dir.join("matrix.csv");
        write_atomic(&p, matrix_to_csv(m)?.as_bytes())?;
        out.push(p);
    }
    Ok(out)
}

/// Reads a `report.json` (or the directory holding one) and re-verifies
/// every derived field.
pub fn load_report(path: &Path) -> Result<EvalReport> {
    let path = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    report.verify()?;
    Ok(report)
}
