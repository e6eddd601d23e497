//! Reference counts from the two passport-font experiments (ID-number
//! and MRZ classifiers), shipped with the crate, and the arithmetic checks
//! that tie them to the reported percentages.

use serde::Deserialize;

use crate::metrics::{
    exclusion_search, exclusion_sensitivity, force_forged_sensitivity, BinaryCounts, EvalReport,
    ModifiedConfusionMatrix, Ratio,
};
use crate::Result;

const REFERENCE_JSON: &str = include_str!("../fixtures/reference_counts.json");

#[derive(Clone, Debug, Deserialize)]
pub struct ReportedPair {
    pub sensitivity: String,
    pub specificity: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ReportedPct {
    pub c_type: ReportedPair,
    pub cprime_type: ReportedPair,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ClassAnalysis {
    pub classes: Vec<usize>,
    pub exclusion_pct: String,
    pub force_forged_pct: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ReferenceExperiment {
    pub id: String,
    pub description: String,
    pub c_type: BinaryCounts,
    pub cprime_type: BinaryCounts,
    pub reported_pct: ReportedPct,
    c_type_matrix: [Vec<u64>; 4],
    pub class_analysis: ClassAnalysis,
}

impl ReferenceExperiment {
    pub fn matrix(&self) -> ModifiedConfusionMatrix {
        ModifiedConfusionMatrix::from_rows(&self.c_type_matrix).expect("fixture rows have equal length")
    }

    /// C-type report built from the counts, matrix included.
    pub fn c_type_report(&self) -> Result<EvalReport> {
        EvalReport::from_counts(&format!("{} (C-type, reference counts)", self.id), self.c_type, Some(self.matrix()))
    }

    pub fn cprime_type_report(&self) -> Result<EvalReport> {
        EvalReport::from_counts(&format!("{} (C'-type, reference counts)", self.id), self.cprime_type, None)
    }
}

#[derive(Deserialize)]
struct ReferenceFile {
    experiments: Vec<ReferenceExperiment>,
}

pub fn reference_experiments() -> Vec<ReferenceExperiment> {
    serde_json::from_str::<ReferenceFile>(REFERENCE_JSON).expect("bundled fixture is valid JSON").experiments
}

pub fn reference_experiment(id: &str) -> Option<ReferenceExperiment> {
    reference_experiments().into_iter().find(|e| e.id == id)
}

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// Within half a hundredth of a percentage point of the reported value.
fn close_to(r: Ratio, reported: &str) -> bool {
    match (r.percent(), reported.parse::<f64>()) {
        (Some(p), Ok(want)) => (p - want).abs() <= 0.005 && r.percent_2dp() == reported,
        _ => false,
    }
}

fn pct_check(name: String, r: Ratio, reported: &str) -> Check {
    let got = r.percent().map(|p| format!("{p:.4}")).unwrap_or_else(|| "n/a".into());
    Check::new(name, close_to(r, reported), format!("{got}% -> {} (reported {reported})", r.percent_2dp()))
}

/// Arithmetic checks over the reference counts: reported percentages,
/// matrix totals, class analyses and uniqueness of the analysed class set
/// among all subsets of the same maximum size.
pub fn oracle_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    for e in reference_experiments() {
        for (kind, counts, rep) in
            [("c", e.c_type, &e.reported_pct.c_type), ("cprime", e.cprime_type, &e.reported_pct.cprime_type)]
        {
            checks.push(pct_check(format!("{}/{kind}/sensitivity", e.id), counts.sensitivity(), &rep.sensitivity));
            checks.push(pct_check(format!("{}/{kind}/specificity", e.id), counts.specificity(), &rep.specificity));
        }

        let m = e.matrix();
        checks.push(Check::new(
            format!("{}/matrix/detected_total", e.id),
            m.tp() == e.c_type.tp,
            format!("rows 1+2 = {}, tp = {}", m.tp(), e.c_type.tp),
        ));
        checks.push(Check::new(
            format!("{}/matrix/missed_total", e.id),
            m.fn_() == e.c_type.fn_,
            format!("rows 3+4 = {}, fn = {}", m.fn_(), e.c_type.fn_),
        ));

        let classes = &e.class_analysis.classes;
        let label = format!("{classes:?}");
        match exclusion_sensitivity(&m, classes) {
            Ok(r) => checks.push(pct_check(format!("{}/exclusion{label}", e.id), r, &e.class_analysis.exclusion_pct)),
            Err(err) => checks.push(Check::new(format!("{}/exclusion{label}", e.id), false, err.to_string())),
        }
        match force_forged_sensitivity(&m, &e.c_type, classes) {
            Ok(r) => {
                checks.push(pct_check(format!("{}/force_forged{label}", e.id), r, &e.class_analysis.force_forged_pct))
            }
            Err(err) => checks.push(Check::new(format!("{}/force_forged{label}", e.id), false, err.to_string())),
        }

        let matches: Vec<Vec<usize>> = exclusion_search(&m, 2)
            .into_iter()
            .filter(|(_, r)| r.percent_2dp() == e.class_analysis.exclusion_pct)
            .map(|(s, _)| s)
            .collect();
        checks.push(Check::new(
            format!("{}/exclusion_set_unique", e.id),
            matches.len() == 1 && &matches[0] == classes,
            format!("subsets of size <= 2 matching {}%: {matches:?}", e.class_analysis.exclusion_pct),
        ));

        let mut worst: Vec<usize> = m.misclassification_ranking().iter().take(classes.len()).map(|(c, _)| *c).collect();
        worst.sort_unstable();
        checks.push(Check::new(
            format!("{}/exclusion_set_is_worst_classes", e.id),
            &worst == classes,
            format!("classes with the highest font misclassification: {worst:?}"),
        ));
    }
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_parses() {
        let e = reference_experiments();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].matrix().m(), 10);
    }

    #[test]
    fn all_oracle_checks_pass() {
        for c in oracle_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn truncation_would_not_reproduce_reported_values() {
        // 161237 / 177642 = 90.7651..%: truncating gives 90.76, reported is 90.77.
        let r = reference_experiment("passport_id_number").unwrap().c_type.sensitivity();
        let truncated = (r.num as u128 * 10_000 / r.den as u128) as u64;
        assert_eq!(truncated, 9076);
        assert_eq!(r.percent_2dp(), "90.77");
    }
}
