//! Rebuilds the reference result tables from their raw counts, runs the
//! per-class analyses and searches for the class set that explains the
//! reported exclusion figure.

use fontcheck::fixtures::{oracle_checks, reference_experiments};
use fontcheck::metrics::exclusion_search;

fn main() -> fontcheck::Result<()> {
    for e in reference_experiments() {
        println!("== {} ==", e.description);
        let mut c = e.c_type_report()?;
        c.add_exclusion(&e.class_analysis.classes)?;
        c.add_force_forged(&e.class_analysis.classes)?;
        println!("{}", c.summary());
        println!("{}", e.cprime_type_report()?.summary());

        let matrix = e.matrix();
        let mut all = exclusion_search(&matrix, 2);
        let target = &e.class_analysis.exclusion_pct;
        let matching: Vec<_> = all.iter().filter(|(_, r)| &r.percent_2dp() == target).map(|(s, _)| s.clone()).collect();
        println!("subsets of at most two classes giving {target}%: {matching:?}");
        all.sort_by(|a, b| b.1.value().partial_cmp(&a.1.value()).unwrap());
        for (set, r) in all.iter().take(3) {
            println!("  best: exclude {set:?} -> {}%", r.percent_2dp());
        }
        println!();
    }
    let checks = oracle_checks();
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} arithmetic checks, {failed} failed", checks.len());
    Ok(())
}
