//! Field-level verdict: a character reader and a C-type classifier look at
//! a ten-digit field, first all genuine, then with three digits swapped for
//! fonts never seen in training. Every crop goes through the same
//! augmentation as the training data.

use fontcheck::classifier::{train, ClassifierKind};
use fontcheck::metrics::evaluate;
use fontcheck::nn::TrainConfig;
use fontcheck::synth::{
    augment, render_glyph, synthesize_dataset, synthesize_test_set, AugmentationConfig, FontRegistry, RenderConfig,
};
use fontcheck::verdict::{build_reliability_table, verify_field, DEFAULT_FORCE_BELOW, DEFAULT_THRESHOLD};

fn main() -> fontcheck::Result<()> {
    let registry = FontRegistry::bundled()?;
    let (render, aug) = (RenderConfig::default(), AugmentationConfig::default());
    let train_ds = synthesize_dataset(&registry, 150, &render, &aug, 20)?;
    let val_ds = synthesize_dataset(&registry, 40, &render, &aug, 21)?;
    let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
    let reader = train(ClassifierKind::Character { m: 10 }, &train_ds, &val_ds, &cfg)?;
    let auth = train(ClassifierKind::CType { m: 10 }, &train_ds, &val_ds, &cfg)?;

    // Per-class reliability from a validation run against forged-proxy fonts.
    let genuine = synthesize_test_set("genuine", &registry.genuine, false, 40, &render, &aug, 22)?;
    let forged = synthesize_test_set("forged", &registry.forged, true, 40, &render, &aug, 23)?;
    let report = evaluate(&auth, &genuine, &[forged])?;
    let table = build_reliability_table(report.matrix.as_ref().expect("C-type report"), Some(DEFAULT_FORCE_BELOW));
    println!("reliability {:.2?}", table.reliability);

    let genuine_font = registry.genuine[0].load()?;
    let digits = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3];
    let crop = |font: &fontcheck::synth::LoadedFont, i: usize| -> fontcheck::Result<_> {
        augment(&render_glyph(font, digits[i], &render)?, &aug, 100 + i as u64)
    };
    let mut field = (0..digits.len()).map(|i| crop(&genuine_font, i)).collect::<fontcheck::Result<Vec<_>>>()?;
    let v = verify_field(&reader, &auth, &field, &table, DEFAULT_THRESHOLD)?;
    println!("genuine field: flagged weight {:.3} -> {:?}", v.flagged_weight_fraction, v.verdict);

    let mut used = Vec::new();
    for (k, i) in [1, 4, 8].into_iter().enumerate() {
        let font = registry.held_out[k % registry.held_out.len()].load()?;
        field[i] = crop(&font, i)?;
        used.push(format!("{i}:{}", font.id()));
    }
    let v = verify_field(&reader, &auth, &field, &table, DEFAULT_THRESHOLD)?;
    for a in &v.assessments {
        println!(
            "  pos {} read {} ({:.3}) flagged {} weight {:.3}",
            a.position, a.std_char, a.std_confidence, a.flagged, a.weight
        );
    }
    println!(
        "tampered field ({}): flagged weight {:.3} -> {:?}",
        used.join(", "),
        v.flagged_weight_fraction,
        v.verdict
    );
    Ok(())
}
