//! Trains a C-type and a C'-type classifier on the same data and scores
//! both against the genuine font and fonts never seen in training.

use fontcheck::classifier::{train, ClassifierKind};
use fontcheck::metrics::evaluate;
use fontcheck::nn::TrainConfig;
use fontcheck::synth::{synthesize_dataset, synthesize_test_set, AugmentationConfig, FontRegistry, RenderConfig};

fn main() -> fontcheck::Result<()> {
    let registry = FontRegistry::bundled()?;
    let (render, aug) = (RenderConfig::default(), AugmentationConfig::default());
    let train_ds = synthesize_dataset(&registry, 150, &render, &aug, 10)?;
    let val_ds = synthesize_dataset(&registry, 40, &render, &aug, 11)?;
    let genuine = synthesize_test_set("genuine", &registry.genuine, false, 60, &render, &aug, 12)?;
    let held_out = synthesize_test_set("held_out", &registry.held_out, true, 60, &render, &aug, 13)?;

    let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
    for kind in [ClassifierKind::CType { m: 10 }, ClassifierKind::CPrime] {
        let model = train(kind, &train_ds, &val_ds, &cfg)?;
        let report = evaluate(&model, &genuine, std::slice::from_ref(&held_out))?;
        println!("{}", report.summary());
        println!("Youden index {:.4}\n", report.overall.youden().unwrap_or(f64::NAN));
    }
    Ok(())
}
