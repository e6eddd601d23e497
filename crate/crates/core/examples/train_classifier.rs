//! Trains a C-type classifier on a small synthetic set and saves it.
//!
//!     cargo run --release --example train_classifier -- 100 8

use fontcheck::classifier::{train, ClassifierKind, TrainedModel};
use fontcheck::nn::TrainConfig;
use fontcheck::synth::{synthesize_dataset, AugmentationConfig, FontRegistry, RenderConfig};

fn main() -> fontcheck::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let per_cell = args.next().flatten().unwrap_or(100);
    let epochs = args.next().flatten().unwrap_or(8);

    let registry = FontRegistry::bundled()?;
    let (render, aug) = (RenderConfig::default(), AugmentationConfig::default());
    let train_ds = synthesize_dataset(&registry, per_cell, &render, &aug, 1)?;
    let val_ds = synthesize_dataset(&registry, per_cell.div_ceil(4), &render, &aug, 2)?;

    let cfg = TrainConfig { epochs, ..TrainConfig::default() };
    let model = train(ClassifierKind::CType { m: 10 }, &train_ds, &val_ds, &cfg)?;
    for e in &model.provenance.log {
        println!(
            "epoch {:>2}  lr {:.4}  loss {:.4}  val font {:.4}  val char {:.4}",
            e.epoch + 1,
            e.learning_rate,
            e.train_loss,
            e.val_accuracy,
            e.val_char_accuracy.unwrap_or(f64::NAN)
        );
    }

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("c_type.ffnn");
    model.save(&path)?;
    let back = TrainedModel::load(&path)?;
    assert_eq!(back.content_hash(), model.content_hash());
    println!("best epoch {}, model hash {}", model.provenance.best_epoch + 1, model.content_hash());
    Ok(())
}
