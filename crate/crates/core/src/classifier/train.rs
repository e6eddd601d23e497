use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{build_network, encode_label, images_to_tensor, ClassifierKind, TrainedModel, TrainingProvenance};
use crate::nn::{sgd_step, softmax_xent, SgdState, Tape, TrainConfig};
use crate::synth::Dataset;
use crate::util::derive_seed;
use crate::{Error, Result, TOOL_VERSION};

/// Metrics recorded after each epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub learning_rate: f64,
    /// Mean training loss over the epoch's minibatches.
    pub train_loss: f64,
    /// Validation accuracy of the font bit (of the character for the
    /// character kind); the model-selection metric.
    pub val_accuracy: f64,
    /// Validation character accuracy, for kinds that predict characters.
    pub val_char_accuracy: Option<f64>,
}

const INIT_STREAM: u64 = 0x1a17;
const SHUFFLE_STREAM: u64 = 0x5f1e;

fn check_datasets(kind: ClassifierKind, train: &Dataset, val: &Dataset) -> Result<()> {
    if train.m != val.m {
        return Err(Error::KindMismatch(format!("training M = {} but validation M = {}", train.m, val.m)));
    }
    if let Some(m) = kind.alphabet() {
        if m != train.m {
            return Err(Error::KindMismatch(format!(
                "{} classifier has M = {m}, datasets have M = {}",
                kind.name(),
                train.m
            )));
        }
    }
    if train.is_empty() {
        return Err(Error::EmptyTestSet(train.provenance.label.clone()));
    }
    if val.is_empty() {
        return Err(Error::EmptyTestSet(val.provenance.label.clone()));
    }
    Ok(())
}

/// `(selection accuracy, character accuracy)` of `model` on `ds`.
fn validation_accuracy(model: &TrainedModel, ds: &Dataset) -> Result<(f64, Option<f64>)> {
    let images: Vec<_> = ds.samples.iter().map(|s| s.image.clone()).collect();
    let preds = model.predict_batch(&images)?;
    let n = ds.len() as f64;
    let font_ok = preds.iter().zip(&ds.samples).filter(|(p, s)| p.forged == s.forged).count();
    let char_ok = preds.iter().zip(&ds.samples).filter(|(p, s)| p.char_index == Some(s.char_index)).count();
    let char_acc = model.kind.alphabet().map(|_| char_ok as f64 / n);
    let select = if model.kind.predicts_font() { font_ok as f64 / n } else { char_ok as f64 / n };
    Ok((select, char_acc))
}

/// Trains a reference network of `kind` with momentum SGD over shuffled
/// minibatches, keeping the parameters of the epoch with the best
/// validation accuracy (earliest on ties). Deterministic in `cfg.seed`.
pub fn train(kind: ClassifierKind, train_ds: &Dataset, val_ds: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if cfg.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }
    check_datasets(kind, train_ds, val_ds)?;
    let labels =
        train_ds.samples.iter().map(|s| encode_label(s.char_index, s.forged, kind)).collect::<Result<Vec<_>>>()?;

    let mut net = build_network(kind);
    net.init_glorot(derive_seed(&[cfg.seed, INIT_STREAM]));
    let mut state = SgdState::new(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[cfg.seed, SHUFFLE_STREAM]));
    let mut order: Vec<usize> = (0..train_ds.len()).collect();
    let mut tape = Tape::default();

    let provenance = TrainingProvenance {
        tool_version: TOOL_VERSION.to_string(),
        train_dataset_hash: train_ds.content_hash(),
        val_dataset_hash: val_ds.content_hash(),
        train_fonts: train_ds.font_ids(),
        config: cfg.clone(),
        best_epoch: 0,
        best_val_accuracy: f64::NEG_INFINITY,
        log: Vec::with_capacity(cfg.epochs),
    };
    let mut best: Option<TrainedModel> = None;
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = images_to_tensor(chunk.iter().map(|&i| &train_ds.samples[i].image));
            let batch_labels: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let logits = net.forward_recorded(&batch, &mut tape)?;
            let (loss, grad) = softmax_xent(&logits, &batch_labels)?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            let grads = net.backward(&tape, &grad)?;
            if !grads.all_finite() {
                return Err(Error::Divergence { epoch, loss: f64::NAN });
            }
            sgd_step(&mut net, &grads, lr, cfg.momentum, &mut state)?;
            loss_sum += loss;
            batches += 1;
        }
        tape.clear();

        let mut snapshot = net.clone();
        snapshot.quantize_to_f32();
        let candidate = TrainedModel::new(kind, snapshot, provenance.clone())?;
        let (val_accuracy, val_char_accuracy) = validation_accuracy(&candidate, val_ds)?;
        log.push(EpochLog {
            epoch,
            learning_rate: lr,
            train_loss: loss_sum / batches as f64,
            val_accuracy,
            val_char_accuracy,
        });
        if best.as_ref().is_none_or(|b| val_accuracy > b.provenance.best_val_accuracy) {
            let mut candidate = candidate;
            candidate.provenance.best_epoch = epoch;
            candidate.provenance.best_val_accuracy = val_accuracy;
            best = Some(candidate);
        }
    }

    let mut model = best.expect("at least one epoch");
    model.provenance.log = log;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize_dataset, AugmentationConfig, FontRegistry, RenderConfig};

    fn toy_sets() -> (Dataset, Dataset) {
        let reg = FontRegistry::bundled().unwrap();
        let toy = FontRegistry {
            genuine: reg.genuine.clone(),
            forged: vec![reg.get("katex_sans_bold").unwrap().clone()],
            held_out: vec![],
        };
        let aug = AugmentationConfig::noise_only(0.03);
        let train = synthesize_dataset(&toy, 10, &RenderConfig::default(), &aug, 1).unwrap();
        let val = synthesize_dataset(&toy, 10, &RenderConfig::default(), &aug, 2).unwrap();
        (train, val)
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig { epochs: 3, batch_size: 16, ..Default::default() }
    }

    #[test]
    fn toy_font_pair_is_learned() {
        let (train_ds, val_ds) = toy_sets();
        let cfg = TrainConfig { epochs: 30, batch_size: 16, ..Default::default() };
        let model = train(ClassifierKind::CType { m: 10 }, &train_ds, &val_ds, &cfg).unwrap();
        assert!(model.provenance.best_val_accuracy >= 0.95, "{:?}", model.provenance.log);
    }

    #[test]
    fn same_seed_same_hash() {
        let (train_ds, val_ds) = toy_sets();
        let a = train(ClassifierKind::CPrime, &train_ds, &val_ds, &quick_cfg()).unwrap();
        let b = train(ClassifierKind::CPrime, &train_ds, &val_ds, &quick_cfg()).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let (train_ds, val_ds) = toy_sets();
        let cfg = TrainConfig { learning_rate: 0.0, ..quick_cfg() };
        let model = train(ClassifierKind::CType { m: 10 }, &train_ds, &val_ds, &cfg).unwrap();
        let mut init = build_network(ClassifierKind::CType { m: 10 });
        init.init_glorot(derive_seed(&[cfg.seed, INIT_STREAM]));
        init.quantize_to_f32();
        assert_eq!(model.network, init);
        assert_eq!(model.provenance.best_epoch, 0);
    }

    #[test]
    fn alphabet_mismatch_rejected() {
        let (train_ds, val_ds) = toy_sets();
        let err = train(ClassifierKind::CType { m: 5 }, &train_ds, &val_ds, &quick_cfg()).unwrap_err();
        assert!(matches!(err, Error::KindMismatch(_)));
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let (train_ds, val_ds) = toy_sets();
        let cfg = TrainConfig { learning_rate: 1e200, ..quick_cfg() };
        let err = train(ClassifierKind::CType { m: 10 }, &train_ds, &val_ds, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn save_load_is_bit_exact() {
        let (train_ds, val_ds) = toy_sets();
        let model = train(ClassifierKind::CType { m: 10 }, &train_ds, &val_ds, &quick_cfg()).unwrap();
        let back = TrainedModel::from_bytes(&model.to_bytes().unwrap()).unwrap();
        assert_eq!(model, back);
        let img = &val_ds.samples[7].image;
        assert_eq!(model.predict(img).unwrap(), back.predict(img).unwrap());
        let p = model.predict(img).unwrap();
        assert!((p.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        let pair = model.predict_batch(&[img.clone(), img.clone()]).unwrap();
        assert_eq!(pair[0], pair[1]);
    }
}
