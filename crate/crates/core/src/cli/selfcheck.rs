//! Built-in checks run by `fontcheck selfcheck`: the reference-count
//! arithmetic, finite-difference gradient checks on small random networks,
//! softmax normalisation and file-format round trips.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classifier::{train, ClassifierKind};
use crate::fixtures::{oracle_checks, Check};
use crate::nn::gradcheck::check_gradients;
use crate::nn::{softmax, LayerSpec, MapShape, Network, Tensor, TrainConfig};
use crate::synth::io::{decode_dataset, encode_dataset};
use crate::synth::{synthesize_dataset, AugmentationConfig, FontRegistry, RenderConfig};
use crate::util::derive_seed;
use crate::Error;

pub const GRAD_STEP: f64 = 1e-4;
pub const GRAD_TOLERANCE: f64 = 1e-4;
pub const SOFTMAX_TOLERANCE: f64 = 1e-9;
/// Randomly shaped networks gradient-checked by [`run_all`].
pub const RANDOM_NETS: u64 = 8;

/// Small stacks covering every layer type, strides, padding and ReLU.
pub fn gradcheck_architectures() -> Vec<(&'static str, MapShape, Vec<LayerSpec>)> {
    vec![
        (
            "conv_s2_stack",
            [7, 6, 1],
            vec![
                LayerSpec::conv(3, 1, 4, 2, 1),
                LayerSpec::relu(),
                LayerSpec::conv(3, 4, 4, 2, 1),
                LayerSpec::relu(),
                LayerSpec::dense(16, 5),
            ],
        ),
        ("conv_valid", [6, 5, 2], vec![LayerSpec::conv(3, 2, 3, 1, 0), LayerSpec::relu(), LayerSpec::dense(36, 4)]),
        ("dense_only", [3, 3, 2], vec![LayerSpec::dense(18, 12), LayerSpec::relu(), LayerSpec::dense(12, 6)]),
    ]
}

/// A random conv/ReLU/dense stack with at most `max_params` parameters.
pub fn random_architecture(seed: u64, max_params: usize) -> (MapShape, Vec<LayerSpec>) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 4]));
    loop {
        let input: MapShape = [rng.random_range(3..9), rng.random_range(3..9), rng.random_range(1..3)];
        let mut shape = input;
        let mut specs = Vec::new();
        let convs = rng.random_range(0..3);
        let mut ok = true;
        for _ in 0..convs {
            let conv = LayerSpec::conv(
                rng.random_range(1..4),
                shape[2],
                rng.random_range(1..5),
                rng.random_range(1..3),
                rng.random_range(0..2),
            );
            match conv.output_shape(shape) {
                Ok(s) => shape = s,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
            specs.push(conv);
            specs.push(LayerSpec::relu());
        }
        let flat = shape.iter().product::<usize>();
        if rng.random_bool(0.5) {
            let hidden = rng.random_range(2..9);
            specs.push(LayerSpec::dense(flat, hidden));
            specs.push(LayerSpec::relu());
            specs.push(LayerSpec::dense(hidden, rng.random_range(2..7)));
        } else {
            specs.push(LayerSpec::dense(flat, rng.random_range(2..7)));
        }
        if ok && Network::new(input, &specs).is_ok_and(|n| n.param_count() <= max_params) {
            return (input, specs);
        }
    }
}

/// Gradient check of one randomly initialised network on a random batch.
pub fn gradient_check(name: &str, input: MapShape, specs: &[LayerSpec], seed: u64) -> Check {
    let label = format!("gradcheck/{name}");
    let mut net = match Network::new(input, specs) {
        Ok(n) => n,
        Err(e) => return Check::new(label, false, e.to_string()),
    };
    net.init_glorot(derive_seed(&[seed, 1]));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 2]));
    let batch_size = 3;
    let pixels = input.iter().product::<usize>();
    let data: Vec<f64> = (0..batch_size * pixels).map(|_| rng.random_range(-1.0..1.0)).collect();
    let batch = Tensor::new(vec![batch_size, input[0], input[1], input[2]], data).expect("sized batch");
    let k = net.output_width();
    let labels: Vec<usize> = (0..batch_size).map(|_| rng.random_range(0..k)).collect();
    match check_gradients(&net, &batch, &labels, GRAD_STEP) {
        Ok(r) => Check::new(
            label,
            net.param_count() <= 1000 && r.checked > 0 && r.max_rel_error < GRAD_TOLERANCE,
            format!(
                "{} params, {} checked, {} skipped at ReLU kinks, max rel error {:.2e}",
                net.param_count(),
                r.checked,
                r.skipped_kinks,
                r.max_rel_error
            ),
        ),
        Err(e) => Check::new(label, false, e.to_string()),
    }
}

pub fn softmax_check(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 3]));
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(2..30);
        let scale = 10f64.powi(rng.random_range(-2..3));
        let row: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        worst = worst.max((softmax(&row).iter().sum::<f64>() - 1.0).abs());
    }
    Check::new("softmax/rows_sum_to_one", worst <= SOFTMAX_TOLERANCE, format!("max |sum - 1| = {worst:.2e}"))
}

/// Dataset and model round trips, plus rejection of a flipped byte.
pub fn format_checks(seed: u64) -> Vec<Check> {
    let mut checks = Vec::new();
    let registry = match FontRegistry::bundled() {
        Ok(r) => r,
        Err(e) => return vec![Check::new("formats/registry", false, e.to_string())],
    };
    let ds = match synthesize_dataset(&registry, 2, &RenderConfig::default(), &AugmentationConfig::default(), seed) {
        Ok(d) => d,
        Err(e) => return vec![Check::new("formats/synthesize", false, e.to_string())],
    };
    match encode_dataset(&ds) {
        Ok(bytes) => {
            let same = decode_dataset(&bytes).map(|back| back == ds).unwrap_or(false);
            checks.push(Check::new("formats/dataset_round_trip", same, format!("{} samples", ds.len())));
            let mut bad = bytes.clone();
            let mid = bad.len() / 2;
            bad[mid] ^= 0x40;
            let rejected = matches!(decode_dataset(&bad), Err(Error::Checksum { .. }));
            checks.push(Check::new("formats/dataset_corruption_rejected", rejected, "flipped one byte"));
        }
        Err(e) => checks.push(Check::new("formats/dataset_round_trip", false, e.to_string())),
    }

    let cfg = TrainConfig { epochs: 2, batch_size: 8, seed, ..TrainConfig::default() };
    let kind = ClassifierKind::CType { m: ds.m };
    match (train(kind, &ds, &ds, &cfg), train(kind, &ds, &ds, &cfg)) {
        (Ok(a), Ok(b)) => {
            checks.push(Check::new(
                "training/deterministic",
                a.content_hash() == b.content_hash(),
                format!("hashes {} / {}", &a.content_hash()[..12], &b.content_hash()[..12]),
            ));
            let round = a.to_bytes().and_then(|bytes| crate::classifier::TrainedModel::from_bytes(&bytes));
            checks.push(Check::new(
                "formats/model_round_trip",
                round.map(|m| m == a).unwrap_or(false),
                "parameters, codec header and provenance",
            ));
        }
        (Err(e), _) | (_, Err(e)) => checks.push(Check::new("training/deterministic", false, e.to_string())),
    }
    checks
}

/// Every check, in a fixed order.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut checks = oracle_checks();
    for (i, (name, input, specs)) in gradcheck_architectures().into_iter().enumerate() {
        checks.push(gradient_check(name, input, &specs, derive_seed(&[seed, i as u64])));
    }
    for i in 0..RANDOM_NETS {
        let net_seed = derive_seed(&[seed, 0x9c, i]);
        let (input, specs) = random_architecture(net_seed, 1000);
        checks.push(gradient_check(&format!("random_{i}"), input, &specs, net_seed));
    }
    checks.push(softmax_check(seed));
    checks.extend(format_checks(seed));
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architectures_fit_the_budget() {
        for (name, input, specs) in gradcheck_architectures() {
            let net = Network::new(input, &specs).unwrap();
            assert!(net.param_count() <= 1000, "{name}");
        }
    }

    #[test]
    fn random_architectures_are_valid_and_small() {
        for seed in 0..50 {
            let (input, specs) = random_architecture(seed, 1000);
            assert!(Network::new(input, &specs).unwrap().param_count() <= 1000);
        }
    }

    #[test]
    fn gradient_checks_pass() {
        for (name, input, specs) in gradcheck_architectures() {
            let c = gradient_check(name, input, &specs, 7);
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn all_checks_pass() {
        for c in run_all(1) {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
