//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

use std::process::Command;
use std::time::{Duration, Instant};

use fontcheck::classifier::{build_network, decode_output, train, ClassifierKind, Prediction, TrainedModel};
use fontcheck::cli::selfcheck::{gradient_check, random_architecture, GRAD_TOLERANCE};
use fontcheck::fixtures::oracle_checks;
use fontcheck::metrics::evaluate;
use fontcheck::nn::{softmax, TrainConfig};
use fontcheck::synth::io::{decode_dataset, encode_dataset};
use fontcheck::synth::{
    load_dataset, save_dataset, synthesize_dataset, synthesize_test_set, AugmentationConfig, Dataset, FontRegistry,
    RenderConfig,
};
use fontcheck::util::derive_seed;
use fontcheck::verdict::{combine, field_verdict, Decision, ReliabilityTable, SymbolAssessment};
use fontcheck::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took < limit;
    let mut detail = format!("{}; {:.2}s (limit {}s)", o.detail, took.as_secs_f64(), limit.as_secs());
    if !in_time {
        detail.push_str(" over time limit");
    }
    outcome(o.passed && in_time, detail)
}

fn reference_arithmetic() -> Outcome {
    let checks = oracle_checks();
    let failed: Vec<String> =
        checks.iter().filter(|c| !c.passed).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    outcome(failed.is_empty(), format!("{} checks, failed: {failed:?}", checks.len()))
}

fn numerical_core() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;

    let nets = 24;
    let mut worst = 0.0f64;
    let mut grad_failures = Vec::new();
    for i in 0..nets {
        let seed = derive_seed(&[0xacc, i]);
        let (input, specs) = random_architecture(seed, 1000);
        let c = gradient_check(&format!("random_{i}"), input, &specs, seed);
        if let Some(e) = c.detail.rsplit(' ').next().and_then(|v| v.parse::<f64>().ok()) {
            worst = worst.max(e);
        }
        if !c.passed {
            grad_failures.push(c.detail);
        }
    }
    ok &= grad_failures.is_empty();
    notes.push(format!("{nets} random nets, max rel error {worst:.2e} (< {GRAD_TOLERANCE:.0e})"));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sum_err = 0.0f64;
    for _ in 0..2000 {
        let k = rng.random_range(2..40);
        let scale = 10f64.powi(rng.random_range(-3..4));
        let row: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        sum_err = sum_err.max((softmax(&row).iter().sum::<f64>() - 1.0).abs());
    }
    ok &= sum_err <= 1e-9;
    notes.push(format!("softmax max |sum-1| {sum_err:.1e}"));

    let hashes = FontRegistry::bundled().and_then(|reg| {
        let (r, a) = (RenderConfig::default(), AugmentationConfig::default());
        let tr = synthesize_dataset(&reg, 30, &r, &a, 5)?;
        let va = synthesize_dataset(&reg, 10, &r, &a, 6)?;
        let cfg = TrainConfig { epochs: 3, seed: 9, ..TrainConfig::default() };
        let kind = ClassifierKind::CType { m: 10 };
        Ok((train(kind, &tr, &va, &cfg)?.content_hash(), train(kind, &tr, &va, &cfg)?.content_hash()))
    });
    match hashes {
        Ok((a, b)) => {
            ok &= a == b;
            notes.push(format!("training hashes {} / {}", &a[..12], &b[..12]));
        }
        Err(e) => {
            ok = false;
            notes.push(format!("training failed: {e}"));
        }
    }
    outcome(ok, notes.join("; "))
}

fn architecture_budget() -> Outcome {
    let c = build_network(ClassifierKind::CType { m: 10 });
    let cp = build_network(ClassifierKind::CPrime);
    let ok = (6000..=9000).contains(&c.param_count()) && c.output_width() == 20 && cp.output_width() == 2;
    outcome(
        ok,
        format!(
            "C-type {} params, {} outputs; C'-type {} params, {} outputs",
            c.param_count(),
            c.output_width(),
            cp.param_count(),
            cp.output_width()
        ),
    )
}

fn font_bit_accuracy(model: &TrainedModel, ds: &Dataset) -> fontcheck::Result<f64> {
    let images: Vec<_> = ds.samples.iter().map(|s| s.image.clone()).collect();
    let preds = model.predict_batch(&images)?;
    let right = preds.iter().zip(&ds.samples).filter(|(p, s)| p.forged == s.forged).count();
    Ok(right as f64 / ds.len() as f64)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn desk_scale() -> Outcome {
    match desk_scale_inner() {
        Ok(o) => o,
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn desk_scale_inner() -> fontcheck::Result<Outcome> {
    let reg = FontRegistry::bundled()?;
    let (render, aug) = (RenderConfig::default(), AugmentationConfig::default());
    let mut notes = vec![format!(
        "fonts: {} genuine, {} forged proxies, {} held out",
        reg.genuine.len(),
        reg.forged.len(),
        reg.held_out.len()
    )];
    let mut ok = reg.genuine.len() == 1 && reg.forged.len() >= 5 && reg.held_out.len() >= 2;

    let (mut acc_c, mut youden_c, mut youden_p) = (Vec::new(), Vec::new(), Vec::new());
    let mut held_out_ok = true;
    for seed in 1..=3u64 {
        let train_ds = synthesize_dataset(&reg, 400, &render, &aug, derive_seed(&[seed, 1]))?;
        let val_ds = synthesize_dataset(&reg, 100, &render, &aug, derive_seed(&[seed, 2]))?;
        let check_ds = synthesize_dataset(&reg, 100, &render, &aug, derive_seed(&[seed, 3]))?;
        let negative =
            synthesize_test_set("genuine", &reg.genuine, false, 100, &render, &aug, derive_seed(&[seed, 4]))?;
        let positive =
            synthesize_test_set("held_out", &reg.held_out, true, 100, &render, &aug, derive_seed(&[seed, 5]))?;
        let unseen = positive.font_ids().iter().all(|f| !train_ds.font_ids().contains(f));
        ok &= unseen;

        let cfg = TrainConfig { epochs: 15, seed, ..TrainConfig::default() };
        for kind in [ClassifierKind::CType { m: 10 }, ClassifierKind::CPrime] {
            let model = train(kind, &train_ds, &val_ds, &cfg)?;
            let report = evaluate(&model, &negative, std::slice::from_ref(&positive))?;
            let sens = report.sensitivity.value().unwrap_or(0.0);
            let spec = report.specificity.value().unwrap_or(0.0);
            let youden = sens + spec - 1.0;
            if let ClassifierKind::CType { .. } = kind {
                let acc = font_bit_accuracy(&model, &check_ds)?;
                acc_c.push(acc);
                held_out_ok &= sens >= 0.70 && spec >= 0.70;
                youden_c.push(youden);
                notes.push(format!("seed {seed} C: val {acc:.4} sens {sens:.4} spec {spec:.4}"));
            } else {
                youden_p.push(youden);
                notes.push(format!("seed {seed} C': sens {sens:.4} spec {spec:.4}"));
            }
        }
    }
    let val_ok = acc_c.iter().all(|&a| a >= 0.95);
    let (mc, mp) = (median(youden_c), median(youden_p));
    let direction_ok = mc >= mp - 0.02;
    notes.push(format!(
        "(a) val >= 0.95: {val_ok}; (b) held-out sens/spec >= 0.70: {held_out_ok}; (c) median Youden C {mc:.4} vs C' {mp:.4}: {direction_ok}"
    ));
    ok &= val_ok && held_out_ok && direction_ok;
    Ok(outcome(ok, notes.join("; ")))
}

fn pred(values: &[(usize, f64)], kind: ClassifierKind) -> Prediction {
    let mut p = vec![0.0; kind.output_width()];
    for &(i, v) in values {
        p[i] = v;
    }
    decode_output(&p, kind).unwrap()
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<SymbolAssessment> {
    (0..n)
        .map(|position| {
            let flagged = rng.random_bool(0.3);
            SymbolAssessment {
                position,
                std_char: 0,
                std_confidence: 1.0,
                auth_char: Some(0),
                auth_forged: flagged,
                forced: false,
                flagged,
                weight: rng.random_range(0.0..1.0),
            }
        })
        .collect()
}

fn verdict_properties() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let table = ReliabilityTable::uniform(10);
    let std_kind = ClassifierKind::Character { m: 10 };
    let auth_kind = ClassifierKind::CType { m: 10 };
    let std5 = pred(&[(5, 0.99), (3, 0.01)], std_kind);
    let cases = [
        ("agree genuine", pred(&[(5, 1.0)], auth_kind), false),
        ("agree forged", pred(&[(15, 1.0)], auth_kind), true),
        ("disagree", pred(&[(3, 1.0)], auth_kind), true),
    ];
    for (name, auth, want) in cases {
        let got = combine(0, &std5, &auth, &table).map(|a| a.flagged).ok();
        ok &= got == Some(want);
        notes.push(format!("{name}: flagged {got:?}"));
    }

    let uniform = |flags: &[bool]| -> Vec<SymbolAssessment> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut f = random_field(&mut rng, flags.len());
        for (a, &fl) in f.iter_mut().zip(flags) {
            a.flagged = fl;
            a.weight = 0.5;
        }
        f
    };
    let decide =
        |flags: &[bool], tau: f64| field_verdict(uniform(flags), tau).map(|v| (v.verdict, v.flagged_weight_fraction));
    let mut three = [false; 10];
    three[..3].fill(true);
    let mut one = [false; 10];
    one[4] = true;
    let examples = [
        ("none flagged", decide(&[false; 10], 0.2).ok() == Some((Decision::Genuine, 0.0))),
        ("all flagged", decide(&[true; 10], 0.2).ok() == Some((Decision::Forged, 1.0))),
        ("3 of 10 at 0.25", decide(&three, 0.25).is_ok_and(|(d, _)| d == Decision::Forged)),
        ("1 of 10 at 0.05", decide(&one, 0.05).is_ok_and(|(d, _)| d == Decision::Forged)),
        ("all genuine at 0.05", decide(&[false; 10], 0.05).is_ok_and(|(d, _)| d == Decision::Genuine)),
    ];
    for (name, passed) in examples {
        ok &= passed;
        if !passed {
            notes.push(format!("{name} failed"));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut mono_bad, mut scale_bad, mut floor_bad) = (0, 0, 0);
    let trials = 2000;
    for _ in 0..trials {
        let n = rng.random_range(1..16);
        let field = random_field(&mut rng, n);
        let tau = rng.random_range(0.0..0.99);
        let base = field_verdict(field.clone(), tau).unwrap();

        let i = rng.random_range(0..n);
        let mut flipped = field.clone();
        flipped[i].flagged = true;
        let after = field_verdict(flipped, tau).unwrap();
        if base.verdict == Decision::Forged && after.verdict == Decision::Genuine {
            mono_bad += 1;
        }

        let k = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled: Vec<_> = field
            .iter()
            .cloned()
            .map(|mut a| {
                a.weight *= k;
                a
            })
            .collect();
        let s = field_verdict(scaled, tau).unwrap();
        let diff = (s.flagged_weight_fraction - base.flagged_weight_fraction).abs();
        let near_threshold = (base.flagged_weight_fraction - tau).abs() < 1e-9;
        if diff > 1e-12 || (s.verdict != base.verdict && !near_threshold) {
            scale_bad += 1;
        }

        let single = field_verdict(vec![field[0].clone()], tau).unwrap();
        let want = if field[0].flagged { Decision::Forged } else { Decision::Genuine };
        if single.verdict != want {
            floor_bad += 1;
        }
    }
    ok &= mono_bad == 0 && scale_bad == 0 && floor_bad == 0;
    notes.push(format!(
        "{trials} random fields: monotonicity violations {mono_bad}, scale violations {scale_bad}, single-symbol violations {floor_bad}"
    ));
    outcome(ok, notes.join("; "))
}

fn format_round_trips() -> Outcome {
    match format_inner() {
        Ok(o) => o,
        Err(e) => outcome(false, format!("error: {e}")),
    }
}

fn format_inner() -> fontcheck::Result<Outcome> {
    let mut notes = Vec::new();
    let mut ok = true;
    let dir = tempfile::tempdir()?;
    let reg = FontRegistry::bundled()?;
    let (r, a) = (RenderConfig::default(), AugmentationConfig::default());
    let ds = synthesize_dataset(&reg, 10, &r, &a, 77)?;
    let ds_path = dir.path().join("set.ffds");
    save_dataset(&ds, &ds_path)?;
    let ds_bytes = std::fs::read(&ds_path)?;
    let back = load_dataset(&ds_path)?;
    let ds_exact = back == ds && encode_dataset(&back)? == ds_bytes;
    ok &= ds_exact;
    notes.push(format!("dataset bit-exact: {ds_exact}"));

    let mut corrupted = ds_bytes.clone();
    let at = corrupted.len() / 3;
    corrupted[at] ^= 0x01;
    let ds_rejected = matches!(decode_dataset(&corrupted), Err(Error::Checksum { .. }));
    ok &= ds_rejected;

    let cfg = TrainConfig { epochs: 2, seed: 3, ..TrainConfig::default() };
    let model = train(ClassifierKind::CType { m: 10 }, &ds, &ds, &cfg)?;
    let model_path = dir.path().join("model.ffnn");
    model.save(&model_path)?;
    let model_bytes = std::fs::read(&model_path)?;
    let loaded = TrainedModel::load(&model_path)?;
    let images: Vec<_> = ds.samples.iter().map(|s| s.image.clone()).collect();
    let model_exact = loaded == model
        && loaded.to_bytes()? == model_bytes
        && loaded.predict_batch(&images)? == model.predict_batch(&images)?;
    ok &= model_exact;
    notes.push(format!("model bit-exact: {model_exact}"));

    let mut corrupted = model_bytes.clone();
    let at = corrupted.len() / 2;
    corrupted[at] ^= 0x80;
    let model_rejected = matches!(TrainedModel::from_bytes(&corrupted), Err(Error::Checksum { .. }));
    ok &= model_rejected;
    notes.push(format!("corruption rejected: dataset {ds_rejected}, model {model_rejected}"));

    let status = Command::new(env!("CARGO_BIN_EXE_fontcheck")).arg("selfcheck").output()?;
    let code = status.status.code();
    ok &= code == Some(0);
    notes.push(format!("selfcheck exit {code:?}"));
    Ok(outcome(ok, notes.join("; ")))
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("1 reference arithmetic", Duration::from_secs(1), reference_arithmetic),
        ("2 numerical core", Duration::from_secs(30), numerical_core),
        ("3 architecture budget", Duration::from_secs(1), architecture_budget),
        ("4 desk-scale end-to-end", Duration::from_secs(600), desk_scale),
        ("5 verdict properties", Duration::from_secs(1), verdict_properties),
        ("6 format round trips", Duration::from_secs(60), format_round_trips),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let o = timed(limit, f);
        println!("criterion {name}: {} - {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} of 6 criteria passed", 6 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
