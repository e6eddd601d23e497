//! The `fontcheck` command line: synthesize datasets, train, evaluate,
//! verify a field and run the built-in checks.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 failed check.

mod config;
pub mod selfcheck;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use config::RunConfig;

use crate::classifier::{train, TrainedModel};
use crate::fixtures::reference_experiment;
use crate::metrics::{evaluate, load_report, render_report, EvalReport};
use crate::synth::io::{export_pgm_dir, load_crop, manifest_path, read_manifest};
use crate::synth::{load_dataset, save_dataset, synthesize_dataset, synthesize_test_set, Dataset, FontRegistry};
use crate::util::{derive_seed, parse_class_list, sha256_hex, write_atomic};
use crate::verdict::{build_reliability_table, verify_field, FieldVerdict, ReliabilityTable};
use crate::{Error, Result, TOOL_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CHECK: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fontcheck", version, about = "Forged-font detection for printed characters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SetChoice {
    /// Balanced genuine/forged-proxy set for training or validation.
    Training,
    /// Genuine font only (negative test set).
    Genuine,
    /// Forged-proxy fonts only, labelled forged.
    Forged,
    /// Held-out fonts only, labelled forged.
    HeldOut,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindChoice {
    /// Character and font bit (2M classes).
    C,
    /// Font bit only (2 classes).
    Cprime,
    /// Character only (M classes); the standard reader for `verify`.
    Char,
}

impl KindChoice {
    fn name(self) -> &'static str {
        match self {
            KindChoice::C => "c",
            KindChoice::Cprime => "cprime",
            KindChoice::Char => "char",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Render and augment a dataset file.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = SetChoice::Training)]
        set: SetChoice,
        /// Samples per cell (training) or per character (test sets).
        #[arg(long)]
        count: Option<usize>,
        /// Also export the samples as PGM files plus manifest.csv.
        #[arg(long)]
        pgm_dir: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a classifier and write the model file.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<KindChoice>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score a model on test sets, or re-analyse an existing report.
    Eval {
        #[arg(long, conflicts_with_all = ["from_report", "reference"], requires = "negative")]
        model: Option<PathBuf>,
        /// Genuine test set.
        #[arg(long)]
        negative: Option<PathBuf>,
        /// Forged test set; repeatable.
        #[arg(long)]
        positive: Vec<PathBuf>,
        #[arg(long, conflicts_with = "reference")]
        from_report: Option<PathBuf>,
        /// Bundled reference counts: passport_id_number or mrz.
        #[arg(long)]
        reference: Option<String>,
        /// Which reference counts to use.
        #[arg(long, value_enum, default_value_t = KindChoice::C)]
        kind: KindChoice,
        /// Classes left out of the sensitivity, e.g. 0,8.
        #[arg(long)]
        exclude: Option<String>,
        /// Classes whose symbols are always flagged, e.g. 0,8.
        #[arg(long)]
        force_forged: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Decide whether one field's character crops are genuine.
    Verify {
        /// Character-only model.
        #[arg(long)]
        std_model: PathBuf,
        /// C-type or C'-type model.
        #[arg(long)]
        auth_model: PathBuf,
        /// Directory or manifest.csv listing the crops in field order.
        #[arg(long)]
        crops: PathBuf,
        /// Validation report whose matrix supplies per-class reliabilities.
        #[arg(long)]
        reliability: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        force_below: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Print and write a report from a report file or reference counts.
    Report {
        #[arg(long, conflicts_with = "reference", required_unless_present = "reference")]
        input: Option<PathBuf>,
        #[arg(long)]
        reference: Option<String>,
        #[arg(long, value_enum, default_value_t = KindChoice::C)]
        kind: KindChoice,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run the built-in arithmetic, gradient and format checks.
    Selfcheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Parses `args` (program name first) and runs the command, writing to the
/// given streams. Returns the exit code.
pub fn run_to<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs with the process arguments and standard streams.
pub fn run() -> i32 {
    run_to(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) => EXIT_USAGE,
        Error::CheckFailed(_) => EXIT_CHECK,
        _ => EXIT_DATA,
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Synth { out: path, set, count, pgm_dir, config, seed } => {
            let mut cfg = RunConfig::resolve(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cmd_synth(&cfg, set, count, &path, pgm_dir.as_deref(), out)
        }
        Command::Train { train, val, out: path, kind, epochs, config, seed } => {
            let mut cfg = RunConfig::resolve(config.as_deref())?;
            if let Some(k) = kind {
                cfg.kind = k.name().into();
            }
            if let Some(e) = epochs {
                cfg.train.epochs = e;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            cmd_train(&cfg, &train, &val, &path, out)
        }
        Command::Eval { model, negative, positive, from_report, reference, kind, exclude, force_forged, out_dir } => {
            let exclude = exclude.as_deref().map(parse_class_list).transpose()?;
            let forced = force_forged.as_deref().map(parse_class_list).transpose()?;
            let mut report = match (model, from_report, reference) {
                (Some(m), _, _) => {
                    let negative = negative.ok_or_else(|| Error::InvalidConfig("--negative is required".into()))?;
                    score(&m, &negative, &positive)?
                }
                (None, Some(p), _) => load_report(&p)?,
                (None, None, Some(id)) => reference_report(&id, kind)?,
                (None, None, None) => {
                    return Err(Error::InvalidConfig("one of --model, --from-report or --reference is required".into()))
                }
            };
            if let Some(c) = &exclude {
                report.add_exclusion(c)?;
            }
            if let Some(c) = &forced {
                report.add_force_forged(c)?;
            }
            emit_report(&report, out_dir.as_deref(), out)
        }
        Command::Verify { std_model, auth_model, crops, reliability, threshold, force_below, out: path, config } => {
            let mut cfg = RunConfig::resolve(config.as_deref())?;
            if let Some(t) = threshold {
                cfg.threshold = t;
            }
            if force_below.is_some() {
                cfg.force_below = force_below;
            }
            cmd_verify(&cfg, &std_model, &auth_model, &crops, reliability.as_deref(), path.as_deref(), out)
        }
        Command::Report { input, reference, kind, out_dir } => {
            let report = match (input, reference) {
                (Some(p), _) => load_report(&p)?,
                (None, Some(id)) => reference_report(&id, kind)?,
                (None, None) => return Err(Error::InvalidConfig("--input or --reference is required".into())),
            };
            emit_report(&report, out_dir.as_deref(), out)
        }
        Command::Selfcheck { seed } => cmd_selfcheck(seed, out),
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{what} {} does not exist", path.display())))
    }
}

fn require_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(Error::InvalidConfig(format!("output directory {} does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

pub fn cmd_synth(
    cfg: &RunConfig,
    set: SetChoice,
    count: Option<usize>,
    path: &Path,
    pgm_dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    cfg.validate()?;
    require_file(&cfg.registry, "font registry")?;
    require_parent(path)?;
    let registry = FontRegistry::load_manifest(&cfg.registry)?;
    let seed = derive_seed(&[cfg.seed, set as u64]);
    let (render, aug) = (&cfg.render, &cfg.augmentation);
    let mut ds = match set {
        SetChoice::Training => synthesize_dataset(&registry, count.unwrap_or(cfg.per_cell_count), render, aug, seed)?,
        SetChoice::Genuine | SetChoice::Forged | SetChoice::HeldOut => {
            let (label, fonts, forged) = match set {
                SetChoice::Genuine => ("genuine", &registry.genuine, false),
                SetChoice::Forged => ("forged", &registry.forged, true),
                _ => ("held_out", &registry.held_out, true),
            };
            let n = count.unwrap_or(cfg.test_per_char_count);
            synthesize_test_set(label, fonts, forged, n, render, aug, seed)?
        }
    };
    ds.provenance.notes.push(format!("run config: {}", cfg.to_json()));
    save_dataset(&ds, path)?;
    if let Some(dir) = pgm_dir {
        export_pgm_dir(&ds, dir)?;
    }
    writeln!(out, "{} samples ({}), fonts: {}", ds.len(), ds.provenance.label, ds.font_ids().join(", "))?;
    write!(out, "{}", ds.cell_table())?;
    writeln!(out, "dataset hash {}", ds.content_hash())?;
    Ok(EXIT_OK)
}

pub fn cmd_train(cfg: &RunConfig, train_path: &Path, val_path: &Path, path: &Path, out: &mut dyn Write) -> Result<i32> {
    cfg.validate()?;
    if cfg.train.epochs == 0 {
        return Err(Error::InvalidConfig("epochs must be at least 1".into()));
    }
    require_file(train_path, "training set")?;
    require_file(val_path, "validation set")?;
    require_parent(path)?;
    let kind = cfg.classifier_kind()?;
    let train_ds = load_dataset(train_path)?;
    let val_ds = load_dataset(val_path)?;
    let model = train(kind, &train_ds, &val_ds, &cfg.train)?;
    writeln!(out, "{:>5} {:>10} {:>12} {:>9} {:>9}", "epoch", "lr", "train loss", "val font", "val char")?;
    for e in &model.provenance.log {
        let char_acc = e.val_char_accuracy.map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
        writeln!(
            out,
            "{:>5} {:>10.6} {:>12.6} {:>9} {:>9}",
            e.epoch + 1,
            e.learning_rate,
            e.train_loss,
            format!("{:.4}", e.val_accuracy),
            char_acc
        )?;
    }
    model.save(path)?;
    writeln!(out, "best epoch {} (val {:.4})", model.provenance.best_epoch + 1, model.provenance.best_val_accuracy)?;
    writeln!(out, "model hash {}", model.content_hash())?;
    Ok(EXIT_OK)
}

fn score(model_path: &Path, negative: &Path, positives: &[PathBuf]) -> Result<EvalReport> {
    require_file(model_path, "model")?;
    require_file(negative, "negative set")?;
    for p in positives {
        require_file(p, "positive set")?;
    }
    if positives.is_empty() {
        return Err(Error::InvalidConfig("at least one --positive set is required".into()));
    }
    let model = TrainedModel::load(model_path)?;
    let neg = load_dataset(negative)?;
    let pos = positives.iter().map(|p| load_dataset(p)).collect::<Result<Vec<Dataset>>>()?;
    let mut report = evaluate(&model, &neg, &pos)?;
    report.label = format!("{} on {}", model_path.display(), neg.provenance.label);
    report.config = serde_json::json!({
        "model": model_path.display().to_string(),
        "negative": negative.display().to_string(),
        "positive": positives.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    Ok(report)
}

fn reference_report(id: &str, kind: KindChoice) -> Result<EvalReport> {
    let e = reference_experiment(id)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown reference '{id}' (passport_id_number, mrz)")))?;
    match kind {
        KindChoice::C => e.c_type_report(),
        KindChoice::Cprime => e.cprime_type_report(),
        KindChoice::Char => Err(Error::InvalidConfig("reference counts exist for c and cprime only".into())),
    }
}

fn emit_report(report: &EvalReport, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for p in render_report(report, dir)? {
            writeln!(out, "wrote {}", p.display())?;
        }
    } else {
        report.verify()?;
    }
    write!(out, "{}", report.summary())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CropRecord {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct VerdictFile<'a> {
    tool_version: &'static str,
    config: serde_json::Value,
    std_model_hash: String,
    auth_model_hash: String,
    reliability_source: Option<String>,
    reliability: &'a ReliabilityTable,
    crops: Vec<CropRecord>,
    result: &'a FieldVerdict,
}

/// Crop paths in field order: manifest order if a manifest exists,
/// otherwise the directory's `.pgm` files sorted by name.
fn crop_paths(crops: &Path) -> Result<Vec<PathBuf>> {
    let manifest = manifest_path(crops);
    if manifest.is_file() {
        return Ok(read_manifest(&manifest)?.into_iter().map(|(p, _)| p).collect());
    }
    if !crops.is_dir() {
        return Err(Error::InvalidConfig(format!("crops {} is neither a directory nor a manifest", crops.display())));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(crops)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn cmd_verify(
    cfg: &RunConfig,
    std_path: &Path,
    auth_path: &Path,
    crops: &Path,
    reliability: Option<&Path>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    if !(0.0..1.0).contains(&cfg.threshold) {
        return Err(Error::InvalidConfig(format!("threshold {} must lie in [0, 1)", cfg.threshold)));
    }
    require_file(std_path, "standard model")?;
    require_file(auth_path, "authenticity model")?;
    if let Some(p) = path {
        require_parent(p)?;
    }
    let std_model = TrainedModel::load(std_path)?;
    let auth_model = TrainedModel::load(auth_path)?;
    let m = std_model.kind.alphabet().unwrap_or(cfg.m);
    let (table, source) = match reliability {
        Some(p) => {
            let report = load_report(p)?;
            let matrix = report
                .matrix
                .as_ref()
                .ok_or_else(|| Error::KindMismatch("reliability report has no per-class matrix".into()))?;
            let bytes = std::fs::read(if p.is_dir() { p.join("report.json") } else { p.to_path_buf() })?;
            (build_reliability_table(matrix, cfg.force_below), Some(sha256_hex(&bytes)))
        }
        None => (ReliabilityTable::uniform(m), None),
    };

    let paths = crop_paths(crops)?;
    let mut images = Vec::with_capacity(paths.len());
    let mut records = Vec::with_capacity(paths.len());
    for p in &paths {
        images.push(load_crop(p)?);
        records.push(CropRecord { path: p.display().to_string(), sha256: sha256_hex(&std::fs::read(p)?) });
    }
    let result = verify_field(&std_model, &auth_model, &images, &table, cfg.threshold)?;

    writeln!(
        out,
        "{:>4} {:>4} {:>7} {:>5} {:>6} {:>7} {:>7}",
        "pos", "std", "conf", "auth", "forged", "flagged", "weight"
    )?;
    for a in &result.assessments {
        writeln!(
            out,
            "{:>4} {:>4} {:>7.4} {:>5} {:>6} {:>7} {:>7.4}",
            a.position,
            a.std_char,
            a.std_confidence,
            a.auth_char.map_or_else(|| "-".to_string(), |c| c.to_string()),
            a.auth_forged,
            if a.forced { "forced".to_string() } else { a.flagged.to_string() },
            a.weight
        )?;
    }
    writeln!(
        out,
        "flagged weight {:.4} vs threshold {}: {:?}",
        result.flagged_weight_fraction, result.threshold, result.verdict
    )?;
    if let Some(p) = path {
        let file = VerdictFile {
            tool_version: TOOL_VERSION,
            config: cfg.to_json(),
            std_model_hash: std_model.content_hash(),
            auth_model_hash: auth_model.content_hash(),
            reliability_source: source,
            reliability: &table,
            crops: records,
            result: &result,
        };
        write_atomic(p, serde_json::to_string_pretty(&file)?.as_bytes())?;
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_selfcheck(seed: u64, out: &mut dyn Write) -> Result<i32> {
    let checks = selfcheck::run_all(seed);
    for c in &checks {
        writeln!(out, "[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(out, "{} checks, {failed} failed", checks.len())?;
    if failed > 0 {
        return Err(Error::CheckFailed(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(EXIT_OK)
}
