//! Implementations of the five subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use csi2q::datasets::{
    self, generate_synthetic_pair, ChannelConfig, DatasetManifest, Estimator, LabeledSampleSet,
    SampleKind,
};
use csi2q::learn::{
    evaluate, read_parameters, train_dual, train_single, write_parameters, InputKind,
    ModelManifest, ModelSpec, TrainSet,
};
use csi2q::pipeline::{run_ablation, transform_set, ExperimentConfig};

use crate::config::{ResolvedTrain, TrainMode};
use crate::report::{ablation_table, eval_text, AblationReportFile, EvalReportFile, REPORT_VERSION};
use crate::CliError;

pub struct Ctx {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn ensure_out_dir(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.out_dir).map_err(|e| {
            CliError::Runtime(
                std::io::Error::new(
                    e.kind(),
                    format!("cannot create output dir {}: {e}", self.out_dir.display()),
                )
                .into(),
            )
        })
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("report serialization failed: {e}")))?;
    fs::write(path, text).map_err(|e| CliError::Runtime(e.into()))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_synth(
    ctx: &Ctx,
    devices: usize,
    samples_per_device: usize,
    channel: ChannelConfig,
    estimator: Estimator,
) -> Result<(), CliError> {
    if devices < 2 {
        return Err(CliError::Config(format!(
            "need at least 2 devices, got {devices}"
        )));
    }
    if samples_per_device == 0 {
        return Err(CliError::Config("need at least 1 sample per device".into()));
    }
    ctx.ensure_out_dir()?;

    let (iq, csi) =
        generate_synthetic_pair(devices, samples_per_device, &channel, estimator, ctx.seed)?;

    for (name, set) in [("iq", &iq), ("csi", &csi)] {
        let path = ctx.out_dir.join(format!("{name}.c2qd"));
        datasets::save(set, &path)?;
        let manifest = DatasetManifest {
            format_version: 1,
            kind: set.kind,
            device_count: set.device_count,
            total_samples: set.len() as u32,
            samples_per_device: Some(samples_per_device as u32),
            seed: Some(ctx.seed),
            channel: Some(channel.clone()),
            estimator: Some(estimator),
        };
        datasets::save_manifest(&manifest, &path.with_extension("c2qd.json"))?;
        ctx.say(format!(
            "wrote {} ({} samples, {} devices)",
            path.display(),
            set.len(),
            set.device_count
        ));
    }
    Ok(())
}

pub fn cmd_transform(
    ctx: &Ctx,
    input: &Path,
    output: Option<PathBuf>,
    skip_cim: bool,
) -> Result<(), CliError> {
    ctx.ensure_out_dir()?;
    let csi = datasets::load(input)?;
    let (features, degenerate) = transform_set(&csi, skip_cim)?;
    let path = output.unwrap_or_else(|| ctx.out_dir.join("features.c2qd"));
    datasets::save(&features, &path)?;
    let manifest = DatasetManifest {
        format_version: 1,
        kind: SampleKind::Feature,
        device_count: features.device_count,
        total_samples: features.len() as u32,
        samples_per_device: None,
        seed: None,
        channel: None,
        estimator: None,
    };
    datasets::save_manifest(&manifest, &path.with_extension("c2qd.json"))?;
    ctx.say(format!(
        "wrote {} ({} feature vectors, {degenerate} degenerate input(s) skipped)",
        path.display(),
        features.len()
    ));
    Ok(())
}

fn input_kind_for(set: &LabeledSampleSet) -> InputKind {
    match set.kind {
        SampleKind::Csi => InputKind::RawCsi52,
        SampleKind::Iq | SampleKind::Feature => InputKind::Iq320,
    }
}

pub fn cmd_train(
    ctx: &Ctx,
    csi_path: &Path,
    iq_path: Option<&Path>,
    resolved: &ResolvedTrain,
) -> Result<(), CliError> {
    if resolved.mode == TrainMode::Dual && iq_path.is_none() {
        return Err(CliError::Config(
            "dual mode needs an auxiliary IQ dataset (--iq)".into(),
        ));
    }
    ctx.ensure_out_dir()?;

    let main_set = datasets::load(csi_path)?;
    let (train_samples, holdout_samples) =
        datasets::split(&main_set, resolved.train_fraction, ctx.seed)?;
    let train = TrainSet::from_labeled(&train_samples)?;

    let aux_device_count = match iq_path {
        Some(p) => datasets::load(p)?.device_count as usize,
        None => main_set.device_count as usize,
    };
    let spec: ModelSpec = resolved.arch.spec(
        input_kind_for(&main_set),
        main_set.device_count as usize,
        aux_device_count,
    );

    let outcome = match resolved.mode {
        TrainMode::Dual => {
            let iq_set = datasets::load(iq_path.expect("checked above"))?;
            if iq_set.kind == SampleKind::Csi {
                return Err(CliError::Config(
                    "auxiliary dataset must hold 320-point IQ samples".into(),
                ));
            }
            let (iq_train_samples, _) =
                datasets::split(&iq_set, resolved.train_fraction, ctx.seed)?;
            let iq_train = TrainSet::from_labeled(&iq_train_samples)?;
            train_dual(&train, &iq_train, &spec, &resolved.train)?
        }
        TrainMode::Single => train_single(&train, &spec, &resolved.train)?,
    };

    let params_path = ctx.out_dir.join("model.params");
    write_parameters(&params_path, &outcome.params)?;
    let manifest = ModelManifest {
        format_version: 1,
        spec,
        seed: resolved.train.rng_seed,
        epochs: resolved.train.epochs,
    };
    write_json(&ctx.out_dir.join("model.json"), &manifest)?;
    write_json(&ctx.out_dir.join("history.json"), &outcome.history)?;

    let holdout_path = ctx.out_dir.join("holdout.c2qd");
    datasets::save(&holdout_samples, &holdout_path)?;

    let final_loss = outcome.history.last().expect("epochs >= 1").main_loss;
    ctx.say(format!(
        "trained {} epoch(s); final train loss {:.6}",
        resolved.train.epochs, final_loss
    ));
    ctx.say(format!(
        "wrote {}, model.json, history.json, holdout.c2qd",
        params_path.display()
    ));
    Ok(())
}

pub fn cmd_eval(ctx: &Ctx, model_base: &Path, data_path: &Path) -> Result<(), CliError> {
    ctx.ensure_out_dir()?;
    let base = if model_base.extension().is_some_and(|e| e == "json") {
        model_base.with_extension("")
    } else {
        model_base.to_path_buf()
    };
    let manifest_path = base.with_extension("json");
    let manifest: ModelManifest = serde_json::from_str(
        &fs::read_to_string(&manifest_path).map_err(|e| CliError::Runtime(e.into()))?,
    )
    .map_err(|e| CliError::Config(format!("bad model manifest {}: {e}", manifest_path.display())))?;
    let params = read_parameters(&base.with_extension("params"), &manifest.spec)?;

    let data = datasets::load(data_path)?;
    if input_kind_for(&data) != manifest.spec.csi_input {
        return Err(CliError::Config(format!(
            "dataset kind {:?} does not match the model's {:?} input",
            data.kind, manifest.spec.csi_input
        )));
    }
    let shapes = manifest.spec.validate()?;
    if data.device_count as usize != shapes.n_main {
        return Err(CliError::Config(format!(
            "dataset has {} devices, model classifies {}",
            data.device_count, shapes.n_main
        )));
    }

    let test = TrainSet::from_labeled(&data)?;
    let report = evaluate(&params, &manifest.spec, &test)?;
    ctx.say(eval_text(&report));
    write_json(
        &ctx.out_dir.join("eval.json"),
        &EvalReportFile {
            version: REPORT_VERSION,
            eval: &report,
        },
    )?;
    ctx.say(format!("wrote {}", ctx.out_dir.join("eval.json").display()));
    Ok(())
}

pub fn cmd_ablate(
    ctx: &Ctx,
    iq_path: &Path,
    csi_path: &Path,
    resolved: &ResolvedTrain,
) -> Result<(), CliError> {
    ctx.ensure_out_dir()?;
    let iq = datasets::load(iq_path)?;
    let csi = datasets::load(csi_path)?;
    let cfg = ExperimentConfig {
        train: resolved.train.clone(),
        train_fraction: resolved.train_fraction,
        split_seed: ctx.seed,
        arch: resolved.arch,
    };
    let report = run_ablation(&iq, &csi, &cfg)?;

    ctx.say(ablation_table(&report));
    if report.degenerate_packets > 0 {
        ctx.say(format!(
            "({} degenerate packet(s) dropped before splitting)",
            report.degenerate_packets
        ));
    }
    write_json(
        &ctx.out_dir.join("ablation.json"),
        &AblationReportFile {
            version: REPORT_VERSION,
            seed: ctx.seed,
            epochs: resolved.train.epochs,
            report: &report,
        },
    )?;
    ctx.say(format!(
        "wrote {}",
        ctx.out_dir.join("ablation.json").display()
    ));
    Ok(())
}

/// Map a CLI estimator choice to the library type.
pub fn resolve_estimator(
    estimator: Option<crate::EstimatorArg>,
    mmse_snr_db: Option<f64>,
) -> Result<Estimator, CliError> {
    match estimator.unwrap_or(crate::EstimatorArg::Ls) {
        crate::EstimatorArg::Ls => {
            if mmse_snr_db.is_some() {
                return Err(CliError::Config(
                    "--mmse-snr-db only applies to --estimator mmse".into(),
                ));
            }
            Ok(Estimator::Ls)
        }
        crate::EstimatorArg::Mmse => {
            let snr_db = mmse_snr_db.unwrap_or(20.0);
            Ok(Estimator::Mmse {
                snr_linear: 10f64.powf(snr_db / 10.0),
            })
        }
    }
}

/// Build the channel config from flags over the config-file section.
pub fn resolve_channel(
    base: Option<ChannelConfig>,
    taps: Option<usize>,
    tap_decay_db: Option<f64>,
    snr_min: Option<f64>,
    snr_max: Option<f64>,
    no_noise: bool,
) -> Result<ChannelConfig, CliError> {
    let mut ch = base.unwrap_or_default();
    if let Some(t) = taps {
        ch.n_taps = t;
    }
    if let Some(d) = tap_decay_db {
        ch.tap_decay_db = d;
    }
    if no_noise {
        if snr_min.is_some() || snr_max.is_some() {
            return Err(CliError::Config(
                "--no-noise conflicts with --snr-min/--snr-max".into(),
            ));
        }
        ch.snr_db_min = None;
        ch.snr_db_max = None;
    } else {
        if let Some(lo) = snr_min {
            ch.snr_db_min = Some(lo);
        }
        if let Some(hi) = snr_max {
            ch.snr_db_max = Some(hi);
        }
    }
    if ch.n_taps == 0 {
        return Err(CliError::Config("channel needs at least one tap".into()));
    }
    if let (Some(lo), Some(hi)) = (ch.snr_db_min, ch.snr_db_max) {
        if lo > hi {
            return Err(CliError::Config(format!(
                "snr range is inverted: {lo} > {hi}"
            )));
        }
    }
    Ok(ch)
}
