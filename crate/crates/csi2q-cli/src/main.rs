//! Command-line front end: dataset synthesis, CSI transformation, training,
//! evaluation, and the four-arm ablation.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage or
//! configuration errors.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod config;
mod report;

use commands::{cmd_ablate, cmd_eval, cmd_synth, cmd_train, cmd_transform, Ctx};
use config::{resolve_train, FileConfig, TrainMode};
use csi2q::pipeline::Arch;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    Config(String),
    /// Data or I/O failure while running; exit code 1.
    Runtime(csi2q::Error),
}

impl From<csi2q::Error> for CliError {
    fn from(e: csi2q::Error) -> Self {
        match e {
            // Precondition violations surfacing from the library are
            // configuration mistakes from the CLI user's point of view.
            csi2q::Error::InvalidArgument(msg) => CliError::Config(msg),
            other => CliError::Runtime(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Ls,
    Mmse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ArchArg {
    Tcn,
    Cnn,
}

impl From<ArchArg> for Arch {
    fn from(a: ArchArg) -> Self {
        match a {
            ArchArg::Tcn => Arch::Tcn,
            ArchArg::Cnn => Arch::Cnn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Single,
    Dual,
}

impl From<ModeArg> for TrainMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Single => TrainMode::Single,
            ModeArg::Dual => TrainMode::Dual,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "csi2q",
    version,
    about = "CSI fingerprinting pipeline: synthesize, transform, train, evaluate, ablate"
)]
struct Cli {
    /// JSON run configuration; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for generation, splits, and training.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for datasets, models, and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a packet-aligned synthetic IQ/CSI dataset pair.
    Synth {
        /// Number of simulated transmitters.
        #[arg(long)]
        devices: Option<usize>,
        /// Packets per transmitter.
        #[arg(long)]
        samples: Option<usize>,
        /// Multipath tap count.
        #[arg(long)]
        taps: Option<usize>,
        /// Per-tap power decay in dB.
        #[arg(long)]
        tap_decay_db: Option<f64>,
        /// Lower bound of the per-packet SNR draw (dB).
        #[arg(long)]
        snr_min: Option<f64>,
        /// Upper bound of the per-packet SNR draw (dB).
        #[arg(long)]
        snr_max: Option<f64>,
        /// Disable channel noise entirely.
        #[arg(long)]
        no_noise: bool,
        /// Channel estimator producing the CSI side.
        #[arg(long, value_enum)]
        estimator: Option<EstimatorArg>,
        /// Assumed SNR for the MMSE estimator (dB).
        #[arg(long)]
        mmse_snr_db: Option<f64>,
    },
    /// Transform a CSI dataset into 320-point feature vectors.
    Transform {
        /// Input CSI dataset.
        #[arg(long)]
        input: PathBuf,
        /// Output path (defaults to <out>/features.c2qd).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Skip cyclic shift division (keep the channel in the output).
        #[arg(long)]
        skip_cim: bool,
    },
    /// Train a fingerprinting model.
    Train {
        /// Main-task dataset (feature or raw CSI kind).
        #[arg(long)]
        csi: PathBuf,
        /// Auxiliary IQ dataset (required in dual mode).
        #[arg(long)]
        iq: Option<PathBuf>,
        /// single = classifier only, dual = with IQ discriminator.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        arch: Option<ArchArg>,
        /// Auxiliary loss weight.
        #[arg(long)]
        lambda: Option<f64>,
        /// Initial learning rate.
        #[arg(long)]
        lr0: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        /// Per-device fraction of samples used for training.
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Evaluate a trained model on a labeled dataset.
    Eval {
        /// Model base path (expects <base>.json and <base>.params).
        #[arg(long)]
        model: PathBuf,
        /// Labeled dataset to score.
        #[arg(long)]
        data: PathBuf,
    },
    /// Run the four-arm ablation with shared seeds and identical splits.
    Ablate {
        /// Raw IQ dataset.
        #[arg(long)]
        iq: PathBuf,
        /// Raw CSI dataset.
        #[arg(long)]
        csi: PathBuf,
        #[arg(long, value_enum)]
        arch: Option<ArchArg>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        lr0: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let ctx = Ctx {
        out_dir: cli
            .out
            .or_else(|| file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        seed: cli.seed.or(file.seed).unwrap_or(0),
        quiet: cli.quiet,
    };

    match cli.command {
        Command::Synth {
            devices,
            samples,
            taps,
            tap_decay_db,
            snr_min,
            snr_max,
            no_noise,
            estimator,
            mmse_snr_db,
        } => {
            let devices = devices.or(file.synth.devices).unwrap_or(10);
            let samples = samples.or(file.synth.samples_per_device).unwrap_or(300);
            let channel = commands::resolve_channel(
                file.synth.channel.clone(),
                taps,
                tap_decay_db,
                snr_min,
                snr_max,
                no_noise,
            )?;
            let estimator = if estimator.is_some() || mmse_snr_db.is_some() {
                commands::resolve_estimator(estimator, mmse_snr_db)?
            } else {
                file.synth
                    .estimator
                    .unwrap_or(csi2q::datasets::Estimator::Ls)
            };
            cmd_synth(&ctx, devices, samples, channel, estimator)
        }
        Command::Transform {
            input,
            output,
            skip_cim,
        } => {
            let skip = skip_cim || file.transform.skip_cim.unwrap_or(false);
            cmd_transform(&ctx, &input, output, skip)
        }
        Command::Train {
            csi,
            iq,
            mode,
            arch,
            lambda,
            lr0,
            epochs,
            batch_size,
            train_fraction,
        } => {
            let resolved = resolve_train(
                &file.train,
                mode.map(Into::into),
                arch.map(Into::into),
                lambda,
                lr0,
                epochs,
                batch_size,
                train_fraction,
                ctx.seed,
            )?;
            cmd_train(&ctx, &csi, iq.as_deref(), &resolved)
        }
        Command::Eval { model, data } => cmd_eval(&ctx, &model, &data),
        Command::Ablate {
            iq,
            csi,
            arch,
            lambda,
            lr0,
            epochs,
            batch_size,
            train_fraction,
        } => {
            let resolved = resolve_train(
                &file.ablate,
                Some(TrainMode::Dual),
                arch.map(Into::into),
                lambda,
                lr0,
                epochs,
                batch_size,
                train_fraction,
                ctx.seed,
            )?;
            cmd_ablate(&ctx, &iq, &csi, &resolved)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
