//! End-to-end experiment arms and the four-way ablation.
//!
//! The four arms differ in how much of the pipeline they keep:
//!
//! | arm        | CSI input                   | training    |
//! |------------|-----------------------------|-------------|
//! | CSI2Q      | cyclic division + synthesis | dual-task   |
//! | TDSG+ALIQ  | synthesis only (no CIM)     | dual-task   |
//! | ALIQ       | raw 52-point CSI            | dual-task   |
//! | CSI        | raw 52-point CSI            | single-task |
//!
//! All arms share the same seeds and the same per-device splits, so their
//! scores are directly comparable.

use serde::{Deserialize, Serialize};

use crate::datasets::{split, LabeledSample, LabeledSampleSet, SampleKind};
use crate::error::{Error, Result};
use crate::estimate::CsiMeasurement;
use crate::learn::{
    evaluate, train_dual, train_single, EpochStats, EvalReport, InputKind, ModelSpec, TrainConfig,
    TrainOutcome, TrainSet,
};
use crate::signal::PreambleTiming;
use crate::transform::{default_cim_epsilon, transform_pipeline};

/// Extractor architecture family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    #[default]
    Tcn,
    Cnn,
}

impl Arch {
    pub fn spec(self, csi_input: InputKind, n_main: usize, n_aux: usize) -> ModelSpec {
        match self {
            Arch::Tcn => ModelSpec::tcn(csi_input, n_main, n_aux),
            Arch::Cnn => ModelSpec::cnn(csi_input, n_main, n_aux),
        }
    }
}

/// One ablation arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationArm {
    Csi2q,
    TdsgAliq,
    Aliq,
    Csi,
}

impl AblationArm {
    /// All arms in reporting order (most complete first).
    pub const ALL: [AblationArm; 4] = [
        AblationArm::Csi2q,
        AblationArm::TdsgAliq,
        AblationArm::Aliq,
        AblationArm::Csi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationArm::Csi2q => "CSI2Q",
            AblationArm::TdsgAliq => "TDSG+ALIQ",
            AblationArm::Aliq => "ALIQ",
            AblationArm::Csi => "CSI",
        }
    }

    fn uses_aux(self) -> bool {
        !matches!(self, AblationArm::Csi)
    }

    fn uses_tdsg(self) -> bool {
        matches!(self, AblationArm::Csi2q | AblationArm::TdsgAliq)
    }

    fn uses_cim(self) -> bool {
        matches!(self, AblationArm::Csi2q)
    }
}

/// Configuration shared by every arm of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub arch: Arch,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            train_fraction: 0.8,
            split_seed: 0,
            arch: Arch::Tcn,
        }
    }
}

/// Result of training and evaluating one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmResult {
    pub name: String,
    pub eval: EvalReport,
    pub history: Vec<EpochStats>,
}

/// Four-arm comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub arms: Vec<ArmResult>,
    /// Packets dropped because their CSI could not be divided safely.
    pub degenerate_packets: usize,
}

impl AblationReport {
    pub fn arm(&self, arm: AblationArm) -> Option<&ArmResult> {
        self.arms.iter().find(|a| a.name == arm.name())
    }
}

/// Apply the CSI transformation to a whole set, producing a feature set.
/// Degenerate measurements (entries at or below the relative epsilon guard)
/// are skipped and counted.
pub fn transform_set(
    csi_set: &LabeledSampleSet,
    skip_cim: bool,
) -> Result<(LabeledSampleSet, usize)> {
    if csi_set.kind != SampleKind::Csi {
        return Err(Error::invalid(format!(
            "transform expects a CSI dataset, got {:?}",
            csi_set.kind
        )));
    }
    let timing = PreambleTiming::default();
    let mut features = Vec::with_capacity(csi_set.len());
    let mut degenerate = 0usize;
    for s in csi_set.samples() {
        let m = CsiMeasurement::new(s.values.clone(), s.device_id)?;
        let epsilon = default_cim_epsilon(&m);
        match transform_pipeline(&m, &timing, epsilon, skip_cim) {
            Ok(fv) => features.push(LabeledSample {
                device_id: s.device_id,
                values: fv.u,
            }),
            Err(Error::DegenerateInput(_)) => degenerate += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((
        LabeledSampleSet::new(SampleKind::Feature, features, csi_set.device_count)?,
        degenerate,
    ))
}

/// Drop packets whose CSI is degenerate for cyclic division. When the IQ
/// set is packet-aligned with the CSI set (same length and label sequence),
/// the same indices are dropped from both so later splits stay aligned.
pub fn filter_degenerate_packets(
    iq_set: &LabeledSampleSet,
    csi_set: &LabeledSampleSet,
) -> Result<(LabeledSampleSet, LabeledSampleSet, usize)> {
    let keep: Vec<bool> = csi_set
        .samples()
        .iter()
        .map(|s| {
            let max = s.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let eps = 1e-9 * max;
            s.values.iter().all(|c| c.norm() > eps)
        })
        .collect();
    let dropped = keep.iter().filter(|&&k| !k).count();
    if dropped == 0 {
        return Ok((iq_set.clone(), csi_set.clone(), 0));
    }

    let aligned = iq_set.len() == csi_set.len()
        && iq_set
            .samples()
            .iter()
            .zip(csi_set.samples())
            .all(|(a, b)| a.device_id == b.device_id);
    let filter = |set: &LabeledSampleSet| -> Result<LabeledSampleSet> {
        let samples: Vec<LabeledSample> = set
            .samples()
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s.clone())
            .collect();
        LabeledSampleSet::new(set.kind, samples, set.device_count)
    };
    let csi = filter(csi_set)?;
    let iq = if aligned { filter(iq_set)? } else { iq_set.clone() };
    Ok((iq, csi, dropped))
}

/// Train and evaluate one arm on pre-filtered paired sets.
pub fn run_arm(
    arm: AblationArm,
    iq_set: &LabeledSampleSet,
    csi_set: &LabeledSampleSet,
    cfg: &ExperimentConfig,
) -> Result<ArmResult> {
    let (arm_set, csi_input) = if arm.uses_tdsg() {
        let (features, degenerate) = transform_set(csi_set, !arm.uses_cim())?;
        if degenerate > 0 {
            return Err(Error::DegenerateInput(format!(
                "{degenerate} degenerate packets survived filtering"
            )));
        }
        (features, InputKind::Iq320)
    } else {
        (csi_set.clone(), InputKind::RawCsi52)
    };

    let (train_samples, test_samples) = split(&arm_set, cfg.train_fraction, cfg.split_seed)?;
    let train_set = TrainSet::from_labeled(&train_samples)?;
    let test_set = TrainSet::from_labeled(&test_samples)?;

    let spec = cfg.arch.spec(
        csi_input,
        csi_set.device_count as usize,
        iq_set.device_count as usize,
    );

    let outcome: TrainOutcome = if arm.uses_aux() {
        let (iq_train_samples, _) = split(iq_set, cfg.train_fraction, cfg.split_seed)?;
        let iq_train = TrainSet::from_labeled(&iq_train_samples)?;
        train_dual(&train_set, &iq_train, &spec, &cfg.train)?
    } else {
        train_single(&train_set, &spec, &cfg.train)?
    };

    let eval = evaluate(&outcome.params, &spec, &test_set)?;
    Ok(ArmResult {
        name: arm.name().to_string(),
        eval,
        history: outcome.history,
    })
}

/// Run all four arms with shared seeds and identical splits.
pub fn run_ablation(
    iq_set: &LabeledSampleSet,
    csi_set: &LabeledSampleSet,
    cfg: &ExperimentConfig,
) -> Result<AblationReport> {
    if csi_set.kind != SampleKind::Csi {
        return Err(Error::invalid("ablation needs a raw CSI dataset"));
    }
    if iq_set.kind != SampleKind::Iq {
        return Err(Error::invalid("ablation needs a raw IQ dataset"));
    }
    let (iq, csi, degenerate_packets) = filter_degenerate_packets(iq_set, csi_set)?;
    let mut arms = Vec::with_capacity(AblationArm::ALL.len());
    for arm in AblationArm::ALL {
        arms.push(run_arm(arm, &iq, &csi, cfg)?);
    }
    Ok(AblationReport {
        arms,
        degenerate_packets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_synthetic_pair, ChannelConfig, Estimator};
    use crate::signal::reference_preamble;
    use num_complex::Complex64;

    fn tiny_pair() -> (LabeledSampleSet, LabeledSampleSet) {
        generate_synthetic_pair(2, 8, &ChannelConfig::default(), Estimator::Ls, 3).unwrap()
    }

    #[test]
    fn transform_set_produces_feature_kind() {
        let (_, csi) = tiny_pair();
        let (features, degenerate) = transform_set(&csi, false).unwrap();
        assert_eq!(features.kind, SampleKind::Feature);
        assert_eq!(features.len(), csi.len());
        assert_eq!(degenerate, 0);
    }

    #[test]
    fn transform_set_flat_ones_is_reference() {
        let timing = PreambleTiming::default();
        let samples: Vec<LabeledSample> = (1..=2u32)
            .flat_map(|d| {
                (0..2).map(move |_| LabeledSample {
                    device_id: d,
                    values: vec![Complex64::new(1.0, 0.0); 52],
                })
            })
            .collect();
        let set = LabeledSampleSet::new(SampleKind::Csi, samples, 2).unwrap();
        let (features, _) = transform_set(&set, false).unwrap();
        let reference = reference_preamble(&timing);
        for s in features.samples() {
            for (a, b) in s.values.iter().zip(reference.iter()) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn transform_set_counts_degenerates() {
        let mut samples: Vec<LabeledSample> = (1..=2u32)
            .flat_map(|d| {
                (0..2).map(move |_| LabeledSample {
                    device_id: d,
                    values: vec![Complex64::new(1.0, 0.0); 52],
                })
            })
            .collect();
        samples[1].values[10] = Complex64::new(0.0, 0.0);
        let set = LabeledSampleSet::new(SampleKind::Csi, samples, 2).unwrap();
        let (features, degenerate) = transform_set(&set, false).unwrap();
        assert_eq!(degenerate, 1);
        assert_eq!(features.len(), 3);
    }

    #[test]
    fn run_arm_produces_report() {
        let (iq, csi) = tiny_pair();
        let cfg = ExperimentConfig {
            train: TrainConfig {
                epochs: 2,
                batch_size: 4,
                rng_seed: 1,
                ..TrainConfig::default()
            },
            train_fraction: 0.75,
            split_seed: 2,
            arch: Arch::Tcn,
        };
        let result = run_arm(AblationArm::Csi, &iq, &csi, &cfg).unwrap();
        assert_eq!(result.name, "CSI");
        assert_eq!(result.eval.n_samples, 4);
        assert_eq!(result.history.len(), 2);
    }

    #[test]
    fn ablation_runs_all_four_arms_deterministically() {
        let (iq, csi) = tiny_pair();
        let cfg = ExperimentConfig {
            train: TrainConfig {
                epochs: 1,
                batch_size: 4,
                rng_seed: 9,
                ..TrainConfig::default()
            },
            train_fraction: 0.75,
            split_seed: 4,
            arch: Arch::Cnn,
        };
        let a = run_ablation(&iq, &csi, &cfg).unwrap();
        let b = run_ablation(&iq, &csi, &cfg).unwrap();
        assert_eq!(a, b);
        let names: Vec<&str> = a.arms.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, vec!["CSI2Q", "TDSG+ALIQ", "ALIQ", "CSI"]);
        assert!(a.arm(AblationArm::Csi2q).is_some());
    }
}
