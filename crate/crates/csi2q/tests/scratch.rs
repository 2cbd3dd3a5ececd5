//! Temporary timing scratchpad (deleted before release).

use csi2q::datasets::{generate_synthetic_pair, ChannelConfig, Estimator};
use csi2q::learn::TrainConfig;
use csi2q::pipeline::{run_ablation, Arch, ExperimentConfig};
use std::time::Instant;

#[test]
#[ignore]
fn ablation_sweep() {
    let (iq, csi) =
        generate_synthetic_pair(10, 300, &ChannelConfig::default(), Estimator::Ls, 7).unwrap();

    for (epochs, lambda, seed) in [(12usize, 1.0, 7u64), (16, 1.0, 7), (20, 1.0, 7)] {
        let cfg = ExperimentConfig {
            train: TrainConfig {
                epochs,
                batch_size: 64,
                rng_seed: seed,
                lambda,
                ..TrainConfig::default()
            },
            train_fraction: 0.8,
            split_seed: seed,
            arch: Arch::Tcn,
        };
        let t = Instant::now();
        let report = run_ablation(&iq, &csi, &cfg).unwrap();
        println!(
            "=== epochs {epochs} lambda {lambda} seed {seed} ({:?})",
            t.elapsed()
        );
        for arm in &report.arms {
            println!(
                "{:>10}: acc {:.4}  f1 {:.4}  aux_loss {:?}",
                arm.name,
                arm.eval.accuracy,
                arm.eval.macro_f1,
                arm.history.last().unwrap().aux_loss
            );
        }
    }
}
