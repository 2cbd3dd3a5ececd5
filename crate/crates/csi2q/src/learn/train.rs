//! Dual-task training: a shared extractor serving a CSI classifier (main
//! task) and an IQ discriminator (auxiliary task).
//!
//! Each optimization step draws one batch from each domain, forms the
//! objective `L_main + lambda * L_aux`, and backpropagates both terms
//! through the shared extractor where their gradients sum. Optimization is
//! Adam under a cosine-annealed learning rate. Training is single-threaded
//! and every random choice derives from the config seed, so identical
//! configs produce bit-identical parameter trajectories and loss histories.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layer::LayerParams;
use super::loss::softmax_cross_entropy;
use super::model::{run_backward, run_forward, ModelSpec, ParameterStore};
use super::tensor::Tensor;
use crate::datasets::LabeledSampleSet;
use crate::error::{Error, Result};

/// Learning-rate schedule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    #[default]
    CosineAnnealing,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Auxiliary loss weight.
    pub lambda: f64,
    /// Initial learning rate.
    pub lr0: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    pub schedule: LrSchedule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            lr0: 0.001,
            epochs: 100,
            batch_size: 64,
            rng_seed: 0,
            schedule: LrSchedule::CosineAnnealing,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::invalid("lambda must be positive"));
        }
        if !(self.lr0 > 0.0) {
            return Err(Error::invalid("lr0 must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Cosine-annealed learning rate: `lr0 * (1 + cos(pi * step / total)) / 2`.
pub fn cosine_lr(step: usize, total_steps: usize, lr0: f64) -> Result<f64> {
    if total_steps == 0 {
        return Err(Error::invalid("total_steps must be at least 1"));
    }
    if step > total_steps {
        return Err(Error::invalid(format!(
            "step {step} out of range 0..={total_steps}"
        )));
    }
    let phase = std::f64::consts::PI * step as f64 / total_steps as f64;
    Ok(lr0 * (1.0 + phase.cos()) / 2.0)
}

/// Labeled tensors ready for training: inputs `(N, C, L)` with zero-based
/// labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSet {
    pub inputs: Tensor,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl TrainSet {
    /// Convert complex samples to real (2, L) tensors: channel 0 carries the
    /// real part, channel 1 the imaginary part. Device ids `1..=n` become
    /// classes `0..n`.
    pub fn from_labeled(set: &LabeledSampleSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::invalid("cannot train on an empty sample set"));
        }
        let l = set.kind.sample_len();
        let n = set.len();
        let mut data = Vec::with_capacity(n * 2 * l);
        let mut labels = Vec::with_capacity(n);
        for s in set.samples() {
            data.extend(s.values.iter().map(|c| c.re));
            data.extend(s.values.iter().map(|c| c.im));
            labels.push((s.device_id - 1) as usize);
        }
        Ok(Self {
            inputs: Tensor::from_vec(&[n, 2, l], data)?,
            labels,
            n_classes: set.device_count as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Per-sample input shape.
    pub fn sample_shape(&self) -> &[usize] {
        &self.inputs.shape()[1..]
    }

    fn gather(&self, indices: &[usize]) -> (Tensor, Vec<usize>) {
        let stride = self.inputs.stride();
        let mut data = Vec::with_capacity(indices.len() * stride);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.inputs.sample(i));
            labels.push(self.labels[i]);
        }
        let mut shape = vec![indices.len()];
        shape.extend_from_slice(self.sample_shape());
        (
            Tensor::from_vec(&shape, data).expect("gather shape is consistent"),
            labels,
        )
    }
}

/// Loss history entry for one epoch (mean over that epoch's steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub main_loss: f64,
    pub aux_loss: Option<f64>,
}

/// Result of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ParameterStore,
    pub history: Vec<EpochStats>,
}

/// Gradients of the main task (CSI classifier) for one batch: loss plus a
/// full-size gradient store (zero outside stem/extractor/classifier).
pub fn main_task_gradients(
    spec: &ModelSpec,
    params: &ParameterStore,
    batch: Tensor,
    labels: &[usize],
) -> Result<(f64, ParameterStore)> {
    let ranges = spec.section_ranges();
    let (stem_acts, x) = run_forward(&spec.csi_stem, &params.blocks[ranges.csi_stem.clone()], batch)?;
    let (ext_acts, feat) =
        run_forward(&spec.extractor, &params.blocks[ranges.extractor.clone()], x)?;
    let (head_acts, logits) = run_forward(
        &spec.classifier,
        &params.blocks[ranges.classifier.clone()],
        feat,
    )?;
    let (loss, dlogits) = softmax_cross_entropy(&logits, labels)?;

    let mut grads = ParameterStore::zeros_like(spec);
    let (g_feat, g_head) = run_backward(
        &spec.classifier,
        &params.blocks[ranges.classifier.clone()],
        &head_acts,
        dlogits,
    )?;
    grads.blocks[ranges.classifier].clone_from_slice(&g_head);
    let (g_x, g_ext) = run_backward(
        &spec.extractor,
        &params.blocks[ranges.extractor.clone()],
        &ext_acts,
        g_feat,
    )?;
    grads.blocks[ranges.extractor].clone_from_slice(&g_ext);
    let (_, g_stem) = run_backward(
        &spec.csi_stem,
        &params.blocks[ranges.csi_stem.clone()],
        &stem_acts,
        g_x,
    )?;
    grads.blocks[ranges.csi_stem].clone_from_slice(&g_stem);
    Ok((loss, grads))
}

/// Gradients of the auxiliary task (IQ discriminator) scaled by `lambda`.
/// The returned loss is the raw (unscaled) cross-entropy.
pub fn aux_task_gradients(
    spec: &ModelSpec,
    params: &ParameterStore,
    batch: Tensor,
    labels: &[usize],
    lambda: f64,
) -> Result<(f64, ParameterStore)> {
    let ranges = spec.section_ranges();
    let (stem_acts, x) = run_forward(&spec.iq_stem, &params.blocks[ranges.iq_stem.clone()], batch)?;
    let (ext_acts, feat) =
        run_forward(&spec.extractor, &params.blocks[ranges.extractor.clone()], x)?;
    let (head_acts, logits) = run_forward(
        &spec.discriminator,
        &params.blocks[ranges.discriminator.clone()],
        feat,
    )?;
    let (loss, mut dlogits) = softmax_cross_entropy(&logits, labels)?;
    for g in dlogits.data_mut() {
        *g *= lambda;
    }

    let mut grads = ParameterStore::zeros_like(spec);
    let (g_feat, g_head) = run_backward(
        &spec.discriminator,
        &params.blocks[ranges.discriminator.clone()],
        &head_acts,
        dlogits,
    )?;
    grads.blocks[ranges.discriminator].clone_from_slice(&g_head);
    let (g_x, g_ext) = run_backward(
        &spec.extractor,
        &params.blocks[ranges.extractor.clone()],
        &ext_acts,
        g_feat,
    )?;
    grads.blocks[ranges.extractor].clone_from_slice(&g_ext);
    let (_, g_stem) = run_backward(
        &spec.iq_stem,
        &params.blocks[ranges.iq_stem.clone()],
        &stem_acts,
        g_x,
    )?;
    grads.blocks[ranges.iq_stem].clone_from_slice(&g_stem);
    Ok((loss, grads))
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

struct Adam {
    m: Vec<LayerParams>,
    v: Vec<LayerParams>,
    t: i32,
}

impl Adam {
    fn new(spec: &ModelSpec) -> Self {
        let zeros = ParameterStore::zeros_like(spec);
        Self {
            m: zeros.blocks.clone(),
            v: zeros.blocks,
            t: 0,
        }
    }

    /// One update over the block indices in `active`.
    fn step(
        &mut self,
        params: &mut ParameterStore,
        grads: &ParameterStore,
        lr: f64,
        active: &[usize],
    ) {
        self.t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.t);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.t);
        for &b in active {
            let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
                for i in 0..p.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    p[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            };
            update(
                &mut params.blocks[b].weights,
                &grads.blocks[b].weights,
                &mut self.m[b].weights,
                &mut self.v[b].weights,
            );
            update(
                &mut params.blocks[b].bias,
                &grads.blocks[b].bias,
                &mut self.m[b].bias,
                &mut self.v[b].bias,
            );
        }
    }
}

fn add_grads(into: &mut ParameterStore, from: &ParameterStore) {
    for (dst, src) in into.blocks.iter_mut().zip(&from.blocks) {
        for (d, s) in dst.weights.iter_mut().zip(&src.weights) {
            *d += s;
        }
        for (d, s) in dst.bias.iter_mut().zip(&src.bias) {
            *d += s;
        }
    }
}

// Seed-stream tags so initialization and the two batch schedules draw from
// independent deterministic streams. The CSI stream must not depend on
// whether an auxiliary task is present.
const SEED_INIT: u64 = 0x696e6974;
const SEED_CSI_ORDER: u64 = 0x637369;
const SEED_IQ_ORDER: u64 = 0x6971;

fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Cycle through a set in shuffled order, reshuffling on exhaustion.
struct BatchSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl BatchSampler {
    fn new(n: usize, seed: u64) -> Self {
        let mut s = Self {
            order: (0..n).collect(),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.order.shuffle(&mut s.rng);
        s
    }

    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(size);
        while out.len() < size {
            if self.cursor == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.cursor = 0;
            }
            out.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        out
    }
}

fn check_inputs(spec: &ModelSpec, csi: &TrainSet, aux: Option<&TrainSet>) -> Result<()> {
    let shapes = spec.validate()?;
    let expected = spec.csi_input.shape();
    if csi.sample_shape() != expected {
        return Err(Error::invalid(format!(
            "CSI samples have shape {:?}, model expects {:?}",
            csi.sample_shape(),
            expected
        )));
    }
    if let Some(&bad) = csi.labels.iter().find(|&&l| l >= shapes.n_main) {
        return Err(Error::invalid(format!(
            "CSI label {bad} out of range for {} classes",
            shapes.n_main
        )));
    }
    if let Some(iq) = aux {
        if iq.is_empty() {
            return Err(Error::invalid("auxiliary IQ set is empty"));
        }
        if iq.sample_shape() != [2, 320] {
            return Err(Error::invalid(format!(
                "IQ samples have shape {:?}, expected [2, 320]",
                iq.sample_shape()
            )));
        }
        if let Some(&bad) = iq.labels.iter().find(|&&l| l >= shapes.n_aux) {
            return Err(Error::invalid(format!(
                "IQ label {bad} out of range for {} classes",
                shapes.n_aux
            )));
        }
    }
    Ok(())
}

fn train_impl(
    csi: &TrainSet,
    aux: Option<&TrainSet>,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_inputs(spec, csi, aux)?;

    let mut params = ParameterStore::init(spec, derive_seed(cfg.rng_seed, SEED_INIT));
    let mut adam = Adam::new(spec);

    let ranges = spec.section_ranges();
    let mut active: Vec<usize> = ranges
        .csi_stem
        .clone()
        .chain(ranges.iq_stem.clone())
        .chain(ranges.extractor.clone())
        .chain(ranges.classifier.clone())
        .collect();
    if aux.is_some() {
        active.extend(ranges.discriminator.clone());
    }

    let mut csi_sampler = BatchSampler::new(csi.len(), derive_seed(cfg.rng_seed, SEED_CSI_ORDER));
    let mut iq_sampler = aux
        .map(|iq| BatchSampler::new(iq.len(), derive_seed(cfg.rng_seed, SEED_IQ_ORDER)));

    let steps_per_epoch = csi.len().div_ceil(cfg.batch_size);
    let total_steps = cfg.epochs * steps_per_epoch;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut global_step = 0usize;

    for epoch in 0..cfg.epochs {
        let mut epoch_main = 0.0;
        let mut epoch_aux = 0.0;
        for _ in 0..steps_per_epoch {
            let lr = cosine_lr(global_step, total_steps, cfg.lr0)?;

            let idx = csi_sampler.next_batch(cfg.batch_size.min(csi.len()));
            let (batch, labels) = csi.gather(&idx);
            let (main_loss, mut grads) = main_task_gradients(spec, &params, batch, &labels)?;
            epoch_main += main_loss;

            if let (Some(iq), Some(sampler)) = (aux, iq_sampler.as_mut()) {
                let idx = sampler.next_batch(cfg.batch_size.min(iq.len()));
                let (batch, labels) = iq.gather(&idx);
                let (aux_loss, aux_grads) =
                    aux_task_gradients(spec, &params, batch, &labels, cfg.lambda)?;
                epoch_aux += aux_loss;
                add_grads(&mut grads, &aux_grads);
            }

            adam.step(&mut params, &grads, lr, &active);
            global_step += 1;
        }
        history.push(EpochStats {
            epoch,
            main_loss: epoch_main / steps_per_epoch as f64,
            aux_loss: aux.map(|_| epoch_aux / steps_per_epoch as f64),
        });
    }

    Ok(TrainOutcome { params, history })
}

/// Joint training of extractor, classifier, and discriminator on paired
/// CSI-domain and IQ-domain sets.
pub fn train_dual(
    csi_train: &TrainSet,
    iq_train: &TrainSet,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_impl(csi_train, Some(iq_train), spec, cfg)
}

/// Main-task-only training; the discriminator section is initialized but
/// never updated.
pub fn train_single(
    csi_train: &TrainSet,
    spec: &ModelSpec,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    train_impl(csi_train, None, spec, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::model::InputKind;
    use rand::Rng;

    /// Small dense-only spec over the standard (2, 320) input.
    fn toy_spec(n_main: usize, n_aux: usize) -> ModelSpec {
        ModelSpec {
            csi_input: InputKind::Iq320,
            csi_stem: vec![],
            iq_stem: vec![],
            extractor: vec![
                LayerKind::Flatten,
                LayerKind::Dense {
                    in_dim: 640,
                    out_dim: 16,
                },
                LayerKind::Relu,
            ],
            classifier: vec![LayerKind::Dense {
                in_dim: 16,
                out_dim: n_main,
            }],
            discriminator: vec![LayerKind::Dense {
                in_dim: 16,
                out_dim: n_aux,
            }],
        }
    }
    use crate::learn::layer::LayerKind;

    /// Linearly separable two-class set: class means at +/-1 with small
    /// deterministic jitter.
    fn separable_set(per_class: usize, seed: u64) -> TrainSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = per_class * 2;
        let mut data = Vec::with_capacity(n * 640);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 2;
            let mean = if class == 0 { 1.0 } else { -1.0 };
            for _ in 0..640 {
                data.push(mean + 0.1 * rng.random_range(-1.0..1.0));
            }
            labels.push(class);
        }
        TrainSet {
            inputs: Tensor::from_vec(&[n, 2, 320], data).unwrap(),
            labels,
            n_classes: 2,
        }
    }

    fn toy_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 8,
            rng_seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn cosine_schedule_endpoints_and_midpoint() {
        assert_eq!(cosine_lr(0, 100, 0.001).unwrap(), 0.001);
        assert_eq!(cosine_lr(100, 100, 0.001).unwrap(), 0.0);
        assert_eq!(cosine_lr(50, 100, 0.001).unwrap(), 0.0005);
        assert!(cosine_lr(101, 100, 0.001).is_err());
        assert!(cosine_lr(0, 0, 0.001).is_err());
    }

    #[test]
    fn separable_toy_converges_single() {
        let set = separable_set(20, 1);
        let out = train_single(&set, &toy_spec(2, 2), &toy_cfg(100)).unwrap();
        let final_loss = out.history.last().unwrap().main_loss;
        assert!(final_loss < 0.05, "final loss {final_loss}");
        assert!(final_loss < out.history[0].main_loss);
    }

    #[test]
    fn separable_toy_converges_dual() {
        let csi = separable_set(20, 1);
        let iq = separable_set(20, 2);
        let out = train_dual(&csi, &iq, &toy_spec(2, 2), &toy_cfg(100)).unwrap();
        let last = out.history.last().unwrap();
        assert!(last.main_loss < 0.05, "main loss {}", last.main_loss);
        assert!(last.aux_loss.unwrap() < 0.2, "aux loss {:?}", last.aux_loss);
    }

    #[test]
    fn first_epoch_loss_near_ln_classes_on_random_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 64;
        let classes = 4;
        let data: Vec<f64> = (0..n * 640).map(|_| rng.random_range(-1.0..1.0)).collect();
        let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        let set = TrainSet {
            inputs: Tensor::from_vec(&[n, 2, 320], data).unwrap(),
            labels,
            n_classes: classes,
        };
        let out = train_single(&set, &toy_spec(classes, 2), &toy_cfg(1)).unwrap();
        let expected = (classes as f64).ln();
        let got = out.history[0].main_loss;
        assert!(
            (got - expected).abs() < expected * 0.1,
            "epoch-0 loss {got} vs ln({classes}) = {expected}"
        );
    }

    #[test]
    fn identical_seeds_give_identical_histories() {
        let csi = separable_set(10, 3);
        let iq = separable_set(10, 4);
        let spec = toy_spec(2, 2);
        let cfg = toy_cfg(20);
        let a = train_dual(&csi, &iq, &spec, &cfg).unwrap();
        let b = train_dual(&csi, &iq, &spec, &cfg).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn vanishing_lambda_matches_single_task() {
        let csi = separable_set(10, 3);
        let iq = separable_set(10, 4);
        let spec = toy_spec(2, 2);
        let mut cfg = toy_cfg(100);
        cfg.lambda = 1e-12;
        let dual = train_dual(&csi, &iq, &spec, &cfg).unwrap();
        let single = train_single(&csi, &spec, &cfg).unwrap();

        let ranges = spec.section_ranges();
        for b in ranges
            .csi_stem
            .clone()
            .chain(ranges.extractor.clone())
            .chain(ranges.classifier.clone())
        {
            for (x, y) in dual.params.blocks[b]
                .weights
                .iter()
                .chain(&dual.params.blocks[b].bias)
                .zip(
                    single.params.blocks[b]
                        .weights
                        .iter()
                        .chain(&single.params.blocks[b].bias),
                )
            {
                assert!(
                    (x - y).abs() < 1e-6,
                    "block {b}: dual {x} vs single {y}"
                );
            }
        }
    }

    #[test]
    fn extractor_gradients_are_additive_across_tasks() {
        let csi = separable_set(8, 6);
        let iq = separable_set(8, 7);
        let spec = toy_spec(2, 2);
        let params = ParameterStore::init(&spec, 42);
        let lambda = 0.7;

        // What one dual step applies to the extractor.
        let (csi_batch, csi_labels) = csi.gather(&[0, 1, 2, 3]);
        let (iq_batch, iq_labels) = iq.gather(&[0, 1, 2, 3]);
        let (_, mut combined) =
            main_task_gradients(&spec, &params, csi_batch, &csi_labels).unwrap();
        let (_, g_aux) =
            aux_task_gradients(&spec, &params, iq_batch.clone(), &iq_labels, lambda).unwrap();
        add_grads(&mut combined, &g_aux);

        // Main-only and unit-weight auxiliary gradients computed separately.
        let (csi_batch2, csi_labels2) = csi.gather(&[0, 1, 2, 3]);
        let (_, g_main) = main_task_gradients(&spec, &params, csi_batch2, &csi_labels2).unwrap();
        let (_, g_aux_unit) =
            aux_task_gradients(&spec, &params, iq_batch, &iq_labels, 1.0).unwrap();

        for b in spec.section_ranges().extractor {
            let all = |s: &LayerParams| s.weights.iter().chain(&s.bias).copied().collect::<Vec<_>>();
            for ((c, m), a) in all(&combined.blocks[b])
                .iter()
                .zip(all(&g_main.blocks[b]))
                .zip(all(&g_aux_unit.blocks[b]))
            {
                assert!(
                    (c - (m + lambda * a)).abs() < 1e-10,
                    "extractor grad mismatch in block {b}: {c} vs {}",
                    m + lambda * a
                );
            }
        }
    }

    #[test]
    fn out_of_range_labels_rejected() {
        let mut set = separable_set(4, 1);
        set.labels[0] = 9;
        assert!(matches!(
            train_single(&set, &toy_spec(2, 2), &toy_cfg(1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn bad_config_rejected() {
        let set = separable_set(4, 1);
        let spec = toy_spec(2, 2);
        for cfg in [
            TrainConfig {
                lambda: 0.0,
                ..toy_cfg(1)
            },
            TrainConfig {
                lr0: 0.0,
                ..toy_cfg(1)
            },
            TrainConfig {
                epochs: 0,
                ..toy_cfg(1)
            },
            TrainConfig {
                batch_size: 0,
                ..toy_cfg(1)
            },
        ] {
            assert!(matches!(
                train_single(&set, &spec, &cfg),
                Err(Error::InvalidArgument(_))
            ));
        }
    }
}
