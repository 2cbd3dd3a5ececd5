//! Model architecture description, parameter storage, and forward passes.
//!
//! A model is five layer sections: two per-domain input stems (identity for
//! 320-point inputs, a dense adapter lifting raw 52-point CSI to the common
//! shape), a shared extractor, and two heads — the CSI classifier and the IQ
//! discriminator. Parameters live outside the spec as a flat list of blocks
//! in declaration order, which is also the serialization order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use super::layer::{self, LayerKind, LayerParams};
use super::loss::softmax_row;
use super::tensor::Tensor;
use crate::error::{Error, Result};

const PARAMS_MAGIC: &[u8; 4] = b"C2QP";
const PARAMS_VERSION: u16 = 1;

/// Input domain of a model branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// 320 complex points as a (2, 320) real tensor (I and Q channels).
    Iq320,
    /// 52 complex points as a (2, 52) real tensor.
    RawCsi52,
}

impl InputKind {
    pub fn shape(self) -> [usize; 2] {
        match self {
            InputKind::Iq320 => [2, 320],
            InputKind::RawCsi52 => [2, 52],
        }
    }
}

/// Architecture description: layer lists per section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub csi_input: InputKind,
    pub csi_stem: Vec<LayerKind>,
    pub iq_stem: Vec<LayerKind>,
    pub extractor: Vec<LayerKind>,
    pub classifier: Vec<LayerKind>,
    pub discriminator: Vec<LayerKind>,
}

/// Shapes inferred by validating a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelShapes {
    /// Common shape entering the shared extractor.
    pub extractor_input: Vec<usize>,
    /// Shared feature shape consumed by both heads.
    pub feature: Vec<usize>,
    /// Classifier output width (number of registered devices).
    pub n_main: usize,
    /// Discriminator output width (number of auxiliary devices).
    pub n_aux: usize,
}

fn stem_for(input: InputKind) -> Vec<LayerKind> {
    match input {
        InputKind::Iq320 => vec![],
        InputKind::RawCsi52 => vec![
            LayerKind::Flatten,
            LayerKind::Dense {
                in_dim: 104,
                out_dim: 640,
            },
            LayerKind::Reshape {
                channels: 2,
                length: 320,
            },
        ],
    }
}

fn head(feature_dim: usize, hidden: usize, classes: usize) -> Vec<LayerKind> {
    vec![
        LayerKind::Dense {
            in_dim: feature_dim,
            out_dim: hidden,
        },
        LayerKind::Relu,
        LayerKind::Dense {
            in_dim: hidden,
            out_dim: classes,
        },
    ]
}

fn conv_stack(dilations: [usize; 4]) -> Vec<LayerKind> {
    let channels = [(2, 32), (32, 32), (32, 64), (64, 64)];
    let mut layers = Vec::new();
    for (i, ((c_in, c_out), dilation)) in channels.iter().zip(dilations).enumerate() {
        layers.push(LayerKind::Conv1d {
            in_channels: *c_in,
            out_channels: *c_out,
            kernel: 5,
            stride: 1,
            dilation,
        });
        layers.push(LayerKind::Relu);
        if i == 1 || i == 3 {
            layers.push(LayerKind::MaxPool { width: 2 });
        }
    }
    layers.push(LayerKind::GlobalAvgPool);
    layers
}

impl ModelSpec {
    /// Four dilated convolution layers (dilations 1/2/4/8), two dense layers
    /// per head.
    pub fn tcn(csi_input: InputKind, num_devices: usize, num_aux_devices: usize) -> Self {
        Self {
            csi_input,
            csi_stem: stem_for(csi_input),
            iq_stem: vec![],
            extractor: conv_stack([1, 2, 4, 8]),
            classifier: head(64, 64, num_devices),
            discriminator: head(64, 64, num_aux_devices),
        }
    }

    /// Plain four-layer convolutional variant (no dilation).
    pub fn cnn(csi_input: InputKind, num_devices: usize, num_aux_devices: usize) -> Self {
        Self {
            csi_input,
            csi_stem: stem_for(csi_input),
            iq_stem: vec![],
            extractor: conv_stack([1, 1, 1, 1]),
            classifier: head(64, 64, num_devices),
            discriminator: head(64, 64, num_aux_devices),
        }
    }

    /// Sections in declaration (and serialization) order.
    pub fn sections(&self) -> [&[LayerKind]; 5] {
        [
            &self.csi_stem,
            &self.iq_stem,
            &self.extractor,
            &self.classifier,
            &self.discriminator,
        ]
    }

    /// All layers flattened in declaration order.
    pub fn flat_layers(&self) -> Vec<LayerKind> {
        self.sections().concat()
    }

    /// Block index ranges of each section within the flat layer order.
    pub fn section_ranges(&self) -> SectionRanges {
        let s = self.sections();
        let mut start = 0;
        let mut next = |len: usize| {
            let r = start..start + len;
            start += len;
            r
        };
        SectionRanges {
            csi_stem: next(s[0].len()),
            iq_stem: next(s[1].len()),
            extractor: next(s[2].len()),
            classifier: next(s[3].len()),
            discriminator: next(s[4].len()),
        }
    }

    /// Infer shapes through every section, checking that both stems meet at
    /// a common extractor input and that the heads share the feature shape.
    pub fn validate(&self) -> Result<ModelShapes> {
        let csi_shape = walk(&self.csi_stem, &self.csi_input.shape())?;
        let iq_shape = walk(&self.iq_stem, &InputKind::Iq320.shape())?;
        if csi_shape != iq_shape {
            return Err(Error::invalid(format!(
                "stems disagree on extractor input: csi {csi_shape:?} vs iq {iq_shape:?}"
            )));
        }
        let feature = walk(&self.extractor, &csi_shape)?;
        let main_out = walk(&self.classifier, &feature)?;
        let aux_out = walk(&self.discriminator, &feature)?;
        let n_main = match main_out.as_slice() {
            [n] => *n,
            other => {
                return Err(Error::invalid(format!(
                    "classifier must end in a flat logit vector, got {other:?}"
                )))
            }
        };
        let n_aux = match aux_out.as_slice() {
            [n] => *n,
            other => {
                return Err(Error::invalid(format!(
                    "discriminator must end in a flat logit vector, got {other:?}"
                )))
            }
        };
        Ok(ModelShapes {
            extractor_input: csi_shape,
            feature,
            n_main,
            n_aux,
        })
    }
}

fn walk(layers: &[LayerKind], input: &[usize]) -> Result<Vec<usize>> {
    let mut shape = input.to_vec();
    for kind in layers {
        shape = kind.output_shape(&shape)?;
    }
    Ok(shape)
}

/// Block ranges per section, aligned with [`ModelSpec::flat_layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct SectionRanges {
    pub csi_stem: std::ops::Range<usize>,
    pub iq_stem: std::ops::Range<usize>,
    pub extractor: std::ops::Range<usize>,
    pub classifier: std::ops::Range<usize>,
    pub discriminator: std::ops::Range<usize>,
}

/// All learnable parameters: one block per layer, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    pub blocks: Vec<LayerParams>,
}

impl ParameterStore {
    /// Seeded uniform fan-in initialization: weights from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`, biases zero, drawn in
    /// declaration order.
    pub fn init(spec: &ModelSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let blocks = spec
            .flat_layers()
            .iter()
            .map(|kind| {
                let (w, b) = kind.param_counts();
                let bound = if kind.fan_in() > 0 {
                    1.0 / (kind.fan_in() as f64).sqrt()
                } else {
                    0.0
                };
                LayerParams {
                    weights: (0..w).map(|_| rng.random_range(-bound..bound)).collect(),
                    bias: vec![0.0; b],
                }
            })
            .collect();
        Self { blocks }
    }

    /// Zeroed blocks matching a spec; used to accumulate gradients.
    pub fn zeros_like(spec: &ModelSpec) -> Self {
        let blocks = spec
            .flat_layers()
            .iter()
            .map(|kind| {
                let (w, b) = kind.param_counts();
                LayerParams {
                    weights: vec![0.0; w],
                    bias: vec![0.0; b],
                }
            })
            .collect();
        Self { blocks }
    }

    pub fn total_len(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.weights.len() + b.bias.len())
            .sum()
    }
}

/// Run layers forward, keeping each layer's input for the backward pass.
/// Returns (per-layer inputs, final output).
pub fn run_forward(
    layers: &[LayerKind],
    blocks: &[LayerParams],
    input: Tensor,
) -> Result<(Vec<Tensor>, Tensor)> {
    debug_assert_eq!(layers.len(), blocks.len());
    let mut inputs = Vec::with_capacity(layers.len());
    let mut current = input;
    for (kind, params) in layers.iter().zip(blocks) {
        let next = layer::forward(kind, params, &current)?;
        inputs.push(current);
        current = next;
    }
    Ok((inputs, current))
}

/// Run layers backward from an upstream gradient. Returns the gradient at
/// the section input and per-layer parameter gradients.
pub fn run_backward(
    layers: &[LayerKind],
    blocks: &[LayerParams],
    inputs: &[Tensor],
    upstream: Tensor,
) -> Result<(Tensor, Vec<LayerParams>)> {
    let mut grads = vec![LayerParams::default(); layers.len()];
    let mut g = upstream;
    for i in (0..layers.len()).rev() {
        let (g_in, g_params) = layer::backward(&layers[i], &blocks[i], &inputs[i], &g)?;
        grads[i] = g_params;
        g = g_in;
    }
    Ok((g, grads))
}

/// Forward a CSI-domain batch to classifier logits.
pub fn forward_csi(spec: &ModelSpec, params: &ParameterStore, input: Tensor) -> Result<Tensor> {
    let ranges = spec.section_ranges();
    let (_, x) = run_forward(&spec.csi_stem, &params.blocks[ranges.csi_stem], input)?;
    let (_, feat) = run_forward(&spec.extractor, &params.blocks[ranges.extractor], x)?;
    let (_, logits) = run_forward(&spec.classifier, &params.blocks[ranges.classifier], feat)?;
    Ok(logits)
}

/// Forward an IQ-domain batch to discriminator logits.
pub fn forward_iq(spec: &ModelSpec, params: &ParameterStore, input: Tensor) -> Result<Tensor> {
    let ranges = spec.section_ranges();
    let (_, x) = run_forward(&spec.iq_stem, &params.blocks[ranges.iq_stem], input)?;
    let (_, feat) = run_forward(&spec.extractor, &params.blocks[ranges.extractor], x)?;
    let (_, logits) = run_forward(
        &spec.discriminator,
        &params.blocks[ranges.discriminator],
        feat,
    )?;
    Ok(logits)
}

/// Class probabilities for one CSI-domain sample.
pub fn predict(params: &ParameterStore, spec: &ModelSpec, sample: &[f64]) -> Result<Vec<f64>> {
    let shape = spec.csi_input.shape();
    if sample.len() != shape[0] * shape[1] {
        return Err(Error::invalid(format!(
            "sample has {} values, model expects {}",
            sample.len(),
            shape[0] * shape[1]
        )));
    }
    let input = Tensor::from_vec(&[1, shape[0], shape[1]], sample.to_vec())?;
    let logits = forward_csi(spec, params, input)?;
    Ok(softmax_row(logits.sample(0)))
}

/// Manifest stored next to a parameter file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub format_version: u16,
    pub spec: ModelSpec,
    pub seed: u64,
    pub epochs: usize,
}

/// Write parameters as flat little-endian 64-bit blocks in declaration
/// order, preceded by a small header.
pub fn write_parameters(path: &Path, store: &ParameterStore) -> Result<()> {
    let mut buf = Vec::with_capacity(14 + store.total_len() * 8);
    buf.extend_from_slice(PARAMS_MAGIC);
    buf.extend_from_slice(&PARAMS_VERSION.to_le_bytes());
    buf.extend_from_slice(&(store.blocks.len() as u32).to_le_bytes());
    for block in &store.blocks {
        buf.extend_from_slice(&(block.weights.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(block.bias.len() as u32).to_le_bytes());
        for v in block.weights.iter().chain(&block.bias) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Read parameters written by [`write_parameters`], validating the block
/// structure against a spec.
pub fn read_parameters(path: &Path, spec: &ModelSpec) -> Result<ParameterStore> {
    let buf = fs::read(path)?;
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize, what: &str| -> Result<Vec<u8>> {
        if *pos + n > buf.len() {
            return Err(Error::format(
                *pos as u64,
                format!("truncated parameter file while reading {what}"),
            ));
        }
        let out = buf[*pos..*pos + n].to_vec();
        *pos += n;
        Ok(out)
    };

    if take(&mut pos, 4, "magic")? != PARAMS_MAGIC {
        return Err(Error::format(0, "bad parameter file magic"));
    }
    let version = u16::from_le_bytes(take(&mut pos, 2, "version")?.try_into().unwrap());
    if version != PARAMS_VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let n_blocks =
        u32::from_le_bytes(take(&mut pos, 4, "block count")?.try_into().unwrap()) as usize;
    let layers = spec.flat_layers();
    if n_blocks != layers.len() {
        return Err(Error::format(
            6,
            format!(
                "parameter file has {n_blocks} blocks, spec expects {}",
                layers.len()
            ),
        ));
    }

    let mut blocks = Vec::with_capacity(n_blocks);
    for kind in &layers {
        let w_len =
            u32::from_le_bytes(take(&mut pos, 4, "weight length")?.try_into().unwrap()) as usize;
        let b_len =
            u32::from_le_bytes(take(&mut pos, 4, "bias length")?.try_into().unwrap()) as usize;
        let (expect_w, expect_b) = kind.param_counts();
        if w_len != expect_w || b_len != expect_b {
            return Err(Error::format(
                (pos - 8) as u64,
                format!(
                    "block for {kind:?} has {w_len}/{b_len} parameters, expected {expect_w}/{expect_b}"
                ),
            ));
        }
        let raw = take(&mut pos, (w_len + b_len) * 8, "block payload")?;
        let mut values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let weights: Vec<f64> = values.by_ref().take(w_len).collect();
        let bias: Vec<f64> = values.collect();
        blocks.push(LayerParams { weights, bias });
    }
    if pos != buf.len() {
        return Err(Error::format(
            pos as u64,
            format!("{} trailing bytes in parameter file", buf.len() - pos),
        ));
    }
    Ok(ParameterStore { blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tcn_spec_validates_with_expected_shapes() {
        let spec = ModelSpec::tcn(InputKind::Iq320, 10, 85);
        let shapes = spec.validate().unwrap();
        assert_eq!(shapes.extractor_input, vec![2, 320]);
        assert_eq!(shapes.feature, vec![64]);
        assert_eq!(shapes.n_main, 10);
        assert_eq!(shapes.n_aux, 85);
    }

    #[test]
    fn raw_csi_stem_adapts_to_common_shape() {
        let spec = ModelSpec::tcn(InputKind::RawCsi52, 4, 4);
        let shapes = spec.validate().unwrap();
        assert_eq!(shapes.extractor_input, vec![2, 320]);
    }

    #[test]
    fn cnn_spec_validates() {
        let spec = ModelSpec::cnn(InputKind::Iq320, 3, 3);
        spec.validate().unwrap();
    }

    #[test]
    fn init_is_deterministic_and_fan_in_bounded() {
        let spec = ModelSpec::tcn(InputKind::Iq320, 5, 7);
        let a = ParameterStore::init(&spec, 99);
        let b = ParameterStore::init(&spec, 99);
        assert_eq!(a, b);
        for (kind, block) in spec.flat_layers().iter().zip(&a.blocks) {
            if kind.fan_in() > 0 {
                let bound = 1.0 / (kind.fan_in() as f64).sqrt();
                assert!(block.weights.iter().all(|w| w.abs() <= bound));
                assert!(block.bias.iter().all(|&b| b == 0.0));
            }
        }
    }

    #[test]
    fn predict_is_normalized_and_uniform_for_zero_head() {
        let spec = ModelSpec::tcn(InputKind::Iq320, 6, 6);
        let mut params = ParameterStore::init(&spec, 1);
        let sample: Vec<f64> = (0..640).map(|i| (i as f64 * 0.01).sin()).collect();

        let probs = predict(&params, &spec, &sample).unwrap();
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));

        // Zero the final classifier layer: prediction becomes uniform.
        let ranges = spec.section_ranges();
        let last = ranges.classifier.end - 1;
        params.blocks[last].weights.iter_mut().for_each(|w| *w = 0.0);
        params.blocks[last].bias.iter_mut().for_each(|b| *b = 0.0);
        let probs = predict(&params, &spec, &sample).unwrap();
        for p in probs {
            assert!((p - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_argmax_invariant_under_logit_shift() {
        let spec = ModelSpec::tcn(InputKind::Iq320, 4, 4);
        let mut params = ParameterStore::init(&spec, 3);
        let sample: Vec<f64> = (0..640).map(|i| (i as f64 * 0.02).cos()).collect();
        let base = predict(&params, &spec, &sample).unwrap();
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0
        };
        // Adding a constant to every final bias shifts all logits equally.
        let ranges = spec.section_ranges();
        let last = ranges.classifier.end - 1;
        params.blocks[last].bias.iter_mut().for_each(|b| *b += 3.7);
        let shifted = predict(&params, &spec, &sample).unwrap();
        assert_eq!(argmax(&base), argmax(&shifted));
    }

    #[test]
    fn parameter_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ModelSpec::tcn(InputKind::RawCsi52, 3, 5);
        let store = ParameterStore::init(&spec, 11);
        let path = dir.path().join("model.params");
        write_parameters(&path, &store).unwrap();
        let loaded = read_parameters(&path, &spec).unwrap();
        assert_eq!(store, loaded);
    }

    #[test]
    fn parameter_file_rejects_wrong_spec() {
        let dir = tempfile::tempdir().unwrap();
        let spec = ModelSpec::tcn(InputKind::Iq320, 3, 5);
        let store = ParameterStore::init(&spec, 11);
        let path = dir.path().join("model.params");
        write_parameters(&path, &store).unwrap();
        let other = ModelSpec::tcn(InputKind::Iq320, 4, 5);
        assert!(matches!(
            read_parameters(&path, &other),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn model_spec_serializes() {
        let spec = ModelSpec::tcn(InputKind::RawCsi52, 10, 85);
        let json = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}
