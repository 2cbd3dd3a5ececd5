//! Network layers with exact analytic forward and backward passes.
//!
//! Layers are described by [`LayerKind`] values (serializable, parameter-free
//! descriptions) with weights held separately in [`LayerParams`] so a whole
//! network's parameters can be stored as one flat list of blocks. Tensors are
//! batched along the leading dimension; convolutional layers work on
//! `(batch, channels, length)`, dense layers on `(batch, dim)`.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Description of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "layer", rename_all = "snake_case")]
pub enum LayerKind {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
    },
    Dense {
        in_dim: usize,
        out_dim: usize,
    },
    Relu,
    MaxPool {
        width: usize,
    },
    GlobalAvgPool,
    Flatten,
    Reshape {
        channels: usize,
        length: usize,
    },
}

/// Weights and bias for one layer; both empty for parameter-free layers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerKind {
    /// (weight count, bias count) for this layer.
    pub fn param_counts(&self) -> (usize, usize) {
        match *self {
            LayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => (out_channels * in_channels * kernel, out_channels),
            LayerKind::Dense { in_dim, out_dim } => (out_dim * in_dim, out_dim),
            _ => (0, 0),
        }
    }

    /// Fan-in used for weight initialization scaling.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Conv1d {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel,
            LayerKind::Dense { in_dim, .. } => in_dim,
            _ => 0,
        }
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *self {
            LayerKind::Conv1d {
                in_channels,
                out_channels,
                kernel,
                stride,
                dilation,
            } => {
                let [c, l] = two_dims(input, "conv1d")?;
                if c != in_channels {
                    return Err(Error::invalid(format!(
                        "conv1d expects {in_channels} input channels, got {c}"
                    )));
                }
                let span = dilation * (kernel - 1) + 1;
                if stride == 0 || kernel == 0 || dilation == 0 || span > l {
                    return Err(Error::invalid(format!(
                        "conv1d kernel span {span} does not fit input length {l}"
                    )));
                }
                Ok(vec![out_channels, (l - span) / stride + 1])
            }
            LayerKind::Dense { in_dim, out_dim } => {
                let [d] = one_dim(input, "dense")?;
                if d != in_dim {
                    return Err(Error::invalid(format!(
                        "dense expects input dim {in_dim}, got {d}"
                    )));
                }
                Ok(vec![out_dim])
            }
            LayerKind::Relu => Ok(input.to_vec()),
            LayerKind::MaxPool { width } => {
                let [c, l] = two_dims(input, "max_pool")?;
                if width == 0 || l < width {
                    return Err(Error::invalid(format!(
                        "max_pool width {width} does not fit input length {l}"
                    )));
                }
                Ok(vec![c, l / width])
            }
            LayerKind::GlobalAvgPool => {
                let [c, _] = two_dims(input, "global_avg_pool")?;
                Ok(vec![c])
            }
            LayerKind::Flatten => Ok(vec![input.iter().product()]),
            LayerKind::Reshape { channels, length } => {
                let total: usize = input.iter().product();
                if total != channels * length {
                    return Err(Error::invalid(format!(
                        "cannot reshape {total} elements to ({channels}, {length})"
                    )));
                }
                Ok(vec![channels, length])
            }
        }
    }
}

/// Dot product with eight independent accumulators. Plain `sum()` builds one
/// serial dependency chain that the compiler must not reorder; splitting the
/// reduction keeps results deterministic (fixed summation tree) while letting
/// the chains run in parallel.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (xa, xb) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for j in 0..8 {
            acc[j] += xa[j] * xb[j];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i] * b[i];
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

/// Sum with the same eight-way accumulator scheme as [`dot`].
#[inline]
fn sum8(a: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let xa = &a[i * 8..i * 8 + 8];
        for j in 0..8 {
            acc[j] += xa[j];
        }
    }
    let mut tail = 0.0;
    for i in chunks * 8..a.len() {
        tail += a[i];
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

fn one_dim(shape: &[usize], what: &str) -> Result<[usize; 1]> {
    match shape {
        [d] => Ok([*d]),
        _ => Err(Error::invalid(format!(
            "{what} expects a flat input, got shape {shape:?}"
        ))),
    }
}

fn two_dims(shape: &[usize], what: &str) -> Result<[usize; 2]> {
    match shape {
        [c, l] => Ok([*c, *l]),
        _ => Err(Error::invalid(format!(
            "{what} expects a (channels, length) input, got shape {shape:?}"
        ))),
    }
}

fn batched_output_shape(kind: &LayerKind, input: &Tensor) -> Result<Vec<usize>> {
    let per_sample = kind.output_shape(&input.shape()[1..])?;
    let mut shape = vec![input.batch()];
    shape.extend(per_sample);
    Ok(shape)
}

/// Forward pass of one layer over a batched input.
pub fn forward(kind: &LayerKind, params: &LayerParams, input: &Tensor) -> Result<Tensor> {
    check_params(kind, params)?;
    let out_shape = batched_output_shape(kind, input)?;
    let mut output = Tensor::zeros(&out_shape);
    let batch = input.batch();
    match *kind {
        LayerKind::Conv1d {
            in_channels,
            out_channels,
            kernel,
            stride,
            dilation,
        } => {
            let l_in = input.shape()[2];
            let l_out = out_shape[2];
            for b in 0..batch {
                conv_forward_sample(
                    input.sample(b),
                    output.sample_mut(b),
                    &params.weights,
                    &params.bias,
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    dilation,
                    l_in,
                    l_out,
                );
            }
        }
        LayerKind::Dense { in_dim, out_dim } => {
            for b in 0..batch {
                let x = input.sample(b);
                let y = output.sample_mut(b);
                for o in 0..out_dim {
                    let row = &params.weights[o * in_dim..(o + 1) * in_dim];
                    y[o] = dot(row, x) + params.bias[o];
                }
            }
        }
        LayerKind::Relu => {
            for (y, &x) in output.data_mut().iter_mut().zip(input.data()) {
                *y = if x > 0.0 { x } else { 0.0 };
            }
        }
        LayerKind::MaxPool { width } => {
            let channels = input.shape()[1];
            let l_in = input.shape()[2];
            let l_out = out_shape[2];
            for b in 0..batch {
                let x = input.sample(b);
                let y = output.sample_mut(b);
                for c in 0..channels {
                    let row = &x[c * l_in..(c + 1) * l_in];
                    for ol in 0..l_out {
                        let window = &row[ol * width..ol * width + width];
                        y[c * l_out + ol] = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    }
                }
            }
        }
        LayerKind::GlobalAvgPool => {
            let channels = input.shape()[1];
            let l_in = input.shape()[2];
            for b in 0..batch {
                let x = input.sample(b);
                let y = output.sample_mut(b);
                for c in 0..channels {
                    y[c] = sum8(&x[c * l_in..(c + 1) * l_in]) / l_in as f64;
                }
            }
        }
        LayerKind::Flatten | LayerKind::Reshape { .. } => {
            output.data_mut().copy_from_slice(input.data());
        }
    }
    Ok(output)
}

/// Backward pass: upstream gradient in, (input gradient, parameter
/// gradients) out. The layer's forward input must be supplied so
/// activations can be recomputed where needed.
pub fn backward(
    kind: &LayerKind,
    params: &LayerParams,
    input: &Tensor,
    upstream: &Tensor,
) -> Result<(Tensor, LayerParams)> {
    check_params(kind, params)?;
    let out_shape = batched_output_shape(kind, input)?;
    if upstream.shape() != out_shape.as_slice() {
        return Err(Error::invalid(format!(
            "upstream gradient shape {:?} does not match layer output {:?}",
            upstream.shape(),
            out_shape
        )));
    }
    let batch = input.batch();
    let mut g_input = Tensor::zeros(input.shape());
    let (w_count, b_count) = kind.param_counts();
    let mut grads = LayerParams {
        weights: vec![0.0; w_count],
        bias: vec![0.0; b_count],
    };

    match *kind {
        LayerKind::Conv1d {
            in_channels,
            out_channels,
            kernel,
            stride,
            dilation,
        } => {
            let l_in = input.shape()[2];
            let l_out = out_shape[2];
            for b in 0..batch {
                conv_backward_sample(
                    input.sample(b),
                    upstream.sample(b),
                    g_input.sample_mut(b),
                    &params.weights,
                    &mut grads.weights,
                    &mut grads.bias,
                    in_channels,
                    out_channels,
                    kernel,
                    stride,
                    dilation,
                    l_in,
                    l_out,
                );
            }
        }
        LayerKind::Dense { in_dim, out_dim } => {
            for b in 0..batch {
                let x = input.sample(b);
                let gy = upstream.sample(b);
                let gx = g_input.sample_mut(b);
                for o in 0..out_dim {
                    let g = gy[o];
                    if g == 0.0 {
                        continue;
                    }
                    let row = &params.weights[o * in_dim..(o + 1) * in_dim];
                    let grow = &mut grads.weights[o * in_dim..(o + 1) * in_dim];
                    for i in 0..in_dim {
                        gx[i] += row[i] * g;
                        grow[i] += x[i] * g;
                    }
                    grads.bias[o] += g;
                }
            }
        }
        LayerKind::Relu => {
            for ((gx, &x), &gy) in g_input
                .data_mut()
                .iter_mut()
                .zip(input.data())
                .zip(upstream.data())
            {
                *gx = if x > 0.0 { gy } else { 0.0 };
            }
        }
        LayerKind::MaxPool { width } => {
            let channels = input.shape()[1];
            let l_in = input.shape()[2];
            let l_out = out_shape[2];
            for b in 0..batch {
                let x = input.sample(b);
                let gy = upstream.sample(b);
                let gx = g_input.sample_mut(b);
                for c in 0..channels {
                    let row = &x[c * l_in..(c + 1) * l_in];
                    for ol in 0..l_out {
                        let window = &row[ol * width..ol * width + width];
                        let mut arg = 0;
                        for (i, &v) in window.iter().enumerate() {
                            if v > window[arg] {
                                arg = i;
                            }
                        }
                        gx[c * l_in + ol * width + arg] += gy[c * l_out + ol];
                    }
                }
            }
        }
        LayerKind::GlobalAvgPool => {
            let channels = input.shape()[1];
            let l_in = input.shape()[2];
            let scale = 1.0 / l_in as f64;
            for b in 0..batch {
                let gy = upstream.sample(b);
                let gx = g_input.sample_mut(b);
                for c in 0..channels {
                    let g = gy[c] * scale;
                    for v in &mut gx[c * l_in..(c + 1) * l_in] {
                        *v += g;
                    }
                }
            }
        }
        LayerKind::Flatten | LayerKind::Reshape { .. } => {
            g_input.data_mut().copy_from_slice(upstream.data());
        }
    }
    Ok((g_input, grads))
}

/// Combined forward value and exact gradients for one layer, used by the
/// gradient-check harness and tests.
pub fn layer_forward_backward(
    kind: &LayerKind,
    params: &LayerParams,
    input: &Tensor,
    upstream: &Tensor,
) -> Result<(Tensor, Tensor, LayerParams)> {
    let output = forward(kind, params, input)?;
    let (g_input, g_params) = backward(kind, params, input, upstream)?;
    Ok((output, g_input, g_params))
}

fn check_params(kind: &LayerKind, params: &LayerParams) -> Result<()> {
    let (w, b) = kind.param_counts();
    if params.weights.len() != w || params.bias.len() != b {
        return Err(Error::invalid(format!(
            "layer {kind:?} expects {w} weights / {b} biases, got {} / {}",
            params.weights.len(),
            params.bias.len()
        )));
    }
    Ok(())
}

// Output-channel pairs share each x load, halving memory traffic per FMA.
#[allow(clippy::too_many_arguments)]
fn conv_forward_sample(
    x: &[f64],
    y: &mut [f64],
    w: &[f64],
    bias: &[f64],
    c_in: usize,
    c_out: usize,
    kernel: usize,
    stride: usize,
    dilation: usize,
    l_in: usize,
    l_out: usize,
) {
    for (oc, b) in bias.iter().enumerate() {
        y[oc * l_out..(oc + 1) * l_out].fill(*b);
    }
    let mut oc = 0;
    while oc + 2 <= c_out {
        let (head, tail) = y.split_at_mut((oc + 1) * l_out);
        let y0 = &mut head[oc * l_out..];
        let y1 = &mut tail[..l_out];
        for ic in 0..c_in {
            let x_row = &x[ic * l_in..(ic + 1) * l_in];
            let w0_base = (oc * c_in + ic) * kernel;
            let w1_base = ((oc + 1) * c_in + ic) * kernel;
            for k in 0..kernel {
                let wv0 = w[w0_base + k];
                let wv1 = w[w1_base + k];
                if stride == 1 {
                    let xs = &x_row[k * dilation..k * dilation + l_out];
                    for j in 0..l_out {
                        let xv = xs[j];
                        y0[j] += wv0 * xv;
                        y1[j] += wv1 * xv;
                    }
                } else {
                    for j in 0..l_out {
                        let xv = x_row[j * stride + k * dilation];
                        y0[j] += wv0 * xv;
                        y1[j] += wv1 * xv;
                    }
                }
            }
        }
        oc += 2;
    }
    if oc < c_out {
        let y_row = &mut y[oc * l_out..(oc + 1) * l_out];
        for ic in 0..c_in {
            let x_row = &x[ic * l_in..(ic + 1) * l_in];
            let w_base = (oc * c_in + ic) * kernel;
            for k in 0..kernel {
                let wv = w[w_base + k];
                if stride == 1 {
                    let xs = &x_row[k * dilation..k * dilation + l_out];
                    for (yv, xv) in y_row.iter_mut().zip(xs) {
                        *yv += wv * xv;
                    }
                } else {
                    for (ol, yv) in y_row.iter_mut().enumerate() {
                        *yv += wv * x_row[ol * stride + k * dilation];
                    }
                }
            }
        }
    }
}

/// Paired dot products sharing the `b` loads.
#[inline]
fn dot2(a0: &[f64], a1: &[f64], b: &[f64]) -> (f64, f64) {
    let mut acc0 = [0.0f64; 4];
    let mut acc1 = [0.0f64; 4];
    let chunks = b.len() / 4;
    for i in 0..chunks {
        let (x0, x1, xb) = (&a0[i * 4..i * 4 + 4], &a1[i * 4..i * 4 + 4], &b[i * 4..i * 4 + 4]);
        for j in 0..4 {
            acc0[j] += x0[j] * xb[j];
            acc1[j] += x1[j] * xb[j];
        }
    }
    let (mut t0, mut t1) = (0.0, 0.0);
    for i in chunks * 4..b.len() {
        t0 += a0[i] * b[i];
        t1 += a1[i] * b[i];
    }
    (
        ((acc0[0] + acc0[1]) + (acc0[2] + acc0[3])) + t0,
        ((acc1[0] + acc1[1]) + (acc1[2] + acc1[3])) + t1,
    )
}

#[allow(clippy::too_many_arguments)]
fn conv_backward_sample(
    x: &[f64],
    gy: &[f64],
    gx: &mut [f64],
    w: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    c_in: usize,
    c_out: usize,
    kernel: usize,
    stride: usize,
    dilation: usize,
    l_in: usize,
    l_out: usize,
) {
    for (oc, g) in gb.iter_mut().enumerate() {
        *g += sum8(&gy[oc * l_out..(oc + 1) * l_out]);
    }
    for ic in 0..c_in {
        let x_row = &x[ic * l_in..(ic + 1) * l_in];
        let gx_row = &mut gx[ic * l_in..(ic + 1) * l_in];
        let mut oc = 0;
        while oc + 2 <= c_out {
            let gy0 = &gy[oc * l_out..(oc + 1) * l_out];
            let gy1 = &gy[(oc + 1) * l_out..(oc + 2) * l_out];
            let w0_base = (oc * c_in + ic) * kernel;
            let w1_base = ((oc + 1) * c_in + ic) * kernel;
            for k in 0..kernel {
                let wv0 = w[w0_base + k];
                let wv1 = w[w1_base + k];
                if stride == 1 {
                    let off = k * dilation;
                    let gx_win = &mut gx_row[off..off + l_out];
                    for j in 0..l_out {
                        gx_win[j] += wv0 * gy0[j] + wv1 * gy1[j];
                    }
                    let x_win = &x_row[off..off + l_out];
                    let (d0, d1) = dot2(gy0, gy1, x_win);
                    gw[w0_base + k] += d0;
                    gw[w1_base + k] += d1;
                } else {
                    let (mut d0, mut d1) = (0.0, 0.0);
                    for ol in 0..l_out {
                        let i = ol * stride + k * dilation;
                        gx_row[i] += wv0 * gy0[ol] + wv1 * gy1[ol];
                        d0 += gy0[ol] * x_row[i];
                        d1 += gy1[ol] * x_row[i];
                    }
                    gw[w0_base + k] += d0;
                    gw[w1_base + k] += d1;
                }
            }
            oc += 2;
        }
        if oc < c_out {
            let gy_row = &gy[oc * l_out..(oc + 1) * l_out];
            let w_base = (oc * c_in + ic) * kernel;
            for k in 0..kernel {
                let wv = w[w_base + k];
                if stride == 1 {
                    let off = k * dilation;
                    let gx_win = &mut gx_row[off..off + l_out];
                    for (gxv, &g) in gx_win.iter_mut().zip(gy_row) {
                        *gxv += wv * g;
                    }
                    gw[w_base + k] += dot(gy_row, &x_row[off..off + l_out]);
                } else {
                    let mut d = 0.0;
                    for (ol, &g) in gy_row.iter().enumerate() {
                        let i = ol * stride + k * dilation;
                        gx_row[i] += wv * g;
                        d += g * x_row[i];
                    }
                    gw[w_base + k] += d;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_forward_and_backward() {
        let kind = LayerKind::Relu;
        let params = LayerParams::default();
        let x = Tensor::from_vec(&[1, 2], vec![-1.0, 2.0]).unwrap();
        let up = Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap();
        let (y, gx, _) = layer_forward_backward(&kind, &params, &x, &up).unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);
        assert_eq!(gx.data(), &[0.0, 1.0]);
    }

    #[test]
    fn dense_identity_passes_input_through() {
        let kind = LayerKind::Dense {
            in_dim: 3,
            out_dim: 3,
        };
        let mut params = LayerParams {
            weights: vec![0.0; 9],
            bias: vec![0.0; 3],
        };
        for i in 0..3 {
            params.weights[i * 3 + i] = 1.0;
        }
        let x = Tensor::from_vec(&[2, 3], vec![1.0, -2.0, 3.0, 0.5, 0.0, -0.5]).unwrap();
        let y = forward(&kind, &params, &x).unwrap();
        assert_eq!(y.data(), x.data());
    }

    #[test]
    fn conv_matches_hand_computation() {
        // One channel in/out, kernel [1, 2], input [1, 2, 3].
        let kind = LayerKind::Conv1d {
            in_channels: 1,
            out_channels: 1,
            kernel: 2,
            stride: 1,
            dilation: 1,
        };
        let params = LayerParams {
            weights: vec![1.0, 2.0],
            bias: vec![0.5],
        };
        let x = Tensor::from_vec(&[1, 1, 3], vec![1.0, 2.0, 3.0]).unwrap();
        let y = forward(&kind, &params, &x).unwrap();
        // y[0] = 1*1 + 2*2 + 0.5 = 5.5; y[1] = 2 + 6 + 0.5 = 8.5
        assert_eq!(y.shape(), &[1, 1, 2]);
        assert_eq!(y.data(), &[5.5, 8.5]);

        let up = Tensor::from_vec(&[1, 1, 2], vec![1.0, 1.0]).unwrap();
        let (gx, gp) = backward(&kind, &params, &x, &up).unwrap();
        assert_eq!(gx.data(), &[1.0, 3.0, 2.0]);
        assert_eq!(gp.weights, vec![3.0, 5.0]);
        assert_eq!(gp.bias, vec![2.0]);
    }

    #[test]
    fn dilated_conv_shrinks_by_span() {
        let kind = LayerKind::Conv1d {
            in_channels: 1,
            out_channels: 1,
            kernel: 3,
            stride: 1,
            dilation: 4,
        };
        assert_eq!(kind.output_shape(&[1, 20]).unwrap(), vec![1, 12]);
    }

    #[test]
    fn maxpool_routes_gradient_to_argmax() {
        let kind = LayerKind::MaxPool { width: 2 };
        let params = LayerParams::default();
        let x = Tensor::from_vec(&[1, 1, 4], vec![1.0, 3.0, 2.0, -1.0]).unwrap();
        let y = forward(&kind, &params, &x).unwrap();
        assert_eq!(y.data(), &[3.0, 2.0]);
        let up = Tensor::from_vec(&[1, 1, 2], vec![10.0, 20.0]).unwrap();
        let (gx, _) = backward(&kind, &params, &x, &up).unwrap();
        assert_eq!(gx.data(), &[0.0, 10.0, 20.0, 0.0]);
    }

    #[test]
    fn global_avg_pool_spreads_gradient() {
        let kind = LayerKind::GlobalAvgPool;
        let params = LayerParams::default();
        let x = Tensor::from_vec(&[1, 2, 2], vec![1.0, 3.0, -2.0, 2.0]).unwrap();
        let y = forward(&kind, &params, &x).unwrap();
        assert_eq!(y.data(), &[2.0, 0.0]);
        let up = Tensor::from_vec(&[1, 2], vec![4.0, 8.0]).unwrap();
        let (gx, _) = backward(&kind, &params, &x, &up).unwrap();
        assert_eq!(gx.data(), &[2.0, 2.0, 4.0, 4.0]);
    }

    #[test]
    fn flatten_and_reshape_round_trip_shapes() {
        let flatten = LayerKind::Flatten;
        let reshape = LayerKind::Reshape {
            channels: 2,
            length: 3,
        };
        let params = LayerParams::default();
        let x = Tensor::from_vec(&[1, 2, 3], (0..6).map(|i| i as f64).collect()).unwrap();
        let flat = forward(&flatten, &params, &x).unwrap();
        assert_eq!(flat.shape(), &[1, 6]);
        let back = forward(&reshape, &params, &flat).unwrap();
        assert_eq!(back.shape(), &[1, 2, 3]);
        assert_eq!(back.data(), x.data());
    }

    #[test]
    fn shape_mismatch_is_invalid() {
        let kind = LayerKind::Dense {
            in_dim: 4,
            out_dim: 2,
        };
        let params = LayerParams {
            weights: vec![0.0; 8],
            bias: vec![0.0; 2],
        };
        let x = Tensor::from_vec(&[1, 3], vec![0.0; 3]).unwrap();
        assert!(matches!(
            forward(&kind, &params, &x),
            Err(Error::InvalidArgument(_))
        ));
    }
}
