//! Foundational complex-signal math: DFT, the OFDM symbol window, the short
//! and long training symbols, weighted preamble synthesis, and rational
//! resampling.
//!
//! Everything here is a pure function of its inputs; the types carry no
//! hidden state and the operations are safe to call from any thread.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Ordered complex sample vector, the universal signal carrier.
///
/// Time-domain sequences carry a sample rate; frequency-domain vectors may
/// leave it unset. Construction rejects empty or non-finite data.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    samples: Vec<Complex64>,
    sample_rate_hz: Option<f64>,
}

impl ComplexSequence {
    /// Build a sequence without an associated sample rate.
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        Self::build(samples, None)
    }

    /// Build a time-domain sequence sampled at `sample_rate_hz`.
    pub fn with_rate(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::invalid(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        Self::build(samples, Some(sample_rate_hz))
    }

    fn build(samples: Vec<Complex64>, sample_rate_hz: Option<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("complex sequence must not be empty"));
        }
        if let Some(i) = samples
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::invalid(format!(
                "non-finite sample at index {i}: {}",
                samples[i]
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> Option<f64> {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Timing constants of the 20 MHz OFDM preamble.
///
/// The defaults describe a 16 us preamble: two 8 us training symbols sampled
/// at 20 Msps (320 points), 64-point DFT bins spaced 312.5 kHz apart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreambleTiming {
    /// Subcarrier spacing in Hz.
    pub delta_f_hz: f64,
    /// Window transition time in seconds.
    pub t_tr_s: f64,
    /// Training symbol period T in seconds.
    pub symbol_period_s: f64,
    /// Long-symbol guard interval in seconds.
    pub t_gi2_s: f64,
    /// Sample rate in Hz.
    pub sample_rate_hz: f64,
    /// Number of occupied subcarriers.
    pub n_subcarriers: usize,
    /// Total preamble length in samples.
    pub preamble_len: usize,
}

impl Default for PreambleTiming {
    fn default() -> Self {
        Self {
            delta_f_hz: 312_500.0,
            t_tr_s: 100e-9,
            symbol_period_s: 8e-6,
            t_gi2_s: 1.6e-6,
            sample_rate_hz: 20e6,
            n_subcarriers: 52,
            preamble_len: 320,
        }
    }
}

impl PreambleTiming {
    /// Check the internal consistency relations that the rest of the crate
    /// relies on: 64 DFT bins span the sample rate, and the preamble holds
    /// exactly two symbol periods.
    pub fn validate(&self) -> Result<()> {
        if (self.delta_f_hz * 64.0 - self.sample_rate_hz).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "delta_f * 64 = {} does not match sample rate {}",
                self.delta_f_hz * 64.0,
                self.sample_rate_hz
            )));
        }
        let expected = 2.0 * self.symbol_period_s * self.sample_rate_hz;
        if (self.preamble_len as f64 - expected).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "preamble_len {} does not equal 2 * T * fs = {expected}",
                self.preamble_len
            )));
        }
        Ok(())
    }

    /// Number of DFT bins implied by the bin spacing.
    pub fn fft_len(&self) -> usize {
        (self.sample_rate_hz / self.delta_f_hz).round() as usize
    }

    /// Samples per training symbol period.
    pub fn symbol_len(&self) -> usize {
        (self.symbol_period_s * self.sample_rate_hz).round() as usize
    }

    /// Samples in the long-symbol guard interval.
    pub fn gi2_len(&self) -> usize {
        (self.t_gi2_s * self.sample_rate_hz).round() as usize
    }
}

/// Discrete Fourier transform.
///
/// Forward: `X_m = sum_n x_n exp(-j 2 pi m n / N)`; the inverse flips the
/// exponent sign and scales by `1/N`, so `dft(dft(x, false), true)` restores
/// the input. Power-of-two lengths take an iterative radix-2 path; any other
/// length falls back to direct summation.
pub fn dft(input: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    if input.is_empty() {
        return Err(Error::invalid("dft of empty input"));
    }
    let n = input.len();
    let mut out = if n.is_power_of_two() {
        radix2(input, inverse)
    } else {
        direct_dft(input, inverse)
    };
    if inverse {
        let scale = 1.0 / n as f64;
        for v in &mut out {
            *v *= scale;
        }
    }
    Ok(out)
}

fn direct_dft(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|m| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, x) in input.iter().enumerate() {
                let angle = sign * 2.0 * PI * (m as f64) * (i as f64) / n as f64;
                acc += x * Complex64::from_polar(1.0, angle);
            }
            acc
        })
        .collect()
}

fn radix2(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let mut data = input.to_vec();

    // Bit-reversal permutation.
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i.reverse_bits() >> (usize::BITS - bits)) as usize;
        if j > i {
            data.swap(i, j);
        }
    }

    // One table of N/2 twiddles serves every stage via striding.
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddle: Vec<Complex64> = (0..n / 2)
        .map(|j| Complex64::from_polar(1.0, sign * 2.0 * PI * j as f64 / n as f64))
        .collect();

    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for block in (0..n).step_by(len) {
            for j in 0..half {
                let w = twiddle[j * stride];
                let a = data[block + j];
                let b = data[block + j + half] * w;
                data[block + j] = a + b;
                data[block + j + half] = a - b;
            }
        }
        len <<= 1;
    }
    data
}

/// Symbol window: sin^2 transition ramps of width `t_tr_s` around a flat
/// region spanning one symbol period, zero outside the support.
pub fn window_value(t_s: f64, timing: &PreambleTiming) -> f64 {
    let ttr = timing.t_tr_s;
    let t_sym = timing.symbol_period_s;
    if t_s > -ttr / 2.0 && t_s < ttr / 2.0 {
        let x = PI / 2.0 * (0.5 + t_s / ttr);
        x.sin().powi(2)
    } else if t_s >= ttr / 2.0 && t_s < t_sym - ttr / 2.0 {
        1.0
    } else if t_s >= t_sym - ttr / 2.0 && t_s < t_sym + ttr / 2.0 {
        let x = PI / 2.0 * (0.5 - (t_s - t_sym) / ttr);
        x.sin().powi(2)
    } else {
        0.0
    }
}

// Sign pattern of the short training symbol: 12 occupied subcarriers,
// each carrying sign * (1 + j) * sqrt(13/6).
const STS_SIGNS: [i8; 52] = [
    0, 0, 1, 0, 0, 0, -1, 0, 0, 0, 1, //
    0, 0, 0, -1, 0, 0, 0, -1, 0, 0, 0, 1, 0, 0, 0, //
    0, 0, 0, -1, 0, 0, 0, -1, 0, 0, 0, 1, 0, 0, 0, //
    1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0,
];

// Long training symbol: all 52 subcarriers occupied with +/-1.
const LTS_SIGNS: [i8; 52] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, //
    -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, //
    1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, //
    1, -1, 1, 1, 1, 1,
];

/// The 52-element short training symbol, power-normalized by sqrt(13/6).
pub fn sts_symbol() -> [Complex64; 52] {
    let scale = (13.0f64 / 6.0).sqrt();
    let mut s = [Complex64::new(0.0, 0.0); 52];
    for (v, &sign) in s.iter_mut().zip(STS_SIGNS.iter()) {
        let g = sign as f64 * scale;
        *v = Complex64::new(g, g);
    }
    s
}

/// The 52-element long training symbol (+/-1 on every subcarrier).
pub fn lts_symbol() -> [Complex64; 52] {
    let mut l = [Complex64::new(0.0, 0.0); 52];
    for (v, &sign) in l.iter_mut().zip(LTS_SIGNS.iter()) {
        *v = Complex64::new(sign as f64, 0.0);
    }
    l
}

/// Evaluate a windowed, weighted training symbol on the sample grid
/// `t_n = n / sample_rate`:
///
/// `s(t) = w(t) * sum_k symbol_k * weight_k * exp(j 2 pi k delta_f (t - offset))`
///
/// with `k` running from 1 to 52. With unit weights and zero offset this is
/// the reference short symbol; the long symbol uses the guard interval as
/// its offset.
pub fn synthesize_weighted_symbol(
    freq_symbol: &[Complex64],
    weights: &[Complex64],
    timing: &PreambleTiming,
    time_offset_s: f64,
    n_samples: usize,
) -> Result<Vec<Complex64>> {
    if freq_symbol.len() != timing.n_subcarriers || weights.len() != timing.n_subcarriers {
        return Err(Error::invalid(format!(
            "symbol/weight length mismatch: got {} and {}, expected {}",
            freq_symbol.len(),
            weights.len(),
            timing.n_subcarriers
        )));
    }
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be positive"));
    }

    // Zero-weight subcarriers (most of the short symbol) contribute nothing.
    let terms: Vec<(f64, Complex64)> = freq_symbol
        .iter()
        .zip(weights.iter())
        .enumerate()
        .filter_map(|(i, (c, w))| {
            let cw = c * w;
            (cw != Complex64::new(0.0, 0.0)).then_some(((i + 1) as f64, cw))
        })
        .collect();

    let fs = timing.sample_rate_hz;
    let mut out = vec![Complex64::new(0.0, 0.0); n_samples];
    for (n, v) in out.iter_mut().enumerate() {
        let t = n as f64 / fs;
        let w = window_value(t, timing);
        if w == 0.0 {
            continue;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for &(k, cw) in &terms {
            let angle = 2.0 * PI * k * timing.delta_f_hz * (t - time_offset_s);
            acc += cw * Complex64::from_polar(1.0, angle);
        }
        *v = acc * w;
    }
    Ok(out)
}

/// Assemble a full preamble from per-subcarrier weights: the short symbol
/// followed by the long symbol delayed one symbol period. The falling edge
/// of the first window overlaps the rising edge of the second and the two
/// contributions add.
pub fn preamble_from_weights(
    weights: &[Complex64],
    timing: &PreambleTiming,
) -> Result<Vec<Complex64>> {
    let total = timing.preamble_len;
    let half = timing.symbol_len();
    let mut out = synthesize_weighted_symbol(&sts_symbol(), weights, timing, 0.0, total)?;
    let long = synthesize_weighted_symbol(
        &lts_symbol(),
        weights,
        timing,
        timing.t_gi2_s,
        total - half,
    )?;
    for (dst, src) in out[half..].iter_mut().zip(long.iter()) {
        *dst += src;
    }
    Ok(out)
}

/// Reference preamble with unit weights on every subcarrier.
pub fn reference_preamble(timing: &PreambleTiming) -> Vec<Complex64> {
    let ones = vec![Complex64::new(1.0, 0.0); timing.n_subcarriers];
    preamble_from_weights(&ones, timing).expect("reference synthesis cannot fail")
}

const RESAMPLE_TAPS_PER_PHASE: usize = 8;

/// Rational rate change by `up/down`: zero-stuff, windowed-sinc low-pass,
/// decimate, implemented in polyphase form. Each polyphase branch is
/// normalized to unit DC gain so constant inputs pass through unchanged.
/// Output length is `ceil(len * up / down)`.
pub fn resample_rational(x: &[Complex64], up: usize, down: usize) -> Result<Vec<Complex64>> {
    if up == 0 || down == 0 {
        return Err(Error::invalid("resampling factors must be nonzero"));
    }
    if x.is_empty() {
        return Err(Error::invalid("resample of empty input"));
    }
    let g = gcd(up, down);
    let (up, down) = (up / g, down / g);
    if up == down {
        return Ok(x.to_vec());
    }

    let out_len = (x.len() * up).div_ceil(down);
    let proto_len = RESAMPLE_TAPS_PER_PHASE * up;
    let center = (proto_len - 1) as f64 / 2.0;
    // Cutoff at the narrower of the two Nyquist bands, in cycles per sample
    // of the upsampled stream.
    let cutoff = 0.5 * (1.0 / up as f64).min(1.0 / down as f64);

    let mut proto = vec![0.0f64; proto_len];
    for (i, h) in proto.iter_mut().enumerate() {
        let m = i as f64 - center;
        let sinc = if m == 0.0 {
            2.0 * cutoff
        } else {
            (2.0 * PI * cutoff * m).sin() / (PI * m)
        };
        let hamming = 0.54 - 0.46 * (2.0 * PI * i as f64 / (proto_len - 1) as f64).cos();
        *h = sinc * hamming;
    }

    // Polyphase split; normalize each branch to unit DC gain.
    let mut phases = vec![vec![0.0f64; RESAMPLE_TAPS_PER_PHASE]; up];
    for (p, taps) in phases.iter_mut().enumerate() {
        for (t, tap) in taps.iter_mut().enumerate() {
            *tap = proto[p + t * up];
        }
        let sum: f64 = taps.iter().sum();
        if sum.abs() > 1e-12 {
            for tap in taps.iter_mut() {
                *tap /= sum;
            }
        }
    }

    let shift = (proto_len - 1) / 2;
    let mut out = Vec::with_capacity(out_len);
    for m in 0..out_len {
        // Index into the conceptual upsampled stream, advanced by the filter
        // delay so the output stays aligned with the input.
        let idx = m * down + shift;
        let phase = idx % up;
        let base = idx / up;
        let mut acc = Complex64::new(0.0, 0.0);
        for (t, &tap) in phases[phase].iter().enumerate() {
            if let Some(i) = base.checked_sub(t) {
                if let Some(v) = x.get(i) {
                    acc += tap * v;
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
