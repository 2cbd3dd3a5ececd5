//! Transmitter hardware imperfections and the propagation channel.
//!
//! This module stands in for lab hardware: it embeds device-specific analog
//! distortions (IQ imbalance, power-amplifier nonlinearity, carrier frequency
//! offset, DC offset) into a clean preamble and then passes the result
//! through a noisy multipath channel. All randomness is seeded per call, so
//! dataset generation is reproducible and parallelizable.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::{reference_preamble, ComplexSequence, PreambleTiming};

/// Carrier frequency used to convert ppm offsets to Hz (2.4 GHz band, channel 1).
pub const CARRIER_FREQ_HZ: f64 = 2.412e9;

/// Per-device RF fingerprint parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceImpairment {
    pub device_id: u32,
    /// Carrier frequency offset in parts per million of the carrier.
    pub cfo_ppm: f64,
    /// Q-arm gain relative to the I arm (1.0 = balanced).
    pub iq_gain_mismatch: f64,
    /// Quadrature phase error in radians.
    pub iq_phase_mismatch_rad: f64,
    /// Power amplifier linear gain.
    pub pa_a1: Complex64,
    /// Power amplifier third-order coefficient.
    pub pa_a3: Complex64,
    /// Additive DC offset.
    pub dc_offset: Complex64,
}

impl DeviceImpairment {
    /// The impairment that leaves a signal untouched.
    pub fn identity(device_id: u32) -> Self {
        Self {
            device_id,
            cfo_ppm: 0.0,
            iq_gain_mismatch: 1.0,
            iq_phase_mismatch_rad: 0.0,
            pa_a1: Complex64::new(1.0, 0.0),
            pa_a3: Complex64::new(0.0, 0.0),
            dc_offset: Complex64::new(0.0, 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.pa_a1.norm() > 0.0) {
            return Err(Error::invalid("pa_a1 must have nonzero magnitude"));
        }
        Ok(())
    }
}

/// FIR multipath channel plus additive white Gaussian noise.
///
/// `snr_db = f64::INFINITY` disables noise entirely; otherwise the noise
/// power is scaled so the realized per-sample SNR matches `snr_db` in
/// expectation. The draw is fully determined by `rng_seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub taps: Vec<Complex64>,
    pub snr_db: f64,
    pub rng_seed: u64,
}

impl ChannelModel {
    /// Ideal channel: single unit tap, no noise.
    pub fn ideal() -> Self {
        Self {
            taps: vec![Complex64::new(1.0, 0.0)],
            snr_db: f64::INFINITY,
            rng_seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::invalid("channel must have at least one tap"));
        }
        let energy: f64 = self.taps.iter().map(|t| t.norm_sqr()).sum();
        if !(energy > 0.0) {
            return Err(Error::invalid("channel tap energy must be positive"));
        }
        Ok(())
    }
}

/// Apply the transmitter distortion chain: IQ imbalance, memoryless PA
/// polynomial, CFO rotation, then DC offset. Deterministic; the identity
/// impairment reproduces the input exactly.
pub fn apply_impairments(
    x: &ComplexSequence,
    imp: &DeviceImpairment,
) -> Result<ComplexSequence> {
    imp.validate()?;
    let fs = x
        .sample_rate_hz()
        .ok_or_else(|| Error::invalid("impairments require a sample rate"))?;

    // IQ imbalance as a mix of the signal and its image:
    // x' = mu * x + nu * conj(x), mu = (1 + g e^{j phi}) / 2, nu = (1 - g e^{j phi}) / 2.
    let ge = imp.iq_gain_mismatch * Complex64::from_polar(1.0, imp.iq_phase_mismatch_rad);
    let mu = (Complex64::new(1.0, 0.0) + ge) * 0.5;
    let nu = (Complex64::new(1.0, 0.0) - ge) * 0.5;

    let f_off = imp.cfo_ppm * 1e-6 * CARRIER_FREQ_HZ;

    let out: Vec<Complex64> = x
        .samples()
        .iter()
        .enumerate()
        .map(|(n, &s)| {
            let balanced = mu * s + nu * s.conj();
            let pa = imp.pa_a1 * balanced + imp.pa_a3 * balanced * balanced.norm_sqr();
            let rotated = if f_off == 0.0 {
                pa
            } else {
                pa * Complex64::from_polar(1.0, 2.0 * PI * f_off * n as f64 / fs)
            };
            rotated + imp.dc_offset
        })
        .collect();

    ComplexSequence::with_rate(out, fs)
}

/// Convolve with the channel taps (output truncated to the input length)
/// and add circularly-symmetric Gaussian noise at the configured SNR.
pub fn apply_channel(x: &ComplexSequence, ch: &ChannelModel) -> Result<ComplexSequence> {
    ch.validate()?;
    let samples = x.samples();
    let mut out = vec![Complex64::new(0.0, 0.0); samples.len()];
    for (n, v) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, tap) in ch.taps.iter().enumerate() {
            if let Some(i) = n.checked_sub(m) {
                acc += tap * samples[i];
            }
        }
        *v = acc;
    }

    if ch.snr_db.is_finite() {
        let sig_power =
            out.iter().map(|c| c.norm_sqr()).sum::<f64>() / out.len() as f64;
        let noise_power = sig_power * 10f64.powf(-ch.snr_db / 10.0);
        if noise_power > 0.0 {
            let sigma = (noise_power / 2.0).sqrt();
            let normal = Normal::new(0.0, sigma).expect("sigma is finite");
            let mut rng = ChaCha8Rng::seed_from_u64(ch.rng_seed);
            for v in &mut out {
                let re = normal.sample(&mut rng);
                let im = normal.sample(&mut rng);
                *v += Complex64::new(re, im);
            }
        }
    }

    match x.sample_rate_hz() {
        Some(fs) => ComplexSequence::with_rate(out, fs),
        None => ComplexSequence::new(out),
    }
}

/// Full synthetic link: reference preamble -> transmitter impairments ->
/// channel. Always returns exactly one preamble worth of samples.
pub fn simulate_received_preamble(
    device: &DeviceImpairment,
    ch: &ChannelModel,
    timing: &PreambleTiming,
) -> Result<ComplexSequence> {
    let reference =
        ComplexSequence::with_rate(reference_preamble(timing), timing.sample_rate_hz)?;
    let distorted = apply_impairments(&reference, device)?;
    let received = apply_channel(&distorted, ch)?;
    debug_assert_eq!(received.len(), timing.preamble_len);
    Ok(received)
}

/// Parameter ranges for synthetic device populations. The values reflect
/// typical consumer WiFi front-end tolerances; they only need to make
/// devices mutually distinguishable.
const CFO_PPM_RANGE: (f64, f64) = (-20.0, 20.0);
const IQ_GAIN_RANGE: (f64, f64) = (0.9, 1.1);
const IQ_PHASE_RANGE_DEG: (f64, f64) = (-5.0, 5.0);
const PA_A3_MAG_MAX: f64 = 0.05;
const DC_MAG_MAX: f64 = 0.01;

/// Draw a deterministic population of distinct devices.
pub fn sample_device_population(
    n_devices: usize,
    rng_seed: u64,
) -> Result<Vec<DeviceImpairment>> {
    if n_devices == 0 {
        return Err(Error::invalid("population must contain at least one device"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut devices = Vec::with_capacity(n_devices);
    for id in 1..=n_devices as u32 {
        let cfo_ppm = rng.random_range(CFO_PPM_RANGE.0..CFO_PPM_RANGE.1);
        let iq_gain_mismatch = rng.random_range(IQ_GAIN_RANGE.0..IQ_GAIN_RANGE.1);
        let iq_phase_mismatch_rad = rng
            .random_range(IQ_PHASE_RANGE_DEG.0..IQ_PHASE_RANGE_DEG.1)
            .to_radians();
        let pa_a3 = Complex64::from_polar(
            rng.random_range(0.0..PA_A3_MAG_MAX),
            rng.random_range(0.0..2.0 * PI),
        );
        let dc_offset = Complex64::from_polar(
            rng.random_range(0.0..DC_MAG_MAX),
            rng.random_range(0.0..2.0 * PI),
        );
        devices.push(DeviceImpairment {
            device_id: id,
            cfo_ppm,
            iq_gain_mismatch,
            iq_phase_mismatch_rad,
            pa_a1: Complex64::new(1.0, 0.0),
            pa_a3,
            dc_offset,
        });
    }
    Ok(devices)
}

/// Draw multipath taps with an exponentially decaying Rayleigh power
/// profile, normalized to unit total expected power.
pub fn draw_multipath_taps(
    n_taps: usize,
    decay_db_per_tap: f64,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    assert!(n_taps >= 1, "channel needs at least one tap");
    let powers: Vec<f64> = (0..n_taps)
        .map(|i| 10f64.powf(-decay_db_per_tap * i as f64 / 10.0))
        .collect();
    let total: f64 = powers.iter().sum();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    powers
        .iter()
        .map(|p| {
            let sigma = (p / total / 2.0).sqrt();
            Complex64::new(
                sigma * normal.sample(rng),
                sigma * normal.sample(rng),
            )
        })
        .collect()
}
