//! Channel estimation: turn received preamble IQ into per-subcarrier CSI.
//!
//! The estimator mirrors what a WiFi receiver does internally — slice the
//! flat-window portion of the long training symbol, transform it, and divide
//! by the known reference — so the synthetic CSI dataset is produced by the
//! same mechanism that loses fingerprint detail in real hardware. No CFO
//! pre-correction is applied: the offset is part of the fingerprint.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::{
    dft, lts_symbol, sts_symbol, synthesize_weighted_symbol, ComplexSequence, PreambleTiming,
};

/// One CSI measurement: 52 complex channel estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiMeasurement {
    pub h: Vec<Complex64>,
    /// Device label; 0 means unlabeled.
    pub device_id: u32,
}

impl CsiMeasurement {
    pub fn new(h: Vec<Complex64>, device_id: u32) -> Result<Self> {
        if h.len() != 52 {
            return Err(Error::invalid(format!(
                "CSI measurement must have 52 entries, got {}",
                h.len()
            )));
        }
        if h.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("CSI measurement contains non-finite values"));
        }
        Ok(Self { h, device_id })
    }
}

/// Sliding window length for burst energy detection.
const DETECT_WINDOW: usize = 16;
/// Detection threshold above the noise floor estimate.
const DETECT_THRESHOLD_DB: f64 = 6.0;
/// Quantile of window powers used as the noise floor estimate.
const NOISE_FLOOR_QUANTILE: f64 = 0.10;

/// Least-squares CSI estimate from one aligned preamble.
///
/// Slices the flat-window DFT block of the long training symbol (one guard
/// interval past the symbol boundary), transforms it, and divides bin `k`
/// by the long-symbol reference value.
pub fn estimate_csi_ls(
    rx_preamble: &ComplexSequence,
    timing: &PreambleTiming,
) -> Result<CsiMeasurement> {
    if rx_preamble.len() != timing.preamble_len {
        return Err(Error::invalid(format!(
            "expected {} preamble samples, got {}",
            timing.preamble_len,
            rx_preamble.len()
        )));
    }
    if let Some(rate) = rx_preamble.sample_rate_hz() {
        if (rate - timing.sample_rate_hz).abs() > 1e-3 * timing.sample_rate_hz {
            return Err(Error::invalid(format!(
                "preamble sampled at {rate} Hz, timing expects {} Hz",
                timing.sample_rate_hz
            )));
        }
    }

    let n_fft = timing.fft_len();
    let start = timing.symbol_len() + timing.gi2_len();
    let slice = &rx_preamble.samples()[start..start + n_fft];
    let spectrum = dft(slice, false)?;

    let lts = lts_symbol();
    let scale = 1.0 / n_fft as f64;
    let h: Vec<Complex64> = (1..=timing.n_subcarriers)
        .map(|k| spectrum[k] * scale / lts[k - 1])
        .collect();
    CsiMeasurement::new(h, 0)
}

/// MMSE CSI estimate: per-subcarrier shrinkage of the least-squares
/// estimate by `snr / (snr + 1)` under a unit-variance channel prior.
pub fn estimate_csi_mmse(
    rx_preamble: &ComplexSequence,
    timing: &PreambleTiming,
    snr_linear: f64,
) -> Result<CsiMeasurement> {
    if !(snr_linear > 0.0) {
        return Err(Error::invalid(format!(
            "snr_linear must be positive, got {snr_linear}"
        )));
    }
    let mut csi = estimate_csi_ls(rx_preamble, timing)?;
    let factor = if snr_linear.is_infinite() {
        1.0
    } else {
        snr_linear / (snr_linear + 1.0)
    };
    for v in &mut csi.h {
        *v *= factor;
    }
    Ok(csi)
}

/// Locate and align one preamble inside a longer capture.
///
/// Detection: sliding 16-sample mean power crossing 6 dB above a low-quantile
/// noise floor estimate. Alignment: cross-correlation against the reference
/// short training symbol around the detected edge. Returns the aligned
/// 320-sample slice and its offset into the capture.
pub fn extract_preamble(
    capture: &ComplexSequence,
    timing: &PreambleTiming,
) -> Result<(ComplexSequence, usize)> {
    let x = capture.samples();
    let n = x.len();
    let plen = timing.preamble_len;
    if n < plen {
        return Err(Error::invalid(format!(
            "capture of {n} samples is shorter than one preamble ({plen})"
        )));
    }

    // Sliding window powers via prefix sums.
    let mut prefix = vec![0.0f64; n + 1];
    for (i, s) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + s.norm_sqr();
    }
    let n_win = n - DETECT_WINDOW + 1;
    let power = |i: usize| (prefix[i + DETECT_WINDOW] - prefix[i]) / DETECT_WINDOW as f64;

    let mut sorted: Vec<f64> = (0..n_win).map(power).collect();
    sorted.sort_by(f64::total_cmp);
    let floor = sorted[((n_win as f64 * NOISE_FLOOR_QUANTILE) as usize).min(n_win - 1)];
    let threshold = floor * 10f64.powf(DETECT_THRESHOLD_DB / 10.0);

    let coarse = (0..n_win)
        .find(|&i| {
            let p = power(i);
            p > threshold && p > 0.0
        })
        .ok_or_else(|| Error::DetectionFailure("no energy burst above threshold".into()))?;

    // Candidate start offsets around the leading edge of the crossing window.
    let lo = coarse.saturating_sub(DETECT_WINDOW + 8);
    let hi_wanted = coarse + 2 * DETECT_WINDOW;
    if lo + plen > n {
        return Err(Error::invalid(
            "capture too short after alignment: burst runs past the end",
        ));
    }
    let hi = hi_wanted.min(n - plen);

    let ones = vec![Complex64::new(1.0, 0.0); timing.n_subcarriers];
    let sts_ref =
        synthesize_weighted_symbol(&sts_symbol(), &ones, timing, 0.0, timing.symbol_len())?;

    let mut best = lo;
    let mut best_score = f64::NEG_INFINITY;
    for off in lo..=hi {
        let score: Complex64 = sts_ref
            .iter()
            .zip(&x[off..off + sts_ref.len()])
            .map(|(r, s)| s * r.conj())
            .sum();
        let mag = score.norm_sqr();
        if mag > best_score {
            best_score = mag;
            best = off;
        }
    }

    let slice = x[best..best + plen].to_vec();
    let aligned = match capture.sample_rate_hz() {
        Some(rate) => ComplexSequence::with_rate(slice, rate)?,
        None => ComplexSequence::new(slice)?,
    };
    Ok((aligned, best))
}
