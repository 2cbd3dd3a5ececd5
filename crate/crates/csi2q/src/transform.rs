//! The two CSI transformations at the heart of the pipeline: cyclic shift
//! division (channel interference mitigation) and time-domain sample
//! generation (re-synthesizing a preamble-shaped 320-point signal from
//! processed CSI weights).
//!
//! Cyclic shift division exploits the fact that adjacent subcarriers see
//! nearly the same channel within one packet: dividing each estimate by its
//! cyclic predecessor cancels the common channel response while the
//! transmitter's hardware signature survives in the ratios. The ratios then
//! reweight the reference training symbols, lifting the 52-point measurement
//! into the same feature space as 320-point preamble IQ.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimate::CsiMeasurement;
use crate::signal::{preamble_from_weights, PreambleTiming};

/// Channel-mitigated CSI: ratios of adjacent subcarrier estimates.
///
/// By construction the entries telescope: their product is 1 up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedCsi {
    pub h_tilde: Vec<Complex64>,
    pub device_id: u32,
}

impl ProcessedCsi {
    pub fn new(h_tilde: Vec<Complex64>, device_id: u32) -> Result<Self> {
        if h_tilde.len() != 52 {
            return Err(Error::invalid(format!(
                "processed CSI must have 52 entries, got {}",
                h_tilde.len()
            )));
        }
        if h_tilde.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("processed CSI contains non-finite values"));
        }
        Ok(Self { h_tilde, device_id })
    }
}

/// 320-point time-domain feature vector generated from processed CSI.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub u: Vec<Complex64>,
    pub device_id: u32,
}

impl FeatureVector {
    pub fn new(u: Vec<Complex64>, device_id: u32) -> Result<Self> {
        if u.len() != 320 {
            return Err(Error::invalid(format!(
                "feature vector must have 320 entries, got {}",
                u.len()
            )));
        }
        if u.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("feature vector contains non-finite values"));
        }
        Ok(Self { u, device_id })
    }
}

/// Relative magnitude guard for cyclic shift division on this measurement.
pub fn default_cim_epsilon(h: &CsiMeasurement) -> f64 {
    let max = h.h.iter().map(|c| c.norm()).fold(0.0, f64::max);
    1e-9 * max
}

/// Cyclic shift division: `h~_k = h_k / h_{k-1}` with wraparound
/// `h~_1 = h_1 / h_52`. Rejects measurements with any entry at or below
/// `epsilon` in magnitude instead of dividing by a near-zero estimate.
pub fn cim(h: &CsiMeasurement, epsilon: f64) -> Result<ProcessedCsi> {
    if let Some(k) = h.h.iter().position(|c| c.norm() <= epsilon) {
        return Err(Error::DegenerateInput(format!(
            "subcarrier {} magnitude {} is at or below epsilon {epsilon}",
            k + 1,
            h.h[k].norm()
        )));
    }
    let n = h.h.len();
    let h_tilde: Vec<Complex64> = (0..n)
        .map(|k| {
            let prev = if k == 0 { n - 1 } else { k - 1 };
            h.h[k] / h.h[prev]
        })
        .collect();
    ProcessedCsi::new(h_tilde, h.device_id)
}

/// Time-domain sample generation: use the processed CSI as per-subcarrier
/// weights on the short and long training symbols and sample the composite
/// preamble on the 20 Msps grid.
pub fn tdsg(processed: &ProcessedCsi, timing: &PreambleTiming) -> Result<FeatureVector> {
    let u = preamble_from_weights(&processed.h_tilde, timing)?;
    FeatureVector::new(u, processed.device_id)
}

/// Full transformation: cyclic shift division followed by time-domain
/// sample generation. With `skip_cim` the raw measurement is reinterpreted
/// directly as synthesis weights (the ablation arm that keeps the channel
/// in the generated signal).
pub fn transform_pipeline(
    h: &CsiMeasurement,
    timing: &PreambleTiming,
    epsilon: f64,
    skip_cim: bool,
) -> Result<FeatureVector> {
    if skip_cim {
        let u = preamble_from_weights(&h.h, timing)?;
        FeatureVector::new(u, h.device_id)
    } else {
        tdsg(&cim(h, epsilon)?, timing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::reference_preamble;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_csi(seed: u64) -> CsiMeasurement {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = (0..52)
            .map(|_| {
                Complex64::from_polar(rng.random_range(0.1..2.0), rng.random_range(0.0..2.0 * PI))
            })
            .collect();
        CsiMeasurement::new(h, 1).unwrap()
    }

    #[test]
    fn flat_channel_divides_to_unity() {
        let c = Complex64::new(-0.4, 2.2);
        let h = CsiMeasurement::new(vec![c; 52], 3).unwrap();
        let p = cim(&h, default_cim_epsilon(&h)).unwrap();
        assert_eq!(p.device_id, 3);
        for v in &p.h_tilde {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn geometric_measurement_telescopes() {
        let h = CsiMeasurement::new(
            (0..52).map(|k| Complex64::new(2f64.powi(k), 0.0)).collect(),
            1,
        )
        .unwrap();
        let p = cim(&h, 0.0).unwrap();
        for v in &p.h_tilde[1..] {
            assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
        assert!((p.h_tilde[0].re - 2f64.powi(-51)).abs() < 1e-24);
    }

    #[test]
    fn telescoping_product_is_one() {
        for seed in 0..50 {
            let h = random_csi(seed);
            let p = cim(&h, default_cim_epsilon(&h)).unwrap();
            let prod = p
                .h_tilde
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, v| acc * v);
            assert!(
                (prod - Complex64::new(1.0, 0.0)).norm() < 1e-9,
                "seed {seed}: product {prod}"
            );
        }
    }

    #[test]
    fn near_zero_entry_is_degenerate() {
        let mut h = random_csi(9);
        h.h[17] = Complex64::new(1e-15, 0.0);
        assert!(matches!(
            cim(&h, default_cim_epsilon(&h)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn unit_weights_reproduce_reference_preamble() {
        let timing = PreambleTiming::default();
        let p = ProcessedCsi::new(vec![Complex64::new(1.0, 0.0); 52], 2).unwrap();
        let fv = tdsg(&p, &timing).unwrap();
        let reference = reference_preamble(&timing);
        for (a, b) in fv.u.iter().zip(reference.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn tdsg_is_homogeneous_in_weights() {
        let timing = PreambleTiming::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w: Vec<Complex64> = (0..52)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let alpha = Complex64::new(0.6, -1.1);
        let base = tdsg(&ProcessedCsi::new(w.clone(), 1).unwrap(), &timing).unwrap();
        let scaled = tdsg(
            &ProcessedCsi::new(w.iter().map(|v| v * alpha).collect(), 1).unwrap(),
            &timing,
        )
        .unwrap();
        for (a, b) in base.u.iter().zip(scaled.u.iter()) {
            assert!((a * alpha - b).norm() < 1e-10);
        }
    }

    #[test]
    fn pipeline_flat_input_variants() {
        let timing = PreambleTiming::default();
        let reference = reference_preamble(&timing);
        let c = Complex64::new(0.0, 2.0);

        let ones = CsiMeasurement::new(vec![Complex64::new(1.0, 0.0); 52], 1).unwrap();
        let fv = transform_pipeline(&ones, &timing, default_cim_epsilon(&ones), false).unwrap();
        for (a, b) in fv.u.iter().zip(reference.iter()) {
            assert!((a - b).norm() < 1e-12);
        }

        let flat = CsiMeasurement::new(vec![c; 52], 1).unwrap();
        let fv = transform_pipeline(&flat, &timing, default_cim_epsilon(&flat), false).unwrap();
        for (a, b) in fv.u.iter().zip(reference.iter()) {
            assert!((a - b).norm() < 1e-10, "CIM should remove the flat scale");
        }

        let fv = transform_pipeline(&flat, &timing, default_cim_epsilon(&flat), true).unwrap();
        for (a, b) in fv.u.iter().zip(reference.iter()) {
            assert!((a - b * c).norm() < 1e-10, "skip_cim keeps the scale");
        }
    }
}
