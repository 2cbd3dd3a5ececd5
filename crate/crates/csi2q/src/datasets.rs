//! Dataset containers, deterministic splits, the on-disk format, synthetic
//! dataset generation, and ingestion of externally supplied raw IQ captures.
//!
//! On-disk layout (little-endian): magic `C2QD`, version `u16`, kind `u8`
//! (0 = iq, 1 = csi, 2 = feature), device count `u32`, total samples `u32`,
//! then per sample `device_id u32`, `sample_len u32`, and `sample_len`
//! float32 (re, im) pairs. Values are stored at 32-bit precision and
//! promoted to 64-bit in memory. Each dataset may carry a JSON manifest
//! sidecar describing how it was generated.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimate::{estimate_csi_ls, estimate_csi_mmse, extract_preamble};
use crate::impairment::{
    draw_multipath_taps, sample_device_population, simulate_received_preamble, ChannelModel,
};
use crate::signal::{resample_rational, ComplexSequence, PreambleTiming};

const MAGIC: &[u8; 4] = b"C2QD";
const FORMAT_VERSION: u16 = 1;

/// What a sample set holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleKind {
    /// 320-point received IQ.
    Iq,
    /// 52-point CSI measurements.
    Csi,
    /// 320-point generated feature vectors.
    Feature,
}

impl SampleKind {
    /// Expected per-sample length.
    pub fn sample_len(self) -> usize {
        match self {
            SampleKind::Iq | SampleKind::Feature => 320,
            SampleKind::Csi => 52,
        }
    }

    fn code(self) -> u8 {
        match self {
            SampleKind::Iq => 0,
            SampleKind::Csi => 1,
            SampleKind::Feature => 2,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(SampleKind::Iq),
            1 => Some(SampleKind::Csi),
            2 => Some(SampleKind::Feature),
            _ => None,
        }
    }
}

/// One labeled sample: a device id and its complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub device_id: u32,
    pub values: Vec<Complex64>,
}

/// Uniform collection of labeled samples with device ids dense in
/// `1..=device_count`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSampleSet {
    pub kind: SampleKind,
    samples: Vec<LabeledSample>,
    pub device_count: u32,
}

impl LabeledSampleSet {
    pub fn new(kind: SampleKind, samples: Vec<LabeledSample>, device_count: u32) -> Result<Self> {
        if device_count == 0 {
            return Err(Error::invalid("device_count must be positive"));
        }
        let expected = kind.sample_len();
        let mut seen = vec![false; device_count as usize];
        for (i, s) in samples.iter().enumerate() {
            if s.values.len() != expected {
                return Err(Error::invalid(format!(
                    "sample {i} has length {}, expected {expected} for {kind:?}",
                    s.values.len()
                )));
            }
            if s.device_id == 0 || s.device_id > device_count {
                return Err(Error::invalid(format!(
                    "sample {i} has device id {} outside 1..={device_count}",
                    s.device_id
                )));
            }
            seen[(s.device_id - 1) as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|&p| !p) {
            return Err(Error::invalid(format!(
                "device {} has no samples",
                missing + 1
            )));
        }
        Ok(Self {
            kind,
            samples,
            device_count,
        })
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Indices of every sample per device, in stored order.
    fn indices_by_device(&self) -> Vec<Vec<usize>> {
        let mut by_device = vec![Vec::new(); self.device_count as usize];
        for (i, s) in self.samples.iter().enumerate() {
            by_device[(s.device_id - 1) as usize].push(i);
        }
        by_device
    }
}

/// Channel drawing parameters used when generating synthetic packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub n_taps: usize,
    pub tap_decay_db: f64,
    /// Per-packet SNR is drawn uniformly from this range; set both bounds to
    /// `null` (None) to disable noise.
    pub snr_db_min: Option<f64>,
    pub snr_db_max: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            n_taps: 3,
            tap_decay_db: 3.0,
            snr_db_min: Some(15.0),
            snr_db_max: Some(25.0),
        }
    }
}

impl ChannelConfig {
    pub fn noiseless(n_taps: usize) -> Self {
        Self {
            n_taps,
            tap_decay_db: 3.0,
            snr_db_min: None,
            snr_db_max: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_taps == 0 {
            return Err(Error::invalid("channel needs at least one tap"));
        }
        match (self.snr_db_min, self.snr_db_max) {
            (Some(lo), Some(hi)) if lo > hi => Err(Error::invalid(format!(
                "snr range is inverted: {lo} > {hi}"
            ))),
            (Some(_), None) | (None, Some(_)) => Err(Error::invalid(
                "snr_db_min and snr_db_max must both be set or both be null",
            )),
            _ => Ok(()),
        }
    }
}

/// Which channel estimator produces the CSI side of a synthetic pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ls,
    Mmse { snr_linear: f64 },
}

/// Manifest written alongside a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u16,
    pub kind: SampleKind,
    pub device_count: u32,
    pub total_samples: u32,
    pub samples_per_device: Option<u32>,
    pub seed: Option<u64>,
    pub channel: Option<ChannelConfig>,
    pub estimator: Option<Estimator>,
}

// splitmix64 finalizer; used to derive independent per-packet seeds.
fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(b.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generate packet-aligned IQ and CSI sets: for every device and packet, a
/// fresh channel draw feeds one simulated preamble; the IQ sample is the
/// received waveform and the CSI sample is estimated from that same
/// waveform, so index `n` of both sets shares provenance.
pub fn generate_synthetic_pair(
    n_devices: usize,
    samples_per_device: usize,
    channel_cfg: &ChannelConfig,
    estimator: Estimator,
    seed: u64,
) -> Result<(LabeledSampleSet, LabeledSampleSet)> {
    if n_devices < 2 {
        return Err(Error::invalid("need at least two devices"));
    }
    if samples_per_device == 0 {
        return Err(Error::invalid("need at least one sample per device"));
    }
    channel_cfg.validate()?;
    if let Estimator::Mmse { snr_linear } = estimator {
        if !(snr_linear > 0.0) {
            return Err(Error::invalid("mmse snr_linear must be positive"));
        }
    }

    let timing = PreambleTiming::default();
    let devices = sample_device_population(n_devices, mix_seed(seed, 0, 0))?;

    let mut iq = Vec::with_capacity(n_devices * samples_per_device);
    let mut csi = Vec::with_capacity(n_devices * samples_per_device);
    for device in &devices {
        for packet in 0..samples_per_device {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix_seed(seed, device.device_id as u64, packet as u64 + 1));
            let taps = draw_multipath_taps(channel_cfg.n_taps, channel_cfg.tap_decay_db, &mut rng);
            let snr_db = match (channel_cfg.snr_db_min, channel_cfg.snr_db_max) {
                (Some(lo), Some(hi)) if lo < hi => rng.random_range(lo..hi),
                (Some(lo), Some(_)) => lo,
                _ => f64::INFINITY,
            };
            let ch = ChannelModel {
                taps,
                snr_db,
                rng_seed: rng.random(),
            };
            let rx = simulate_received_preamble(device, &ch, &timing)?;
            let mut measurement = match estimator {
                Estimator::Ls => estimate_csi_ls(&rx, &timing)?,
                Estimator::Mmse { snr_linear } => estimate_csi_mmse(&rx, &timing, snr_linear)?,
            };
            measurement.device_id = device.device_id;
            iq.push(LabeledSample {
                device_id: device.device_id,
                values: rx.into_samples(),
            });
            csi.push(LabeledSample {
                device_id: device.device_id,
                values: measurement.h,
            });
        }
    }

    Ok((
        LabeledSampleSet::new(SampleKind::Iq, iq, n_devices as u32)?,
        LabeledSampleSet::new(SampleKind::Csi, csi, n_devices as u32)?,
    ))
}

/// Per-device stratified random split. Each device contributes
/// `floor(fraction * n)` samples to the train side; the partition is
/// disjoint, exhaustive, and fully determined by the seed and the set's
/// per-device structure.
pub fn split(
    set: &LabeledSampleSet,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledSampleSet, LabeledSampleSet)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let by_device = set.indices_by_device();
    for (d, idx) in by_device.iter().enumerate() {
        if idx.len() < 2 {
            return Err(Error::invalid(format!(
                "device {} has {} sample(s); need at least 2 to split",
                d + 1,
                idx.len()
            )));
        }
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (d, idx) in by_device.iter().enumerate() {
        let mut order = idx.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, d as u64 + 1, 0x73706c6974));
        order.shuffle(&mut rng);
        // Tiny bias keeps exact fractions (like 0.8 * 300) from rounding down.
        let n_train = (train_fraction * idx.len() as f64 + 1e-9).floor() as usize;
        train_idx.extend_from_slice(&order[..n_train]);
        test_idx.extend_from_slice(&order[n_train..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();

    let gather = |indices: &[usize]| -> Vec<LabeledSample> {
        indices.iter().map(|&i| set.samples[i].clone()).collect()
    };
    Ok((
        LabeledSampleSet::new(set.kind, gather(&train_idx), set.device_count)?,
        LabeledSampleSet::new(set.kind, gather(&test_idx), set.device_count)?,
    ))
}

/// Serialize a set to the binary dataset format.
pub fn save(set: &LabeledSampleSet, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(15 + set.len() * (8 + set.kind.sample_len() * 8));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(set.kind.code());
    buf.extend_from_slice(&set.device_count.to_le_bytes());
    buf.extend_from_slice(&(set.len() as u32).to_le_bytes());
    for s in &set.samples {
        buf.extend_from_slice(&s.device_id.to_le_bytes());
        buf.extend_from_slice(&(s.values.len() as u32).to_le_bytes());
        for v in &s.values {
            buf.extend_from_slice(&(v.re as f32).to_le_bytes());
            buf.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(
                self.pos as u64,
                format!(
                    "truncated while reading {what}: need {} bytes, file has {}",
                    self.pos + n,
                    self.buf.len()
                ),
            ));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
}

/// Load a set from the binary dataset format, promoting stored 32-bit floats
/// to 64-bit values.
pub fn load(path: &Path) -> Result<LabeledSampleSet> {
    let buf = fs::read(path)?;
    let mut r = Reader { buf: &buf, pos: 0 };

    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::format(0, format!("bad magic {magic:02x?}")));
    }
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::format(
            4,
            format!("unsupported version {version}, expected {FORMAT_VERSION}"),
        ));
    }
    let kind_code = r.u8("kind")?;
    let kind = SampleKind::from_code(kind_code)
        .ok_or_else(|| Error::format(6, format!("unknown kind code {kind_code}")))?;
    let device_count = r.u32("device count")?;
    let total = r.u32("sample count")?;

    let mut samples = Vec::with_capacity(total as usize);
    for i in 0..total {
        let device_id = r.u32("device id")?;
        let sample_len = r.u32("sample length")? as usize;
        if sample_len != kind.sample_len() {
            return Err(Error::format(
                (r.pos - 4) as u64,
                format!(
                    "sample {i} has length {sample_len}, expected {} for {kind:?}",
                    kind.sample_len()
                ),
            ));
        }
        let raw = r.take(sample_len * 8, "sample payload")?;
        let values = raw
            .chunks_exact(8)
            .map(|c| {
                Complex64::new(
                    f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                    f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
                )
            })
            .collect();
        samples.push(LabeledSample { device_id, values });
    }
    if r.pos != buf.len() {
        return Err(Error::format(
            r.pos as u64,
            format!("{} trailing bytes after payload", buf.len() - r.pos),
        ));
    }
    LabeledSampleSet::new(kind, samples, device_count)
        .map_err(|e| Error::format(15, format!("inconsistent payload: {e}")))
}

/// Write the JSON manifest sidecar for a dataset file.
pub fn save_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::invalid(format!("manifest serialization failed: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

/// Read a JSON manifest sidecar.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(0, format!("bad manifest: {e}")))
}

/// Result of ingesting one raw capture file.
#[derive(Debug, Clone)]
pub struct IngestOutcome {
    pub samples: Vec<LabeledSample>,
    pub warnings: Vec<String>,
}

/// Samples skipped after each extracted burst; absorbs window ramp residue,
/// channel tails, and resampling filter spread so they are not re-detected.
const INGEST_POST_BURST_GUARD: usize = 32;

/// Ingest a headerless interleaved little-endian float32 I/Q capture:
/// resample to the preamble rate, then repeatedly detect, align, and emit
/// one labeled 320-point sample per burst.
pub fn ingest_capture(path: &Path, capture_rate_hz: f64, label: u32) -> Result<IngestOutcome> {
    let timing = PreambleTiming::default();
    let buf = fs::read(path)?;
    if buf.is_empty() {
        return Err(Error::format(0, "zero-length capture file"));
    }
    if buf.len() % 8 != 0 {
        return Err(Error::format(
            (buf.len() - buf.len() % 8) as u64,
            format!(
                "capture length {} is not a whole number of float32 I/Q pairs",
                buf.len()
            ),
        ));
    }
    if capture_rate_hz < timing.sample_rate_hz {
        return Err(Error::invalid(format!(
            "capture rate {capture_rate_hz} Hz is below the preamble rate {}",
            timing.sample_rate_hz
        )));
    }
    if capture_rate_hz.fract() != 0.0 {
        return Err(Error::invalid(
            "capture rate must be an integer number of Hz",
        ));
    }

    let raw: Vec<Complex64> = buf
        .chunks_exact(8)
        .map(|c| {
            Complex64::new(
                f32::from_le_bytes(c[0..4].try_into().unwrap()) as f64,
                f32::from_le_bytes(c[4..8].try_into().unwrap()) as f64,
            )
        })
        .collect();

    let target = timing.sample_rate_hz as u64;
    let source = capture_rate_hz as u64;
    let g = gcd_u64(target, source);
    let resampled = resample_rational(&raw, (target / g) as usize, (source / g) as usize)?;

    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    let mut cursor = 0usize;
    while resampled.len() - cursor >= timing.preamble_len {
        let tail = ComplexSequence::with_rate(
            resampled[cursor..].to_vec(),
            timing.sample_rate_hz,
        )?;
        match extract_preamble(&tail, &timing) {
            Ok((aligned, offset)) => {
                samples.push(LabeledSample {
                    device_id: label,
                    values: aligned.into_samples(),
                });
                cursor += offset + timing.preamble_len + INGEST_POST_BURST_GUARD;
            }
            Err(Error::DetectionFailure(_)) => break,
            Err(Error::InvalidArgument(msg)) => {
                warnings.push(format!("stopped at sample {cursor}: {msg}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if samples.is_empty() {
        warnings.push("no bursts detected in capture".into());
    }
    Ok(IngestOutcome { samples, warnings })
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::reference_preamble;

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    fn small_pair() -> (LabeledSampleSet, LabeledSampleSet) {
        generate_synthetic_pair(2, 3, &ChannelConfig::default(), Estimator::Ls, 42).unwrap()
    }

    #[test]
    fn pair_counts_and_alignment() {
        let (iq, csi) = small_pair();
        assert_eq!(iq.len(), 6);
        assert_eq!(csi.len(), 6);
        assert_eq!(iq.kind, SampleKind::Iq);
        assert_eq!(csi.kind, SampleKind::Csi);
        let timing = PreambleTiming::default();
        for (i, c) in iq.samples().iter().zip(csi.samples()) {
            assert_eq!(i.device_id, c.device_id);
            // The stored CSI regenerates bit-exactly from the stored IQ.
            let rx =
                ComplexSequence::with_rate(i.values.clone(), timing.sample_rate_hz).unwrap();
            let re = estimate_csi_ls(&rx, &timing).unwrap();
            assert_eq!(re.h, c.values);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let (a_iq, a_csi) = small_pair();
        let (b_iq, b_csi) = small_pair();
        assert_eq!(a_iq, b_iq);
        assert_eq!(a_csi, b_csi);
    }

    #[test]
    fn ideal_link_gives_unit_csi() {
        let timing = PreambleTiming::default();
        let rx = simulate_received_preamble(
            &crate::impairment::DeviceImpairment::identity(1),
            &ChannelModel::ideal(),
            &timing,
        )
        .unwrap();
        let csi = estimate_csi_ls(&rx, &timing).unwrap();
        for h in &csi.h {
            assert!((h - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn rejects_degenerate_generation_args() {
        let cfg = ChannelConfig::default();
        assert!(matches!(
            generate_synthetic_pair(1, 3, &cfg, Estimator::Ls, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            generate_synthetic_pair(2, 0, &cfg, Estimator::Ls, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn split_is_stratified_disjoint_exhaustive() {
        let (_, csi) = generate_synthetic_pair(
            3,
            10,
            &ChannelConfig::noiseless(2),
            Estimator::Ls,
            7,
        )
        .unwrap();
        let (train, test) = split(&csi, 0.8, 5).unwrap();
        assert_eq!(train.len(), 24);
        assert_eq!(test.len(), 6);
        for d in 1..=3u32 {
            assert_eq!(
                train.samples().iter().filter(|s| s.device_id == d).count(),
                8
            );
            assert_eq!(
                test.samples().iter().filter(|s| s.device_id == d).count(),
                2
            );
        }
        // Disjoint and exhaustive by sample identity.
        let mut all: Vec<&LabeledSample> =
            train.samples().iter().chain(test.samples()).collect();
        assert_eq!(all.len(), csi.len());
        for s in csi.samples() {
            let pos = all
                .iter()
                .position(|t| **t == *s)
                .expect("sample lost by split");
            all.remove(pos);
        }
        assert!(all.is_empty());
    }

    #[test]
    fn split_paper_scale_is_240_60() {
        let samples: Vec<LabeledSample> = (0..300)
            .flat_map(|p| {
                (1..=2u32).map(move |d| LabeledSample {
                    device_id: d,
                    values: vec![Complex64::new(p as f64, 0.0); 52],
                })
            })
            .collect();
        let set = LabeledSampleSet::new(SampleKind::Csi, samples, 2).unwrap();
        let (train, test) = split(&set, 0.8, 1).unwrap();
        for d in 1..=2u32 {
            assert_eq!(
                train.samples().iter().filter(|s| s.device_id == d).count(),
                240
            );
            assert_eq!(
                test.samples().iter().filter(|s| s.device_id == d).count(),
                60
            );
        }
    }

    #[test]
    fn split_is_deterministic() {
        let (_, csi) = small_pair();
        let a = split(&csi, 0.5, 9).unwrap();
        let b = split(&csi, 0.5, 9).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn split_rejects_undersized_devices() {
        let samples = vec![
            LabeledSample {
                device_id: 1,
                values: vec![Complex64::new(1.0, 0.0); 52],
            },
            LabeledSample {
                device_id: 2,
                values: vec![Complex64::new(1.0, 0.0); 52],
            },
            LabeledSample {
                device_id: 2,
                values: vec![Complex64::new(2.0, 0.0); 52],
            },
        ];
        let set = LabeledSampleSet::new(SampleKind::Csi, samples, 2).unwrap();
        assert!(matches!(
            split(&set, 0.5, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tmpdir();
        let (iq, csi) = small_pair();
        for (name, set) in [("iq", &iq), ("csi", &csi)] {
            let path = dir.path().join(format!("{name}.c2qd"));
            save(set, &path).unwrap();
            let loaded = load(&path).unwrap();
            assert_eq!(loaded.kind, set.kind);
            assert_eq!(loaded.device_count, set.device_count);
            assert_eq!(loaded.len(), set.len());
            // Values round only to storage precision; a second save is
            // byte-identical.
            let path2 = dir.path().join(format!("{name}2.c2qd"));
            save(&loaded, &path2).unwrap();
            assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
            for (a, b) in set.samples().iter().zip(loaded.samples()) {
                assert_eq!(a.device_id, b.device_id);
                for (x, y) in a.values.iter().zip(&b.values) {
                    assert_eq!(x.re as f32, y.re as f32);
                    assert_eq!(x.im as f32, y.im as f32);
                }
            }
        }
    }

    #[test]
    fn load_rejects_bad_magic() {
        let dir = tmpdir();
        let path = dir.path().join("bad.c2qd");
        fs::write(&path, b"NOPE0000000000000000").unwrap();
        match load(&path) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_truncation_with_byte_counts() {
        let dir = tmpdir();
        let (iq, _) = small_pair();
        let path = dir.path().join("iq.c2qd");
        save(&iq, &path).unwrap();
        let full = fs::read(&path).unwrap();
        let cut = &full[..full.len() - 7];
        let path2 = dir.path().join("cut.c2qd");
        fs::write(&path2, cut).unwrap();
        match load(&path2) {
            Err(Error::Format { reason, .. }) => {
                assert!(
                    reason.contains("need") && reason.contains(&cut.len().to_string()),
                    "unhelpful truncation message: {reason}"
                );
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_wrong_version() {
        let dir = tmpdir();
        let (iq, _) = small_pair();
        let path = dir.path().join("iq.c2qd");
        save(&iq, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[4] = 99;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tmpdir();
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            kind: SampleKind::Csi,
            device_count: 10,
            total_samples: 3000,
            samples_per_device: Some(300),
            seed: Some(7),
            channel: Some(ChannelConfig::default()),
            estimator: Some(Estimator::Ls),
        };
        let path = dir.path().join("csi.c2qd.json");
        save_manifest(&manifest, &path).unwrap();
        assert_eq!(load_manifest(&path).unwrap(), manifest);
    }

    /// Write a capture of interleaved f32 I/Q pairs.
    fn write_capture(path: &Path, samples: &[Complex64]) {
        let mut buf = Vec::with_capacity(samples.len() * 8);
        for s in samples {
            buf.extend_from_slice(&(s.re as f32).to_le_bytes());
            buf.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        fs::write(path, buf).unwrap();
    }

    /// Evaluate the continuous-time preamble formula on an arbitrary grid —
    /// independent of the library's fixed-rate synthesis path.
    fn preamble_at_rate(rate: f64) -> Vec<Complex64> {
        use crate::signal::{lts_symbol, sts_symbol, window_value};
        use std::f64::consts::PI;
        let timing = PreambleTiming::default();
        let n = (2.0 * timing.symbol_period_s * rate).round() as usize;
        let sts = sts_symbol();
        let lts = lts_symbol();
        (0..n)
            .map(|i| {
                let t = i as f64 / rate;
                let mut acc = Complex64::new(0.0, 0.0);
                let ws = window_value(t, &timing);
                if ws != 0.0 {
                    for (k, s) in sts.iter().enumerate() {
                        let angle = 2.0 * PI * (k + 1) as f64 * timing.delta_f_hz * t;
                        acc += ws * s * Complex64::from_polar(1.0, angle);
                    }
                }
                let tl = t - timing.symbol_period_s;
                let wl = window_value(tl, &timing);
                if wl != 0.0 {
                    for (k, l) in lts.iter().enumerate() {
                        let angle = 2.0
                            * PI
                            * (k + 1) as f64
                            * timing.delta_f_hz
                            * (tl - timing.t_gi2_s);
                        acc += wl * l * Complex64::from_polar(1.0, angle);
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn ingest_finds_all_bursts_at_25_msps() {
        let dir = tmpdir();
        let rate = 25e6;
        let burst = preamble_at_rate(rate);
        let gap = vec![Complex64::new(0.0, 0.0); 500];
        let mut capture = Vec::new();
        for _ in 0..5 {
            capture.extend_from_slice(&gap);
            capture.extend_from_slice(&burst);
        }
        capture.extend_from_slice(&gap);
        let path = dir.path().join("cap25.bin");
        write_capture(&path, &capture);

        let outcome = ingest_capture(&path, rate, 4).unwrap();
        assert_eq!(
            outcome.samples.len(),
            5,
            "warnings: {:?}",
            outcome.warnings
        );
        for s in &outcome.samples {
            assert_eq!(s.device_id, 4);
            assert_eq!(s.values.len(), 320);
        }
    }

    #[test]
    fn ingest_at_native_rate_equals_direct_extraction() {
        let dir = tmpdir();
        let timing = PreambleTiming::default();
        let reference = reference_preamble(&timing);
        let mut capture = vec![Complex64::new(0.0, 0.0); 200];
        capture.extend_from_slice(&reference);
        capture.extend(vec![Complex64::new(0.0, 0.0); 200]);
        let path = dir.path().join("cap20.bin");
        write_capture(&path, &capture);

        let outcome = ingest_capture(&path, 20e6, 1).unwrap();
        assert_eq!(outcome.samples.len(), 1);
        // Identity resampling path: values match the f32-rounded reference.
        for (a, b) in outcome.samples[0].values.iter().zip(reference.iter()) {
            assert_eq!(a.re, b.re as f32 as f64);
            assert_eq!(a.im, b.im as f32 as f64);
        }
    }

    #[test]
    fn ingest_rejects_empty_file() {
        let dir = tmpdir();
        let path = dir.path().join("empty.bin");
        fs::write(&path, b"").unwrap();
        assert!(matches!(
            ingest_capture(&path, 25e6, 1),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn ingest_reports_zero_bursts_with_warning() {
        let dir = tmpdir();
        let path = dir.path().join("quiet.bin");
        write_capture(&path, &vec![Complex64::new(0.0, 0.0); 2000]);
        let outcome = ingest_capture(&path, 20e6, 1).unwrap();
        assert!(outcome.samples.is_empty());
        assert_eq!(outcome.warnings.len(), 1);
    }
}
