//! Two-tone waveform synthesis, undersampling at `M*m_k` Hz for one second,
//! and DFT peak picking to obtain (possibly erroneous) residue pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modmath::ModulusSet;
use crate::robust::ErroneousResidueFamily;

/// A deterministic random stream keyed by a list of words.
pub(crate) fn derived_rng(words: &[u64]) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    for (i, w) in words.iter().take(4).enumerate() {
        seed[i * 8..i * 8 + 8].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToneSpec {
    pub f1: i64,
    pub f2: i64,
    #[serde(skip)]
    pub a1: Complex64,
    #[serde(skip)]
    pub a2: Complex64,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub seed: u64,
}

impl ToneSpec {
    /// Unit amplitudes.
    pub fn new(f1: i64, f2: i64, snr_db: f64, seed: u64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            f1,
            f2,
            a1: one,
            a2: one,
            snr_db,
            seed,
        }
    }

    pub fn noiseless(f1: i64, f2: i64) -> Self {
        Self::new(f1, f2, f64::INFINITY, 0)
    }

    /// Per-sample complex noise variance, `10^(-SNR/10)`.
    pub fn noise_variance(&self) -> f64 {
        10f64.powf(-self.snr_db / 10.0)
    }
}

/// One second of `x[n] = A1 e^{2πj f1 n/rate} + A2 e^{2πj f2 n/rate} + w[n]`.
///
/// `w` is circular complex Gaussian; each modulus gets its own stream keyed
/// by `(seed, rate)`.
pub fn synthesize_samples(spec: &ToneSpec, rate: i64) -> Result<Vec<Complex64>> {
    if rate <= 0 {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be positive, got {rate}"
        )));
    }
    let n = rate as usize;
    let tone = |f: i64, k: usize| {
        // Reduce f*n modulo the rate before scaling to keep the phase exact.
        let turns = (f as i128 * k as i128).rem_euclid(rate as i128) as f64 / rate as f64;
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * turns)
    };
    let mut out: Vec<Complex64> = (0..n)
        .map(|k| spec.a1 * tone(spec.f1, k) + spec.a2 * tone(spec.f2, k))
        .collect();

    let variance = spec.noise_variance();
    if variance > 0.0 {
        let sigma = (variance / 2.0).sqrt();
        let mut rng = derived_rng(&[spec.seed, rate as u64]);
        for x in out.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *x += Complex64::new(sigma * re, sigma * im);
        }
    }
    Ok(out)
}

/// Two detected DFT bins (ascending) and their magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionResult {
    pub bins: (i64, i64),
    pub magnitudes: (f64, f64),
}

/// `rate`-point DFT and the two strongest bins.
///
/// With `allow_collision`, a top bin more than twice as strong as the
/// runner-up is reported twice (both tones on one bin).
pub fn detect_residues(samples: &[Complex64], rate: i64, allow_collision: bool) -> Result<DetectionResult> {
    if rate <= 1 || samples.len() != rate as usize {
        return Err(Error::InvalidArgument(format!(
            "expected {rate} samples (rate > 1), got {}",
            samples.len()
        )));
    }
    let mut spectrum = samples.to_vec();
    FftPlanner::<f64>::new()
        .plan_fft_forward(spectrum.len())
        .process(&mut spectrum);

    let mags: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();
    let mut order: Vec<usize> = (0..mags.len()).collect();
    order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    let (top, runner) = (order[0], order[1]);

    if allow_collision && mags[top] > 2.0 * mags[runner] {
        return Ok(DetectionResult {
            bins: (top as i64, top as i64),
            magnitudes: (mags[top], mags[top]),
        });
    }
    let (lo, hi) = if top < runner { (top, runner) } else { (runner, top) };
    Ok(DetectionResult {
        bins: (lo as i64, hi as i64),
        magnitudes: (mags[lo], mags[hi]),
    })
}

/// Detections at every rate `M*m_k`.
pub fn detect_all(spec: &ToneSpec, ms: &ModulusSet) -> Result<Vec<DetectionResult>> {
    ms.full_moduli()
        .into_iter()
        .map(|rate| detect_residues(&synthesize_samples(spec, rate)?, rate, true))
        .collect()
}

pub fn extract_family(spec: &ToneSpec, ms: &ModulusSet) -> Result<ErroneousResidueFamily> {
    let pairs = detect_all(spec, ms)?.into_iter().map(|d| d.bins).collect();
    ErroneousResidueFamily::new(ms.clone(), pairs)
}
