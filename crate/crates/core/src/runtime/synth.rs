//! Synthetic speaker pairs with a known spectral difference.
//!
//! The source is a harmonic tone with a wandering pitch plus coloured noise
//! under a slow amplitude envelope. The target is the source passed through
//! the minimum-phase filter of a fixed differential cepstrum (two
//! resonances, one anti-resonance and a tilt), plus a little white noise.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::cepstrum::{reconstruct_spectrum, CepstrumVector, Lifter};
use crate::error::Result;
use crate::filter::filter_from_spectrum;
use crate::spectral::{AnalysisConfig, Waveform};
use crate::train::{prepare_pair, AlignedPair, FrameSet};

/// Peak level both waveforms of a pair are scaled to.
const PAIR_PEAK: f64 = 0.9;
const TARGET_NOISE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticTask {
    pub analysis: AnalysisConfig,
    /// Ground-truth differential cepstrum, `cep_dim` long.
    pub differential: Vec<f64>,
    /// Its full-length (`fft_len`) minimum-phase impulse response.
    pub filter: Vec<f64>,
}

/// `2 r^n cos(nθ) / n`: cepstrum of a conjugate pole pair.
fn resonance(r: f64, freq_hz: f64, sample_rate: f64, n: usize) -> f64 {
    let theta = 2.0 * PI * freq_hz / sample_rate;
    2.0 * r.powi(n as i32) * (n as f64 * theta).cos() / n as f64
}

impl SyntheticTask {
    pub fn new(cfg: &AnalysisConfig) -> Result<Self> {
        cfg.validate()?;
        let sr = cfg.sample_rate as f64;
        // radii are specified at 16 kHz; keep bandwidths fixed in Hz
        let r = |r16: f64| r16.powf(16_000.0 / sr);
        let mut differential = vec![0.0; cfg.cep_dim];
        differential[0] = 0.1;
        for (n, d) in differential.iter_mut().enumerate().skip(1) {
            *d = resonance(r(0.88), 1200.0, sr, n) - resonance(r(0.85), 3000.0, sr, n)
                + r(0.5).powi(n as i32) / n as f64
                + 0.5 * resonance(r(0.96), 5000.0, sr, n);
        }
        let spectrum = reconstruct_spectrum(
            &CepstrumVector::new(differential.clone()),
            &Lifter::minimum_phase(cfg)?,
            cfg,
        )?;
        let filter = filter_from_spectrum(&spectrum, 0).0.taps;
        Ok(Self {
            analysis: *cfg,
            differential,
            filter,
        })
    }

    pub fn source(&self, seconds: f64, rng: &mut ChaCha8Rng) -> Result<Waveform> {
        let sr = self.analysis.sample_rate as f64;
        let len = (seconds * sr).round() as usize;
        let f0_phase = rng.gen_range(0.0..2.0 * PI);
        let env_phase = rng.gen_range(0.0..2.0 * PI);
        let mut phase = 0.0;
        let mut ar = 0.0;
        let mut samples = Vec::with_capacity(len);
        for i in 0..len {
            let t = i as f64 / sr;
            let f0 = 120.0 + 30.0 * (2.0 * PI * 0.5 * t + f0_phase).sin();
            phase += 2.0 * PI * f0 / sr;
            let harmonics: f64 = (1..40)
                .take_while(|&k| k as f64 * 150.0 < sr / 2.0)
                .map(|k| (k as f64 * phase).sin() / k as f64)
                .sum();
            let white: f64 = rng.sample(StandardNormal);
            ar = 0.05 * white + 0.9 * ar;
            let env = 0.5 + 0.5 * (2.0 * PI * 3.0 * t + env_phase).sin().powi(2);
            samples.push((0.1 * harmonics + 0.2 * ar) * env);
        }
        Waveform::new(samples, self.analysis.sample_rate)
    }

    /// Source convolved with the ground-truth filter, truncated to the
    /// source length, plus white noise.
    pub fn target(&self, source: &Waveform, rng: &mut ChaCha8Rng) -> Result<Waveform> {
        let x = &source.samples;
        let samples = (0..x.len())
            .map(|n| {
                let taps = self.filter.len().min(n + 1);
                let y: f64 = (0..taps).map(|k| self.filter[k] * x[n - k]).sum();
                let noise: f64 = rng.sample(StandardNormal);
                y + TARGET_NOISE * noise
            })
            .collect();
        Waveform::new(samples, source.sample_rate)
    }

    /// A source/target pair scaled together so the louder peak is 0.9.
    pub fn pair(&self, seconds: f64, rng: &mut ChaCha8Rng) -> Result<(Waveform, Waveform)> {
        let mut x = self.source(seconds, rng)?;
        let mut y = self.target(&x, rng)?;
        let peak = x.samples.iter().chain(&y.samples).fold(0.0f64, |m, s| m.max(s.abs()));
        if peak > 0.0 {
            let g = PAIR_PEAK / peak;
            x.samples.iter_mut().chain(y.samples.iter_mut()).for_each(|s| *s *= g);
        }
        Ok((x, y))
    }

    /// `count` aligned pairs of `seconds` each, reproducible from `seed`.
    pub fn aligned_pairs(&self, count: usize, seconds: f64, seed: u64, silence_db: f64) -> Result<Vec<AlignedPair>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let (x, y) = self.pair(seconds, &mut rng)?;
                prepare_pair(&x, &y, &self.analysis, silence_db)
            })
            .collect()
    }

    pub fn frame_set(&self, count: usize, seconds: f64, seed: u64, silence_db: f64) -> Result<FrameSet> {
        FrameSet::from_pairs(&self.aligned_pairs(count, seconds, seed, silence_db)?, &self.analysis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::DifferentialFilter;

    #[test]
    fn ground_truth_filter_is_compact() {
        let task = SyntheticTask::new(&AnalysisConfig::narrow_band()).unwrap();
        let curve = DifferentialFilter::new(task.filter.clone(), 0).cumulative_power();
        assert!(curve[31] > 0.98 && curve[31] < 0.999, "{}", curve[31]);
        assert!(curve[127] > 0.9999);
    }

    #[test]
    fn target_is_the_filtered_source() {
        let cfg = AnalysisConfig::narrow_band();
        let task = SyntheticTask::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y) = task.pair(0.5, &mut rng).unwrap();
        assert_eq!(x.len(), 8000);
        assert_eq!(y.len(), 8000);
        let peak = x.samples.iter().chain(&y.samples).fold(0.0f64, |m, s| m.max(s.abs()));
        assert!((peak - 0.9).abs() < 1e-12);
        // mean cepstral difference approximates the ground truth
        let pair = prepare_pair(&x, &y, &cfg, 40.0).unwrap();
        let d = (&pair.target_cep - &pair.source_cep).mean_axis(ndarray::Axis(0)).unwrap();
        let err: f64 = d.iter().zip(&task.differential).skip(1).map(|(a, b)| (a - b).powi(2)).sum();
        let norm: f64 = task.differential.iter().skip(1).map(|v| v * v).sum();
        assert!(err < 0.05 * norm, "{err} vs {norm}");
    }

    #[test]
    fn reproducible_from_seed() {
        let task = SyntheticTask::new(&AnalysisConfig::narrow_band()).unwrap();
        let a = task.frame_set(2, 0.3, 7, 40.0).unwrap();
        let b = task.frame_set(2, 0.3, 7, 40.0).unwrap();
        assert_eq!(a, b);
        let full = SyntheticTask::new(&AnalysisConfig::full_band()).unwrap();
        assert_eq!(full.differential.len(), 120);
    }
}
