//! Framing, discrete Fourier transforms and time-varying FIR filtering.
//!
//! Frame `t` starts at sample `t * hop` and spans `window_len` samples,
//! zero-padded to `fft_len`. The same framing drives conversion: the
//! hop-length block starting at `t * hop` is filtered by frame `t`'s filter.

mod dft;
mod ola;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dft::{dft, idft, DftPlan};
pub use ola::{ola_filter, ConvolutionMode, DIRECT_MAX_TAPS};
pub use rustfft::num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
    Rectangular,
}

impl WindowKind {
    /// Periodic window of `len` samples.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub sample_rate: u32,
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
    pub cep_dim: usize,
    #[serde(default)]
    pub window: WindowKind,
}

impl AnalysisConfig {
    /// 16 kHz: 25 ms window, 5 ms hop, 512-point FFT, 40 cepstral coefficients.
    pub fn narrow_band() -> Self {
        Self {
            sample_rate: 16_000,
            window_len: 400,
            hop: 80,
            fft_len: 512,
            cep_dim: 40,
            window: WindowKind::Hann,
        }
    }

    /// 48 kHz: 25 ms window, 5 ms hop, 2048-point FFT, 120 cepstral coefficients.
    pub fn full_band() -> Self {
        Self {
            sample_rate: 48_000,
            window_len: 1200,
            hop: 240,
            fft_len: 2048,
            cep_dim: 120,
            window: WindowKind::Hann,
        }
    }

    pub fn for_sample_rate(sample_rate: u32) -> Result<Self> {
        match sample_rate {
            16_000 => Ok(Self::narrow_band()),
            48_000 => Ok(Self::full_band()),
            other => Err(Error::InvalidConfig(format!(
                "no default analysis settings for {other} Hz"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.sample_rate == 0 || self.window_len == 0 || self.hop == 0 || self.cep_dim == 0 {
            return bad("all sizes must be positive".into());
        }
        if !self.fft_len.is_power_of_two() || self.fft_len < 4 {
            return bad(format!("fft_len {} is not a power of two >= 4", self.fft_len));
        }
        if self.window_len > self.fft_len {
            return bad(format!(
                "window_len {} exceeds fft_len {}",
                self.window_len, self.fft_len
            ));
        }
        if self.hop > self.window_len {
            return bad(format!("hop {} exceeds window_len {}", self.hop, self.window_len));
        }
        if self.cep_dim > self.fft_len / 2 {
            return bad(format!(
                "cep_dim {} exceeds fft_len/2 = {}",
                self.cep_dim,
                self.fft_len / 2
            ));
        }
        Ok(())
    }

    pub fn num_frames(&self, num_samples: usize) -> usize {
        num_samples.div_ceil(self.hop)
    }

    /// Centre frequency in Hz of bin `k`, folded so that bins above N/2 map
    /// onto their mirrored positive frequency.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        let folded = k.min(self.fft_len - k % self.fft_len);
        folded as f64 * self.sample_rate as f64 / self.fft_len as f64
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate as f64 / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform"));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}

/// Complex spectrum of one analysis frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrogramFrame {
    pub bins: Vec<Complex64>,
}

impl SpectrogramFrame {
    pub fn new(bins: Vec<Complex64>) -> Self {
        Self { bins }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|z| z.norm()).collect()
    }
}

/// Short-time Fourier transform with the framing described at module level.
/// Returns `ceil(len / hop)` frames; samples past the end read as zero.
pub fn stft(wave: &Waveform, cfg: &AnalysisConfig) -> Result<Vec<SpectrogramFrame>> {
    cfg.validate()?;
    if wave.sample_rate != cfg.sample_rate {
        return Err(Error::SampleRateMismatch {
            expected: cfg.sample_rate,
            actual: wave.sample_rate,
        });
    }
    if wave.is_empty() {
        return Err(Error::EmptyInput("waveform"));
    }

    let plan = DftPlan::new(cfg.fft_len);
    let window = cfg.window.coefficients(cfg.window_len);
    let frames = cfg.num_frames(wave.len());
    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let start = t * cfg.hop;
        let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_len];
        for (i, (b, w)) in buf.iter_mut().zip(&window).enumerate() {
            if let Some(&s) = wave.samples.get(start + i) {
                b.re = s * w;
            }
        }
        plan.forward_in_place(&mut buf);
        out.push(SpectrogramFrame::new(buf));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_frame_dft(frame: &[f64], n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                frame
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn presets_validate() {
        AnalysisConfig::narrow_band().validate().unwrap();
        AnalysisConfig::full_band().validate().unwrap();
        let mut bad = AnalysisConfig::narrow_band();
        bad.cep_dim = 300;
        assert!(bad.validate().is_err());
        bad = AnalysisConfig::narrow_band();
        bad.hop = 500;
        assert!(bad.validate().is_err());
        bad = AnalysisConfig::narrow_band();
        bad.fft_len = 500;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn frame_count_is_ceiling() {
        let cfg = AnalysisConfig::narrow_band();
        let wave = Waveform::new(vec![0.0; 161], 16_000).unwrap();
        assert_eq!(stft(&wave, &cfg).unwrap().len(), 3);
    }

    #[test]
    fn zeros_give_zero_bins() {
        let cfg = AnalysisConfig::narrow_band();
        let wave = Waveform::new(vec![0.0; 1000], 16_000).unwrap();
        for frame in stft(&wave, &cfg).unwrap() {
            assert!(frame.bins.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn impulse_with_rectangular_window_is_flat() {
        let cfg = AnalysisConfig {
            window: WindowKind::Rectangular,
            ..AnalysisConfig::narrow_band()
        };
        let mut samples = vec![0.0; 800];
        samples[0] = 1.0;
        let frames = stft(&Waveform::new(samples, 16_000).unwrap(), &cfg).unwrap();
        for z in &frames[0].bins {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn sine_peaks_at_expected_bin() {
        let cfg = AnalysisConfig::narrow_band();
        let samples: Vec<f64> = (0..16_000)
            .map(|n| (2.0 * PI * 1000.0 * n as f64 / 16_000.0).sin())
            .collect();
        let wave = Waveform::new(samples.clone(), 16_000).unwrap();
        let frames = stft(&wave, &cfg).unwrap();
        // full frames only; the trailing ones run into the zero padding
        for (t, frame) in frames.iter().enumerate().take(190) {
            let mags = frame.magnitudes();
            let peak = (0..=256).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap();
            assert_eq!(peak, 32, "frame {t}");
        }
        // one frame against a direct DFT
        let window = WindowKind::Hann.coefficients(400);
        let mut seg: Vec<f64> = samples[800..1200].iter().zip(&window).map(|(s, w)| s * w).collect();
        seg.resize(512, 0.0);
        let oracle = naive_frame_dft(&seg, 512);
        for (a, b) in frames[10].bins.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn real_input_gives_conjugate_symmetric_frames() {
        let cfg = AnalysisConfig::narrow_band();
        let samples: Vec<f64> = (0..2000).map(|n| ((n * 7919) % 113) as f64 / 113.0 - 0.5).collect();
        let frames = stft(&Waveform::new(samples, 16_000).unwrap(), &cfg).unwrap();
        let n = cfg.fft_len;
        for frame in &frames {
            for k in 1..n / 2 {
                assert!((frame.bins[k] - frame.bins[n - k].conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn stft_errors() {
        let cfg = AnalysisConfig::narrow_band();
        let wave = Waveform::new(vec![0.1; 100], 48_000).unwrap();
        assert!(matches!(stft(&wave, &cfg), Err(Error::SampleRateMismatch { .. })));
        let empty = Waveform::new(vec![], 16_000).unwrap();
        assert!(matches!(stft(&empty, &cfg), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn waveform_rejects_nan() {
        assert!(Waveform::new(vec![0.0, f64::NAN], 16_000).is_err());
    }

    #[test]
    fn bin_frequency_folds() {
        let cfg = AnalysisConfig::narrow_band();
        assert_eq!(cfg.bin_frequency(0), 0.0);
        assert_eq!(cfg.bin_frequency(256), 8000.0);
        assert_eq!(cfg.bin_frequency(32), cfg.bin_frequency(512 - 32));
    }
}
