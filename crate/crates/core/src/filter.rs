//! Differential FIR filters: design from a differential cepstrum, truncation
//! to `l` taps, and the sub-band gate used for full-band conversion.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::cepstrum::{reconstruct_spectrum, CepstrumVector, Lifter};
use crate::error::{Error, Result};
use crate::spectral::{AnalysisConfig, Complex64, DftPlan, SpectrogramFrame};

/// Imaginary residuals above this are logged when a spectrum is brought
/// back to the time domain.
pub const IMAG_RESIDUAL_WARN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct DifferentialFilter {
    pub taps: Vec<f64>,
    pub frame_index: usize,
}

impl DifferentialFilter {
    pub fn new(taps: Vec<f64>, frame_index: usize) -> Self {
        Self { taps, frame_index }
    }

    pub fn identity(len: usize, frame_index: usize) -> Self {
        let mut taps = vec![0.0; len];
        taps[0] = 1.0;
        Self { taps, frame_index }
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|h| h * h).sum()
    }

    /// Running sum of squared taps divided by the total energy.
    pub fn cumulative_power(&self) -> Vec<f64> {
        let total = self.energy();
        let mut acc = 0.0;
        self.taps
            .iter()
            .map(|h| {
                acc += h * h;
                if total > 0.0 {
                    acc / total
                } else {
                    1.0
                }
            })
            .collect()
    }
}

impl AsRef<[f64]> for DifferentialFilter {
    fn as_ref(&self) -> &[f64] {
        &self.taps
    }
}

/// Rectangular mask keeping the first `taps` of an `fft_len` response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationWindow {
    fft_len: usize,
    taps: usize,
}

impl TruncationWindow {
    pub fn new(fft_len: usize, taps: usize) -> Result<Self> {
        if taps == 0 || taps > fft_len {
            return Err(Error::TapLength { taps, fft_len });
        }
        Ok(Self { fft_len, taps })
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    pub fn fft_len(&self) -> usize {
        self.fft_len
    }

    pub fn mask(&self) -> Vec<f64> {
        (0..self.fft_len)
            .map(|n| if n < self.taps { 1.0 } else { 0.0 })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubbandGate {
    pub crossover_hz: f64,
    pub steepness_hz: f64,
}

impl Default for SubbandGate {
    fn default() -> Self {
        Self {
            crossover_hz: 8000.0,
            steepness_hz: 200.0,
        }
    }
}

impl SubbandGate {
    pub fn new(crossover_hz: f64, steepness_hz: f64, cfg: &AnalysisConfig) -> Result<Self> {
        let gate = Self {
            crossover_hz,
            steepness_hz,
        };
        gate.validate(cfg)?;
        Ok(gate)
    }

    /// Weight 1 at every bin: gating leaves spectra untouched.
    pub fn bypass() -> Self {
        Self {
            crossover_hz: f64::INFINITY,
            steepness_hz: 0.0,
        }
    }

    pub fn is_bypass(&self) -> bool {
        self.crossover_hz == f64::INFINITY
    }

    pub fn validate(&self, cfg: &AnalysisConfig) -> Result<()> {
        if self.is_bypass() {
            return Ok(());
        }
        if !(self.crossover_hz > 0.0 && self.crossover_hz < cfg.nyquist()) {
            return Err(Error::InvalidGate(format!(
                "crossover {} Hz outside (0, {})",
                self.crossover_hz,
                cfg.nyquist()
            )));
        }
        if !(self.steepness_hz > 0.0 && self.steepness_hz.is_finite()) {
            return Err(Error::InvalidGate(format!(
                "steepness {} Hz must be positive",
                self.steepness_hz
            )));
        }
        Ok(())
    }

    /// Sigmoid weight at `freq_hz`: ~1 well below the crossover, ~0 above.
    pub fn weight(&self, freq_hz: f64) -> f64 {
        if self.is_bypass() {
            return 1.0;
        }
        let x = (self.crossover_hz - freq_hz) / self.steepness_hz;
        1.0 / (1.0 + (-x).exp())
    }

    /// Per-bin weights, symmetric about N/2.
    pub fn weights(&self, cfg: &AnalysisConfig) -> Vec<f64> {
        (0..cfg.fft_len)
            .map(|k| self.weight(cfg.bin_frequency(k)))
            .collect()
    }
}

/// Real part of `idft(spectrum)` plus the largest imaginary magnitude dropped.
pub fn filter_from_spectrum(
    spectrum: &SpectrogramFrame,
    frame_index: usize,
) -> (DifferentialFilter, f64) {
    let plan = DftPlan::new(spectrum.len());
    let mut buf = spectrum.bins.clone();
    plan.inverse_in_place(&mut buf);
    let residual = buf.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if residual > IMAG_RESIDUAL_WARN {
        debug!("frame {frame_index}: imaginary residual {residual:.3e} dropped");
    }
    (
        DifferentialFilter::new(buf.iter().map(|z| z.re).collect(), frame_index),
        residual,
    )
}

/// Full-length (`fft_len`) differential filter for one frame.
pub fn design_filter(
    cep_d: &CepstrumVector,
    lifter: &Lifter,
    cfg: &AnalysisConfig,
) -> Result<DifferentialFilter> {
    let spectrum = reconstruct_spectrum(cep_d, lifter, cfg)?;
    Ok(filter_from_spectrum(&spectrum, 0).0)
}

pub fn truncate(filter: &DifferentialFilter, taps: usize) -> Result<DifferentialFilter> {
    if taps == 0 || taps > filter.len() {
        return Err(Error::TapLength {
            taps,
            fft_len: filter.len(),
        });
    }
    Ok(DifferentialFilter::new(
        filter.taps[..taps].to_vec(),
        filter.frame_index,
    ))
}

/// DFT of the taps zero-padded to `fft_len`.
pub fn truncated_spectrum(
    filter: &DifferentialFilter,
    cfg: &AnalysisConfig,
) -> Result<SpectrogramFrame> {
    if filter.len() > cfg.fft_len {
        return Err(Error::TapLength {
            taps: filter.len(),
            fft_len: cfg.fft_len,
        });
    }
    Ok(SpectrogramFrame::new(
        DftPlan::new(cfg.fft_len).dft_real_padded(&filter.taps)?,
    ))
}

/// `1 + g(f) (F - 1)` per bin: the deviation from an all-pass identity is
/// faded out above the crossover, so the high band passes unchanged.
pub fn subband_gate(
    spec_d: &SpectrogramFrame,
    gate: &SubbandGate,
    cfg: &AnalysisConfig,
) -> Result<SpectrogramFrame> {
    if spec_d.len() != cfg.fft_len {
        return Err(Error::LengthMismatch {
            what: "spectrogram frame",
            expected: cfg.fft_len,
            actual: spec_d.len(),
        });
    }
    if gate.is_bypass() {
        return Ok(spec_d.clone());
    }
    let one = Complex64::new(1.0, 0.0);
    let bins = spec_d
        .bins
        .iter()
        .zip(gate.weights(cfg))
        .map(|(&z, g)| one + (z - one) * g)
        .collect();
    Ok(SpectrogramFrame::new(bins))
}
