//! Real cepstra, lifters and spectrum reconstruction from liftered cepstra.
//!
//! A cepstrum here is the inverse DFT of the log-magnitude spectrum. Going
//! back, a lifter weights each quefrency, the weighted sequence is zero-padded
//! to the FFT length and its forward DFT is exponentiated. With the
//! minimum-phase lifter this is the cepstral Hilbert transform; with a trained
//! lifter it is the same map with different weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{AnalysisConfig, Complex64, DftPlan, SpectrogramFrame};

/// Magnitudes are clamped to this before taking logs.
pub const MAG_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CepstrumVector {
    pub coeffs: Vec<f64>,
}

impl CepstrumVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            coeffs: vec![0.0; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn squared_distance(&self, other: &CepstrumVector) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lifter {
    pub coeffs: Vec<f64>,
    pub trainable: bool,
}

impl Lifter {
    /// The first `cep_dim` entries of the minimum-phase lifter, frozen.
    pub fn minimum_phase(cfg: &AnalysisConfig) -> Result<Self> {
        let full = minimum_phase_lifter(cfg.fft_len)?;
        Ok(Self {
            coeffs: full[..cfg.cep_dim].to_vec(),
            trainable: false,
        })
    }

    /// Minimum-phase initialisation, marked trainable.
    pub fn trainable_from_minimum_phase(cfg: &AnalysisConfig) -> Result<Self> {
        Ok(Self {
            trainable: true,
            ..Self::minimum_phase(cfg)?
        })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// `1` at `n = 0` and `n = N/2`, `2` in between, `0` above `N/2`.
pub fn minimum_phase_lifter(fft_len: usize) -> Result<Vec<f64>> {
    if fft_len < 4 || !fft_len.is_multiple_of(2) {
        return Err(Error::OddLifterLength(fft_len));
    }
    let half = fft_len / 2;
    Ok((0..fft_len)
        .map(|n| match n {
            0 => 1.0,
            n if n == half => 1.0,
            n if n < half => 2.0,
            _ => 0.0,
        })
        .collect())
}

fn check_frame(frame: &SpectrogramFrame, cfg: &AnalysisConfig) -> Result<()> {
    if frame.len() != cfg.fft_len {
        return Err(Error::LengthMismatch {
            what: "spectrogram frame",
            expected: cfg.fft_len,
            actual: frame.len(),
        });
    }
    Ok(())
}

fn check_cepstra(cep: &CepstrumVector, lifter: &Lifter, cfg: &AnalysisConfig) -> Result<()> {
    for (what, len) in [("cepstrum", cep.len()), ("lifter", lifter.len())] {
        if len != cfg.cep_dim {
            return Err(Error::LengthMismatch {
                what,
                expected: cfg.cep_dim,
                actual: len,
            });
        }
    }
    Ok(())
}

/// First `cep_dim` coefficients of `idft(ln max(|X|, MAG_FLOOR))`.
pub fn real_cepstrum(frame: &SpectrogramFrame, cfg: &AnalysisConfig) -> Result<CepstrumVector> {
    check_frame(frame, cfg)?;
    let plan = DftPlan::new(cfg.fft_len);
    let mut buf: Vec<Complex64> = frame
        .bins
        .iter()
        .map(|z| Complex64::new(z.norm().max(MAG_FLOOR).ln(), 0.0))
        .collect();
    plan.inverse_in_place(&mut buf);
    Ok(CepstrumVector::new(
        buf[..cfg.cep_dim].iter().map(|z| z.re).collect(),
    ))
}

/// `exp(dft(pad(lifter ⊙ cep)))`.
pub fn reconstruct_spectrum(
    cep: &CepstrumVector,
    lifter: &Lifter,
    cfg: &AnalysisConfig,
) -> Result<SpectrogramFrame> {
    check_cepstra(cep, lifter, cfg)?;
    let plan = DftPlan::new(cfg.fft_len);
    let liftered: Vec<f64> = cep
        .coeffs
        .iter()
        .zip(&lifter.coeffs)
        .map(|(c, u)| c * u)
        .collect();
    let mut bins = plan.dft_real_padded(&liftered)?;
    for z in bins.iter_mut() {
        *z = z.exp();
    }
    Ok(SpectrogramFrame::new(bins))
}

/// Vector-Jacobian product of [`reconstruct_spectrum`].
///
/// `grad` holds `∂L/∂Re F + i ∂L/∂Im F` per bin for a real loss `L`; the
/// result is `(∂L/∂cep, ∂L/∂lifter)`.
pub fn reconstruct_spectrum_vjp(
    cep: &CepstrumVector,
    lifter: &Lifter,
    spectrum: &SpectrogramFrame,
    grad: &[Complex64],
    cfg: &AnalysisConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_cepstra(cep, lifter, cfg)?;
    check_frame(spectrum, cfg)?;
    if grad.len() != cfg.fft_len {
        return Err(Error::LengthMismatch {
            what: "spectrum gradient",
            expected: cfg.fft_len,
            actual: grad.len(),
        });
    }
    let plan = DftPlan::new(cfg.fft_len);
    // through exp: holomorphic, so the adjoint is the conjugate derivative
    let mut buf: Vec<Complex64> = spectrum
        .bins
        .iter()
        .zip(grad)
        .map(|(f, g)| f.conj() * g)
        .collect();
    // adjoint of the unscaled forward DFT on a real input is N * Re(idft(.))
    plan.inverse_in_place(&mut buf);
    let n = cfg.fft_len as f64;
    let grad_liftered: Vec<f64> = buf[..cfg.cep_dim].iter().map(|z| z.re * n).collect();
    let grad_cep = grad_liftered
        .iter()
        .zip(&lifter.coeffs)
        .map(|(g, u)| g * u)
        .collect();
    let grad_lifter = grad_liftered
        .iter()
        .zip(&cep.coeffs)
        .map(|(g, c)| g * c)
        .collect();
    Ok((grad_cep, grad_lifter))
}
