//! The truncation-aware conversion chain for one frame, with its exact
//! reverse-mode gradient.
//!
//! ```text
//! C_D ──⊙u──▶ pad ──DFT──▶ Z ──exp──▶ F_D ──gate?──▶ IDFT ──Re──▶ f_D
//!   ──window(l)──▶ f_l ──DFT──▶ F_l ──⊙F_X──▶ Ŷ ──ln|·|──▶ IDFT ──[..c]──▶ Ĉ_Y
//! ```
//!
//! Complex gradients use the convention `g = ∂L/∂Re z + i ∂L/∂Im z` for a
//! real loss `L`. Under it a linear map `A` back-propagates through `A^H`
//! and an elementwise holomorphic `h` through `conj(h'(z))`.

use crate::cepstrum::MAG_FLOOR;
use crate::error::{Error, Result};
use crate::filter::{SubbandGate, TruncationWindow};
use crate::spectral::{AnalysisConfig, Complex64, DftPlan};

/// Frame-level forward/backward evaluator for a fixed `(cfg, l, gate)`.
#[derive(Clone, Debug)]
pub struct TruncationChain {
    cfg: AnalysisConfig,
    window: TruncationWindow,
    gate: Option<Vec<f64>>,
    plan: DftPlan,
}

/// Values kept from the forward pass.
#[derive(Clone, Debug)]
pub struct ChainTrace {
    /// `F_D` before gating.
    pub filter_spectrum: Vec<Complex64>,
    /// `f_l`, zero beyond `l`.
    pub truncated_taps: Vec<f64>,
    pub truncated_spectrum: Vec<Complex64>,
    /// `F_X ⊙ F_l`.
    pub converted_spectrum: Vec<Complex64>,
    /// `Ĉ_Y`.
    pub converted: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainGrads {
    pub cep_d: Vec<f64>,
    pub lifter: Vec<f64>,
}

impl TruncationChain {
    pub fn new(cfg: &AnalysisConfig, taps: usize, gate: Option<&SubbandGate>) -> Result<Self> {
        cfg.validate()?;
        let window = TruncationWindow::new(cfg.fft_len, taps)?;
        let gate = match gate {
            Some(g) => {
                g.validate(cfg)?;
                Some(g.weights(cfg))
            }
            None => None,
        };
        Ok(Self {
            cfg: *cfg,
            window,
            gate,
            plan: DftPlan::new(cfg.fft_len),
        })
    }

    pub fn taps(&self) -> usize {
        self.window.taps()
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.cfg
    }

    fn check(&self, cep_d: &[f64], lifter: &[f64], source: &[Complex64]) -> Result<()> {
        let c = self.cfg.cep_dim;
        for (what, expected, actual) in [
            ("differential cepstrum", c, cep_d.len()),
            ("lifter", c, lifter.len()),
            ("source spectrum", self.cfg.fft_len, source.len()),
        ] {
            if expected != actual {
                return Err(Error::LengthMismatch {
                    what,
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }

    pub fn trace(&self, cep_d: &[f64], lifter: &[f64], source: &[Complex64]) -> Result<ChainTrace> {
        self.check(cep_d, lifter, source)?;
        let n = self.cfg.fft_len;
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);

        let mut buf = vec![zero; n];
        for ((b, d), u) in buf.iter_mut().zip(cep_d).zip(lifter) {
            b.re = d * u;
        }
        self.plan.forward_in_place(&mut buf);
        for z in buf.iter_mut() {
            *z = z.exp();
        }
        let filter_spectrum = buf.clone();
        if let Some(g) = &self.gate {
            for (z, w) in buf.iter_mut().zip(g) {
                *z = one + (*z - one) * *w;
            }
        }
        self.plan.inverse_in_place(&mut buf);
        let l = self.window.taps();
        let truncated_taps: Vec<f64> = buf
            .iter()
            .enumerate()
            .map(|(i, z)| if i < l { z.re } else { 0.0 })
            .collect();

        for (b, &h) in buf.iter_mut().zip(&truncated_taps) {
            *b = Complex64::new(h, 0.0);
        }
        self.plan.forward_in_place(&mut buf);
        let truncated_spectrum = buf.clone();

        let converted_spectrum: Vec<Complex64> =
            source.iter().zip(&truncated_spectrum).map(|(x, f)| x * f).collect();
        for (b, y) in buf.iter_mut().zip(&converted_spectrum) {
            *b = Complex64::new(y.norm().max(MAG_FLOOR).ln(), 0.0);
        }
        self.plan.inverse_in_place(&mut buf);
        let converted = buf[..self.cfg.cep_dim].iter().map(|z| z.re).collect();

        Ok(ChainTrace {
            filter_spectrum,
            truncated_taps,
            truncated_spectrum,
            converted_spectrum,
            converted,
        })
    }

    /// `Ĉ_Y` for one frame.
    pub fn forward(&self, cep_d: &[f64], lifter: &[f64], source: &[Complex64]) -> Result<Vec<f64>> {
        Ok(self.trace(cep_d, lifter, source)?.converted)
    }

    /// `(Ĉ_Y, ‖C_Y − Ĉ_Y‖²)`.
    pub fn forward_loss(
        &self,
        cep_d: &[f64],
        lifter: &[f64],
        source: &[Complex64],
        target: &[f64],
    ) -> Result<(Vec<f64>, f64)> {
        let converted = self.forward(cep_d, lifter, source)?;
        let loss = squared_error(target, &converted)?;
        Ok((converted, loss))
    }

    /// Pulls `∂L/∂Ĉ_Y` back to `∂L/∂C_D` and `∂L/∂u`.
    pub fn backward(
        &self,
        cep_d: &[f64],
        lifter: &[f64],
        source: &[Complex64],
        trace: &ChainTrace,
        grad_converted: &[f64],
    ) -> Result<ChainGrads> {
        self.check(cep_d, lifter, source)?;
        let n = self.cfg.fft_len;
        let c = self.cfg.cep_dim;
        if grad_converted.len() != c {
            return Err(Error::LengthMismatch {
                what: "converted-cepstrum gradient",
                expected: c,
                actual: grad_converted.len(),
            });
        }
        let nf = n as f64;
        let zero = Complex64::new(0.0, 0.0);
        let mut buf = vec![zero; n];

        // Ĉ_Y = Re(idft(ln m))[..c]  ⇒  ∂/∂ln m = Re(dft(pad g)) / N
        for (b, &g) in buf.iter_mut().zip(grad_converted) {
            b.re = g;
        }
        self.plan.forward_in_place(&mut buf);

        // ln|Ŷ| ⇒ Ŷ/|Ŷ|², zero where the floor is active; then through ⊙F_X
        for ((b, y), x) in buf
            .iter_mut()
            .zip(&trace.converted_spectrum)
            .zip(source)
        {
            let mag2 = y.norm_sqr();
            let g_log = b.re / nf;
            *b = if mag2.sqrt() > MAG_FLOOR {
                x.conj() * (*y * (g_log / mag2))
            } else {
                zero
            };
        }

        // F_l = dft(f_l), f_l real  ⇒  ∂f_l = Re(N idft(.)), masked to l taps
        self.plan.inverse_in_place(&mut buf);
        let l = self.window.taps();
        for (i, b) in buf.iter_mut().enumerate() {
            *b = if i < l {
                Complex64::new(b.re * nf, 0.0)
            } else {
                zero
            };
        }

        // f_D = Re(idft(F))  ⇒  ∂F = dft(∂f_D) / N
        self.plan.forward_in_place(&mut buf);
        for b in buf.iter_mut() {
            *b /= nf;
        }
        if let Some(g) = &self.gate {
            for (b, w) in buf.iter_mut().zip(g) {
                *b *= *w;
            }
        }

        // exp ⇒ conj(F_D)
        for (b, f) in buf.iter_mut().zip(&trace.filter_spectrum) {
            *b *= f.conj();
        }

        // Z = dft(v), v real  ⇒  ∂v = Re(N idft(.))
        self.plan.inverse_in_place(&mut buf);
        let mut grads = ChainGrads {
            cep_d: vec![0.0; c],
            lifter: vec![0.0; c],
        };
        for i in 0..c {
            let gv = buf[i].re * nf;
            grads.cep_d[i] = gv * lifter[i];
            grads.lifter[i] = gv * cep_d[i];
        }
        Ok(grads)
    }

    /// Loss `‖C_Y − Ĉ_Y‖²` and its gradients in one pass.
    pub fn loss_and_grad(
        &self,
        cep_d: &[f64],
        lifter: &[f64],
        source: &[Complex64],
        target: &[f64],
    ) -> Result<(f64, ChainGrads)> {
        let trace = self.trace(cep_d, lifter, source)?;
        let loss = squared_error(target, &trace.converted)?;
        let grad: Vec<f64> = target
            .iter()
            .zip(&trace.converted)
            .map(|(t, y)| -2.0 * (t - y))
            .collect();
        let grads = self.backward(cep_d, lifter, source, &trace, &grad)?;
        Ok((loss, grads))
    }
}

pub(crate) fn squared_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "cepstrum",
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}
