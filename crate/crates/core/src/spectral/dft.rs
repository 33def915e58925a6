use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward and inverse transforms of one fixed length.
///
/// The forward transform uses the `exp(-2πi kn/N)` kernel and is unscaled;
/// the inverse carries the `1/N` factor, so `inverse(forward(x)) == x`.
#[derive(Clone)]
pub struct DftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftPlan").field("len", &self.len).finish()
    }
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        let (forward, inverse) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(len), p.plan_fft_inverse(len))
        });
        Self {
            len,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
    }

    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    pub fn dft(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(x.len())?;
        let mut buf = x.to_vec();
        self.forward_in_place(&mut buf);
        Ok(buf)
    }

    pub fn idft(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check(x.len())?;
        let mut buf = x.to_vec();
        self.inverse_in_place(&mut buf);
        Ok(buf)
    }

    /// Transform of a real sequence, zero-padded up to the plan length.
    pub fn dft_real_padded(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        if x.len() > self.len {
            return Err(Error::LengthMismatch {
                what: "dft input",
                expected: self.len,
                actual: x.len(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (b, &v) in buf.iter_mut().zip(x) {
            b.re = v;
        }
        self.forward_in_place(&mut buf);
        Ok(buf)
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.len {
            return Err(Error::LengthMismatch {
                what: "dft input",
                expected: self.len,
                actual: len,
            });
        }
        Ok(())
    }
}

/// Unscaled forward DFT of `x`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    DftPlan::new(x.len()).forward_in_place(&mut buf);
    buf
}

/// Inverse DFT of `x`, scaled by `1/N`.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    DftPlan::new(x.len()).inverse_in_place(&mut buf);
    buf
}
