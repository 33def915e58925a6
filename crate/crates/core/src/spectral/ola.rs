use std::collections::HashMap;

use rustfft::num_complex::Complex64;

use super::{AnalysisConfig, DftPlan, Waveform};
use crate::error::{Error, Result};

/// Filters longer than this are applied through the FFT in [`ConvolutionMode::Auto`].
pub const DIRECT_MAX_TAPS: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ConvolutionMode {
    #[default]
    Auto,
    Direct,
    Fft,
}

impl ConvolutionMode {
    fn use_fft(self, taps: usize) -> bool {
        match self {
            ConvolutionMode::Auto => taps > DIRECT_MAX_TAPS,
            ConvolutionMode::Direct => false,
            ConvolutionMode::Fft => true,
        }
    }
}

/// Time-varying FIR filtering by overlap-add.
///
/// The input is cut into hop-length blocks; block `t` is convolved with
/// `filters[t]` and its full convolution (tail included) is added back at
/// offset `t * hop`. Output is trimmed to the input length.
pub fn ola_filter<F: AsRef<[f64]>>(
    wave: &Waveform,
    filters: &[F],
    cfg: &AnalysisConfig,
    mode: ConvolutionMode,
) -> Result<Waveform> {
    let frames = cfg.num_frames(wave.len());
    if filters.len() != frames {
        return Err(Error::FilterCount {
            filters: filters.len(),
            frames,
        });
    }
    for f in filters {
        let taps = f.as_ref().len();
        if taps == 0 || taps > cfg.fft_len {
            return Err(Error::TapLength {
                taps,
                fft_len: cfg.fft_len,
            });
        }
    }

    let len = wave.len();
    let mut out = vec![0.0; len];
    let mut plans: HashMap<usize, DftPlan> = HashMap::new();
    let mut block_buf = Vec::new();
    let mut filt_buf = Vec::new();

    for (t, filter) in filters.iter().enumerate() {
        let taps = filter.as_ref();
        let start = t * cfg.hop;
        let end = (start + cfg.hop).min(len);
        let block = &wave.samples[start..end];
        if mode.use_fft(taps.len()) {
            let conv_len = (block.len() + taps.len() - 1).next_power_of_two();
            let plan = plans
                .entry(conv_len)
                .or_insert_with(|| DftPlan::new(conv_len));
            block_buf.clear();
            block_buf.resize(conv_len, Complex64::new(0.0, 0.0));
            filt_buf.clear();
            filt_buf.resize(conv_len, Complex64::new(0.0, 0.0));
            for (b, &s) in block_buf.iter_mut().zip(block) {
                b.re = s;
            }
            for (b, &h) in filt_buf.iter_mut().zip(taps) {
                b.re = h;
            }
            plan.forward_in_place(&mut block_buf);
            plan.forward_in_place(&mut filt_buf);
            for (b, h) in block_buf.iter_mut().zip(&filt_buf) {
                *b *= h;
            }
            plan.inverse_in_place(&mut block_buf);
            let span = (block.len() + taps.len() - 1).min(len - start);
            for (o, z) in out[start..start + span].iter_mut().zip(&block_buf) {
                *o += z.re;
            }
        } else {
            for (i, &s) in block.iter().enumerate() {
                let base = start + i;
                let span = taps.len().min(len - base);
                for (o, &h) in out[base..base + span].iter_mut().zip(taps) {
                    *o += s * h;
                }
            }
        }
    }

    Waveform::new(out, wave.sample_rate)
}
