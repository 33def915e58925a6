use log::{debug, warn};

use crate::cepstrum::{reconstruct_spectrum, CepstrumVector};
use crate::error::{Error, Result};
use crate::filter::{filter_from_spectrum, subband_gate, truncate, DifferentialFilter, SubbandGate};
use crate::model::AcousticModel;
use crate::spectral::{ola_filter, stft, ConvolutionMode, Waveform};
use crate::train::cepstrogram;

/// Output samples are clamped to this magnitude.
pub const SAFETY_CLAMP: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvertOptions {
    pub taps: usize,
    pub gate: Option<SubbandGate>,
    pub mode: ConvolutionMode,
}

impl ConvertOptions {
    /// Untruncated, ungated conversion for `model`.
    pub fn untruncated(model: &AcousticModel) -> Self {
        Self {
            taps: model.analysis.fft_len,
            gate: None,
            mode: ConvolutionMode::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conversion {
    pub wave: Waveform,
    /// Samples that hit the safety clamp.
    pub clipped: usize,
    /// Largest imaginary part dropped when designing the filters.
    pub max_imag_residual: f64,
}

/// Full-length differential filter of every analysis frame of `wave`, with
/// the optional gate applied to each differential spectrum.
pub fn differential_filters(
    model: &AcousticModel,
    wave: &Waveform,
    gate: Option<&SubbandGate>,
) -> Result<(Vec<DifferentialFilter>, f64)> {
    let cfg = &model.analysis;
    if wave.sample_rate != cfg.sample_rate {
        return Err(Error::SampleRateMismatch {
            expected: cfg.sample_rate,
            actual: wave.sample_rate,
        });
    }
    if let Some(g) = gate {
        g.validate(cfg)?;
    }
    let frames = stft(wave, cfg)?;
    let cep_d = model.infer(&cepstrogram(&frames, cfg)?)?;
    let mut residual = 0.0f64;
    let mut filters = Vec::with_capacity(frames.len());
    for (t, row) in cep_d.rows().into_iter().enumerate() {
        let mut spec = reconstruct_spectrum(&CepstrumVector::new(row.to_vec()), &model.lifter, cfg)?;
        if let Some(g) = gate {
            spec = subband_gate(&spec, g, cfg)?;
        }
        let (filter, r) = filter_from_spectrum(&spec, t);
        residual = residual.max(r);
        filters.push(filter);
    }
    Ok((filters, residual))
}

/// Taps of a gated response kept before time zero.
///
/// A gated spectrum `1 + g (F − 1)` is not minimum phase: its impulse
/// response extends to negative time, which the DFT wraps to the end of the
/// buffer. Applied as a causal FIR those taps would act as a long delay and
/// spoil the pass-through above the crossover. Gated filters are therefore
/// rotated so that time zero sits at the centre of the kept window, and the
/// resulting latency is removed from the output.
fn gated_window(fft_len: usize, taps: usize) -> (usize, usize) {
    let latency = taps / 2;
    ((fft_len / 2 - latency) % fft_len, latency)
}

fn centred(filter: &DifferentialFilter, taps: usize) -> (DifferentialFilter, usize) {
    let n = filter.len();
    let (start, latency) = gated_window(n, taps);
    // rotated[k] = filter[(k − n/2) mod n]; keep rotated[start..start + taps]
    let kept = (start..start + taps)
        .map(|k| filter.taps[(k + n - n / 2) % n])
        .collect();
    (DifferentialFilter::new(kept, filter.frame_index), latency)
}

/// Converts `wave` with per-frame differential filters truncated to
/// `opts.taps` taps. Gated filters keep the `opts.taps` taps centred on
/// time zero and are applied with matching latency compensation.
pub fn convert(wave: &Waveform, model: &AcousticModel, opts: &ConvertOptions) -> Result<Conversion> {
    let cfg = &model.analysis;
    if opts.taps == 0 || opts.taps > cfg.fft_len {
        return Err(Error::TapLength {
            taps: opts.taps,
            fft_len: cfg.fft_len,
        });
    }
    if wave.is_empty() {
        return Err(Error::EmptyInput("waveform"));
    }
    let gate = opts.gate.filter(|g| !g.is_bypass());
    let (filters, max_imag_residual) = differential_filters(model, wave, gate.as_ref())?;
    let mut out = if gate.is_some() {
        let mut latency = 0;
        let mut kept: Vec<DifferentialFilter> = filters
            .iter()
            .map(|f| {
                let (c, l) = centred(f, opts.taps);
                latency = l;
                c
            })
            .collect();
        let mut padded = wave.samples.clone();
        padded.resize(wave.len() + latency, 0.0);
        let padded = Waveform::new(padded, wave.sample_rate)?;
        let last = kept.last().cloned().expect("at least one frame");
        kept.resize(cfg.num_frames(padded.len()), last);
        let y = ola_filter(&padded, &kept, cfg, opts.mode)?;
        Waveform::new(y.samples[latency..].to_vec(), wave.sample_rate)?
    } else {
        let filters = filters
            .iter()
            .map(|f| truncate(f, opts.taps))
            .collect::<Result<Vec<_>>>()?;
        ola_filter(wave, &filters, cfg, opts.mode)?
    };
    if out.samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("converted waveform"));
    }
    let mut clipped = 0;
    for s in &mut out.samples {
        if s.abs() > SAFETY_CLAMP {
            clipped += 1;
            *s = s.clamp(-SAFETY_CLAMP, SAFETY_CLAMP);
        }
    }
    if clipped > 0 {
        warn!("{clipped} samples clipped to ±{SAFETY_CLAMP}");
    }
    debug!("converted {} samples with {}-tap filters", out.len(), opts.taps);
    Ok(Conversion {
        wave: out,
        clipped,
        max_imag_residual,
    })
}
