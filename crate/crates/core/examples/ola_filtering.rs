//! Time-varying FIR filtering by overlap-add, direct and FFT convolution.

use diffvc::spectral::{ola_filter, AnalysisConfig, ConvolutionMode, Waveform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> diffvc::Result<()> {
    let cfg = AnalysisConfig::narrow_band();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let wave = Waveform::new((0..16_000).map(|_| rng.gen_range(-0.5..0.5)).collect(), 16_000)?;
    let frames = cfg.num_frames(wave.len());
    // a lowpass that slowly opens up over the utterance
    let filters: Vec<Vec<f64>> = (0..frames)
        .map(|t| {
            let a = 0.95 - 0.9 * t as f64 / frames as f64;
            (0..128).map(|k| (1.0 - a) * a.powi(k)).collect()
        })
        .collect();
    let direct = ola_filter(&wave, &filters, &cfg, ConvolutionMode::Direct)?;
    let fft = ola_filter(&wave, &filters, &cfg, ConvolutionMode::Fft)?;
    let max_diff = direct.samples.iter().zip(&fft.samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("{frames} frames, input rms {:.4}, output rms {:.4}", wave.rms(), direct.rms());
    println!("direct vs fft max difference {max_diff:.2e}");
    Ok(())
}
