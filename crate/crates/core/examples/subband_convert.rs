//! Full-band (48 kHz) conversion with the sub-band gate: the differential
//! filter acts below 8 kHz and the band above passes unchanged.

use std::f64::consts::PI;

use diffvc::filter::SubbandGate;
use diffvc::model::AcousticModel;
use diffvc::runtime::{convert, ConvertOptions};
use diffvc::spectral::{AnalysisConfig, Waveform};

fn band_rms(x: &[f64], freq: f64, sr: f64) -> f64 {
    // amplitude of one sinusoid by correlation
    let (mut c, mut s) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let p = 2.0 * PI * freq * i as f64 / sr;
        c += v * p.cos();
        s += v * p.sin();
    }
    2.0 * (c * c + s * s).sqrt() / x.len() as f64
}

fn main() -> diffvc::Result<()> {
    let cfg = AnalysisConfig::full_band();
    // +6 dB around 1 kHz, about −5 dB at 12 kHz
    let mut cep_d = vec![0.0; cfg.cep_dim];
    cep_d[1] = 0.3;
    cep_d[2] = 0.3;
    let model = AcousticModel::constant(&cfg, &[8], &cep_d)?;
    let sr = cfg.sample_rate as f64;
    let x = Waveform::new(
        (0..48_000)
            .map(|i| {
                let t = i as f64 / sr;
                0.2 * (2.0 * PI * 1_000.0 * t).sin() + 0.2 * (2.0 * PI * 12_000.0 * t).sin()
            })
            .collect(),
        48_000,
    )?;
    let plain = convert(&x, &model, &ConvertOptions::untruncated(&model))?;
    let gated = convert(
        &x,
        &model,
        &ConvertOptions {
            gate: Some(SubbandGate::default()),
            ..ConvertOptions::untruncated(&model)
        },
    )?;
    println!("clipped samples: {} without gate, {} gated", plain.clipped, gated.clipped);
    for (name, w) in [("input", &x), ("no gate", &plain.wave), ("gated", &gated.wave)] {
        println!(
            "{name:<8} 1 kHz amplitude {:.4}   12 kHz amplitude {:.4}",
            band_rms(&w.samples, 1_000.0, sr),
            band_rms(&w.samples, 12_000.0, sr)
        );
    }
    Ok(())
}
