//! Filtering cost against tap length for 10 s of 16 kHz audio.

use diffvc::runtime::bench_filtering;
use diffvc::spectral::{AnalysisConfig, ConvolutionMode};

fn main() -> diffvc::Result<()> {
    let cfg = AnalysisConfig::narrow_band();
    for mode in [ConvolutionMode::Direct, ConvolutionMode::Fft] {
        let report = bench_filtering(&[32, 64, 128, 256, 512], 10.0, &cfg, mode, 5, 0)?;
        println!("{mode:?} (R² {:.4})", report.r_squared);
        print!("{}", report.to_csv());
    }
    Ok(())
}
