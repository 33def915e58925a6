//! Designs a minimum-phase differential filter from a cepstrum, truncates it
//! and shows how much of its energy the first taps hold.

use diffvc::cepstrum::{minimum_phase_lifter, CepstrumVector, Lifter};
use diffvc::filter::{design_filter, truncate, truncated_spectrum};
use diffvc::runtime::SyntheticTask;
use diffvc::spectral::AnalysisConfig;

fn main() -> diffvc::Result<()> {
    let cfg = AnalysisConfig::narrow_band();
    let full = minimum_phase_lifter(cfg.fft_len)?;
    println!("minimum-phase lifter: u[0]={} u[1]={} u[N/2]={} u[N/2+1]={}", full[0], full[1], full[256], full[257]);

    let cep_d = CepstrumVector::new(SyntheticTask::new(&cfg)?.differential);
    let filter = design_filter(&cep_d, &Lifter::minimum_phase(&cfg)?, &cfg)?;
    let curve = filter.cumulative_power();
    for taps in [8, 16, 32, 64, 128, 512] {
        let short = truncate(&filter, taps)?;
        let spec = truncated_spectrum(&short, &cfg)?;
        let peak_db = spec.magnitudes().iter().fold(0.0f64, |m, v| m.max(20.0 * v.log10()));
        println!("l={taps:<4} energy kept {:.5}  peak gain {peak_db:+.2} dB", curve[taps - 1]);
    }
    Ok(())
}
