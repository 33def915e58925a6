//! Aligns a source utterance with a time-stretched target.

use diffvc::runtime::SyntheticTask;
use diffvc::spectral::{AnalysisConfig, Waveform};
use diffvc::train::prepare_pair;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> diffvc::Result<()> {
    let cfg = AnalysisConfig::narrow_band();
    let task = SyntheticTask::new(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y) = task.pair(1.0, &mut rng)?;
    // stretch the target by 25 % with linear interpolation
    let stretched: Vec<f64> = (0..y.len() * 5 / 4)
        .map(|i| {
            let p = i as f64 * 0.8;
            let (k, f) = (p as usize, p.fract());
            y.samples[k] * (1.0 - f) + y.samples.get(k + 1).copied().unwrap_or(0.0) * f
        })
        .collect();
    let y = Waveform::new(stretched, y.sample_rate)?;
    let pair = prepare_pair(&x, &y, &cfg, 40.0)?;
    let (ls, lt) = *pair.path.last().expect("non-empty path");
    println!("source {} frames, target {} frames, path {} steps", ls + 1, lt + 1, pair.len());
    for k in (0..pair.len()).step_by(pair.len() / 8) {
        println!("  step {k:>4}: source {:>3} -> target {:>3}", pair.path[k].0, pair.path[k].1);
    }
    Ok(())
}
