//! One training step of the GLU acoustic model by hand, then a save/load
//! round trip.

use diffvc::model::{load_model, save_model, AcousticModel, AdamState, Mode};
use diffvc::spectral::AnalysisConfig;
use ndarray::Array2;

fn main() -> diffvc::Result<()> {
    let cfg = AnalysisConfig::narrow_band();
    let mut model = AcousticModel::new(&cfg, &AcousticModel::default_hidden(&cfg), 7)?;
    let x = Array2::from_shape_fn((16, cfg.cep_dim), |(i, k)| ((i * 7 + k * 3) % 11) as f64 / 11.0 - 0.5);
    let target = x.mapv(|v| 0.5 * v);
    let mut adam = AdamState::new(1e-3, &model.parameter_sizes());
    for step in 0..50 {
        let (out, cache) = model.forward_batch(&x, Mode::Train)?;
        let diff = &out - &target;
        let loss = diff.iter().map(|e| e * e).sum::<f64>() / x.nrows() as f64;
        let (grads, _) = model.backward(&cache, &(diff * (2.0 / x.nrows() as f64)))?;
        model.commit_batch_statistics(&cache);
        adam.update(&mut model.parameters_mut(), &grads.as_slices())?;
        if step % 10 == 0 {
            println!("step {step:>2}: loss {loss:.5}");
        }
    }
    let path = std::env::temp_dir().join("diffvc_example.model");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    println!("reloaded model identical: {}", loaded == model);
    println!("inference on the batch matches: {}", loaded.infer(&x)? == model.infer(&x)?);
    std::fs::remove_file(path)?;
    Ok(())
}
