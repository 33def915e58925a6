//! Pretrains a model on the synthetic task and reports where the energy of
//! its minimum-phase differential filters sits.

use diffvc::model::AcousticModel;
use diffvc::runtime::{cumulative_power, taps_to_reach, SyntheticTask};
use diffvc::spectral::AnalysisConfig;
use diffvc::train::{pretrain_conventional, TrainConfig};

fn main() -> diffvc::Result<()> {
    let cfg = AnalysisConfig::narrow_band();
    let task = SyntheticTask::new(&cfg)?;
    let train = task.frame_set(10, 1.0, 1, 40.0)?;
    let val = task.frame_set(3, 1.0, 2, 40.0)?;
    let tc = TrainConfig {
        pretrain_lr: 1e-3,
        batch_size: 256,
        pretrain_epochs: 10,
        ..TrainConfig::for_analysis(&cfg)
    };
    let mut model = AcousticModel::new(&cfg, &AcousticModel::default_hidden(&cfg), 0)?;
    let log = pretrain_conventional(&mut model, &train, &val, &tc)?;
    println!("pretrained: val loss {:.5}", log.last().map_or(f64::NAN, |e| e.val_loss));
    let curve = cumulative_power(&model, &[val])?;
    for level in [0.9, 0.95, 0.99, 0.999] {
        println!("{:>5.1}% of energy within {:?} taps", 100.0 * level, taps_to_reach(&curve, level));
    }
    Ok(())
}
