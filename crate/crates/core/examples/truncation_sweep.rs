//! Trains the lifter at several truncation lengths on the synthetic task and
//! compares it with the fixed minimum-phase lifter.
//!
//! ```text
//! cargo run --release --example truncation_sweep -- [epochs] [utterances]
//! ```

use std::time::Instant;

use diffvc::model::AcousticModel;
use diffvc::runtime::SyntheticTask;
use diffvc::spectral::AnalysisConfig;
use diffvc::train::{chain_rmse, pretrain_conventional, train_lifter, TrainConfig, TruncationChain};

fn main() -> diffvc::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let utterances: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(40);

    let cfg = AnalysisConfig::narrow_band();
    let task = SyntheticTask::new(&cfg)?;
    let t0 = Instant::now();
    let train = task.frame_set(utterances, 1.0, 1, 40.0)?;
    let val = task.frame_set(utterances / 4, 1.0, 2, 40.0)?;
    println!("{} train / {} val frames ({:.1}s)", train.len(), val.len(), t0.elapsed().as_secs_f64());

    let tc = TrainConfig {
        pretrain_lr: 1e-3,
        lifter_stage_lr: 1e-4,
        lifter_lr: Some(1e-2),
        batch_size: 256,
        pretrain_epochs: 25,
        lifter_epochs: epochs,
        ..TrainConfig::for_analysis(&cfg)
    };
    let mut base = AcousticModel::new(&cfg, &AcousticModel::default_hidden(&cfg), 0)?;
    pretrain_conventional(&mut base, &train, &val, &tc)?;
    let reference = chain_rmse(&base, &val, &TruncationChain::new(&cfg, cfg.fft_len, None)?)?;
    println!("pretrained, l={}: rmse {reference:.5} ({:.1}s)", cfg.fft_len, t0.elapsed().as_secs_f64());

    println!("taps,fixed_rmse,trained_rmse,gap,trained_over_reference");
    for taps in [32, 48, 64, 128] {
        let chain = TruncationChain::new(&cfg, taps, None)?;
        let fixed = chain_rmse(&base, &val, &chain)?;
        let mut model = base.clone();
        train_lifter(&mut model, &train, &val, &TrainConfig { taps, ..tc.clone() }, None)?;
        let trained = chain_rmse(&model, &val, &chain)?;
        println!(
            "{taps},{fixed:.5},{trained:.5},{:.5},{:.4}  ({:.1}s)",
            fixed - trained,
            trained / reference,
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
