//! Data preparation, conventional pretraining and truncation-aware joint
//! training of the acoustic model and lifter.

pub mod chain;
pub mod data;
pub mod dtw;
pub mod silence;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::SubbandGate;
use crate::model::{AcousticModel, AdamState, ForwardCache, Mode, ModelGrads, Normalizer};
use crate::spectral::AnalysisConfig;

pub use chain::{ChainGrads, ChainTrace, TruncationChain};
pub use data::{cepstrogram, load_frames, prepare_pair, save_frames, AlignedPair, FrameSet};
pub use dtw::{dtw_align, WarpingPath};
pub use silence::{trim_silence, DEFAULT_SILENCE_DB};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Truncation length `l` used by the joint stage.
    pub taps: usize,
    pub pretrain_lr: f64,
    /// Model learning rate in the joint stage.
    pub lifter_stage_lr: f64,
    /// Lifter learning rate in the joint stage; `None` reuses `lifter_stage_lr`.
    #[serde(default)]
    pub lifter_lr: Option<f64>,
    pub batch_size: usize,
    pub pretrain_epochs: usize,
    pub lifter_epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub gate_in_training: bool,
    pub silence_db: f64,
}

impl TrainConfig {
    /// Defaults for the given analysis setup, with no truncation.
    pub fn for_analysis(cfg: &AnalysisConfig) -> Self {
        let (pretrain_lr, lifter_stage_lr) = if cfg.sample_rate >= 48_000 {
            (0.0001, 0.000005)
        } else {
            (0.0005, 0.00001)
        };
        Self {
            taps: cfg.fft_len,
            pretrain_lr,
            lifter_stage_lr,
            lifter_lr: None,
            batch_size: 1000,
            pretrain_epochs: 100,
            lifter_epochs: 100,
            seed: 0,
            gate_in_training: false,
            silence_db: DEFAULT_SILENCE_DB,
        }
    }

    pub fn validate(&self, cfg: &AnalysisConfig) -> Result<()> {
        if self.taps == 0 || self.taps > cfg.fft_len {
            return Err(Error::TapLength {
                taps: self.taps,
                fft_len: cfg.fft_len,
            });
        }
        let rates = [self.pretrain_lr, self.lifter_stage_lr, self.effective_lifter_lr()];
        if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidConfig(format!("learning rates must be positive: {rates:?}")));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size is zero".into()));
        }
        if !(self.silence_db.is_finite() && self.silence_db > 0.0) {
            return Err(Error::InvalidConfig(format!("silence threshold {} dB", self.silence_db)));
        }
        Ok(())
    }

    pub fn effective_lifter_lr(&self) -> f64 {
        self.lifter_lr.unwrap_or(self.lifter_stage_lr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 0 is the evaluation before any update.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub rmse: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub entries: Vec<EpochLog>,
}

impl TrainingLog {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,val_loss,rmse,wall_time_s";

    pub fn last(&self) -> Option<&EpochLog> {
        self.entries.last()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:.3}",
                e.epoch, e.train_loss, e.val_loss, e.rmse, e.wall_time_s
            );
        }
        s
    }

    /// Loss columns only, as raw bit patterns — what must repeat exactly for
    /// a fixed seed.
    pub fn loss_bits(&self) -> Vec<[u64; 3]> {
        self.entries
            .iter()
            .map(|e| [e.train_loss.to_bits(), e.val_loss.to_bits(), e.rmse.to_bits()])
            .collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(Error::at_path(path))
    }
}

fn check_frames(model: &AcousticModel, frames: &FrameSet) -> Result<()> {
    frames.validate()?;
    if frames.analysis != model.analysis {
        return Err(Error::InvalidConfig(format!(
            "frames analysed with {:?}, model expects {:?}",
            frames.analysis, model.analysis
        )));
    }
    Ok(())
}

fn mean_row_sq(diff: &Array2<f64>) -> f64 {
    diff.rows().into_iter().map(|r| r.dot(&r)).sum::<f64>() / diff.nrows() as f64
}

/// `(1/T) Σ ‖C_Y − (C_X + C_D)‖²` with the model in inference mode.
pub fn conventional_loss(model: &AcousticModel, frames: &FrameSet) -> Result<f64> {
    check_frames(model, frames)?;
    let cep_d = model.infer(&frames.source_cep)?;
    Ok(mean_row_sq(&(&frames.differential() - &cep_d)))
}

/// `Ĉ_Y` for every frame, model in inference mode.
pub fn chain_outputs(model: &AcousticModel, frames: &FrameSet, chain: &TruncationChain) -> Result<Array2<f64>> {
    check_frames(model, frames)?;
    let cep_d = model.infer(&frames.source_cep)?;
    let mut out = Array2::zeros(cep_d.dim());
    for (t, row) in cep_d.rows().into_iter().enumerate() {
        let cd = row.to_vec();
        let y = chain.forward(&cd, &model.lifter.coeffs, &frames.source_spec[t].bins)?;
        out.row_mut(t).assign(&ndarray::ArrayView1::from(&y[..]));
    }
    Ok(out)
}

/// `(1/T) Σ ‖C_Y − Ĉ_Y‖²` through the truncation chain, inference mode.
pub fn chain_loss(model: &AcousticModel, frames: &FrameSet, chain: &TruncationChain) -> Result<f64> {
    let out = chain_outputs(model, frames, chain)?;
    Ok(mean_row_sq(&(&frames.target_cep - &out)))
}

/// Square root of [`chain_loss`].
pub fn chain_rmse(model: &AcousticModel, frames: &FrameSet, chain: &TruncationChain) -> Result<f64> {
    Ok(chain_loss(model, frames, chain)?.sqrt())
}

/// Mean chain loss over a batch and its gradients, batch norm in train mode.
#[derive(Clone, Debug)]
pub struct BatchGradients {
    pub loss: f64,
    pub model: ModelGrads,
    pub lifter: Vec<f64>,
    pub cache: ForwardCache,
}

/// Train-mode chain loss of a batch, without gradients.
pub fn chain_batch_loss(
    model: &AcousticModel,
    frames: &FrameSet,
    batch: &[usize],
    chain: &TruncationChain,
) -> Result<f64> {
    let x = frames.source_cep.select(Axis(0), batch);
    let (cep_d, _) = model.forward_batch(&x, Mode::Train)?;
    let mut total = 0.0;
    for (row, &t) in cep_d.rows().into_iter().zip(batch) {
        let target = frames.target_cep.row(t).to_vec();
        let (_, l) = chain.forward_loss(&row.to_vec(), &model.lifter.coeffs, &frames.source_spec[t].bins, &target)?;
        total += l;
    }
    Ok(total / batch.len() as f64)
}

/// Train-mode chain loss of a batch with gradients for every model tensor and
/// the lifter. Per-frame contributions are reduced in batch order.
pub fn chain_batch_gradients(
    model: &AcousticModel,
    frames: &FrameSet,
    batch: &[usize],
    chain: &TruncationChain,
) -> Result<BatchGradients> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("batch"));
    }
    let x = frames.source_cep.select(Axis(0), batch);
    let (cep_d, cache) = model.forward_batch(&x, Mode::Train)?;
    let scale = 1.0 / batch.len() as f64;
    let c = model.cep_dim();
    let mut grad_out = Array2::zeros((batch.len(), c));
    let mut lifter = vec![0.0; c];
    let mut loss = 0.0;
    for (k, &t) in batch.iter().enumerate() {
        let target = frames.target_cep.row(t).to_vec();
        let (l, g) = chain.loss_and_grad(
            &cep_d.row(k).to_vec(),
            &model.lifter.coeffs,
            &frames.source_spec[t].bins,
            &target,
        )?;
        loss += l;
        for (dst, v) in grad_out.row_mut(k).iter_mut().zip(&g.cep_d) {
            *dst = v * scale;
        }
        for (dst, v) in lifter.iter_mut().zip(&g.lifter) {
            *dst += v * scale;
        }
    }
    let (model_grads, _) = model.backward(&cache, &grad_out)?;
    Ok(BatchGradients {
        loss: loss * scale,
        model: model_grads,
        lifter,
        cache,
    })
}

fn shuffled_batches(n: usize, batch: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch).map(<[usize]>::to_vec).collect()
}

/// Fits the input normaliser to `C_X` and the output normaliser to
/// `C_Y − C_X` of the training frames.
pub fn fit_normalizers(model: &mut AcousticModel, train: &FrameSet) -> Result<()> {
    check_frames(model, train)?;
    model.input_norm = Normalizer::fit(&train.source_cep)?;
    model.output_norm = Normalizer::fit(&train.differential())?;
    Ok(())
}

/// Conventional training: fits the normalisers, then minimises
/// `‖C_Y − C_X − C_D‖²` with Adam. The lifter is left untouched.
pub fn pretrain_conventional(
    model: &mut AcousticModel,
    train: &FrameSet,
    val: &FrameSet,
    cfg: &TrainConfig,
) -> Result<TrainingLog> {
    cfg.validate(&model.analysis)?;
    check_frames(model, val)?;
    fit_normalizers(model, train)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(cfg.pretrain_lr, &model.parameter_sizes());
    let target = train.differential();

    let mut log = TrainingLog::default();
    let record = |log: &mut TrainingLog, epoch, train_loss, model: &AcousticModel| -> Result<()> {
        let val_loss = conventional_loss(model, val)?;
        let entry = EpochLog {
            epoch,
            train_loss,
            val_loss,
            rmse: val_loss.sqrt(),
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "pretrain epoch {epoch}: train {train_loss:.6} val {val_loss:.6} ({:.1}s)",
            entry.wall_time_s
        );
        log.entries.push(entry);
        Ok(())
    };
    record(&mut log, 0, conventional_loss(model, train)?, model)?;

    for epoch in 1..=cfg.pretrain_epochs {
        let mut total = 0.0;
        for batch in shuffled_batches(train.len(), cfg.batch_size, &mut rng) {
            let x = train.source_cep.select(Axis(0), &batch);
            let y = target.select(Axis(0), &batch);
            let (out, cache) = model.forward_batch(&x, Mode::Train)?;
            let diff = &out - &y;
            total += diff.rows().into_iter().map(|r| r.dot(&r)).sum::<f64>();
            let grad = diff * (2.0 / batch.len() as f64);
            let (grads, _) = model.backward(&cache, &grad)?;
            model.commit_batch_statistics(&cache);
            adam.update(&mut model.parameters_mut(), &grads.as_slices())?;
        }
        record(&mut log, epoch, total / train.len() as f64, model)?;
    }
    Ok(log)
}

#[allow(clippy::too_many_arguments)]
fn joint_training(
    model: &mut AcousticModel,
    train: &FrameSet,
    val: &FrameSet,
    cfg: &TrainConfig,
    gate: Option<&SubbandGate>,
    model_lr: f64,
    epochs: usize,
    stage_seed: u64,
) -> Result<TrainingLog> {
    cfg.validate(&model.analysis)?;
    check_frames(model, train)?;
    check_frames(model, val)?;
    let gate = if cfg.gate_in_training { gate } else { None };
    let chain = TruncationChain::new(&model.analysis, cfg.taps, gate)?;
    let train_lifter = model.lifter.trainable;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ stage_seed);
    let mut adam = AdamState::new(model_lr, &model.parameter_sizes());
    let mut lifter_adam = AdamState::new(cfg.effective_lifter_lr(), &[model.lifter.len()]);

    let mut log = TrainingLog::default();
    let record = |log: &mut TrainingLog, epoch, train_loss, model: &AcousticModel| -> Result<()> {
        let val_loss = chain_loss(model, val, &chain)?;
        let entry = EpochLog {
            epoch,
            train_loss,
            val_loss,
            rmse: val_loss.sqrt(),
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        log::info!(
            "l={} epoch {epoch}: train {train_loss:.6} val {val_loss:.6} rmse {:.6} ({:.1}s)",
            chain.taps(),
            entry.rmse,
            entry.wall_time_s
        );
        log.entries.push(entry);
        Ok(())
    };
    record(&mut log, 0, chain_loss(model, train, &chain)?, model)?;

    for epoch in 1..=epochs {
        let mut total = 0.0;
        for batch in shuffled_batches(train.len(), cfg.batch_size, &mut rng) {
            let g = chain_batch_gradients(model, train, &batch, &chain)?;
            total += g.loss * batch.len() as f64;
            model.commit_batch_statistics(&g.cache);
            adam.update(&mut model.parameters_mut(), &g.model.as_slices())?;
            if train_lifter {
                lifter_adam.update(&mut [&mut model.lifter.coeffs[..]], &[&g.lifter[..]])?;
            }
        }
        record(&mut log, epoch, total / train.len() as f64, model)?;
    }
    Ok(log)
}

/// Joint fine-tuning of a pretrained model and its lifter through the
/// truncation chain with `cfg.taps` taps. The lifter is marked trainable; use
/// [`finetune_fixed_lifter`] to keep it frozen.
pub fn train_lifter(
    model: &mut AcousticModel,
    train: &FrameSet,
    val: &FrameSet,
    cfg: &TrainConfig,
    gate: Option<&SubbandGate>,
) -> Result<TrainingLog> {
    model.lifter.trainable = true;
    joint_training(model, train, val, cfg, gate, cfg.lifter_stage_lr, cfg.lifter_epochs, 0x11f7)
}

/// Same as [`train_lifter`] but with the lifter held fixed.
pub fn finetune_fixed_lifter(
    model: &mut AcousticModel,
    train: &FrameSet,
    val: &FrameSet,
    cfg: &TrainConfig,
    gate: Option<&SubbandGate>,
) -> Result<TrainingLog> {
    model.lifter.trainable = false;
    joint_training(model, train, val, cfg, gate, cfg.lifter_stage_lr, cfg.lifter_epochs, 0x11f7)
}

/// Ablation: trains model and lifter through the chain from scratch, with
/// the pretraining learning rate and epoch count.
pub fn train_single_stage(
    model: &mut AcousticModel,
    train: &FrameSet,
    val: &FrameSet,
    cfg: &TrainConfig,
    gate: Option<&SubbandGate>,
) -> Result<TrainingLog> {
    fit_normalizers(model, train)?;
    model.lifter.trainable = true;
    joint_training(model, train, val, cfg, gate, cfg.pretrain_lr, cfg.pretrain_epochs, 0x5157)
}
