//! Subcommand bodies. Each writes only to the paths it is given or to the
//! configured output directory.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::bench::{bench_filtering, BenchReport};
use super::config::{read_pair_list, write_pair_list, RunConfig};
use super::convert::{convert, Conversion, ConvertOptions};
use super::metrics::{cumulative_power, eval_rmse, lifter_csv, MetricsReport};
use super::synth::SyntheticTask;
use super::wav::{read_wav, write_wav};
use crate::error::{Error, Result};
use crate::filter::SubbandGate;
use crate::model::{load_model, save_model, AcousticModel};
use crate::spectral::{AnalysisConfig, ConvolutionMode};
use crate::train::{
    load_frames, prepare_pair, pretrain_conventional, save_frames, train_lifter, FrameSet, TrainingLog,
};

pub const TRAIN_FRAMES: &str = "train.frames";
pub const VAL_FRAMES: &str = "val.frames";
pub const TEST_FRAMES: &str = "test.frames";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(Error::at_path(dir))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::at_path(path))
}

fn utterance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Aligned frames of every pair in a list, one set per pair.
pub fn load_pair_sets(list: &Path, cfg: &AnalysisConfig, silence_db: f64) -> Result<Vec<(String, FrameSet)>> {
    read_pair_list(list)?
        .into_iter()
        .map(|(src, tgt)| {
            let pair = prepare_pair(&read_wav(&src)?, &read_wav(&tgt)?, cfg, silence_db)?;
            Ok((utterance_name(&src), FrameSet::from_pairs(&[pair], cfg)?))
        })
        .collect()
}

fn pooled(list: &Path, cfg: &AnalysisConfig, silence_db: f64) -> Result<FrameSet> {
    let sets = load_pair_sets(list, cfg, silence_db)?;
    let pairs: Vec<_> = sets.into_iter().map(|(_, s)| s).collect();
    let mut merged = pairs[0].clone();
    for s in &pairs[1..] {
        merged.source_cep.append(ndarray::Axis(0), s.source_cep.view()).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        merged.target_cep.append(ndarray::Axis(0), s.target_cep.view()).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        merged.source_spec.extend(s.source_spec.iter().cloned());
    }
    Ok(merged)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepSummary {
    pub train_frames: usize,
    pub val_frames: usize,
    pub test_frames: Option<usize>,
}

/// Trims, analyses and aligns every list, writing `*.frames` files to the
/// output directory.
pub fn prep(cfg: &RunConfig) -> Result<PrepSummary> {
    let out = &cfg.paths.output_dir;
    ensure_dir(out)?;
    let db = cfg.train.silence_db;
    let train = pooled(&cfg.paths.train_list, &cfg.analysis, db)?;
    save_frames(&train, out.join(TRAIN_FRAMES))?;
    let val = pooled(&cfg.paths.val_list, &cfg.analysis, db)?;
    save_frames(&val, out.join(VAL_FRAMES))?;
    let test_frames = match &cfg.paths.test_list {
        Some(list) => {
            let test = pooled(list, &cfg.analysis, db)?;
            save_frames(&test, out.join(TEST_FRAMES))?;
            Some(test.len())
        }
        None => None,
    };
    let summary = PrepSummary {
        train_frames: train.len(),
        val_frames: val.len(),
        test_frames,
    };
    info!("prepared {summary:?}");
    Ok(summary)
}

fn load_train_val(cfg: &RunConfig) -> Result<(FrameSet, FrameSet)> {
    let out = &cfg.paths.output_dir;
    Ok((load_frames(out.join(TRAIN_FRAMES))?, load_frames(out.join(VAL_FRAMES))?))
}

/// Conventional pretraining from the prepared frames; saves the model to
/// `paths.model` and the log to `pretrain_log.csv`.
pub fn pretrain(cfg: &RunConfig) -> Result<TrainingLog> {
    let (train, val) = load_train_val(cfg)?;
    let mut model = AcousticModel::new(&cfg.analysis, &cfg.hidden_sizes(), cfg.model_seed)?;
    let log = pretrain_conventional(&mut model, &train, &val, &cfg.train)?;
    if let Some(parent) = cfg.paths.model.parent() {
        ensure_dir(parent)?;
    }
    save_model(&model, &cfg.paths.model)?;
    ensure_dir(&cfg.paths.output_dir)?;
    log.write_csv(cfg.paths.output_dir.join("pretrain_log.csv"))?;
    Ok(log)
}

pub fn lifter_model_path(cfg: &RunConfig, taps: usize) -> PathBuf {
    cfg.paths.output_dir.join(format!("lifter_l{taps}.model"))
}

/// Joint fine-tuning at `taps` taps from the pretrained model. Writes the
/// model, the epoch log and the lifter coefficients to the output directory.
pub fn train_lifter_stage(cfg: &RunConfig, taps: usize) -> Result<(PathBuf, TrainingLog)> {
    let tc = crate::train::TrainConfig { taps, ..cfg.train.clone() };
    let (train, val) = load_train_val(cfg)?;
    let mut model = load_model(&cfg.paths.model)?;
    let gate = cfg.subband.gate(&cfg.analysis)?;
    let log = train_lifter(&mut model, &train, &val, &tc, gate.as_ref())?;
    let out = &cfg.paths.output_dir;
    ensure_dir(out)?;
    let path = lifter_model_path(cfg, taps);
    save_model(&model, &path)?;
    log.write_csv(out.join(format!("lifter_log_l{taps}.csv")))?;
    write_text(&out.join(format!("lifter_l{taps}.csv")), &lifter_csv(&model)?)?;
    Ok((path, log))
}

pub fn convert_file(
    model_path: &Path,
    input: &Path,
    output: &Path,
    taps: Option<usize>,
    gate: Option<SubbandGate>,
) -> Result<Conversion> {
    let model = load_model(model_path)?;
    let wave = read_wav(input)?;
    let opts = ConvertOptions {
        taps: taps.unwrap_or(model.analysis.fft_len),
        gate,
        mode: ConvolutionMode::Auto,
    };
    let result = convert(&wave, &model, &opts)?;
    write_wav(output, &result.wave)?;
    Ok(result)
}

pub fn eval_pairs(model_path: &Path, pairs: &Path, taps: usize, silence_db: f64) -> Result<MetricsReport> {
    let model = load_model(model_path)?;
    let sets = load_pair_sets(pairs, &model.analysis, silence_db)?;
    eval_rmse(&model, &sets, taps)
}

pub fn cumulative_power_pairs(model_path: &Path, pairs: &Path, silence_db: f64) -> Result<Vec<f64>> {
    let model = load_model(model_path)?;
    let sets: Vec<FrameSet> = load_pair_sets(pairs, &model.analysis, silence_db)?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    cumulative_power(&model, &sets)
}

pub fn bench(taps: &[usize], seconds: f64, cfg: &AnalysisConfig, mode: ConvolutionMode, repeats: usize) -> Result<BenchReport> {
    bench_filtering(taps, seconds, cfg, mode, repeats, 0)
}

/// Writes synthetic train/val/test pairs, their lists and a default run
/// configuration into `dir`.
pub fn synth_corpus(
    dir: &Path,
    analysis: &AnalysisConfig,
    counts: [usize; 3],
    seconds: f64,
    seed: u64,
) -> Result<PathBuf> {
    use rand::SeedableRng;
    ensure_dir(dir)?;
    let task = SyntheticTask::new(analysis)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for (split, count) in ["train", "val", "test"].iter().zip(counts) {
        let mut entries = Vec::with_capacity(count);
        for i in 0..count {
            let (x, y) = task.pair(seconds, &mut rng)?;
            let (src, tgt) = (format!("{split}_{i:03}_src.wav"), format!("{split}_{i:03}_tgt.wav"));
            write_wav(dir.join(&src), &x)?;
            write_wav(dir.join(&tgt), &y)?;
            entries.push((src, tgt));
        }
        write_pair_list(dir.join(format!("{split}.list")), &entries)?;
    }
    let cfg = RunConfig::with_defaults(*analysis, Path::new("."));
    let path = dir.join("run.json");
    cfg.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_on_a_tiny_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let analysis = AnalysisConfig::narrow_band();
        let config_path = synth_corpus(dir.path(), &analysis, [2, 1, 1], 0.4, 3).unwrap();
        let mut cfg = RunConfig::load(&config_path).unwrap();
        cfg.hidden = Some(vec![16, 8]);
        cfg.train.pretrain_epochs = 2;
        cfg.train.lifter_epochs = 1;
        cfg.train.batch_size = 64;

        let summary = prep(&cfg).unwrap();
        assert!(summary.train_frames >= 2 * analysis.num_frames(6400) - 20);
        let log = pretrain(&cfg).unwrap();
        assert_eq!(log.entries.len(), 3);
        let (model_path, _) = train_lifter_stage(&cfg, 64).unwrap();
        for f in ["pretrain_log.csv", "lifter_log_l64.csv", "lifter_l64.csv", TRAIN_FRAMES, VAL_FRAMES, TEST_FRAMES] {
            assert!(cfg.paths.output_dir.join(f).exists(), "{f}");
        }

        let test_list = cfg.paths.test_list.clone().unwrap();
        let a = eval_pairs(&model_path, &test_list, 64, 40.0).unwrap();
        let b = eval_pairs(&model_path, &test_list, 64, 40.0).unwrap();
        assert_eq!(a.rmse_csv(), b.rmse_csv());
        let curve = cumulative_power_pairs(&model_path, &test_list, 40.0).unwrap();
        assert!((curve.last().unwrap() - 1.0).abs() < 1e-9);

        let out = dir.path().join("converted.wav");
        let conv = convert_file(&model_path, &dir.path().join("test_000_src.wav"), &out, Some(64), None).unwrap();
        assert_eq!(read_wav(&out).unwrap().len(), conv.wave.len());
    }
}
