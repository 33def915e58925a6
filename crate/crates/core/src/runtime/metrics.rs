use std::fmt::Write as _;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::bench::BenchRow;
use crate::cepstrum::{reconstruct_spectrum, CepstrumVector};
use crate::error::{Error, Result};
use crate::filter::filter_from_spectrum;
use crate::model::AcousticModel;
use crate::train::{chain_outputs, FrameSet, TruncationChain};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub name: String,
    pub frames: usize,
    pub rmse: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub taps: usize,
    pub utterances: Vec<UtteranceScore>,
    /// Over all frames of all utterances.
    pub aggregate_rmse: f64,
    /// Tap index → normalised cumulative energy.
    pub cumulative_power: Vec<f64>,
    pub timing: Vec<BenchRow>,
}

/// `sqrt((1/T) Σ_t ‖target_t − converted_t‖²)`.
pub fn rmse(target: &Array2<f64>, converted: &Array2<f64>) -> Result<f64> {
    Ok((squared_error_sum(target, converted)? / target.nrows() as f64).sqrt())
}

fn squared_error_sum(target: &Array2<f64>, converted: &Array2<f64>) -> Result<f64> {
    if target.dim() != converted.dim() {
        return Err(Error::ShapeMismatch(format!(
            "target {:?} vs converted {:?}",
            target.dim(),
            converted.dim()
        )));
    }
    if target.nrows() == 0 {
        return Err(Error::EmptyInput("frames"));
    }
    Ok((target - converted).iter().map(|e| e * e).sum())
}

/// Per-utterance and aggregate RMSE through the truncation chain with
/// `taps` taps.
pub fn eval_rmse(model: &AcousticModel, sets: &[(String, FrameSet)], taps: usize) -> Result<MetricsReport> {
    if sets.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    let chain = TruncationChain::new(&model.analysis, taps, None)?;
    let mut report = MetricsReport {
        taps,
        ..Default::default()
    };
    let (mut total, mut frames) = (0.0, 0);
    for (name, set) in sets {
        let converted = chain_outputs(model, set, &chain)?;
        let sq = squared_error_sum(&set.target_cep, &converted)?;
        total += sq;
        frames += set.len();
        report.utterances.push(UtteranceScore {
            name: name.clone(),
            frames: set.len(),
            rmse: (sq / set.len() as f64).sqrt(),
        });
    }
    report.aggregate_rmse = (total / frames as f64).sqrt();
    Ok(report)
}

/// Frame-averaged normalised cumulative energy of the untruncated
/// differential filters predicted for the source frames.
pub fn cumulative_power(model: &AcousticModel, sets: &[FrameSet]) -> Result<Vec<f64>> {
    let cfg = &model.analysis;
    let mut curve = vec![0.0; cfg.fft_len];
    let mut frames = 0usize;
    for set in sets {
        let cep_d = model.infer(&set.source_cep)?;
        for (t, row) in cep_d.rows().into_iter().enumerate() {
            let spec = reconstruct_spectrum(&CepstrumVector::new(row.to_vec()), &model.lifter, cfg)?;
            let filter = filter_from_spectrum(&spec, t).0;
            for (acc, v) in curve.iter_mut().zip(filter.cumulative_power()) {
                *acc += v;
            }
            frames += 1;
        }
    }
    if frames == 0 {
        return Err(Error::EmptyInput("frames"));
    }
    curve.iter_mut().for_each(|v| *v /= frames as f64);
    Ok(curve)
}

/// First index whose cumulative power reaches `level`, counted in taps
/// (index + 1).
pub fn taps_to_reach(curve: &[f64], level: f64) -> Option<usize> {
    curve.iter().position(|&v| v >= level).map(|i| i + 1)
}

impl MetricsReport {
    pub fn rmse_csv(&self) -> String {
        let mut s = String::from("utterance,frames,taps,rmse\n");
        for u in &self.utterances {
            let _ = writeln!(s, "{},{},{},{}", u.name, u.frames, self.taps, u.rmse);
        }
        let total: usize = self.utterances.iter().map(|u| u.frames).sum();
        let _ = writeln!(s, "ALL,{total},{},{}", self.taps, self.aggregate_rmse);
        s
    }
}

pub fn cumulative_power_csv(curve: &[f64]) -> String {
    let mut s = String::from("tap,cumulative_power\n");
    for (i, v) in curve.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, v);
    }
    s
}

/// Trained lifter next to the minimum-phase one.
pub fn lifter_csv(model: &AcousticModel) -> Result<String> {
    let reference = crate::cepstrum::Lifter::minimum_phase(&model.analysis)?;
    let mut s = String::from("index,trained,minimum_phase,difference\n");
    for (i, (u, m)) in model.lifter.coeffs.iter().zip(&reference.coeffs).enumerate() {
        let _ = writeln!(s, "{i},{u},{m},{}", u - m);
    }
    Ok(s)
}
