use std::fmt::Write as _;
use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{ola_filter, AnalysisConfig, ConvolutionMode, Waveform};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub taps: usize,
    pub median_ns: f64,
    pub ns_per_sample: f64,
    /// Median time at `l = N` over median time at this `l`.
    pub speedup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub samples: usize,
    pub repeats: usize,
    pub rows: Vec<BenchRow>,
    /// Coefficient of determination of a least-squares line through
    /// (taps, median time) over all rows.
    pub r_squared: f64,
}

impl BenchReport {
    pub fn row(&self, taps: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.taps == taps)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("taps,median_ns,ns_per_sample,speedup\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{:.0},{:.3},{:.3}", r.taps, r.median_ns, r.ns_per_sample, r.speedup);
        }
        s
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// R² of the ordinary least-squares line through `(x, y)`.
pub fn linear_r_squared(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Median-of-`repeats` wall time of [`ola_filter`] on `seconds` of noise
/// with random per-frame filters of each length. `l = N` is always measured
/// as the speedup reference.
pub fn bench_filtering(
    taps: &[usize],
    seconds: f64,
    cfg: &AnalysisConfig,
    mode: ConvolutionMode,
    repeats: usize,
    seed: u64,
) -> Result<BenchReport> {
    cfg.validate()?;
    if taps.is_empty() || repeats == 0 {
        return Err(Error::InvalidConfig("bench needs tap lengths and repeats".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seconds * cfg.sample_rate as f64).round() as usize;
    if n == 0 {
        return Err(Error::EmptyInput("bench duration"));
    }
    let wave = Waveform::new((0..n).map(|_| rng.gen_range(-0.5..0.5)).collect(), cfg.sample_rate)?;
    let frames = cfg.num_frames(n);
    let full: Vec<Vec<f64>> = (0..frames)
        .map(|_| (0..cfg.fft_len).map(|_| rng.gen_range(-0.1..0.1)).collect())
        .collect();

    let measure = |l: usize| -> Result<f64> {
        if l == 0 || l > cfg.fft_len {
            return Err(Error::TapLength { taps: l, fft_len: cfg.fft_len });
        }
        let filters: Vec<&[f64]> = full.iter().map(|f| &f[..l]).collect();
        black_box(ola_filter(&wave, &filters, cfg, mode)?);
        let mut times = Vec::with_capacity(repeats);
        for _ in 0..repeats {
            let start = Instant::now();
            black_box(ola_filter(black_box(&wave), &filters, cfg, mode)?);
            times.push(start.elapsed().as_nanos() as f64);
        }
        Ok(median(times))
    };

    let mut measured: Vec<(usize, f64)> = Vec::new();
    for &l in taps {
        measured.push((l, measure(l)?));
    }
    let reference = match measured.iter().find(|(l, _)| *l == cfg.fft_len) {
        Some(&(_, t)) => t,
        None => measure(cfg.fft_len)?,
    };
    let rows: Vec<BenchRow> = measured
        .iter()
        .map(|&(l, t)| BenchRow {
            taps: l,
            median_ns: t,
            ns_per_sample: t / n as f64,
            speedup: reference / t,
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.taps as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_ns).collect();
    Ok(BenchReport {
        samples: n,
        repeats,
        r_squared: linear_r_squared(&xs, &ys),
        rows,
    })
}
