//! WAV I/O, conversion, evaluation, diagnostics, benchmarking, run
//! configuration and the synthetic corpus.

pub mod bench;
pub mod commands;
pub mod config;
pub mod convert;
pub mod metrics;
pub mod synth;
pub mod wav;

pub use bench::{bench_filtering, linear_r_squared, BenchReport, BenchRow};
pub use config::{read_pair_list, write_pair_list, GateSettings, RunConfig, RunPaths};
pub use convert::{convert, differential_filters, Conversion, ConvertOptions, SAFETY_CLAMP};
pub use metrics::{
    cumulative_power, cumulative_power_csv, eval_rmse, lifter_csv, rmse, taps_to_reach, MetricsReport,
    UtteranceScore,
};
pub use synth::SyntheticTask;
pub use wav::{read_wav, write_wav};
