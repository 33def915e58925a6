use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use diffvc::filter::SubbandGate;
use diffvc::model::load_model;
use diffvc::runtime::commands;
use diffvc::runtime::{cumulative_power_csv, RunConfig};
use diffvc::spectral::{AnalysisConfig, ConvolutionMode};
use diffvc::train::DEFAULT_SILENCE_DB;

#[derive(Parser)]
#[command(name = "diffvc", version, about = "Spectral-differential voice conversion with truncated filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Auto,
    Direct,
    Fft,
}

impl From<Mode> for ConvolutionMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Auto => ConvolutionMode::Auto,
            Mode::Direct => ConvolutionMode::Direct,
            Mode::Fft => ConvolutionMode::Fft,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Trim, analyse and align the train/val/test lists of a run.
    Prep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Conventional training of the acoustic model.
    Pretrain {
        #[arg(long)]
        config: PathBuf,
    },
    /// Joint training of model and lifter with truncation to L taps.
    TrainLifter {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        taps: usize,
    },
    /// Convert one WAV file.
    Convert {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        taps: Option<usize>,
        /// Leave the band above the crossover untouched.
        #[arg(long)]
        subband: bool,
        #[arg(long, default_value_t = SubbandGate::default().crossover_hz)]
        crossover_hz: f64,
        #[arg(long, default_value_t = SubbandGate::default().steepness_hz)]
        steepness_hz: f64,
    },
    /// Cepstral RMSE over a pair list, as CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        taps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SILENCE_DB)]
        silence_db: f64,
    },
    /// Cumulative power of the untruncated differential filters, as CSV.
    Cumpow {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SILENCE_DB)]
        silence_db: f64,
    },
    /// Time overlap-add filtering against the tap length, as CSV.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        taps: Vec<usize>,
        #[arg(long, default_value_t = 10.0)]
        seconds: f64,
        #[arg(long, value_enum, default_value_t = Mode::Direct)]
        mode: Mode,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 16_000)]
        sample_rate: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic speaker-pair corpus and a run configuration.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 16_000)]
        sample_rate: u32,
        #[arg(long, default_value_t = 40)]
        train: usize,
        #[arg(long, default_value_t = 10)]
        val: usize,
        #[arg(long, default_value_t = 10)]
        test: usize,
        #[arg(long, default_value_t = 1.0)]
        seconds: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn emit(text: &str, out: Option<&Path>) -> diffvc::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(diffvc::Error::at_path(path)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> diffvc::Result<()> {
    match cli.command {
        Command::Prep { config } => {
            let s = commands::prep(&RunConfig::load(config)?)?;
            println!("train {} frames, val {} frames, test {:?} frames", s.train_frames, s.val_frames, s.test_frames);
        }
        Command::Pretrain { config } => {
            let cfg = RunConfig::load(config)?;
            let log = commands::pretrain(&cfg)?;
            if let Some(e) = log.last() {
                println!("val loss {:.6} after {} epochs -> {}", e.val_loss, e.epoch, cfg.paths.model.display());
            }
        }
        Command::TrainLifter { config, taps } => {
            let cfg = RunConfig::load(config)?;
            let (path, log) = commands::train_lifter_stage(&cfg, taps)?;
            if let Some(e) = log.last() {
                println!("l={taps}: val rmse {:.6} -> {}", e.rmse, path.display());
            }
        }
        Command::Convert {
            model,
            input,
            out,
            taps,
            subband,
            crossover_hz,
            steepness_hz,
        } => {
            let gate = if subband {
                let analysis = load_model(&model)?.analysis;
                Some(SubbandGate::new(crossover_hz, steepness_hz, &analysis)?)
            } else {
                None
            };
            let r = commands::convert_file(&model, &input, &out, taps, gate)?;
            println!("{} samples written, {} clipped", r.wave.len(), r.clipped);
        }
        Command::Eval {
            model,
            pairs,
            taps,
            out,
            silence_db,
        } => {
            let report = commands::eval_pairs(&model, &pairs, taps, silence_db)?;
            emit(&report.rmse_csv(), out.as_deref())?;
        }
        Command::Cumpow {
            model,
            pairs,
            out,
            silence_db,
        } => {
            let curve = commands::cumulative_power_pairs(&model, &pairs, silence_db)?;
            emit(&cumulative_power_csv(&curve), out.as_deref())?;
        }
        Command::Bench {
            taps,
            seconds,
            mode,
            repeats,
            sample_rate,
            out,
        } => {
            let cfg = AnalysisConfig::for_sample_rate(sample_rate)?;
            let report = commands::bench(&taps, seconds, &cfg, mode.into(), repeats)?;
            emit(&report.to_csv(), out.as_deref())?;
            eprintln!("R² of time vs taps: {:.4}", report.r_squared);
        }
        Command::Synth {
            out_dir,
            sample_rate,
            train,
            val,
            test,
            seconds,
            seed,
        } => {
            let cfg = AnalysisConfig::for_sample_rate(sample_rate)?;
            let path = commands::synth_corpus(&out_dir, &cfg, [train, val, test], seconds, seed)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
