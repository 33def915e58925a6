use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::wav::wav_sample_rate;
use crate::error::{Error, Result};
use crate::filter::SubbandGate;
use crate::spectral::AnalysisConfig;
use crate::train::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunPaths {
    /// Pair lists: one `source.wav target.wav` per line, relative to the list.
    pub train_list: PathBuf,
    pub val_list: PathBuf,
    #[serde(default)]
    pub test_list: Option<PathBuf>,
    /// Pretrained model file.
    pub model: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSettings {
    pub enabled: bool,
    pub crossover_hz: f64,
    pub steepness_hz: f64,
}

impl Default for GateSettings {
    fn default() -> Self {
        let g = SubbandGate::default();
        Self {
            enabled: false,
            crossover_hz: g.crossover_hz,
            steepness_hz: g.steepness_hz,
        }
    }
}

impl GateSettings {
    pub fn gate(&self, cfg: &AnalysisConfig) -> Result<Option<SubbandGate>> {
        if !self.enabled {
            return Ok(None);
        }
        SubbandGate::new(self.crossover_hz, self.steepness_hz, cfg).map(Some)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub analysis: AnalysisConfig,
    pub train: TrainConfig,
    /// Hidden layer widths; defaults by sample rate when absent.
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub model_seed: u64,
    pub paths: RunPaths,
    #[serde(default)]
    pub subband: GateSettings,
}

impl RunConfig {
    /// Defaults for `analysis`, with every path inside `dir`.
    pub fn with_defaults(analysis: AnalysisConfig, dir: &Path) -> Self {
        Self {
            train: TrainConfig::for_analysis(&analysis),
            analysis,
            hidden: None,
            model_seed: 0,
            paths: RunPaths {
                train_list: dir.join("train.list"),
                val_list: dir.join("val.list"),
                test_list: Some(dir.join("test.list")),
                model: dir.join("out").join("pretrained.model"),
                output_dir: dir.join("out"),
            },
            subband: GateSettings::default(),
        }
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden
            .clone()
            .unwrap_or_else(|| crate::model::AcousticModel::default_hidden(&self.analysis))
    }

    /// Parses the JSON file, resolves relative paths against its directory
    /// and checks the configuration.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(Error::at_path(path))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.paths.train_list,
            &mut cfg.paths.val_list,
            &mut cfg.paths.model,
            &mut cfg.paths.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(p) = cfg.paths.test_list.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string_pretty(self)?).map_err(Error::at_path(path))
    }

    /// Settings are consistent, every list exists and every listed file has
    /// the configured sample rate.
    pub fn validate(&self) -> Result<()> {
        self.analysis.validate()?;
        self.train.validate(&self.analysis)?;
        self.subband.gate(&self.analysis)?;
        let mut lists = vec![&self.paths.train_list, &self.paths.val_list];
        lists.extend(self.paths.test_list.as_ref());
        for list in lists {
            for (src, tgt) in read_pair_list(list)? {
                for wav in [src, tgt] {
                    let rate = wav_sample_rate(&wav)?;
                    if rate != self.analysis.sample_rate {
                        return Err(Error::SampleRateMismatch {
                            expected: self.analysis.sample_rate,
                            actual: rate,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reads `source target` path pairs, one per line. Blank lines and lines
/// starting with `#` are skipped; relative paths are taken from the list's
/// directory.
pub fn read_pair_list(path: impl AsRef<Path>) -> Result<Vec<(PathBuf, PathBuf)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(Error::at_path(path))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [src, tgt] = fields[..] else {
            return Err(Error::InvalidConfig(format!(
                "{}:{}: expected `source.wav target.wav`",
                path.display(),
                i + 1
            )));
        };
        pairs.push((base.join(src), base.join(tgt)));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput("pair list"));
    }
    Ok(pairs)
}

pub fn write_pair_list(path: impl AsRef<Path>, pairs: &[(String, String)]) -> Result<()> {
    let path = path.as_ref();
    let text: String = pairs.iter().map(|(s, t)| format!("{s} {t}\n")).collect();
    fs::write(path, text).map_err(Error::at_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::wav::write_wav;
    use crate::spectral::Waveform;

    fn setup(dir: &Path, rate: u32) {
        let w = Waveform::new(vec![0.1; 1600], rate).unwrap();
        for name in ["a.wav", "b.wav"] {
            write_wav(dir.join(name), &w).unwrap();
        }
        for list in ["train.list", "val.list", "test.list"] {
            write_pair_list(dir.join(list), &[("a.wav".into(), "b.wav".into())]).unwrap();
        }
    }

    #[test]
    fn defaults_round_trip_through_json() {
        let dir = tempfile::tempdir().unwrap();
        setup(dir.path(), 16_000);
        let cfg = RunConfig::with_defaults(AnalysisConfig::narrow_band(), Path::new("."));
        cfg.save(dir.path().join("run.json")).unwrap();
        let loaded = RunConfig::load(dir.path().join("run.json")).unwrap();
        assert_eq!(loaded.train, cfg.train);
        assert_eq!(loaded.analysis, cfg.analysis);
        assert!(loaded.paths.train_list.starts_with(dir.path()));
        assert_eq!(loaded.hidden_sizes(), vec![280, 100]);
        assert_eq!(loaded.train.batch_size, 1000);
    }

    #[test]
    fn rate_mismatch_and_missing_lists_fail() {
        let dir = tempfile::tempdir().unwrap();
        setup(dir.path(), 48_000);
        let cfg = RunConfig::with_defaults(AnalysisConfig::narrow_band(), Path::new("."));
        cfg.save(dir.path().join("run.json")).unwrap();
        assert!(matches!(
            RunConfig::load(dir.path().join("run.json")),
            Err(Error::SampleRateMismatch { .. })
        ));
        setup(dir.path(), 16_000);
        assert!(RunConfig::load(dir.path().join("run.json")).is_ok());
        std::fs::remove_file(dir.path().join("val.list")).unwrap();
        assert!(matches!(RunConfig::load(dir.path().join("run.json")), Err(Error::Path { .. })));
    }

    #[test]
    fn pair_list_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.list");
        std::fs::write(&p, "# comment\n\nx.wav y.wav\n  u.wav\tv.wav  \n").unwrap();
        let pairs = read_pair_list(&p).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1], (dir.path().join("u.wav"), dir.path().join("v.wav")));
        std::fs::write(&p, "only-one.wav\n").unwrap();
        assert!(read_pair_list(&p).is_err());
        std::fs::write(&p, "# nothing\n").unwrap();
        assert!(read_pair_list(&p).is_err());
    }
}
