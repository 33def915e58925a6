//! Aligned training frames and their on-disk form.

use std::fs;
use std::path::Path;

use ndarray::{concatenate, s, Array2, Axis};

use super::dtw::dtw_align;
use super::silence::trim_silence;
use crate::cepstrum::real_cepstrum;
use crate::error::{Error, Result};
use crate::model::Normalizer;
use crate::spectral::{stft, AnalysisConfig, Complex64, SpectrogramFrame, Waveform};

/// One source/target utterance pair after time warping.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedPair {
    /// `T × c`, row `t` is the source frame at `path[t].0`.
    pub source_cep: Array2<f64>,
    /// `T × c`, row `t` is the target frame at `path[t].1`.
    pub target_cep: Array2<f64>,
    /// Source spectra, warped like `source_cep`.
    pub source_spec: Vec<SpectrogramFrame>,
    pub path: Vec<(usize, usize)>,
}

impl AlignedPair {
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }
}

/// Cepstra of every frame, rows are frames.
pub fn cepstrogram(frames: &[SpectrogramFrame], cfg: &AnalysisConfig) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((frames.len(), cfg.cep_dim));
    for (t, f) in frames.iter().enumerate() {
        let c = real_cepstrum(f, cfg)?;
        out.row_mut(t).assign(&ndarray::ArrayView1::from(&c.coeffs[..]));
    }
    Ok(out)
}

/// Silence removal, analysis and DTW alignment for one utterance pair.
///
/// Alignment runs on cepstra without the 0th (energy) coefficient,
/// standardised with the pooled statistics of both utterances.
pub fn prepare_pair(
    source: &Waveform,
    target: &Waveform,
    cfg: &AnalysisConfig,
    silence_db: f64,
) -> Result<AlignedPair> {
    let source = trim_silence(source, silence_db, cfg.window_len)?;
    let target = trim_silence(target, silence_db, cfg.window_len)?;
    let src_spec = stft(&source, cfg)?;
    let tgt_spec = stft(&target, cfg)?;
    let src_cep = cepstrogram(&src_spec, cfg)?;
    let tgt_cep = cepstrogram(&tgt_spec, cfg)?;

    let pooled = concatenate![Axis(0), src_cep.view(), tgt_cep.view()];
    let norm = Normalizer::fit(&pooled.slice(s![.., 1..]).to_owned())?;
    let src_feat = norm.normalize(&src_cep.slice(s![.., 1..]).to_owned());
    let tgt_feat = norm.normalize(&tgt_cep.slice(s![.., 1..]).to_owned());
    let path = dtw_align(src_feat.view(), tgt_feat.view())?.steps;

    let t = path.len();
    let mut source_cep = Array2::zeros((t, cfg.cep_dim));
    let mut target_cep = Array2::zeros((t, cfg.cep_dim));
    let mut source_spec = Vec::with_capacity(t);
    for (k, &(i, j)) in path.iter().enumerate() {
        source_cep.row_mut(k).assign(&src_cep.row(i));
        target_cep.row_mut(k).assign(&tgt_cep.row(j));
        source_spec.push(src_spec[i].clone());
    }
    Ok(AlignedPair {
        source_cep,
        target_cep,
        source_spec,
        path,
    })
}

/// Training frames pooled across utterances.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameSet {
    pub analysis: AnalysisConfig,
    pub source_cep: Array2<f64>,
    pub target_cep: Array2<f64>,
    pub source_spec: Vec<SpectrogramFrame>,
}

impl FrameSet {
    pub fn from_pairs(pairs: &[AlignedPair], cfg: &AnalysisConfig) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput("aligned pairs"));
        }
        let src: Vec<_> = pairs.iter().map(|p| p.source_cep.view()).collect();
        let tgt: Vec<_> = pairs.iter().map(|p| p.target_cep.view()).collect();
        let set = Self {
            analysis: *cfg,
            source_cep: concatenate(Axis(0), &src).map_err(|e| Error::ShapeMismatch(e.to_string()))?,
            target_cep: concatenate(Axis(0), &tgt).map_err(|e| Error::ShapeMismatch(e.to_string()))?,
            source_spec: pairs.iter().flat_map(|p| p.source_spec.iter().cloned()).collect(),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.source_cep.nrows();
        if t == 0 {
            return Err(Error::EmptyInput("frame set"));
        }
        let c = self.analysis.cep_dim;
        if self.source_cep.ncols() != c || self.target_cep.dim() != (t, c) || self.source_spec.len() != t {
            return Err(Error::ShapeMismatch(format!(
                "frame set: source {:?}, target {:?}, {} spectra, c = {c}",
                self.source_cep.dim(),
                self.target_cep.dim(),
                self.source_spec.len()
            )));
        }
        if let Some(bad) = self.source_spec.iter().find(|f| f.len() != self.analysis.fft_len) {
            return Err(Error::ShapeMismatch(format!(
                "spectrum with {} bins, fft_len {}",
                bad.len(),
                self.analysis.fft_len
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.source_cep.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `C_Y − C_X` per frame.
    pub fn differential(&self) -> Array2<f64> {
        &self.target_cep - &self.source_cep
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            analysis: self.analysis,
            source_cep: self.source_cep.select(Axis(0), idx),
            target_cep: self.target_cep.select(Axis(0), idx),
            source_spec: idx.iter().map(|&i| self.source_spec[i].clone()).collect(),
        }
    }
}

const FRAMES_MAGIC: &[u8; 8] = b"DIFFVCF\0";
const FRAMES_VERSION: u32 = 1;

/// `magic, version u32, config-json-len u32, config json, T u64, then the
/// source cepstra, target cepstra and source spectra (re, im) as f64 LE`.
pub fn frames_to_bytes(frames: &FrameSet) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&frames.analysis)?;
    let mut out = Vec::new();
    out.extend(FRAMES_MAGIC);
    out.extend(FRAMES_VERSION.to_le_bytes());
    out.extend((header.len() as u32).to_le_bytes());
    out.extend(&header);
    out.extend((frames.len() as u64).to_le_bytes());
    for v in frames.source_cep.iter().chain(frames.target_cep.iter()) {
        out.extend(v.to_le_bytes());
    }
    for f in &frames.source_spec {
        for z in &f.bins {
            out.extend(z.re.to_le_bytes());
            out.extend(z.im.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn frames_from_bytes(bytes: &[u8]) -> Result<FrameSet> {
    let corrupt = |what: &str| Error::Corrupt(format!("frame file: {what}"));
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        if bytes.len() - *pos < n {
            return Err(corrupt("unexpected end of file"));
        }
        let s = &bytes[*pos..*pos + n];
        *pos += n;
        Ok(s)
    };
    let mut pos = 0;
    if take(&mut pos, 8)? != FRAMES_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().expect("4"));
    if version != FRAMES_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FRAMES_VERSION,
        });
    }
    let hlen = u32::from_le_bytes(take(&mut pos, 4)?.try_into().expect("4")) as usize;
    let analysis: AnalysisConfig =
        serde_json::from_slice(take(&mut pos, hlen)?).map_err(|e| corrupt(&e.to_string()))?;
    analysis.validate()?;
    let t = u64::from_le_bytes(take(&mut pos, 8)?.try_into().expect("8")) as usize;
    let (c, n) = (analysis.cep_dim, analysis.fft_len);
    let expected = t
        .checked_mul(2 * c + 2 * n)
        .and_then(|v| v.checked_mul(8))
        .ok_or_else(|| corrupt("frame count overflows"))?;
    if bytes.len() - pos != expected {
        return Err(corrupt("payload length does not match header"));
    }
    let mut values = bytes[pos..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8")));
    let matrix = |values: &mut dyn Iterator<Item = f64>| {
        Array2::from_shape_vec((t, c), values.take(t * c).collect()).expect("sized")
    };
    let source_cep = matrix(&mut values);
    let target_cep = matrix(&mut values);
    let mut source_spec = Vec::with_capacity(t);
    for _ in 0..t {
        let bins = (0..n)
            .map(|_| {
                let re = values.next().expect("sized");
                let im = values.next().expect("sized");
                Complex64::new(re, im)
            })
            .collect();
        source_spec.push(SpectrogramFrame::new(bins));
    }
    let set = FrameSet {
        analysis,
        source_cep,
        target_cep,
        source_spec,
    };
    set.validate()?;
    Ok(set)
}

pub fn save_frames(frames: &FrameSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, frames_to_bytes(frames)?).map_err(Error::at_path(path))
}

pub fn load_frames(path: impl AsRef<Path>) -> Result<FrameSet> {
    let path = path.as_ref();
    frames_from_bytes(&fs::read(path).map_err(Error::at_path(path))?)
}
