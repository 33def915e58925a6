//! Model file layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "DIFFVCM\0"
//! version      u32
//! header_len   u32
//! header       header_len bytes of JSON {analysis, hidden, lifter_trainable}
//! block_count  u32
//! blocks       block_count × {
//!                name_len u16, name (utf-8),
//!                ndim u8, dims u32 × ndim,
//!                values f64 × prod(dims)
//!              }
//! ```
//!
//! Blocks appear in a fixed order: normalisers, then each layer's value and
//! gate affine maps and batch-norm tensors, then the output projection, then
//! the lifter. Loading checks every name and shape against the header.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{AcousticModel, BatchNorm, GluLayer, Linear, Normalizer};
use crate::cepstrum::Lifter;
use crate::error::{Error, Result};
use crate::spectral::AnalysisConfig;

pub const MODEL_MAGIC: &[u8; 8] = b"DIFFVCM\0";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    analysis: AnalysisConfig,
    hidden: Vec<usize>,
    lifter_trainable: bool,
}

struct Writer {
    buf: Vec<u8>,
    blocks: u32,
}

impl Writer {
    fn block(&mut self, name: &str, dims: &[usize], values: &[f64]) {
        self.blocks += 1;
        self.buf.extend((name.len() as u16).to_le_bytes());
        self.buf.extend(name.as_bytes());
        self.buf.push(dims.len() as u8);
        for &d in dims {
            self.buf.extend((d as u32).to_le_bytes());
        }
        for v in values {
            self.buf.extend(v.to_le_bytes());
        }
    }

    fn vector(&mut self, name: &str, v: &[f64]) {
        self.block(name, &[v.len()], v);
    }

    fn array1(&mut self, name: &str, a: &Array1<f64>) {
        self.block(name, &[a.len()], a.as_slice().expect("standard layout"));
    }

    fn array2(&mut self, name: &str, a: &Array2<f64>) {
        self.block(name, &[a.nrows(), a.ncols()], a.as_slice().expect("standard layout"));
    }
}

pub fn model_to_bytes(model: &AcousticModel) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        analysis: model.analysis,
        hidden: model.hidden.clone(),
        lifter_trainable: model.lifter.trainable,
    })?;
    let mut w = Writer {
        buf: Vec::new(),
        blocks: 0,
    };
    w.vector("input_norm.mean", &model.input_norm.mean);
    w.vector("input_norm.std", &model.input_norm.std);
    w.vector("output_norm.mean", &model.output_norm.mean);
    w.vector("output_norm.std", &model.output_norm.std);
    for (i, l) in model.layers.iter().enumerate() {
        w.array2(&format!("layers.{i}.value.weight"), &l.value.weight);
        w.array1(&format!("layers.{i}.value.bias"), &l.value.bias);
        w.array2(&format!("layers.{i}.gate.weight"), &l.gate.weight);
        w.array1(&format!("layers.{i}.gate.bias"), &l.gate.bias);
        for (tag, bn) in [("bn_value", &l.bn_value), ("bn_gate", &l.bn_gate)] {
            w.array1(&format!("layers.{i}.{tag}.gamma"), &bn.gamma);
            w.array1(&format!("layers.{i}.{tag}.beta"), &bn.beta);
            w.array1(&format!("layers.{i}.{tag}.running_mean"), &bn.running_mean);
            w.array1(&format!("layers.{i}.{tag}.running_var"), &bn.running_var);
        }
    }
    w.array2("output.weight", &model.output.weight);
    w.array1("output.bias", &model.output.bias);
    w.vector("lifter", &model.lifter.coeffs);

    let mut out = Vec::with_capacity(w.buf.len() + header.len() + 24);
    out.extend(MODEL_MAGIC);
    out.extend(MODEL_VERSION.to_le_bytes());
    out.extend((header.len() as u32).to_le_bytes());
    out.extend(&header);
    out.extend(w.blocks.to_le_bytes());
    out.extend(w.buf);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Corrupt(format!(
                "unexpected end of file at byte {} (wanted {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn block(&mut self, name: &str, dims: &[usize]) -> Result<Vec<f64>> {
        let name_len = self.u16()? as usize;
        let found = std::str::from_utf8(self.take(name_len)?)
            .map_err(|_| Error::Corrupt("block name is not utf-8".into()))?;
        if found != name {
            return Err(Error::Corrupt(format!("expected block {name}, found {found}")));
        }
        let ndim = self.u8()? as usize;
        let mut found_dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            found_dims.push(self.u32()? as usize);
        }
        if found_dims != dims {
            return Err(Error::ShapeMismatch(format!(
                "block {name}: header implies {dims:?}, file has {found_dims:?}"
            )));
        }
        let count: usize = dims.iter().product();
        let raw = self.take(count * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn array1(&mut self, name: &str, n: usize) -> Result<Array1<f64>> {
        Ok(Array1::from(self.block(name, &[n])?))
    }

    fn array2(&mut self, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let v = self.block(name, &[rows, cols])?;
        Ok(Array2::from_shape_vec((rows, cols), v).expect("checked shape"))
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<AcousticModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MODEL_MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let header_len = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| Error::Corrupt(format!("header: {e}")))?;
    header.analysis.validate()?;
    if header.hidden.is_empty() || header.hidden.contains(&0) {
        return Err(Error::Corrupt(format!("bad hidden sizes {:?}", header.hidden)));
    }
    let c = header.analysis.cep_dim;
    let expected_blocks = 4 + 12 * header.hidden.len() + 3;
    let blocks = r.u32()? as usize;
    if blocks != expected_blocks {
        return Err(Error::Corrupt(format!(
            "expected {expected_blocks} blocks, header says {blocks}"
        )));
    }

    let input_norm = Normalizer {
        mean: r.block("input_norm.mean", &[c])?,
        std: r.block("input_norm.std", &[c])?,
    };
    let output_norm = Normalizer {
        mean: r.block("output_norm.mean", &[c])?,
        std: r.block("output_norm.std", &[c])?,
    };
    let mut layers = Vec::with_capacity(header.hidden.len());
    let mut fan_in = c;
    for (i, &h) in header.hidden.iter().enumerate() {
        let value = Linear {
            weight: r.array2(&format!("layers.{i}.value.weight"), h, fan_in)?,
            bias: r.array1(&format!("layers.{i}.value.bias"), h)?,
        };
        let gate = Linear {
            weight: r.array2(&format!("layers.{i}.gate.weight"), h, fan_in)?,
            bias: r.array1(&format!("layers.{i}.gate.bias"), h)?,
        };
        let mut bns = Vec::with_capacity(2);
        for tag in ["bn_value", "bn_gate"] {
            bns.push(BatchNorm {
                gamma: r.array1(&format!("layers.{i}.{tag}.gamma"), h)?,
                beta: r.array1(&format!("layers.{i}.{tag}.beta"), h)?,
                running_mean: r.array1(&format!("layers.{i}.{tag}.running_mean"), h)?,
                running_var: r.array1(&format!("layers.{i}.{tag}.running_var"), h)?,
            });
        }
        let bn_gate = bns.pop().expect("two");
        let bn_value = bns.pop().expect("two");
        layers.push(GluLayer {
            value,
            gate,
            bn_value,
            bn_gate,
        });
        fan_in = h;
    }
    let output = Linear {
        weight: r.array2("output.weight", c, fan_in)?,
        bias: r.array1("output.bias", c)?,
    };
    let lifter = Lifter {
        coeffs: r.block("lifter", &[c])?,
        trainable: header.lifter_trainable,
    };
    if r.pos != bytes.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(AcousticModel {
        analysis: header.analysis,
        hidden: header.hidden,
        layers,
        output,
        input_norm,
        output_norm,
        lifter,
    })
}

pub fn save_model(model: &AcousticModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_bytes(model)?).map_err(Error::at_path(path))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AcousticModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(Error::at_path(path))?;
    model_from_bytes(&bytes)
}

/// Loads a model and checks it against the analysis setup it will run under.
pub fn load_model_for(path: impl AsRef<Path>, cfg: &AnalysisConfig) -> Result<AcousticModel> {
    let model = load_model(path)?;
    let m = &model.analysis;
    if m.cep_dim != cfg.cep_dim || m.fft_len != cfg.fft_len {
        return Err(Error::ShapeMismatch(format!(
            "model has cep_dim {} / fft_len {}, config wants {} / {}",
            m.cep_dim, m.fft_len, cfg.cep_dim, cfg.fft_len
        )));
    }
    if m != cfg {
        return Err(Error::InvalidConfig(format!(
            "model analysis settings {m:?} differ from {cfg:?}"
        )));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(cfg: &AnalysisConfig) -> AcousticModel {
        let mut m = AcousticModel::new(cfg, &[6, 3], 9).unwrap();
        m.lifter.coeffs[1] = 1.75;
        m.lifter.trainable = true;
        m.layers[1].bn_gate.running_var[2] = 0.123;
        m.output_norm.mean[0] = -3.5;
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = AnalysisConfig::narrow_band();
        let m = model(&cfg);
        let bytes = model_to_bytes(&m).unwrap();
        let back = model_from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert_eq!(model_to_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn save_load_save_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = AnalysisConfig::narrow_band();
        let a = dir.path().join("a.dvc");
        let b = dir.path().join("b.dvc");
        save_model(&model(&cfg), &a).unwrap();
        save_model(&load_model(&a).unwrap(), &b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = model_to_bytes(&model(&AnalysisConfig::narrow_band())).unwrap();
        for cut in [3, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(model_from_bytes(&bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
        }
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(model_from_bytes(&longer), Err(Error::Corrupt(_))));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = model_to_bytes(&model(&AnalysisConfig::narrow_band())).unwrap();
        bytes[8] = 9;
        assert!(matches!(
            model_from_bytes(&bytes),
            Err(Error::VersionMismatch { found: 9, expected: 1 })
        ));
    }

    #[test]
    fn shape_mismatch_against_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.dvc");
        save_model(&model(&AnalysisConfig::narrow_band()), &path).unwrap();
        assert!(load_model_for(&path, &AnalysisConfig::narrow_band()).is_ok());
        assert!(matches!(
            load_model_for(&path, &AnalysisConfig::full_band()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(load_model("/nonexistent/model.dvc"), Err(Error::Path { .. })));
    }
}
