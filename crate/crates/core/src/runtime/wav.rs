use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::spectral::Waveform;

pub const SUPPORTED_RATES: [u32; 2] = [16_000, 48_000];
const SCALE: f64 = 32768.0;

fn map_hound(err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::Unsupported => Error::UnsupportedWav("unsupported encoding".into()),
        other => Error::MalformedWav(other.to_string()),
    }
}

/// Reads 16-bit PCM mono WAV at 16 or 48 kHz, scaled by 1/32768.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let reader = open_reader(path)?;
    let spec = reader.spec();
    check_spec(&spec)?;
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / SCALE))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(map_hound)?;
    Waveform::new(samples, spec.sample_rate)
}

/// Header fields only, without decoding samples.
pub fn wav_sample_rate(path: impl AsRef<Path>) -> Result<u32> {
    let path = path.as_ref();
    let reader = open_reader(path)?;
    check_spec(&reader.spec())?;
    Ok(reader.spec().sample_rate)
}

/// Open failures are path errors; anything hound rejects after that is a
/// malformed or unsupported file.
fn open_reader(path: &Path) -> Result<WavReader<BufReader<File>>> {
    let file = File::open(path).map_err(Error::at_path(path))?;
    WavReader::new(BufReader::new(file)).map_err(|e| match e {
        hound::Error::IoError(io) => Error::MalformedWav(format!("{}: {io}", path.display())),
        other => map_hound(other),
    })
}

fn check_spec(spec: &WavSpec) -> Result<()> {
    if spec.channels != 1 {
        return Err(Error::UnsupportedWav(format!("{} channels, expected mono", spec.channels)));
    }
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav(format!(
            "{}-bit {:?} samples, expected 16-bit PCM",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    if !SUPPORTED_RATES.contains(&spec.sample_rate) {
        return Err(Error::UnsupportedWav(format!(
            "sample rate {} Hz, expected 16000 or 48000",
            spec.sample_rate
        )));
    }
    Ok(())
}

/// Quantises to 16 bits: clamps to the representable range and rounds half
/// away from zero.
pub fn quantize(sample: f64) -> i16 {
    (sample * SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn write_wav(path: impl AsRef<Path>, wave: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    check_spec(&spec)?;
    let mut writer = WavWriter::create(path, spec).map_err(map_hound)?;
    for &s in &wave.samples {
        writer.write_sample(quantize(s)).map_err(map_hound)?;
    }
    writer.finalize().map_err(map_hound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_round_trip_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ramp.wav");
        let samples: Vec<f64> = (0..2001).map(|i| -1.0 + i as f64 / 1000.0).collect();
        let w = Waveform::new(samples.clone(), 16_000).unwrap();
        write_wav(&path, &w).unwrap();
        let r = read_wav(&path).unwrap();
        assert_eq!(r.sample_rate, 16_000);
        assert_eq!(r.len(), samples.len());
        for (a, b) in samples.iter().zip(&r.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0, "{a} {b}");
        }
    }

    #[test]
    fn quantization_rounds_half_away_and_clamps() {
        assert_eq!(quantize(0.5 / 32768.0), 1);
        assert_eq!(quantize(-0.5 / 32768.0), -1);
        assert_eq!(quantize(0.49 / 32768.0), 0);
        assert_eq!(quantize(1.0), 32767);
        assert_eq!(quantize(-1.0), -32768);
        assert_eq!(quantize(3.0), 32767);
        assert_eq!(quantize(-3.0), -32768);
    }

    fn write_raw(path: &Path, spec: WavSpec) {
        let mut w = WavWriter::create(path, spec).unwrap();
        for i in 0..100 {
            for _ in 0..spec.channels {
                if spec.bits_per_sample == 16 {
                    w.write_sample(i as i16).unwrap();
                } else {
                    w.write_sample(i).unwrap();
                }
            }
        }
        w.finalize().unwrap();
    }

    #[test]
    fn unsupported_formats_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let base = WavSpec {
            channels: 1,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let cases = [
            ("stereo.wav", WavSpec { channels: 2, ..base }, "channels"),
            ("44k.wav", WavSpec { sample_rate: 44_100, ..base }, "rate"),
            ("24bit.wav", WavSpec { bits_per_sample: 24, ..base }, "16-bit"),
        ];
        for (name, spec, needle) in cases {
            let p = dir.path().join(name);
            write_raw(&p, spec);
            match read_wav(&p) {
                Err(Error::UnsupportedWav(msg)) => assert!(msg.contains(needle), "{msg}"),
                other => panic!("{name}: {other:?}"),
            }
        }
        let p = dir.path().join("ok48.wav");
        write_raw(&p, WavSpec { sample_rate: 48_000, ..base });
        assert_eq!(read_wav(&p).unwrap().sample_rate, 48_000);
    }

    #[test]
    fn malformed_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.wav");
        std::fs::write(&p, b"RIFF\x10\x00\x00\x00WAVEjunkjunk").unwrap();
        assert!(matches!(read_wav(&p), Err(Error::MalformedWav(_)) | Err(Error::UnsupportedWav(_))));
        assert!(matches!(read_wav(dir.path().join("nope.wav")), Err(Error::Path { .. })));
        let w = Waveform::new(vec![0.0; 10], 22_050).unwrap();
        assert!(write_wav(dir.path().join("x.wav"), &w).is_err());
    }
}
