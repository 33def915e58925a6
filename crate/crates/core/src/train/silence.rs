use crate::error::{Error, Result};
use crate::spectral::Waveform;

/// Default gap below the loudest frame, in dB, under which frames count as silent.
pub const DEFAULT_SILENCE_DB: f64 = 40.0;

fn frame_rms(block: &[f64]) -> f64 {
    (block.iter().map(|s| s * s).sum::<f64>() / block.len() as f64).sqrt()
}

/// Drops every non-overlapping `frame_len` block whose RMS sits more than
/// `threshold_db` below the loudest block, and concatenates the rest.
pub fn trim_silence(wave: &Waveform, threshold_db: f64, frame_len: usize) -> Result<Waveform> {
    if wave.is_empty() {
        return Err(Error::EmptyInput("waveform"));
    }
    if frame_len == 0 {
        return Err(Error::InvalidConfig("silence frame length is zero".into()));
    }
    let rms: Vec<f64> = wave.samples.chunks(frame_len).map(frame_rms).collect();
    let peak = rms.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::AllSilent);
    }
    let floor = peak * 10f64.powf(-threshold_db / 20.0);
    let kept: Vec<f64> = wave
        .samples
        .chunks(frame_len)
        .zip(&rms)
        .filter(|(_, &r)| r >= floor)
        .flat_map(|(block, _)| block.iter().copied())
        .collect();
    Waveform::new(kept, wave.sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn tone(n: usize, amp: f64) -> Vec<f64> {
        (0..n)
            .map(|i| amp * (2.0 * PI * 440.0 * i as f64 / 16_000.0).sin())
            .collect()
    }

    #[test]
    fn pure_tone_unchanged() {
        let w = Waveform::new(tone(16_000, 0.5), 16_000).unwrap();
        assert_eq!(trim_silence(&w, 40.0, 400).unwrap(), w);
    }

    #[test]
    fn leading_and_trailing_zeros_removed() {
        let body = tone(8000, 0.5);
        let mut samples = vec![0.0; 1200];
        samples.extend(&body);
        samples.extend(vec![0.0; 2000]);
        let w = Waveform::new(samples, 16_000).unwrap();
        assert_eq!(trim_silence(&w, 40.0, 400).unwrap().samples, body);
    }

    #[test]
    fn quiet_gaps_removed_per_frame() {
        // bursts at full level separated by gaps 80 dB down
        let frame = 400;
        let mut samples = Vec::new();
        let mut loud = Vec::new();
        for k in 0..6 {
            let amp = if k % 2 == 0 { 0.5 } else { 0.5e-4 };
            let seg = tone(3 * frame, amp);
            for block in seg.chunks(frame) {
                loud.push(amp > 0.1);
                samples.extend(block);
            }
        }
        let w = Waveform::new(samples.clone(), 16_000).unwrap();
        let trimmed = trim_silence(&w, 40.0, frame).unwrap();
        // oracle: per-frame RMS against the peak frame
        let rms: Vec<f64> = samples.chunks(frame).map(frame_rms).collect();
        let peak = rms.iter().copied().fold(0.0, f64::max);
        let expect: Vec<f64> = samples
            .chunks(frame)
            .zip(&rms)
            .filter(|(_, r)| 20.0 * (peak / **r).log10() <= 40.0)
            .flat_map(|(b, _)| b.to_vec())
            .collect();
        assert_eq!(trimmed.samples, expect);
        assert_eq!(trimmed.len(), loud.iter().filter(|&&l| l).count() * frame);
    }

    #[test]
    fn silent_input_is_an_error() {
        let w = Waveform::new(vec![0.0; 1000], 16_000).unwrap();
        assert!(matches!(trim_silence(&w, 40.0, 400), Err(Error::AllSilent)));
        let e = Waveform::new(vec![], 16_000).unwrap();
        assert!(trim_silence(&e, 40.0, 400).is_err());
    }
}
