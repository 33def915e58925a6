use ndarray::Axis;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use diffvc::cepstrum::Lifter;
use diffvc::model::AcousticModel;
use diffvc::runtime::{convert, ConvertOptions, SyntheticTask};
use diffvc::spectral::{stft, AnalysisConfig, Complex64, Waveform};
use diffvc::train::{cepstrogram, pretrain_conventional, TrainConfig, TruncationChain};

fn mean_cepstral_distance(a: &Waveform, b: &Waveform, cfg: &AnalysisConfig) -> f64 {
    let ca = cepstrogram(&stft(a, cfg).unwrap(), cfg).unwrap();
    let cb = cepstrogram(&stft(b, cfg).unwrap(), cfg).unwrap();
    let d = &ca - &cb;
    d.map_axis(Axis(1), |r| r.dot(&r).sqrt()).mean().unwrap()
}

#[test]
fn conversion_moves_source_towards_target() {
    let cfg = AnalysisConfig::narrow_band();
    let task = SyntheticTask::new(&cfg).unwrap();
    let train = task.frame_set(8, 1.0, 1, 40.0).unwrap();
    let val = task.frame_set(2, 1.0, 2, 40.0).unwrap();
    let tc = TrainConfig {
        pretrain_lr: 1e-3,
        batch_size: 256,
        pretrain_epochs: 8,
        ..TrainConfig::for_analysis(&cfg)
    };
    let mut model = AcousticModel::new(&cfg, &[64, 32], 0).unwrap();
    pretrain_conventional(&mut model, &train, &val, &tc).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (x, y) = task.pair(1.0, &mut rng).unwrap();
    let before = mean_cepstral_distance(&x, &y, &cfg);
    for taps in [512, 64] {
        let opts = ConvertOptions { taps, ..ConvertOptions::untruncated(&model) };
        let out = convert(&x, &model, &opts).unwrap();
        assert!(out.wave.samples.iter().all(|s| s.is_finite() && s.abs() <= 1.0));
        let after = mean_cepstral_distance(&out.wave, &y, &cfg);
        assert!(after < 0.5 * before, "l={taps}: {after} vs {before}");
    }
}

#[test]
fn full_band_conversion_is_finite_and_clamped() {
    let cfg = AnalysisConfig::full_band();
    let task = SyntheticTask::new(&cfg).unwrap();
    let model = AcousticModel::new(&cfg, &[32, 16], 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, _) = task.pair(0.3, &mut rng).unwrap();
    let out = convert(&x, &model, &ConvertOptions { taps: 256, ..ConvertOptions::untruncated(&model) }).unwrap();
    assert_eq!(out.wave.len(), x.len());
    assert!(out.wave.samples.iter().all(|s| s.is_finite() && s.abs() <= 1.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Without truncation the chain adds cepstra: Ĉ_Y = C_X + C_D.
    #[test]
    fn untruncated_chain_adds_cepstra(
        seed in any::<u64>(),
        coeffs in prop::collection::vec(-0.3f64..0.3, 8),
    ) {
        let cfg = AnalysisConfig { fft_len: 64, cep_dim: 8, window_len: 64, hop: 16, ..AnalysisConfig::narrow_band() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source_cep: Vec<f64> = (0..8).map(|k| rand::Rng::gen_range(&mut rng, -0.3..0.3) / (1.0 + k as f64)).collect();
        let source = diffvc::cepstrum::reconstruct_spectrum(
            &diffvc::cepstrum::CepstrumVector::new(source_cep.clone()),
            &Lifter::minimum_phase(&cfg).unwrap(),
            &cfg,
        ).unwrap();
        let chain = TruncationChain::new(&cfg, 64, None).unwrap();
        let u = Lifter::minimum_phase(&cfg).unwrap();
        let out = chain.forward(&coeffs, &u.coeffs, &source.bins).unwrap();
        for k in 0..8 {
            prop_assert!((out[k] - source_cep[k] - coeffs[k]).abs() < 1e-6);
        }
    }

    /// Identical inputs give identical conversions.
    #[test]
    fn conversion_is_deterministic(seed in 0u64..1000) {
        let cfg = AnalysisConfig::narrow_band();
        let model = AcousticModel::new(&cfg, &[8], seed).unwrap();
        let x = Waveform::new((0..2000).map(|i| ((i as f64) * 0.01 + seed as f64).sin() * 0.3).collect(), 16_000).unwrap();
        let a = convert(&x, &model, &ConvertOptions { taps: 32, ..ConvertOptions::untruncated(&model) }).unwrap();
        let b = convert(&x, &model, &ConvertOptions { taps: 32, ..ConvertOptions::untruncated(&model) }).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn stft_frames_are_conjugate_symmetric() {
    let cfg = AnalysisConfig::narrow_band();
    let task = SyntheticTask::new(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = task.source(0.2, &mut rng).unwrap();
    for f in stft(&x, &cfg).unwrap() {
        for k in 1..cfg.fft_len / 2 {
            let d: Complex64 = f.bins[k] - f.bins[cfg.fft_len - k].conj();
            assert!(d.norm() < 1e-10);
        }
    }
}
