use super::*;
use rand::Rng;

fn tiny_cfg(c: usize) -> AnalysisConfig {
    AnalysisConfig {
        sample_rate: 16_000,
        window_len: 16,
        hop: 8,
        fft_len: 16,
        cep_dim: c,
        window: Default::default(),
    }
}

fn randomize(model: &mut AcousticModel, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for l in &mut model.layers {
        for bn in [&mut l.bn_value, &mut l.bn_gate] {
            bn.gamma.mapv_inplace(|_| rng.gen_range(0.5..1.5));
            bn.beta.mapv_inplace(|_| rng.gen_range(-0.5..0.5));
            bn.running_mean.mapv_inplace(|_| rng.gen_range(-0.3..0.3));
            bn.running_var.mapv_inplace(|_| rng.gen_range(0.5..2.0));
        }
    }
    let c = model.cep_dim();
    model.input_norm = Normalizer {
        mean: (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        std: (0..c).map(|_| rng.gen_range(0.5..2.0)).collect(),
    };
    model.output_norm = Normalizer {
        mean: (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        std: (0..c).map(|_| rng.gen_range(0.5..2.0)).collect(),
    };
}

fn random_batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-2.0..2.0))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scalar-loop reimplementation of the inference path.
fn oracle_infer(m: &AcousticModel, x: &[f64]) -> Vec<f64> {
    let mut h: Vec<f64> = x
        .iter()
        .zip(&m.input_norm.mean)
        .zip(&m.input_norm.std)
        .map(|((v, mu), s)| (v - mu) / s)
        .collect();
    for l in &m.layers {
        let mut next = Vec::new();
        for o in 0..l.value.outputs() {
            let mut av = l.value.bias[o];
            let mut ag = l.gate.bias[o];
            for i in 0..h.len() {
                av += l.value.weight[[o, i]] * h[i];
                ag += l.gate.weight[[o, i]] * h[i];
            }
            let bv = l.bn_value.gamma[o] * (av - l.bn_value.running_mean[o])
                / (l.bn_value.running_var[o] + BN_EPS).sqrt()
                + l.bn_value.beta[o];
            let bg = l.bn_gate.gamma[o] * (ag - l.bn_gate.running_mean[o])
                / (l.bn_gate.running_var[o] + BN_EPS).sqrt()
                + l.bn_gate.beta[o];
            next.push(bv.tanh() * sigmoid(bg));
        }
        h = next;
    }
    (0..m.output.outputs())
        .map(|o| {
            let mut y = m.output.bias[o];
            for i in 0..h.len() {
                y += m.output.weight[[o, i]] * h[i];
            }
            y * m.output_norm.std[o] + m.output_norm.mean[o]
        })
        .collect()
}

#[test]
fn zero_model_emits_zero() {
    let cfg = tiny_cfg(4);
    let mut m = AcousticModel::zeros(&cfg, &[3, 2]).unwrap();
    let x = random_batch(5, 4, 1);
    assert!(m.infer(&x).unwrap().iter().all(|&v| v == 0.0));
    assert!(m.forward(&x, Mode::Train).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn constant_model() {
    let cfg = tiny_cfg(4);
    let target = [0.5, -1.0, 0.25, 2.0];
    let m = AcousticModel::constant(&cfg, &[3], &target).unwrap();
    let y = m.infer(&random_batch(3, 4, 2)).unwrap();
    for row in y.rows() {
        assert_eq!(row.to_vec(), target.to_vec());
    }
}

#[test]
fn identical_batch_stays_finite() {
    let cfg = tiny_cfg(4);
    let mut m = AcousticModel::new(&cfg, &[5, 3], 3).unwrap();
    let x = Array2::from_shape_fn((6, 4), |(_, j)| j as f64);
    let y = m.forward(&x, Mode::Train).unwrap();
    assert!(y.iter().all(|v| v.is_finite()));
}

#[test]
fn infer_matches_scalar_oracle() {
    let cfg = tiny_cfg(4);
    let mut m = AcousticModel::new(&cfg, &[3], 11).unwrap();
    randomize(&mut m, 12);
    let x = random_batch(7, 4, 13);
    let y = m.infer(&x).unwrap();
    for (row, out) in x.rows().into_iter().zip(y.rows()) {
        let expect = oracle_infer(&m, &row.to_vec());
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn train_mode_matches_batch_statistics_oracle() {
    let cfg = tiny_cfg(4);
    let mut m = AcousticModel::new(&cfg, &[3], 21).unwrap();
    randomize(&mut m, 22);
    let x = random_batch(9, 4, 23);
    let (y, _) = m.forward_batch(&x, Mode::Train).unwrap();
    // same network with running stats replaced by this batch's statistics
    let mut frozen = m.clone();
    let xn = m.input_norm.normalize(&x);
    let l = &mut frozen.layers[0];
    for (lin, bn) in [(&m.layers[0].value, &mut l.bn_value), (&m.layers[0].gate, &mut l.bn_gate)] {
        let a = lin.apply(&xn);
        bn.running_mean = a.mean_axis(Axis(0)).unwrap();
        bn.running_var = a.var_axis(Axis(0), 0.0);
    }
    for (row, out) in x.rows().into_iter().zip(y.rows()) {
        let expect = oracle_infer(&frozen, &row.to_vec());
        for (a, b) in out.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn running_statistics_update() {
    let cfg = tiny_cfg(4);
    let mut m = AcousticModel::new(&cfg, &[3], 31).unwrap();
    let x = random_batch(10, 4, 32);
    let before = m.layers[0].bn_value.running_mean.clone();
    let (_, cache) = m.forward_batch(&x, Mode::Train).unwrap();
    assert_eq!(m.layers[0].bn_value.running_mean, before);
    m.commit_batch_statistics(&cache);
    let a = m.layers[0].value.apply(&m.input_norm.normalize(&x));
    let mean = a.mean_axis(Axis(0)).unwrap();
    let var = a.var_axis(Axis(0), 1.0);
    for j in 0..3 {
        assert!((m.layers[0].bn_value.running_mean[j] - 0.1 * mean[j]).abs() < 1e-12);
        assert!((m.layers[0].bn_value.running_var[j] - (0.9 + 0.1 * var[j])).abs() < 1e-12);
    }
}

#[test]
fn infer_is_batch_size_independent() {
    let cfg = tiny_cfg(6);
    let mut m = AcousticModel::new(&cfg, &[7, 4], 41).unwrap();
    randomize(&mut m, 42);
    let x = random_batch(12, 6, 43);
    let all = m.infer(&x).unwrap();
    for i in 0..12 {
        let one = m.infer(&x.slice(ndarray::s![i..i + 1, ..]).to_owned()).unwrap();
        assert_eq!(one.row(0), all.row(i));
    }
}

#[test]
fn dimension_mismatch() {
    let cfg = tiny_cfg(4);
    let m = AcousticModel::new(&cfg, &[3], 0).unwrap();
    assert!(m.infer(&random_batch(2, 5, 0)).is_err());
    assert!(m.infer(&Array2::zeros((0, 4))).is_err());
    assert!(AcousticModel::new(&cfg, &[], 0).is_err());
}

fn tensor_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-6)
}

fn check_gradients(mode: Mode, seed: u64) {
    let cfg = tiny_cfg(4);
    let mut m = AcousticModel::new(&cfg, &[5, 3], seed).unwrap();
    randomize(&mut m, seed + 1);
    let x = random_batch(6, 4, seed + 2);
    let w = random_batch(6, 4, seed + 3);
    let loss = |m: &AcousticModel, x: &Array2<f64>| -> f64 {
        (&m.forward_batch(x, mode).unwrap().0 * &w).sum()
    };
    let (_, cache) = m.forward_batch(&x, mode).unwrap();
    let (grads, grad_x) = m.backward(&cache, &w).unwrap();
    let h = 1e-4;

    let sizes = m.parameter_sizes();
    for (t, &size) in sizes.iter().enumerate() {
        let mut fd = vec![0.0; size];
        for (i, slot) in fd.iter_mut().enumerate() {
            let mut p = m.clone();
            p.parameters_mut()[t][i] += h;
            let mut q = m.clone();
            q.parameters_mut()[t][i] -= h;
            *slot = (loss(&p, &x) - loss(&q, &x)) / (2.0 * h);
        }
        let err = tensor_rel_err(&grads.tensors[t], &fd);
        assert!(err < 1e-4, "{mode:?} tensor {t}: rel err {err}");
    }
    let mut fd_x = Array2::zeros(x.dim());
    for idx in ndarray::indices(x.dim()) {
        let mut xp = x.clone();
        xp[idx] += h;
        let mut xq = x.clone();
        xq[idx] -= h;
        fd_x[idx] = (loss(&m, &xp) - loss(&m, &xq)) / (2.0 * h);
    }
    let err = tensor_rel_err(grad_x.as_slice().unwrap(), fd_x.as_slice().unwrap());
    assert!(err < 1e-4, "{mode:?} input: rel err {err}");
}

#[test]
fn gradients_match_finite_differences_train_mode() {
    for seed in [1, 10, 100] {
        check_gradients(Mode::Train, seed);
    }
}

#[test]
fn gradients_match_finite_differences_infer_mode() {
    for seed in [2, 20, 200] {
        check_gradients(Mode::Infer, seed);
    }
}

#[test]
fn parameter_layout_round_trips() {
    let cfg = tiny_cfg(4);
    let mut m = AcousticModel::new(&cfg, &[3, 2], 5).unwrap();
    assert_eq!(m.parameter_sizes(), vec![12, 3, 12, 3, 3, 3, 3, 3, 6, 2, 6, 2, 2, 2, 2, 2, 8, 4]);
    m.parameters_mut()[16][0] = 42.0;
    assert_eq!(m.output.weight[[0, 0]], 42.0);
}

#[test]
fn normalizer_fit() {
    let x = ndarray::arr2(&[[1.0, 5.0], [3.0, 5.0]]);
    let n = Normalizer::fit(&x).unwrap();
    assert_eq!(n.mean, vec![2.0, 5.0]);
    assert_eq!(n.std[0], 1.0);
    assert!(n.std[1] > 0.0);
    let z = n.normalize(&x);
    assert_eq!(z[[0, 0]], -1.0);
    assert_eq!(n.denormalize(&z), x);
}
