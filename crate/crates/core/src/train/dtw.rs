use ndarray::{ArrayView1, ArrayView2};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct WarpingPath {
    /// `(source_frame, target_frame)` pairs from `(0, 0)` to the last frames.
    pub steps: Vec<(usize, usize)>,
    /// Summed Euclidean distance along the path.
    pub cost: f64,
}

fn distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dynamic time warping with steps `(1,0)`, `(0,1)`, `(1,1)` and both
/// endpoints pinned. Rows are frames. Ties prefer the diagonal, then the
/// source advance.
pub fn dtw_align(src: ArrayView2<f64>, tgt: ArrayView2<f64>) -> Result<WarpingPath> {
    let (ns, nt) = (src.nrows(), tgt.nrows());
    if ns == 0 || nt == 0 {
        return Err(Error::EmptyInput("dtw sequence"));
    }
    if src.ncols() != tgt.ncols() {
        return Err(Error::LengthMismatch {
            what: "dtw feature",
            expected: src.ncols(),
            actual: tgt.ncols(),
        });
    }

    let mut acc = vec![f64::INFINITY; ns * nt];
    let at = |i: usize, j: usize| i * nt + j;
    for i in 0..ns {
        for j in 0..nt {
            let d = distance(src.row(i), tgt.row(j));
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[at(i - 1, j - 1)] } else { f64::INFINITY };
                let up = if i > 0 { acc[at(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { acc[at(i, j - 1)] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[at(i, j)] = best + d;
        }
    }

    let mut steps = vec![(ns - 1, nt - 1)];
    let (mut i, mut j) = (ns - 1, nt - 1);
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[at(i - 1, j - 1)];
            let up = acc[at(i - 1, j)];
            let left = acc[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        steps.push((i, j));
    }
    steps.reverse();
    Ok(WarpingPath {
        steps,
        cost: acc[at(ns - 1, nt - 1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Minimum over every monotone, continuous path, by exhaustive recursion.
    fn brute_force(src: &Array2<f64>, tgt: &Array2<f64>) -> f64 {
        fn go(i: usize, j: usize, s: &Array2<f64>, t: &Array2<f64>, sofar: f64, best: &mut f64) {
            let sofar = sofar + distance(s.row(i), t.row(j));
            if i + 1 == s.nrows() && j + 1 == t.nrows() {
                *best = best.min(sofar);
                return;
            }
            if i + 1 < s.nrows() {
                go(i + 1, j, s, t, sofar, best);
            }
            if j + 1 < t.nrows() {
                go(i, j + 1, s, t, sofar, best);
            }
            if i + 1 < s.nrows() && j + 1 < t.nrows() {
                go(i + 1, j + 1, s, t, sofar, best);
            }
        }
        let mut best = f64::INFINITY;
        go(0, 0, src, tgt, 0.0, &mut best);
        best
    }

    fn path_cost(src: &Array2<f64>, tgt: &Array2<f64>, steps: &[(usize, usize)]) -> f64 {
        steps.iter().map(|&(i, j)| distance(src.row(i), tgt.row(j))).sum()
    }

    #[test]
    fn identical_sequences_align_diagonally() {
        let x = arr2(&[[0.0, 1.0], [2.0, 0.5], [1.0, 1.0], [3.0, -1.0]]);
        let p = dtw_align(x.view(), x.view()).unwrap();
        assert_eq!(p.steps, vec![(0, 0), (1, 1), (2, 2), (3, 3)]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn repeated_frame_in_target() {
        let src = arr2(&[[1.0, 0.0], [0.0, 1.0]]);
        let tgt = arr2(&[[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let p = dtw_align(src.view(), tgt.view()).unwrap();
        assert_eq!(p.steps, vec![(0, 0), (0, 1), (1, 2)]);
        assert_eq!(p.cost, 0.0);
    }

    #[test]
    fn cost_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..3 {
            let src = Array2::from_shape_fn((8, 3), |_| rng.gen_range(-1.0..1.0));
            let tgt = Array2::from_shape_fn((10, 3), |_| rng.gen_range(-1.0..1.0));
            let p = dtw_align(src.view(), tgt.view()).unwrap();
            let oracle = brute_force(&src, &tgt);
            assert!((p.cost - oracle).abs() < 1e-12);
            assert!((path_cost(&src, &tgt, &p.steps) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn path_is_monotone_and_continuous() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let src = Array2::from_shape_fn((30, 4), |_| rng.gen_range(-1.0..1.0));
        let tgt = Array2::from_shape_fn((45, 4), |_| rng.gen_range(-1.0..1.0));
        let p = dtw_align(src.view(), tgt.view()).unwrap();
        assert_eq!(p.steps[0], (0, 0));
        assert_eq!(*p.steps.last().unwrap(), (29, 44));
        for w in p.steps.windows(2) {
            let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            assert!(matches!((di, dj), (1, 0) | (0, 1) | (1, 1)));
        }
    }

    #[test]
    fn single_frames_and_errors() {
        let a = arr2(&[[1.0]]);
        let b = arr2(&[[1.0], [2.0], [4.0]]);
        let p = dtw_align(a.view(), b.view()).unwrap();
        assert_eq!(p.steps, vec![(0, 0), (0, 1), (0, 2)]);
        assert_eq!(p.cost, 4.0);
        let empty = Array2::<f64>::zeros((0, 1));
        assert!(dtw_align(empty.view(), b.view()).is_err());
        let wide = arr2(&[[1.0, 2.0]]);
        assert!(dtw_align(wide.view(), b.view()).is_err());
    }
}
