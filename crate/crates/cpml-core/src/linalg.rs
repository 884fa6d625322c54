//! Dense symmetric eigendecomposition (cyclic Jacobi) and the PSD
//! pseudo-inverse built on it. Score matrices here are small (tens of
//! columns), where Jacobi is accurate and dependency-free.

use ndarray::{Array1, Array2};

/// Eigenvalues (descending) and matching orthonormal eigenvectors (columns)
/// of a symmetric matrix.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let mut m = a.clone();
    let mut v = Array2::eye(n);
    if n <= 1 {
        return (m.diag().to_owned(), v);
    }

    let frobenius: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let stop = (1e-14 * frobenius).max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let off: f64 = {
            let mut s = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    s += m[[p, q]] * m[[p, q]];
                }
            }
            (2.0 * s).sqrt()
        };
        if off <= stop {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = m[[p, p]];
                let aqq = m[[q, q]];
                m[[p, p]] = app - t * apq;
                m[[q, q]] = aqq + t * apq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[[i, p]];
                        let aiq = m[[i, q]];
                        m[[i, p]] = c * aip - s * aiq;
                        m[[p, i]] = m[[i, p]];
                        m[[i, q]] = s * aip + c * aiq;
                        m[[q, i]] = m[[i, q]];
                    }
                }
                for i in 0..n {
                    let vip = v[[i, p]];
                    let viq = v[[i, q]];
                    v[[i, p]] = c * vip - s * viq;
                    v[[i, q]] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[j, j]].total_cmp(&m[[i, i]]));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut eigenvectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.column_mut(col).assign(&v.column(i));
    }
    (eigenvalues, eigenvectors)
}

/// Moore–Penrose pseudo-inverse of a symmetric PSD matrix, plus the log
/// pseudo-determinant (sum of logs of retained eigenvalues) and rank.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdPseudoInverse {
    pub inverse: Array2<f64>,
    pub log_pseudo_det: f64,
    pub rank: usize,
}

/// Eigenvalues at or below `relative_cutoff × λ_max` are treated as zero and
/// dropped from both the inverse and the pseudo-determinant.
pub fn pseudo_inverse_psd(a: &Array2<f64>, relative_cutoff: f64) -> PsdPseudoInverse {
    let n = a.nrows();
    let (eigenvalues, eigenvectors) = symmetric_eigen(a);
    let lambda_max = eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = relative_cutoff * lambda_max;
    let mut inverse = Array2::zeros((n, n));
    let mut log_pseudo_det = 0.0;
    let mut rank = 0;
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            let u = eigenvectors.column(k);
            for i in 0..n {
                for j in 0..n {
                    inverse[[i, j]] += u[i] * u[j] / lambda;
                }
            }
            log_pseudo_det += lambda.ln();
            rank += 1;
        }
    }
    PsdPseudoInverse {
        inverse,
        log_pseudo_det,
        rank,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
        let g = Array2::from_shape_fn((n, n), |_| rng.gen::<f64>() * 2.0 - 1.0);
        (&g + &g.t()) / 2.0
    }

    fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> Array2<f64> {
        let g = Array2::from_shape_fn((n, rank), |_| rng.gen::<f64>() * 2.0 - 1.0);
        g.dot(&g.t())
    }

    #[test]
    fn two_by_two_known_spectrum() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (vals, vecs) = symmetric_eigen(&a);
        assert_abs_diff_eq!(vals[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert_abs_diff_eq!(vecs[[0, 0]].abs(), inv_sqrt2, epsilon = 1e-12);
        assert_abs_diff_eq!(vecs[[1, 0]].abs(), inv_sqrt2, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_matrix_sorted_descending() {
        let a = array![[1.0, 0.0, 0.0], [0.0, 5.0, 0.0], [0.0, 0.0, 3.0]];
        let (vals, _) = symmetric_eigen(&a);
        assert_eq!(vals.to_vec(), vec![5.0, 3.0, 1.0]);
    }

    #[test]
    fn reconstruction_and_orthogonality_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 12] {
            let a = random_symmetric(&mut rng, n);
            let (vals, vecs) = symmetric_eigen(&a);
            let diag = Array2::from_diag(&vals);
            let rebuilt = vecs.dot(&diag).dot(&vecs.t());
            for (x, y) in a.iter().zip(rebuilt.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-10);
            }
            let gram = vecs.t().dot(&vecs);
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(gram[[i, j]], want, epsilon = 1e-12);
                }
            }
            assert!(vals.windows(2).into_iter().all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn psd_eigenvalues_are_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_psd(&mut rng, 6, 6);
        let (vals, _) = symmetric_eigen(&a);
        assert!(vals.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn full_rank_pseudo_inverse_matches_closed_form() {
        let a = array![[4.0, 1.0], [1.0, 3.0]];
        let p = pseudo_inverse_psd(&a, 1e-10);
        let det = 11.0;
        let expected = array![[3.0 / det, -1.0 / det], [-1.0 / det, 4.0 / det]];
        for (x, y) in p.inverse.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert_eq!(p.rank, 2);
        assert_abs_diff_eq!(p.log_pseudo_det, det.ln(), epsilon = 1e-12);
    }

    #[test]
    fn rank_deficient_matrix_inverts_on_its_range() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let p = pseudo_inverse_psd(&a, 1e-10);
        assert_eq!(p.rank, 1);
        assert_abs_diff_eq!(p.log_pseudo_det, 2.0f64.ln(), epsilon = 1e-12);
        for (&x, &y) in p
            .inverse
            .iter()
            .zip([0.25, 0.25, 0.25, 0.25].iter())
        {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn moore_penrose_identities_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for rank in [2usize, 4] {
            let a = random_psd(&mut rng, 4, rank);
            let p = pseudo_inverse_psd(&a, 1e-10);
            assert_eq!(p.rank, rank);
            let apa = a.dot(&p.inverse).dot(&a);
            for (x, y) in apa.iter().zip(a.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
            let pap = p.inverse.dot(&a).dot(&p.inverse);
            for (x, y) in pap.iter().zip(p.inverse.iter()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let p = pseudo_inverse_psd(&Array2::zeros((3, 3)), 1e-10);
        assert_eq!(p.rank, 0);
        assert_eq!(p.log_pseudo_det, 0.0);
        assert!(p.inverse.iter().all(|&x| x == 0.0));
    }
}
