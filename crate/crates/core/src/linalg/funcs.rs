use std::f64::consts::PI;

use num_complex::Complex64;

use super::{jacobi_eigh, simultaneous_diagonalize_hermitian, LinalgError, Matrix, Tolerance};

const TAYLOR_TERMS: usize = 24;

/// Matrix exponential by scaling and squaring around a truncated Taylor series.
pub fn expm(h: &Matrix) -> Matrix {
    assert!(h.is_square(), "expm needs a square matrix");
    let n = h.rows();
    let norm = h.frobenius_norm();
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > 0.5 {
        scaled_norm *= 0.5;
        squarings += 1;
    }
    let a = h.scale_real(0.5f64.powi(squarings as i32));
    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=TAYLOR_TERMS {
        term = (&term * &a).scale_real(1.0 / k as f64);
        result = &result + &term;
        if term.max_abs() < f64::EPSILON * 1e-3 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Principal logarithm of a unitary matrix, returned as a skew-Hermitian `H`
/// with `exp(H) = U` and eigenphases in `(−π, π]`.
pub fn unitary_log(u: &Matrix, tol: &Tolerance) -> Result<Matrix, LinalgError> {
    if !u.is_square() {
        return Err(LinalgError::NotSquare(u.rows(), u.cols()));
    }
    let defect = u.unitarity_defect();
    if defect > tol.orthogonality.max(tol.reconstruction) {
        return Err(LinalgError::NotUnitary(defect));
    }
    let ud = u.adjoint();
    let h1 = (u + &ud).scale_real(0.5);
    let h2 = (u - &ud).scale(Complex64::new(0.0, -0.5));
    let s = simultaneous_diagonalize_hermitian(&h1, &h2, tol)?;
    let w = &s.vectors;
    // Rayleigh quotients on U itself are more accurate than atan2 of the pair
    let diag = (&(&w.adjoint() * u) * w).diagonal();
    let phases: Vec<Complex64> = diag
        .iter()
        .map(|z| {
            let mut phi = z.arg();
            if phi <= -PI + tol.zero {
                phi = PI;
            }
            Complex64::new(0.0, phi)
        })
        .collect();
    let h = &(w * &Matrix::diag(&phases)) * &w.adjoint();
    // exact skew-Hermitian symmetrization
    Ok((&h - &h.adjoint()).scale_real(0.5))
}

/// Determinant of the real part of a square matrix by partially pivoted LU.
pub fn det_real(a: &Matrix) -> f64 {
    assert!(a.is_square(), "det needs a square matrix");
    let n = a.rows();
    let mut m = a.real_data();
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[pivot * n + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = m[col * n + col];
        det *= p;
        for r in (col + 1)..n {
            let f = m[r * n + col] / p;
            if f != 0.0 {
                for k in col..n {
                    m[r * n + k] -= f * m[col * n + k];
                }
            }
        }
    }
    det
}

/// Orthogonal polar factor of a real `n×k` matrix (`n ≥ k`): the matrix with
/// orthonormal columns nearest to `a`. Directions with vanishing singular
/// value are filled from the orthogonal complement of the others.
pub fn polar_real(a: &Matrix, tol: &Tolerance) -> Result<Matrix, LinalgError> {
    let (n, k) = (a.rows(), a.cols());
    assert!(n >= k, "polar factor needs at least as many rows as columns");
    let a = a.re();
    let gram = &a.transpose() * &a;
    let gram = (&gram + &gram.transpose()).scale_real(0.5);
    let e = jacobi_eigh(&gram, tol)?;
    let scale = a.max_abs().max(1.0);
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut deficient = Vec::new();
    for j in 0..k {
        let sigma = e.values[j].max(0.0).sqrt();
        if sigma > tol.cluster.sqrt() * scale {
            let col: Vec<f64> = (0..n)
                .map(|r| (0..k).map(|c| a[(r, c)].re * e.vectors[(c, j)].re).sum::<f64>() / sigma)
                .collect();
            u_cols.push(col);
        } else {
            u_cols.push(Vec::new());
            deficient.push(j);
        }
    }
    // reorthonormalize the well-conditioned columns against roundoff
    let good: Vec<usize> = (0..k).filter(|j| !deficient.contains(j)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &j in &good {
        let v = gram_schmidt_step(&u_cols[j], &basis);
        let v = v.unwrap_or_else(|| u_cols[j].clone());
        basis.push(v.clone());
        u_cols[j] = v;
    }
    let mut candidate = 0;
    for &j in &deficient {
        loop {
            assert!(candidate < n, "orthogonal complement exhausted");
            let mut e_c = vec![0.0; n];
            e_c[candidate] = 1.0;
            candidate += 1;
            if let Some(v) = gram_schmidt_step(&e_c, &basis) {
                basis.push(v.clone());
                u_cols[j] = v;
                break;
            }
        }
    }
    let q = Matrix::from_fn(n, k, |r, c| {
        Complex64::new((0..k).map(|j| u_cols[j][r] * e.vectors[(c, j)].re).sum(), 0.0)
    });
    Ok(q)
}

fn gram_schmidt_step(v: &[f64], basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let d: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in w.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-6 {
        return None;
    }
    Some(w.into_iter().map(|x| x / norm).collect())
}

/// Symmetric (Löwdin) orthonormalization of the rows of a real matrix.
pub fn orthonormalize_rows(a: &Matrix, tol: &Tolerance) -> Result<Matrix, LinalgError> {
    Ok(polar_real(&a.transpose(), tol)?.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_orthogonal, random_unitary};
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.7f64;
        let g = Matrix::from_real(2, 2, &[0.0, t, -t, 0.0]);
        let r = expm(&g);
        let want = Matrix::from_real(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!(r.distance(&want) < 1e-14);
    }

    #[test]
    fn expm_of_diagonal_phases() {
        let h = Matrix::diag(&[c(0.0, 3.0), c(0.0, -2.5), c(0.0, 0.1)]);
        let r = expm(&h);
        let want = Matrix::diag(&[c(0.0, 3.0).exp(), c(0.0, -2.5).exp(), c(0.0, 0.1).exp()]);
        assert!(r.distance(&want) < 1e-13);
    }

    #[test]
    fn log_of_minus_identity_is_i_pi() {
        let u = Matrix::identity(2).scale_real(-1.0);
        let h = unitary_log(&u, &tol()).unwrap();
        assert!(h.distance(&Matrix::identity(2).scale(c(0.0, PI))) < 1e-12);
    }

    #[test]
    fn log_rejects_non_unitary() {
        let u = Matrix::identity(3).scale_real(2.0);
        assert!(matches!(unitary_log(&u, &tol()), Err(LinalgError::NotUnitary(_))));
    }

    #[test]
    fn det_of_permutations() {
        assert_eq!(det_real(&Matrix::permutation(&[1, 0, 2])), -1.0);
        assert_eq!(det_real(&Matrix::permutation(&[1, 2, 0])), 1.0);
        assert_eq!(det_real(&Matrix::diag_real(&[2.0, 3.0])), 6.0);
        assert_eq!(det_real(&Matrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn polar_recovers_orthogonal_factor() {
        let o = random_orthogonal(5, 2);
        let p = Matrix::diag_real(&[3.0, 1.0, 0.5, 2.0, 0.1]);
        let v = random_orthogonal(5, 9);
        let sym = &(&v * &p) * &v.transpose();
        let q = polar_real(&(&o * &sym), &tol()).unwrap();
        assert!(q.distance(&o) < 1e-10);
    }

    #[test]
    fn polar_completes_rank_deficient_input() {
        let a = Matrix::from_real(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let q = polar_real(&a, &tol()).unwrap();
        assert!((&q.transpose() * &q).distance(&Matrix::identity(2)) < 1e-14);
        assert!((q[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn orthonormalize_is_identity_on_orthogonal() {
        let o = random_orthogonal(4, 5);
        let r = orthonormalize_rows(&o, &tol()).unwrap();
        assert!(r.distance(&o) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn exp_log_round_trip(n in 1usize..=8, seed in any::<u64>()) {
            let u = random_unitary(n, seed);
            let h = unitary_log(&u, &tol()).unwrap();
            prop_assert!(h.is_skew_hermitian(1e-12));
            prop_assert!(expm(&h).distance(&u) < 1e-10);
        }

        #[test]
        fn det_of_orthogonal_is_unit(n in 1usize..=8, seed in any::<u64>()) {
            let o = random_orthogonal(n, seed);
            prop_assert!((det_real(&o).abs() - 1.0).abs() < 1e-12);
        }
    }
}
