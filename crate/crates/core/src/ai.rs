//! First factorization step: `X = K1·A·K2` with `K1, K2 ∈ SO(n)` and `A`
//! diagonal unitary.
//!
//! With `S = XᵀX = K2ᵀ·A²·K2`, the real and imaginary parts of `S` are
//! commuting real symmetric matrices, so a common orthogonal eigenbasis `O`
//! gives `K2 = Oᵀ`, `A² = OᵀSO`, and `K1 = X·O·A⁻¹`, which is real because
//! it is both unitary and complex orthogonal.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bases::BipartiteShape;
use crate::linalg::{clusters, det_real, polar_real, simultaneous_diagonalize, Matrix, Tolerance};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AiTriple {
    pub k1: Matrix,
    pub a: Matrix,
    pub k2: Matrix,
    pub shape: BipartiteShape,
}

impl AiTriple {
    pub fn product(&self) -> Matrix {
        &(&self.k1 * &self.a) * &self.k2
    }

    /// Phases `φ_j` with `A = diag(e^{iφ_j})`, each in `(−π, π]`.
    pub fn phases(&self) -> Vec<f64> {
        self.a.diagonal().iter().map(|z| wrap(z.arg())).collect()
    }

    /// `i·diag(φ)`, the generator of `A`.
    pub fn generator(&self) -> Matrix {
        let ph: Vec<Complex64> = self.phases().into_iter().map(|p| Complex64::new(0.0, p)).collect();
        Matrix::diag(&ph)
    }
}

fn wrap(phi: f64) -> f64 {
    if phi <= -PI {
        phi + 2.0 * PI
    } else if phi > PI {
        phi - 2.0 * PI
    } else {
        phi
    }
}

pub fn ai_decompose(x: &Matrix, shape: BipartiteShape, tol: &Tolerance) -> Result<AiTriple> {
    tol.validate()?;
    let n = shape.n();
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    let defect = x.unitarity_defect();
    if defect > tol.orthogonality {
        return Err(Error::NotUnitary(defect));
    }

    let s = &x.transpose() * x;
    let sym = (&s + &s.transpose()).scale_real(0.5);
    let eig = simultaneous_diagonalize(&sym.re(), &sym.im(), tol)?;
    let o = eig.vectors;

    let phi: Vec<f64> = eig
        .a
        .iter()
        .zip(&eig.b)
        .map(|(&a, &b)| {
            let p = b.atan2(a);
            if p <= -PI + tol.zero {
                PI
            } else {
                p
            }
        })
        .collect();
    // principal square root: half phases in (−π/2, π/2]
    let mut half: Vec<f64> = phi.iter().map(|p| p / 2.0).collect();

    let xo = x * &o;
    let mut k1c = Matrix::from_fn(n, n, |i, j| xo[(i, j)] * Complex64::from_polar(1.0, -half[j]));
    let imag = k1c.im().frobenius_norm();
    if imag > tol.reconstruction {
        refine_clusters(&xo, &mut k1c, &phi, tol)?;
    }
    let mut k1 = polar_real(&k1c.re(), tol)?;
    let mut k2 = o.transpose();

    // move reflections into the torus so both K lie in SO(n)
    if n > 0 && det_real(&k1) < 0.0 {
        for i in 0..n {
            k1[(i, 0)] = -k1[(i, 0)];
        }
        half[0] = wrap(half[0] + PI);
    }
    if n > 0 && det_real(&k2) < 0.0 {
        for j in 0..n {
            k2[(0, j)] = -k2[(0, j)];
        }
        half[0] = wrap(half[0] + PI);
    }
    let a = Matrix::diag(&half.iter().map(|&p| Complex64::from_polar(1.0, p)).collect::<Vec<_>>());
    let out = AiTriple { k1, a, k2, shape };

    let residual = out.product().distance(x);
    if residual > tol.reconstruction * (n as f64).max(1.0) {
        return Err(Error::RealnessFailure(residual));
    }
    Ok(out)
}

/// Within each near-degenerate eigenvalue cluster the basis `O_c` may mix
/// directions; replace the cluster columns of `K1` by the orthogonal polar
/// factor of the real part of the phase-rotated `X·O_c`.
fn refine_clusters(xo: &Matrix, k1c: &mut Matrix, phi: &[f64], tol: &Tolerance) -> Result<()> {
    let n = xo.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| phi[j].total_cmp(&phi[i]));
    let sorted: Vec<f64> = order.iter().map(|&i| phi[i]).collect();
    let all: Vec<usize> = (0..n).collect();
    for range in clusters(&sorted, tol.cluster) {
        let cols: Vec<usize> = order[range].to_vec();
        let mean = cols.iter().map(|&c| phi[c]).sum::<f64>() / cols.len() as f64;
        let rot = Complex64::from_polar(1.0, -mean / 2.0);
        let block = xo.select(&all, &cols).scale(rot);
        let q = polar_real(&block.re(), tol)?;
        for (c, &col) in cols.iter().enumerate() {
            for i in 0..n {
                k1c[(i, col)] = q[(i, c)];
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::sample::random_unitary;

    fn shape(n: usize) -> BipartiteShape {
        BipartiteShape::new(1, n).unwrap()
    }

    fn check(x: &Matrix, t: &AiTriple) {
        assert!(t.product().distance(x) < 1e-10);
        assert_eq!(t.k1.im().max_abs(), 0.0);
        assert_eq!(t.k2.im().max_abs(), 0.0);
        assert!(t.k1.is_orthogonal(1e-12) && t.k2.is_orthogonal(1e-12));
        assert!((det_real(&t.k1) - 1.0).abs() < 1e-10);
        assert!((det_real(&t.k2) - 1.0).abs() < 1e-10);
        assert!(t.a.is_diagonal(0.0));
        assert!(t.a.is_unitary(1e-12));
    }

    #[test]
    fn real_orthogonal_input_is_its_own_k1() {
        let x = Matrix::permutation(&[1, 2, 0]);
        let t = ai_decompose(&x, shape(3), &Tolerance::default()).unwrap();
        assert_eq!(t.k1, x);
        assert_eq!(t.a, Matrix::identity(3));
        assert_eq!(t.k2, Matrix::identity(3));
    }

    #[test]
    fn diagonal_input_lands_in_the_torus() {
        let ph = [0.3, -1.2, 2.9, 0.0];
        let x = Matrix::diag(&ph.map(|p| Complex64::from_polar(1.0, p)));
        let t = ai_decompose(&x, shape(4), &Tolerance::default()).unwrap();
        check(&x, &t);
        // O sorts the spectrum, so K1 and K2 are signed permutations undoing each other
        for k in [&t.k1, &t.k2] {
            assert!(k.is_integer());
        }
        assert!((&t.k1 * &t.k2).is_diagonal(1e-12));
    }

    #[test]
    fn symmetric_generator_in_u2() {
        let t0 = 0.37;
        let g = Matrix::from_int_rows(&[&[0, 1], &[1, 0]]).scale(Complex64::new(0.0, t0));
        let x = expm(&g);
        // closed form: cos t·1 + i sin t·σx
        let want = Matrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(t0.cos(), 0.0),
                Complex64::new(0.0, t0.sin()),
                Complex64::new(0.0, t0.sin()),
                Complex64::new(t0.cos(), 0.0),
            ],
        );
        assert!(x.distance(&want) < 1e-15);
        let t = ai_decompose(&x, shape(2), &Tolerance::default()).unwrap();
        check(&x, &t);
        assert!(t.product().distance(&x) < 1e-12);
        assert!(t.a.distance(&Matrix::identity(2)) > 0.1);
    }

    #[test]
    fn random_unitaries() {
        for seed in 0..20 {
            for n in [2, 4, 6, 8] {
                let x = random_unitary(n, seed);
                let t = ai_decompose(&x, shape(n), &Tolerance::default()).unwrap();
                check(&x, &t);
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        // X = O1·diag(e^{ia}, e^{ia}, e^{ib})·O2 has a repeated eigenvalue in XᵀX
        let o1 = crate::sample::random_special_orthogonal(3, 4);
        let o2 = crate::sample::random_special_orthogonal(3, 5);
        let d = Matrix::diag(&[0.4, 0.4, -1.1].map(|p| Complex64::from_polar(1.0, p)));
        let x = &(&o1 * &d) * &o2;
        let t = ai_decompose(&x, shape(3), &Tolerance::default()).unwrap();
        check(&x, &t);
    }

    #[test]
    fn rejects_non_unitary() {
        let x = Matrix::identity(2).scale_real(1.5);
        assert!(matches!(
            ai_decompose(&x, shape(2), &Tolerance::default()),
            Err(Error::NotUnitary(_))
        ));
    }
}
