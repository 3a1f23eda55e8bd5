//! Seeded random test matrices.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{det_real, Matrix};

fn orthonormalize_columns(mut cols: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    for j in 0..cols.len() {
        for _ in 0..2 {
            for i in 0..j {
                let d: Complex64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum();
                let prev = cols[i].clone();
                for (x, y) in cols[j].iter_mut().zip(&prev) {
                    *x -= d * y;
                }
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[j].iter_mut() {
            *x /= norm;
        }
    }
    cols
}

fn from_columns(n: usize, cols: &[Vec<Complex64>]) -> Matrix {
    Matrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Unitary from Gram–Schmidt on a seeded complex Gaussian matrix.
pub fn random_unitary(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    from_columns(n, &orthonormalize_columns(cols))
}

/// Real orthogonal matrix, not necessarily special.
pub fn random_orthogonal(n: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            (0..n)
                .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
                .collect()
        })
        .collect();
    from_columns(n, &orthonormalize_columns(cols))
}

/// Random element of SO(n).
pub fn random_special_orthogonal(n: usize, seed: u64) -> Matrix {
    let mut o = random_orthogonal(n, seed);
    if n > 0 && det_real(&o) < 0.0 {
        for i in 0..n {
            o[(i, 0)] = -o[(i, 0)];
        }
    }
    o
}
