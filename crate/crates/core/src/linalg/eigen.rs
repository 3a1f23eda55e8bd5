use std::ops::Range;

use num_complex::Complex64;

use super::{LinalgError, Matrix, Tolerance};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `S = V diag(values) V*` with values sorted descending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub vectors: Matrix,
    pub values: Vec<f64>,
}

/// Common eigenbasis of a commuting pair.
#[derive(Debug, Clone)]
pub struct SimultaneousEigh {
    pub vectors: Matrix,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Splits a descending sequence into runs whose consecutive gaps are at most `tol`.
pub fn clusters(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i - 1] - values[i]).abs() > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

fn off_norm_real(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigensolver for a real symmetric matrix.
///
/// Returns a real orthogonal `O` and descending eigenvalues with
/// `O diag(lam) Oᵀ = S`. Each eigenvector is signed so that its first
/// entry above `tol.zero` in magnitude is positive.
pub fn jacobi_eigh(s: &Matrix, tol: &Tolerance) -> Result<Eigh, LinalgError> {
    if !s.is_square() {
        return Err(LinalgError::NotSquare(s.rows(), s.cols()));
    }
    let asym = s.distance(&s.transpose());
    let imag = s.im().frobenius_norm();
    if asym > tol.zero * s.frobenius_norm().max(1.0) || imag > tol.zero {
        return Err(LinalgError::NotSymmetric(asym.max(imag)));
    }
    let n = s.rows();
    // symmetrize so the rotations see exactly symmetric data
    let mut a = s.real_data();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let mut v = Matrix::identity(n).real_data();
    let scale = s.frobenius_norm().max(1.0);
    let target = tol.zero * scale * 1e-3;

    let mut converged = off_norm_real(&a, n) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // skip entries already negligible against both diagonal entries
                if apq.abs() < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
        converged = off_norm_real(&a, n) <= target;
    }
    let off = off_norm_real(&a, n);
    if off > tol.zero * scale {
        return Err(LinalgError::NoConvergence(off));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut out = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        let lead = (0..n)
            .map(|k| v[k * n + src])
            .find(|x| x.abs() > tol.zero)
            .unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            out[k * n + col] = sign * v[k * n + src];
        }
    }
    Ok(Eigh {
        vectors: Matrix::from_real_data(n, n, out),
        values,
    })
}

fn off_norm_complex(a: &[Complex64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Complex Jacobi eigensolver for a Hermitian matrix.
///
/// Each pivot is first made real by a diagonal phase, then annihilated with
/// a real rotation. Eigenvectors are phased so their first significant
/// entry is real and positive.
pub fn hermitian_eigh(h: &Matrix, tol: &Tolerance) -> Result<Eigh, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::NotSquare(h.rows(), h.cols()));
    }
    let asym = h.distance(&h.adjoint());
    if asym > tol.zero * h.frobenius_norm().max(1.0) {
        return Err(LinalgError::NotHermitian(asym));
    }
    let n = h.rows();
    let mut a: Vec<Complex64> = h.entries().to_vec();
    for i in 0..n {
        a[i * n + i] = Complex64::new(a[i * n + i].re, 0.0);
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i].conj());
            a[i * n + j] = m;
            a[j * n + i] = m.conj();
        }
    }
    let mut v: Vec<Complex64> = Matrix::identity(n).entries().to_vec();
    let scale = h.frobenius_norm().max(1.0);
    let target = tol.zero * scale * 1e-3;

    let mut converged = off_norm_complex(&a, n) <= target;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let b = apq.norm();
                if b == 0.0 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                if b < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = Complex64::new(0.0, 0.0);
                    a[q * n + p] = Complex64::new(0.0, 0.0);
                    continue;
                }
                // phase column/row q so the pivot becomes the real number b
                let ph = apq / b;
                let phc = ph.conj();
                for k in 0..n {
                    a[k * n + q] *= phc;
                }
                for k in 0..n {
                    a[q * n + k] *= ph;
                }
                for k in 0..n {
                    v[k * n + q] *= phc;
                }
                let theta = (aqq - app) / (2.0 * b);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * sn;
                    a[k * n + q] = akp * sn + akq * c;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * sn;
                    a[q * n + k] = apk * sn + aqk * c;
                }
                a[p * n + q] = Complex64::new(0.0, 0.0);
                a[q * n + p] = Complex64::new(0.0, 0.0);
                a[p * n + p] = Complex64::new(a[p * n + p].re, 0.0);
                a[q * n + q] = Complex64::new(a[q * n + q].re, 0.0);
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - vkq * sn;
                    v[k * n + q] = vkp * sn + vkq * c;
                }
            }
        }
        converged = off_norm_complex(&a, n) <= target;
    }
    let off = off_norm_complex(&a, n);
    if off > tol.zero * scale {
        return Err(LinalgError::NoConvergence(off));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i].re).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for (col, &src) in order.iter().enumerate() {
        let lead = (0..n)
            .map(|k| v[k * n + src])
            .find(|z| z.norm() > tol.zero)
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = lead.conj() / lead.norm();
        for k in 0..n {
            out[k * n + col] = v[k * n + src] * phase;
        }
    }
    Ok(Eigh {
        vectors: Matrix::from_vec(n, n, out),
        values,
    })
}

fn check_commuting(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<(), LinalgError> {
    let comm = a.commutator(b).frobenius_norm();
    if comm > tol.zero * (a.frobenius_norm() * b.frobenius_norm()).max(1.0) {
        return Err(LinalgError::NotCommuting(comm));
    }
    Ok(())
}

/// Finishes a simultaneous diagonalization: rediagonalizes `b` inside every
/// eigenvalue cluster of `a` and reads off both spectra as Rayleigh quotients.
fn refine_clusters(
    a: &Matrix,
    b: &Matrix,
    first: Eigh,
    tol: &Tolerance,
    eig: impl Fn(&Matrix, &Tolerance) -> Result<Eigh, LinalgError>,
) -> Result<SimultaneousEigh, LinalgError> {
    let n = a.rows();
    let mut vectors = first.vectors;
    for range in clusters(&first.values, tol.cluster) {
        if range.len() < 2 {
            continue;
        }
        let idx: Vec<usize> = range.clone().collect();
        let all: Vec<usize> = (0..n).collect();
        let basis = vectors.select(&all, &idx);
        let restricted = &(&basis.adjoint() * b) * &basis;
        // restriction of a Hermitian matrix, re-Hermitized against roundoff
        let restricted = (&restricted + &restricted.adjoint()).scale_real(0.5);
        let inner = eig(&restricted, tol)?;
        let rotated = &basis * &inner.vectors;
        for (c, &col) in idx.iter().enumerate() {
            for k in 0..n {
                vectors[(k, col)] = rotated[(k, c)];
            }
        }
    }
    let va = &(&vectors.adjoint() * a) * &vectors;
    let vb = &(&vectors.adjoint() * b) * &vectors;
    Ok(SimultaneousEigh {
        a: va.diagonal().iter().map(|z| z.re).collect(),
        b: vb.diagonal().iter().map(|z| z.re).collect(),
        vectors,
    })
}

/// Common orthogonal eigenbasis of two commuting real symmetric matrices.
///
/// Diagonalizes `a`, then diagonalizes `b` restricted to each eigenvalue
/// cluster of `a` (clusters formed with `tol.cluster`).
pub fn simultaneous_diagonalize(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<SimultaneousEigh, LinalgError> {
    if !b.is_square() || b.rows() != a.rows() {
        return Err(LinalgError::NotSquare(b.rows(), b.cols()));
    }
    if !b.is_symmetric(tol.zero * b.frobenius_norm().max(1.0)) || !b.is_real(tol.zero) {
        return Err(LinalgError::NotSymmetric(b.distance(&b.transpose())));
    }
    let first = jacobi_eigh(a, tol)?;
    check_commuting(a, b, tol)?;
    let mut out = refine_clusters(a, b, first, tol, jacobi_eigh)?;
    out.vectors = out.vectors.re();
    Ok(out)
}

/// Hermitian counterpart of [`simultaneous_diagonalize`], returning a unitary basis.
pub fn simultaneous_diagonalize_hermitian(
    a: &Matrix,
    b: &Matrix,
    tol: &Tolerance,
) -> Result<SimultaneousEigh, LinalgError> {
    if !b.is_hermitian(tol.zero * b.frobenius_norm().max(1.0)) {
        return Err(LinalgError::NotHermitian(b.distance(&b.adjoint())));
    }
    let first = hermitian_eigh(a, tol)?;
    check_commuting(a, b, tol)?;
    refine_clusters(a, b, first, tol, hermitian_eigh)
}
