//! Dense real/complex kernels: products and norms, a cyclic Jacobi
//! eigensolver for real symmetric and complex Hermitian matrices,
//! simultaneous diagonalization of commuting pairs, and the unitary
//! exponential/logarithm pair.

mod eigen;
mod funcs;
mod matrix;

pub use eigen::{
    clusters, hermitian_eigh, jacobi_eigh, simultaneous_diagonalize, simultaneous_diagonalize_hermitian, Eigh,
    SimultaneousEigh,
};
pub use funcs::{det_real, expm, orthonormalize_rows, polar_real, unitary_log};
pub use matrix::{product, Matrix};

use thiserror::Error;

/// Numerical thresholds shared by every stage of the factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Bound on reconstruction residuals (Frobenius).
    pub reconstruction: f64,
    /// Bound on `‖QᵀQ − 1‖_F` for computed orthogonal factors.
    pub orthogonality: f64,
    /// Two eigenvalues closer than this are treated as one cluster.
    pub cluster: f64,
    /// Entrywise zero test.
    pub zero: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            reconstruction: 1e-10,
            orthogonality: 1e-10,
            cluster: 1e-8,
            zero: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn validate(&self) -> Result<(), LinalgError> {
        let all_positive = [self.reconstruction, self.orthogonality, self.cluster, self.zero]
            .iter()
            .all(|&t| t > 0.0 && t.is_finite());
        if !all_positive || self.cluster < self.zero {
            return Err(LinalgError::BadTolerance(*self));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrices do not commute (commutator norm {0:.3e})")]
    NotCommuting(f64),
    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("Jacobi sweeps did not converge (off-diagonal norm {0:.3e})")]
    NoConvergence(f64),
    #[error("expected a square matrix, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("invalid tolerance {0:?}")]
    BadTolerance(Tolerance),
}
