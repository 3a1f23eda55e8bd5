//! Recursive Cartan (KAK) factorization of unitaries on a bipartite system
//! of dimensions `d1 × d2`.
//!
//! The pipeline is `X = K1·A·K2` with real orthogonal `K` and diagonal `A`
//! ([`ai`]), followed by repeated cosine–sine splittings of each orthogonal
//! factor along tensor-product block structures ([`bdi`], [`recursion`]).
//! Every emitted factor carries its generator, which [`classify`] expands in
//! a product basis to separate local from entangling pieces.
//!
//! ```
//! use bipartite_cartan::{recursive_decompose, sample, BipartiteShape, SplitStrategy, Tolerance};
//!
//! let u = sample::random_unitary(6, 7);
//! let shape = BipartiteShape::new(2, 3).unwrap();
//! let tree = recursive_decompose(&u, shape, &SplitStrategy::Balanced, &Tolerance::default()).unwrap();
//! assert!(tree.residual() < 1e-8);
//! ```

pub mod ai;
pub mod bases;
pub mod bdi;
pub mod classify;
pub mod linalg;
pub mod recursion;
pub mod sample;

pub use ai::{ai_decompose, AiTriple};
pub use bases::{BipartiteShape, Role, SplitPlan, SubspaceBasis};
pub use bdi::{bdi_decompose, bdi_decompose_paired, BlockKak};
pub use classify::{inventory, is_local, tensor_expand, Family, GeneratorCoefficients, HamiltonianInventory};
pub use recursion::{recursive_decompose, Factor, FactorKind, FactorTree, Node, SplitStrategy};

pub use linalg::{LinalgError, Matrix, Tolerance};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("index ({m}, {k}) out of range for dimension {n}")]
    IndexOutOfRange { n: usize, m: usize, k: usize },
    #[error("invalid shape {d1}x{d2}")]
    InvalidShape { d1: usize, d2: usize },
    #[error("invalid split ({r1},{q1},{r2},{q2}): {reason}")]
    InvalidSplit {
        r1: usize,
        q1: usize,
        r2: usize,
        q2: usize,
        reason: &'static str,
    },
    #[error("shape {d1}x{d2} is too small for a block split")]
    ShapeTooSmall { d1: usize, d2: usize },
    #[error("dimension {0} is too small to split")]
    DimensionTooSmall(usize),
    #[error("input is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("input is not orthogonal (defect {0:.3e})")]
    NotOrthogonal(f64),
    #[error("orthogonal factor kept an imaginary residual of {0:.3e}")]
    RealnessFailure(f64),
    #[error("bad block split r={r}, q={q} for size {size}")]
    BadSplit { r: usize, q: usize, size: usize },
    #[error("no sign assignment satisfies the block equations (best residual {0:.3e})")]
    SignReconciliationFailure(f64),
    #[error("matrix lies outside s1+s2 (residual {0:.3e})")]
    NotInSpan(f64),
    #[error("matrix lies outside the three-dimensional subgroup (residual {0:.3e})")]
    NotInSubgroup(f64),
    #[error("factor product misses the input by {0:.3e}")]
    ReconstructionFailure(f64),
    #[error("generator is not skew-Hermitian (defect {0:.3e})")]
    NotSkewHermitian(f64),
    #[error("factor at position {0} has no generator")]
    MissingGenerator(usize),
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    DimensionMismatch { expected: usize, rows: usize, cols: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
