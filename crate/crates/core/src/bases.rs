//! Generator bases: elementary matrices, the bipartite `k ⊕ p` split of
//! `u(d1·d2)`, its block refinements along a split plan, the index
//! permutation that brings those refinements into standard block form, and
//! two explicit Cartan subalgebras.
//!
//! Public constructors taking matrix indices are 1-based, as in the usual
//! `E_mn` notation. Everything else is 0-based.

use num_complex::Complex64;

use crate::linalg::Matrix;
use crate::{Error, Result};

/// Dimensions of the two subsystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BipartiteShape {
    pub d1: usize,
    pub d2: usize,
}

impl BipartiteShape {
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidShape { d1, d2 });
        }
        Ok(Self { d1, d2 })
    }

    pub fn n(&self) -> usize {
        self.d1 * self.d2
    }

    /// Tensor index of `|i⟩ ⊗ |j⟩` (0-based).
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.d2 + j
    }
}

/// Per-subsystem block sizes `(r1, q1)` and `(r2, q2)` of one recursion level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SplitPlan {
    pub r1: usize,
    pub q1: usize,
    pub r2: usize,
    pub q2: usize,
}

impl SplitPlan {
    pub fn new(r1: usize, q1: usize, r2: usize, q2: usize) -> Result<Self> {
        let bad = |reason| Error::InvalidSplit { r1, q1, r2, q2, reason };
        if q1 == 0 || q2 == 0 {
            return Err(bad("block sizes must be positive"));
        }
        if r1 < q1 || r2 < q2 {
            return Err(bad("need r1 >= q1 and r2 >= q2"));
        }
        Ok(Self { r1, q1, r2, q2 })
    }

    /// Most even split of the given shape.
    pub fn balanced(shape: BipartiteShape) -> Result<Self> {
        if shape.d1 < 2 || shape.d2 < 2 {
            return Err(Error::ShapeTooSmall {
                d1: shape.d1,
                d2: shape.d2,
            });
        }
        let r1 = shape.d1.div_ceil(2);
        let r2 = shape.d2.div_ceil(2);
        Self::new(r1, shape.d1 - r1, r2, shape.d2 - r2)
    }

    pub fn shape(&self) -> BipartiteShape {
        BipartiteShape {
            d1: self.r1 + self.q1,
            d2: self.r2 + self.q2,
        }
    }

    pub fn fits(&self, shape: BipartiteShape) -> bool {
        self.shape() == shape
    }

    pub fn r(&self) -> usize {
        self.r1 * self.r2 + self.q1 * self.q2
    }

    pub fn q(&self) -> usize {
        self.r1 * self.q2 + self.q1 * self.r2
    }

    /// Tensor indices of the four sub-blocks, each in lexicographic order:
    /// `(i<r1, j<r2)`, `(i<r1, j≥r2)`, `(i≥r1, j<r2)`, `(i≥r1, j≥r2)`.
    pub fn groups(&self) -> [Vec<usize>; 4] {
        let shape = self.shape();
        let mut g: [Vec<usize>; 4] = Default::default();
        for i in 0..shape.d1 {
            for j in 0..shape.d2 {
                let slot = 2 * usize::from(i >= self.r1) + usize::from(j >= self.r2);
                g[slot].push(shape.index(i, j));
            }
        }
        g
    }

    /// Bipartite shapes inherited by the four sub-blocks.
    pub fn group_shapes(&self) -> [BipartiteShape; 4] {
        let s = |d1, d2| BipartiteShape { d1, d2 };
        [
            s(self.r1, self.r2),
            s(self.r1, self.q2),
            s(self.q1, self.r2),
            s(self.q1, self.q2),
        ]
    }

    /// Tensor indices in block-standard order: the `r` block `G1, G4`
    /// followed by the `q` block `G2, G3`.
    pub fn frame_order(&self) -> Vec<usize> {
        let [g1, g2, g3, g4] = self.groups();
        [g1, g4, g2, g3].concat()
    }
}

/// Which subspace a basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    K,
    P,
    A,
    KPrime,
    PPrime,
    APrime,
    KDoublePrime,
    PDoublePrime,
    ADoublePrime,
    S1,
    S2,
}

/// An orthogonal family of generators.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub role: Role,
    pub elements: Vec<Matrix>,
    pub shape: BipartiteShape,
    pub split: Option<SplitPlan>,
}

impl SubspaceBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Real coordinates of `x` along the basis elements.
    pub fn coordinates(&self, x: &Matrix) -> Vec<f64> {
        self.elements.iter().map(|b| x.inner(b).re / b.inner(b).re).collect()
    }

    /// Frobenius distance from `x` to the real span of the basis.
    pub fn projection_residual(&self, x: &Matrix) -> f64 {
        let mut rest = x.clone();
        for (b, c) in self.elements.iter().zip(self.coordinates(x)) {
            if c != 0.0 {
                rest = &rest - &b.scale_real(c);
            }
        }
        rest.frobenius_norm()
    }

    pub fn contains(&self, x: &Matrix, tol: f64) -> bool {
        self.projection_residual(x) <= tol
    }

    /// Largest `|Tr(A B*)|` over distinct pairs.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.elements.iter().enumerate() {
            for b in &self.elements[i + 1..] {
                worst = worst.max(a.inner(b).norm());
            }
        }
        worst
    }

    /// Largest commutator norm over all pairs.
    pub fn commutator_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.elements.iter().enumerate() {
            for b in &self.elements[i + 1..] {
                worst = worst.max(a.commutator(b).frobenius_norm());
            }
        }
        worst
    }
}

fn check_index(n: usize, m: usize, k: usize) -> Result<()> {
    if m == 0 || k == 0 || m > n || k > n {
        return Err(Error::IndexOutOfRange { n, m, k });
    }
    Ok(())
}

/// `E_mk`: a single 1 at row `m`, column `k` (1-based).
pub fn elementary(n: usize, m: usize, k: usize) -> Result<Matrix> {
    check_index(n, m, k)?;
    Ok(e0(n, m - 1, k - 1))
}

/// `Δ_mk = E_mk − E_km` (1-based).
pub fn delta(n: usize, m: usize, k: usize) -> Result<Matrix> {
    check_index(n, m, k)?;
    Ok(delta0(n, m - 1, k - 1))
}

/// `Ω_mk = E_mk + E_km` (1-based).
pub fn omega(n: usize, m: usize, k: usize) -> Result<Matrix> {
    check_index(n, m, k)?;
    Ok(omega0(n, m - 1, k - 1))
}

pub(crate) fn e0(n: usize, m: usize, k: usize) -> Matrix {
    let mut e = Matrix::zeros(n, n);
    e[(m, k)] = Complex64::new(1.0, 0.0);
    e
}

pub(crate) fn delta0(n: usize, m: usize, k: usize) -> Matrix {
    &e0(n, m, k) - &e0(n, k, m)
}

pub(crate) fn omega0(n: usize, m: usize, k: usize) -> Matrix {
    &e0(n, m, k) + &e0(n, k, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Id,
}

pub fn pauli(which: Pauli) -> Matrix {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let z = c(0.0, 0.0);
    let entries = match which {
        Pauli::X => vec![z, c(1.0, 0.0), c(1.0, 0.0), z],
        Pauli::Y => vec![z, c(0.0, -1.0), c(0.0, 1.0), z],
        Pauli::Z => vec![c(1.0, 0.0), z, z, c(-1.0, 0.0)],
        Pauli::Id => vec![c(1.0, 0.0), z, z, c(1.0, 0.0)],
    };
    Matrix::from_vec(2, 2, entries)
}

/// Real antisymmetric `d×d` basis `Δ_mn`, `m < n` lexicographic.
fn antisymmetric(d: usize) -> Vec<(usize, usize, Matrix)> {
    let mut out = Vec::new();
    for m in 0..d {
        for n in (m + 1)..d {
            out.push((m, n, delta0(d, m, n)));
        }
    }
    out
}

/// Real symmetric `d×d` basis: `E_mm` on the diagonal, `Ω_mn` off it, `m ≤ n` lexicographic.
fn symmetric(d: usize) -> Vec<(usize, usize, Matrix)> {
    let mut out = Vec::new();
    for m in 0..d {
        for n in m..d {
            let b = if m == n { e0(d, m, m) } else { omega0(d, m, n) };
            out.push((m, n, b));
        }
    }
    out
}

/// Single-subsystem families split by a block boundary at `r`.
struct Families {
    sigma_d: Vec<Matrix>,
    sigma_a: Vec<Matrix>,
    sym_d: Vec<Matrix>,
    sym_a: Vec<Matrix>,
}

fn families(d: usize, r: usize) -> Families {
    let same_side = |m: usize, n: usize| (m < r) == (n < r);
    let mut f = Families {
        sigma_d: Vec::new(),
        sigma_a: Vec::new(),
        sym_d: Vec::new(),
        sym_a: Vec::new(),
    };
    for (m, n, b) in antisymmetric(d) {
        if same_side(m, n) {
            f.sigma_d.push(b);
        } else {
            f.sigma_a.push(b);
        }
    }
    for (m, n, b) in symmetric(d) {
        if same_side(m, n) {
            f.sym_d.push(b);
        } else {
            f.sym_a.push(b);
        }
    }
    f
}

fn products(left: &[Matrix], right: &[Matrix], scale: Complex64) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(left.len() * right.len());
    for a in left {
        for b in right {
            out.push(a.kron(b).scale(scale));
        }
    }
    out
}

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// The bipartite `k` (real antisymmetric), `p` (`i`·real symmetric) and the
/// diagonal torus `a`, all written as tensor products of subsystem bases.
pub fn bipartite_spans(shape: BipartiteShape) -> (SubspaceBasis, SubspaceBasis, SubspaceBasis) {
    let (d1, d2) = (shape.d1, shape.d2);
    let strip = |v: Vec<(usize, usize, Matrix)>| v.into_iter().map(|(_, _, b)| b).collect::<Vec<_>>();
    let (a1, a2) = (strip(antisymmetric(d1)), strip(antisymmetric(d2)));
    let (s1, s2) = (strip(symmetric(d1)), strip(symmetric(d2)));

    let mut k = products(&a1, &s2, ONE);
    k.extend(products(&s1, &a2, ONE));
    let mut p = products(&s1, &s2, I);
    p.extend(products(&a1, &a2, I));
    let n = shape.n();
    let a = (0..n).map(|j| e0(n, j, j).scale(I)).collect();

    let mk = |role, elements| SubspaceBasis {
        role,
        elements,
        shape,
        split: None,
    };
    (mk(Role::K, k), mk(Role::P, p), mk(Role::A, a))
}

/// Block permutation: identity blocks of sizes `r1r2`,
/// `q1q2`, `r1q2`, `q1r2` taking grouped coordinates `(G1, G2, G3, G4)` to
/// `(G1, G4, G2, G3)`.
pub fn conjugacy_r(split: SplitPlan) -> Matrix {
    let sizes = [
        split.r1 * split.r2,
        split.r1 * split.q2,
        split.q1 * split.r2,
        split.q1 * split.q2,
    ];
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let perm: Vec<usize> = [0, 3, 1, 2]
        .iter()
        .flat_map(|&g| offsets[g]..offsets[g] + sizes[g])
        .collect();
    Matrix::permutation(&perm)
}

/// Permutation taking tensor coordinates to grouped coordinates `(G1, G2, G3, G4)`.
pub fn grouping_permutation(split: SplitPlan) -> Matrix {
    Matrix::permutation(&split.groups().concat())
}

/// Full change of coordinates `T = R·G`: conjugating a `k′` element by `T`
/// gives `diag(r×r, q×q)`.
pub fn frame_transform(split: SplitPlan) -> Matrix {
    Matrix::permutation(&split.frame_order())
}

fn require_fit(shape: BipartiteShape, split: SplitPlan) -> Result<()> {
    if shape.d1 < 2 || shape.d2 < 2 {
        return Err(Error::ShapeTooSmall {
            d1: shape.d1,
            d2: shape.d2,
        });
    }
    if !split.fits(shape) {
        let SplitPlan { r1, q1, r2, q2 } = split;
        return Err(Error::InvalidSplit {
            r1,
            q1,
            r2,
            q2,
            reason: "split does not match the shape",
        });
    }
    Ok(())
}

/// Block refinement `k = k′ ⊕ p′` of the bipartite `k` along `split`.
pub fn prime_spans(shape: BipartiteShape, split: SplitPlan) -> Result<(SubspaceBasis, SubspaceBasis)> {
    require_fit(shape, split)?;
    let f1 = families(shape.d1, split.r1);
    let f2 = families(shape.d2, split.r2);
    let mut k = products(&f1.sigma_d, &f2.sym_d, ONE);
    k.extend(products(&f1.sym_d, &f2.sigma_d, ONE));
    k.extend(products(&f1.sigma_a, &f2.sym_a, ONE));
    k.extend(products(&f1.sym_a, &f2.sigma_a, ONE));
    let mut p = products(&f1.sigma_a, &f2.sym_d, ONE);
    p.extend(products(&f1.sigma_d, &f2.sym_a, ONE));
    p.extend(products(&f1.sym_d, &f2.sigma_a, ONE));
    p.extend(products(&f1.sym_a, &f2.sigma_d, ONE));
    let mk = |role, elements| SubspaceBasis {
        role,
        elements,
        shape,
        split: Some(split),
    };
    Ok((mk(Role::KPrime, k), mk(Role::PPrime, p)))
}

/// Second refinement `k′ = k″ ⊕ p″`; `k″` is block-diagonal over the four groups.
pub fn double_prime_spans(shape: BipartiteShape, split: SplitPlan) -> Result<(SubspaceBasis, SubspaceBasis)> {
    require_fit(shape, split)?;
    let f1 = families(shape.d1, split.r1);
    let f2 = families(shape.d2, split.r2);
    let mut k = products(&f1.sigma_d, &f2.sym_d, ONE);
    k.extend(products(&f1.sym_d, &f2.sigma_d, ONE));
    let mut p = products(&f1.sigma_a, &f2.sym_a, ONE);
    p.extend(products(&f1.sym_a, &f2.sigma_a, ONE));
    let mk = |role, elements| SubspaceBasis {
        role,
        elements,
        shape,
        split: Some(split),
    };
    Ok((mk(Role::KDoublePrime, k), mk(Role::PDoublePrime, p)))
}

/// Abelian subalgebra of `p′`: `E_jj ⊗ Δ_{k, r2+k}` for every `j` and `k ≤ q2`,
/// then `Δ_{f, r1+f} ⊗ E_ll` for `f ≤ q1`, `q2 < l ≤ r2`.
pub fn cartan_a_prime(split: SplitPlan) -> SubspaceBasis {
    let shape = split.shape();
    let (d1, d2) = (shape.d1, shape.d2);
    let mut elements = Vec::new();
    for j in 0..d1 {
        for k in 0..split.q2 {
            elements.push(e0(d1, j, j).kron(&delta0(d2, k, split.r2 + k)));
        }
    }
    for l in split.q2..split.r2 {
        for f in 0..split.q1 {
            elements.push(delta0(d1, f, split.r1 + f).kron(&e0(d2, l, l)));
        }
    }
    SubspaceBasis {
        role: Role::APrime,
        elements,
        shape,
        split: Some(split),
    }
}

/// Subsystem index pairs `((j, m), (l, n))` (0-based) of the symmetric family.
pub fn n_pairs(split: SplitPlan) -> Vec<((usize, usize), (usize, usize))> {
    (0..split.q1 * split.q2)
        .map(|s| ((s / split.r2, s % split.r2), (s / split.q2, s % split.q2)))
        .collect()
}

/// Subsystem index pairs `((j, n), (l, m))` (0-based) of the antisymmetric family.
pub fn m_pairs(split: SplitPlan) -> Vec<((usize, usize), (usize, usize))> {
    let count = (split.r1 * split.q2).min(split.q1 * split.r2);
    (0..count)
        .map(|s| ((s / split.q2, s % split.q2), (s / split.r2, s % split.r2)))
        .collect()
}

/// Abelian subalgebra of `p″`: `q1q2` symmetric mixes
/// `Δ_{j,r1+l} ⊗ Ω_{m,r2+n} + Ω_{j,r1+l} ⊗ Δ_{m,r2+n}`, then
/// `min(r1q2, q1r2)` antisymmetric mixes with the sign between the two terms flipped.
pub fn cartan_a_dprime(split: SplitPlan) -> SubspaceBasis {
    let shape = split.shape();
    let (d1, d2) = (shape.d1, shape.d2);
    let mix = |j: usize, l: usize, m: usize, n: usize, sign: f64| {
        let a = delta0(d1, j, split.r1 + l).kron(&omega0(d2, m, split.r2 + n));
        let b = omega0(d1, j, split.r1 + l).kron(&delta0(d2, m, split.r2 + n));
        &a + &b.scale_real(sign)
    };
    let mut elements = Vec::new();
    for ((j, m), (l, n)) in n_pairs(split) {
        elements.push(mix(j, l, m, n, 1.0));
    }
    for ((j, n), (l, m)) in m_pairs(split) {
        elements.push(mix(j, l, m, n, -1.0));
    }
    SubspaceBasis {
        role: Role::ADoublePrime,
        elements,
        shape,
        split: Some(split),
    }
}

fn j2() -> Matrix {
    Matrix::from_int_rows(&[&[0, 1], &[-1, 0]])
}

/// `{iσy⊗1, iσx⊗σy, iσz⊗σy}` as real 4×4 matrices; they multiply like the
/// quaternion units `i, j, k`.
pub fn s1_basis() -> SubspaceBasis {
    let id = pauli(Pauli::Id);
    let elements = vec![j2().kron(&id), pauli(Pauli::X).kron(&j2()), pauli(Pauli::Z).kron(&j2())];
    SubspaceBasis {
        role: Role::S1,
        elements,
        shape: BipartiteShape { d1: 2, d2: 2 },
        split: None,
    }
}

/// `{i1⊗σy, iσy⊗σx, iσy⊗σz}`, the commuting partner of [`s1_basis`].
pub fn s2_basis() -> SubspaceBasis {
    let id = pauli(Pauli::Id);
    let elements = vec![id.kron(&j2()), j2().kron(&pauli(Pauli::X)), j2().kron(&pauli(Pauli::Z))];
    SubspaceBasis {
        role: Role::S2,
        elements,
        shape: BipartiteShape { d1: 2, d2: 2 },
        split: None,
    }
}

/// Brackets `[x, y]` of every pair drawn from `left × right` and reports the
/// largest projection residual against `target`.
pub fn bracket_residual(left: &SubspaceBasis, right: &SubspaceBasis, target: &SubspaceBasis) -> f64 {
    let mut worst = 0.0f64;
    for a in &left.elements {
        for b in &right.elements {
            worst = worst.max(target.projection_residual(&a.commutator(b)));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_family() {
        assert_eq!(elementary(2, 1, 2).unwrap(), Matrix::from_int_rows(&[&[0, 1], &[0, 0]]));
        assert_eq!(delta(2, 1, 2).unwrap(), Matrix::from_int_rows(&[&[0, 1], &[-1, 0]]));
        let o = omega(3, 1, 3).unwrap();
        assert_eq!(o, Matrix::from_int_rows(&[&[0, 0, 1], &[0, 0, 0], &[1, 0, 0]]));
        assert!(matches!(elementary(2, 0, 1), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(delta(2, 1, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn pauli_entries() {
        let c = |re, im| Complex64::new(re, im);
        assert_eq!(pauli(Pauli::X), Matrix::from_int_rows(&[&[0, 1], &[1, 0]]));
        let y = pauli(Pauli::Y);
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert_eq!(y[(1, 0)], c(0.0, 1.0));
        assert_eq!(pauli(Pauli::Id), Matrix::identity(2));
        assert_eq!(&pauli(Pauli::X) * &pauli(Pauli::Y), pauli(Pauli::Z).scale(c(0.0, 1.0)));
    }

    #[test]
    fn span_dimensions() {
        for (d1, d2, k, p, a) in [(1, 1, 0, 1, 1), (2, 2, 6, 10, 4), (2, 3, 15, 21, 6)] {
            let (kb, pb, ab) = bipartite_spans(BipartiteShape::new(d1, d2).unwrap());
            assert_eq!((kb.dim(), pb.dim(), ab.dim()), (k, p, a), "shape {d1}x{d2}");
        }
    }

    #[test]
    fn k_is_antisymmetric_p_is_imaginary_symmetric() {
        let (k, p, _) = bipartite_spans(BipartiteShape::new(2, 3).unwrap());
        assert!(k.elements.iter().all(|b| b.is_real(0.0) && b.is_skew(0.0)));
        assert!(p
            .elements
            .iter()
            .all(|b| b.re().max_abs() == 0.0 && b.is_symmetric(0.0)));
        for x in &k.elements {
            for y in &p.elements {
                assert_eq!(x.inner(y).re, 0.0);
            }
        }
    }

    #[test]
    fn swap_split_r_is_the_block_permutation() {
        let split = SplitPlan::new(1, 1, 2, 2).unwrap();
        let r = conjugacy_r(split);
        let want = Matrix::permutation(&[0, 1, 6, 7, 2, 3, 4, 5]);
        assert_eq!(r, want);
        assert_eq!(grouping_permutation(split), Matrix::identity(8));
        assert_eq!(frame_transform(split), r);
    }

    #[test]
    fn smallest_r_is_a_permutation() {
        let r = conjugacy_r(SplitPlan::new(1, 1, 1, 1).unwrap());
        assert_eq!(r, Matrix::permutation(&[0, 3, 1, 2]));
        assert_eq!(&r * &r.transpose(), Matrix::identity(4));
    }

    #[test]
    fn frame_is_r_after_grouping() {
        let split = SplitPlan::new(2, 1, 2, 1).unwrap();
        let t = frame_transform(split);
        assert_eq!(t, &conjugacy_r(split) * &grouping_permutation(split));
    }

    #[test]
    fn k_prime_is_block_diagonal_in_frame() {
        for split in [SplitPlan::new(2, 1, 2, 1).unwrap(), SplitPlan::new(1, 1, 2, 2).unwrap()] {
            let shape = split.shape();
            let (kp, pp) = prime_spans(shape, split).unwrap();
            let t = frame_transform(split);
            let sizes = [split.r(), split.q()];
            for x in &kp.elements {
                let y = &(&t * x) * &t.transpose();
                assert_eq!(y.off_block_mass(&sizes), 0.0);
            }
            for x in &pp.elements {
                let y = &(&t * x) * &t.transpose();
                let diag = Matrix::block_diag(&[
                    &y.block(0, 0, sizes[0], sizes[0]),
                    &y.block(sizes[0], sizes[0], sizes[1], sizes[1]),
                ]);
                assert_eq!(diag.max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn prime_dims_add_up() {
        for (d1, d2) in [(2, 2), (2, 3), (3, 4), (4, 4)] {
            let shape = BipartiteShape::new(d1, d2).unwrap();
            let split = SplitPlan::balanced(shape).unwrap();
            let (kp, pp) = prime_spans(shape, split).unwrap();
            let n = shape.n();
            assert_eq!(kp.dim() + pp.dim(), n * (n - 1) / 2);
            let (kd, pd) = double_prime_spans(shape, split).unwrap();
            assert_eq!(kd.dim() + pd.dim(), kp.dim());
        }
    }

    #[test]
    fn split_validation() {
        assert!(SplitPlan::new(1, 2, 2, 2).is_err());
        assert!(SplitPlan::new(1, 0, 2, 2).is_err());
        let s = SplitPlan::new(2, 1, 3, 1).unwrap();
        assert_eq!((s.r(), s.q()), (7, 5));
        assert_eq!(
            SplitPlan::balanced(BipartiteShape::new(5, 2).unwrap()).unwrap(),
            SplitPlan::new(3, 2, 1, 1).unwrap()
        );
        assert!(matches!(
            prime_spans(BipartiteShape::new(1, 4).unwrap(), SplitPlan::new(1, 1, 2, 2).unwrap()),
            Err(Error::ShapeTooSmall { .. })
        ));
        assert!(matches!(
            prime_spans(BipartiteShape::new(2, 4).unwrap(), SplitPlan::new(2, 1, 2, 2).unwrap()),
            Err(Error::InvalidSplit { .. })
        ));
    }

    #[test]
    fn a_prime_swap_split() {
        let split = SplitPlan::new(1, 1, 2, 2).unwrap();
        let a = cartan_a_prime(split);
        assert_eq!(a.dim(), 4);
        let d2 = |m, k| delta(4, m, k).unwrap();
        let e1 = |j| elementary(2, j, j).unwrap();
        assert_eq!(a.elements[0], e1(1).kron(&d2(1, 3)));
        assert_eq!(a.elements[3], e1(2).kron(&d2(2, 4)));
        assert_eq!(a.commutator_defect(), 0.0);
    }

    #[test]
    fn a_prime_is_maximal_for_2_1_3_1() {
        let split = SplitPlan::new(2, 1, 3, 1).unwrap();
        let a = cartan_a_prime(split);
        assert_eq!(a.dim(), 5);
        assert_eq!(a.commutator_defect(), 0.0);
        let (_, pp) = prime_spans(split.shape(), split).unwrap();
        for x in &a.elements {
            assert_eq!(pp.projection_residual(x), 0.0);
        }
        // any p′ element commuting with all of a already lies in a
        for x in &pp.elements {
            let commutes = a.elements.iter().all(|y| x.commutator(y).max_abs() == 0.0);
            if commutes {
                assert_eq!(a.projection_residual(x), 0.0);
            }
        }
    }

    #[test]
    fn a_dprime_swap_split() {
        let split = SplitPlan::new(1, 1, 2, 2).unwrap();
        let a = cartan_a_dprime(split);
        assert_eq!(a.dim(), 4);
        assert_eq!(a.commutator_defect(), 0.0);
        let d = |n, m, k| delta(n, m, k).unwrap();
        let o = |n, m, k| omega(n, m, k).unwrap();
        let h2 = &d(2, 1, 2).kron(&o(4, 2, 4)) + &o(2, 1, 2).kron(&d(4, 2, 4));
        let h3 = &d(2, 1, 2).kron(&o(4, 2, 4)) - &o(2, 1, 2).kron(&d(4, 2, 4));
        assert_eq!(a.elements[1], h2);
        assert_eq!(a.elements[3], h3);
    }

    #[test]
    fn a_dprime_2_2_2_2_is_abelian_inside_p_dprime() {
        let split = SplitPlan::new(2, 2, 2, 2).unwrap();
        let a = cartan_a_dprime(split);
        assert_eq!(a.dim(), 8);
        assert_eq!(a.commutator_defect(), 0.0);
        let (_, pd) = double_prime_spans(split.shape(), split).unwrap();
        assert!(a.elements.iter().all(|x| pd.projection_residual(x) == 0.0));
    }

    #[test]
    fn s_bases_are_quaternionic_and_commute() {
        let s1 = s1_basis();
        let s2 = s2_basis();
        let e = &s1.elements;
        assert_eq!(&e[0] * &e[1], e[2]);
        assert_eq!(&e[1] * &e[2], e[0]);
        assert_eq!(&e[2] * &e[0], e[1]);
        let f = &s2.elements;
        assert_eq!(&f[0] * &f[1], f[2]);
        for x in e {
            assert_eq!(x * x, Matrix::identity(4).scale_real(-1.0));
            for y in f {
                assert_eq!(x.commutator(y).max_abs(), 0.0);
            }
        }
        let (k, _, _) = bipartite_spans(BipartiteShape::new(2, 2).unwrap());
        for x in e.iter().chain(f) {
            assert_eq!(k.projection_residual(x), 0.0);
        }
    }
}
