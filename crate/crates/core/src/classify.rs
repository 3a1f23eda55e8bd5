//! Expansion of generators in the product basis `{E_jj, Ω_mn, Δ_mn}` of
//! each subsystem, locality tests, and the inventory of entangling
//! Hamiltonians used by a factorization.

use std::fmt;

use num_complex::Complex64;

use crate::bases::BipartiteShape;
use crate::linalg::{Matrix, Tolerance};
use crate::recursion::{FactorTree, Locality, Node};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    /// `E_jj`
    Diagonal,
    /// `Ω_mn = E_mn + E_nm`
    Symmetric,
    /// `Δ_mn = E_mn − E_nm`
    Antisymmetric,
}

impl ElementKind {
    fn letter(self) -> char {
        match self {
            ElementKind::Diagonal => 'E',
            ElementKind::Symmetric => 'O',
            ElementKind::Antisymmetric => 'D',
        }
    }
}

/// One single-subsystem basis element, indices 1-based with `m ≤ n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub kind: ElementKind,
    pub m: usize,
    pub n: usize,
}

impl BasisLabel {
    fn entries(self) -> Vec<(usize, usize, f64)> {
        let (m, n) = (self.m - 1, self.n - 1);
        match self.kind {
            ElementKind::Diagonal => vec![(m, m, 1.0)],
            ElementKind::Symmetric => vec![(m, n, 1.0), (n, m, 1.0)],
            ElementKind::Antisymmetric => vec![(m, n, 1.0), (n, m, -1.0)],
        }
    }

    fn norm_sqr(self) -> f64 {
        if self.kind == ElementKind::Diagonal {
            1.0
        } else {
            2.0
        }
    }

    pub fn matrix(self, d: usize) -> Matrix {
        let mut out = Matrix::zeros(d, d);
        for (i, j, v) in self.entries() {
            out[(i, j)] = v.into();
        }
        out
    }

    /// All `d²` labels: diagonals, then `Ω` and `Δ` for each pair `m < n`.
    pub fn all(d: usize) -> Vec<BasisLabel> {
        let mut out: Vec<BasisLabel> = (1..=d)
            .map(|j| BasisLabel {
                kind: ElementKind::Diagonal,
                m: j,
                n: j,
            })
            .collect();
        for m in 1..=d {
            for n in m + 1..=d {
                for kind in [ElementKind::Symmetric, ElementKind::Antisymmetric] {
                    out.push(BasisLabel { kind, m, n });
                }
            }
        }
        out
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m > 9 || self.n > 9 {
            write!(f, "{}{},{}", self.kind.letter(), self.m, self.n)
        } else {
            write!(f, "{}{}{}", self.kind.letter(), self.m, self.n)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub left: BasisLabel,
    pub right: BasisLabel,
    pub coefficient: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorCoefficients {
    pub shape: BipartiteShape,
    pub terms: Vec<Term>,
    /// Frobenius norm of what the kept terms miss.
    pub residual: f64,
}

impl GeneratorCoefficients {
    pub fn reassemble(&self) -> Matrix {
        let mut out = Matrix::zeros(self.shape.n(), self.shape.n());
        for t in &self.terms {
            let b = t.left.matrix(self.shape.d1).kron(&t.right.matrix(self.shape.d2));
            out = &out + &b.scale(t.coefficient);
        }
        out
    }

    pub fn coefficient(&self, left: BasisLabel, right: BasisLabel) -> Complex64 {
        self.terms
            .iter()
            .find(|t| t.left == left && t.right == right)
            .map_or(Complex64::new(0.0, 0.0), |t| t.coefficient)
    }
}

fn check_shape(h: &Matrix, shape: BipartiteShape) -> Result<()> {
    let n = shape.n();
    if h.rows() != n || h.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            rows: h.rows(),
            cols: h.cols(),
        });
    }
    Ok(())
}

fn check_skew(h: &Matrix, tol: &Tolerance) -> Result<()> {
    let defect = (h + &h.adjoint()).frobenius_norm();
    if defect > tol.orthogonality * h.frobenius_norm().max(1.0) {
        return Err(Error::NotSkewHermitian(defect));
    }
    Ok(())
}

/// Coefficients `c` with `H = Σ c·B¹⊗B²`, dropping those with `|c| ≤ tol.zero`.
pub fn tensor_expand(h: &Matrix, shape: BipartiteShape, tol: &Tolerance) -> Result<GeneratorCoefficients> {
    check_shape(h, shape)?;
    check_skew(h, tol)?;
    let (d1, d2) = (shape.d1, shape.d2);
    let mut terms = Vec::new();
    let mut kept = 0.0;
    for left in BasisLabel::all(d1) {
        let e1 = left.entries();
        for right in BasisLabel::all(d2) {
            let mut dot = Complex64::new(0.0, 0.0);
            for &(a, b, v) in &e1 {
                for (c, d, w) in right.entries() {
                    dot += h[(a * d2 + c, b * d2 + d)] * (v * w);
                }
            }
            let norm = left.norm_sqr() * right.norm_sqr();
            let coefficient = dot / norm;
            if coefficient.norm() > tol.zero {
                kept += coefficient.norm_sqr() * norm;
                terms.push(Term {
                    left,
                    right,
                    coefficient,
                });
            }
        }
    }
    let residual = (h.frobenius_norm().powi(2) - kept).max(0.0).sqrt();
    Ok(GeneratorCoefficients { shape, terms, residual })
}

/// Part of `H` outside `span{B⊗1, 1⊗B}`.
fn nonlocal_part(h: &Matrix, shape: BipartiteShape) -> Matrix {
    let (d1, d2) = (shape.d1, shape.d2);
    let n = shape.n();
    let t2 = Matrix::from_fn(d1, d1, |a, b| (0..d2).map(|c| h[(a * d2 + c, b * d2 + c)]).sum());
    let t1 = Matrix::from_fn(d2, d2, |c, d| (0..d1).map(|a| h[(a * d2 + c, a * d2 + d)]).sum());
    let local = &(&t2.kron(&Matrix::identity(d2)).scale_real(1.0 / d2 as f64)
        + &Matrix::identity(d1).kron(&t1).scale_real(1.0 / d1 as f64))
        - &Matrix::identity(n).scale(h.trace() / n as f64);
    h - &local
}

/// Whether `H` generates a product `X1 ⊗ X2`.
pub fn is_local(h: &Matrix, shape: BipartiteShape, tol: &Tolerance) -> Result<bool> {
    check_shape(h, shape)?;
    check_skew(h, tol)?;
    Ok(nonlocal_part(h, shape).frobenius_norm() <= tol.zero)
}

/// Support-pattern family of an entangling generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Family {
    /// `E_jj ⊗ Δ_kl` and `Δ_jl ⊗ E_kk` terms only.
    DiagRotation,
    /// `Δ⊗Ω` and `Ω⊗Δ` on the same index pairs with equal coefficients
    /// (a lone `Δ⊗Ω` or `Ω⊗Δ` counts too).
    SymmetricMix,
    /// As above with opposite coefficients.
    AntisymmetricMix,
    /// `E_jj ⊗ E_kk` terms only.
    DiagDiag,
    /// Anything else, tagged with the kinds of terms present.
    Other(String),
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::DiagRotation => "diag-rotation".into(),
            Family::SymmetricMix => "symmetric-mix".into(),
            Family::AntisymmetricMix => "antisymmetric-mix".into(),
            Family::DiagDiag => "diag-diag".into(),
            Family::Other(sig) => format!("other:{sig}"),
        }
    }

    pub fn of(coefficients: &GeneratorCoefficients, tol: &Tolerance) -> Family {
        use ElementKind::*;
        let terms = &coefficients.terms;
        let kinds =
            |pairs: &[(ElementKind, ElementKind)]| terms.iter().all(|t| pairs.contains(&(t.left.kind, t.right.kind)));
        if terms.is_empty() {
            return Family::Other("empty".into());
        }
        if kinds(&[(Diagonal, Antisymmetric), (Antisymmetric, Diagonal)]) {
            return Family::DiagRotation;
        }
        if kinds(&[(Diagonal, Diagonal)]) {
            return Family::DiagDiag;
        }
        if kinds(&[(Antisymmetric, Symmetric), (Symmetric, Antisymmetric)]) {
            let (mut equal, mut opposite) = (false, false);
            for t in terms.iter().filter(|t| t.left.kind == Antisymmetric) {
                let partner = BasisLabel {
                    kind: Symmetric,
                    ..t.left
                };
                let other = BasisLabel {
                    kind: Antisymmetric,
                    ..t.right
                };
                let c = coefficients.coefficient(partner, other);
                if (c - t.coefficient).norm() <= tol.zero {
                    equal = true;
                } else if (c + t.coefficient).norm() <= tol.zero {
                    opposite = true;
                } else if c.norm() > tol.zero {
                    return Family::Other("unbalanced-mix".into());
                }
            }
            return match (equal, opposite) {
                (true, true) => Family::Other("mixed-mix".into()),
                (false, true) => Family::AntisymmetricMix,
                _ => Family::SymmetricMix,
            };
        }
        let mut sig: Vec<String> = terms
            .iter()
            .map(|t| format!("{}{}", t.left.kind.letter(), t.right.kind.letter()))
            .collect();
        sig.sort();
        sig.dedup();
        Family::Other(sig.join("+"))
    }
}

#[derive(Debug, Clone)]
pub struct InventoryEntry {
    pub family: Family,
    /// First generator of the family, scaled to unit largest coefficient.
    pub representative: Matrix,
    pub count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct HamiltonianInventory {
    pub entries: Vec<InventoryEntry>,
}

impl HamiltonianInventory {
    pub fn families(&self) -> Vec<Family> {
        self.entries.iter().map(|e| e.family.clone()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn checked_generator(tree: &FactorTree, index: usize) -> Result<Matrix> {
    let f = &tree.factors[index];
    let k = f.support.len();
    if f.local_generator.rows() != k || f.local_generator.cols() != k || f.n != tree.n() {
        return Err(Error::MissingGenerator(index));
    }
    Ok(f.generator())
}

/// Families of entangling factors in order of first appearance.
pub fn inventory(tree: &FactorTree, tol: &Tolerance) -> Result<HamiltonianInventory> {
    let mut inv = HamiltonianInventory::default();
    for i in 0..tree.factors.len() {
        let g = checked_generator(tree, i)?;
        if is_local(&g, tree.shape, tol)? {
            continue;
        }
        let coefficients = tensor_expand(&g, tree.shape, tol)?;
        let family = Family::of(&coefficients, tol);
        match inv.entries.iter_mut().find(|e| e.family == family) {
            Some(e) => e.count += 1,
            None => {
                let scale = coefficients
                    .terms
                    .iter()
                    .map(|t| t.coefficient.norm())
                    .fold(0.0, f64::max);
                inv.entries.push(InventoryEntry {
                    family,
                    representative: g.scale_real(1.0 / scale),
                    count: 1,
                });
            }
        }
    }
    Ok(inv)
}

/// Fills the locality of every factor, in the flat list and in the tree.
pub fn annotate(tree: &mut FactorTree, tol: &Tolerance) -> Result<()> {
    let mut flags = Vec::with_capacity(tree.factors.len());
    for i in 0..tree.factors.len() {
        let g = checked_generator(tree, i)?;
        flags.push(if is_local(&g, tree.shape, tol)? {
            Locality::Local
        } else {
            Locality::Entangling
        });
    }
    for (f, &l) in tree.factors.iter_mut().zip(&flags) {
        f.locality = Some(l);
    }
    fn walk(node: &mut Node, flags: &mut std::slice::Iter<'_, Locality>) {
        match node {
            Node::Leaf(f) => f.locality = flags.next().copied(),
            Node::Group(g) => g.children.iter_mut().for_each(|c| walk(c, flags)),
        }
    }
    let mut it = flags.iter();
    tree.root.iter_mut().for_each(|n| walk(n, &mut it));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::{delta, elementary, omega, pauli, Pauli, SplitPlan};
    use crate::recursion::{recursive_decompose, SplitStrategy};
    use crate::sample::random_unitary;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn shape(d1: usize, d2: usize) -> BipartiteShape {
        BipartiteShape::new(d1, d2).unwrap()
    }

    fn label(kind: ElementKind, m: usize, n: usize) -> BasisLabel {
        BasisLabel { kind, m, n }
    }

    use ElementKind::{Antisymmetric as D, Diagonal as E, Symmetric as O};

    #[test]
    fn identity_spreads_over_diagonals() {
        let h = Matrix::identity(6).scale(Complex64::new(0.0, 1.0));
        let c = tensor_expand(&h, shape(2, 3), &tol()).unwrap();
        assert_eq!(c.terms.len(), 6);
        assert!(c.terms.iter().all(|t| t.left.kind == E && t.right.kind == E));
        assert!(c.terms.iter().all(|t| t.coefficient == Complex64::new(0.0, 1.0)));
        assert_eq!(c.residual, 0.0);
    }

    #[test]
    fn a_prime_generator_terms() {
        let e = |k| elementary(2, k, k).unwrap();
        let d = |m, n| delta(4, m, n).unwrap();
        let a = &(&e(1).kron(&d(2, 4)).scale_real(PI / 2.0) + &e(2).kron(&d(1, 3)).scale_real(1.5 * PI))
            + &e(2).kron(&d(2, 4)).scale_real(PI);
        let c = tensor_expand(&a, shape(2, 4), &tol()).unwrap();
        assert_eq!(c.terms.len(), 3);
        assert_eq!(
            c.coefficient(label(E, 1, 1), label(D, 2, 4)),
            Complex64::new(PI / 2.0, 0.0)
        );
        assert_eq!(
            c.coefficient(label(E, 2, 2), label(D, 1, 3)),
            Complex64::new(1.5 * PI, 0.0)
        );
        assert_eq!(c.coefficient(label(E, 2, 2), label(D, 2, 4)), Complex64::new(PI, 0.0));
        assert_eq!(c.reassemble(), a);
    }

    #[test]
    fn labels_and_display() {
        assert_eq!(BasisLabel::all(3).len(), 9);
        assert_eq!(label(D, 2, 4).to_string(), "D24");
        assert_eq!(label(O, 1, 12).to_string(), "O1,12");
        assert_eq!(label(O, 1, 3).matrix(3), omega(3, 1, 3).unwrap());
    }

    #[test]
    fn locality_examples() {
        let j = pauli(Pauli::Y).scale(Complex64::new(0.0, 1.0));
        let l = j.kron(&Matrix::identity(2));
        assert!(is_local(&l, shape(2, 2), &tol()).unwrap());
        let n = pauli(Pauli::X).kron(&j);
        assert!(!is_local(&n, shape(2, 2), &tol()).unwrap());
        let k2 = elementary(2, 2, 2)
            .unwrap()
            .kron(&delta(4, 3, 4).unwrap())
            .scale_real(1.5 * PI);
        assert!(!is_local(&k2, shape(2, 4), &tol()).unwrap());
        assert!(matches!(
            is_local(&Matrix::identity(4), shape(2, 2), &tol()),
            Err(Error::NotSkewHermitian(_))
        ));
    }

    #[test]
    fn families_of_the_three_hamiltonians() {
        let d12 = delta(2, 1, 2).unwrap();
        let o12 = omega(2, 1, 2).unwrap();
        let (d24, o24) = (delta(4, 2, 4).unwrap(), omega(4, 2, 4).unwrap());
        let h1 = elementary(2, 1, 1).unwrap().kron(&delta(4, 3, 4).unwrap());
        let h2 = &d12.kron(&o24) + &o12.kron(&d24);
        let h3 = &d12.kron(&o24) - &o12.kron(&d24);
        let fam = |h: &Matrix| Family::of(&tensor_expand(h, shape(2, 4), &tol()).unwrap(), &tol());
        assert_eq!(fam(&h1), Family::DiagRotation);
        assert_eq!(fam(&h2), Family::SymmetricMix);
        assert_eq!(fam(&h3), Family::AntisymmetricMix);
        assert_eq!(fam(&d12.kron(&o24)), Family::SymmetricMix);
        assert_eq!(fam(&o12.kron(&o24).scale(Complex64::i())), Family::Other("OO".into()));
    }

    #[test]
    fn swap_inventory_has_three_families() {
        let mut perm = vec![0; 8];
        for v in 0..8usize {
            let (i, j, k) = (v >> 2, (v >> 1) & 1, v & 1);
            perm[k * 4 + i * 2 + j] = i * 4 + j * 2 + k;
        }
        let x = Matrix::permutation(&perm);
        let plan = SplitPlan::new(1, 1, 2, 2).unwrap();
        let mut t = recursive_decompose(&x, shape(2, 4), &SplitStrategy::Explicit(vec![plan]), &tol()).unwrap();
        let inv = inventory(&t, &tol()).unwrap();
        let mut fams = inv.families();
        fams.sort_by_key(|f| f.label());
        assert_eq!(
            fams,
            vec![Family::AntisymmetricMix, Family::DiagRotation, Family::SymmetricMix]
        );
        annotate(&mut t, &tol()).unwrap();
        assert!(t.factors.iter().all(|f| f.locality.is_some()));
    }

    #[test]
    fn local_input_has_empty_inventory() {
        for seed in 0..5 {
            let x = random_unitary(2, seed).kron(&random_unitary(3, seed + 100));
            let t = recursive_decompose(&x, shape(2, 3), &SplitStrategy::Balanced, &tol()).unwrap();
            assert!(t.residual() < 1e-9);
            assert!(inventory(&t, &tol()).unwrap().is_empty());
        }
    }

    #[test]
    fn torus_of_first_step_is_diagonal_diagonal() {
        let t = recursive_decompose(&random_unitary(6, 1), shape(2, 3), &SplitStrategy::Balanced, &tol()).unwrap();
        let torus = t.root[1].leaves();
        assert!(!torus.is_empty());
        for f in torus {
            let c = tensor_expand(&f.generator(), shape(2, 3), &tol()).unwrap();
            assert!(c.terms.iter().all(|t| t.left.kind == E && t.right.kind == E));
        }
    }

    #[test]
    fn identity_tree_has_empty_inventory() {
        let t = recursive_decompose(&Matrix::identity(6), shape(2, 3), &SplitStrategy::Balanced, &tol()).unwrap();
        assert!(inventory(&t, &tol()).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn round_trip_of_three_terms(
            picks in prop::collection::vec((0usize..9, 0usize..16, -3.0f64..3.0), 3),
        ) {
            let (l1, l2) = (BasisLabel::all(3), BasisLabel::all(4));
            let mut h = Matrix::zeros(12, 12);
            for &(a, b, c) in &picks {
                let prod = l1[a].matrix(3).kron(&l2[b].matrix(4));
                // real coefficients on antisymmetric products, imaginary on symmetric
                let anti = prod.is_skew(0.0);
                let z = if anti { Complex64::new(c, 0.0) } else { Complex64::new(0.0, c) };
                h = &h + &prod.scale(z);
            }
            let got = tensor_expand(&h, shape(3, 4), &tol()).unwrap();
            prop_assert!(got.reassemble().distance(&h) < 1e-12);
            let norm: f64 = got.terms.iter().map(|t| t.coefficient.norm_sqr() * t.left.norm_sqr() * t.right.norm_sqr()).sum();
            prop_assert!((norm - h.frobenius_norm().powi(2)).abs() < 1e-10);
        }

        #[test]
        fn local_witnesses(seed in any::<u64>(), cross in 1e-6f64..1.0) {
            let a = crate::sample::random_unitary(3, seed);
            let herm = &a + &a.adjoint();
            let gen = herm.scale(Complex64::i()).kron(&Matrix::identity(2));
            prop_assert!(is_local(&gen, shape(3, 2), &tol()).unwrap());
            let extra = delta(3, 1, 2).unwrap().kron(&omega(2, 1, 2).unwrap()).scale_real(cross);
            prop_assert!(!is_local(&(&gen + &extra), shape(3, 2), &tol()).unwrap());
        }
    }
}
