//! Full recursive factorization.
//!
//! The input unitary is split by [`ai_decompose`] into `K1·A·K2`. Each
//! orthogonal factor is then refined level by level: a bipartite block of
//! shape `(b1, b2)` is reordered into the frame `(G1, G4, G2, G3)` of its
//! split, cut once by a cosine–sine step whose rotations pair indices as in
//! `a′`, and the two block-diagonal pieces are each cut again along
//! `G1|G4` and `G2|G3` with rotations in `a″`. That gives seven factors
//! `K″ A″ K″ A′ K″ A″ K″`; the `K″` factors act on the four groups
//! separately, with inherited shapes `(r1,r2)`, `(q1,q2)`, `(r1,q2)`,
//! `(q1,r2)`, and are refined in turn.
//!
//! Terminal cases: size 1 is dropped, size 2 becomes a single planar
//! rotation, a `2×2` block is split into its two commuting `SO(3)`-type
//! components and each is written as `L·N·L`, and unipartite blocks take
//! a plain cosine–sine step with `r = ⌈len/2⌉`.
//!
//! All factors are expressed in the original tensor basis. Leaves are
//! one-parameter subgroups with analytically known generators.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::ai::{ai_decompose, AiTriple};
use crate::bases::{
    bipartite_spans, cartan_a_dprime, cartan_a_prime, s1_basis, s2_basis, BipartiteShape, SplitPlan, SubspaceBasis,
};
use crate::bdi::{bdi_decompose, bdi_decompose_paired, BlockKak};
use crate::linalg::{Matrix, Tolerance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorKind {
    AiK,
    AiA,
    BdiK,
    BdiA,
    EulerL,
    EulerN,
    So4S1,
    So4S2,
    TerminalSo2,
}

impl FactorKind {
    pub fn label(self) -> &'static str {
        match self {
            FactorKind::AiK => "AI-K",
            FactorKind::AiA => "AI-A",
            FactorKind::BdiK => "BDI-K",
            FactorKind::BdiA => "BDI-A",
            FactorKind::EulerL => "Euler-L",
            FactorKind::EulerN => "Euler-N",
            FactorKind::So4S1 => "SO4-s1",
            FactorKind::So4S2 => "SO4-s2",
            FactorKind::TerminalSo2 => "terminal-SO2",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        [
            FactorKind::AiK,
            FactorKind::AiA,
            FactorKind::BdiK,
            FactorKind::BdiA,
            FactorKind::EulerL,
            FactorKind::EulerN,
            FactorKind::So4S1,
            FactorKind::So4S2,
            FactorKind::TerminalSo2,
        ]
        .into_iter()
        .find(|k| k.label() == label)
    }

    pub fn is_torus(self) -> bool {
        matches!(self, FactorKind::AiA | FactorKind::BdiA)
    }
}

impl fmt::Display for FactorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Locality {
    Local,
    Entangling,
}

/// One exponential factor `exp(G)` acting on the coordinates `support` of
/// an `n`-dimensional space (identity elsewhere).
#[derive(Debug, Clone)]
pub struct Factor {
    pub kind: FactorKind,
    pub level: usize,
    pub n: usize,
    pub support: Vec<usize>,
    /// `exp(local_generator)` on the support.
    pub local_matrix: Matrix,
    pub local_generator: Matrix,
    /// Rotation angle or phase carried by the factor.
    pub angle: f64,
    pub locality: Option<Locality>,
}

impl Factor {
    /// Full `n×n` matrix in the tensor basis.
    pub fn matrix(&self) -> Matrix {
        self.local_matrix.embed(self.n, &self.support)
    }

    /// Full `n×n` skew-Hermitian generator.
    pub fn generator(&self) -> Matrix {
        self.local_generator.embed_zero(self.n, &self.support)
    }

    /// `m ← m·matrix()`, touching only the support columns.
    pub fn apply_right(&self, m: &mut Matrix) {
        let k = self.support.len();
        for i in 0..m.rows() {
            let row: Vec<Complex64> = self.support.iter().map(|&c| m[(i, c)]).collect();
            for (b, &col) in self.support.iter().enumerate() {
                m[(i, col)] = (0..k).map(|a| row[a] * self.local_matrix[(a, b)]).sum();
            }
        }
    }

    /// `f ⊗ 1` (`subsystem = 0`) or `1 ⊗ f` (`subsystem = 1`) for a factor
    /// of one subsystem.
    fn lift(&self, shape: BipartiteShape, subsystem: usize) -> Self {
        let (id, support) = lift_support(&self.support, shape, subsystem);
        let wrap = |m: &Matrix| if subsystem == 0 { m.kron(&id) } else { id.kron(m) };
        Factor {
            n: shape.n(),
            support,
            local_matrix: wrap(&self.local_matrix),
            local_generator: wrap(&self.local_generator),
            ..self.clone()
        }
    }

    fn rotation(kind: FactorKind, level: usize, n: usize, a: usize, b: usize, c: f64, s: f64) -> Self {
        let theta = s.atan2(c);
        Factor {
            kind,
            level,
            n,
            support: vec![a, b],
            local_matrix: Matrix::from_real(2, 2, &[c, s, -s, c]),
            local_generator: Matrix::from_real(2, 2, &[0.0, theta, -theta, 0.0]),
            angle: theta,
            locality: None,
        }
    }

    fn phase(level: usize, n: usize, j: usize, z: Complex64) -> Self {
        let phi = z.arg();
        Factor {
            kind: FactorKind::AiA,
            level,
            n,
            support: vec![j],
            local_matrix: Matrix::diag(&[z]),
            local_generator: Matrix::diag(&[Complex64::new(0.0, phi)]),
            angle: phi,
            locality: None,
        }
    }
}

fn lift_support(support: &[usize], shape: BipartiteShape, subsystem: usize) -> (Matrix, Vec<usize>) {
    let (d1, d2) = (shape.d1, shape.d2);
    if subsystem == 0 {
        let out = support.iter().flat_map(|&a| (0..d2).map(move |k| a * d2 + k)).collect();
        (Matrix::identity(d2), out)
    } else {
        let out = (0..d1).flat_map(|i| support.iter().map(move |&a| i * d2 + a)).collect();
        (Matrix::identity(d1), out)
    }
}

/// What a group node stands for; used by the structural checks.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupRole {
    /// A whole orthogonal factor of the first step.
    AiFactor,
    /// The diagonal torus of the first step.
    AiTorus { shape: BipartiteShape },
    /// Torus of the first cut of a bipartite block.
    APrime { shape: BipartiteShape, split: SplitPlan },
    /// Torus of the second cut of a bipartite block.
    ADoublePrime { shape: BipartiteShape, split: SplitPlan },
    /// Block-diagonal factor over the four groups of a split.
    KDoublePrime { shape: BipartiteShape, split: SplitPlan },
    /// Recursion into one group with its inherited shape.
    Block { shape: BipartiteShape },
    /// Torus of a unipartite cut, coupling `upper[i]` with `r + i`.
    UnipartiteTorus { r: usize, q: usize, upper: Vec<usize> },
    /// Block-diagonal factor of a unipartite cut.
    UnipartiteK { r: usize, q: usize },
    /// One of the two commuting components of a `2×2` block.
    So4Component,
    /// A group of a product input's factor, acting on one subsystem only.
    Local { subsystem: usize },
}

#[derive(Debug, Clone)]
pub struct Group {
    pub kind: FactorKind,
    pub level: usize,
    pub role: GroupRole,
    /// Global coordinates in the local tensor order of the block.
    pub support: Vec<usize>,
    pub children: Vec<Node>,
}

#[derive(Debug, Clone)]
pub enum Node {
    Leaf(Factor),
    Group(Group),
}

impl Node {
    pub fn kind(&self) -> FactorKind {
        match self {
            Node::Leaf(f) => f.kind,
            Node::Group(g) => g.kind,
        }
    }

    pub fn level(&self) -> usize {
        match self {
            Node::Leaf(f) => f.level,
            Node::Group(g) => g.level,
        }
    }

    pub fn leaves(&self) -> Vec<&Factor> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a Factor>) {
        match self {
            Node::Leaf(f) => out.push(f),
            Node::Group(g) => g.children.iter().for_each(|c| c.collect(out)),
        }
    }

    /// Product of the leaves as an `n×n` matrix.
    pub fn matrix(&self, n: usize) -> Matrix {
        let mut m = Matrix::identity(n);
        for f in self.leaves() {
            f.apply_right(&mut m);
        }
        m
    }

    /// Sum of leaf generators; equals the logarithm of [`Node::matrix`]
    /// when the leaves commute, as they do inside every torus group.
    pub fn generator_sum(&self, n: usize) -> Matrix {
        let mut g = Matrix::zeros(n, n);
        for f in self.leaves() {
            g = &g + &f.generator();
        }
        g
    }

    /// For torus groups: distance of the generator from the matching Cartan
    /// span (including any mass outside the group's support).
    pub fn membership_residual(&self, n: usize) -> Option<f64> {
        let Node::Group(g) = self else { return None };
        let full = self.generator_sum(n);
        let local = full.select(&g.support, &g.support);
        let outside = (full.frobenius_norm().powi(2) - local.frobenius_norm().powi(2))
            .max(0.0)
            .sqrt();
        let inside = match &g.role {
            GroupRole::AiTorus { shape } => bipartite_spans(*shape).2.projection_residual(&local),
            GroupRole::APrime { split, .. } => cartan_a_prime(*split).projection_residual(&local),
            GroupRole::ADoublePrime { split, .. } => cartan_a_dprime(*split).projection_residual(&local),
            GroupRole::UnipartiteTorus { r, upper, .. } => {
                let mut rest = local.clone();
                for (i, &p) in upper.iter().enumerate() {
                    let l = r + i;
                    let t = 0.5 * (local[(p, l)].re - local[(l, p)].re);
                    rest[(p, l)] -= t;
                    rest[(l, p)] += t;
                }
                rest.frobenius_norm()
            }
            _ => return None,
        };
        Some(inside.hypot(outside))
    }

    /// For block-diagonal groups: off-block mass after reordering into the
    /// `(r, q)` frame of the cut that produced them.
    pub fn block_pattern_residual(&self, n: usize) -> Option<f64> {
        let Node::Group(g) = self else { return None };
        let (order, sizes): (Vec<usize>, Vec<usize>) = match &g.role {
            GroupRole::KDoublePrime { split, .. } => (split.frame_order(), vec![split.r(), split.q()]),
            GroupRole::UnipartiteK { r, q } => ((0..r + q).collect(), vec![*r, *q]),
            _ => return None,
        };
        let local = self.matrix(n).select(&g.support, &g.support);
        Some(local.select(&order, &order).off_block_mass(&sizes))
    }

    fn lift(&self, shape: BipartiteShape, subsystem: usize) -> Node {
        match self {
            Node::Leaf(f) => Node::Leaf(f.lift(shape, subsystem)),
            Node::Group(g) => Node::Group(Group {
                kind: g.kind,
                level: g.level,
                role: GroupRole::Local { subsystem },
                support: lift_support(&g.support, shape, subsystem).1,
                children: g.children.iter().map(|c| c.lift(shape, subsystem)).collect(),
            }),
        }
    }

    pub fn groups(&self) -> Vec<&Group> {
        let mut out = Vec::new();
        self.collect_groups(&mut out);
        out
    }

    fn collect_groups<'a>(&'a self, out: &mut Vec<&'a Group>) {
        if let Node::Group(g) = self {
            out.push(g);
            g.children.iter().for_each(|c| c.collect_groups(out));
        }
    }
}

/// How each bipartite block is split.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SplitStrategy {
    /// `r_i = ⌈d_i/2⌉` everywhere.
    #[default]
    Balanced,
    /// One plan per level (level 1 first); a plan that does not fit the
    /// block at hand, or a level past the end, falls back to balanced.
    Explicit(Vec<SplitPlan>),
}

impl SplitStrategy {
    pub fn plan_for(&self, level: usize, shape: BipartiteShape) -> Result<SplitPlan> {
        if let SplitStrategy::Explicit(plans) = self {
            if let Some(p) = level.checked_sub(1).and_then(|i| plans.get(i)) {
                if p.fits(shape) {
                    return Ok(*p);
                }
            }
        }
        SplitPlan::balanced(shape)
    }

    pub fn label(&self) -> String {
        match self {
            SplitStrategy::Balanced => "balanced".to_string(),
            SplitStrategy::Explicit(plans) => {
                let parts: Vec<String> = plans
                    .iter()
                    .map(|p| format!("{},{},{},{}", p.r1, p.q1, p.r2, p.q2))
                    .collect();
                format!("explicit {}", parts.join(" "))
            }
        }
    }
}

/// Block sizes `(r, q)` for a unipartite cut of dimension `d`. Explicit
/// plans only address bipartite blocks, so every strategy gives the
/// balanced choice here.
pub fn choose_split(d: usize, _strategy: &SplitStrategy) -> Result<(usize, usize)> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let r = d.div_ceil(2);
    Ok((r, d - r))
}

/// Unit quaternion `w + x·E1 + y·E2 + z·E3` of a `4×4` matrix in the span
/// of `1` and the given basis.
fn quaternion(f: &Matrix, basis: &SubspaceBasis) -> [f64; 4] {
    let mut q = [f.trace().re / 4.0, 0.0, 0.0, 0.0];
    for (k, e) in basis.elements.iter().enumerate() {
        q[k + 1] = f.inner(e).re / 4.0;
    }
    q
}

fn from_quaternion(q: [f64; 4], basis: &SubspaceBasis) -> Matrix {
    let mut m = Matrix::identity(4).scale_real(q[0]);
    for (k, e) in basis.elements.iter().enumerate() {
        m = &m + &e.scale_real(q[k + 1]);
    }
    m
}

/// Splits `K ∈ SO(4)` on a `2×2` block as `K = F1·F2 = F2·F1` with `F1` in
/// the group of the first basis family and `F2` in that of the second.
/// Since `F1 = a0 + Σ a_i E_i`, `F2 = b0 + Σ b_j F_j` and the products
/// `E_i F_j` are orthogonal of norm² 4, the overlaps `⟨E_i F_j, K⟩/4`
/// form the rank-one matrix `a·bᵀ`.
pub fn so4_split(k: &Matrix, tol: &Tolerance) -> Result<(Matrix, Matrix)> {
    if k.rows() != 4 || k.cols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            rows: k.rows(),
            cols: k.cols(),
        });
    }
    let mut e = vec![Matrix::identity(4)];
    e.extend(s1_basis().elements);
    let mut f = vec![Matrix::identity(4)];
    f.extend(s2_basis().elements);
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = k.inner(&(&e[i] * &f[j])).re / 4.0;
        }
    }
    let (mut best, mut norm) = (0, -1.0);
    for (i, row) in m.iter().enumerate() {
        let nr = row.iter().map(|v| v * v).sum::<f64>();
        if nr > norm {
            (best, norm) = (i, nr);
        }
    }
    let nb = norm.sqrt();
    let mut b: [f64; 4] = std::array::from_fn(|j| m[best][j] / nb);
    let mut a: [f64; 4] = std::array::from_fn(|i| (0..4).map(|j| m[i][j] * b[j]).sum());
    if a[0] < 0.0 {
        a = a.map(|v| -v);
        b = b.map(|v| -v);
    }
    let mut defect = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            defect = defect.max((m[i][j] - a[i] * b[j]).abs());
        }
    }
    let f1 = from_quaternion(a, &s1_basis());
    let f2 = from_quaternion(b, &s2_basis());
    let residual = (&f1 * &f2).distance(k);
    if defect > tol.reconstruction || residual > tol.reconstruction {
        return Err(Error::NotInSpan(defect.max(residual)));
    }
    Ok((f1, f2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    S1,
    S2,
}

impl Which {
    fn basis(self) -> SubspaceBasis {
        match self {
            Which::S1 => s1_basis(),
            Which::S2 => s2_basis(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EulerFactors {
    pub l1: Matrix,
    pub n: Matrix,
    pub l2: Matrix,
    pub alpha1: f64,
    pub beta: f64,
    pub alpha2: f64,
    pub which: Which,
}

impl EulerFactors {
    pub fn product(&self) -> Matrix {
        &(&self.l1 * &self.n) * &self.l2
    }
}

/// `exp(θ·E) = cos θ + sin θ·E` for `E² = −1`.
fn exp_unit(theta: f64, e: &Matrix) -> Matrix {
    &Matrix::identity(4).scale_real(theta.cos()) + &e.scale_real(theta.sin())
}

/// `F = exp(α1·E1)·exp(β·E2)·exp(α2·E1)`. Writing `F = w + x·E1 + y·E2 + z·E3`
/// this reads `w + x·E1 = cos β·e^{(α1+α2)E1}` and
/// `y + z·E1 = sin β·e^{(α1−α2)E1}`.
pub fn euler_so3(f: &Matrix, which: Which, tol: &Tolerance) -> Result<EulerFactors> {
    if f.rows() != 4 || f.cols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            rows: f.rows(),
            cols: f.cols(),
        });
    }
    let basis = which.basis();
    let [w, x, y, z] = quaternion(f, &basis);
    let residual = from_quaternion([w, x, y, z], &basis).distance(f);
    let unit = (w * w + x * x + y * y + z * z - 1.0).abs();
    if residual > tol.reconstruction || unit > tol.reconstruction {
        return Err(Error::NotInSubgroup(residual.max(unit)));
    }
    let cb = w.hypot(x);
    let sb = y.hypot(z);
    let beta = sb.atan2(cb);
    let (alpha1, alpha2) = if sb <= tol.zero {
        (x.atan2(w), 0.0)
    } else if cb <= tol.zero {
        (z.atan2(y), 0.0)
    } else {
        let sigma = x.atan2(w);
        let delta = z.atan2(y);
        (wrap((sigma + delta) / 2.0), wrap((sigma - delta) / 2.0))
    };
    let (e1, e2) = (&basis.elements[0], &basis.elements[1]);
    Ok(EulerFactors {
        l1: exp_unit(alpha1, e1),
        n: exp_unit(beta, e2),
        l2: exp_unit(alpha2, e1),
        alpha1,
        beta,
        alpha2,
        which,
    })
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

#[derive(Debug, Clone)]
pub struct FactorTree {
    pub input: Matrix,
    pub shape: BipartiteShape,
    pub strategy: SplitStrategy,
    /// `[K1, A, K2]` of the first step, each refined.
    pub root: Vec<Node>,
    /// Leaves in left-to-right order.
    pub factors: Vec<Factor>,
}

impl FactorTree {
    pub fn n(&self) -> usize {
        self.shape.n()
    }

    pub fn product(&self) -> Matrix {
        let mut m = Matrix::identity(self.n());
        for f in &self.factors {
            f.apply_right(&mut m);
        }
        m
    }

    pub fn residual(&self) -> f64 {
        self.product().distance(&self.input)
    }

    /// The refinement of `K1` (`which = 0`) or `K2` (`which = 1`): the
    /// seven factors of the first bipartite level, or the terminal
    /// factors for small shapes.
    pub fn first_level(&self, which: usize) -> &[Node] {
        let Node::Group(g) = &self.root[if which == 0 { 0 } else { 2 }] else {
            unreachable!("root nodes are groups")
        };
        &g.children
    }

    pub fn groups(&self) -> Vec<&Group> {
        self.root.iter().flat_map(|n| n.groups()).collect()
    }

    /// Largest Cartan-membership residual over all torus groups.
    pub fn max_membership_residual(&self) -> f64 {
        self.all_nodes()
            .iter()
            .filter_map(|n| n.membership_residual(self.n()))
            .fold(0.0, f64::max)
    }

    /// Largest block-pattern residual over all block-diagonal groups.
    pub fn max_block_pattern_residual(&self) -> f64 {
        self.all_nodes()
            .iter()
            .filter_map(|n| n.block_pattern_residual(self.n()))
            .fold(0.0, f64::max)
    }

    fn all_nodes(&self) -> Vec<&Node> {
        fn walk<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
            out.push(n);
            if let Node::Group(g) = n {
                g.children.iter().for_each(|c| walk(c, out));
            }
        }
        let mut out = Vec::new();
        self.root.iter().for_each(|n| walk(n, &mut out));
        out
    }
}

struct Ctx<'a> {
    n: usize,
    strategy: &'a SplitStrategy,
    tol: &'a Tolerance,
}

pub fn recursive_decompose(
    x: &Matrix,
    shape: BipartiteShape,
    strategy: &SplitStrategy,
    tol: &Tolerance,
) -> Result<FactorTree> {
    let root = match split_product(x, shape, tol) {
        Some((u1, u2)) => product_root(&u1, &u2, shape, strategy, tol)?,
        None => generic_root(x, shape, strategy, tol)?,
    };
    let factors: Vec<Factor> = root.iter().flat_map(|r| r.leaves()).cloned().collect();
    let tree = FactorTree {
        input: x.clone(),
        shape,
        strategy: strategy.clone(),
        root,
        factors,
    };
    let residual = tree.residual();
    if residual > tol.reconstruction * (tree.factors.len().max(1) as f64) {
        return Err(Error::ReconstructionFailure(residual));
    }
    Ok(tree)
}

/// `X = U1 ⊗ U2` when the realignment of `X` has rank one.
fn split_product(x: &Matrix, shape: BipartiteShape, tol: &Tolerance) -> Option<(Matrix, Matrix)> {
    let (d1, d2) = (shape.d1, shape.d2);
    if d1 < 2 || d2 < 2 || x.rows() != shape.n() || x.cols() != shape.n() {
        return None;
    }
    let block = |i: usize, k: usize| x.block(i * d2, k * d2, d2, d2);
    let (mut bi, mut bk, mut best) = (0, 0, -1.0);
    for i in 0..d1 {
        for k in 0..d1 {
            let nb = block(i, k).frobenius_norm();
            if nb > best {
                (bi, bk, best) = (i, k, nb);
            }
        }
    }
    let u2 = block(bi, bk).scale_real((d2 as f64).sqrt() / best);
    let u1 = Matrix::from_fn(d1, d1, |i, k| block(i, k).inner(&u2) / d2 as f64);
    let fits = u1.kron(&u2).distance(x) <= tol.reconstruction;
    let unitary = u1.is_unitary(tol.orthogonality) && u2.is_unitary(tol.orthogonality);
    (fits && unitary).then_some((u1, u2))
}

/// Each subsystem factor is decomposed on its own and lifted, so every
/// emitted factor is local.
fn product_root(
    u1: &Matrix,
    u2: &Matrix,
    shape: BipartiteShape,
    strategy: &SplitStrategy,
    tol: &Tolerance,
) -> Result<Vec<Node>> {
    let t1 = recursive_decompose(u1, BipartiteShape { d1: shape.d1, d2: 1 }, strategy, tol)?;
    let t2 = recursive_decompose(u2, BipartiteShape { d1: 1, d2: shape.d2 }, strategy, tol)?;
    let all: Vec<usize> = (0..shape.n()).collect();
    let mut root = Vec::new();
    for pos in 0..3 {
        let mut children = Vec::new();
        for (t, sub) in [(&t1, 0), (&t2, 1)] {
            if let Node::Group(g) = &t.root[pos] {
                children.extend(g.children.iter().map(|c| c.lift(shape, sub)));
            }
        }
        let (kind, role) = if pos == 1 {
            (FactorKind::AiA, GroupRole::AiTorus { shape })
        } else {
            (FactorKind::AiK, GroupRole::AiFactor)
        };
        root.push(Node::Group(Group {
            kind,
            level: 0,
            role,
            support: all.clone(),
            children,
        }));
    }
    Ok(root)
}

fn generic_root(x: &Matrix, shape: BipartiteShape, strategy: &SplitStrategy, tol: &Tolerance) -> Result<Vec<Node>> {
    let n = shape.n();
    let AiTriple { k1, a, k2, .. } = ai_decompose(x, shape, tol)?;
    let ctx = Ctx { n, strategy, tol };
    let all: Vec<usize> = (0..n).collect();

    let k_node = |k: &Matrix| -> Result<Node> {
        Ok(Node::Group(Group {
            kind: FactorKind::AiK,
            level: 0,
            role: GroupRole::AiFactor,
            support: all.clone(),
            children: decompose_block(k, &all, shape, 1, &ctx)?,
        }))
    };
    let phases = (0..n)
        .filter(|&j| a[(j, j)].arg().abs() > tol.zero)
        .map(|j| Node::Leaf(Factor::phase(0, n, j, a[(j, j)])))
        .collect();
    Ok(vec![
        k_node(&k1)?,
        Node::Group(Group {
            kind: FactorKind::AiA,
            level: 0,
            role: GroupRole::AiTorus { shape },
            support: all.clone(),
            children: phases,
        }),
        k_node(&k2)?,
    ])
}

/// Factors whose ordered product is `k` (orthogonal, `det = +1`) placed on
/// the coordinates `support`, read as a bipartite block of `shape`.
fn decompose_block(k: &Matrix, support: &[usize], shape: BipartiteShape, level: usize, ctx: &Ctx) -> Result<Vec<Node>> {
    let size = support.len();
    match size {
        0 | 1 => return Ok(Vec::new()),
        2 => return Ok(planar(k, support, level, ctx)),
        _ => {}
    }
    if shape.d1 == 2 && shape.d2 == 2 {
        return so4_block(k, support, level, ctx);
    }
    if shape.d1 == 1 || shape.d2 == 1 {
        return unipartite_block(k, support, shape, level, ctx);
    }
    bipartite_block(k, support, shape, level, ctx)
}

fn planar(k: &Matrix, support: &[usize], level: usize, ctx: &Ctx) -> Vec<Node> {
    let (c, s) = (k[(0, 0)].re, k[(0, 1)].re);
    if s.atan2(c).abs() <= ctx.tol.zero {
        return Vec::new();
    }
    let mut f = Factor::rotation(FactorKind::TerminalSo2, level, ctx.n, support[0], support[1], c, s);
    f.local_matrix = k.clone();
    vec![Node::Leaf(f)]
}

fn so4_block(k: &Matrix, support: &[usize], level: usize, ctx: &Ctx) -> Result<Vec<Node>> {
    let (f1, f2) = so4_split(k, ctx.tol)?;
    let mut out = Vec::new();
    for (f, which, kind) in [(f1, Which::S1, FactorKind::So4S1), (f2, Which::S2, FactorKind::So4S2)] {
        let e = euler_so3(&f, which, ctx.tol)?;
        let basis = which.basis();
        let mut children = Vec::new();
        for (angle, gen, leaf_kind) in [
            (e.alpha1, &basis.elements[0], FactorKind::EulerL),
            (e.beta, &basis.elements[1], FactorKind::EulerN),
            (e.alpha2, &basis.elements[0], FactorKind::EulerL),
        ] {
            if angle.abs() <= ctx.tol.zero {
                continue;
            }
            children.push(Node::Leaf(Factor {
                kind: leaf_kind,
                level,
                n: ctx.n,
                support: support.to_vec(),
                local_matrix: exp_unit(angle, gen),
                local_generator: gen.scale_real(angle),
                angle,
                locality: None,
            }));
        }
        out.push(Node::Group(Group {
            kind,
            level,
            role: GroupRole::So4Component,
            support: support.to_vec(),
            children,
        }));
    }
    Ok(out)
}

fn torus_leaves(kak: &BlockKak, upper: &[usize], lower: &[usize], level: usize, ctx: &Ctx) -> Vec<Node> {
    (0..kak.q)
        .filter(|&i| kak.s[i].atan2(kak.c[i]).abs() > ctx.tol.zero)
        .map(|i| {
            let a = upper[kak.pairing[i]];
            Node::Leaf(Factor::rotation(
                FactorKind::BdiA,
                level,
                ctx.n,
                a,
                lower[i],
                kak.c[i],
                kak.s[i],
            ))
        })
        .collect()
}

fn unipartite_block(
    k: &Matrix,
    support: &[usize],
    shape: BipartiteShape,
    level: usize,
    ctx: &Ctx,
) -> Result<Vec<Node>> {
    let size = support.len();
    let (r, q) = choose_split(size, ctx.strategy)?;
    let kak = bdi_decompose(k, r, q, ctx.tol)?;
    let (upper, lower) = support.split_at(r);
    let sub = |m: usize| {
        if shape.d1 == 1 {
            BipartiteShape { d1: 1, d2: m }
        } else {
            BipartiteShape { d1: m, d2: 1 }
        }
    };
    let k_group = |a: &Matrix, b: &Matrix| -> Result<Node> {
        let mut children = decompose_block(a, upper, sub(r), level + 1, ctx)?;
        children.extend(decompose_block(b, lower, sub(q), level + 1, ctx)?);
        Ok(Node::Group(Group {
            kind: FactorKind::BdiK,
            level,
            role: GroupRole::UnipartiteK { r, q },
            support: support.to_vec(),
            children,
        }))
    };
    let torus = Node::Group(Group {
        kind: FactorKind::BdiA,
        level,
        role: GroupRole::UnipartiteTorus {
            r,
            q,
            upper: kak.pairing.clone(),
        },
        support: support.to_vec(),
        children: torus_leaves(&kak, upper, lower, level, ctx),
    });
    Ok(vec![k_group(&kak.k11, &kak.k12)?, torus, k_group(&kak.k21, &kak.k22)?])
}

/// Lower frame position `i` (in `G2` then `G3`) to the upper frame position
/// (in `G1` then `G4`) it rotates against.
pub fn prime_pairing(split: SplitPlan) -> Vec<usize> {
    let SplitPlan { r1, q1, r2, q2 } = split;
    let mut out = Vec::with_capacity(split.q());
    for i in 0..r1 * q2 {
        out.push((i / q2) * r2 + i % q2);
    }
    for t in 0..q1 * r2 {
        let (f, l) = (t / r2, t % r2);
        out.push(if l < q2 { r1 * r2 + f * q2 + l } else { f * r2 + l });
    }
    out
}

fn pick(support: &[usize], local: &[usize]) -> Vec<usize> {
    local.iter().map(|&a| support[a]).collect()
}

fn bipartite_block(k: &Matrix, support: &[usize], shape: BipartiteShape, level: usize, ctx: &Ctx) -> Result<Vec<Node>> {
    let split = ctx.strategy.plan_for(level, shape)?;
    let SplitPlan { r1, q1, r2, q2 } = split;
    let [g1, g2, g3, g4] = split.groups().map(|g| pick(support, &g));
    let frame = split.frame_order();
    let (r, q) = (split.r(), split.q());
    let outer = bdi_decompose_paired(&k.select(&frame, &frame), r, q, &prime_pairing(split), ctx.tol)?;
    let framed = pick(support, &frame);
    let a_prime = Node::Group(Group {
        kind: FactorKind::BdiA,
        level,
        role: GroupRole::APrime { shape, split },
        support: support.to_vec(),
        children: torus_leaves(&outer, &framed[..r], &framed[r..], level, ctx),
    });

    // the mixed groups go upper-first with the larger one on top
    let g2_up = r1 * q2 >= q1 * r2;
    let (up, low) = if g2_up { (&g2, &g3) } else { (&g3, &g2) };
    let (n_up, n_low) = (up.len(), low.len());
    let mixed_order: Vec<usize> = if g2_up {
        (0..q).collect()
    } else {
        (r1 * q2..q).chain(0..r1 * q2).collect()
    };
    let inner1 = bdi_decompose(&outer.k11, r1 * r2, q1 * q2, ctx.tol)?;
    let inner2 = bdi_decompose(&outer.k12.select(&mixed_order, &mixed_order), n_up, n_low, ctx.tol)?;
    let inner3 = bdi_decompose(&outer.k21, r1 * r2, q1 * q2, ctx.tol)?;
    let inner4 = bdi_decompose(&outer.k22.select(&mixed_order, &mixed_order), n_up, n_low, ctx.tol)?;

    let (s1, s4) = (BipartiteShape { d1: r1, d2: r2 }, BipartiteShape { d1: q1, d2: q2 });
    let (s2, s3) = (BipartiteShape { d1: r1, d2: q2 }, BipartiteShape { d1: q1, d2: r2 });
    let (s_up, s_low) = if g2_up { (s2, s3) } else { (s3, s2) };
    let k_double = |blocks: [(&Matrix, &Vec<usize>, BipartiteShape); 4]| -> Result<Node> {
        let mut children = Vec::new();
        for (m, set, sub) in blocks {
            children.push(Node::Group(Group {
                kind: FactorKind::BdiK,
                level: level + 1,
                role: GroupRole::Block { shape: sub },
                support: set.clone(),
                children: decompose_block(m, set, sub, level + 1, ctx)?,
            }));
        }
        Ok(Node::Group(Group {
            kind: FactorKind::BdiK,
            level,
            role: GroupRole::KDoublePrime { shape, split },
            support: support.to_vec(),
            children,
        }))
    };
    let a_double = |x: &BlockKak, y: &BlockKak| {
        let mut children = torus_leaves(x, &g1, &g4, level, ctx);
        children.extend(torus_leaves(y, up, low, level, ctx));
        Node::Group(Group {
            kind: FactorKind::BdiA,
            level,
            role: GroupRole::ADoublePrime { shape, split },
            support: support.to_vec(),
            children,
        })
    };

    Ok(vec![
        k_double([
            (&inner1.k11, &g1, s1),
            (&inner1.k12, &g4, s4),
            (&inner2.k11, up, s_up),
            (&inner2.k12, low, s_low),
        ])?,
        a_double(&inner1, &inner2),
        k_double([
            (&inner1.k21, &g1, s1),
            (&inner1.k22, &g4, s4),
            (&inner2.k21, up, s_up),
            (&inner2.k22, low, s_low),
        ])?,
        a_prime,
        k_double([
            (&inner3.k11, &g1, s1),
            (&inner3.k12, &g4, s4),
            (&inner4.k11, up, s_up),
            (&inner4.k12, low, s_low),
        ])?,
        a_double(&inner3, &inner4),
        k_double([
            (&inner3.k21, &g1, s1),
            (&inner3.k22, &g4, s4),
            (&inner4.k21, up, s_up),
            (&inner4.k22, low, s_low),
        ])?,
    ])
}
