//! Cosine–sine splitting of a real orthogonal matrix along an `r + q` block
//! structure (`r ≥ q`):
//!
//! ```text
//! X = diag(K11, K12) · [[P, Q], [−Qᵀ, C]] · diag(K21, K22)
//! ```
//!
//! The torus couples lower index `i` with upper index `pairing[i]`:
//! `P` carries `C_i` at `(p_i, p_i)` and ones elsewhere on its diagonal, and
//! `Q` carries `S_i` at `(p_i, i)`. With the default pairing `p_i = i` this is
//! `P = diag(C, 1)`, `Q = [S; 0]`.
//!
//! `K11` comes from the eigenvectors of `X11·X11ᵀ`. Each remaining block
//! row is read off from whichever of `X11`, `X12` carries the larger
//! weight in that row, and the rows that are left are completed
//! orthonormally. Signs are then moved between blocks until every `K` has
//! determinant `+1`.

use crate::linalg::{clusters, det_real, jacobi_eigh, orthonormalize_rows, polar_real, Matrix, Tolerance};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BlockKak {
    pub k11: Matrix,
    pub k12: Matrix,
    pub k21: Matrix,
    pub k22: Matrix,
    /// Cosines, one per lower index.
    pub c: Vec<f64>,
    /// Sines, one per lower index.
    pub s: Vec<f64>,
    /// Upper index coupled to each lower index.
    pub pairing: Vec<usize>,
    pub r: usize,
    pub q: usize,
}

impl BlockKak {
    pub fn size(&self) -> usize {
        self.r + self.q
    }

    /// Rotation angles `θ_i = atan2(S_i, C_i)`.
    pub fn theta(&self) -> Vec<f64> {
        self.s.iter().zip(&self.c).map(|(s, c)| s.atan2(*c)).collect()
    }

    pub fn p_block(&self) -> Matrix {
        let mut p = Matrix::identity(self.r);
        for (i, &pi) in self.pairing.iter().enumerate() {
            p[(pi, pi)] = self.c[i].into();
        }
        p
    }

    pub fn q_block(&self) -> Matrix {
        let mut m = Matrix::zeros(self.r, self.q);
        for (i, &pi) in self.pairing.iter().enumerate() {
            m[(pi, i)] = self.s[i].into();
        }
        m
    }

    /// `[[P, Q], [−Qᵀ, C]]`.
    pub fn torus(&self) -> Matrix {
        let mut t = Matrix::identity(self.size());
        for (i, &pi) in self.pairing.iter().enumerate() {
            let l = self.r + i;
            t[(pi, pi)] = self.c[i].into();
            t[(l, l)] = self.c[i].into();
            t[(pi, l)] = self.s[i].into();
            t[(l, pi)] = (-self.s[i]).into();
        }
        t
    }

    /// `Σ θ_i·Δ_{p_i, r+i}`; its exponential is [`Self::torus`].
    pub fn generator(&self) -> Matrix {
        let n = self.size();
        let mut g = Matrix::zeros(n, n);
        for (i, (&pi, th)) in self.pairing.iter().zip(self.theta()).enumerate() {
            g[(pi, self.r + i)] = th.into();
            g[(self.r + i, pi)] = (-th).into();
        }
        g
    }

    pub fn left(&self) -> Matrix {
        Matrix::block_diag(&[&self.k11, &self.k12])
    }

    pub fn right(&self) -> Matrix {
        Matrix::block_diag(&[&self.k21, &self.k22])
    }

    pub fn assemble(&self) -> Matrix {
        &(&self.left() * &self.torus()) * &self.right()
    }

    fn dets(&self) -> [f64; 4] {
        [
            det_real(&self.k11),
            det_real(&self.k12),
            det_real(&self.k21),
            det_real(&self.k22),
        ]
    }
}

/// [`bdi_decompose_paired`] with the default pairing `p_i = i`.
pub fn bdi_decompose(xt: &Matrix, r: usize, q: usize, tol: &Tolerance) -> Result<BlockKak> {
    let pairing: Vec<usize> = (0..q).collect();
    bdi_decompose_paired(xt, r, q, &pairing, tol)
}

pub fn bdi_decompose_paired(xt: &Matrix, r: usize, q: usize, pairing: &[usize], tol: &Tolerance) -> Result<BlockKak> {
    tol.validate()?;
    let size = xt.rows();
    if !xt.is_square() || r < q || q == 0 || r + q != size || pairing.len() != q {
        return Err(Error::BadSplit { r, q, size });
    }
    let mut seen = vec![false; r];
    for &p in pairing {
        if p >= r || seen[p] {
            return Err(Error::BadSplit { r, q, size });
        }
        seen[p] = true;
    }
    let imag = xt.im().frobenius_norm();
    let defect = xt.unitarity_defect().max(imag);
    if defect > tol.orthogonality {
        return Err(Error::NotOrthogonal(defect));
    }
    let x = xt.re();

    let mut kak = standard_form(&x, r, q, tol)?;
    apply_pairing(&mut kak, pairing, &seen);
    fix_signs(&mut kak);

    let residual = kak.assemble().distance(&x);
    if residual > tol.reconstruction {
        return Err(Error::SignReconciliationFailure(residual));
    }
    Ok(kak)
}

fn row_vec(m: &Matrix, i: usize) -> Vec<f64> {
    m.row(i).iter().map(|z| z.re).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Matrix {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    Matrix::from_fn(n, m, |i, j| rows[i][j].into())
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
    }
}

/// Fills `rows[i]` for every `i` in `missing` so that all rows are
/// orthonormal. Guides whose component orthogonal to the rows already
/// present exceeds `zero` fix the direction; the rest are completed from
/// coordinate vectors.
fn complete_rows(rows: &mut [Vec<f64>], known: &[usize], missing: &[(usize, Vec<f64>)], zero: f64) {
    let dim = rows.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for &i in known {
        let mut v = rows[i].clone();
        project_out(&mut v, &basis);
        let nv = norm(&v);
        rows[i] = scaled(&v, 1.0 / nv);
        basis.push(rows[i].clone());
    }
    let mut order: Vec<&(usize, Vec<f64>)> = missing.iter().collect();
    order.sort_by(|a, b| norm(&b.1).total_cmp(&norm(&a.1)));
    let mut deficient = Vec::new();
    for (i, guide) in order {
        let mut v = guide.clone();
        project_out(&mut v, &basis);
        let nv = norm(&v);
        if nv > zero {
            rows[*i] = scaled(&v, 1.0 / nv);
            basis.push(rows[*i].clone());
        } else {
            deficient.push(*i);
        }
    }
    let mut next = 0;
    for i in deficient {
        loop {
            let mut v = vec![0.0; dim];
            v[next] = 1.0;
            next += 1;
            project_out(&mut v, &basis);
            let nv = norm(&v);
            if nv > 0.5 {
                rows[i] = scaled(&v, 1.0 / nv);
                basis.push(rows[i].clone());
                break;
            }
        }
    }
}

/// Block factorization with pairing `p_i = i`, before any sign adjustment.
fn standard_form(x: &Matrix, r: usize, q: usize, tol: &Tolerance) -> Result<BlockKak> {
    let x11 = x.block(0, 0, r, r);
    let x12 = x.block(0, r, r, q);
    let x21 = x.block(r, 0, q, r);
    let x22 = x.block(r, r, q, q);

    let gram = &x11 * &x11.transpose();
    let gram = (&gram + &gram.transpose()).scale_real(0.5);
    let eig = jacobi_eigh(&gram, tol)?;
    // the q smallest eigenvalues belong to the coupled positions; ties keep
    // their index order so degenerate inputs stay put
    let mut ascending = Vec::with_capacity(r);
    for range in clusters(&eig.values, tol.cluster).into_iter().rev() {
        ascending.extend(range);
    }
    let mut cols: Vec<usize> = ascending[..q].to_vec();
    let mut rest: Vec<usize> = ascending[q..].to_vec();
    rest.sort_unstable();
    cols.extend(rest);
    let all: Vec<usize> = (0..r).collect();
    let k11 = eig.vectors.select(&all, &cols);

    let y11 = &k11.transpose() * &x11;
    let y12 = &k11.transpose() * &x12;

    let mut c = vec![1.0; q];
    let mut s = vec![0.0; q];
    let mut a_rows = vec![vec![0.0; r]; r];
    let mut b_rows = vec![vec![0.0; q]; q];
    let (mut a_known, mut a_missing) = (Vec::new(), Vec::new());
    let (mut b_known, mut b_missing) = (Vec::new(), Vec::new());
    let mut cosine_led = vec![true; q];
    for t in 0..r {
        let u = row_vec(&y11, t);
        let nu = norm(&u);
        if t >= q {
            a_rows[t] = scaled(&u, 1.0 / nu);
            a_known.push(t);
            continue;
        }
        let v = row_vec(&y12, t);
        let nv = norm(&v);
        let h = nu.hypot(nv);
        c[t] = nu / h;
        s[t] = nv / h;
        if nu >= nv {
            a_rows[t] = scaled(&u, 1.0 / nu);
            a_known.push(t);
            b_missing.push((t, v));
        } else {
            cosine_led[t] = false;
            b_rows[t] = scaled(&v, 1.0 / nv);
            b_known.push(t);
            a_missing.push((t, u));
        }
    }
    complete_rows(&mut a_rows, &a_known, &a_missing, tol.zero);
    complete_rows(&mut b_rows, &b_known, &b_missing, tol.zero);
    let k21 = rows_to_matrix(&a_rows);
    let k22 = rows_to_matrix(&b_rows);

    // K12 columns from X22·K22ᵀ = K12·C or X21·K21ᵀ = −K12·[S 0]
    let mut k12 = Matrix::zeros(q, q);
    for t in 0..q {
        let col: Vec<f64> = if cosine_led[t] {
            (0..q)
                .map(|i| (0..q).map(|j| x22[(i, j)].re * b_rows[t][j]).sum::<f64>() / c[t])
                .collect()
        } else {
            (0..q)
                .map(|i| -(0..r).map(|j| x21[(i, j)].re * a_rows[t][j]).sum::<f64>() / s[t])
                .collect()
        };
        for (i, v) in col.into_iter().enumerate() {
            k12[(i, t)] = v.into();
        }
    }

    Ok(BlockKak {
        k11,
        k12: polar_real(&k12, tol)?,
        k21: orthonormalize_rows(&k21, tol)?,
        k22: orthonormalize_rows(&k22, tol)?,
        c,
        s,
        pairing: (0..q).collect(),
        r,
        q,
    })
}

/// Relabels upper positions so that lower index `i` couples with `pairing[i]`.
fn apply_pairing(kak: &mut BlockKak, pairing: &[usize], paired: &[bool]) {
    let r = kak.r;
    let mut target: Vec<usize> = pairing.to_vec();
    target.extend((0..r).filter(|&p| !paired[p]));
    let mut k11 = Matrix::zeros(r, r);
    let mut k21 = Matrix::zeros(r, r);
    for (t, &dst) in target.iter().enumerate() {
        for i in 0..r {
            k11[(i, dst)] = kak.k11[(i, t)];
            k21[(dst, i)] = kak.k21[(t, i)];
        }
    }
    kak.k11 = k11;
    kak.k21 = k21;
    kak.pairing = pairing.to_vec();
}

#[derive(Debug, Clone, Copy)]
enum Move {
    /// Column `p_i` of K11 and row `i` of K22; `C_i → −C_i`.
    CosineUpper(usize),
    /// Column `i` of K12 and row `p_i` of K21; `C_i → −C_i`.
    CosineLower(usize),
    /// Column `u` of K11 and row `u` of K21 at an uncoupled `u`; no torus change.
    Free(usize),
    /// Column `p_i` of K11 and row `p_i` of K21; `S_i → −S_i`.
    Sine(usize),
}

impl Move {
    fn pattern(self) -> [bool; 4] {
        match self {
            Move::CosineUpper(_) => [true, false, false, true],
            Move::CosineLower(_) => [false, true, true, false],
            Move::Free(_) | Move::Sine(_) => [true, false, true, false],
        }
    }

    fn apply(self, kak: &mut BlockKak) {
        let (r, q) = (kak.r, kak.q);
        let neg_col = |m: &mut Matrix, j: usize, n: usize| (0..n).for_each(|i| m[(i, j)] = -m[(i, j)]);
        let neg_row = |m: &mut Matrix, i: usize, n: usize| (0..n).for_each(|j| m[(i, j)] = -m[(i, j)]);
        match self {
            Move::CosineUpper(i) => {
                neg_col(&mut kak.k11, kak.pairing[i], r);
                neg_row(&mut kak.k22, i, q);
                kak.c[i] = -kak.c[i];
            }
            Move::CosineLower(i) => {
                neg_col(&mut kak.k12, i, q);
                neg_row(&mut kak.k21, kak.pairing[i], r);
                kak.c[i] = -kak.c[i];
            }
            Move::Free(u) => {
                neg_col(&mut kak.k11, u, r);
                neg_row(&mut kak.k21, u, r);
            }
            Move::Sine(i) => {
                let p = kak.pairing[i];
                neg_col(&mut kak.k11, p, r);
                neg_row(&mut kak.k21, p, r);
                kak.s[i] = -kak.s[i];
            }
        }
    }
}

/// Sign moves leave the product unchanged. Picks the smallest combination
/// that makes all four determinants positive (or, for an improper input,
/// leaves a single reflection in the earliest block), resorting to a
/// negative sine only when the other moves cannot reach the target.
fn fix_signs(kak: &mut BlockKak) {
    let negative = kak.dets().map(|d| d < 0.0);
    let odd = negative.iter().filter(|&&b| b).count() % 2 == 1;
    let targets: Vec<[bool; 4]> = if odd {
        (0..4).map(|k| std::array::from_fn(|j| j == k)).collect()
    } else {
        vec![[false; 4]]
    };

    let near_zero = |v: &[f64]| {
        (0..v.len())
            .min_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap_or(0)
    };
    let cos_idx = near_zero(&kak.c);
    let mut moves = vec![Move::CosineUpper(cos_idx), Move::CosineLower(cos_idx)];
    let uncoupled = (0..kak.r).find(|p| !kak.pairing.contains(p));
    match uncoupled {
        Some(u) => moves.push(Move::Free(u)),
        None => moves.push(Move::Sine(near_zero(&kak.s))),
    }

    let mut best: Option<((usize, bool, u32), u32)> = None;
    for mask in 0u32..(1 << moves.len()) {
        let chosen = || moves.iter().enumerate().filter(move |(k, _)| mask & (1 << k) != 0);
        let mut state = negative;
        for (_, m) in chosen() {
            for (st, flip) in state.iter_mut().zip(m.pattern()) {
                *st ^= flip;
            }
        }
        let Some(rank) = targets.iter().position(|t| *t == state) else {
            continue;
        };
        // target priority first, then keeping S ≥ 0, then fewer moves
        let sine_used = chosen().any(|(_, m)| matches!(m, Move::Sine(_)));
        let key = (rank, sine_used, mask.count_ones());
        if best.is_none_or(|(b, _)| key < b) {
            best = Some((key, mask));
        }
    }
    let mask = best.map_or(0, |(_, m)| m);
    for (k, m) in moves.iter().enumerate() {
        if mask & (1 << k) != 0 {
            m.apply(kak);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::sample::random_special_orthogonal;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn check(x: &Matrix, k: &BlockKak, bound: f64) {
        assert!(
            k.assemble().distance(x) < bound,
            "residual {}",
            k.assemble().distance(x)
        );
        for (name, b) in [("k11", &k.k11), ("k12", &k.k12), ("k21", &k.k21), ("k22", &k.k22)] {
            assert!(b.is_orthogonal(1e-10), "{name} not orthogonal");
        }
        for (c, s) in k.c.iter().zip(&k.s) {
            assert!((c * c + s * s - 1.0).abs() < 1e-10);
        }
        assert!(k.torus().is_orthogonal(1e-12));
    }

    /// Conjugated swap of three qubits in block-standard coordinates.
    fn swap_frame() -> Matrix {
        Matrix::permutation(&[0, 4, 7, 3, 6, 2, 1, 5])
    }

    #[test]
    fn identity_gives_identity_blocks() {
        let k = bdi_decompose(&Matrix::identity(5), 3, 2, &tol()).unwrap();
        assert_eq!(k.k11, Matrix::identity(3));
        assert_eq!(k.k12, Matrix::identity(2));
        assert_eq!(k.k21, Matrix::identity(3));
        assert_eq!(k.k22, Matrix::identity(2));
        assert_eq!(k.c, vec![1.0, 1.0]);
        assert_eq!(k.s, vec![0.0, 0.0]);
    }

    #[test]
    fn swap_frame_is_exact() {
        let x = swap_frame();
        let k = bdi_decompose(&x, 4, 4, &tol()).unwrap();
        assert_eq!(k.assemble(), x);
        for b in [&k.k11, &k.k12, &k.k21, &k.k22] {
            assert!(b.is_integer());
            assert_eq!(det_real(b), 1.0);
        }
        let mut ones = k.c.iter().chain(&k.s).filter(|v| v.abs() == 1.0).count();
        ones += k.c.iter().chain(&k.s).filter(|v| **v == 0.0).count();
        assert_eq!(ones, 8);
    }

    #[test]
    fn improper_input_keeps_one_reflection_in_k11() {
        let mut x = random_special_orthogonal(5, 8);
        for j in 0..5 {
            x[(0, j)] = -x[(0, j)];
        }
        let k = bdi_decompose(&x, 3, 2, &tol()).unwrap();
        check(&x, &k, 1e-12);
        let d = k.dets();
        assert!(d[0] < 0.0 && d[1] > 0.0 && d[2] > 0.0 && d[3] > 0.0);
    }

    #[test]
    fn block_diagonal_and_antidiagonal_inputs() {
        let a = random_special_orthogonal(3, 1);
        let b = random_special_orthogonal(3, 2);
        let x = Matrix::block_diag(&[&a, &b]);
        let k = bdi_decompose(&x, 3, 3, &tol()).unwrap();
        check(&x, &k, 1e-12);
        assert!(k.s.iter().all(|s| s.abs() < 1e-12));

        let mut y = Matrix::zeros(6, 6);
        y.set_block(0, 3, &a);
        y.set_block(3, 0, &b.scale_real(-1.0));
        let k = bdi_decompose(&y, 3, 3, &tol()).unwrap();
        check(&y, &k, 1e-12);
        assert!(k.c.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn repeated_angles() {
        // diag(K)·torus(θ, θ, φ)·diag(K') with a repeated angle
        let kak = BlockKak {
            k11: random_special_orthogonal(4, 3),
            k12: random_special_orthogonal(3, 4),
            k21: random_special_orthogonal(4, 5),
            k22: random_special_orthogonal(3, 6),
            c: vec![0.6, 0.6, 0.0],
            s: vec![0.8, 0.8, 1.0],
            pairing: vec![0, 1, 2],
            r: 4,
            q: 3,
        };
        let x = kak.assemble();
        let k = bdi_decompose(&x, 4, 3, &tol()).unwrap();
        check(&x, &k, 1e-11);
        let mut got: Vec<f64> = k.s.iter().map(|s| s.abs()).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - 0.8).abs() < 1e-10 && (got[2] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn pairing_places_the_rotations() {
        let x = random_special_orthogonal(7, 9);
        let k = bdi_decompose_paired(&x, 4, 3, &[3, 0, 2], &tol()).unwrap();
        check(&x, &k, 1e-11);
        assert!(k.torus().distance(&expm(&k.generator())) < 1e-12);
        let t = k.torus();
        assert_eq!(t[(1, 1)].re, 1.0);
        assert_eq!(t[(3, 4)].re, k.s[0]);
    }

    #[test]
    fn so3_matches_euler_oracle() {
        for seed in 0..20 {
            let x = random_special_orthogonal(3, seed);
            let k = bdi_decompose(&x, 2, 1, &tol()).unwrap();
            check(&x, &k, 1e-12);
            // the lower-right entry is untouched by the planar rotations
            assert!((k.c[0].abs() - x[(2, 2)].re.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let x = Matrix::identity(4);
        assert!(matches!(bdi_decompose(&x, 1, 3, &tol()), Err(Error::BadSplit { .. })));
        assert!(matches!(bdi_decompose(&x, 2, 1, &tol()), Err(Error::BadSplit { .. })));
        assert!(matches!(
            bdi_decompose_paired(&x, 2, 2, &[0, 0], &tol()),
            Err(Error::BadSplit { .. })
        ));
        assert!(matches!(
            bdi_decompose(&x.scale_real(2.0), 2, 2, &tol()),
            Err(Error::NotOrthogonal(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_orthogonal_round_trip(
            (r, q) in prop::sample::select(vec![(2usize, 2usize), (3, 2), (4, 4), (5, 3), (3, 1)]),
            seed in any::<u64>(),
        ) {
            let x = random_special_orthogonal(r + q, seed);
            let k = bdi_decompose(&x, r, q, &tol()).unwrap();
            prop_assert!(k.assemble().distance(&x) < 1e-10);
            for b in [&k.k11, &k.k12, &k.k21, &k.k22] {
                prop_assert!(b.is_orthogonal(1e-10));
                prop_assert!((det_real(b) - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn reassembled_output_decomposes_again(seed in any::<u64>()) {
            let x = random_special_orthogonal(7, seed);
            let k = bdi_decompose(&x, 4, 3, &tol()).unwrap();
            let again = bdi_decompose(&k.assemble(), 4, 3, &tol()).unwrap();
            prop_assert!(again.assemble().distance(&x) < 1e-10);
        }
    }
}
