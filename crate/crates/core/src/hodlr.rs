//! Hierarchical off-diagonal low-rank (HODLR) compression and direct solver.
//!
//! The index range is bisected recursively down to `leaf_size`. Each pair of
//! off-diagonal blocks is compressed by adaptive cross approximation with
//! partial pivoting followed by QR/SVD recompression, and stored as
//! `U V^T`. The factorization eliminates one level at a time with the
//! Sherman-Morrison-Woodbury identity, bottom up.

use std::ops::Range;

use faer::linalg::matmul::matmul;
use faer::reborrow::{Reborrow, ReborrowMut};
use faer::{Accum, Mat, MatMut, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{DenseLu, LinearSolver};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Settings for [`HodlrMatrix::compress`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HodlrOptions {
    pub tol: f64,
    pub leaf_size: usize,
}

impl Default for HodlrOptions {
    fn default() -> Self {
        HodlrOptions { tol: 1e-12, leaf_size: 128 }
    }
}

/// Block stored as `u v^T` (plain transpose, no conjugation).
#[derive(Debug, Clone)]
pub struct LowRank {
    pub u: Mat<Complex64>,
    pub v: Mat<Complex64>,
}

impl LowRank {
    fn empty(m: usize, n: usize) -> Self {
        LowRank { u: Mat::zeros(m, 0), v: Mat::zeros(n, 0) }
    }

    pub fn rank(&self) -> usize {
        self.u.ncols()
    }

    /// `dst += u (v^T x)`.
    fn apply_add(&self, x: MatRef<'_, Complex64>, dst: MatMut<'_, Complex64>) {
        if self.rank() == 0 {
            return;
        }
        let t = self.v.transpose() * x;
        matmul(dst, Accum::Add, self.u.as_ref(), t.as_ref(), ONE, Par::Seq);
    }

    fn transposed(&self) -> LowRank {
        LowRank { u: self.v.clone(), v: self.u.clone() }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        dense: Mat<Complex64>,
    },
    Split {
        mid: usize,
        /// block (first half, second half)
        upper: LowRank,
        /// block (second half, first half)
        lower: LowRank,
        children: Box<(Node, Node)>,
    },
}

/// Compressed HODLR representation of a square matrix.
#[derive(Debug, Clone)]
pub struct HodlrMatrix {
    n: usize,
    options: HodlrOptions,
    root: Node,
    dense_fallbacks: usize,
}

struct Compressor<'a, F> {
    entry: &'a F,
    tol: f64,
    leaf_size: usize,
}

impl<F: Fn(usize, usize) -> Complex64 + Sync> Compressor<'_, F> {
    fn node(&self, range: Range<usize>) -> (Node, usize) {
        let size = range.len();
        if size <= self.leaf_size {
            let dense = Mat::from_fn(size, size, |i, j| (self.entry)(range.start + i, range.start + j));
            return (Node::Leaf { dense }, 0);
        }
        let mid = size / 2;
        let first = range.start..range.start + mid;
        let second = range.start + mid..range.end;
        let ((a, fa), ((b, fb), ((upper, fu), (lower, fl)))) = rayon::join(
            || self.node(first.clone()),
            || {
                rayon::join(
                    || self.node(second.clone()),
                    || {
                        rayon::join(
                            || self.block(first.clone(), second.clone()),
                            || self.block(second.clone(), first.clone()),
                        )
                    },
                )
            },
        );
        let fallbacks = fa + fb + fu as usize + fl as usize;
        (Node::Split { mid, upper, lower, children: Box::new((a, b)) }, fallbacks)
    }

    /// Compresses the block `rows x cols`; the flag reports a dense fallback.
    fn block(&self, rows: Range<usize>, cols: Range<usize>) -> (LowRank, bool) {
        let (m, n) = (rows.len(), cols.len());
        let max_rank = m.min(n) / 2;
        match aca(self.entry, rows.clone(), cols.clone(), 0.1 * self.tol, max_rank) {
            Some(lr) => (recompress(lr, self.tol), false),
            None => {
                log::warn!("off-diagonal block {rows:?} x {cols:?} is not low rank; storing it densely");
                let dense = Mat::from_fn(m, n, |i, j| (self.entry)(rows.start + i, cols.start + j));
                (truncated_svd(dense.as_ref(), self.tol), true)
            }
        }
    }
}

/// Adaptive cross approximation with partial pivoting. Returns `None` when
/// the rank exceeds `max_rank`.
fn aca<F: Fn(usize, usize) -> Complex64>(
    entry: &F,
    rows: Range<usize>,
    cols: Range<usize>,
    tol: f64,
    max_rank: usize,
) -> Option<LowRank> {
    let (m, n) = (rows.len(), cols.len());
    let mut us: Vec<Vec<Complex64>> = Vec::new();
    let mut vs: Vec<Vec<Complex64>> = Vec::new();
    let mut used = vec![false; m];
    let mut pivot_row = 0;
    let mut norm2 = 0.0f64;
    let mut misses = 0;
    loop {
        used[pivot_row] = true;
        let mut row: Vec<Complex64> = cols.clone().map(|j| entry(rows.start + pivot_row, j)).collect();
        for (u, v) in us.iter().zip(&vs) {
            let a = u[pivot_row];
            if a != ZERO {
                for (r, b) in row.iter_mut().zip(v) {
                    *r -= a * b;
                }
            }
        }
        let (pivot_col, pmax) = row
            .iter()
            .enumerate()
            .map(|(j, z)| (j, z.norm()))
            .fold((0, 0.0), |best, c| if c.1 > best.1 { c } else { best });
        if !(pmax > tol * 1e-3 * norm2.sqrt()) || pmax == 0.0 {
            // residual row vanishes; look at another row before giving up
            misses += 1;
            match (0..m).find(|&i| !used[i]) {
                Some(i) if misses < 4 => {
                    pivot_row = i;
                    continue;
                }
                _ => break,
            }
        }
        if us.len() >= max_rank {
            return None;
        }
        let inv = 1.0 / row[pivot_col];
        let v: Vec<Complex64> = row.iter().map(|z| z * inv).collect();
        let mut u: Vec<Complex64> = rows.clone().map(|i| entry(i, cols.start + pivot_col)).collect();
        for (uu, vv) in us.iter().zip(&vs) {
            let b = vv[pivot_col];
            if b != ZERO {
                for (x, a) in u.iter_mut().zip(uu) {
                    *x -= a * b;
                }
            }
        }
        let un2: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let mut cross = ZERO;
        for (uu, vv) in us.iter().zip(&vs) {
            let a: Complex64 = uu.iter().zip(&u).map(|(p, q)| p.conj() * q).sum();
            let b: Complex64 = vv.iter().zip(&v).map(|(p, q)| p.conj() * q).sum();
            cross += a * b;
        }
        norm2 = (norm2 + 2.0 * cross.re + un2 * vn2).max(0.0);
        let mut next = None;
        let mut best = -1.0;
        for (i, z) in u.iter().enumerate() {
            if !used[i] && z.norm() > best {
                best = z.norm();
                next = Some(i);
            }
        }
        us.push(u);
        vs.push(v);
        if (un2 * vn2).sqrt() <= tol * norm2.sqrt() {
            break;
        }
        match next {
            Some(i) => pivot_row = i,
            None => break,
        }
    }
    let r = us.len();
    Some(LowRank {
        u: Mat::from_fn(m, r, |i, l| us[l][i]),
        v: Mat::from_fn(n, r, |j, l| vs[l][j]),
    })
}

/// Rank-revealing recompression of `u v^T` to relative tolerance `tol`.
fn recompress(lr: LowRank, tol: f64) -> LowRank {
    let r = lr.rank();
    if r == 0 {
        return lr;
    }
    let (m, n) = (lr.u.nrows(), lr.v.nrows());
    let qu = lr.u.qr();
    let qv = lr.v.qr();
    let (q1, r1) = (qu.compute_thin_Q(), qu.thin_R().to_owned());
    let (q2, r2) = (qv.compute_thin_Q(), qv.thin_R().to_owned());
    let core = &r1 * r2.transpose();
    let Ok(svd) = core.svd() else {
        return LowRank { u: lr.u, v: lr.v };
    };
    let s = svd.S().column_vector();
    let keep = (0..s.nrows()).filter(|&i| s[i].re > tol * s[0].re).count();
    if keep == 0 {
        return LowRank::empty(m, n);
    }
    let x = Mat::from_fn(r1.nrows(), keep, |i, l| svd.U()[(i, l)] * s[l].re);
    let y = Mat::from_fn(r2.nrows(), keep, |i, l| svd.V()[(i, l)].conj());
    LowRank { u: &q1 * &x, v: &q2 * &y }
}

/// Truncated SVD of a dense block as `u v^T`.
fn truncated_svd(a: MatRef<'_, Complex64>, tol: f64) -> LowRank {
    let (m, n) = a.shape();
    let Ok(svd) = a.thin_svd() else {
        return LowRank { u: a.to_owned(), v: Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO }) };
    };
    let s = svd.S().column_vector();
    if s.nrows() == 0 || s[0].re == 0.0 {
        return LowRank::empty(m, n);
    }
    let keep = (0..s.nrows()).filter(|&i| s[i].re > tol * s[0].re).count();
    LowRank {
        u: Mat::from_fn(m, keep, |i, l| svd.U()[(i, l)] * s[l].re),
        v: Mat::from_fn(n, keep, |j, l| svd.V()[(j, l)].conj()),
    }
}

impl HodlrMatrix {
    /// Compresses the `n x n` matrix with entries `entry(i, j)`.
    pub fn compress<F>(entry: F, n: usize, options: HodlrOptions) -> Result<Self>
    where
        F: Fn(usize, usize) -> Complex64 + Sync,
    {
        if !(1e-14..=1e-4).contains(&options.tol) {
            return Err(Error::Invalid(format!("HODLR tolerance must lie in [1e-14, 1e-4], got {}", options.tol)));
        }
        if options.leaf_size < 2 {
            return Err(Error::Invalid("HODLR leaf size must be at least 2".into()));
        }
        if n == 0 {
            return Err(Error::Dimension("empty matrix".into()));
        }
        let c = Compressor { entry: &entry, tol: options.tol, leaf_size: options.leaf_size };
        let (root, dense_fallbacks) = c.node(0..n);
        Ok(HodlrMatrix { n, options, root, dense_fallbacks })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn options(&self) -> HodlrOptions {
        self.options
    }

    /// Number of off-diagonal blocks that could not be compressed and were
    /// stored through a dense SVD instead.
    pub fn dense_fallbacks(&self) -> usize {
        self.dense_fallbacks
    }

    /// Ranks of all off-diagonal blocks as `(level, rows, cols, rank)`.
    pub fn block_ranks(&self) -> Vec<(usize, usize, usize, usize)> {
        fn walk(node: &Node, size: usize, level: usize, out: &mut Vec<(usize, usize, usize, usize)>) {
            if let Node::Split { mid, upper, lower, children } = node {
                out.push((level, *mid, size - mid, upper.rank()));
                out.push((level, size - mid, *mid, lower.rank()));
                walk(&children.0, *mid, level + 1, out);
                walk(&children.1, size - mid, level + 1, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, self.n, 0, &mut out);
        out
    }

    pub fn max_rank(&self) -> usize {
        self.block_ranks().iter().map(|b| b.3).max().unwrap_or(0)
    }

    /// Stored complex numbers, a measure of memory use.
    pub fn storage(&self) -> usize {
        fn walk(node: &Node) -> usize {
            match node {
                Node::Leaf { dense } => dense.nrows() * dense.ncols(),
                Node::Split { upper, lower, children, .. } => {
                    (upper.u.nrows() + upper.v.nrows()) * upper.rank()
                        + (lower.u.nrows() + lower.v.nrows()) * lower.rank()
                        + walk(&children.0)
                        + walk(&children.1)
                }
            }
        }
        walk(&self.root)
    }

    /// `A x` for a block of columns.
    pub fn matvec(&self, x: MatRef<'_, Complex64>) -> Mat<Complex64> {
        fn walk(node: &Node, x: MatRef<'_, Complex64>, mut y: MatMut<'_, Complex64>) {
            match node {
                Node::Leaf { dense } => matmul(y, Accum::Add, dense.as_ref(), x, ONE, Par::Seq),
                Node::Split { mid, upper, lower, children } => {
                    let (x1, x2) = x.split_at_row(*mid);
                    let (mut y1, mut y2) = y.rb_mut().split_at_row_mut(*mid);
                    walk(&children.0, x1, y1.rb_mut());
                    walk(&children.1, x2, y2.rb_mut());
                    upper.apply_add(x2, y1);
                    lower.apply_add(x1, y2);
                }
            }
        }
        assert_eq!(x.nrows(), self.n, "dimension mismatch in HODLR matvec");
        let mut y = Mat::zeros(self.n, x.ncols());
        walk(&self.root, x, y.as_mut());
        y
    }

    /// Compressed representation of `A^T`.
    pub fn transpose(&self) -> HodlrMatrix {
        fn walk(node: &Node) -> Node {
            match node {
                Node::Leaf { dense } => Node::Leaf { dense: dense.transpose().to_owned() },
                Node::Split { mid, upper, lower, children } => Node::Split {
                    mid: *mid,
                    upper: lower.transposed(),
                    lower: upper.transposed(),
                    children: Box::new((walk(&children.0), walk(&children.1))),
                },
            }
        }
        HodlrMatrix { n: self.n, options: self.options, root: walk(&self.root), dense_fallbacks: self.dense_fallbacks }
    }

    /// Hierarchical factorization. Also prepares transpose solves.
    pub fn factorize(self) -> Result<HodlrFactorization> {
        let root = factor_node(&self.root)?;
        Ok(HodlrFactorization { matrix: self, root })
    }
}

enum FactorNode {
    Leaf(DenseLu),
    Split {
        mid: usize,
        children: Box<(FactorNode, FactorNode)>,
        u1: Mat<Complex64>,
        u2: Mat<Complex64>,
        v1: Mat<Complex64>,
        v2: Mat<Complex64>,
        /// `A11^{-1} U1`, `A22^{-1} U2`
        y1: Mat<Complex64>,
        y2: Mat<Complex64>,
        /// `A11^{-T} V2`, `A22^{-T} V1`
        yt1: Mat<Complex64>,
        yt2: Mat<Complex64>,
        /// `I + Z^T D^{-1} W`
        k: Option<DenseLu>,
    },
}

fn factor_node(node: &Node) -> Result<FactorNode> {
    match node {
        Node::Leaf { dense } => Ok(FactorNode::Leaf(DenseLu::new(dense.clone())?)),
        Node::Split { mid, upper, lower, children } => {
            let (a, b) = rayon::join(|| factor_node(&children.0), || factor_node(&children.1));
            let (a, b) = (a?, b?);
            let (u1, v1) = (upper.u.clone(), upper.v.clone());
            let (u2, v2) = (lower.u.clone(), lower.v.clone());
            let (r1, r2) = (u1.ncols(), u2.ncols());
            let y1 = solve_node(&a, u1.as_ref(), false);
            let y2 = solve_node(&b, u2.as_ref(), false);
            let yt1 = solve_node(&a, v2.as_ref(), true);
            let yt2 = solve_node(&b, v1.as_ref(), true);
            let k = if r1 + r2 == 0 {
                None
            } else {
                let mut kmat = Mat::<Complex64>::identity(r1 + r2, r1 + r2);
                if r1 > 0 && r2 > 0 {
                    let top = v1.transpose() * &y2;
                    let bottom = v2.transpose() * &y1;
                    kmat.as_mut().submatrix_mut(0, r1, r1, r2).copy_from(&top);
                    kmat.as_mut().submatrix_mut(r1, 0, r2, r1).copy_from(&bottom);
                }
                Some(DenseLu::new(kmat)?)
            };
            Ok(FactorNode::Split { mid: *mid, children: Box::new((a, b)), u1, u2, v1, v2, y1, y2, yt1, yt2, k })
        }
    }
}

fn solve_node(node: &FactorNode, rhs: MatRef<'_, Complex64>, transpose: bool) -> Mat<Complex64> {
    let mut x = rhs.to_owned();
    if x.ncols() > 0 {
        solve_in_place(node, x.as_mut(), transpose);
    }
    x
}

fn solve_in_place(node: &FactorNode, mut x: MatMut<'_, Complex64>, transpose: bool) {
    match node {
        FactorNode::Leaf(lu) => {
            if transpose {
                lu.solve_transpose_in_place(x)
            } else {
                lu.solve_in_place(x)
            }
        }
        FactorNode::Split { mid, children, u1, u2, v1, v2, y1, y2, yt1, yt2, k } => {
            let (mut x1, mut x2) = x.rb_mut().split_at_row_mut(*mid);
            solve_in_place(&children.0, x1.rb_mut(), transpose);
            solve_in_place(&children.1, x2.rb_mut(), transpose);
            let Some(k) = k else { return };
            let (r1, r2) = (u1.ncols(), u2.ncols());
            let ncols = x1.ncols();
            let mut z = Mat::<Complex64>::zeros(r1 + r2, ncols);
            if transpose {
                // z = W^T x0, x -= D^{-T} Z K^{-T} z
                matmul(z.as_mut().subrows_mut(0, r1), Accum::Replace, u1.transpose(), x1.rb(), ONE, Par::Seq);
                matmul(z.as_mut().subrows_mut(r1, r2), Accum::Replace, u2.transpose(), x2.rb(), ONE, Par::Seq);
                k.solve_transpose_in_place(z.as_mut());
                matmul(x1, Accum::Add, yt1.as_ref(), z.as_ref().subrows(r1, r2), -ONE, Par::Seq);
                matmul(x2, Accum::Add, yt2.as_ref(), z.as_ref().subrows(0, r1), -ONE, Par::Seq);
            } else {
                // z = Z^T x0, x -= D^{-1} W K^{-1} z
                matmul(z.as_mut().subrows_mut(0, r1), Accum::Replace, v1.transpose(), x2.rb(), ONE, Par::Seq);
                matmul(z.as_mut().subrows_mut(r1, r2), Accum::Replace, v2.transpose(), x1.rb(), ONE, Par::Seq);
                k.solve_in_place(z.as_mut());
                matmul(x1, Accum::Add, y1.as_ref(), z.as_ref().subrows(0, r1), -ONE, Par::Seq);
                matmul(x2, Accum::Add, y2.as_ref(), z.as_ref().subrows(r1, r2), -ONE, Par::Seq);
            }
        }
    }
}

/// Factorized HODLR matrix.
pub struct HodlrFactorization {
    matrix: HodlrMatrix,
    root: FactorNode,
}

impl HodlrFactorization {
    pub fn matrix(&self) -> &HodlrMatrix {
        &self.matrix
    }
}

impl LinearSolver for HodlrFactorization {
    fn dim(&self) -> usize {
        self.matrix.n
    }

    fn solve_in_place(&self, rhs: MatMut<'_, Complex64>) {
        assert_eq!(rhs.nrows(), self.matrix.n, "dimension mismatch in HODLR solve");
        solve_in_place(&self.root, rhs, false);
    }

    fn solve_transpose_in_place(&self, rhs: MatMut<'_, Complex64>) {
        assert_eq!(rhs.nrows(), self.matrix.n, "dimension mismatch in HODLR solve");
        solve_in_place(&self.root, rhs, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(leaf: usize) -> HodlrOptions {
        HodlrOptions { tol: 1e-12, leaf_size: leaf }
    }

    #[test]
    fn diagonal_has_rank_zero_blocks() {
        let h = HodlrMatrix::compress(|i, j| if i == j { Complex64::new(2.0 + i as f64, 0.0) } else { ZERO }, 100, opts(8))
            .unwrap();
        assert!(h.block_ranks().iter().all(|b| b.3 == 0));
        let f = h.factorize().unwrap();
        let b = Mat::from_fn(100, 1, |i, _| Complex64::new(i as f64, 1.0));
        let x = f.solve(b.as_ref());
        for i in 0..100 {
            assert!((x[(i, 0)] * (2.0 + i as f64) - b[(i, 0)]).norm() < 1e-13);
        }
    }

    #[test]
    fn rank_one_plus_identity() {
        let u = |i: usize| Complex64::new((i as f64 * 0.1).sin() + 1.5, 0.3);
        let v = |j: usize| Complex64::new(0.01 * j as f64, -0.02);
        let entry = |i: usize, j: usize| u(i) * v(j) + if i == j { ONE } else { ZERO };
        let h = HodlrMatrix::compress(entry, 200, opts(16)).unwrap();
        assert!(h.block_ranks().iter().all(|b| b.3 == 1), "{:?}", h.block_ranks());
        assert_eq!(h.dense_fallbacks(), 0);
    }

    #[test]
    fn rejects_bad_options() {
        assert!(HodlrMatrix::compress(|_, _| ONE, 10, HodlrOptions { tol: 1e-2, leaf_size: 4 }).is_err());
        assert!(HodlrMatrix::compress(|_, _| ONE, 10, HodlrOptions { tol: 1e-8, leaf_size: 1 }).is_err());
    }

    #[test]
    fn full_rank_block_falls_back() {
        // pseudo-random entries have no low-rank structure
        let entry = |i: usize, j: usize| {
            let s = ((i * 7919 + j * 104729) % 1009) as f64 / 1009.0;
            Complex64::new(s - 0.5, 0.0) + if i == j { Complex64::new(20.0, 0.0) } else { ZERO }
        };
        let h = HodlrMatrix::compress(entry, 64, opts(16)).unwrap();
        assert!(h.dense_fallbacks() > 0);
        let x = Mat::from_fn(64, 2, |i, c| Complex64::new(i as f64 + c as f64, 0.5));
        let y = h.matvec(x.as_ref());
        for i in 0..64 {
            let exact: Complex64 = (0..64).map(|j| entry(i, j) * x[(j, 1)]).sum();
            assert!((exact - y[(i, 1)]).norm() < 1e-9 * exact.norm());
        }
    }
}
