//! Dense factorizations and the solver interface shared with the
//! hierarchical solver.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::perm::Perm;
use faer::{Mat, MatMut, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// A factorized square system that can be solved with many right-hand
/// sides, with either the matrix or its (unconjugated) transpose.
pub trait LinearSolver: Send + Sync {
    fn dim(&self) -> usize;

    /// Overwrites `rhs` with `A^{-1} rhs`.
    fn solve_in_place(&self, rhs: MatMut<'_, Complex64>);

    /// Overwrites `rhs` with `A^{-T} rhs`.
    fn solve_transpose_in_place(&self, rhs: MatMut<'_, Complex64>);

    fn solve(&self, rhs: MatRef<'_, Complex64>) -> Mat<Complex64> {
        let mut x = rhs.to_owned();
        self.solve_in_place(x.as_mut());
        x
    }

    fn solve_transpose(&self, rhs: MatRef<'_, Complex64>) -> Mat<Complex64> {
        let mut x = rhs.to_owned();
        self.solve_transpose_in_place(x.as_mut());
        x
    }

    fn solve_vec(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let x = self.solve(column(rhs).as_ref());
        x.col(0).iter().copied().collect()
    }
}

/// `N x 1` matrix holding `v`.
pub fn column(v: &[Complex64]) -> Mat<Complex64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// LU factorization with partial pivoting, computed in place so that only
/// one `N x N` buffer is alive.
pub struct DenseLu {
    lu: Mat<Complex64>,
    perm: Perm<usize>,
}

impl DenseLu {
    /// Factorizes `a`, consuming it. Fails on non-finite input or a zero
    /// pivot.
    pub fn new(mut a: Mat<Complex64>) -> Result<Self> {
        let (m, n) = a.shape();
        if m != n {
            return Err(Error::Dimension(format!("LU needs a square matrix, got {m} x {n}")));
        }
        for j in 0..n {
            if a.col(j).iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Numerical("matrix has non-finite entries".into()));
            }
        }
        let par = faer::get_global_parallelism();
        let mut fwd = vec![0usize; n];
        let mut bwd = vec![0usize; n];
        let mut mem = MemBuffer::new(factor::lu_in_place_scratch::<usize, Complex64>(n, n, par, Default::default()));
        factor::lu_in_place(a.as_mut(), &mut fwd, &mut bwd, par, MemStack::new(&mut mem), Default::default());
        let mut top = 0.0f64;
        let mut bottom = f64::INFINITY;
        for i in 0..n {
            let p = a[(i, i)].norm();
            top = top.max(p);
            bottom = bottom.min(p);
        }
        if n > 0 && !(bottom > top * f64::EPSILON * n as f64) {
            return Err(Error::Numerical(format!(
                "matrix is numerically singular (pivot ratio {:e})",
                bottom / top
            )));
        }
        let perm = Perm::new_checked(fwd.into_boxed_slice(), bwd.into_boxed_slice(), n);
        Ok(DenseLu { lu: a, perm })
    }
}

impl LinearSolver for DenseLu {
    fn dim(&self) -> usize {
        self.lu.nrows()
    }

    fn solve_in_place(&self, rhs: MatMut<'_, Complex64>) {
        let par = faer::get_global_parallelism();
        let n = self.dim();
        let mut mem = MemBuffer::new(solve::solve_in_place_scratch::<usize, Complex64>(n, rhs.ncols(), par));
        solve::solve_in_place(self.lu.as_ref(), self.lu.as_ref(), self.perm.as_ref(), rhs, par, MemStack::new(&mut mem));
    }

    fn solve_transpose_in_place(&self, rhs: MatMut<'_, Complex64>) {
        let par = faer::get_global_parallelism();
        let n = self.dim();
        let mut mem = MemBuffer::new(solve::solve_transpose_in_place_scratch::<usize, Complex64>(n, rhs.ncols(), par));
        solve::solve_transpose_in_place(
            self.lu.as_ref(),
            self.lu.as_ref(),
            self.perm.as_ref(),
            rhs,
            par,
            MemStack::new(&mut mem),
        );
    }
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(a: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.ncols() {
        for z in a.col(j).iter() {
            acc += z.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
