//! Geometric V-cycle on the interior P2 node lattice, used as a symmetric
//! positive-definite preconditioner for the velocity Laplacian.
//!
//! Coarse unknowns are the lattice nodes with even full-grid index on both
//! axes; prolongation is bilinear (tensor product of 1D linear
//! interpolation, Dirichlet neighbours contributing zero) and coarse
//! operators are Galerkin products `P^T A P`. Smoothing is one forward
//! Gauss-Seidel sweep before and one backward sweep after the coarse
//! correction, so the cycle is a symmetric operator.

use super::sparse::CsrMatrix;
use crate::scalar::Real;

/// Problems at or below this size are factorized densely.
const COARSE_LIMIT: usize = 400;

#[derive(Clone, Debug)]
struct Level<T> {
    a: CsrMatrix<T>,
    diag: Vec<T>,
    /// Prolongation from the next coarser level (absent on the coarsest).
    p: Option<CsrMatrix<T>>,
    r: Option<CsrMatrix<T>>,
}

#[derive(Clone, Debug)]
pub struct Multigrid<T> {
    levels: Vec<Level<T>>,
    /// Dense Cholesky factor (lower, row-major) of the coarsest operator.
    chol: Vec<T>,
    coarse_n: usize,
}

/// 1D interpolation weights: for each fine interior index the list of
/// `(coarse interior index, weight)`.
fn weights_1d<T: Real>(n_fine: usize) -> (usize, Vec<Vec<(usize, T)>>) {
    let n_coarse = n_fine / 2;
    let half = T::lit(0.5);
    let mut w = Vec::with_capacity(n_fine);
    for k in 0..n_fine {
        // full-grid index of fine interior node k is k + 1
        let full = k + 1;
        let mut list = Vec::with_capacity(2);
        if full % 2 == 0 {
            list.push((full / 2 - 1, T::one()));
        } else {
            let left = (full - 1) / 2; // coarse full index
            let right = left + 1;
            if left >= 1 {
                list.push((left - 1, half));
            }
            if right >= 1 && right <= n_coarse {
                list.push((right - 1, half));
            }
        }
        w.push(list);
    }
    (n_coarse, w)
}

fn prolongation<T: Real>(nx: usize, ny: usize) -> (usize, usize, CsrMatrix<T>) {
    let (cx, wx) = weights_1d::<T>(nx);
    let (cy, wy) = weights_1d::<T>(ny);
    let mut trip = Vec::new();
    for (j, wyj) in wy.iter().enumerate().take(ny) {
        for (i, wxi) in wx.iter().enumerate().take(nx) {
            for &(cj, a) in wyj {
                for &(ci, b) in wxi {
                    trip.push((j * nx + i, cj * cx + ci, a * b));
                }
            }
        }
    }
    (cx, cy, CsrMatrix::from_triplets(nx * ny, cx * cy, &trip))
}

fn cholesky<T: Real>(a: &CsrMatrix<T>) -> Vec<T> {
    let n = a.rows();
    let mut l = a.to_dense();
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        let d = d.max(T::min_positive_value()).sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
        for i in 0..j {
            l[i * n + j] = T::zero();
        }
    }
    l
}

impl<T: Real> Multigrid<T> {
    /// Builds the hierarchy for an SPD matrix on an `nx x ny` lattice.
    pub fn new(a: &CsrMatrix<T>, nx: usize, ny: usize) -> Self {
        assert_eq!(a.rows(), nx * ny);
        let mut levels = Vec::new();
        let mut cur = a.clone();
        let (mut nx, mut ny) = (nx, ny);
        while cur.rows() > COARSE_LIMIT && nx >= 3 && ny >= 3 {
            let (cx, cy, p) = prolongation::<T>(nx, ny);
            let r = p.transpose();
            let coarse = r.matmul(&cur.matmul(&p));
            let diag = cur.diagonal();
            levels.push(Level {
                a: cur,
                diag,
                p: Some(p),
                r: Some(r),
            });
            cur = coarse;
            nx = cx;
            ny = cy;
        }
        let chol = cholesky(&cur);
        let coarse_n = cur.rows();
        let diag = cur.diagonal();
        levels.push(Level {
            a: cur,
            diag,
            p: None,
            r: None,
        });
        Self {
            levels,
            chol,
            coarse_n,
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// `x ~ A^{-1} b` by one V-cycle from a zero initial guess.
    pub fn apply(&self, b: &[T], x: &mut [T]) {
        self.vcycle(0, b, x);
    }

    fn vcycle(&self, lvl: usize, b: &[T], x: &mut [T]) {
        let level = &self.levels[lvl];
        if level.p.is_none() {
            self.coarse_solve(b, x);
            return;
        }
        x.iter_mut().for_each(|v| *v = T::zero());
        gauss_seidel(&level.a, &level.diag, b, x, false);

        let mut res = vec![T::zero(); b.len()];
        level.a.matvec(x, &mut res);
        res.iter_mut().zip(b).for_each(|(r, &bi)| *r = bi - *r);

        let r_op = level.r.as_ref().unwrap();
        let mut rc = vec![T::zero(); r_op.rows()];
        r_op.matvec(&res, &mut rc);
        let mut ec = vec![T::zero(); rc.len()];
        self.vcycle(lvl + 1, &rc, &mut ec);
        level.p.as_ref().unwrap().matvec_add(T::one(), &ec, x);

        gauss_seidel(&level.a, &level.diag, b, x, true);
    }

    fn coarse_solve(&self, b: &[T], x: &mut [T]) {
        let n = self.coarse_n;
        let l = &self.chol;
        x.copy_from_slice(b);
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }
}

fn gauss_seidel<T: Real>(a: &CsrMatrix<T>, diag: &[T], b: &[T], x: &mut [T], backward: bool) {
    let n = a.rows();
    let mut sweep = |r: usize| {
        let (idx, val) = a.row(r);
        let mut s = b[r];
        for (&c, &v) in idx.iter().zip(val) {
            if c as usize != r {
                s -= v * x[c as usize];
            }
        }
        x[r] = s / diag[r];
    };
    if backward {
        (0..n).rev().for_each(&mut sweep);
    } else {
        (0..n).for_each(&mut sweep);
    }
}
