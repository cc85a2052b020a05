//! Minimal compressed-sparse-row matrix.

use rayon::prelude::*;
use std::io::Write;

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut counts = vec![0usize; rows + 1];
        for &(r, c, _) in triplets {
            debug_assert!(r < rows && c < cols);
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut by_row = vec![(0u32, T::zero()); triplets.len()];
        for &(r, c, v) in triplets {
            by_row[next[r]] = (c as u32, v);
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        for r in 0..rows {
            let seg = &mut by_row[counts[r]..counts[r + 1]];
            seg.sort_unstable_by_key(|e| e.0);
            let mut k = 0;
            while k < seg.len() {
                let col = seg[k].0;
                let mut acc = T::zero();
                while k < seg.len() && seg[k].0 == col {
                    acc += seg[k].1;
                    k += 1;
                }
                indices.push(col);
                values.push(acc);
            }
            indptr.push(indices.len());
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(rows: usize, cols: usize, dense: &[T]) -> Self {
        let mut trip = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = dense[r * cols + c];
                if !v.is_zero() {
                    trip.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows, cols, &trip)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let (idx, val) = self.row(r);
        match idx.binary_search(&(c as u32)) {
            Ok(k) => val[k],
            Err(_) => T::zero(),
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(r, out)| {
            let (idx, val) = self.row(r);
            *out = idx.iter().zip(val).map(|(&c, &v)| v * x[c as usize]).sum();
        });
    }

    /// `y += alpha A x`.
    pub fn matvec_add(&self, alpha: T, x: &[T], y: &mut [T]) {
        y.par_iter_mut().enumerate().with_min_len(256).for_each(|(r, out)| {
            let (idx, val) = self.row(r);
            let s: T = idx.iter().zip(val).map(|(&c, &v)| v * x[c as usize]).sum();
            *out += alpha * s;
        });
    }

    pub fn transpose(&self) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                trip.push((c as usize, r, v));
            }
        }
        Self::from_triplets(self.cols, self.rows, &trip)
    }

    /// Sparse product `self * other` (row-wise Gustavson accumulation).
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let n = other.cols;
        let rows: Vec<(Vec<u32>, Vec<T>)> = (0..self.rows)
            .into_par_iter()
            .map_init(
                || (vec![T::zero(); n], vec![false; n]),
                |(acc, seen), r| {
                    let mut cols = Vec::new();
                    let (ia, va) = self.row(r);
                    for (&k, &a) in ia.iter().zip(va) {
                        let (ib, vb) = other.row(k as usize);
                        for (&c, &b) in ib.iter().zip(vb) {
                            let c = c as usize;
                            if !seen[c] {
                                seen[c] = true;
                                cols.push(c as u32);
                            }
                            acc[c] += a * b;
                        }
                    }
                    cols.sort_unstable();
                    let vals = cols
                        .iter()
                        .map(|&c| {
                            let c = c as usize;
                            seen[c] = false;
                            std::mem::replace(&mut acc[c], T::zero())
                        })
                        .collect();
                    (cols, vals)
                },
            )
            .collect();
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (c, v) in rows {
            indices.extend(c);
            values.extend(v);
            indptr.push(indices.len());
        }
        Self {
            rows: self.rows,
            cols: n,
            indptr,
            indices,
            values,
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            values: self.values.iter().map(|&v| v * s).collect(),
            ..self.clone()
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|r| self.get(r, r)).collect()
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.rows * self.cols];
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                d[r * self.cols + c as usize] = v;
            }
        }
        d
    }

    /// Largest `|A_ij - A_ji|` relative to the largest `|A_ij|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        let mut scale = T::zero();
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                scale = scale.max(v.abs());
                worst = worst.max((v - self.get(c as usize, r)).abs());
            }
        }
        if scale.is_zero() {
            T::zero()
        } else {
            worst / scale
        }
    }

    /// Appends entries in Matrix Market coordinate form with 1-based offsets.
    pub(crate) fn write_entries<W: Write>(&self, out: &mut W, row_off: usize, col_off: usize) -> std::io::Result<()> {
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                writeln!(out, "{} {} {:.17e}", r + row_off + 1, c as usize + col_off + 1, v.as_f64())?;
            }
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub(crate) fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
