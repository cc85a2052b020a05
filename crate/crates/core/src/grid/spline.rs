//! Tensor-product natural cubic spline interpolation and image warping.
//!
//! The interpolant is stored in cubic B-spline form. Along an axis with
//! samples `f_0..f_{n-1}` the coefficients `c_{-1}..c_n` satisfy
//! `(c_{i-1} + 4 c_i + c_{i+1}) / 6 = f_i` plus `s''(0) = s''(n-1) = 0`.
//! The natural end conditions collapse to `c_0 = f_0`, `c_{n-1} = f_{n-1}`
//! and `c_{-1} = 2 c_0 - c_1`, `c_n = 2 c_{n-1} - c_{n-2}`, leaving a
//! tridiagonal system on the interior coefficients.

use rayon::prelude::*;

use super::field::{BacktraceMap, ScalarField};
use crate::error::Result;
use crate::scalar::Real;

/// Solves the natural-spline coefficient problem for one line of samples.
/// `out` receives `n + 2` coefficients (index 0 holds `c_{-1}`).
fn natural_coefficients<T: Real>(f: &[T], out: &mut [T], scratch: &mut Vec<T>) {
    let n = f.len();
    debug_assert!(n >= 2);
    debug_assert_eq!(out.len(), n + 2);
    let c = &mut out[1..=n];
    c[0] = f[0];
    c[n - 1] = f[n - 1];
    if n > 2 {
        // Thomas algorithm on rows i = 1..n-2 of c_{i-1} + 4 c_i + c_{i+1} = 6 f_i.
        let m = n - 2;
        let six = T::lit(6.0);
        let four = T::lit(4.0);
        scratch.clear();
        scratch.resize(m, T::zero());
        let mut rhs: Vec<T> = (1..=m).map(|i| six * f[i]).collect();
        rhs[0] -= c[0];
        rhs[m - 1] -= c[n - 1];
        // forward sweep, unit off-diagonals
        let mut denom = four;
        scratch[0] = T::one() / denom;
        rhs[0] /= denom;
        for i in 1..m {
            denom = four - scratch[i - 1];
            scratch[i] = T::one() / denom;
            rhs[i] = (rhs[i] - rhs[i - 1]) / denom;
        }
        for i in (0..m - 1).rev() {
            rhs[i] = rhs[i] - scratch[i] * rhs[i + 1];
        }
        c[1..=m].copy_from_slice(&rhs);
    }
    let two = T::lit(2.0);
    out[0] = two * out[1] - out[2];
    out[n + 1] = two * out[n] - out[n - 1];
}

/// Cubic B-spline weights for fractional offset `t` in `[0, 1]`.
#[inline]
fn bspline_weights<T: Real>(t: T) -> [T; 4] {
    let one = T::one();
    let sixth = T::lit(1.0 / 6.0);
    let s = one - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [
        sixth * s * s * s,
        sixth * (T::lit(3.0) * t3 - T::lit(6.0) * t2 + T::lit(4.0)),
        sixth * (T::lit(-3.0) * t3 + T::lit(3.0) * t2 + T::lit(3.0) * t + one),
        sixth * t3,
    ]
}

/// Natural bicubic spline through every pixel of a field.
#[derive(Clone, Debug)]
pub struct CubicSpline2d<T> {
    width: usize,
    height: usize,
    // (width + 2) x (height + 2) B-spline coefficients, row-major.
    coef: Vec<T>,
}

impl<T: Real> CubicSpline2d<T> {
    pub fn new(f: &ScalarField<T>) -> Self {
        let (w, h) = f.dims();
        let cw = w + 2;
        let ch = h + 2;

        // Along x: h rows of w+2 coefficients.
        let mut rows = vec![T::zero(); cw * h];
        rows.par_chunks_mut(cw).enumerate().for_each_init(Vec::new, |scratch, (y, out)| {
            natural_coefficients(f.row(y), out, scratch);
        });

        // Along y for each of the w+2 coefficient columns.
        let mut coef = vec![T::zero(); cw * ch];
        let cols: Vec<Vec<T>> = (0..cw)
            .into_par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(col, scratch), x| {
                    col.clear();
                    col.extend((0..h).map(|y| rows[y * cw + x]));
                    let mut out = vec![T::zero(); ch];
                    natural_coefficients(col, &mut out, scratch);
                    out
                },
            )
            .collect();
        for (x, col) in cols.iter().enumerate() {
            for (y, &c) in col.iter().enumerate() {
                coef[y * cw + x] = c;
            }
        }
        Self {
            width: w,
            height: h,
            coef,
        }
    }

    /// Evaluates the spline at `(x, y)`, clamped to the grid rectangle.
    pub fn eval(&self, x: T, y: T) -> T {
        let (i, tx) = self.locate(x, self.width);
        let (j, ty) = self.locate(y, self.height);
        let wx = bspline_weights(tx);
        let wy = bspline_weights(ty);
        let cw = self.width + 2;
        // cell [i, i+1] uses coefficients c_{i-1}..c_{i+2}, stored at offset +1.
        let mut acc = T::zero();
        for (b, &wyb) in wy.iter().enumerate() {
            let row = &self.coef[(j + b) * cw + i..(j + b) * cw + i + 4];
            let s: T = row.iter().zip(&wx).map(|(&c, &w)| c * w).sum();
            acc += wyb * s;
        }
        acc
    }

    fn locate(&self, x: T, n: usize) -> (usize, T) {
        let x = x.max(T::zero()).min(T::from_usize_lossy(n - 1));
        let i = x.floor().to_usize().unwrap_or(0).min(n - 2);
        (i, x - T::from_usize_lossy(i))
    }
}

/// Resamples `f` at the foot points of `m`: `out(i, j) = s(m.x(i,j), m.y(i,j))`
/// with `s` the natural bicubic spline through `f`.
pub fn warp<T: Real>(f: &ScalarField<T>, m: &BacktraceMap<T>) -> Result<ScalarField<T>> {
    let (w, h) = f.dims();
    if m.dims() != (w, h) {
        return Err(crate::error::Error::DimensionMismatch {
            expected: (w, h),
            found: m.dims(),
        });
    }
    if is_identity(m) {
        return Ok(f.clone());
    }
    let spline = CubicSpline2d::new(f);
    let mut out = vec![T::zero(); w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(j, row)| {
        let base = j * w;
        for (i, o) in row.iter_mut().enumerate() {
            *o = spline.eval(m.x()[base + i], m.y()[base + i]);
        }
    });
    Ok(ScalarField::from_parts(w, h, f.spacing(), out))
}

fn is_identity<T: Real>(m: &BacktraceMap<T>) -> bool {
    let (w, _) = m.dims();
    m.x().iter().zip(m.y()).enumerate().all(|(k, (&x, &y))| {
        x == T::from_usize_lossy(k % w) && y == T::from_usize_lossy(k / w)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(w: usize, h: usize, seed: u64) -> ScalarField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(w, h, |_, _| rng.gen::<f64>()).unwrap()
    }

    fn shifted_map(w: usize, h: usize, dx: f64, dy: f64) -> BacktraceMap<f64> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for j in 0..h {
            for i in 0..w {
                x.push(i as f64 + dx);
                y.push(j as f64 + dy);
            }
        }
        BacktraceMap::new(w, h, x, y).unwrap()
    }

    #[test]
    fn identity_map_is_identity() {
        let f = random_field(13, 9, 1);
        let out = warp(&f, &BacktraceMap::identity(13, 9).unwrap()).unwrap();
        for (a, b) in f.values().iter().zip(out.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_shift_reproduces_samples() {
        let f = random_field(20, 10, 2);
        let out = warp(&f, &shifted_map(20, 10, 3.0, 0.0)).unwrap();
        for j in 0..10 {
            for i in 0..17 {
                assert!((out.get(i, j) - f.get(i + 3, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn half_pixel_shift_of_ramp_is_exact() {
        let f = ScalarField::from_fn(16, 12, |x, y| 2.0 * x as f64 - 0.5 * y as f64 + 1.0).unwrap();
        let out = warp(&f, &shifted_map(16, 12, 0.5, 0.5)).unwrap();
        for j in 0..11 {
            for i in 0..15 {
                let want = 2.0 * (i as f64 + 0.5) - 0.5 * (j as f64 + 0.5) + 1.0;
                assert!((out.get(i, j) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn natural_end_conditions_hold() {
        // Second difference of coefficients equals s'' at a knot.
        let f: Vec<f64> = vec![0.3, 1.7, -0.2, 0.9, 2.5, 1.1];
        let mut out = vec![0.0; 8];
        natural_coefficients(&f, &mut out, &mut Vec::new());
        assert!((out[0] - 2.0 * out[1] + out[2]).abs() < 1e-13);
        assert!((out[5] - 2.0 * out[6] + out[7]).abs() < 1e-13);
        for i in 0..6 {
            let s = (out[i] + 4.0 * out[i + 1] + out[i + 2]) / 6.0;
            assert!((s - f[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn overshoot_stays_bounded() {
        let f = ScalarField::from_fn(16, 16, |x, y| if (x / 3 + y / 5) % 2 == 0 { 0.0 } else { 1.0 }).unwrap();
        let m = shifted_map(16, 16, 0.37, -0.61);
        let out = warp(&f, &m).unwrap();
        assert!(out.is_finite());
        assert!(out.min() >= -0.25 && out.max() <= 1.25);
    }
}
