//! Bicubic (Catmull-Rom) pyramid resampling.
//!
//! Pyramid convention: pixel `i` on level `l + 1` sits on pixel `2 i` of
//! level `l`, so a level has `ceil(n / 2)` pixels along each axis.

use rayon::prelude::*;

use super::field::{ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Minimum edge length accepted by [`downsample_bicubic`].
pub const MIN_DOWNSAMPLE_DIM: usize = 8;

/// Catmull-Rom kernel, `a = -0.5`.
#[inline]
pub fn cubic_kernel<T: Real>(x: T) -> T {
    let a = T::lit(-0.5);
    let t = x.abs();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    if t <= T::one() {
        ((a + two) * t - (a + three)) * t * t + T::one()
    } else if t < two {
        ((a * t - T::lit(5.0) * a) * t + T::lit(8.0) * a) * t - T::lit(4.0) * a
    } else {
        T::zero()
    }
}

/// Four source taps (edge-replicated indices) and weights for position `x`
/// on an axis of length `n`.
#[derive(Clone, Copy, Debug)]
struct Taps<T> {
    idx: [usize; 4],
    wt: [T; 4],
}

fn taps<T: Real>(x: T, n: usize) -> Taps<T> {
    let base = x.floor();
    let b = base.to_isize().unwrap_or(0);
    let mut idx = [0usize; 4];
    let mut wt = [T::zero(); 4];
    for k in 0..4 {
        let src = b - 1 + k as isize;
        idx[k] = src.clamp(0, n as isize - 1) as usize;
        wt[k] = cubic_kernel(x - (base + T::from_isize(k as isize - 1).unwrap()));
    }
    Taps { idx, wt }
}

/// Separable bicubic resampling of a raw row-major buffer at the given
/// source coordinates along each axis.
fn resample_separable<T: Real>(
    src: &[T],
    width: usize,
    height: usize,
    xs: &[T],
    ys: &[T],
) -> Vec<T> {
    let xt: Vec<Taps<T>> = xs.iter().map(|&x| taps(x, width)).collect();
    let yt: Vec<Taps<T>> = ys.iter().map(|&y| taps(y, height)).collect();
    let ow = xs.len();

    // Horizontal pass: height rows of `ow` samples.
    let mut tmp = vec![T::zero(); ow * height];
    tmp.par_chunks_mut(ow).enumerate().for_each(|(y, out)| {
        let row = &src[y * width..(y + 1) * width];
        for (o, t) in out.iter_mut().zip(&xt) {
            *o = (0..4).map(|k| t.wt[k] * row[t.idx[k]]).sum();
        }
    });

    let mut out = vec![T::zero(); ow * ys.len()];
    out.par_chunks_mut(ow).zip(yt.par_iter()).for_each(|(orow, t)| {
        for (x, o) in orow.iter_mut().enumerate() {
            *o = (0..4).map(|k| t.wt[k] * tmp[t.idx[k] * ow + x]).sum();
        }
    });
    out
}

/// Next-coarser pyramid size along one axis.
#[inline]
pub fn coarse_len(n: usize) -> usize {
    n.div_ceil(2)
}

/// Downsamples by two, evaluating the bicubic interpolant at `(2i, 2j)`.
pub fn downsample_bicubic<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    let (w, h) = f.dims();
    if w < MIN_DOWNSAMPLE_DIM || h < MIN_DOWNSAMPLE_DIM {
        return Err(Error::DimensionTooSmall {
            width: w,
            height: h,
            min: MIN_DOWNSAMPLE_DIM,
        });
    }
    let (ow, oh) = (coarse_len(w), coarse_len(h));
    let xs: Vec<T> = (0..ow).map(|i| T::from_usize_lossy(2 * i)).collect();
    let ys: Vec<T> = (0..oh).map(|j| T::from_usize_lossy(2 * j)).collect();
    let data = resample_separable(f.values(), w, h, &xs, &ys);
    Ok(ScalarField::new(ow, oh, data)?.with_spacing(f.spacing()))
}

/// Upsamples a flow to the next-finer pyramid level.
///
/// The finer grid must satisfy `ceil(target / 2) == current` on both axes.
/// Components are interpolated at `(x / 2, y / 2)` and multiplied by 2 so
/// displacements stay expressed in (finer) pixels.
pub fn upsample_flow_bicubic<T: Real>(
    b: &VectorField<T>,
    target_w: usize,
    target_h: usize,
) -> Result<VectorField<T>> {
    let (w, h) = b.dims();
    if coarse_len(target_w) != w || coarse_len(target_h) != h {
        return Err(Error::AspectMismatch {
            from: (w, h),
            to: (target_w, target_h),
        });
    }
    let half = T::lit(0.5);
    let xs: Vec<T> = (0..target_w).map(|i| half * T::from_usize_lossy(i)).collect();
    let ys: Vec<T> = (0..target_h).map(|j| half * T::from_usize_lossy(j)).collect();
    let scale = T::lit(2.0);
    let v: Vec<T> = resample_separable(b.v(), w, h, &xs, &ys)
        .into_iter()
        .map(|x| x * scale)
        .collect();
    let wc: Vec<T> = resample_separable(b.w(), w, h, &xs, &ys)
        .into_iter()
        .map(|x| x * scale)
        .collect();
    Ok(VectorField::new(target_w, target_h, v, wc)?.with_spacing(b.spacing()))
}

/// Downsamples `levels` times; element 0 is the input.
pub fn build_pyramid<T: Real>(f: &ScalarField<T>, levels: usize) -> Result<Vec<ScalarField<T>>> {
    let mut out = Vec::with_capacity(levels + 1);
    out.push(f.clone());
    for _ in 0..levels {
        let next = downsample_bicubic(out.last().unwrap())?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_interpolates() {
        assert_eq!(cubic_kernel(0.0f64), 1.0);
        assert_eq!(cubic_kernel(1.0f64), 0.0);
        assert_eq!(cubic_kernel(2.0f64), 0.0);
        // partition of unity
        for &x in &[0.1f64, 0.37, 0.5, 0.93] {
            let s: f64 = (-1..3).map(|k| cubic_kernel(x - k as f64)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn downsample_constant() {
        let f = ScalarField::constant(16, 16, 3.5f64).unwrap();
        let d = downsample_bicubic(&f).unwrap();
        assert_eq!(d.dims(), (8, 8));
        assert!(d.values().iter().all(|&v| (v - 3.5).abs() < 1e-14));
    }

    #[test]
    fn downsample_odd_dims_round_up() {
        let f = ScalarField::constant(17, 9, 1.0f64).unwrap();
        assert_eq!(downsample_bicubic(&f).unwrap().dims(), (9, 5));
    }

    #[test]
    fn downsample_ramp_doubles_slope() {
        let f = ScalarField::from_fn(16, 16, |x, _| x as f64).unwrap();
        let d = downsample_bicubic(&f).unwrap();
        for j in 0..8 {
            for i in 0..8 {
                assert!((d.get(i, j) - 2.0 * i as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn downsample_too_small() {
        let f = ScalarField::<f64>::zeros(7, 16).unwrap();
        assert!(matches!(downsample_bicubic(&f), Err(Error::DimensionTooSmall { .. })));
    }

    #[test]
    fn upsample_zero_and_uniform() {
        let z = VectorField::<f64>::zeros(8, 8).unwrap();
        let u = upsample_flow_bicubic(&z, 16, 16).unwrap();
        assert!(u.is_zero());
        assert_eq!(u.dims(), (16, 16));

        // Interior far enough from the zeroed coarse ring reproduces (2, 0).
        let b = VectorField::<f64>::uniform(8, 8, 1.0, 0.0).unwrap();
        let u = upsample_flow_bicubic(&b, 16, 16).unwrap();
        for y in 4..=10 {
            for x in 4..=10 {
                let (v, w) = u.get(x, y);
                assert!((v - 2.0).abs() < 1e-12, "({x},{y}) -> {v}");
                assert_eq!(w, 0.0);
            }
        }
        assert_eq!(u.get(0, 7), (0.0, 0.0));
    }

    #[test]
    fn upsample_rejects_non_adjacent_levels() {
        let b = VectorField::<f64>::zeros(8, 8).unwrap();
        assert!(matches!(
            upsample_flow_bicubic(&b, 18, 16),
            Err(Error::AspectMismatch { .. })
        ));
        assert!(upsample_flow_bicubic(&b, 15, 16).is_ok());
    }
}
