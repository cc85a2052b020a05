//! Interpolation error and conservation diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::scalar::Real;

/// Root-mean-square difference `sqrt(mean((u - u_true)^2))`.
pub fn interpolation_error<T: Real>(u: &ScalarField<T>, u_true: &ScalarField<T>) -> Result<T> {
    interpolation_error_cropped(u, u_true, 0)
}

/// IE restricted to pixels at least `border` pixels away from the edge.
pub fn interpolation_error_cropped<T: Real>(u: &ScalarField<T>, u_true: &ScalarField<T>, border: usize) -> Result<T> {
    u.ensure_same_dims(u_true)?;
    let (w, h) = u.dims();
    if 2 * border >= w || 2 * border >= h {
        return Err(Error::InvalidConfig(format!(
            "border crop {border} leaves no pixels of a {w}x{h} image"
        )));
    }
    let mut sum = T::zero();
    for y in border..h - border {
        let (a, b) = (u.row(y), u_true.row(y));
        for x in border..w - border {
            let d = a[x] - b[x];
            sum += d * d;
        }
    }
    let count = (w - 2 * border) * (h - 2 * border);
    Ok((sum / T::from_usize_lossy(count)).sqrt())
}

/// Anisotropic total variation `h * sum(|u_{i+1,j} - u_ij| + |u_{i,j+1} - u_ij|)`.
pub fn total_variation<T: Real>(u: &ScalarField<T>) -> T {
    let (w, h) = u.dims();
    let mut tv = T::zero();
    for y in 0..h {
        let row = u.row(y);
        for x in 0..w {
            if x + 1 < w {
                tv += (row[x + 1] - row[x]).abs();
            }
            if y + 1 < h {
                tv += (u.get(x, y + 1) - row[x]).abs();
            }
        }
    }
    tv * u.spacing()
}

/// `h^2 * sum(u)`.
pub fn mass<T: Real>(u: &ScalarField<T>) -> T {
    let h = u.spacing();
    u.values().iter().copied().sum::<T>() * h * h
}

/// Summary of one interpolated frame against its reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ie: f64,
    /// `|mass(u) - mass(reference)| / |mass(reference)|`.
    pub mass_drift: f64,
    /// `TV(u) / TV(reference)`.
    pub tv_ratio: f64,
    /// Largest weak divergence of the flows that produced `u`.
    pub div_residual: f64,
}

impl EvalReport {
    pub fn compute<T: Real>(u: &ScalarField<T>, reference: &ScalarField<T>, border: usize, div_residual: T) -> Result<Self> {
        let ie = interpolation_error_cropped(u, reference, border)?.as_f64();
        let m_ref = mass(reference).as_f64();
        let mass_drift = if m_ref != 0.0 {
            ((mass(u).as_f64() - m_ref) / m_ref).abs()
        } else {
            mass(u).as_f64().abs()
        };
        let tv_ref = total_variation(reference).as_f64();
        let tv_ratio = if tv_ref > 0.0 {
            total_variation(u).as_f64() / tv_ref
        } else {
            total_variation(u).as_f64()
        };
        Ok(Self {
            ie,
            mass_drift,
            tv_ratio,
            div_residual: div_residual.as_f64().abs(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(w: usize, h: usize, seed: u64) -> ScalarField<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(w, h, |_, _| rng.gen_range(-5.0..5.0)).unwrap()
    }

    #[test]
    fn ie_basics() {
        let a = random(9, 7, 1);
        assert_eq!(interpolation_error(&a, &a).unwrap(), 0.0);
        let b = a.map(|v| v + 2.0);
        assert!((interpolation_error(&a, &b).unwrap() - 2.0).abs() < 1e-12);
        let small = ScalarField::<f64>::zeros(4, 4).unwrap();
        assert!(matches!(
            interpolation_error(&a, &small),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ie_crop() {
        let a = ScalarField::<f64>::zeros(10, 10).unwrap();
        let mut b = a.clone();
        b.set(0, 0, 100.0);
        assert_eq!(interpolation_error_cropped(&a, &b, 1).unwrap(), 0.0);
        assert!(interpolation_error_cropped(&a, &b, 5).is_err());
    }

    #[test]
    fn tv_of_constant_and_row_step() {
        assert_eq!(total_variation(&ScalarField::constant(8, 8, 3.0f64).unwrap()), 0.0);
        // Row 3 jumps from 0 to 1 at x0 = 5 on a 12x8 grid: one horizontal
        // unit jump plus vertical jumps to rows 2 and 4 for x = 5..11.
        let (w, x0, row) = (12usize, 5usize, 3usize);
        let u = ScalarField::from_fn(w, 8, |x, y| if y == row && x >= x0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(total_variation(&u), 1.0 + 2.0 * (w - x0) as f64);
    }

    #[test]
    fn tv_matches_double_loop() {
        let u = random(11, 6, 3);
        let mut want = 0.0;
        for y in 0..6 {
            for x in 0..11 {
                if x < 10 {
                    want += (u.get(x + 1, y) - u.get(x, y)).abs();
                }
                if y < 5 {
                    want += (u.get(x, y + 1) - u.get(x, y)).abs();
                }
            }
        }
        assert!((total_variation(&u) - want).abs() < 1e-10);
    }

    #[test]
    fn mass_sums() {
        assert_eq!(mass(&ScalarField::<f64>::zeros(5, 5).unwrap()), 0.0);
        assert_eq!(mass(&ScalarField::constant(6, 4, 1.0f64).unwrap()), 24.0);
        let u = random(7, 5, 4);
        let direct: f64 = u.values().iter().sum();
        assert!((mass(&u) - direct).abs() < 1e-12);
    }
}
