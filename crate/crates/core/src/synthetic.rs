//! Analytic test scenes with known motion.

use crate::error::Result;
use crate::grid::{ScalarField, VectorField};
use crate::scalar::Real;
use crate::stokes::{pressure_l2_error, StokesSolver, TriMesh};

/// Disk of radius `radius` centred at `(cx, cy)` with a smooth edge of
/// width `edge`, intensity `fg` inside and `bg` outside.
pub fn smooth_disk<T: Real>(
    width: usize,
    height: usize,
    (cx, cy): (f64, f64),
    radius: f64,
    edge: f64,
    (fg, bg): (f64, f64),
) -> Result<ScalarField<T>> {
    ScalarField::from_fn(width, height, |x, y| {
        let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
        let s = 0.5 * (1.0 - ((d - radius) / edge).tanh());
        T::lit(bg + (fg - bg) * s)
    })
}

/// Isotropic Gaussian `amp * exp(-|x - c|^2 / (2 sigma^2))`.
pub fn gaussian_blob<T: Real>(width: usize, height: usize, (cx, cy): (f64, f64), sigma: f64, amp: f64) -> Result<ScalarField<T>> {
    ScalarField::from_fn(width, height, |x, y| {
        let r2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
        T::lit(amp * (-r2 / (2.0 * sigma * sigma)).exp())
    })
}

/// Rigid rotation `omega (-(y - c_y), x - c_x)` about the grid centre
/// (boundary ring zeroed as for every flow).
pub fn rotation_field<T: Real>(width: usize, height: usize, omega: f64) -> Result<VectorField<T>> {
    let (cx, cy) = ((width - 1) as f64 / 2.0, (height - 1) as f64 / 2.0);
    VectorField::from_fn(width, height, |x, y| {
        (T::lit(-omega * (y as f64 - cy)), T::lit(omega * (x as f64 - cx)))
    })
}

/// Frames of a disk moving by `shift` pixels along x between `t = 0` and
/// `t = T`, plus the exact mid-frame.
#[derive(Clone, Debug)]
pub struct TranslatedDisk<T> {
    pub first: ScalarField<T>,
    pub last: ScalarField<T>,
    pub middle: ScalarField<T>,
}

/// Translated-disk scene on a square `size x size` grid, intensities in `[0, 255]`.
pub fn translated_disk<T: Real>(size: usize, shift: f64) -> Result<TranslatedDisk<T>> {
    let c = (size - 1) as f64 / 2.0;
    let radius = size as f64 / 5.0;
    let disk = |dx: f64| smooth_disk(size, size, (c + dx, c), radius, 2.0, (200.0, 40.0));
    Ok(TranslatedDisk {
        first: disk(-shift / 2.0)?,
        last: disk(shift / 2.0)?,
        middle: disk(0.0)?,
    })
}

/// Manufactured Stokes problem on the unit square with stream function
/// `g(x) g(y)`, `g(s) = s^2 (1 - s)^2`, and pressure `x^3 - 1/4`.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedStokes {
    pub lambda: f64,
}

fn quartic(s: f64) -> [f64; 4] {
    [
        s * s * (1.0 - s) * (1.0 - s),
        2.0 * s - 6.0 * s * s + 4.0 * s * s * s,
        2.0 - 12.0 * s + 12.0 * s * s,
        -12.0 + 24.0 * s,
    ]
}

impl ManufacturedStokes {
    pub fn velocity(x: f64, y: f64) -> (f64, f64) {
        let (gx, gy) = (quartic(x), quartic(y));
        (gx[0] * gy[1], -gx[1] * gy[0])
    }

    pub fn pressure(x: f64, _y: f64) -> f64 {
        x * x * x - 0.25
    }

    /// Load `f` with `lambda laplace(b) + grad(q) = f`.
    pub fn forcing(&self, x: f64, y: f64) -> (f64, f64) {
        let (gx, gy) = (quartic(x), quartic(y));
        let lap_v = gx[2] * gy[1] + gx[0] * gy[3];
        let lap_w = -(gx[3] * gy[0] + gx[1] * gy[2]);
        (self.lambda * lap_v + 3.0 * x * x, self.lambda * lap_w)
    }

    /// Velocity and pressure `L2` errors and the divergence residual on an
    /// `n x n` grid covering the unit square.
    pub fn errors(&self, n: usize) -> Result<(f64, f64, f64)> {
        let mesh = TriMesh::new(n, n, 1.0 / (n - 1) as f64)?;
        let solver = StokesSolver::new(mesh.clone())?;
        let sol = solver.solve_with(|x, y| self.forcing(x, y), self.lambda)?;
        let ev = sol.velocity.l2_error(Self::velocity);
        let ep = pressure_l2_error(&mesh, sol.q.values(), Self::pressure);
        Ok((ev, ep, sol.div_residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_is_bounded_and_centred() {
        let d: ScalarField<f64> = smooth_disk(32, 32, (15.5, 15.5), 6.0, 1.5, (1.0, 0.0)).unwrap();
        assert!(d.min() >= 0.0 && d.max() <= 1.0);
        assert!(d.get(15, 15) > 0.99 && d.get(0, 0) < 1e-3);
    }

    #[test]
    fn rotation_is_divergence_free_in_the_interior() {
        let b: VectorField<f64> = rotation_field(16, 12, 0.5).unwrap();
        for y in 2..10 {
            for x in 2..14 {
                let dv = (b.get(x + 1, y).0 - b.get(x - 1, y).0) / 2.0;
                let dw = (b.get(x, y + 1).1 - b.get(x, y - 1).1) / 2.0;
                assert_eq!(dv + dw, 0.0);
            }
        }
    }

    #[test]
    fn translated_disk_frames_are_shifted_copies() {
        let s: TranslatedDisk<f64> = translated_disk(40, 4.0).unwrap();
        for x in 4..36 {
            assert!((s.first.get(x - 2, 20) - s.middle.get(x, 20)).abs() < 1e-12);
            assert!((s.last.get(x + 2, 20) - s.middle.get(x, 20)).abs() < 1e-12);
        }
    }

    #[test]
    fn manufactured_velocity_is_divergence_free_and_vanishes_on_the_boundary() {
        let e = 1e-6;
        for &(x, y) in &[(0.3, 0.7), (0.5, 0.5), (0.9, 0.1)] {
            let dv = (ManufacturedStokes::velocity(x + e, y).0 - ManufacturedStokes::velocity(x - e, y).0) / (2.0 * e);
            let dw = (ManufacturedStokes::velocity(x, y + e).1 - ManufacturedStokes::velocity(x, y - e).1) / (2.0 * e);
            assert!((dv + dw).abs() < 1e-8);
        }
        assert_eq!(ManufacturedStokes::velocity(0.0, 0.4), (0.0, 0.0));
        let (ev, ep, div) = ManufacturedStokes { lambda: 1.0 }.errors(9).unwrap();
        assert!(ev < 1e-3 && ep < 0.1 && div < 1e-6);
    }
}
