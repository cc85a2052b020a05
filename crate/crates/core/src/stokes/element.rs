//! P2/P1 element matrices on a single triangle.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric 6-point rule of degree 4 on the reference triangle:
/// barycentric points and weights (weights sum to 1, scale by area).
pub fn quadrature<T: Real>() -> [([T; 3], T); 6] {
    let a1 = 0.445_948_490_915_965;
    let b1 = 1.0 - 2.0 * a1;
    let w1 = 0.223_381_589_678_011;
    let a2 = 0.091_576_213_509_771;
    let b2 = 1.0 - 2.0 * a2;
    let w2 = 0.109_951_743_655_322;
    let p = |l: [f64; 3], w: f64| ([T::lit(l[0]), T::lit(l[1]), T::lit(l[2])], T::lit(w));
    [
        p([b1, a1, a1], w1),
        p([a1, b1, a1], w1),
        p([a1, a1, b1], w1),
        p([b2, a2, a2], w2),
        p([a2, b2, a2], w2),
        p([a2, a2, b2], w2),
    ]
}

/// P2 shape functions at barycentric point `l`: vertices 0..3, then
/// midpoints of edges (0,1), (1,2), (2,0).
#[inline]
pub fn p2_values<T: Real>(l: [T; 3]) -> [T; 6] {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    [
        l[0] * (two * l[0] - T::one()),
        l[1] * (two * l[1] - T::one()),
        l[2] * (two * l[2] - T::one()),
        four * l[0] * l[1],
        four * l[1] * l[2],
        four * l[2] * l[0],
    ]
}

/// Geometry of one triangle: area and gradients of the barycentric coordinates.
#[derive(Clone, Copy, Debug)]
pub struct TriangleGeometry<T> {
    pub area: T,
    pub grad_bary: [(T, T); 3],
}

impl<T: Real> TriangleGeometry<T> {
    pub fn new(p: [(T, T); 3]) -> Result<Self> {
        let [(x0, y0), (x1, y1), (x2, y2)] = p;
        let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        let scale = ((x1 - x0).abs() + (x2 - x0).abs() + (y1 - y0).abs() + (y2 - y0).abs()).powi(2);
        if !(det > T::lit(1e-14) * scale) {
            return Err(Error::DegenerateTriangle {
                area: (T::lit(0.5) * det).as_f64(),
            });
        }
        let grad_bary = [
            ((y1 - y2) / det, (x2 - x1) / det),
            ((y2 - y0) / det, (x0 - x2) / det),
            ((y0 - y1) / det, (x1 - x0) / det),
        ];
        Ok(Self {
            area: T::lit(0.5) * det,
            grad_bary,
        })
    }

    /// Gradients of the six P2 shape functions at barycentric point `l`.
    pub fn p2_gradients(&self, l: [T; 3]) -> [(T, T); 6] {
        let g = &self.grad_bary;
        let four = T::lit(4.0);
        let vert = |k: usize| {
            let c = four * l[k] - T::one();
            (c * g[k].0, c * g[k].1)
        };
        let edge = |a: usize, b: usize| {
            (
                four * (l[a] * g[b].0 + l[b] * g[a].0),
                four * (l[a] * g[b].1 + l[b] * g[a].1),
            )
        };
        [vert(0), vert(1), vert(2), edge(0, 1), edge(1, 2), edge(2, 0)]
    }
}

/// Element matrices of the Taylor-Hood pair on one triangle.
#[derive(Clone, Debug)]
pub struct ElementMatrices<T> {
    /// `integral(grad phi_i . grad phi_j)`
    pub stiffness: [[T; 6]; 6],
    /// `integral(phi_i phi_j)`
    pub mass: [[T; 6]; 6],
    /// `integral(psi_a d(phi_k)/dx)`, pressure rows, velocity columns.
    pub div_x: [[T; 6]; 3],
    /// `integral(psi_a d(phi_k)/dy)`
    pub div_y: [[T; 6]; 3],
}

impl<T: Real> ElementMatrices<T> {
    pub fn new(p: [(T, T); 3]) -> Result<Self> {
        let geo = TriangleGeometry::new(p)?;
        let mut stiffness = [[T::zero(); 6]; 6];
        let mut mass = [[T::zero(); 6]; 6];
        let mut div_x = [[T::zero(); 6]; 3];
        let mut div_y = [[T::zero(); 6]; 3];
        for (l, w) in quadrature::<T>() {
            let wa = w * geo.area;
            let phi = p2_values(l);
            let grad = geo.p2_gradients(l);
            for i in 0..6 {
                for j in 0..6 {
                    stiffness[i][j] += wa * (grad[i].0 * grad[j].0 + grad[i].1 * grad[j].1);
                    mass[i][j] += wa * phi[i] * phi[j];
                }
                for a in 0..3 {
                    div_x[a][i] += wa * l[a] * grad[i].0;
                    div_y[a][i] += wa * l[a] * grad[i].1;
                }
            }
        }
        Ok(Self {
            stiffness,
            mass,
            div_x,
            div_y,
        })
    }
}
