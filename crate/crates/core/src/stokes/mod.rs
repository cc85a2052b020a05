//! Generalized Stokes problem `lambda Lap b + grad q = f`, `div b = 0`,
//! `b = 0` on the boundary, discretized with Taylor-Hood P2/P1 elements
//! on the pixel triangulation and solved by block-preconditioned MINRES.
//!
//! The preconditioner is `diag(V(A1)/lambda, V(A1)/lambda, lambda W^{-1})`
//! with `V` one multigrid V-cycle and `W` the lumped pressure mass. Since
//! the operator for `c lambda` equals `D K D` with a constant diagonal `D`,
//! the preconditioned iteration for `c lambda` is a rescaled copy of the
//! one for `lambda`; the velocity then scales exactly as `1/c` and the
//! pressure is unchanged, up to roundoff.

mod assemble;
mod element;
mod mesh;
mod minres;
mod multigrid;
mod sparse;

pub use assemble::{assemble, assemble_with, SaddleSystem};
pub use element::{p2_values, quadrature, ElementMatrices, TriangleGeometry};
pub use mesh::{TriMesh, Triangle};
pub use minres::{minres, MinresOutcome};
pub use multigrid::Multigrid;
pub use sparse::CsrMatrix;

use assemble::{
    assemble_divergence, assemble_load, assemble_stiffness, nodal_from_fn, nodal_samples, saddle_apply,
    shape_matrices, SaddleBlocks,
};
use rayon::prelude::*;
use sparse::norm2;

use crate::error::{Error, Result};
use crate::grid::{ScalarField, VectorField};
use crate::scalar::Real;

/// Default relative tolerance of the saddle solve.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Iteration cap `max(500, 10 sqrt(N))`.
pub fn default_max_iter(unknowns: usize) -> usize {
    ((10.0 * (unknowns as f64).sqrt()).ceil() as usize).max(500)
}

/// Continuous P2 velocity given by its values at every lattice node.
#[derive(Clone, Debug)]
pub struct P2Velocity<T> {
    mesh: TriMesh<T>,
    pub vx: Vec<T>,
    pub vy: Vec<T>,
}

impl<T: Real> P2Velocity<T> {
    fn from_dofs(mesh: &TriMesh<T>, dofs: &[T]) -> Self {
        let n = mesh.num_velocity_dofs();
        let mut vx = vec![T::zero(); mesh.num_nodes()];
        let mut vy = vec![T::zero(); mesh.num_nodes()];
        for node in 0..mesh.num_nodes() {
            if let Some(d) = mesh.dof_of_node(node) {
                vx[node] = dofs[d];
                vy[node] = dofs[n + d];
            }
        }
        Self {
            mesh: mesh.clone(),
            vx,
            vy,
        }
    }

    /// Evaluates the finite-element velocity at physical point `(x, y)`.
    pub fn eval(&self, x: T, y: T) -> (T, T) {
        let (tri, l) = self.mesh.locate(x, y);
        let phi = p2_values(l);
        let mut out = (T::zero(), T::zero());
        for (k, &node) in tri.nodes.iter().enumerate() {
            out.0 += phi[k] * self.vx[node];
            out.1 += phi[k] * self.vy[node];
        }
        out
    }

    /// Samples at pixel positions. Pixels coincide with mesh vertices, where
    /// the P2 interpolant equals its nodal value.
    pub fn to_pixels(&self) -> Result<VectorField<T>> {
        let (w, h) = (self.mesh.width(), self.mesh.height());
        let v = (0..w * h)
            .map(|p| self.vx[self.mesh.node_index(2 * (p % w), 2 * (p / w))])
            .collect();
        let ww = (0..w * h)
            .map(|p| self.vy[self.mesh.node_index(2 * (p % w), 2 * (p / w))])
            .collect();
        Ok(VectorField::new(w, h, v, ww)?.with_spacing(self.mesh.spacing()))
    }

    /// `L2` distance to an exact field, integrated with the element quadrature.
    pub fn l2_error(&self, exact: impl Fn(T, T) -> (T, T) + Sync) -> T {
        let mesh = &self.mesh;
        let quad = quadrature::<T>();
        let area = T::lit(0.5) * mesh.spacing() * mesh.spacing();
        let total: T = (0..mesh.height() - 1)
            .into_par_iter()
            .map(|j| {
                let mut s = T::zero();
                for i in 0..mesh.width() - 1 {
                    for tri in mesh.cell_triangles(i, j) {
                        let verts = mesh.triangle_vertices(&tri);
                        for (l, wq) in &quad {
                            let phi = p2_values(*l);
                            let (mut bx, mut by) = (T::zero(), T::zero());
                            for (k, &node) in tri.nodes.iter().enumerate() {
                                bx += phi[k] * self.vx[node];
                                by += phi[k] * self.vy[node];
                            }
                            let x = l[0] * verts[0].0 + l[1] * verts[1].0 + l[2] * verts[2].0;
                            let y = l[0] * verts[0].1 + l[1] * verts[1].1 + l[2] * verts[2].1;
                            let (ex, ey) = exact(x, y);
                            s += *wq * area * ((bx - ex).powi(2) + (by - ey).powi(2));
                        }
                    }
                }
                s
            })
            .collect::<Vec<T>>()
            .into_iter()
            .sum();
        total.sqrt()
    }
}

/// `L2` distance between the P1 pressure interpolant of vertex values `q` and an exact field.
pub fn pressure_l2_error<T: Real>(mesh: &TriMesh<T>, q: &[T], exact: impl Fn(T, T) -> T + Sync) -> T {
    let quad = quadrature::<T>();
    let area = T::lit(0.5) * mesh.spacing() * mesh.spacing();
    let total: T = (0..mesh.height() - 1)
        .into_par_iter()
        .map(|j| {
            let mut s = T::zero();
            for i in 0..mesh.width() - 1 {
                for tri in mesh.cell_triangles(i, j) {
                    let verts = mesh.triangle_vertices(&tri);
                    for (l, wq) in &quad {
                        let qh = l[0] * q[tri.pressure[0]] + l[1] * q[tri.pressure[1]] + l[2] * q[tri.pressure[2]];
                        let x = l[0] * verts[0].0 + l[1] * verts[1].0 + l[2] * verts[2].0;
                        let y = l[0] * verts[0].1 + l[1] * verts[1].1 + l[2] * verts[2].1;
                        s += *wq * area * (qh - exact(x, y)).powi(2);
                    }
                }
            }
            s
        })
        .collect::<Vec<T>>()
        .into_iter()
        .sum();
    total.sqrt()
}

#[derive(Clone, Debug)]
pub struct StokesSolution<T> {
    /// Velocity at pixel positions, zero on the boundary ring.
    pub b: VectorField<T>,
    /// Zero-mean pressure at mesh vertices.
    pub q: ScalarField<T>,
    /// True Euclidean residual of the full system relative to the right-hand side.
    pub residual: T,
    pub iterations: usize,
    /// `max|C b| / |F|`.
    pub div_residual: T,
    pub velocity: P2Velocity<T>,
}

/// Mesh-dependent operators cached across solves with different loads and
/// regularization weights.
#[derive(Clone, Debug)]
pub struct StokesSolver<T> {
    mesh: TriMesh<T>,
    elems: [ElementMatrices<T>; 2],
    a1: CsrMatrix<T>,
    cx: CsrMatrix<T>,
    cy: CsrMatrix<T>,
    cxt: CsrMatrix<T>,
    cyt: CsrMatrix<T>,
    weights: Vec<T>,
    mg: Multigrid<T>,
    pub tol: T,
    pub max_iter: Option<usize>,
}

impl<T: Real> StokesSolver<T> {
    pub fn new(mesh: TriMesh<T>) -> Result<Self> {
        let elems = shape_matrices(&mesh)?;
        let a1 = assemble_stiffness(&mesh, &elems);
        let (cx, cy) = assemble_divergence(&mesh, &elems);
        let (ix, iy) = mesh.interior_dims();
        let mg = Multigrid::new(&a1, ix, iy);
        Ok(Self {
            cxt: cx.transpose(),
            cyt: cy.transpose(),
            weights: mesh.vertex_weights(),
            elems,
            a1,
            cx,
            cy,
            mg,
            mesh,
            tol: T::lit(DEFAULT_TOL),
            max_iter: None,
        })
    }

    /// Solver for the mesh matching a pixel grid.
    pub fn for_grid(width: usize, height: usize, spacing: T) -> Result<Self> {
        Self::new(TriMesh::new(width, height, spacing)?)
    }

    pub fn mesh(&self) -> &TriMesh<T> {
        &self.mesh
    }

    /// Solves with a pixel-sampled right-hand side.
    pub fn solve(&self, f: &VectorField<T>, lambda: T) -> Result<StokesSolution<T>> {
        if f.dims() != (self.mesh.width(), self.mesh.height()) {
            return Err(Error::DimensionMismatch {
                expected: (self.mesh.width(), self.mesh.height()),
                found: f.dims(),
            });
        }
        let fx = nodal_samples(&self.mesh, f.v());
        let fy = nodal_samples(&self.mesh, f.w());
        self.solve_load(assemble_load(&self.mesh, &self.elems, &fx, &fy), lambda)
    }

    /// Solves with `f` evaluated exactly at every P2 node.
    pub fn solve_with(&self, f: impl Fn(T, T) -> (T, T) + Sync, lambda: T) -> Result<StokesSolution<T>> {
        let (fx, fy) = nodal_from_fn(&self.mesh, f);
        self.solve_load(assemble_load(&self.mesh, &self.elems, &fx, &fy), lambda)
    }

    fn solve_load(&self, load: Vec<T>, lambda: T) -> Result<StokesSolution<T>> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        if load.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Stokes load vector".into()));
        }
        let blocks = SaddleBlocks {
            stiffness: &self.a1,
            scale: lambda,
            div_x: &self.cx,
            div_y: &self.cy,
            transposes: Some((&self.cxt, &self.cyt)),
        };
        let precond = Precond {
            mg: &self.mg,
            velocity_scale: lambda,
            pressure_scale: lambda,
            weights: &self.weights,
        };
        solve_blocks(&self.mesh, &blocks, &precond, load, self.tol, self.max_iter)
    }
}

/// Block-diagonal preconditioner `diag(V / s_v, V / s_v, s_p W^{-1})`.
struct Precond<'a, T> {
    mg: &'a Multigrid<T>,
    velocity_scale: T,
    pressure_scale: T,
    weights: &'a [T],
}

fn solve_blocks<T: Real>(
    mesh: &TriMesh<T>,
    blocks: &SaddleBlocks<'_, T>,
    precond: &Precond<'_, T>,
    load: Vec<T>,
    tol: T,
    max_iter: Option<usize>,
) -> Result<StokesSolution<T>> {
    let weights = precond.weights;
    let nu = blocks.stiffness.rows();
    let np = blocks.div_x.rows();
    let size = 2 * nu + np;
    let mut rhs = load;
    rhs.resize(size, T::zero());
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(size));

    let apply_k = |x: &[T], y: &mut [T]| saddle_apply(blocks, x, y);
    let apply_m = |r: &[T], z: &mut [T]| {
        let (rv, rp) = r.split_at(2 * nu);
        let (zv, zp) = z.split_at_mut(2 * nu);
        let (r1, r2) = rv.split_at(nu);
        let (z1, z2) = zv.split_at_mut(nu);
        rayon::join(|| precond.mg.apply(r1, z1), || precond.mg.apply(r2, z2));
        if precond.velocity_scale != T::one() {
            zv.iter_mut().for_each(|v| *v /= precond.velocity_scale);
        }
        for ((z, &r), &w) in zp.iter_mut().zip(rp).zip(weights) {
            *z = precond.pressure_scale * r / w;
        }
    };
    let out = minres(apply_k, apply_m, &rhs, tol, max_iter);

    let mut x = out.x;
    // residual of the raw iterate; the zero-mean shift below is a separate projection
    let mut kx = vec![T::zero(); size];
    saddle_apply(blocks, &x, &mut kx);
    let rhs_norm = norm2(&rhs);
    let res: Vec<T> = kx.iter().zip(&rhs).map(|(a, b)| *b - *a).collect();
    let residual = if rhs_norm.is_zero() {
        norm2(&res)
    } else {
        norm2(&res) / rhs_norm
    };
    if !out.converged {
        return Err(Error::NonConvergence {
            residual: out.relative_residual.as_f64(),
            iterations: out.iterations,
        });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Stokes solution".into()));
    }
    let div_max = kx[2 * nu..].iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let div_residual = if rhs_norm.is_zero() { div_max } else { div_max / rhs_norm };

    let (wsum, wq) = weights
        .iter()
        .zip(&x[2 * nu..])
        .fold((T::zero(), T::zero()), |(a, b), (&w, &q)| (a + w, b + w * q));
    let mean = wq / wsum;
    x[2 * nu..].iter_mut().for_each(|q| *q -= mean);

    let velocity = P2Velocity::from_dofs(mesh, &x[..2 * nu]);
    let b = velocity.to_pixels()?;
    let q = ScalarField::new(mesh.width(), mesh.height(), x[2 * nu..].to_vec())?.with_spacing(mesh.spacing());
    Ok(StokesSolution {
        b,
        q,
        residual,
        iterations: out.iterations,
        div_residual,
        velocity,
    })
}

/// Solves an assembled system, building the multigrid hierarchy from its
/// (already lambda-scaled) stiffness block.
pub fn solve_saddle<T: Real>(sys: &SaddleSystem<T>, tol: T, max_iter: Option<usize>) -> Result<StokesSolution<T>> {
    let (ix, iy) = sys.mesh.interior_dims();
    let mg = Multigrid::new(&sys.stiffness, ix, iy);
    let (cxt, cyt) = (sys.div_x.transpose(), sys.div_y.transpose());
    let blocks = SaddleBlocks {
        stiffness: &sys.stiffness,
        scale: T::one(),
        div_x: &sys.div_x,
        div_y: &sys.div_y,
        transposes: Some((&cxt, &cyt)),
    };
    let precond = Precond {
        mg: &mg,
        velocity_scale: T::one(),
        pressure_scale: sys.lambda,
        weights: &sys.pressure_weights,
    };
    solve_blocks(&sys.mesh, &blocks, &precond, sys.load.clone(), tol, max_iter)
}

/// Assembles and solves on the mesh matching `f`, sampling the velocity back to pixels.
pub fn stokes_flow_update<T: Real>(f: &VectorField<T>, lambda: T) -> Result<StokesSolution<T>> {
    StokesSolver::for_grid(f.width(), f.height(), f.spacing())?.solve(f, lambda)
}
