//! Global assembly of the Taylor-Hood saddle-point system.
//!
//! Rows are assembled independently from the triangles adjacent to each
//! node, which keeps memory proportional to the number of non-zeros and
//! makes the result independent of thread scheduling.

use rayon::prelude::*;
use std::io::Write;

use super::element::ElementMatrices;
use super::mesh::{TriMesh, Triangle};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::grid::VectorField;
use crate::scalar::Real;

/// Element matrices for the two triangle shapes of the structured mesh.
pub(crate) fn shape_matrices<T: Real>(mesh: &TriMesh<T>) -> Result<[ElementMatrices<T>; 2]> {
    let [lower, upper] = mesh.cell_triangles(0, 0);
    Ok([
        ElementMatrices::new(mesh.triangle_vertices(&lower))?,
        ElementMatrices::new(mesh.triangle_vertices(&upper))?,
    ])
}

/// Triangles touching lattice node `(ii, jj)` and the node's local index in each.
fn adjacent<T: Real>(mesh: &TriMesh<T>, ii: usize, jj: usize) -> Vec<(Triangle, usize)> {
    let node = mesh.node_index(ii, jj);
    let cells = |n: usize, cells: usize| {
        let lo = n.div_ceil(2).saturating_sub(1);
        let hi = (n / 2).min(cells - 1);
        lo..=hi
    };
    let mut out = Vec::with_capacity(6);
    for cj in cells(jj, mesh.height() - 1) {
        for ci in cells(ii, mesh.width() - 1) {
            for tri in mesh.cell_triangles(ci, cj) {
                if let Some(k) = tri.nodes.iter().position(|&n| n == node) {
                    out.push((tri, k));
                }
            }
        }
    }
    out
}

/// Unit-coefficient velocity stiffness `A1` on interior nodes.
pub(crate) fn assemble_stiffness<T: Real>(mesh: &TriMesh<T>, elems: &[ElementMatrices<T>; 2]) -> CsrMatrix<T> {
    let (ix, iy) = mesh.interior_dims();
    let n = ix * iy;
    let rows: Vec<Vec<(usize, T)>> = (0..n)
        .into_par_iter()
        .map(|dof| {
            let (ii, jj) = (dof % ix + 1, dof / ix + 1);
            let mut row: Vec<(usize, T)> = Vec::with_capacity(25);
            for (tri, k) in adjacent(mesh, ii, jj) {
                let ke = &elems[tri.shape].stiffness[k];
                for (m, &node) in tri.nodes.iter().enumerate() {
                    if let Some(col) = mesh.dof_of_node(node) {
                        row.push((col, ke[m]));
                    }
                }
            }
            row
        })
        .collect();
    rows_to_csr(n, n, rows)
}

type SparseRow<T> = Vec<(usize, T)>;

/// Divergence coupling blocks `(C_x, C_y)`: pressure vertices x velocity dofs.
pub(crate) fn assemble_divergence<T: Real>(
    mesh: &TriMesh<T>,
    elems: &[ElementMatrices<T>; 2],
) -> (CsrMatrix<T>, CsrMatrix<T>) {
    let nv = mesh.num_vertices();
    let n = mesh.num_velocity_dofs();
    let w = mesh.width();
    let rows: Vec<(SparseRow<T>, SparseRow<T>)> = (0..nv)
        .into_par_iter()
        .map(|a| {
            let (i, j) = (a % w, a / w);
            let mut rx = Vec::with_capacity(25);
            let mut ry = Vec::with_capacity(25);
            for (tri, k) in adjacent(mesh, 2 * i, 2 * j) {
                debug_assert!(k < 3);
                let e = &elems[tri.shape];
                for (m, &node) in tri.nodes.iter().enumerate() {
                    if let Some(col) = mesh.dof_of_node(node) {
                        rx.push((col, e.div_x[k][m]));
                        ry.push((col, e.div_y[k][m]));
                    }
                }
            }
            (rx, ry)
        })
        .collect();
    let (rx, ry): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    (rows_to_csr(nv, n, rx), rows_to_csr(nv, n, ry))
}

fn rows_to_csr<T: Real>(rows: usize, cols: usize, data: Vec<Vec<(usize, T)>>) -> CsrMatrix<T> {
    let trip: Vec<(usize, usize, T)> = data
        .into_iter()
        .enumerate()
        .flat_map(|(r, row)| row.into_iter().map(move |(c, v)| (r, c, v)))
        .collect();
    CsrMatrix::from_triplets(rows, cols, &trip)
}

/// Values of a pixel field at every P2 lattice node: vertices take the
/// pixel value, midpoints the bilinear interpolant (mean of the two edge
/// ends, or of the four cell corners for a diagonal).
pub(crate) fn nodal_samples<T: Real>(mesh: &TriMesh<T>, pixel: &[T]) -> Vec<T> {
    let (nx, ny) = mesh.node_dims();
    let w = mesh.width();
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let mut out = vec![T::zero(); nx * ny];
    out.par_chunks_mut(nx).enumerate().for_each(|(jj, row)| {
        for (ii, o) in row.iter_mut().enumerate() {
            let (i, j) = (ii / 2, jj / 2);
            let p = |a: usize, b: usize| pixel[b * w + a];
            *o = match (ii % 2, jj % 2) {
                (0, 0) => p(i, j),
                (1, 0) => half * (p(i, j) + p(i + 1, j)),
                (0, 1) => half * (p(i, j) + p(i, j + 1)),
                _ => quarter * (p(i, j) + p(i + 1, j) + p(i, j + 1) + p(i + 1, j + 1)),
            };
        }
    });
    out
}

/// Load vector `-(M f_x, M f_y)` on interior dofs from nodal samples.
pub(crate) fn assemble_load<T: Real>(
    mesh: &TriMesh<T>,
    elems: &[ElementMatrices<T>; 2],
    fx: &[T],
    fy: &[T],
) -> Vec<T> {
    let (ix, iy) = mesh.interior_dims();
    let n = ix * iy;
    let mut load = vec![T::zero(); 2 * n];
    let (lx, ly) = load.split_at_mut(n);
    lx.par_iter_mut()
        .zip(ly.par_iter_mut())
        .enumerate()
        .for_each(|(dof, (ox, oy))| {
            let (ii, jj) = (dof % ix + 1, dof / ix + 1);
            let mut sx = T::zero();
            let mut sy = T::zero();
            for (tri, k) in adjacent(mesh, ii, jj) {
                let me = &elems[tri.shape].mass[k];
                for (m, &node) in tri.nodes.iter().enumerate() {
                    sx += me[m] * fx[node];
                    sy += me[m] * fy[node];
                }
            }
            *ox = -sx;
            *oy = -sy;
        });
    load
}

/// Discrete generalized Stokes system
///
/// ```text
/// [ lambda A1      0        C_x^T ] [b_x]   [F_x]
/// [     0      lambda A1    C_y^T ] [b_y] = [F_y]
/// [    C_x        C_y         0   ] [ q ]   [ 0 ]
/// ```
///
/// on interior velocity nodes, with pressure on all mesh vertices.
#[derive(Clone, Debug)]
pub struct SaddleSystem<T> {
    pub mesh: TriMesh<T>,
    pub lambda: T,
    /// `lambda * A1`, one velocity component.
    pub stiffness: CsrMatrix<T>,
    pub div_x: CsrMatrix<T>,
    pub div_y: CsrMatrix<T>,
    /// `[F_x; F_y]`.
    pub load: Vec<T>,
    /// Lumped vertex areas `integral(psi_a)`.
    pub pressure_weights: Vec<T>,
}

impl<T: Real> SaddleSystem<T> {
    pub fn num_velocity(&self) -> usize {
        self.stiffness.rows()
    }

    pub fn num_pressure(&self) -> usize {
        self.div_x.rows()
    }

    pub fn size(&self) -> usize {
        2 * self.num_velocity() + self.num_pressure()
    }

    /// `y = K x` for the full block operator.
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        saddle_apply(
            &SaddleBlocks {
                stiffness: &self.stiffness,
                scale: T::one(),
                div_x: &self.div_x,
                div_y: &self.div_y,
                transposes: None,
            },
            x,
            y,
        );
    }

    /// Right-hand side `[F_x; F_y; 0]`.
    pub fn rhs(&self) -> Vec<T> {
        let mut r = self.load.clone();
        r.resize(self.size(), T::zero());
        r
    }

    /// Dense copy of the full saddle matrix (small systems only).
    pub fn to_dense(&self) -> Vec<T> {
        let n = self.size();
        let mut out = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); n];
        for c in 0..n {
            e[c] = T::one();
            self.apply(&e, &mut col);
            e[c] = T::zero();
            for r in 0..n {
                out[r * n + c] = col[r];
            }
        }
        out
    }

    /// Writes the full matrix in Matrix Market coordinate format.
    pub fn write_matrix_market<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        let nu = self.num_velocity();
        let nnz = 2 * self.stiffness.nnz() + 4 * self.div_x.nnz();
        writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(out, "% generalized Stokes saddle system, lambda = {}", self.lambda)?;
        writeln!(out, "{} {} {}", self.size(), self.size(), nnz)?;
        self.stiffness.write_entries(out, 0, 0)?;
        self.stiffness.write_entries(out, nu, nu)?;
        self.div_x.write_entries(out, 2 * nu, 0)?;
        self.div_y.write_entries(out, 2 * nu, nu)?;
        self.div_x.transpose().write_entries(out, 0, 2 * nu)?;
        self.div_y.transpose().write_entries(out, nu, 2 * nu)?;
        Ok(())
    }
}

pub(crate) struct SaddleBlocks<'a, T> {
    pub stiffness: &'a CsrMatrix<T>,
    pub scale: T,
    pub div_x: &'a CsrMatrix<T>,
    pub div_y: &'a CsrMatrix<T>,
    /// Precomputed `(C_x^T, C_y^T)`; falls back to a serial scatter.
    pub transposes: Option<(&'a CsrMatrix<T>, &'a CsrMatrix<T>)>,
}

/// Applies the block operator `y = K x`.
pub(crate) fn saddle_apply<T: Real>(blocks: &SaddleBlocks<'_, T>, x: &[T], y: &mut [T]) {
    let nu = blocks.stiffness.rows();
    let (bx, rest) = x.split_at(nu);
    let (by, q) = rest.split_at(nu);
    let (yx, rest) = y.split_at_mut(nu);
    let (yy, yq) = rest.split_at_mut(nu);
    blocks.stiffness.matvec(bx, yx);
    blocks.stiffness.matvec(by, yy);
    if blocks.scale != T::one() {
        yx.iter_mut().chain(yy.iter_mut()).for_each(|v| *v *= blocks.scale);
    }
    blocks.div_x.matvec(bx, yq);
    blocks.div_y.matvec_add(T::one(), by, yq);
    match blocks.transposes {
        Some((cxt, cyt)) => {
            cxt.matvec_add(T::one(), q, yx);
            cyt.matvec_add(T::one(), q, yy);
        }
        None => {
            transpose_matvec_add(blocks.div_x, q, yx);
            transpose_matvec_add(blocks.div_y, q, yy);
        }
    }
}

/// `y += C^T q` without materializing `C^T`.
fn transpose_matvec_add<T: Real>(c: &CsrMatrix<T>, q: &[T], y: &mut [T]) {
    for (r, &qr) in q.iter().enumerate().take(c.rows()) {
        if qr.is_zero() {
            continue;
        }
        let (idx, val) = c.row(r);
        for (&col, &v) in idx.iter().zip(val) {
            y[col as usize] += v * qr;
        }
    }
}

/// Assembles the system for a pixel-sampled right-hand side `f`.
pub fn assemble<T: Real>(mesh: &TriMesh<T>, f: &VectorField<T>, lambda: T) -> Result<SaddleSystem<T>> {
    if f.dims() != (mesh.width(), mesh.height()) {
        return Err(Error::DimensionMismatch {
            expected: (mesh.width(), mesh.height()),
            found: f.dims(),
        });
    }
    let fx = nodal_samples(mesh, f.v());
    let fy = nodal_samples(mesh, f.w());
    assemble_nodal(mesh, &fx, &fy, lambda)
}

/// Assembles the system with `f` evaluated at every P2 node by a closure
/// of physical coordinates.
pub fn assemble_with<T: Real>(
    mesh: &TriMesh<T>,
    f: impl Fn(T, T) -> (T, T) + Sync,
    lambda: T,
) -> Result<SaddleSystem<T>> {
    let (fx, fy) = nodal_from_fn(mesh, f);
    assemble_nodal(mesh, &fx, &fy, lambda)
}

pub(crate) fn nodal_from_fn<T: Real>(mesh: &TriMesh<T>, f: impl Fn(T, T) -> (T, T) + Sync) -> (Vec<T>, Vec<T>) {
    (0..mesh.num_nodes())
        .into_par_iter()
        .map(|node| {
            let (x, y) = mesh.node_coords(node);
            f(x, y)
        })
        .unzip()
}

fn assemble_nodal<T: Real>(mesh: &TriMesh<T>, fx: &[T], fy: &[T], lambda: T) -> Result<SaddleSystem<T>> {
    if !(lambda > T::zero()) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
    }
    let elems = shape_matrices(mesh)?;
    let stiffness = assemble_stiffness(mesh, &elems).scaled(lambda);
    let (div_x, div_y) = assemble_divergence(mesh, &elems);
    let load = assemble_load(mesh, &elems, fx, fy);
    Ok(SaddleSystem {
        mesh: mesh.clone(),
        lambda,
        stiffness,
        div_x,
        div_y,
        load,
        pressure_weights: mesh.vertex_weights(),
    })
}
