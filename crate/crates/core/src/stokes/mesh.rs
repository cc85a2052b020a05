//! Structured Taylor-Hood triangulation of the pixel grid.
//!
//! Pixel `(i, j)` is a mesh vertex at `(i h, j h)`. Every cell of the
//! `(W-1) x (H-1)` cell grid is cut along its `(+1, +1)` diagonal. P2 nodes
//! (vertices and edge midpoints) form a `(2W-1) x (2H-1)` lattice: node
//! `(I, J)` sits at `(I h / 2, J h / 2)`, vertices at even `(I, J)`.

use crate::error::{Error, Result};
use crate::grid::MIN_DIM;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh<T> {
    width: usize,
    height: usize,
    spacing: T,
}

/// Node lists of one P2 triangle: three vertices counterclockwise, then the
/// midpoints of edges (0,1), (1,2), (2,0). Node ids index the P2 lattice;
/// `pressure` holds the vertex ids on the pixel grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub nodes: [usize; 6],
    pub pressure: [usize; 3],
    /// 0 for the lower-right triangle of a cell, 1 for the upper-left one.
    pub shape: usize,
}

impl<T: Real> TriMesh<T> {
    pub fn new(width: usize, height: usize, spacing: T) -> Result<Self> {
        if width < MIN_DIM || height < MIN_DIM {
            return Err(Error::DimensionTooSmall {
                width,
                height,
                min: MIN_DIM,
            });
        }
        if !(spacing > T::zero()) {
            return Err(Error::InvalidConfig(format!("mesh spacing must be positive, got {spacing}")));
        }
        Ok(Self {
            width,
            height,
            spacing,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn num_vertices(&self) -> usize {
        self.width * self.height
    }

    pub fn num_edges(&self) -> usize {
        let (w, h) = (self.width, self.height);
        (w - 1) * h + w * (h - 1) + (w - 1) * (h - 1)
    }

    pub fn num_triangles(&self) -> usize {
        2 * (self.width - 1) * (self.height - 1)
    }

    /// P2 lattice dimensions `(2W - 1, 2H - 1)`.
    #[inline]
    pub fn node_dims(&self) -> (usize, usize) {
        (2 * self.width - 1, 2 * self.height - 1)
    }

    pub fn num_nodes(&self) -> usize {
        let (nx, ny) = self.node_dims();
        nx * ny
    }

    /// Interior P2 lattice dimensions (velocity unknowns per component).
    #[inline]
    pub fn interior_dims(&self) -> (usize, usize) {
        let (nx, ny) = self.node_dims();
        (nx - 2, ny - 2)
    }

    pub fn num_velocity_dofs(&self) -> usize {
        let (a, b) = self.interior_dims();
        a * b
    }

    #[inline]
    pub fn node_index(&self, ii: usize, jj: usize) -> usize {
        jj * self.node_dims().0 + ii
    }

    #[inline]
    pub fn node_coords(&self, node: usize) -> (T, T) {
        let nx = self.node_dims().0;
        let half = T::lit(0.5) * self.spacing;
        (
            T::from_usize_lossy(node % nx) * half,
            T::from_usize_lossy(node / nx) * half,
        )
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        let (nx, ny) = self.node_dims();
        let (ii, jj) = (node % nx, node / nx);
        ii == 0 || jj == 0 || ii == nx - 1 || jj == ny - 1
    }

    /// Velocity unknown of a node, `None` on the Dirichlet boundary.
    #[inline]
    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        let (nx, ny) = self.node_dims();
        let (ii, jj) = (node % nx, node / nx);
        if ii == 0 || jj == 0 || ii == nx - 1 || jj == ny - 1 {
            None
        } else {
            Some((jj - 1) * (nx - 2) + (ii - 1))
        }
    }

    #[inline]
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    /// The two triangles of cell `(i, j)`.
    pub fn cell_triangles(&self, i: usize, j: usize) -> [Triangle; 2] {
        let n = |a: usize, b: usize| self.node_index(a, b);
        let v = |a: usize, b: usize| self.vertex_index(a, b);
        let (ii, jj) = (2 * i, 2 * j);
        [
            Triangle {
                nodes: [
                    n(ii, jj),
                    n(ii + 2, jj),
                    n(ii + 2, jj + 2),
                    n(ii + 1, jj),
                    n(ii + 2, jj + 1),
                    n(ii + 1, jj + 1),
                ],
                pressure: [v(i, j), v(i + 1, j), v(i + 1, j + 1)],
                shape: 0,
            },
            Triangle {
                nodes: [
                    n(ii, jj),
                    n(ii + 2, jj + 2),
                    n(ii, jj + 2),
                    n(ii + 1, jj + 1),
                    n(ii + 1, jj + 2),
                    n(ii, jj + 1),
                ],
                pressure: [v(i, j), v(i + 1, j + 1), v(i, j + 1)],
                shape: 1,
            },
        ]
    }

    pub fn triangles(&self) -> impl Iterator<Item = Triangle> + '_ {
        (0..self.height - 1).flat_map(move |j| (0..self.width - 1).flat_map(move |i| self.cell_triangles(i, j)))
    }

    /// Vertex coordinates of a triangle.
    pub fn triangle_vertices(&self, tri: &Triangle) -> [(T, T); 3] {
        [
            self.node_coords(tri.nodes[0]),
            self.node_coords(tri.nodes[1]),
            self.node_coords(tri.nodes[2]),
        ]
    }

    /// Triangle containing `(x, y)` together with its barycentric coordinates.
    pub fn locate(&self, x: T, y: T) -> (Triangle, [T; 3]) {
        let h = self.spacing;
        let xs = (x / h).max(T::zero()).min(T::from_usize_lossy(self.width - 1));
        let ys = (y / h).max(T::zero()).min(T::from_usize_lossy(self.height - 1));
        let i = xs.floor().to_usize().unwrap_or(0).min(self.width - 2);
        let j = ys.floor().to_usize().unwrap_or(0).min(self.height - 2);
        let fx = xs - T::from_usize_lossy(i);
        let fy = ys - T::from_usize_lossy(j);
        let [lower, upper] = self.cell_triangles(i, j);
        if fy <= fx {
            // (0,0), (1,0), (1,1)
            (lower, [T::one() - fx, fx - fy, fy])
        } else {
            // (0,0), (1,1), (0,1)
            (upper, [T::one() - fy, fx, fy - fx])
        }
    }

    /// Lumped P1 weights `integral(psi_a)` for every vertex.
    pub fn vertex_weights(&self) -> Vec<T> {
        let area = T::lit(0.5) * self.spacing * self.spacing;
        let third = area / T::lit(3.0);
        let mut w = vec![T::zero(); self.num_vertices()];
        for tri in self.triangles() {
            for &p in &tri.pressure {
                w[p] += third;
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts_and_shared_midpoints() {
        let m = TriMesh::new(5, 4, 1.0f64).unwrap();
        assert_eq!(m.num_triangles(), 24);
        let nodes: HashSet<usize> = m.triangles().flat_map(|t| t.nodes).collect();
        assert_eq!(nodes.len(), m.num_vertices() + m.num_edges());
        assert_eq!(m.num_nodes(), m.num_vertices() + m.num_edges());
    }

    #[test]
    fn triangles_are_counterclockwise_and_midpoints_consistent() {
        let m = TriMesh::new(6, 5, 0.5f64).unwrap();
        for t in m.triangles() {
            let [a, b, c] = m.triangle_vertices(&t);
            let area2 = (b.0 - a.0) * (c.1 - a.1) - (c.0 - a.0) * (b.1 - a.1);
            assert!(area2 > 0.0);
            for (k, (p, q)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let mid = m.node_coords(t.nodes[3 + k]);
                let (xp, yp) = m.node_coords(t.nodes[p]);
                let (xq, yq) = m.node_coords(t.nodes[q]);
                assert_eq!(mid, (0.5 * (xp + xq), 0.5 * (yp + yq)));
            }
        }
    }

    #[test]
    fn weights_integrate_to_domain_area() {
        let m = TriMesh::new(7, 5, 0.25f64).unwrap();
        let total: f64 = m.vertex_weights().iter().sum();
        assert!((total - 6.0 * 4.0 * 0.0625).abs() < 1e-14);
    }

    #[test]
    fn locate_returns_barycentrics() {
        let m = TriMesh::new(6, 6, 1.0f64).unwrap();
        let (t, l) = m.locate(2.75, 1.25);
        let verts = m.triangle_vertices(&t);
        let x: f64 = (0..3).map(|k| l[k] * verts[k].0).sum();
        let y: f64 = (0..3).map(|k| l[k] * verts[k].1).sum();
        assert!((x - 2.75).abs() < 1e-14 && (y - 1.25).abs() < 1e-14);
        assert!(l.iter().all(|&v| v >= 0.0));
    }
}
