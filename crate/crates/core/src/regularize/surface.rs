//! Discrete forms on the surface of one cube and the gauge fixing solve.

use super::CubeFaceData;
use crate::error::{Error, Result};
use crate::solver::conjugate_gradient;
use std::sync::Arc;

/// An edge of the node lattice `{0..=n}³`: from node `p` to `p + e_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub p: [usize; 3],
    pub axis: usize,
}

/// Quad mesh of the boundary of `[0, n]³` with consistently oriented cells.
///
/// Cells are numbered `face·n² + a + n·b`, faces `−x, +x, −y, +y, −z, +z`, with
/// `a` along `(axis+1) % 3` and `b` along `(axis+2) % 3`. A cell's boundary is
/// traversed counterclockwise as seen from outside the cube.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub n: usize,
    pub edges: Vec<Edge>,
    edge_id: Vec<usize>,
    /// Per cell: its four edges with circulation signs.
    pub cell_edges: Vec<[(usize, f64); 4]>,
    /// Per edge: the cell traversing it forwards and the one traversing it backwards.
    pub edge_cells: Vec<(usize, usize)>,
    /// Surface nodes and, per node, incident edges with `+1` when the edge leaves it.
    pub nodes: Vec<[usize; 3]>,
    pub node_edges: Vec<Vec<(usize, f64)>>,
}

fn on_boundary(p: [usize; 3], n: usize) -> bool {
    p.iter().any(|&c| c == 0 || c == n)
}

impl SurfaceMesh {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "surface mesh needs at least one cell per edge");
        let m = n + 1;
        let dense = |p: [usize; 3], axis: usize| axis + 3 * (p[0] + m * (p[1] + m * p[2]));
        let mut edges = Vec::new();
        let mut edge_id = vec![usize::MAX; 3 * m * m * m];
        for axis in 0..3 {
            for k in 0..m {
                for j in 0..m {
                    for i in 0..m {
                        let p = [i, j, k];
                        if p[axis] == n {
                            continue;
                        }
                        let on_surface = (0..3).any(|e| e != axis && (p[e] == 0 || p[e] == n));
                        if on_surface {
                            edge_id[dense(p, axis)] = edges.len();
                            edges.push(Edge { p, axis });
                        }
                    }
                }
            }
        }
        let id = |p: [usize; 3], axis: usize| {
            let e = edge_id[dense(p, axis)];
            debug_assert!(e != usize::MAX);
            e
        };
        let mut cell_edges = Vec::with_capacity(6 * n * n);
        for face in 0..6 {
            let k = face / 2;
            let positive = face % 2 == 1;
            let (iu, iv) = ((k + 1) % 3, (k + 2) % 3);
            let s = if positive { 1.0 } else { -1.0 };
            for b in 0..n {
                for a in 0..n {
                    let mut q = [0usize; 3];
                    q[k] = if positive { n } else { 0 };
                    q[iu] = a;
                    q[iv] = b;
                    let mut qu = q;
                    qu[iu] += 1;
                    let mut qv = q;
                    qv[iv] += 1;
                    cell_edges.push([
                        (id(q, iu), s),
                        (id(qu, iv), s),
                        (id(qv, iu), -s),
                        (id(q, iv), -s),
                    ]);
                }
            }
        }
        let mut plus = vec![usize::MAX; edges.len()];
        let mut minus = vec![usize::MAX; edges.len()];
        for (c, ce) in cell_edges.iter().enumerate() {
            for &(e, s) in ce {
                if s > 0.0 {
                    plus[e] = c;
                } else {
                    minus[e] = c;
                }
            }
        }
        let edge_cells: Vec<(usize, usize)> = plus.into_iter().zip(minus).collect();
        debug_assert!(edge_cells
            .iter()
            .all(|&(p, m)| p != usize::MAX && m != usize::MAX));

        let mut node_id = vec![usize::MAX; m * m * m];
        let mut nodes = Vec::new();
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    if on_boundary([i, j, k], n) {
                        node_id[i + m * (j + m * k)] = nodes.len();
                        nodes.push([i, j, k]);
                    }
                }
            }
        }
        let mut node_edges = vec![Vec::new(); nodes.len()];
        for (e, edge) in edges.iter().enumerate() {
            let a = edge.p;
            let mut b = a;
            b[edge.axis] += 1;
            node_edges[node_id[a[0] + m * (a[1] + m * a[2])]].push((e, 1.0));
            node_edges[node_id[b[0] + m * (b[1] + m * b[2])]].push((e, -1.0));
        }
        SurfaceMesh {
            n,
            edges,
            edge_id,
            cell_edges,
            edge_cells,
            nodes,
            node_edges,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.cell_edges.len()
    }

    /// Index of the surface edge from `p` along `axis`, if it exists.
    pub fn edge_index(&self, p: [usize; 3], axis: usize) -> Option<usize> {
        let m = self.n + 1;
        if p.iter().any(|&c| c > self.n) || p[axis] >= self.n {
            return None;
        }
        let e = self.edge_id[axis + 3 * (p[0] + m * (p[1] + m * p[2]))];
        (e != usize::MAX).then_some(e)
    }

    /// Exterior derivative: edge circulations to cell values.
    pub fn d(&self, alpha: &[f64]) -> Vec<f64> {
        self.cell_edges
            .iter()
            .map(|ce| ce.iter().map(|&(e, s)| s * alpha[e]).sum())
            .collect()
    }

    /// Codifferential: net circulation leaving each node.
    pub fn codifferential(&self, alpha: &[f64]) -> Vec<f64> {
        self.node_edges
            .iter()
            .map(|ne| ne.iter().map(|&(e, s)| s * alpha[e]).sum())
            .collect()
    }

    /// Rotated gradient of a cell potential: `α(e) = ψ(forward cell) − ψ(backward cell)`.
    pub fn rotated_gradient(&self, psi: &[f64]) -> Vec<f64> {
        self.edge_cells
            .iter()
            .map(|&(p, m)| psi[p] - psi[m])
            .collect()
    }

    /// Graph Laplacian on the cell adjacency, equal to `d` of the rotated gradient.
    pub fn cell_laplacian(&self, psi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(p, m) in &self.edge_cells {
            let g = psi[p] - psi[m];
            out[p] += g;
            out[m] -= g;
        }
    }
}

/// Edge circulations of a 1-form on a cube surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary1Form {
    pub mesh: Arc<SurfaceMesh>,
    /// Side length of the cube.
    pub side: f64,
    pub values: Vec<f64>,
}

impl Boundary1Form {
    pub fn zeros(mesh: Arc<SurfaceMesh>, side: f64) -> Self {
        let values = vec![0.0; mesh.edges.len()];
        Boundary1Form { mesh, side, values }
    }

    pub fn d(&self) -> Vec<f64> {
        self.mesh.d(&self.values)
    }

    pub fn codifferential(&self) -> Vec<f64> {
        self.mesh.codifferential(&self.values)
    }

    /// Discrete L² norms of `dα − φ` and `d*α`.
    pub fn residuals(&self, target: &CubeFaceData) -> (f64, f64) {
        let f = target.cell_vector();
        let d = self.d();
        let r1 = d.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let r2 = self.codifferential().iter().map(|v| v * v).sum::<f64>().sqrt();
        (r1, r2)
    }
}

/// Co-closed 1-form `α` with `dα = φ` on the surface of one cube.
///
/// Solves the cell Poisson problem `Lψ = φ − mean(φ)` and returns the rotated
/// gradient of `ψ`, which is co-closed by construction.
pub fn gauge_fix(data: &CubeFaceData, int_tol: f64) -> Result<Boundary1Form> {
    gauge_fix_on(Arc::new(SurfaceMesh::new(data.n)), data, int_tol, 1e-13)
}

/// [`gauge_fix`] on a prebuilt mesh with an explicit solver tolerance.
pub fn gauge_fix_on(
    mesh: Arc<SurfaceMesh>,
    data: &CubeFaceData,
    int_tol: f64,
    solver_tol: f64,
) -> Result<Boundary1Form> {
    if mesh.n != data.n {
        return Err(Error::invalid("mesh resolution does not match the face data"));
    }
    let total = data.total();
    if total.abs() > int_tol {
        return Err(Error::NotExact { total, tol: int_tol });
    }
    let f = data.cell_vector();
    let mut psi = vec![0.0; f.len()];
    let m = mesh.clone();
    conjugate_gradient(
        |x, y| m.cell_laplacian(x, y),
        &f,
        &mut psi,
        solver_tol,
        20 * f.len() + 100,
        true,
    )?;
    let values = mesh.rotated_gradient(&psi);
    Ok(Boundary1Form {
        mesh,
        side: data.cube.side,
        values,
    })
}
