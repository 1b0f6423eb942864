//! Sparse symmetric systems on the interior nodes: assembly and Jacobi-PCG.

use crate::grid::Grid;

/// Compressed sparse row matrix with a fixed pattern.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        self.row_ptr[i] + row.binary_search(&j).expect("entry outside sparsity pattern")
    }
}

/// Maps grid nodes to unknowns (interior nodes only) and assembles
/// element matrices into a CSR pattern shared across assemblies.
#[derive(Debug, Clone)]
pub struct InteriorSystem {
    dof_of_node: Vec<Option<usize>>,
    node_of_dof: Vec<usize>,
    pattern: CsrMatrix,
}

impl InteriorSystem {
    pub fn new(grid: &Grid) -> Self {
        let node_of_dof = grid.interior_nodes();
        let mut dof_of_node = vec![None; grid.num_nodes()];
        for (d, &v) in node_of_dof.iter().enumerate() {
            dof_of_node[v] = Some(d);
        }
        let n = node_of_dof.len();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in grid.triangles() {
            for &a in tri {
                let Some(i) = dof_of_node[a] else { continue };
                for &b in tri {
                    if let Some(j) = dof_of_node[b] {
                        rows[i].push(j);
                    }
                }
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        Self {
            dof_of_node,
            node_of_dof,
            pattern: CsrMatrix { n, row_ptr, cols, vals },
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.node_of_dof.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn node(&self, dof: usize) -> usize {
        self.node_of_dof[dof]
    }

    /// Restricts a nodal vector to the unknowns.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.node_of_dof.iter().map(|&v| nodal[v]).collect()
    }

    /// Writes unknowns back into a nodal vector, leaving boundary nodes untouched.
    pub fn scatter(&self, dofs: &[f64], nodal: &mut [f64]) {
        for (d, &v) in self.node_of_dof.iter().enumerate() {
            nodal[v] = dofs[d];
        }
    }

    /// Assembles `sum_T area * grad(phi_i)^T M_T grad(phi_j)` over interior pairs,
    /// where `tensor(t)` returns the symmetric 2x2 matrix `M_T` as `[xx, xy, yy]`.
    pub fn assemble(&self, grid: &Grid, tensor: impl Fn(usize) -> [f64; 3]) -> CsrMatrix {
        let mut m = self.pattern.clone();
        let area = grid.triangle_area();
        for (t, tri) in grid.triangles().iter().enumerate() {
            let [xx, xy, yy] = tensor(t);
            let grads = grid.basis_gradients(t);
            for (a, ga) in tri.iter().zip(&grads) {
                let Some(i) = self.dof_of_node[*a] else { continue };
                let mg = [xx * ga[0] + xy * ga[1], xy * ga[0] + yy * ga[1]];
                for (b, gb) in tri.iter().zip(&grads) {
                    if let Some(j) = self.dof_of_node[*b] {
                        let k = m.slot(i, j);
                        m.vals[k] += area * (mg[0] * gb[0] + mg[1] * gb[1]);
                    }
                }
            }
        }
        m
    }

    /// The P1 Laplace stiffness matrix.
    pub fn laplacian(&self, grid: &Grid) -> CsrMatrix {
        self.assemble(grid, |_| [1.0, 0.0, 1.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CgFailure {
    /// Non-positive curvature `p^T A p` met; the operator is not SPD.
    NotPositiveDefinite,
    MaxIterations {
        residual: f64,
    },
}

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients; stops when `||b - A x|| <= rel_tol ||b||`.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<CgOutcome, CgFailure> {
    let n = a.dim();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.mul_vec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut res = norm2(&r) / bnorm;
    for it in 0..=max_iter {
        if res <= rel_tol {
            return Ok(CgOutcome {
                iterations: it,
                relative_residual: res,
            });
        }
        if it == max_iter {
            break;
        }
        a.mul_vec(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(CgFailure::NotPositiveDefinite);
        }
        let step = rz / curvature;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        res = norm2(&r) / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(CgFailure::MaxIterations { residual: res })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_is_the_five_point_stencil() {
        let grid = Grid::new(4).unwrap();
        let sys = InteriorSystem::new(&grid);
        let k = sys.laplacian(&grid);
        assert_eq!(k.dim(), 9);
        assert!(k.diagonal().iter().all(|&d| (d - 4.0).abs() < 1e-14));
        let mut y = vec![0.0; 9];
        k.mul_vec(&[1.0; 9], &mut y);
        // row sums: 4 minus one per interior neighbour
        let center = sys.dof(12).unwrap();
        assert!(y[center].abs() < 1e-14);
        let corner = sys.dof(6).unwrap();
        assert!((y[corner] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pcg_solves_spd_system() {
        let grid = Grid::new(16).unwrap();
        let sys = InteriorSystem::new(&grid);
        let k = sys.laplacian(&grid);
        let x_true: Vec<f64> = (0..k.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; k.dim()];
        k.mul_vec(&x_true, &mut b);
        let mut x = vec![0.0; k.dim()];
        let out = pcg(&k, &b, &mut x, 1e-13, 10_000).unwrap();
        assert!(out.relative_residual <= 1e-13);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pcg_detects_indefinite_operator() {
        let grid = Grid::new(4).unwrap();
        let sys = InteriorSystem::new(&grid);
        let k = sys.assemble(&grid, |_| [-1.0, 0.0, -1.0]);
        let mut x = vec![0.0; k.dim()];
        assert_eq!(
            pcg(&k, &vec![1.0; k.dim()], &mut x, 1e-12, 100).unwrap_err(),
            CgFailure::NotPositiveDefinite
        );
    }
}
