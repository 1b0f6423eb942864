//! Uniform P1 triangulation of the unit square and the piecewise-linear
//! calculus living on it.
//!
//! Node `(i, j)` sits at `(i h, j h)` and has index `j (n + 1) + i`. Cell
//! `(i, j)` is cut along the diagonal from its lower-left to its upper-right
//! corner; triangle `2 (j n + i)` is the lower-right half and `2 (j n + i) + 1`
//! the upper-left half.

use crate::error::{Error, Result};

/// A uniform triangulation of `[0, 1]^2` with `n` cells per side.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

/// Nodal values of a continuous piecewise-linear function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    values: Vec<f64>,
}

/// One constant 2-vector per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    n: usize,
    values: Vec<[f64; 2]>,
}

// Basis gradients (scaled by h) of the three local vertices.
const LOWER_GRADS: [[f64; 2]; 3] = [[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]];
const UPPER_GRADS: [[f64; 2]; 3] = [[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]];

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("grid needs n >= 2 cells per side, got {n}")));
        }
        let side = n + 1;
        let node = |i: usize, j: usize| j * side + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                triangles.push([node(i, j), node(i + 1, j), node(i + 1, j + 1)]);
                triangles.push([node(i, j), node(i + 1, j + 1), node(i, j + 1)]);
            }
        }
        let boundary = (0..side * side)
            .map(|k| {
                let (i, j) = (k % side, k / side);
                i == 0 || j == 0 || i == n || j == n
            })
            .collect();
        Ok(Self {
            n,
            h: 1.0 / n as f64,
            triangles,
            boundary,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Area of every triangle, `h^2 / 2`.
    pub fn triangle_area(&self) -> f64 {
        0.5 * self.h * self.h
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn node_coords(&self, node: usize) -> [f64; 2] {
        let side = self.n + 1;
        [(node % side) as f64 * self.h, (node / side) as f64 * self.h]
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &v in &self.triangles[t] {
            let x = self.node_coords(v);
            c[0] += x[0] / 3.0;
            c[1] += x[1] / 3.0;
        }
        c
    }

    /// Gradients of the three hat functions restricted to triangle `t`,
    /// in the vertex order of `triangles()[t]`.
    pub fn basis_gradients(&self, t: usize) -> [[f64; 2]; 3] {
        let table = if t.is_multiple_of(2) {
            &LOWER_GRADS
        } else {
            &UPPER_GRADS
        };
        let inv_h = 1.0 / self.h;
        table.map(|g| [g[0] * inv_h, g[1] * inv_h])
    }

    /// Indices of nodes off the boundary, in increasing order.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&k| !self.boundary[k]).collect()
    }

    pub fn scalar_from_fn(&self, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        let values = (0..self.num_nodes())
            .map(|k| {
                let [x, y] = self.node_coords(k);
                f(x, y)
            })
            .collect();
        ScalarField { n: self.n, values }
    }

    pub fn vector_from_fn(&self, f: impl Fn(f64, f64) -> [f64; 2]) -> VectorField {
        let values = (0..self.num_triangles())
            .map(|t| {
                let [x, y] = self.centroid(t);
                f(x, y)
            })
            .collect();
        VectorField { n: self.n, values }
    }

    pub fn zero_scalar(&self) -> ScalarField {
        ScalarField {
            n: self.n,
            values: vec![0.0; self.num_nodes()],
        }
    }

    pub fn zero_vector(&self) -> VectorField {
        VectorField {
            n: self.n,
            values: vec![[0.0; 2]; self.num_triangles()],
        }
    }

    pub fn scalar(&self, values: Vec<f64>) -> Result<ScalarField> {
        ScalarField::new(self.n, values)
    }

    pub fn vector(&self, values: Vec<[f64; 2]>) -> Result<VectorField> {
        VectorField::new(self.n, values)
    }

    /// Per-triangle gradient of the piecewise-linear interpolant of `u`.
    pub fn gradient(&self, u: &ScalarField) -> VectorField {
        debug_assert_eq!(u.n, self.n);
        let values = (0..self.num_triangles())
            .map(|t| {
                let grads = self.basis_gradients(t);
                let mut g = [0.0; 2];
                for (&v, bg) in self.triangles[t].iter().zip(&grads) {
                    g[0] += u.values[v] * bg[0];
                    g[1] += u.values[v] * bg[1];
                }
                g
            })
            .collect();
        VectorField { n: self.n, values }
    }

    /// Nodal functional `w -> int <F, grad w>`, one entry per hat function.
    ///
    /// Boundary entries are populated as well; callers working with
    /// zero-boundary test functions ignore them.
    pub fn divergence_weak(&self, field: &VectorField) -> ScalarField {
        debug_assert_eq!(field.n, self.n);
        let area = self.triangle_area();
        let mut r = vec![0.0; self.num_nodes()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let f = field.values[t];
            let grads = self.basis_gradients(t);
            for (&v, bg) in tri.iter().zip(&grads) {
                r[v] += area * (f[0] * bg[0] + f[1] * bg[1]);
            }
        }
        ScalarField { n: self.n, values: r }
    }

    /// Mean over the domain of per-triangle samples; `|Omega| = 1`.
    pub fn average_integral(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.num_triangles());
        self.triangle_area() * samples.iter().sum::<f64>()
    }

    /// `int <F, G>` for two per-triangle vector fields.
    pub fn inner(&self, a: &VectorField, b: &VectorField) -> f64 {
        let dots: Vec<f64> = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| x[0] * y[0] + x[1] * y[1])
            .collect();
        self.average_integral(&dots)
    }
}

impl ScalarField {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (n + 1) * (n + 1) {
            return Err(Error::invalid(format!(
                "scalar field on n = {n} needs {} values, got {}",
                (n + 1) * (n + 1),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("scalar field has non-finite entries"));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Euclidean pairing of nodal vectors.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn axpy(&self, a: f64, other: &ScalarField) -> ScalarField {
        ScalarField {
            n: self.n,
            values: self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn scale(&self, a: f64) -> ScalarField {
        ScalarField {
            n: self.n,
            values: self.values.iter().map(|v| a * v).collect(),
        }
    }
}

impl VectorField {
    pub fn new(n: usize, values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() != 2 * n * n {
            return Err(Error::invalid(format!(
                "vector field on n = {n} needs {} vectors, got {}",
                2 * n * n,
                values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("vector field has non-finite entries"));
        }
        Ok(Self { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    pub fn into_values(self) -> Vec<[f64; 2]> {
        self.values
    }

    /// Pointwise Euclidean length, one entry per triangle.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[0].hypot(v[1])).collect()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v[0].hypot(v[1])))
    }

    pub fn axpy(&self, a: f64, other: &VectorField) -> VectorField {
        VectorField {
            n: self.n,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| [x[0] + a * y[0], x[1] + a * y[1]])
                .collect(),
        }
    }

    pub fn scale(&self, a: f64) -> VectorField {
        VectorField {
            n: self.n,
            values: self.values.iter().map(|v| [a * v[0], a * v[1]]).collect(),
        }
    }

    /// Rotation by a quarter turn, `(x, y) -> (-y, x)`.
    pub fn perp(&self) -> VectorField {
        VectorField {
            n: self.n,
            values: self.values.iter().map(|v| [-v[1], v[0]]).collect(),
        }
    }

    /// `| |self| + |other| |` per triangle.
    pub fn magnitude_sum(&self, other: &VectorField) -> Vec<f64> {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a[0].hypot(a[1]) + b[0].hypot(b[1]))
            .collect()
    }

    /// `|self - other|` per triangle.
    pub fn difference_magnitudes(&self, other: &VectorField) -> Vec<f64> {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Gradient of the plane through the three vertices, from coordinates only.
    fn plane_fit(grid: &Grid, t: usize, u: &ScalarField) -> [f64; 2] {
        let [a, b, c] = grid.triangles()[t];
        let (pa, pb, pc) = (grid.node_coords(a), grid.node_coords(b), grid.node_coords(c));
        let (ua, ub, uc) = (u.values()[a], u.values()[b], u.values()[c]);
        let (x1, y1) = (pb[0] - pa[0], pb[1] - pa[1]);
        let (x2, y2) = (pc[0] - pa[0], pc[1] - pa[1]);
        let det = x1 * y2 - x2 * y1;
        let (d1, d2) = (ub - ua, uc - ua);
        [(d1 * y2 - d2 * y1) / det, (x1 * d2 - x2 * d1) / det]
    }

    #[test]
    fn counts_and_boundary() {
        let g = Grid::new(2).unwrap();
        assert_eq!(g.num_nodes(), 9);
        assert_eq!(g.num_triangles(), 8);
        assert_eq!(g.boundary_mask().iter().filter(|&&b| b).count(), 8);
        let g = Grid::new(4).unwrap();
        assert_eq!((g.num_nodes(), g.num_triangles()), (25, 32));
        let g = Grid::new(128).unwrap();
        assert_eq!(g.num_nodes(), 16641);
        let total = g.average_integral(&vec![1.0; g.num_triangles()]);
        assert!((total - 1.0).abs() < 1e-12);
        for k in 0..g.num_nodes() {
            let [x, y] = g.node_coords(k);
            let on = x == 0.0 || y == 0.0 || (x - 1.0).abs() < 1e-15 || (y - 1.0).abs() < 1e-15;
            assert_eq!(on, g.is_boundary(k));
        }
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(matches!(Grid::new(1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn triangle_areas_match_orientation() {
        let g = Grid::new(5).unwrap();
        for tri in g.triangles() {
            let [a, b, c] = tri.map(|v| g.node_coords(v));
            let signed = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
            assert!((signed - g.triangle_area()).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_is_exact_for_affine() {
        let g = Grid::new(7).unwrap();
        let u = g.scalar_from_fn(|x, y| 3.0 * x + 2.0 * y - 1.0);
        for v in g.gradient(&u).values() {
            assert!((v[0] - 3.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12);
        }
        let c = g.scalar_from_fn(|_, _| 4.2);
        assert!(g.gradient(&c).max_magnitude() == 0.0);
    }

    #[test]
    fn gradient_matches_plane_fit() {
        let g = Grid::new(8).unwrap();
        let u = g.scalar_from_fn(|x, y| x * y);
        let grad = g.gradient(&u);
        for t in 0..g.num_triangles() {
            let fit = plane_fit(&g, t, &u);
            let v = grad.values()[t];
            assert!((v[0] - fit[0]).abs() < 1e-13 && (v[1] - fit[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn adjointness_against_direct_quadrature() {
        let g = Grid::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = g
            .vector(
                (0..g.num_triangles())
                    .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
                    .collect(),
            )
            .unwrap();
        let r = g.divergence_weak(&f);
        for _ in 0..10 {
            let vals = (0..g.num_nodes())
                .map(|k| {
                    if g.is_boundary(k) {
                        0.0
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect();
            let u = g.scalar(vals).unwrap();
            let direct: f64 = (0..g.num_triangles())
                .map(|t| {
                    let d = plane_fit(&g, t, &u);
                    g.triangle_area() * (f.values()[t][0] * d[0] + f.values()[t][1] * d[1])
                })
                .sum();
            assert!((r.dot(&u) - direct).abs() < 1e-13, "{} vs {}", r.dot(&u), direct);
        }
    }

    #[test]
    fn weak_divergence_of_gradient_pairs_to_dirichlet_energy() {
        let g = Grid::new(6).unwrap();
        let u = g.scalar_from_fn(|x, y| (3.0 * x).sin() * y * y);
        let grad = g.gradient(&u);
        let lhs = g.divergence_weak(&grad).dot(&u);
        assert!((lhs - g.inner(&grad, &grad)).abs() < 1e-12);
        assert_eq!(g.divergence_weak(&g.zero_vector()).max_abs(), 0.0);
    }

    #[test]
    fn averages() {
        let g = Grid::new(4).unwrap();
        let m = g.num_triangles();
        assert!((g.average_integral(&vec![2.5; m]) - 2.5).abs() < 1e-15);
        let half: Vec<f64> = (0..m).map(|t| if t < m / 2 { 3.0 } else { 0.0 }).collect();
        assert!((g.average_integral(&half) - 1.5).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
        let direct: f64 = s.iter().map(|v| v * g.triangle_area()).sum();
        assert!((g.average_integral(&s) - direct).abs() < 1e-14);
    }

    #[test]
    fn field_invariants_enforced() {
        assert!(ScalarField::new(2, vec![0.0; 8]).is_err());
        assert!(ScalarField::new(2, vec![f64::NAN; 9]).is_err());
        assert!(VectorField::new(2, vec![[0.0; 2]; 7]).is_err());
    }
}
