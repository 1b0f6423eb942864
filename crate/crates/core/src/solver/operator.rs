use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Symmetric 2x2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    pub fn quad(&self, v: [f64; 2]) -> f64 {
        let av = self.apply(v);
        av[0] * v[0] + av[1] * v[1]
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.xx + self.yy);
        let rad = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        [mean - rad, mean + rad]
    }

    /// Spectral norm of `self - I`.
    pub fn distance_from_identity(&self) -> f64 {
        let [lo, hi] = self.eigenvalues();
        (lo - 1.0).abs().max((hi - 1.0).abs())
    }
}

/// `A(x, xi) = (<A(x) xi, xi> + delta^2)^((p-2)/2) A(x) xi` with one matrix per triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    p: f64,
    matrices: Vec<Sym2>,
    a_ell: f64,
    b_ell: f64,
    delta_reg: f64,
}

impl OperatorSpec {
    /// Checks symmetry-by-construction, `p >= 2` and that every eigenvalue lies in
    /// `[a_ell^(2/p), b_ell^(2/p)]`.
    pub fn new(p: f64, matrices: Vec<Sym2>, a_ell: f64, b_ell: f64) -> Result<Self> {
        let spec = Self::new_unchecked(p, matrices, a_ell, b_ell)?;
        let (lo, hi) = (a_ell.powf(2.0 / p), b_ell.powf(2.0 / p));
        let slack = 1e-12;
        for (t, m) in spec.matrices.iter().enumerate() {
            let [e0, e1] = m.eigenvalues();
            if e0 < lo * (1.0 - slack) || e1 > hi * (1.0 + slack) {
                return Err(Error::invalid(format!(
                    "A on triangle {t} has eigenvalues ({e0}, {e1}) outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(spec)
    }

    /// Validates only `p` and the ellipticity constants, not the matrices.
    /// Used to probe the structure checks with deliberately bad data.
    pub fn new_unchecked(p: f64, matrices: Vec<Sym2>, a_ell: f64, b_ell: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::invalid(format!(
                "operator exponent must satisfy p >= 2, got {p}"
            )));
        }
        if !(a_ell > 0.0 && a_ell <= b_ell && b_ell.is_finite()) {
            return Err(Error::invalid(format!("need 0 < a <= b, got a = {a_ell}, b = {b_ell}")));
        }
        if matrices
            .iter()
            .any(|m| ![m.xx, m.xy, m.yy].iter().all(|v| v.is_finite()))
        {
            return Err(Error::invalid("matrix field has non-finite entries"));
        }
        Ok(Self {
            p,
            matrices,
            a_ell,
            b_ell,
            delta_reg: 0.0,
        })
    }

    /// The p-Laplacian: `A = I` everywhere, `a = b = 1`.
    pub fn identity(grid: &Grid, p: f64) -> Result<Self> {
        Self::new(p, vec![Sym2::IDENTITY; grid.num_triangles()], 1.0, 1.0)
    }

    /// A constant matrix on every triangle, with the tightest ellipticity bounds.
    pub fn constant(grid: &Grid, p: f64, m: Sym2) -> Result<Self> {
        let [lo, hi] = m.eigenvalues();
        if !(lo > 0.0) {
            return Err(Error::invalid("matrix must be positive definite"));
        }
        Self::new(p, vec![m; grid.num_triangles()], lo.powf(p / 2.0), hi.powf(p / 2.0))
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        assert!(delta >= 0.0);
        self.delta_reg = delta;
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn a_ell(&self) -> f64 {
        self.a_ell
    }

    pub fn b_ell(&self) -> f64 {
        self.b_ell
    }

    pub fn delta(&self) -> f64 {
        self.delta_reg
    }

    pub fn matrices(&self) -> &[Sym2] {
        &self.matrices
    }

    pub fn matrix(&self, t: usize) -> Sym2 {
        self.matrices[t]
    }

    pub fn num_triangles(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_identity(&self) -> bool {
        self.matrices.iter().all(|m| *m == Sym2::IDENTITY)
    }

    /// `A(x, xi)` on triangle `t` with this spec's `delta`.
    pub fn eval(&self, t: usize, xi: [f64; 2]) -> [f64; 2] {
        flux(self.p, self.matrices[t], xi, self.delta_reg)
    }
}

pub(crate) fn flux(p: f64, a: Sym2, xi: [f64; 2], delta: f64) -> [f64; 2] {
    let axi = a.apply(xi);
    let s = axi[0] * xi[0] + axi[1] * xi[1] + delta * delta;
    let w = if p == 2.0 { 1.0 } else { s.powf(0.5 * (p - 2.0)) };
    [w * axi[0], w * axi[1]]
}

/// Jacobian of `xi -> A(x, xi)` as `[xx, xy, yy]`.
pub(crate) fn flux_jacobian(p: f64, a: Sym2, xi: [f64; 2], delta: f64) -> [f64; 3] {
    let axi = a.apply(xi);
    let s = axi[0] * xi[0] + axi[1] * xi[1] + delta * delta;
    if p == 2.0 {
        return [a.xx, a.xy, a.yy];
    }
    if s == 0.0 {
        return [0.0; 3];
    }
    let w = s.powf(0.5 * (p - 2.0));
    let c = (p - 2.0) * w / s;
    [
        w * a.xx + c * axi[0] * axi[0],
        w * a.xy + c * axi[0] * axi[1],
        w * a.yy + c * axi[1] * axi[1],
    ]
}

pub fn operator_eval(spec: &OperatorSpec, t: usize, xi: [f64; 2]) -> [f64; 2] {
    spec.eval(t, xi)
}

/// `K_A = max_T (1 + |A_T - I|)^(p/2)` with the spectral norm.
pub fn characteristic(spec: &OperatorSpec) -> f64 {
    spec.matrices
        .iter()
        .map(|m| (1.0 + m.distance_from_identity()).powf(0.5 * spec.p))
        .fold(1.0, f64::max)
}

/// Empirical constants of the structure conditions over random samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    pub samples: usize,
    /// `min <A(xi), xi> / |xi|^p`.
    pub coercivity: f64,
    /// `min <A(xi) - A(eta), xi - eta> / (|xi - eta|^2 (|xi| + |eta|)^(p-2))`.
    pub monotonicity: f64,
    /// `max |A(xi) - A(eta)| / (|xi - eta| (|xi| + |eta|)^(p-2))`.
    pub lipschitz: f64,
    /// `lipschitz / b`: the factor the growth condition needs on top of `b`.
    pub growth_factor: f64,
}

/// Samples the coercivity, growth and monotonicity conditions at `delta = 0`.
///
/// Coercivity is asserted with constant `a`. Monotonicity is asserted with
/// `2^(2-p) a`, the sharp constant for the matrix-power form (attained at
/// `eta = -xi` for `A = I`). The growth constant is only reported.
pub fn structure_check(spec: &OperatorSpec, samples: usize, seed: u64) -> Result<StructureReport> {
    if spec.delta_reg != 0.0 {
        return Err(Error::invalid("structure check needs delta = 0"));
    }
    let p = spec.p;
    let slack = 1e-12;
    let mono_bound = 2f64.powf(2.0 - p) * spec.a_ell;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_vec = |rng: &mut ChaCha8Rng| {
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        let r = 10f64.powf(rng.random_range(-3.0..3.0));
        [r * theta.cos(), r * theta.sin()]
    };
    let mut report = StructureReport {
        samples,
        coercivity: f64::INFINITY,
        monotonicity: f64::INFINITY,
        lipschitz: 0.0,
        growth_factor: 0.0,
    };
    for k in 0..samples {
        let t = rng.random_range(0..spec.matrices.len());
        let a = spec.matrices[t];
        let xi = random_vec(&mut rng);
        let eta = match k % 4 {
            0 => [-xi[0], -xi[1]],
            1 => {
                let c = rng.random_range(-2.0..2.0);
                [c * xi[0], c * xi[1]]
            }
            _ => random_vec(&mut rng),
        };
        let fx = flux(p, a, xi, 0.0);
        let fe = flux(p, a, eta, 0.0);
        let nx = xi[0].hypot(xi[1]);
        let ne = eta[0].hypot(eta[1]);
        let d = [xi[0] - eta[0], xi[1] - eta[1]];
        let nd = d[0].hypot(d[1]);

        let coer = (fx[0] * xi[0] + fx[1] * xi[1]) / nx.powf(p);
        if coer < spec.a_ell * (1.0 - slack) {
            return Err(Error::StructureViolation(format!(
                "coercivity: triangle {t}, xi = {xi:?}: ratio {coer} < a = {}",
                spec.a_ell
            )));
        }
        report.coercivity = report.coercivity.min(coer);
        if nd == 0.0 {
            continue;
        }
        let scale = nd * (nx + ne).powf(p - 2.0);
        let df = [fx[0] - fe[0], fx[1] - fe[1]];
        let mono = (df[0] * d[0] + df[1] * d[1]) / (nd * scale);
        if mono < mono_bound * (1.0 - slack) {
            return Err(Error::StructureViolation(format!(
                "monotonicity: triangle {t}, xi = {xi:?}, eta = {eta:?}: ratio {mono} < 2^(2-p) a = {mono_bound}"
            )));
        }
        report.monotonicity = report.monotonicity.min(mono);
        report.lipschitz = report.lipschitz.max(df[0].hypot(df[1]) / scale);
    }
    report.growth_factor = report.lipschitz / spec.b_ell;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_flux() {
        let g = Grid::new(2).unwrap();
        let s2 = OperatorSpec::identity(&g, 2.0).unwrap();
        assert_eq!(s2.eval(0, [0.3, -1.2]), [0.3, -1.2]);
        let s4 = OperatorSpec::identity(&g, 4.0).unwrap();
        assert_eq!(s4.eval(3, [1.0, 0.0]), [1.0, 0.0]);
        assert_eq!(s4.eval(3, [0.0, 0.0]), [0.0, 0.0]);
        let s3 = OperatorSpec::identity(&g, 3.0).unwrap();
        assert_eq!(s3.eval(1, [0.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn flux_matches_independent_recomputation() {
        // Rebuild A from its eigen-decomposition and take the power through exp/ln.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let l0: f64 = rng.random_range(0.3..2.0);
            let l1: f64 = rng.random_range(0.3..2.0);
            let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let (c, s) = (th.cos(), th.sin());
            let a = Sym2::new(l0 * c * c + l1 * s * s, (l0 - l1) * c * s, l0 * s * s + l1 * c * c);
            let xi = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let p = rng.random_range(2.0..6.0);
            let got = flux(p, a, xi, 0.0);
            let axi = [a.xx * xi[0] + a.xy * xi[1], a.xy * xi[0] + a.yy * xi[1]];
            let terms = [axi[0] * xi[0], axi[1] * xi[1]];
            let q = terms[0] + terms[1];
            let w = ((p - 2.0) / 2.0 * q.ln()).exp();
            for k in 0..2 {
                assert!((got[k] - w * axi[k]).abs() <= 1e-13 * (w * axi[k]).abs().max(1e-300));
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let a = Sym2::new(1.3, 0.2, 0.8);
        for p in [2.0, 3.0, 4.5] {
            let xi = [0.7, -0.4];
            let j = flux_jacobian(p, a, xi, 0.1);
            let h = 1e-6;
            for (col, e) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
                let fp = flux(p, a, [xi[0] + h * e[0], xi[1] + h * e[1]], 0.1);
                let fm = flux(p, a, [xi[0] - h * e[0], xi[1] - h * e[1]], 0.1);
                let fd = [(fp[0] - fm[0]) / (2.0 * h), (fp[1] - fm[1]) / (2.0 * h)];
                let exact = if col == 0 { [j[0], j[1]] } else { [j[1], j[2]] };
                assert!((fd[0] - exact[0]).abs() < 1e-7 && (fd[1] - exact[1]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn characteristic_values() {
        let g = Grid::new(4).unwrap();
        assert_eq!(characteristic(&OperatorSpec::identity(&g, 3.0).unwrap()), 1.0);
        let d0 = 0.3;
        let spec = OperatorSpec::constant(&g, 4.0, Sym2::diag(1.0 + d0, 1.0)).unwrap();
        assert!((characteristic(&spec) - (1.0 + d0).powi(2)).abs() < 1e-14);
        // spatially varying: brute-force over triangles
        let mats: Vec<Sym2> = (0..g.num_triangles())
            .map(|t| Sym2::new(1.0 + 0.01 * t as f64, 0.05, 1.0 - 0.002 * t as f64))
            .collect();
        let spec = OperatorSpec::new_unchecked(3.0, mats.clone(), 0.1, 10.0).unwrap();
        let brute = mats
            .iter()
            .map(|m| {
                let d = Sym2::new(m.xx - 1.0, m.xy, m.yy - 1.0);
                let [lo, hi] = d.eigenvalues();
                (1.0 + lo.abs().max(hi.abs())).powf(1.5)
            })
            .fold(0.0, f64::max);
        assert!((characteristic(&spec) - brute).abs() < 1e-14);
        let mut rev = mats;
        rev.reverse();
        let spec_rev = OperatorSpec::new_unchecked(3.0, rev, 0.1, 10.0).unwrap();
        assert_eq!(characteristic(&spec), characteristic(&spec_rev));
    }

    #[test]
    fn structure_of_p_laplacian() {
        let g = Grid::new(2).unwrap();
        let r = structure_check(&OperatorSpec::identity(&g, 2.0).unwrap(), 10_000, 1).unwrap();
        assert!((r.monotonicity - 1.0).abs() < 1e-12);
        let r = structure_check(&OperatorSpec::identity(&g, 3.0).unwrap(), 100_000, 2).unwrap();
        assert!(r.coercivity >= 1.0 - 1e-12);
        assert!(r.monotonicity >= 0.5 - 1e-12);
        assert!(r.growth_factor.is_finite() && r.growth_factor > 0.0);
    }

    #[test]
    fn structure_violation_is_reported() {
        let g = Grid::new(2).unwrap();
        // eigenvalue 0.5 < a^(2/p) = 1
        let spec = OperatorSpec::new_unchecked(3.0, vec![Sym2::diag(0.5, 1.0); g.num_triangles()], 1.0, 1.0).unwrap();
        assert!(matches!(
            structure_check(&spec, 10_000, 3),
            Err(Error::StructureViolation(_))
        ));
        assert!(OperatorSpec::new(3.0, vec![Sym2::diag(0.5, 1.0); g.num_triangles()], 1.0, 1.0).is_err());
    }

    #[test]
    fn spec_validation() {
        let g = Grid::new(2).unwrap();
        assert!(OperatorSpec::identity(&g, 1.5).is_err());
        assert!(OperatorSpec::new_unchecked(3.0, vec![], 2.0, 1.0).is_err());
    }
}
