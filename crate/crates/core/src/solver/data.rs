//! Rough data generators and the truncation scheme `f_n = f min(1, n / |f|)`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};
use crate::norms::ZygmundParams;

#[derive(Debug, Clone, PartialEq)]
pub enum RoughKind {
    /// `|x - x0|^(-beta) log^(-s)(e + 1/|x - x0|) (x - x0)/|x - x0|` at centroids.
    PointSingularity { x0: [f64; 2], beta: f64, s: f64 },
    /// Radial field of magnitude `e^(1/eps)` on the triangles nearest the centre,
    /// covering (at least) measure `1 / Phi(e^(1/eps))` for `Phi` of `(q, alpha)`.
    CounterexampleLift { eps: f64, q: f64, alpha: f64 },
    /// Random trigonometric polynomial of degree `modes` with unit-scale coefficients.
    SmoothRandom { seed: u64, modes: usize, amplitude: f64 },
}

impl RoughKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::PointSingularity { .. } => "point-singularity",
            Self::CounterexampleLift { .. } => "counterexample-lift",
            Self::SmoothRandom { .. } => "smooth-random",
        }
    }

    pub fn point_singularity(beta: f64, s: f64) -> Self {
        Self::PointSingularity {
            x0: [0.5, 0.5],
            beta,
            s,
        }
    }

    pub fn smooth_random(seed: u64) -> Self {
        Self::SmoothRandom {
            seed,
            modes: 3,
            amplitude: 1.0,
        }
    }
}

impl fmt::Display for RoughKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PointSingularity { x0, beta, s } => {
                write!(f, "point-singularity:beta={beta},s={s},x0={},y0={}", x0[0], x0[1])
            }
            Self::CounterexampleLift { eps, q, alpha } => {
                write!(f, "counterexample-lift:eps={eps},q={q},alpha={alpha}")
            }
            Self::SmoothRandom { seed, modes, amplitude } => {
                write!(f, "smooth-random:seed={seed},modes={modes},amplitude={amplitude}")
            }
        }
    }
}

/// Parses `kind[:key=value,...]`; omitted keys take the defaults of the constructors.
impl FromStr for RoughKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut pairs = Vec::new();
        for item in rest.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value in rough-field spec, got `{item}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad number `{v}` for `{k}`")))?;
            pairs.push((k.trim().to_string(), v));
        }
        let mut take = |key: &str, default: f64| -> f64 {
            match pairs.iter().position(|(k, _)| k == key) {
                Some(i) => pairs.swap_remove(i).1,
                None => default,
            }
        };
        let parsed = match kind.trim() {
            "point-singularity" => Self::PointSingularity {
                beta: take("beta", 0.5),
                s: take("s", 0.0),
                x0: [take("x0", 0.5), take("y0", 0.5)],
            },
            "counterexample-lift" => Self::CounterexampleLift {
                eps: take("eps", 0.1),
                q: take("q", 1.5),
                alpha: take("alpha", 1.0),
            },
            "smooth-random" => {
                let seed = take("seed", 0.0);
                let modes = take("modes", 3.0);
                if seed < 0.0 || seed.fract() != 0.0 || modes < 1.0 || modes.fract() != 0.0 {
                    return Err(Error::invalid(
                        "seed and modes must be non-negative integers, modes >= 1",
                    ));
                }
                Self::SmoothRandom {
                    seed: seed as u64,
                    modes: modes as usize,
                    amplitude: take("amplitude", 1.0),
                }
            }
            other => return Err(Error::invalid(format!("unknown rough-field kind `{other}`"))),
        };
        if let Some((k, _)) = pairs.first() {
            return Err(Error::invalid(format!("unknown parameter `{k}` for {}", parsed.name())));
        }
        Ok(parsed)
    }
}

pub fn rough_field(kind: &RoughKind, grid: &Grid) -> Result<VectorField> {
    match *kind {
        RoughKind::PointSingularity { x0, beta, s } => {
            if !(beta.is_finite() && s.is_finite() && x0.iter().all(|c| c.is_finite())) {
                return Err(Error::invalid("point-singularity parameters must be finite"));
            }
            grid.vector(
                (0..grid.num_triangles())
                    .map(|t| {
                        let c = grid.centroid(t);
                        let d = [c[0] - x0[0], c[1] - x0[1]];
                        let r = d[0].hypot(d[1]);
                        let m = r.powf(-beta) * (std::f64::consts::E + 1.0 / r).ln().powf(-s) / r;
                        [m * d[0], m * d[1]]
                    })
                    .collect(),
            )
        }
        RoughKind::CounterexampleLift { eps, q, alpha } => {
            let params = ZygmundParams::with_defaults(q, alpha)?;
            if !(eps > 0.0) {
                return Err(Error::invalid(format!("eps must be positive, got {eps}")));
            }
            let level = 1.0 / eps;
            if level > 700.0 {
                return Err(Error::invalid(format!("e^(1/eps) overflows for eps = {eps}")));
            }
            let measure = (-params.log_phi(level)).exp();
            let count = ((measure / grid.triangle_area()).ceil() as usize).clamp(1, grid.num_triangles());
            let mut order: Vec<(f64, usize)> = (0..grid.num_triangles())
                .map(|t| {
                    let c = grid.centroid(t);
                    ((c[0] - 0.5).hypot(c[1] - 0.5), t)
                })
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut values = vec![[0.0, 0.0]; grid.num_triangles()];
            let mag = level.exp();
            for &(r, t) in order.iter().take(count) {
                let c = grid.centroid(t);
                values[t] = [mag * (c[0] - 0.5) / r, mag * (c[1] - 0.5) / r];
            }
            grid.vector(values)
        }
        RoughKind::SmoothRandom { seed, modes, amplitude } => {
            if !amplitude.is_finite() || modes == 0 {
                return Err(Error::invalid("smooth-random needs finite amplitude and modes >= 1"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut terms = Vec::with_capacity(modes * modes);
            for k in 1..=modes {
                for l in 1..=modes {
                    let decay = 1.0 / (k * k + l * l) as f64;
                    let cx: f64 = rng.random_range(-1.0..1.0);
                    let cy: f64 = rng.random_range(-1.0..1.0);
                    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    terms.push((
                        k as f64,
                        l as f64,
                        amplitude * decay * cx,
                        amplitude * decay * cy,
                        phase,
                    ));
                }
            }
            Ok(grid.vector_from_fn(|x, y| {
                terms.iter().fold([0.0, 0.0], |acc, &(k, l, cx, cy, ph)| {
                    let w = (std::f64::consts::PI * (k * x + l * y) + ph).cos();
                    [acc[0] + cx * w, acc[1] + cy * w]
                })
            }))
        }
    }
}

/// Caps `|f|` at `level` per triangle, keeping directions.
pub fn approximation_sequence(f: &VectorField, level: f64) -> Result<VectorField> {
    if !(level >= 1.0) {
        return Err(Error::invalid(format!("truncation level must be >= 1, got {level}")));
    }
    VectorField::new(
        f.n(),
        f.values()
            .iter()
            .map(|v| {
                let m = v[0].hypot(v[1]);
                if m > level {
                    let s = level / m;
                    [s * v[0], s * v[1]]
                } else {
                    *v
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_random_is_reproducible() {
        let g = Grid::new(8).unwrap();
        let a = rough_field(&RoughKind::smooth_random(7), &g).unwrap();
        let b = rough_field(&RoughKind::smooth_random(7), &g).unwrap();
        let c = rough_field(&RoughKind::smooth_random(8), &g).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn point_singularity_shape() {
        let g = Grid::new(16).unwrap();
        let f = rough_field(&RoughKind::point_singularity(0.0, 0.0), &g).unwrap();
        for m in f.magnitudes() {
            assert!((m - 1.0).abs() < 1e-14);
        }
        let f = rough_field(&RoughKind::point_singularity(1.0, 1.0), &g).unwrap();
        let t = (0..g.num_triangles())
            .max_by(|&a, &b| f.magnitudes()[a].total_cmp(&f.magnitudes()[b]))
            .unwrap();
        let c = g.centroid(t);
        let r = (c[0] - 0.5).hypot(c[1] - 0.5);
        assert!(r < 2.0 * g.h());
        let expected = 1.0 / (r * (std::f64::consts::E + 1.0 / r).ln());
        assert!((f.magnitudes()[t] - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn counterexample_lift_covers_required_measure() {
        let g = Grid::new(32).unwrap();
        let f = rough_field(
            &RoughKind::CounterexampleLift {
                eps: 0.5,
                q: 1.5,
                alpha: 1.0,
            },
            &g,
        )
        .unwrap();
        let params = ZygmundParams::with_defaults(1.5, 1.0).unwrap();
        let support = f.magnitudes().iter().filter(|&&m| m > 0.0).count() as f64 * g.triangle_area();
        let target = 1.0 / params.phi(2f64.exp());
        assert!(support >= target && support < target + g.triangle_area());
        assert!(f
            .magnitudes()
            .iter()
            .all(|&m| m == 0.0 || (m - 2f64.exp()).abs() < 1e-12));
    }

    #[test]
    fn parse_round_trips() {
        for k in [
            RoughKind::point_singularity(0.25, 1.0),
            RoughKind::CounterexampleLift {
                eps: 0.2,
                q: 1.5,
                alpha: 3.0,
            },
            RoughKind::SmoothRandom {
                seed: 3,
                modes: 2,
                amplitude: 0.5,
            },
        ] {
            assert_eq!(k.to_string().parse::<RoughKind>().unwrap(), k);
        }
        assert_eq!(
            "smooth-random".parse::<RoughKind>().unwrap(),
            RoughKind::smooth_random(0)
        );
        assert!("sawtooth".parse::<RoughKind>().is_err());
        assert!("point-singularity:gamma=1".parse::<RoughKind>().is_err());
        assert!("smooth-random:seed=1.5".parse::<RoughKind>().is_err());
    }

    #[test]
    fn truncation_caps_and_preserves_direction() {
        let f = VectorField::new(
            2,
            vec![
                [6.0, 8.0],
                [0.3, -0.4],
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 3.0],
                [2.0, 0.0],
                [0.0, 0.0],
                [1.0, 1.0],
            ],
        )
        .unwrap();
        let t = approximation_sequence(&f, 2.0).unwrap();
        let v = t.values()[0];
        assert!((v[0] - 1.2).abs() < 1e-15 && (v[1] - 1.6).abs() < 1e-15);
        assert_eq!(t.values()[1], [0.3, -0.4]);
        assert_eq!(t.values()[4], [0.0, 2.0]);
        assert_eq!(approximation_sequence(&f, 100.0).unwrap(), f);
        assert!(approximation_sequence(&f, 0.5).is_err());
    }
}
