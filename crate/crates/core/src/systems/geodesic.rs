//! Geodesic flow on a genus-2 hyperbolic surface, realized on `Γ\PSL(2,ℝ)`.
//!
//! `Γ` is generated by the side pairings of the regular octagon with interior
//! angles `π/4`, centered at `i` in the upper half-plane. Points are matrices
//! acting on the left by `Γ`; the time-1 map is right multiplication by
//! `a₁ = diag(e^{1/2}, e^{−1/2})`.
//!
//! In the left-invariant frame `(N⁺, A, N⁻)` the derivative of `p ↦ p·a₁` is
//! `Ad(a₁⁻¹) = diag(e^{−1}, 1, e)`, independent of the point.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::splitting::{Dims, FrameMatrix, SplittingSpec};

use super::{check_non_periodic, DiffMap, LocalChart, PartiallyHyperbolicSystem};

const DIMS: Dims = Dims::new(1, 1, 1);
const MAX_REDUCTIONS: usize = 1000;
/// Chart boxes must stay this far inside the inscribed disk of the octagon.
const CHART_MARGIN: f64 = 0.05;

pub type M2 = [[f64; 2]; 2];

pub fn mul(a: &M2, b: &M2) -> M2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn det(a: &M2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Inverse of a determinant-one matrix.
pub fn inv(a: &M2) -> M2 {
    [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
}

fn frob2(a: &M2) -> f64 {
    a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1]
}

/// Hyperbolic distance from `a·i` to `i`; `‖a‖_F² = 2 cosh d`.
pub fn displacement(a: &M2) -> f64 {
    (frob2(a) / 2.0).max(1.0).acosh()
}

fn rotation(theta: f64) -> M2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c, s], [-s, c]]
}

fn n_plus(w: f64) -> M2 {
    [[1.0, w], [0.0, 1.0]]
}

fn n_minus(z: f64) -> M2 {
    [[1.0, 0.0], [z, 1.0]]
}

fn a_t(y: f64) -> M2 {
    [[(y / 2.0).exp(), 0.0], [0.0, (-y / 2.0).exp()]]
}

/// Point of the unit tangent bundle, as a reduced representative in `SL(2,ℝ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub m: M2,
}

impl GeoPoint {
    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0], [0.0, 1.0]] }
    }
}

#[derive(Debug, Clone)]
pub struct GeodesicSurface {
    /// `g₀..g₃` followed by their inverses.
    generators: Vec<M2>,
    inradius: f64,
    a1: M2,
}

impl GeodesicSurface {
    pub fn new() -> Result<Self> {
        // Regular octagon with angles π/4: cosh(inradius) = cot(π/8) = 1 + √2.
        let inradius = (1.0 + 2f64.sqrt()).acosh();
        let t = a_t(2.0 * inradius);
        let mut gens: Vec<M2> = (0..4)
            .map(|k| {
                let r = rotation(k as f64 * PI / 4.0);
                mul(&mul(&r, &t), &inv(&r))
            })
            .collect();
        let inverses: Vec<M2> = gens.iter().map(inv).collect();
        gens.extend(inverses);
        let sys = Self { generators: gens, inradius, a1: a_t(1.0) };
        for g in &sys.generators {
            if (det(g) - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidSystem(format!("generator determinant {}", det(g))));
            }
        }
        let rel = sys.relator();
        let err = (rel[0][0].abs() - 1.0).abs().max(rel[0][1].abs()).max(rel[1][0].abs()).max((rel[1][1].abs() - 1.0).abs());
        if err > 1e-8 {
            return Err(Error::InvalidSystem(format!("octagon relation residual {err:e}")));
        }
        Ok(sys)
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn generators(&self) -> &[M2] {
        &self.generators
    }

    /// `k(φ)·a(ρ)·k(θ)` reduced: the footpoint at distance `ρ` from the
    /// octagon center, with `φ` and `θ` rotation angles.
    pub fn polar_point(&self, phi: f64, rho: f64, theta: f64) -> Result<GeoPoint> {
        Ok(GeoPoint { m: self.reduce(&mul(&mul(&rotation(phi), &a_t(rho)), &rotation(theta)))? })
    }

    /// `g₀ g₁⁻¹ g₂ g₃⁻¹ g₀⁻¹ g₁ g₂⁻¹ g₃`, which equals `±I` in `Γ`.
    pub fn relator(&self) -> M2 {
        let g = |k: usize| self.generators[k];
        let gi = |k: usize| self.generators[k + 4];
        [g(0), gi(1), g(2), gi(3), gi(0), g(1), gi(2), g(3)]
            .iter()
            .fold([[1.0, 0.0], [0.0, 1.0]], |acc, m| mul(&acc, m))
    }

    /// Greedy reduction into the Dirichlet octagon centered at `i`.
    pub fn reduce(&self, p: &M2) -> Result<M2> {
        let mut p = *p;
        for _ in 0..MAX_REDUCTIONS {
            let current = frob2(&p);
            let best = self
                .generators
                .iter()
                .map(|g| mul(g, &p))
                .map(|q| (frob2(&q), q))
                .min_by(|a, b| a.0.total_cmp(&b.0))
                .expect("generator list is non-empty");
            if best.0 >= current * (1.0 - 1e-14) {
                return Ok(normalize(p));
            }
            p = renormalize(best.1);
        }
        Err(Error::ReductionDiverged(MAX_REDUCTIONS))
    }
}

/// Rescale to determinant one to arrest drift.
fn renormalize(p: M2) -> M2 {
    let d = det(&p);
    let s = 1.0 / d.abs().sqrt();
    [[p[0][0] * s, p[0][1] * s], [p[1][0] * s, p[1][1] * s]]
}

/// Choose the `PSL` sign with `m₁₁ ≥ 0` (ties broken on `m₁₀`).
fn normalize(p: M2) -> M2 {
    if p[1][1] < 0.0 || (p[1][1] == 0.0 && p[1][0] < 0.0) {
        [[-p[0][0], -p[0][1]], [-p[1][0], -p[1][1]]]
    } else {
        p
    }
}

impl DiffMap for GeodesicSurface {
    type Point = GeoPoint;

    fn dims(&self) -> Dims {
        DIMS
    }

    fn apply(&self, q: &GeoPoint) -> Result<GeoPoint> {
        Ok(GeoPoint { m: self.reduce(&mul(&q.m, &self.a1))? })
    }

    fn inverse(&self, q: &GeoPoint) -> Result<GeoPoint> {
        Ok(GeoPoint { m: self.reduce(&mul(&q.m, &inv(&self.a1)))? })
    }

    fn jacobian(&self, _q: &GeoPoint) -> FrameMatrix {
        FrameMatrix::from_diagonal(DIMS, &[(-1f64).exp(), 1.0, 1f64.exp()])
    }

    /// Poincaré-disk footpoint of `p·i` and the tangent angle there.
    fn coords(&self, q: &GeoPoint) -> Vec<f64> {
        let [[a, b], [c, d]] = q.m;
        // z = (a i + b)/(c i + d)
        let den = c * c + d * d;
        let (x, y) = ((a * c + b * d) / den, (a * d - b * c) / den);
        // disk point (z − i)/(z + i)
        let den2 = x * x + (y + 1.0) * (y + 1.0);
        let u = (x * x + y * y - 1.0) / den2;
        let v = (-2.0 * x) / den2;
        // derivative (c i + d)^{-2} applied to the vertical unit vector i
        let angle = PI / 2.0 - 2.0 * c.atan2(d);
        vec![u, v, angle.rem_euclid(2.0 * PI)]
    }
}

impl PartiallyHyperbolicSystem for GeodesicSurface {
    type Chart = GeoChart;

    fn name(&self) -> &'static str {
        "geodesic"
    }

    fn rates(&self) -> SplittingSpec {
        let e = 1f64.exp();
        SplittingSpec::new(DIMS, [1.0 / e, 1.0, e], [1.0 / e, 1.0, e], 1.0).expect("geodesic rates are ordered")
    }

    fn volume_preserving(&self) -> bool {
        true
    }

    fn chart_at(&self, q0: &GeoPoint, gamma: f64) -> Result<GeoChart> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::ChartTooLarge { gamma, reason: "radius must lie in (0, 1/2)".into() });
        }
        let base = self.reduce(&q0.m)?;
        let chart = GeoChart { p0: base, p0_inv: inv(&base), gamma };
        let limit = self.inradius - CHART_MARGIN;
        let n = 9;
        let grid = |i: usize| -gamma + 2.0 * gamma * i as f64 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let q = chart.forward(&[grid(i), grid(j), grid(k)])?;
                    let d = displacement(&q.m);
                    if d >= limit {
                        return Err(Error::ChartTooLarge {
                            gamma,
                            reason: format!("box leaves the inscribed disk (displacement {d:.4} ≥ {limit:.4})"),
                        });
                    }
                    if chart.locate(&self.apply(&q)?).is_some() {
                        return Err(Error::ChartTooLarge { gamma, reason: "f(U) ∩ U ≠ ∅".into() });
                    }
                }
            }
        }
        check_non_periodic(self, &GeoPoint { m: base }, 10_000, 1e-6)?;
        Ok(chart)
    }

    fn along_unstable(&self, q: &GeoPoint, tau: f64) -> Result<GeoPoint> {
        Ok(GeoPoint { m: self.reduce(&mul(&q.m, &n_minus(tau)))? })
    }

    /// Haar measure by rejection: `p = k(θ₁)·a(ρ)·k(θ₂)` with `ρ` drawn with
    /// density `∝ sinh ρ` up to the circumradius, kept when `p·i` already lies
    /// in the Dirichlet octagon.
    fn sample_volume(&self, rng: &mut Stream) -> Result<GeoPoint> {
        let cosh_max = (1.0 + 2f64.sqrt()).powi(2);
        for _ in 0..MAX_REDUCTIONS {
            let rho = (1.0 + rng.random::<f64>() * (cosh_max - 1.0)).acosh();
            let p = mul(&mul(&rotation(rng.random::<f64>() * 2.0 * PI), &a_t(rho)), &rotation(rng.random::<f64>() * 2.0 * PI));
            let inside = self.generators.iter().all(|g| frob2(&mul(g, &p)) >= frob2(&p));
            if inside {
                return Ok(GeoPoint { m: normalize(p) });
            }
        }
        Err(Error::ReductionDiverged(MAX_REDUCTIONS))
    }

    fn distance(&self, a: &GeoPoint, b: &GeoPoint) -> f64 {
        let diff = |sign: f64| {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += (a.m[i][j] - sign * b.m[i][j]).powi(2);
                }
            }
            s.sqrt()
        };
        diff(1.0).min(diff(-1.0))
    }
}

/// `ψ(w, y, z) = p₀·n⁺(w)·a(y)·n⁻(z)`: horocyclic, flow and horocyclic coordinates.
///
/// The box lies inside the inscribed disk of the octagon, so points of `U`
/// are their own reduced representatives.
#[derive(Debug, Clone)]
pub struct GeoChart {
    p0: M2,
    p0_inv: M2,
    gamma: f64,
}

impl LocalChart for GeoChart {
    type Point = GeoPoint;

    fn radius(&self) -> f64 {
        self.gamma
    }

    fn dims(&self) -> Dims {
        DIMS
    }

    fn base(&self) -> GeoPoint {
        GeoPoint { m: self.p0 }
    }

    fn forward(&self, p: &[f64]) -> Result<GeoPoint> {
        if p.len() != 3 || !self.in_box(p) {
            return Err(Error::OutsideChart(p.to_vec()));
        }
        let m = mul(&mul(&mul(&self.p0, &n_plus(p[0])), &a_t(p[1])), &n_minus(p[2]));
        Ok(GeoPoint { m: normalize(m) })
    }

    fn locate(&self, q: &GeoPoint) -> Option<Vec<f64>> {
        let mut m = mul(&self.p0_inv, &q.m);
        if m[1][1] < 0.0 {
            m = [[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]];
        }
        if m[1][1] <= 0.0 {
            return None;
        }
        let y = -2.0 * m[1][1].ln();
        let z = m[1][0] / m[1][1];
        let w = m[0][1] / m[1][1];
        let p = vec![w, y, z];
        self.in_box(&p).then_some(p)
    }

    fn frame_jacobian(&self, p: &[f64]) -> FrameMatrix {
        let (y, z) = (p[1], p[2]);
        let e = (-y).exp();
        let m = nalgebra::DMatrix::from_row_slice(3, 3, &[e, 0.0, 0.0, 2.0 * z * e, 1.0, 0.0, -z * z * e, -z, 1.0]);
        FrameMatrix::new(DIMS, m).expect("finite chart derivative")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_point() -> GeoPoint {
        GeoPoint { m: mul(&mul(&n_plus(0.1), &a_t(0.2)), &rotation(0.7)) }
    }

    #[test]
    fn generators_and_relation() {
        let sys = GeodesicSurface::new().unwrap();
        assert_eq!(sys.generators().len(), 8);
        for g in sys.generators() {
            assert!((det(g) - 1.0).abs() < 1e-12);
            assert!((displacement(g) - 2.0 * sys.inradius()).abs() < 1e-10);
        }
        let rel = sys.relator();
        let p = sys.reduce(&rel).unwrap();
        assert!(sys.distance(&GeoPoint { m: p }, &GeoPoint::identity()) < 1e-8);
    }

    #[test]
    fn identity_flows_without_reduction() {
        let sys = GeodesicSurface::new().unwrap();
        let q = sys.apply(&GeoPoint::identity()).unwrap();
        assert_eq!(q.m, a_t(1.0));
    }

    #[test]
    fn reduction_lands_in_octagon() {
        let sys = GeodesicSurface::new().unwrap();
        let mut q = sample_point();
        for _ in 0..500 {
            q = sys.apply(&q).unwrap();
            // Dirichlet octagon circumradius: cosh R = cot²(π/8).
            let circum = ((1.0 + 2f64.sqrt()).powi(2)).acosh();
            assert!(displacement(&q.m) <= circum + 1e-9);
            assert!((det(&q.m) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        let sys = GeodesicSurface::new().unwrap();
        let mut q = sample_point();
        for _ in 0..200 {
            let next = sys.apply(&q).unwrap();
            let back = sys.inverse(&next).unwrap();
            assert!(sys.distance(&back, &q) < 1e-10);
            q = next;
        }
    }

    #[test]
    fn chart_round_trip_and_alignment() {
        let sys = GeodesicSurface::new().unwrap();
        let chart = sys.chart_at(&sample_point(), 0.2).unwrap();
        let p = [0.05, -0.1, 0.15];
        let back = chart.locate(&chart.forward(&p).unwrap()).unwrap();
        for i in 0..3 {
            assert!((back[i] - p[i]).abs() < 1e-13);
        }
        // z-lines are unstable horocycles.
        let q = chart.forward(&[0.05, -0.1, 0.0]).unwrap();
        let moved = GeoPoint { m: mul(&q.m, &n_minus(0.15)) };
        let loc = chart.locate(&moved).unwrap();
        assert!((loc[2] - 0.15).abs() < 1e-13 && (loc[0] - 0.05).abs() < 1e-13);
    }

    #[test]
    fn chart_derivative_matches_finite_differences() {
        let sys = GeodesicSurface::new().unwrap();
        let chart = sys.chart_at(&sample_point(), 0.2).unwrap();
        let p = [0.07, -0.11, 0.13];
        let q = chart.forward(&p).unwrap();
        let q_inv = inv(&q.m);
        let j = chart.frame_jacobian(&p);
        let h = 1e-6;
        for col in 0..3 {
            let (mut pp, mut pm) = (p, p);
            pp[col] += h;
            pm[col] -= h;
            let (a, b) = (chart.forward(&pp).unwrap().m, chart.forward(&pm).unwrap().m);
            let d: M2 = [
                [(a[0][0] - b[0][0]) / (2.0 * h), (a[0][1] - b[0][1]) / (2.0 * h)],
                [(a[1][0] - b[1][0]) / (2.0 * h), (a[1][1] - b[1][1]) / (2.0 * h)],
            ];
            // q⁻¹ dq = x N⁺ + y·diag(½, −½) + z N⁻
            let x = mul(&q_inv, &d);
            let got = [x[0][1], 2.0 * x[0][0], x[1][0]];
            for row in 0..3 {
                assert!((got[row] - j.get(row, col)).abs() < 1e-8, "({row},{col}): {} vs {}", got[row], j.get(row, col));
            }
        }
    }

    #[test]
    fn oversized_chart_rejected() {
        let sys = GeodesicSurface::new().unwrap();
        let far = GeoPoint { m: a_t(sys.inradius() - 0.1) };
        assert!(sys.chart_at(&far, 0.2).is_err());
        assert!(sys.chart_at(&sample_point(), 0.6).is_err());
    }
}
