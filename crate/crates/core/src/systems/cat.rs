//! Constant-roof suspension of the cat map `A = [[2, 1], [1, 1]]`.
//!
//! The state is `(x, s)` with `x ∈ T²` and fiber coordinate `s ∈ [0, r)`;
//! the flow moves `s` at unit speed and glues `(x, r) ~ (Ax, 0)`. The frame
//! `(v_s, ∂_s, v_u)` is orthonormal and invariant, so the one-step derivative
//! is `diag(λ_s^k, 1, λ_u^k)` with `k` the number of roof crossings.
//!
//! Suspensions are never minimal in the sense required by the perturbation
//! theorem; this model is an exactly computable testbed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::splitting::{Dims, FrameMatrix, SplittingSpec};

use super::{check_non_periodic, DiffMap, LocalChart, PartiallyHyperbolicSystem};

const DIMS: Dims = Dims::new(1, 1, 1);
const FOLD_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatPoint {
    pub x: [f64; 2],
    pub s: f64,
}

impl CatPoint {
    pub fn new(x1: f64, x2: f64, s: f64) -> Self {
        Self { x: [fold(x1), fold(x2)], s }
    }
}

/// Fold into `[0, 1)`; values within `FOLD_TOL` of 1 go to 0.
pub(crate) fn fold(v: f64) -> f64 {
    let y = v - v.floor();
    if y >= 1.0 - FOLD_TOL {
        0.0
    } else {
        y
    }
}

/// Representative of `v` modulo 1 in `[−1/2, 1/2)`.
fn wrap(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

fn mat_vec(m: [[i64; 2]; 2], x: [f64; 2]) -> [f64; 2] {
    [m[0][0] as f64 * x[0] + m[0][1] as f64 * x[1], m[1][0] as f64 * x[0] + m[1][1] as f64 * x[1]]
}

const A: [[i64; 2]; 2] = [[2, 1], [1, 1]];
const A_INV: [[i64; 2]; 2] = [[1, -1], [-1, 2]];

#[derive(Debug, Clone)]
pub struct CatSuspension {
    roof: f64,
    lambda_u: f64,
    lambda_s: f64,
    v_u: [f64; 2],
    v_s: [f64; 2],
}

impl CatSuspension {
    pub fn new(roof: f64) -> Result<Self> {
        if !(roof.is_finite() && roof > 0.0) {
            return Err(Error::InvalidSystem(format!("roof must be positive, got {roof}")));
        }
        let sqrt5 = 5f64.sqrt();
        let lambda_u = (3.0 + sqrt5) / 2.0;
        let lambda_s = 1.0 / lambda_u;
        let n = (1.0 + ((sqrt5 - 1.0) / 2.0).powi(2)).sqrt();
        let v_u = [1.0 / n, (sqrt5 - 1.0) / 2.0 / n];
        let v_s = [-v_u[1], v_u[0]];
        let sys = Self { roof, lambda_u, lambda_s, v_u, v_s };
        for (v, l) in [(v_u, lambda_u), (v_s, lambda_s)] {
            let av = mat_vec(A, v);
            let err = (av[0] - l * v[0]).abs().max((av[1] - l * v[1]).abs());
            if err > 1e-14 {
                return Err(Error::InvalidSystem(format!("eigenvector residual {err:e}")));
            }
        }
        Ok(sys)
    }

    pub fn sqrt2() -> Self {
        Self::new(std::f64::consts::SQRT_2).expect("√2 roof is valid")
    }

    pub fn roof(&self) -> f64 {
        self.roof
    }

    pub fn lambda_u(&self) -> f64 {
        self.lambda_u
    }

    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }

    pub fn v_u(&self) -> [f64; 2] {
        self.v_u
    }

    pub fn v_s(&self) -> [f64; 2] {
        self.v_s
    }

    /// Ranges of `coords`, on which the invariant volume has uniform marginals.
    pub fn coord_ranges(&self) -> [(f64, f64); 3] {
        [(0.0, 1.0), (0.0, 1.0), (0.0, self.roof)]
    }

    /// Number of roof crossings during the unit-time step from fiber height `s`.
    pub fn crossings(&self, s: f64) -> u32 {
        let mut t = s + 1.0;
        let mut k = 0;
        while t >= self.roof {
            t -= self.roof;
            k += 1;
        }
        k
    }

    fn advance(&self, q: &CatPoint) -> (CatPoint, u32) {
        let mut s = q.s + 1.0;
        let mut x = q.x;
        let mut k = 0;
        while s >= self.roof {
            s -= self.roof;
            x = mat_vec(A, x);
            x = [fold(x[0]), fold(x[1])];
            k += 1;
        }
        (CatPoint { x, s }, k)
    }

    fn frame_diag(&self, k: u32) -> FrameMatrix {
        let k = k as i32;
        FrameMatrix::from_diagonal(DIMS, &[self.lambda_s.powi(k), 1.0, self.lambda_u.powi(k)])
    }

    /// Lattice-box check that `f(U) ∩ U = ∅` for the chart box of radius `gamma`.
    fn chart_returns_immediately(&self, x0: [f64; 2], s0: f64, gamma: f64) -> bool {
        let (lo, hi) = (s0 - gamma, s0 + gamma);
        let (k_lo, k_hi) = (self.crossings(lo), self.crossings(hi));
        for k in k_lo..=k_hi {
            // Fiber heights in [lo, hi] crossing exactly k times.
            let a = lo.max(k as f64 * self.roof - 1.0);
            let b = hi.min((k + 1) as f64 * self.roof - 1.0);
            if a > b {
                continue;
            }
            let (img_a, img_b) = (a + 1.0 - k as f64 * self.roof, b + 1.0 - k as f64 * self.roof);
            if img_b < lo || img_a > hi {
                continue;
            }
            let mut ax = x0;
            for _ in 0..k {
                ax = mat_vec(A, ax);
            }
            let (ls, lu) = (self.lambda_s.powi(k as i32), self.lambda_u.powi(k as i32));
            let (hs, hu) = (gamma * (1.0 + ls), gamma * (1.0 + lu));
            let reach = (hs + hu).ceil() as i64 + 2;
            let d = [ax[0] - x0[0], ax[1] - x0[1]];
            for n1 in -reach..=reach {
                for n2 in -reach..=reach {
                    let e = [d[0] + n1 as f64, d[1] + n2 as f64];
                    let ws = e[0] * self.v_s[0] + e[1] * self.v_s[1];
                    let wu = e[0] * self.v_u[0] + e[1] * self.v_u[1];
                    if ws.abs() <= hs && wu.abs() <= hu {
                        return true;
                    }
                }
            }
        }
        false
    }
}

impl DiffMap for CatSuspension {
    type Point = CatPoint;

    fn dims(&self) -> Dims {
        DIMS
    }

    fn apply(&self, q: &CatPoint) -> Result<CatPoint> {
        Ok(self.advance(q).0)
    }

    fn inverse(&self, q: &CatPoint) -> Result<CatPoint> {
        let mut s = q.s - 1.0;
        let mut x = q.x;
        while s < 0.0 {
            s += self.roof;
            x = mat_vec(A_INV, x);
            x = [fold(x[0]), fold(x[1])];
        }
        if s >= self.roof {
            s -= self.roof;
            x = [fold(mat_vec(A, x)[0]), fold(mat_vec(A, x)[1])];
        }
        Ok(CatPoint { x, s })
    }

    fn jacobian(&self, q: &CatPoint) -> FrameMatrix {
        self.frame_diag(self.crossings(q.s))
    }

    fn step(&self, q: &CatPoint) -> Result<(CatPoint, FrameMatrix)> {
        let (next, k) = self.advance(q);
        Ok((next, self.frame_diag(k)))
    }

    fn coords(&self, q: &CatPoint) -> Vec<f64> {
        vec![q.x[0], q.x[1], q.s]
    }
}

impl PartiallyHyperbolicSystem for CatSuspension {
    type Chart = CatChart;

    fn name(&self) -> &'static str {
        "cat"
    }

    /// Long-run rates `(λ_s^{1/r}, 1, λ_u^{1/r})`. In the Euclidean frame the
    /// per-step unstable stretch is `1` or `λ_u`, so the norm constant is
    /// `C = λ_u` rather than 1.
    fn rates(&self) -> SplittingSpec {
        let ls = self.lambda_s.powf(1.0 / self.roof);
        let lu = self.lambda_u.powf(1.0 / self.roof);
        SplittingSpec::new(DIMS, [ls, 1.0, lu], [ls, 1.0, lu], self.lambda_u).expect("cat rates are ordered")
    }

    fn volume_preserving(&self) -> bool {
        true
    }

    fn chart_at(&self, q0: &CatPoint, gamma: f64) -> Result<CatChart> {
        if !(gamma > 0.0) {
            return Err(Error::ChartTooLarge { gamma, reason: "radius must be positive".into() });
        }
        let spread = gamma * (self.v_s[0].abs() + self.v_u[0].abs()).max(self.v_s[1].abs() + self.v_u[1].abs());
        if spread >= 0.5 {
            return Err(Error::ChartTooLarge { gamma, reason: "box does not embed in the torus".into() });
        }
        if q0.s - gamma <= 0.0 || q0.s + gamma >= self.roof {
            return Err(Error::ChartTooLarge {
                gamma,
                reason: format!("fiber interval [{}, {}] meets the roof section", q0.s - gamma, q0.s + gamma),
            });
        }
        if self.chart_returns_immediately(q0.x, q0.s, gamma) {
            return Err(Error::ChartTooLarge { gamma, reason: "f(U) ∩ U ≠ ∅".into() });
        }
        check_non_periodic(self, q0, 10_000, 1e-6)?;
        Ok(CatChart { x0: q0.x, s0: q0.s, gamma, v_s: self.v_s, v_u: self.v_u })
    }

    fn along_unstable(&self, q: &CatPoint, tau: f64) -> Result<CatPoint> {
        Ok(CatPoint { x: [fold(q.x[0] + tau * self.v_u[0]), fold(q.x[1] + tau * self.v_u[1])], s: q.s })
    }

    fn sample_volume(&self, rng: &mut Stream) -> Result<CatPoint> {
        Ok(CatPoint::new(rng.random(), rng.random(), rng.random::<f64>() * self.roof))
    }

    fn distance(&self, a: &CatPoint, b: &CatPoint) -> f64 {
        let dx = wrap(a.x[0] - b.x[0]);
        let dy = wrap(a.x[1] - b.x[1]);
        let ds = (a.s - b.s).abs();
        let ds = ds.min(self.roof - ds);
        (dx * dx + dy * dy + ds * ds).sqrt()
    }
}

/// The linear chart `ψ(w, y, z) = (x₀ + w·v_s + z·v_u mod ℤ², s₀ + y)`.
#[derive(Debug, Clone)]
pub struct CatChart {
    x0: [f64; 2],
    s0: f64,
    gamma: f64,
    v_s: [f64; 2],
    v_u: [f64; 2],
}

impl LocalChart for CatChart {
    type Point = CatPoint;

    fn radius(&self) -> f64 {
        self.gamma
    }

    fn dims(&self) -> Dims {
        DIMS
    }

    fn base(&self) -> CatPoint {
        CatPoint { x: self.x0, s: self.s0 }
    }

    fn forward(&self, p: &[f64]) -> Result<CatPoint> {
        if p.len() != 3 || !self.in_box(p) {
            return Err(Error::OutsideChart(p.to_vec()));
        }
        let (w, y, z) = (p[0], p[1], p[2]);
        Ok(CatPoint {
            x: [fold(self.x0[0] + w * self.v_s[0] + z * self.v_u[0]), fold(self.x0[1] + w * self.v_s[1] + z * self.v_u[1])],
            s: self.s0 + y,
        })
    }

    fn locate(&self, q: &CatPoint) -> Option<Vec<f64>> {
        let y = q.s - self.s0;
        if y.abs() > self.gamma {
            return None;
        }
        let d = [wrap(q.x[0] - self.x0[0]), wrap(q.x[1] - self.x0[1])];
        let w = d[0] * self.v_s[0] + d[1] * self.v_s[1];
        let z = d[0] * self.v_u[0] + d[1] * self.v_u[1];
        if w.abs() > self.gamma || z.abs() > self.gamma {
            return None;
        }
        Some(vec![w, y, z])
    }

    fn frame_jacobian(&self, _p: &[f64]) -> FrameMatrix {
        FrameMatrix::identity(DIMS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_without_crossing_is_identity_in_frame() {
        let sys = CatSuspension::sqrt2();
        let q = CatPoint::new(0.3, 0.7, 0.2);
        let (q1, j) = sys.step(&q).unwrap();
        assert_eq!(q1.x, q.x);
        assert_eq!(q1.s, 1.2);
        assert_eq!(j, FrameMatrix::identity(DIMS));
    }

    #[test]
    fn step_with_crossing() {
        let sys = CatSuspension::sqrt2();
        let q = CatPoint::new(0.3, 0.7, 0.9);
        let (q1, j) = sys.step(&q).unwrap();
        assert!((q1.s - (1.9 - std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!((q1.x[0] - fold(2.0 * 0.3 + 0.7)).abs() < 1e-15);
        assert!((q1.x[1] - fold(0.3 + 0.7)).abs() < 1e-15);
        assert_eq!(j, FrameMatrix::from_diagonal(DIMS, &[sys.lambda_s(), 1.0, sys.lambda_u()]));
    }

    #[test]
    fn rational_roof_always_crosses() {
        let sys = CatSuspension::new(1.0).unwrap();
        let q = CatPoint::new(0.1, 0.2, 0.25);
        let q1 = sys.apply(&q).unwrap();
        assert_eq!(q1.s, 0.25);
        assert_eq!(sys.crossings(0.25), 1);
    }

    #[test]
    fn round_trip() {
        let sys = CatSuspension::sqrt2();
        let mut rng = crate::rng::stream(3, 0, crate::rng::Purpose::Test);
        for _ in 0..10_000 {
            let q = CatPoint::new(rng.random(), rng.random(), rng.random_range(0.0..sys.roof()));
            let back = sys.inverse(&sys.apply(&q).unwrap()).unwrap();
            assert!(sys.distance(&q, &back) < 1e-12, "{q:?} -> {back:?}");
        }
    }

    #[test]
    fn chart_alignment() {
        let sys = CatSuspension::sqrt2();
        let q0 = CatPoint::new(0.3, 0.4, 0.7);
        let chart = sys.chart_at(&q0, 0.2).unwrap();
        assert_eq!(chart.forward(&[0.0, 0.0, 0.0]).unwrap(), q0);
        assert_eq!(chart.frame_jacobian(&[0.0; 3]), FrameMatrix::identity(DIMS));
        // z-line stays in the fiber s₀ and moves along v_u.
        let p = chart.forward(&[0.0, 0.0, 0.15]).unwrap();
        assert_eq!(p.s, q0.s);
        let d = [wrap(p.x[0] - q0.x[0]), wrap(p.x[1] - q0.x[1])];
        assert!((d[0] * sys.v_s()[0] + d[1] * sys.v_s()[1]).abs() < 1e-15);
        let back = chart.locate(&chart.forward(&[0.1, -0.05, 0.15]).unwrap()).unwrap();
        assert!((back[0] - 0.1).abs() < 1e-14 && (back[1] + 0.05).abs() < 1e-14 && (back[2] - 0.15).abs() < 1e-14);
        assert!(chart.forward(&[0.0, 0.0, 0.25]).is_err());
        assert!(chart.locate(&CatPoint::new(0.3, 0.4, 1.0)).is_none());
    }

    #[test]
    fn chart_rejects_immediate_return_and_roof() {
        let sys = CatSuspension::sqrt2();
        // Fiber shift by 1 mod √2 is −0.414 or +1; a radius of 0.25 overlaps.
        assert!(sys.chart_at(&CatPoint::new(0.3, 0.4, 0.7), 0.21).is_err());
        assert!(sys.chart_at(&CatPoint::new(0.3, 0.4, 0.1), 0.15).is_err());
        // Rational roof: the fiber is fixed, so only the torus part can separate.
        let rational = CatSuspension::new(1.0).unwrap();
        assert!(rational.chart_at(&CatPoint::new(0.0, 0.0, 0.5), 0.1).is_err());
    }

    #[test]
    fn periodic_base_point_rejected() {
        let sys = CatSuspension::new(1.0).unwrap();
        // (0, 0) is fixed by A; with r = 1 the fiber is fixed too.
        assert!(matches!(
            check_non_periodic(&sys, &CatPoint::new(0.0, 0.0, 0.5), 100, 1e-6),
            Err(Error::PeriodicBasePoint { period: 1, .. })
        ));
    }

    #[test]
    fn fold_tolerance() {
        assert_eq!(fold(-1e-17), 0.0);
        assert_eq!(fold(1.0), 0.0);
        assert_eq!(fold(2.25), 0.25);
    }
}
