//! The local shear `h(x, y, z) = (x, y, z + t·y·Φ_ε(x, y, z)·e_kick)` in chart
//! coordinates, its conjugate `H = ψ∘h∘ψ⁻¹` and the perturbed map `g = f∘H`.
//!
//! `y` is the center coordinate and the kick axis is the first unstable one.
//! Since `h` only moves points along `E^u`, `Dg` keeps `E^u` and `E^{cu}`
//! invariant but tilts `E^c` wherever `t·(Φ_ε + y∂_yΦ_ε) ≠ 0`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bump::{bump_certificate, BumpCertificate, BumpProfile, MollifierField};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::splitting::{Dims, FrameMatrix};
use crate::systems::{DiffMap, LocalChart, PartiallyHyperbolicSystem};

const INVERT_TOL: f64 = 1e-13;
const INVERT_MAX_ITER: usize = 60;

/// `t(ε) = min(ε³, 1/(4C))`, kept strictly below `1/(4C)`.
pub fn t_schedule(eps: f64, c: f64) -> f64 {
    let cap = 1.0 / (4.0 * c);
    let t = (eps * eps * eps).min(cap);
    if t >= cap {
        cap.next_down()
    } else {
        t
    }
}

/// How the shear amplitude is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TChoice {
    /// `t_schedule(ε, C)`.
    Auto,
    /// A fraction of the injectivity cap, `θ/(4C)`.
    CapFraction(f64),
    Value(f64),
}

impl TChoice {
    pub fn resolve(&self, eps: f64, c: f64) -> f64 {
        match *self {
            TChoice::Auto => t_schedule(eps, c),
            TChoice::CapFraction(theta) => theta / (4.0 * c),
            TChoice::Value(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationParams {
    pub eps: f64,
    pub t: f64,
    pub gamma: f64,
    /// `C = sup|φ′|`.
    pub c_bound: f64,
    #[serde(skip)]
    pub dims: Dims,
}

impl PerturbationParams {
    pub fn new(eps: f64, t: f64, gamma: f64, c_bound: f64, dims: Dims) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(Error::InvalidParams(format!("ε = {eps} must lie in (0, 1/4)")));
        }
        if !(c_bound > 0.0) {
            return Err(Error::InvalidParams(format!("C = {c_bound} must be positive")));
        }
        if !(t >= 0.0 && t < 1.0 / (4.0 * c_bound)) {
            return Err(Error::InvalidParams(format!("t = {t} must lie in [0, 1/(4C)) = [0, {})", 1.0 / (4.0 * c_bound))));
        }
        if !(2.0 * eps < gamma) {
            return Err(Error::InvalidParams(format!("support half-width 2ε = {} must be below γ = {gamma}", 2.0 * eps)));
        }
        if dims.c != 1 || dims.u == 0 {
            return Err(Error::InvalidParams("the shear needs a one-dimensional center and nonzero E^u".into()));
        }
        Ok(Self { eps, t, gamma, c_bound, dims })
    }

    pub fn y_axis(&self) -> usize {
        self.dims.s
    }

    pub fn kick_axis(&self) -> usize {
        self.dims.s + self.dims.c
    }
}

/// The chart-level map `h_{t,ε}`.
#[derive(Debug, Clone)]
pub struct Perturbation {
    params: PerturbationParams,
    profile: BumpProfile,
    certificate: BumpCertificate,
    field: MollifierField,
}

impl Perturbation {
    pub fn new(eps: f64, t: TChoice, gamma: f64, dims: Dims) -> Result<Self> {
        let profile = BumpProfile::new()?;
        let certificate = bump_certificate(&profile)?;
        let t = t.resolve(eps, certificate.c1);
        let params = PerturbationParams::new(eps, t, gamma, certificate.c1, dims)?;
        let field = MollifierField::new(eps, dims)?;
        Ok(Self { params, profile, certificate, field })
    }

    pub fn params(&self) -> &PerturbationParams {
        &self.params
    }

    pub fn certificate(&self) -> &BumpCertificate {
        &self.certificate
    }

    pub fn profile(&self) -> &BumpProfile {
        &self.profile
    }

    /// Copy with a different amplitude; `t` must stay in the injectivity regime.
    pub fn with_t(&self, t: f64) -> Result<Self> {
        let p = self.params;
        let params = PerturbationParams::new(p.eps, t, p.gamma, p.c_bound, p.dims)?;
        Ok(Self { params, ..self.clone() })
    }

    /// Membership in the open support box of `Φ_ε`.
    pub fn in_support(&self, p: &[f64]) -> bool {
        self.field.in_support(p)
    }

    fn check_box(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.params.dims.total() {
            return Err(Error::DimensionMismatch { expected: self.params.dims.total(), got: p.len() });
        }
        if p.iter().any(|x| !(x.abs() <= self.params.gamma)) {
            return Err(Error::OutsideChart(p.to_vec()));
        }
        Ok(())
    }

    fn kick(&self, p: &[f64]) -> f64 {
        self.params.t * p[self.params.y_axis()] * self.field.value(&self.profile, p)
    }

    pub fn h_apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.check_box(p)?;
        let mut out = p.to_vec();
        out[self.params.kick_axis()] += self.kick(p);
        Ok(out)
    }

    /// Identity plus the kick row `t(y∂_jΦ_ε + δ_{jy}Φ_ε)`.
    pub fn h_jacobian(&self, p: &[f64]) -> Result<FrameMatrix> {
        self.check_box(p)?;
        let dims = self.params.dims;
        let mut m = DMatrix::identity(dims.total(), dims.total());
        if self.params.t != 0.0 && self.in_support(p) {
            let (t, yi, k) = (self.params.t, self.params.y_axis(), self.params.kick_axis());
            let y = p[yi];
            let grad = self.field.gradient(&self.profile, p);
            let phi = self.field.value(&self.profile, p);
            for j in 0..dims.total() {
                m[(k, j)] += t * y * grad[j];
            }
            m[(k, yi)] += t * phi;
        }
        FrameMatrix::new(dims, m)
    }

    /// Solve `h(p) = p′` by the contraction `z ← z′ − t·y·Φ_ε(x, y, z)`.
    pub fn h_invert(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_box(q)?;
        let k = self.params.kick_axis();
        let mut p = q.to_vec();
        for _ in 0..INVERT_MAX_ITER {
            let next = q[k] - self.kick(&p);
            let step = (next - p[k]).abs();
            p[k] = next;
            if step <= INVERT_TOL {
                return Ok(p);
            }
        }
        let last = (q[k] - self.kick(&p) - p[k]).abs();
        Err(Error::InversionDiverged { iterations: INVERT_MAX_ITER, last_step: last })
    }

    /// Supremum norms of `h − Id` and its first two derivatives over a grid of
    /// the support box, from finite differences.
    pub fn closeness_audit(&self, grid: usize, fd1: f64, fd2: f64) -> Result<ClosenessReport> {
        let d = self.params.dims.total();
        let half = 2.0 * self.params.eps;
        let points = grid.pow(d as u32);
        let coord = |i: usize| if grid == 1 { 0.0 } else { -half + 2.0 * half * i as f64 / (grid - 1) as f64 };
        let diff = |p: &[f64]| -> Result<Vec<f64>> {
            let h = self.h_apply(p)?;
            Ok(h.iter().zip(p).map(|(a, b)| a - b).collect())
        };
        let per_point: Vec<Result<[f64; 4]>> = (0..points)
            .into_par_iter()
            .map(|idx| {
                let mut p = vec![0.0; d];
                let mut r = idx;
                for x in p.iter_mut() {
                    *x = coord(r % grid);
                    r /= grid;
                }
                let c0 = diff(&p)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let mut c1 = 0.0f64;
                let mut c2 = 0.0f64;
                let shifted = |offsets: &[(usize, f64)]| -> Result<Vec<f64>> {
                    let mut q = p.clone();
                    for &(i, h) in offsets {
                        q[i] += h;
                    }
                    diff(&q)
                };
                for i in 0..d {
                    let (a, b) = (shifted(&[(i, fd1)])?, shifted(&[(i, -fd1)])?);
                    for (x, y) in a.iter().zip(&b) {
                        c1 = c1.max(((x - y) / (2.0 * fd1)).abs());
                    }
                    for j in i..d {
                        let h2 = fd2;
                        let vals = if i == j {
                            let (a, m, b) = (shifted(&[(i, h2)])?, diff(&p)?, shifted(&[(i, -h2)])?);
                            (0..d).map(|k| (a[k] - 2.0 * m[k] + b[k]) / (h2 * h2)).collect::<Vec<_>>()
                        } else {
                            let pp = shifted(&[(i, h2), (j, h2)])?;
                            let pm = shifted(&[(i, h2), (j, -h2)])?;
                            let mp = shifted(&[(i, -h2), (j, h2)])?;
                            let mm = shifted(&[(i, -h2), (j, -h2)])?;
                            (0..d).map(|k| (pp[k] - pm[k] - mp[k] + mm[k]) / (4.0 * h2 * h2)).collect()
                        };
                        c2 = c2.max(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())));
                    }
                }
                let det = self.h_jacobian(&p)?.determinant();
                Ok([c0, c1, c2, det])
            })
            .collect();
        let mut sup = [0.0f64, 0.0, 0.0, f64::INFINITY];
        for r in per_point {
            let [c0, c1, c2, det] = r?;
            sup[0] = sup[0].max(c0);
            sup[1] = sup[1].max(c1);
            sup[2] = sup[2].max(c2);
            sup[3] = sup[3].min(det);
        }
        let (c, c2_const, t, eps) = (self.params.c_bound, self.certificate.c2, self.params.t, self.params.eps);
        let c1_distance = sup[0].max(sup[1]);
        let c2_distance = c1_distance.max(sup[2]);
        let bound_c1 = (1.0 + 2.0 * c) * t;
        let bound_c2 = c2_const * t / eps;
        let det_floor = 1.0 - 2.0 * c * t;
        Ok(ClosenessReport {
            eps,
            t,
            c_bound: c,
            c2_bound: c2_const,
            grid,
            points,
            sup_displacement: sup[0],
            sup_first_derivative: sup[1],
            sup_second_derivative: sup[2],
            c1_distance,
            c2_distance,
            bound_c1,
            bound_c2,
            pass_c1: c1_distance <= bound_c1,
            pass_c2: c2_distance <= bound_c2,
            det_min: sup[3],
            det_floor,
            pass_det: sup[3] >= det_floor && sup[3] >= 0.5,
        })
    }

    /// Minimum of `det Dh` over a `grid^d` lattice of the support box.
    pub fn determinant_floor(&self, grid: usize) -> Result<f64> {
        let d = self.params.dims.total();
        let half = 2.0 * self.params.eps;
        let coord = |i: usize| if grid == 1 { 0.0 } else { -half + 2.0 * half * i as f64 / (grid - 1) as f64 };
        let dets: Vec<Result<f64>> = (0..grid.pow(d as u32))
            .into_par_iter()
            .map(|idx| {
                let mut r = idx;
                let p: Vec<f64> = (0..d)
                    .map(|_| {
                        let x = coord(r % grid);
                        r /= grid;
                        x
                    })
                    .collect();
                Ok(self.h_jacobian(&p)?.determinant())
            })
            .collect();
        dets.into_iter().try_fold(f64::INFINITY, |m, d| Ok(m.min(d?)))
    }

    /// Worst `|h⁻¹(h(p)) − p|` over `n` uniform points of the support box.
    pub fn round_trip_error(&self, n: usize, seed: u64) -> Result<f64> {
        let d = self.params.dims.total();
        let half = 2.0 * self.params.eps;
        let mut rng = rng::stream(seed, 0, Purpose::GridJitter);
        let mut worst = 0.0f64;
        for _ in 0..n {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(-half..half)).collect();
            let back = self.h_invert(&self.h_apply(&p)?)?;
            for (a, b) in back.iter().zip(&p) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosenessReport {
    pub eps: f64,
    pub t: f64,
    pub c_bound: f64,
    pub c2_bound: f64,
    pub grid: usize,
    pub points: usize,
    pub sup_displacement: f64,
    pub sup_first_derivative: f64,
    pub sup_second_derivative: f64,
    pub c1_distance: f64,
    pub c2_distance: f64,
    pub bound_c1: f64,
    pub bound_c2: f64,
    pub pass_c1: bool,
    pub pass_c2: bool,
    pub det_min: f64,
    pub det_floor: f64,
    pub pass_det: bool,
}

/// Largest frame entry that would carry `E^u` or `E^{cu}` out of itself.
pub fn frame_preservation_residual(m: &FrameMatrix) -> f64 {
    let dims = m.dims();
    let mut worst = 0.0f64;
    for j in dims.center_unstable() {
        for i in dims.stable() {
            worst = worst.max(m.get(i, j).abs());
        }
    }
    for j in dims.unstable() {
        for i in dims.center() {
            worst = worst.max(m.get(i, j).abs());
        }
    }
    worst
}

/// `g = f∘H` for a system `f` and a shear supported in one chart.
#[derive(Debug, Clone)]
pub struct Perturbed<S: PartiallyHyperbolicSystem> {
    system: S,
    chart: S::Chart,
    h: Perturbation,
}

impl<S> Perturbed<S>
where
    S: PartiallyHyperbolicSystem,
{
    pub fn new(system: S, q0: &S::Point, h: Perturbation) -> Result<Self> {
        if system.dims() != h.params().dims {
            return Err(Error::DimensionMismatch { expected: system.dims().total(), got: h.params().dims.total() });
        }
        let chart = system.chart_at(q0, h.params().gamma)?;
        Ok(Self { system, chart, h })
    }

    pub fn system(&self) -> &S {
        &self.system
    }

    pub fn chart(&self) -> &S::Chart {
        &self.chart
    }

    pub fn perturbation(&self) -> &Perturbation {
        &self.h
    }

    /// Same system and chart, different amplitude.
    pub fn with_t(&self, t: f64) -> Result<Self>
    where
        S: Clone,
        S::Chart: Clone,
    {
        Ok(Self { system: self.system.clone(), chart: self.chart.clone(), h: self.h.with_t(t)? })
    }

    /// Chart coordinates of `q` when `q ∈ V`.
    pub fn support_coords(&self, q: &S::Point) -> Option<Vec<f64>> {
        self.chart.locate(q).filter(|p| self.h.in_support(p))
    }

    pub fn h_global(&self, q: &S::Point) -> Result<S::Point> {
        match self.support_coords(q) {
            None => Ok(*q),
            Some(p) => {
                let hp = self.h.h_apply(&p)?;
                if hp == p {
                    Ok(*q)
                } else {
                    self.chart.forward(&hp)
                }
            }
        }
    }

    pub fn h_global_inverse(&self, q: &S::Point) -> Result<S::Point> {
        let Some(p) = self.chart.locate(q) else {
            return Ok(*q);
        };
        let back = self.h.h_invert(&p)?;
        if back == p {
            Ok(*q)
        } else {
            self.chart.forward(&back)
        }
    }

    /// `(H(q), DH(q))` with `DH = Dψ(hp)·Dh(p)·Dψ(p)⁻¹`; `None` for the
    /// derivative means the identity.
    pub fn dh_frame(&self, q: &S::Point) -> Result<(S::Point, Option<FrameMatrix>)> {
        let Some(p) = self.support_coords(q) else {
            return Ok((*q, None));
        };
        let hp = self.h.h_apply(&p)?;
        let dh = self.h.h_jacobian(&p)?;
        if hp == p && dh == FrameMatrix::identity(dh.dims()) {
            return Ok((*q, None));
        }
        let forward = self.chart.frame_jacobian(&hp);
        let back = self
            .chart
            .frame_jacobian(&p)
            .try_inverse()
            .map_err(|_| Error::ChartInconsistency(format!("chart derivative singular at {p:?}")))?;
        let image = if hp == p { *q } else { self.chart.forward(&hp)? };
        Ok((image, Some(forward.compose(&dh).compose(&back))))
    }
}

impl<S> DiffMap for Perturbed<S>
where
    S: PartiallyHyperbolicSystem,
{
    type Point = S::Point;

    fn dims(&self) -> Dims {
        self.system.dims()
    }

    fn apply(&self, q: &S::Point) -> Result<S::Point> {
        self.system.apply(&self.h_global(q)?)
    }

    fn inverse(&self, q: &S::Point) -> Result<S::Point> {
        self.h_global_inverse(&self.system.inverse(q)?)
    }

    fn jacobian(&self, q: &S::Point) -> FrameMatrix {
        self.step(q).map(|(_, j)| j).unwrap_or_else(|_| self.system.jacobian(q))
    }

    fn step(&self, q: &S::Point) -> Result<(S::Point, FrameMatrix)> {
        let (hq, dh) = self.dh_frame(q)?;
        let (next, df) = self.system.step(&hq)?;
        Ok(match dh {
            None => (next, df),
            Some(dh) => (next, df.compose(&dh)),
        })
    }

    fn coords(&self, q: &S::Point) -> Vec<f64> {
        self.system.coords(q)
    }

    /// With `t = 0` the shear is the identity and `V` counts as empty.
    fn in_support(&self, q: &S::Point) -> bool {
        self.h.params().t != 0.0 && self.support_coords(q).is_some()
    }

    fn in_chart_image(&self, q: &S::Point) -> bool {
        self.chart.locate(q).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{CatPoint, CatSuspension};

    const DIMS: Dims = Dims::new(1, 1, 1);

    fn shear(eps: f64, t: TChoice) -> Perturbation {
        Perturbation::new(eps, t, 0.2, DIMS).unwrap()
    }

    #[test]
    fn schedule() {
        assert_eq!(t_schedule(0.1, 2.0), 0.1f64.powi(3));
        assert_eq!(t_schedule(0.9, 0.1), 0.9f64.powi(3));
        assert!(t_schedule(0.9, 2.0) < 0.125);
        assert_eq!(t_schedule(0.9, 2.0), 0.125f64.next_down());
    }

    #[test]
    fn params_validation() {
        assert!(PerturbationParams::new(0.3, 0.01, 1.0, 3.0, DIMS).is_err());
        assert!(PerturbationParams::new(0.05, 0.1, 0.2, 3.0, DIMS).is_err());
        assert!(PerturbationParams::new(0.05, 0.01, 0.1, 3.0, DIMS).is_err());
        assert!(PerturbationParams::new(0.05, 0.01, 0.2, 3.0, Dims::new(1, 2, 1)).is_err());
        assert!(PerturbationParams::new(0.05, 0.0, 0.2, 3.0, DIMS).is_ok());
    }

    #[test]
    fn h_examples() {
        let h = shear(0.05, TChoice::CapFraction(0.9));
        let t = h.params().t;
        assert_eq!(h.h_apply(&[0.15, 0.1, 0.0]).unwrap(), vec![0.15, 0.1, 0.0]);
        assert_eq!(h.h_apply(&[0.0, 0.0, 0.03]).unwrap(), vec![0.0, 0.0, 0.03]);
        assert_eq!(h.h_apply(&[0.0, 0.025, 0.0]).unwrap(), vec![0.0, 0.025, t * 0.025]);
        assert!(h.h_apply(&[0.0, 0.0, 0.25]).is_err());
    }

    #[test]
    fn jacobian_on_plateau_and_outside() {
        let h = shear(0.05, TChoice::CapFraction(0.9));
        let t = h.params().t;
        let mut expected = FrameMatrix::identity(DIMS).into_matrix();
        expected[(2, 1)] = t;
        assert_eq!(h.h_jacobian(&[0.01, 0.02, -0.03]).unwrap().into_matrix(), expected);
        assert_eq!(h.h_jacobian(&[0.11, 0.02, 0.0]).unwrap(), FrameMatrix::identity(DIMS));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = shear(0.05, TChoice::CapFraction(0.9));
        let mut rng = rng::stream(5, 0, Purpose::Test);
        let step = 1e-6;
        for _ in 0..1000 {
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(-0.11..0.11)).collect();
            let j = h.h_jacobian(&p).unwrap();
            for col in 0..3 {
                let (mut a, mut b) = (p.clone(), p.clone());
                a[col] += step;
                b[col] -= step;
                let (ha, hb) = (h.h_apply(&a).unwrap(), h.h_apply(&b).unwrap());
                for row in 0..3 {
                    let fd = (ha[row] - hb[row]) / (2.0 * step);
                    assert!((fd - j.get(row, col)).abs() < 1e-6, "{p:?} ({row},{col})");
                }
            }
        }
    }

    #[test]
    fn inversion_round_trip() {
        let h = shear(0.05, TChoice::CapFraction(0.999));
        assert!(h.round_trip_error(10_000, 1).unwrap() <= 1e-12);
        assert_eq!(h.h_invert(&[0.0, 0.0, 0.07]).unwrap(), vec![0.0, 0.0, 0.07]);
        assert_eq!(h.h_invert(&[0.15, 0.05, 0.07]).unwrap(), vec![0.15, 0.05, 0.07]);
    }

    #[test]
    fn determinant_floor_holds() {
        let h = shear(0.05, TChoice::CapFraction(0.999));
        let floor = h.determinant_floor(32).unwrap();
        assert!(floor >= 1.0 - 2.0 * h.params().c_bound * h.params().t);
        assert!(floor >= 0.5);
    }

    #[test]
    fn zero_amplitude_is_identity() {
        let h = shear(0.05, TChoice::Value(0.0));
        let r = h.closeness_audit(8, 1e-5, 1e-3).unwrap();
        assert_eq!(r.c2_distance, 0.0);
        assert_eq!(r.det_min, 1.0);
    }

    #[test]
    fn c1_bound_holds() {
        let h = shear(0.05, TChoice::CapFraction(0.9));
        let r = h.closeness_audit(16, 1e-5, 1e-3).unwrap();
        assert!(r.pass_c1, "{r:?}");
        assert!(r.pass_det);
    }

    fn cat_g(t: TChoice) -> Perturbed<CatSuspension> {
        Perturbed::new(CatSuspension::sqrt2(), &CatPoint::new(0.3, 0.4, 0.7), shear(0.05, t)).unwrap()
    }

    #[test]
    fn g_equals_f_outside_support() {
        let g = cat_g(TChoice::CapFraction(0.9));
        let f = g.system().clone();
        let mut q = CatPoint::new(0.81, 0.13, 0.2);
        for _ in 0..1000 {
            let (a, ja) = g.step(&q).unwrap();
            if !g.in_support(&q) {
                let (b, jb) = f.step(&q).unwrap();
                assert_eq!(a, b);
                assert_eq!(ja, jb);
            }
            q = a;
        }
    }

    #[test]
    fn g_preserves_unstable_and_center_unstable() {
        let g = cat_g(TChoice::CapFraction(0.9));
        let chart = g.chart().clone();
        let mut rng = rng::stream(9, 0, Purpose::Test);
        let mut tilted = 0;
        for _ in 0..10_000 {
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(-0.0999..0.0999)).collect();
            let q = chart.forward(&p).unwrap();
            assert!(g.in_support(&q));
            let j = g.jacobian(&q);
            assert!(frame_preservation_residual(&j) <= 1e-12);
            if j.get(2, 1).abs() > 0.0 {
                tilted += 1;
            }
        }
        assert!(tilted > 5000);
    }

    #[test]
    fn g_inverse_round_trip_and_same_return() {
        let g = cat_g(TChoice::CapFraction(0.9));
        let chart = g.chart().clone();
        let mut rng = rng::stream(10, 0, Purpose::Test);
        for _ in 0..2000 {
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(-0.2..0.2)).collect();
            let q = chart.forward(&p).unwrap();
            let gq = g.apply(&q).unwrap();
            // g(U) = f(U) misses U.
            assert!(chart.locate(&gq).is_none());
            let back = g.inverse(&gq).unwrap();
            assert!(g.system().distance(&back, &q) < 1e-12);
        }
    }
}
