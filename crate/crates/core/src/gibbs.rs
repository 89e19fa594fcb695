//! Empirical measures: unstable-disk pushforwards approximating u-Gibbs
//! states, single-orbit measures, visit frequencies, forward and backward
//! Birkhoff averages and agreement of averages across initial conditions.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lyapunov::xi_field;
use crate::perturbation::Perturbed;
use crate::rng::{self, Purpose};
use crate::stats::{ks_uniform_weighted, mean_se, BatchMeans, MeanSe};
use crate::systems::{DiffMap, PartiallyHyperbolicSystem};

pub use crate::lyapunov::{mostly_expanding_diagnostic, MostlyExpanding};

/// A segment of a strong-unstable leaf with stratified samples on it.
///
/// The shear only moves points along `z`-lines of the chart, which are
/// strong-unstable leaves of `f`, so these segments are also unstable
/// disks of the perturbed map.
#[derive(Debug, Clone)]
pub struct UnstableDisk<P> {
    pub base: P,
    pub half_length: f64,
    /// Arclength parameters in `[−δ, δ]`, one per stratum.
    pub taus: Vec<f64>,
    pub points: Vec<P>,
}

impl<P: Copy> UnstableDisk<P> {
    /// `m` jittered samples: one uniform draw in each of `m` equal strata.
    pub fn sample<S>(system: &S, base: &P, half_length: f64, m: usize, seed: u64) -> Result<Self>
    where
        S: PartiallyHyperbolicSystem<Point = P>,
    {
        if m == 0 || !(half_length > 0.0) {
            return Err(Error::Precondition(format!("disk needs m ≥ 1 and δ > 0, got m = {m}, δ = {half_length}")));
        }
        let mut rng = rng::stream(seed, 0, Purpose::DiskSamples);
        let width = 2.0 * half_length / m as f64;
        let taus: Vec<f64> = (0..m).map(|i| -half_length + width * (i as f64 + rng.random::<f64>())).collect();
        let points = taus.iter().map(|&tau| system.along_unstable(base, tau)).collect::<Result<_>>()?;
        Ok(Self { base: *base, half_length, taus, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    DiskPushforward,
    SingleOrbit,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::DiskPushforward => "disk-pushforward",
            Provenance::SingleOrbit => "single-orbit",
        })
    }
}

/// Weighted point cloud.
///
/// Points come in contiguous groups of `group_len`: one orbit segment per
/// disk sample, or one batch of a single orbit. Groups are the units of the
/// standard error in [`integrate`].
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub provenance: Provenance,
    pub group_len: usize,
}

impl<P> EmpiricalMeasure<P> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn groups(&self) -> usize {
        self.points.len().div_ceil(self.group_len.max(1))
    }
}

fn orbit_segment<M: DiffMap>(map: &M, q: &M::Point, n: usize) -> Result<Vec<M::Point>> {
    let mut out = Vec::with_capacity(n);
    let mut p = *q;
    for j in 0..n {
        out.push(p);
        if j + 1 < n {
            p = map.apply(&p)?;
        }
    }
    Ok(out)
}

/// `μ_n = (1/n) Σ_{j<n} map^j_* (uniform measure on the disk samples)`.
pub fn pushforward_measure<M: DiffMap>(map: &M, disk: &UnstableDisk<M::Point>, n: usize) -> Result<EmpiricalMeasure<M::Point>> {
    if n == 0 || disk.is_empty() {
        return Err(Error::Precondition("pushforward needs n ≥ 1 and at least one disk sample".into()));
    }
    let orbits: Vec<Vec<M::Point>> = disk.points.par_iter().map(|p| orbit_segment(map, p, n)).collect::<Result<_>>()?;
    let points: Vec<M::Point> = orbits.into_iter().flatten().collect();
    let w = 1.0 / points.len() as f64;
    Ok(EmpiricalMeasure { weights: vec![w; points.len()], points, provenance: Provenance::DiskPushforward, group_len: n })
}

/// `μ_x = (1/n) Σ_{j<n} δ_{map^j(q)}`, grouped into `batches` batches.
pub fn orbit_measure<M: DiffMap>(map: &M, q: &M::Point, n: usize, batches: usize) -> Result<EmpiricalMeasure<M::Point>> {
    if n == 0 {
        return Err(Error::Precondition("orbit measure needs n ≥ 1".into()));
    }
    let points = orbit_segment(map, q, n)?;
    let group_len = (n / batches.clamp(1, n)).max(1);
    Ok(EmpiricalMeasure { weights: vec![1.0 / n as f64; n], points, provenance: Provenance::SingleOrbit, group_len })
}

/// Axis-aligned box in `coords` space, closed below and open above.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl CoordBox {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lo.len() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v < *b)
    }
}

/// `a:b,a:b,…` with one interval per coordinate.
impl FromStr for CoordBox {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for part in s.split(',') {
            let (a, b) = part.split_once(':').ok_or_else(|| format!("interval `{part}` is not of the form lo:hi"))?;
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number `{a}`"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number `{b}`"))?;
            if !(a < b) {
                return Err(format!("empty interval {a}:{b}"));
            }
            lo.push(a);
            hi.push(b);
        }
        Ok(Self { lo, hi })
    }
}

impl fmt::Display for CoordBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.lo.iter().zip(&self.hi).map(|(a, b)| format!("{a}:{b}")).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    /// The perturbation support `V`.
    Support,
    /// The chart image `U`.
    ChartImage,
    Box(CoordBox),
    Complement(Box<Region>),
}

impl Region {
    pub fn contains<M: DiffMap>(&self, map: &M, q: &M::Point) -> bool {
        match self {
            Region::Whole => true,
            Region::Support => map.in_support(q),
            Region::ChartImage => map.in_chart_image(q),
            Region::Box(b) => b.contains(&map.coords(q)),
            Region::Complement(r) => !r.contains(map, q),
        }
    }

    pub fn complement(&self) -> Region {
        Region::Complement(Box::new(self.clone()))
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("not:") {
            return Ok(rest.parse::<Region>()?.complement());
        }
        if let Some(spec) = s.strip_prefix("box:") {
            return Ok(Region::Box(spec.parse()?));
        }
        match s {
            "whole" => Ok(Region::Whole),
            "V" | "support" => Ok(Region::Support),
            "U" | "chart" => Ok(Region::ChartImage),
            _ => Err(format!("unknown region `{s}` (expected whole, V, U, box:lo:hi,… or not:<region>)")),
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Whole => f.write_str("whole"),
            Region::Support => f.write_str("V"),
            Region::ChartImage => f.write_str("U"),
            Region::Box(b) => write!(f, "box:{b}"),
            Region::Complement(r) => write!(f, "not:{r}"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VisitStats {
    pub region: String,
    pub visits: usize,
    pub steps: usize,
    pub frequency: f64,
    /// Batch-means standard error of the frequency.
    pub stderr: f64,
    /// Gaps between consecutive visits.
    pub returns: BTreeMap<usize, usize>,
    pub min_return: Option<usize>,
}

/// Frequency of `{k < N : map^k(q) ∈ region}` and its return times. For
/// `region = U` a return sooner than 2 steps is an error.
pub fn visit_frequency<M: DiffMap>(map: &M, q: &M::Point, steps: usize, region: &Region, batches: usize) -> Result<VisitStats> {
    if steps == 0 {
        return Err(Error::Precondition("visit count needs N ≥ 1".into()));
    }
    let mut acc = BatchMeans::new(steps, batches);
    let mut returns = BTreeMap::new();
    let (mut visits, mut last) = (0usize, None::<usize>);
    let mut p = *q;
    for k in 0..steps {
        let hit = region.contains(map, &p);
        acc.push(if hit { 1.0 } else { 0.0 });
        if hit {
            visits += 1;
            if let Some(prev) = last {
                *returns.entry(k - prev).or_insert(0) += 1;
            }
            last = Some(k);
        }
        if k + 1 < steps {
            p = map.apply(&p)?;
        }
    }
    let min_return = returns.keys().next().copied();
    if *region == Region::ChartImage {
        if let Some(r) = min_return.filter(|&r| r < 2) {
            return Err(Error::Invariant(format!("orbit returned to U after {r} step")));
        }
    }
    Ok(VisitStats {
        region: region.to_string(),
        visits,
        steps,
        frequency: visits as f64 / steps as f64,
        stderr: acc.finish().se,
        returns,
        min_return,
    })
}

/// Monte Carlo estimate of `Leb(V)/Leb(M)` from the system's volume.
pub fn support_volume_fraction<S: PartiallyHyperbolicSystem>(g: &Perturbed<S>, samples: usize, seed: u64) -> Result<MeanSe> {
    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let counts: Vec<(usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(seed, c as u64, Purpose::MonteCarloVolume);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0;
            for _ in 0..len {
                if g.in_support(&g.system().sample_volume(&mut rng)?) {
                    hits += 1;
                }
            }
            Ok((hits, len))
        })
        .collect::<Result<_>>()?;
    let (hits, n) = counts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p = hits as f64 / n as f64;
    Ok(MeanSe { mean: p, se: (p * (1.0 - p) / n as f64).sqrt() })
}

/// The fixed library of observables that configs can name.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Constant(f64),
    Coord(usize),
    /// `cos(2π x_i / period)`, smooth on periodic coordinates.
    Cosine { coord: usize, period: f64 },
    Indicator(Region),
    /// `log‖Dmap|E^c_map‖` with the tracker settled over `settle` steps.
    LogCentralStretch { settle: usize },
}

impl Observable {
    pub fn eval<M: DiffMap>(&self, map: &M, q: &M::Point) -> Result<f64> {
        Ok(match self {
            Observable::Constant(c) => *c,
            Observable::Coord(i) => coord(map, q, *i)?,
            Observable::Cosine { coord: i, period } => (2.0 * std::f64::consts::PI * coord(map, q, *i)? / period).cos(),
            Observable::Indicator(r) => {
                if r.contains(map, q) {
                    1.0
                } else {
                    0.0
                }
            }
            Observable::LogCentralStretch { settle } => xi_field(map, q, *settle)?.0.ln_1p(),
        })
    }

    /// Bound on `|φ|`, when one is known a priori.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Observable::Constant(c) => Some(c.abs()),
            Observable::Cosine { .. } | Observable::Indicator(_) => Some(1.0),
            _ => None,
        }
    }
}

fn coord<M: DiffMap>(map: &M, q: &M::Point, i: usize) -> Result<f64> {
    let c = map.coords(q);
    c.get(i).copied().ok_or(Error::DimensionMismatch { expected: i + 1, got: c.len() })
}

impl FromStr for Observable {
    type Err = String;

    /// `const:<c>`, `coord:<i>`, `cos:<i>:<period>`, `ind:<region>`, `logstretch[:<settle>]`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        let num = |x: &str| x.parse::<f64>().map_err(|_| format!("bad number `{x}` in observable `{s}`"));
        let idx = |x: &str| x.parse::<usize>().map_err(|_| format!("bad index `{x}` in observable `{s}`"));
        if let Some(rest) = s.strip_prefix("const:") {
            return Ok(Observable::Constant(num(rest)?));
        }
        if let Some(rest) = s.strip_prefix("coord:") {
            return Ok(Observable::Coord(idx(rest)?));
        }
        if let Some(rest) = s.strip_prefix("cos:") {
            let (i, p) = rest.split_once(':').ok_or_else(|| format!("`{s}`: expected cos:<coord>:<period>"))?;
            return Ok(Observable::Cosine { coord: idx(i)?, period: num(p)? });
        }
        if let Some(rest) = s.strip_prefix("ind:") {
            return Ok(Observable::Indicator(rest.parse()?));
        }
        if s == "logstretch" {
            return Ok(Observable::LogCentralStretch { settle: 80 });
        }
        if let Some(rest) = s.strip_prefix("logstretch:") {
            return Ok(Observable::LogCentralStretch { settle: idx(rest)? });
        }
        Err(format!("unknown observable `{s}` (expected const:, coord:, cos:, ind:, logstretch)"))
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Constant(c) => write!(f, "const:{c}"),
            Observable::Coord(i) => write!(f, "coord:{i}"),
            Observable::Cosine { coord, period } => write!(f, "cos:{coord}:{period}"),
            Observable::Indicator(r) => write!(f, "ind:{r}"),
            Observable::LogCentralStretch { settle } => write!(f, "logstretch:{settle}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Standard error across groups; zero for a single group.
    pub stderr: f64,
    pub groups: usize,
}

/// `Σ w_i φ(p_i)`; errors on the first non-finite value.
pub fn integrate<M: DiffMap>(map: &M, measure: &EmpiricalMeasure<M::Point>, observable: &Observable) -> Result<Integral> {
    let g = measure.group_len.max(1);
    let partial: Vec<(f64, f64)> = measure
        .points
        .par_chunks(g)
        .zip(measure.weights.par_chunks(g))
        .enumerate()
        .map(|(c, (pts, ws))| {
            let mut sum = 0.0;
            let mut wsum = 0.0;
            for (i, (p, w)) in pts.iter().zip(ws).enumerate() {
                let v = observable.eval(map, p)?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(c * g + i));
                }
                sum += w * v;
                wsum += w;
            }
            Ok((sum, wsum))
        })
        .collect::<Result<_>>()?;
    let value = partial.iter().map(|p| p.0).sum::<f64>();
    let group_means: Vec<f64> = partial.iter().filter(|p| p.1 > 0.0).map(|p| p.0 / p.1).collect();
    Ok(Integral { value, stderr: mean_se(&group_means).se, groups: group_means.len() })
}

/// Kolmogorov–Smirnov distance of each coordinate marginal from the uniform
/// law on the matching range.
pub fn marginal_ks<M: DiffMap>(map: &M, measure: &EmpiricalMeasure<M::Point>, ranges: &[(f64, f64)]) -> Vec<f64> {
    let coords: Vec<Vec<f64>> = measure.points.par_iter().map(|p| map.coords(p)).collect();
    ranges
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let xs: Vec<f64> = coords.iter().map(|c| c[i]).collect();
            ks_uniform_weighted(&xs, &measure.weights, lo, hi)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ForwardBackward {
    pub forward: MeanSe,
    pub backward: MeanSe,
    pub gap: f64,
    pub combined_se: f64,
}

/// Averages of `φ` over `q, map(q), …, map^{N−1}(q)` and over
/// `q, map⁻¹(q), …, map^{−(N−1)}(q)`.
pub fn forward_backward_average<M: DiffMap>(
    map: &M,
    observable: &Observable,
    q: &M::Point,
    steps: usize,
    batches: usize,
) -> Result<ForwardBackward> {
    if steps == 0 {
        return Err(Error::Precondition("Birkhoff average needs N ≥ 1".into()));
    }
    let run = |backward: bool| -> Result<MeanSe> {
        let mut acc = BatchMeans::new(steps, batches);
        let mut p = *q;
        for k in 0..steps {
            let v = observable.eval(map, &p)?;
            if !v.is_finite() {
                return Err(Error::NonFinite(k));
            }
            acc.push(v);
            if k + 1 < steps {
                p = if backward { map.inverse(&p)? } else { map.apply(&p)? };
            }
        }
        Ok(acc.finish())
    };
    let (forward, backward) = rayon::join(|| run(false), || run(true));
    let (forward, backward) = (forward?, backward?);
    Ok(ForwardBackward {
        gap: (forward.mean - backward.mean).abs(),
        combined_se: forward.se.hypot(backward.se),
        forward,
        backward,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservableDispersion {
    pub observable: String,
    /// Forward average per initial point.
    pub averages: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub mean: f64,
    /// Standard deviation of the averages across initial points.
    pub dispersion: f64,
    pub max_pairwise_gap: f64,
    /// Mean of the per-orbit batch-means standard errors.
    pub mean_within_se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasinReport {
    pub orbits: usize,
    pub steps: usize,
    pub observables: Vec<ObservableDispersion>,
}

/// Forward averages of each observable from every initial point and their
/// spread across initial points.
pub fn basin_agreement<M: DiffMap>(
    map: &M,
    observables: &[Observable],
    starts: &[M::Point],
    steps: usize,
    batches: usize,
) -> Result<BasinReport> {
    if starts.len() < 2 {
        return Err(Error::Precondition("basin agreement needs K ≥ 2 initial points".into()));
    }
    if steps == 0 {
        return Err(Error::Precondition("basin agreement needs N ≥ 1".into()));
    }
    let per_orbit: Vec<Vec<MeanSe>> = starts
        .par_iter()
        .map(|q| {
            let mut accs: Vec<BatchMeans> = observables.iter().map(|_| BatchMeans::new(steps, batches)).collect();
            let mut p = *q;
            for k in 0..steps {
                for (acc, obs) in accs.iter_mut().zip(observables) {
                    acc.push(obs.eval(map, &p)?);
                }
                if k + 1 < steps {
                    p = map.apply(&p)?;
                }
            }
            Ok(accs.iter().map(BatchMeans::finish).collect())
        })
        .collect::<Result<_>>()?;
    let observables = observables
        .iter()
        .enumerate()
        .map(|(j, obs)| {
            let averages: Vec<f64> = per_orbit.iter().map(|r| r[j].mean).collect();
            let stderrs: Vec<f64> = per_orbit.iter().map(|r| r[j].se).collect();
            let mean = averages.iter().sum::<f64>() / averages.len() as f64;
            let dispersion = (averages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (averages.len() - 1) as f64).sqrt();
            let lo = averages.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = averages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            ObservableDispersion {
                observable: obs.to_string(),
                mean_within_se: stderrs.iter().sum::<f64>() / stderrs.len() as f64,
                averages,
                stderrs,
                mean,
                dispersion,
                max_pairwise_gap: hi - lo,
            }
        })
        .collect();
    Ok(BasinReport { orbits: starts.len(), steps, observables })
}

/// Largest marginal KS distance between `μ_n` and `μ_{2n}` built from the same disk.
pub fn cesaro_stability<M: DiffMap>(map: &M, disk: &UnstableDisk<M::Point>, n: usize, coords: usize) -> Result<f64> {
    let a = pushforward_measure(map, disk, n)?;
    let b = pushforward_measure(map, disk, 2 * n)?;
    let column = |m: &EmpiricalMeasure<M::Point>, i: usize| -> Vec<f64> { m.points.iter().map(|p| map.coords(p)[i]).collect() };
    Ok((0..coords).map(|i| crate::stats::ks_two_sample(&column(&a, i), &column(&b, i))).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::{Perturbation, TChoice};
    use crate::systems::{CatPoint, CatSuspension, GeodesicSurface};

    fn cat_disk(m: usize) -> (CatSuspension, UnstableDisk<CatPoint>) {
        let f = CatSuspension::sqrt2();
        let disk = UnstableDisk::sample(&f, &CatPoint::new(0.3, 0.6, 0.7), 0.01, m, 11).unwrap();
        (f, disk)
    }

    fn cat_g(eps: f64) -> Perturbed<CatSuspension> {
        let h = Perturbation::new(eps, TChoice::CapFraction(0.9), 0.2, crate::splitting::Dims::new(1, 1, 1)).unwrap();
        Perturbed::new(CatSuspension::sqrt2(), &CatPoint::new(0.2, 0.7, 0.7), h).unwrap()
    }

    #[test]
    fn disk_samples_are_stratified() {
        let (f, disk) = cat_disk(64);
        let w = 0.02 / 64.0;
        for (i, t) in disk.taus.iter().enumerate() {
            assert!(*t >= -0.01 + w * i as f64 && *t < -0.01 + w * (i + 1) as f64);
        }
        assert!(disk.points.iter().all(|p| p.s == 0.7));
        let back = f.along_unstable(&disk.points[5], -disk.taus[5]).unwrap();
        assert!(f.distance(&back, &disk.base) < 1e-15);
    }

    #[test]
    fn zeroth_pushforward_is_the_disk() {
        let (f, disk) = cat_disk(100);
        let mu = pushforward_measure(&f, &disk, 1).unwrap();
        assert_eq!(mu.points, disk.points);
        assert!(mu.weights.iter().all(|&w| w == 0.01));
        assert!((mu.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(mu.provenance.to_string(), "disk-pushforward");
    }

    #[test]
    fn weights_sum_to_one() {
        let (f, disk) = cat_disk(37);
        let mu = pushforward_measure(&f, &disk, 23).unwrap();
        assert!((mu.total_weight() - 1.0).abs() < 1e-12);
        assert_eq!(mu.groups(), 37);
        let nu = orbit_measure(&f, &disk.base, 1001, 10).unwrap();
        assert!((nu.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_integrates_to_itself() {
        let (f, disk) = cat_disk(50);
        let mu = pushforward_measure(&f, &disk, 10).unwrap();
        let r = integrate(&f, &mu, &Observable::Constant(1.0)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_observable_is_an_error() {
        let (f, disk) = cat_disk(8);
        let mu = pushforward_measure(&f, &disk, 2).unwrap();
        assert!(matches!(integrate(&f, &mu, &Observable::Constant(f64::NAN)), Err(Error::NonFinite(0))));
    }

    #[test]
    fn pushforward_marginals_are_uniform() {
        let (f, disk) = cat_disk(1024);
        let mu = pushforward_measure(&f, &disk, 200).unwrap();
        let ks = marginal_ks(&f, &mu, &f.coord_ranges());
        assert!(ks.iter().all(|&d| d <= 0.02), "{ks:?}");
    }

    #[test]
    fn cesaro_averages_move_slowly() {
        // |A_n − A_{n+1}| ≤ 2 sup|φ| / n
        let (f, disk) = cat_disk(64);
        let phi = Observable::Cosine { coord: 0, period: 1.0 };
        for n in [5, 20, 80] {
            let a = integrate(&f, &pushforward_measure(&f, &disk, n).unwrap(), &phi).unwrap().value;
            let b = integrate(&f, &pushforward_measure(&f, &disk, n + 1).unwrap(), &phi).unwrap().value;
            assert!((a - b).abs() <= 2.0 / n as f64);
        }
    }

    #[test]
    fn cesaro_cloud_is_stable() {
        let (f, disk) = cat_disk(512);
        assert!(cesaro_stability(&f, &disk, 200, 3).unwrap() <= 0.02);
    }

    #[test]
    fn whole_manifold_is_always_visited() {
        let f = CatSuspension::sqrt2();
        let v = visit_frequency(&f, &CatPoint::new(0.1, 0.2, 0.3), 1000, &Region::Whole, 10).unwrap();
        assert_eq!(v.frequency, 1.0);
        assert_eq!(v.min_return, Some(1));
    }

    #[test]
    fn region_and_complement_add_to_one() {
        let g = cat_g(0.05);
        let q = CatPoint::new(0.41, 0.13, 0.5);
        for region in [Region::Support, "box:0:0.5,0:1,0:0.7".parse().unwrap()] {
            let a = visit_frequency(&g, &q, 20_000, &region, 10).unwrap();
            let b = visit_frequency(&g, &q, 20_000, &region.complement(), 10).unwrap();
            assert_eq!(a.visits + b.visits, 20_000);
            assert_eq!(a.frequency + b.frequency, 1.0);
        }
    }

    #[test]
    fn returns_to_u_take_two_steps() {
        let g = cat_g(0.05);
        let v = visit_frequency(&g, &CatPoint::new(0.41, 0.13, 0.5), 200_000, &Region::ChartImage, 10).unwrap();
        assert!(v.visits > 0);
        assert!(v.min_return.unwrap() >= 2);
    }

    #[test]
    fn support_volume_matches_box_volume() {
        // the chart is an isometry, so Leb(V) = (4ε)³ in a manifold of volume √2
        let g = cat_g(0.05);
        let exact = (4.0f64 * 0.05).powi(3) / 2f64.sqrt();
        let mc = support_volume_fraction(&g, 400_000, 3).unwrap();
        assert!((mc.mean - exact).abs() <= 3.0 * mc.se, "{mc:?} vs {exact}");
    }

    #[test]
    fn geodesic_volume_samples_are_haar() {
        // fraction within the inscribed disk: 2π(cosh ρ − 1)/(4π) = √2/2
        let f = GeodesicSurface::new().unwrap();
        let mut rng = rng::stream(5, 0, Purpose::Test);
        let n = 20_000;
        let inside = (0..n)
            .filter(|_| {
                let p = f.sample_volume(&mut rng).unwrap();
                crate::systems::hyperbolic_displacement(&p.m) < f.inradius()
            })
            .count();
        let p = inside as f64 / n as f64;
        let se = (0.5 / n as f64).sqrt();
        assert!((p - 0.5f64.sqrt()).abs() < 4.0 * se, "{p}");
    }

    #[test]
    fn constant_has_no_forward_backward_gap() {
        let f = CatSuspension::sqrt2();
        let r = forward_backward_average(&f, &Observable::Constant(0.3), &CatPoint::new(0.1, 0.2, 0.3), 1000, 10).unwrap();
        assert_eq!(r.gap, 0.0);
    }

    #[test]
    fn identical_starts_have_no_dispersion() {
        let f = CatSuspension::sqrt2();
        let q = CatPoint::new(0.1, 0.2, 0.3);
        let r = basin_agreement(&f, &[Observable::Coord(0), Observable::Coord(2)], &[q, q], 5000, 10).unwrap();
        assert!(r.observables.iter().all(|o| o.dispersion == 0.0 && o.max_pairwise_gap == 0.0));
        assert!(basin_agreement(&f, &[Observable::Coord(0)], &[q], 10, 1).is_err());
    }

    #[test]
    fn parse_round_trips() {
        for s in ["const:1.5", "coord:2", "cos:0:1", "ind:V", "ind:not:box:0:0.5,0:1,0:1", "logstretch:80"] {
            let o: Observable = s.parse().unwrap();
            assert_eq!(o.to_string(), s);
        }
        assert!("coord:x".parse::<Observable>().is_err());
        assert!("box:1:0".parse::<Region>().is_err());
    }
}
