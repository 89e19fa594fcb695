//! Linear algebra in an adapted orthonormal frame `(E^s, E^c, E^u)`.
//!
//! Coordinates are always taken with respect to an orthonormal frame aligned
//! with the invariant splitting, so Euclidean norms of coordinate vectors are
//! the adapted norms of the underlying tangent vectors.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Dimensions of the stable, center and unstable bundles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub s: usize,
    pub c: usize,
    pub u: usize,
}

impl Dims {
    pub const fn new(s: usize, c: usize, u: usize) -> Self {
        Self { s, c, u }
    }

    pub const fn total(&self) -> usize {
        self.s + self.c + self.u
    }

    pub fn stable(&self) -> Range<usize> {
        0..self.s
    }

    pub fn center(&self) -> Range<usize> {
        self.s..self.s + self.c
    }

    pub fn unstable(&self) -> Range<usize> {
        self.s + self.c..self.total()
    }

    /// Index range of `E^cu = E^c ⊕ E^u`.
    pub fn center_unstable(&self) -> Range<usize> {
        self.s..self.total()
    }
}

/// Which invariant bundle a block refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bundle {
    Stable,
    Center,
    Unstable,
}

impl Bundle {
    pub const ALL: [Bundle; 3] = [Bundle::Stable, Bundle::Center, Bundle::Unstable];

    fn range(self, dims: &Dims) -> Range<usize> {
        match self {
            Bundle::Stable => dims.stable(),
            Bundle::Center => dims.center(),
            Bundle::Unstable => dims.unstable(),
        }
    }
}

/// Tangent vector in adapted-frame coordinates, ordered `(vs, vc, vu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVector {
    dims: Dims,
    data: DVector<f64>,
}

impl FrameVector {
    pub fn new(dims: Dims, data: DVector<f64>) -> Result<Self> {
        if data.len() != dims.total() {
            return Err(Error::DimensionMismatch { expected: dims.total(), got: data.len() });
        }
        Ok(Self { dims, data })
    }

    pub fn from_parts(vs: &[f64], vc: &[f64], vu: &[f64]) -> Self {
        let dims = Dims::new(vs.len(), vc.len(), vu.len());
        let data = DVector::from_iterator(dims.total(), vs.iter().chain(vc).chain(vu).copied());
        Self { dims, data }
    }

    /// A vector of `E^cu` with a one-dimensional center and unstable part.
    pub fn center_unstable(vc: f64, vu: f64) -> Self {
        Self::from_parts(&[0.0], &[vc], &[vu])
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn vs(&self) -> &[f64] {
        &self.data.as_slice()[self.dims.stable()]
    }

    pub fn vc(&self) -> &[f64] {
        &self.data.as_slice()[self.dims.center()]
    }

    pub fn vu(&self) -> &[f64] {
        &self.data.as_slice()[self.dims.unstable()]
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { dims: self.dims, data: &self.data * alpha }
    }
}

fn slice_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Slope `s_c(v) = ‖v^u‖ / ‖v^c‖` of a vector of `E^cu`; `+∞` on `E^u`.
pub fn slope(v: &FrameVector) -> Result<f64> {
    if v.vs().iter().any(|&x| x != 0.0) {
        return Err(Error::NotCenterUnstable);
    }
    let nc = slice_norm(v.vc());
    let nu = slice_norm(v.vu());
    if nc == 0.0 && nu == 0.0 {
        return Err(Error::ZeroVector);
    }
    if nc == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(nu / nc)
}

/// The cone `C_b = {v ∈ E^cu : s_c(v) ≤ b} ∪ {0}` around `E^c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cone {
    b: f64,
}

impl Cone {
    pub fn new(b: f64) -> Result<Self> {
        if !(b >= 0.0) {
            return Err(Error::Precondition(format!("cone aperture must be nonnegative, got {b}")));
        }
        Ok(Self { b })
    }

    pub fn aperture(&self) -> f64 {
        self.b
    }

    pub fn contains(&self, v: &FrameVector) -> Result<bool> {
        match slope(v) {
            Ok(s) => Ok(s <= self.b),
            Err(Error::ZeroVector) => Ok(true),
            Err(e) => Err(e),
        }
    }
}

pub fn cone_contains(cone: &Cone, v: &FrameVector) -> Result<bool> {
    cone.contains(v)
}

/// A `d×d` derivative expressed in the adapted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix {
    dims: Dims,
    m: DMatrix<f64>,
}

impl FrameMatrix {
    pub fn new(dims: Dims, m: DMatrix<f64>) -> Result<Self> {
        let d = dims.total();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: m.nrows().max(m.ncols()) });
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Precondition("frame matrix has non-finite entries".into()));
        }
        Ok(Self { dims, m })
    }

    pub fn identity(dims: Dims) -> Self {
        let d = dims.total();
        Self { dims, m: DMatrix::identity(d, d) }
    }

    pub fn from_diagonal(dims: Dims, diag: &[f64]) -> Self {
        assert_eq!(diag.len(), dims.total());
        Self { dims, m: DMatrix::from_diagonal(&DVector::from_column_slice(diag)) }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn block(&self, rows: Bundle, cols: Bundle) -> DMatrix<f64> {
        let r = rows.range(&self.dims);
        let c = cols.range(&self.dims);
        self.m.view((r.start, c.start), (r.len(), c.len())).into_owned()
    }

    /// The restriction to `E^cu`, as a square block.
    pub fn center_unstable_block(&self) -> DMatrix<f64> {
        let r = self.dims.center_unstable();
        self.m.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }

    pub fn compose(&self, rhs: &FrameMatrix) -> FrameMatrix {
        debug_assert_eq!(self.dims, rhs.dims);
        FrameMatrix { dims: self.dims, m: &self.m * &rhs.m }
    }

    pub fn apply(&self, v: &FrameVector) -> FrameVector {
        FrameVector { dims: self.dims, data: &self.m * &v.data }
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn try_inverse(&self) -> Result<FrameMatrix> {
        self.m
            .clone()
            .try_inverse()
            .map(|m| FrameMatrix { dims: self.dims, m })
            .ok_or(Error::SingularJacobian)
    }

    /// True when the off-diagonal bundle blocks vanish (up to `tol`).
    pub fn is_block_diagonal(&self, tol: f64) -> bool {
        Bundle::ALL.iter().all(|&r| {
            Bundle::ALL
                .iter()
                .filter(|&&c| c != r)
                .all(|&c| self.block(r, c).iter().all(|x| x.abs() <= tol))
        })
    }
}

/// Operator 2-norm `‖A‖`.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.nrows() == 1 || a.ncols() == 1 {
        return a.norm();
    }
    a.clone().singular_values().max()
}

/// Co-norm `m(A) = inf ‖Av‖/‖v‖`.
pub fn conorm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if a.ncols() == 1 {
        return a.norm();
    }
    if a.nrows() < a.ncols() {
        return 0.0;
    }
    a.clone().singular_values().min()
}

/// Domination rates `λ1 ≤ μ1 < λ2 ≤ μ2 < λ3 ≤ μ3` with norm constant `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplittingSpec {
    pub dims: Dims,
    pub lambda: [f64; 3],
    pub mu: [f64; 3],
    pub c_rate: f64,
}

impl SplittingSpec {
    pub fn new(dims: Dims, lambda: [f64; 3], mu: [f64; 3], c_rate: f64) -> Result<Self> {
        let spec = Self { dims, lambda, mu, c_rate };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let [l1, l2, l3] = self.lambda;
        let [m1, m2, m3] = self.mu;
        if self.dims.s == 0 || self.dims.c == 0 || self.dims.u == 0 {
            return Err(Error::InvalidRates("all bundles must be nontrivial".into()));
        }
        if !(0.0 < l1 && l1 <= m1 && m1 < l2 && l2 <= m2 && m2 < l3 && l3 <= m3) {
            return Err(Error::InvalidRates(format!(
                "need 0 < λ1 ≤ μ1 < λ2 ≤ μ2 < λ3 ≤ μ3, got λ={:?} μ={:?}",
                self.lambda, self.mu
            )));
        }
        if !(m1 < 1.0 && 1.0 < l3) {
            return Err(Error::InvalidRates("need μ1 < 1 < λ3".into()));
        }
        if !(self.c_rate >= 1.0) {
            return Err(Error::InvalidRates("norm constant must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BundleStats {
    pub bundle: Bundle,
    pub min_conorm: f64,
    pub max_norm: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub sample: usize,
    pub bundle: Bundle,
    pub what: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub samples: usize,
    pub bundles: Vec<BundleStats>,
    pub violations: Vec<Violation>,
}

impl DominationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const DEFAULT_DOMINATION_SLACK: f64 = 1e-12;

/// Compares one-step block norms and co-norms against `C^{∓1}(λ_i, μ_i)`.
pub fn check_domination(spec: &SplittingSpec, samples: &[FrameMatrix]) -> DominationReport {
    check_domination_with_slack(spec, samples, DEFAULT_DOMINATION_SLACK)
}

pub fn check_domination_with_slack(
    spec: &SplittingSpec,
    samples: &[FrameMatrix],
    slack: f64,
) -> DominationReport {
    let mut bundles: Vec<BundleStats> = Bundle::ALL
        .iter()
        .enumerate()
        .map(|(i, &bundle)| BundleStats {
            bundle,
            min_conorm: f64::INFINITY,
            max_norm: 0.0,
            lower_bound: spec.lambda[i] / spec.c_rate,
            upper_bound: spec.mu[i] * spec.c_rate,
        })
        .collect();
    let mut violations = Vec::new();
    for (k, sample) in samples.iter().enumerate() {
        if !sample.is_block_diagonal(slack) {
            violations.push(Violation {
                sample: k,
                bundle: Bundle::Center,
                what: "splitting not invariant (off-diagonal block)".into(),
                value: f64::NAN,
                bound: slack,
            });
        }
        for stats in bundles.iter_mut() {
            let block = sample.block(stats.bundle, stats.bundle);
            let n = operator_norm(&block);
            let m = conorm(&block);
            stats.max_norm = stats.max_norm.max(n);
            stats.min_conorm = stats.min_conorm.min(m);
            if m < stats.lower_bound * (1.0 - slack) {
                violations.push(Violation {
                    sample: k,
                    bundle: stats.bundle,
                    what: "co-norm below lower rate".into(),
                    value: m,
                    bound: stats.lower_bound,
                });
            }
            if n > stats.upper_bound * (1.0 + slack) {
                violations.push(Violation {
                    sample: k,
                    bundle: stats.bundle,
                    what: "norm above upper rate".into(),
                    value: n,
                    bound: stats.upper_bound,
                });
            }
        }
    }
    DominationReport { samples: samples.len(), bundles, violations }
}

/// Output of [`graph_gain`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GraphGain {
    /// The gain `ξ ≥ 0` with `‖A|G‖ ≥ (1+ξ)‖A|E‖`.
    pub xi: f64,
    pub norm_on_e: f64,
    pub norm_on_graph: f64,
}

/// The bracketed quotient
/// `(1 + ‖ALv‖²/‖Av‖²) / (1 + ‖Lv‖²/‖v‖²)` for a nonzero `v ∈ E`.
pub fn graph_quotient(a_e: &DMatrix<f64>, a_f: &DMatrix<f64>, l: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let av = a_e * v;
    let lv = l * v;
    let alv = a_f * &lv;
    let num = 1.0 + alv.norm_squared() / av.norm_squared();
    let den = 1.0 + lv.norm_squared() / v.norm_squared();
    num / den
}

const GAIN_SAMPLES: usize = 4096;

/// Expansion gain of `A = diag(A_E, A_F)` on the graph of `L: E → F` over
/// its expansion on `E`.
///
/// `ξ` is `sqrt(inf_v q(v)) − 1` where `q` is [`graph_quotient`]; for
/// `dim E = 1` the infimum is over a single direction and `‖A|G‖ = (1+ξ)‖A|E‖`
/// holds with equality. Higher-dimensional `E` minimizes `q` over sampled
/// unit vectors.
pub fn graph_gain(a_e: &DMatrix<f64>, a_f: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<GraphGain> {
    let de = a_e.nrows();
    let df = a_f.nrows();
    if a_e.ncols() != de || a_f.ncols() != df {
        return Err(Error::Precondition("blocks must be square".into()));
    }
    if l.nrows() != df || l.ncols() != de {
        return Err(Error::DimensionMismatch { expected: df * de, got: l.nrows() * l.ncols() });
    }
    let norm_e = operator_norm(a_e);
    let conorm_f = conorm(a_f);
    if !(conorm_f > 1.0 && norm_e < conorm_f) {
        return Err(Error::NotDominated { norm_e, conorm_f });
    }

    // Orthonormal basis of G = graph(L) = range [I; L].
    let mut basis = DMatrix::zeros(de + df, de);
    basis.view_mut((0, 0), (de, de)).fill_with_identity();
    basis.view_mut((de, 0), (df, de)).copy_from(l);
    let q = basis.qr().q();
    let mut a = DMatrix::zeros(de + df, de + df);
    a.view_mut((0, 0), (de, de)).copy_from(a_e);
    a.view_mut((de, de), (df, df)).copy_from(a_f);
    let norm_g = operator_norm(&(&a * q));

    let min_quotient = if de == 1 {
        graph_quotient(a_e, a_f, l, &DVector::from_element(1, 1.0))
    } else {
        let mut rng = crate::rng::stream(0x6a61_696e, 0, crate::rng::Purpose::GainSampling);
        let q = |v: &DVector<f64>| graph_quotient(a_e, a_f, l, v);
        let start = (0..GAIN_SAMPLES)
            .map(|_| crate::rng::unit_vector(&mut rng, de))
            .map(|v| (q(&v), v))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one sample");
        refine_on_sphere(q, start.1, start.0)
    };
    let xi = (min_quotient.sqrt() - 1.0).max(0.0);
    Ok(GraphGain { xi, norm_on_e: norm_e, norm_on_graph: norm_g })
}

/// Pattern search on the unit sphere from `v`, halving the step until it
/// drops below `1e-12`.
fn refine_on_sphere(q: impl Fn(&DVector<f64>) -> f64, mut v: DVector<f64>, mut best: f64) -> f64 {
    let n = v.len();
    let mut h = 1e-2;
    while h > 1e-12 {
        // orthonormal basis of the tangent space at v
        let mut tangents: Vec<DVector<f64>> = Vec::with_capacity(n - 1);
        for i in 0..n {
            let mut t = DVector::zeros(n);
            t[i] = 1.0;
            t -= &v * v[i];
            for b in &tangents {
                let d = b.dot(&t);
                t -= b * d;
            }
            let norm = t.norm();
            if norm > 1e-8 && tangents.len() < n - 1 {
                tangents.push(t / norm);
            }
        }
        let mut moved = false;
        for t in &tangents {
            for sign in [1.0, -1.0] {
                let w = (&v + t * (sign * h)).normalize();
                let val = q(&w);
                if val < best {
                    best = val;
                    v = w;
                    moved = true;
                    break;
                }
            }
            if moved {
                break;
            }
        }
        if !moved {
            h /= 2.0;
        }
    }
    best
}

/// Random block pair with `‖A_E‖ < λ < m(A_F)`, used by property tests and
/// the acceptance suite.
pub fn random_dominated_blocks<R: Rng>(rng: &mut R, de: usize, df: usize) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let lambda = 1.0 + rng.random_range(0.05..2.0);
    let a_e = random_with_singular_range(rng, de, 0.05 * lambda, 0.95 * lambda);
    let a_f = random_with_singular_range(rng, df, 1.05 * lambda, 3.0 * lambda);
    (a_e, a_f, lambda)
}

fn random_with_singular_range<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let u = crate::rng::random_orthogonal(rng, n);
    let v = crate::rng::random_orthogonal(rng, n);
    let s = DVector::from_fn(n, |_, _| rng.random_range(lo..hi));
    u * DMatrix::from_diagonal(&s) * v.transpose()
}

#[derive(Debug, Clone, Serialize)]
pub struct GainSuiteReport {
    pub instances: usize,
    pub directions: usize,
    /// Instances with `max_u ‖Au‖ < (1+ξ)‖A|E‖·(1 − slack)`.
    pub violations: usize,
    /// Instances with `ξ = 0` although `L ≠ 0`.
    pub zero_gain: usize,
    pub min_xi: f64,
    /// Largest `1 − max_u ‖Au‖ / ((1+ξ)‖A|E‖)` seen.
    pub worst_shortfall: f64,
    /// The same comparison against the exact `‖A|G‖` from an SVD.
    pub exact_violations: usize,
    pub worst_exact_shortfall: f64,
}

impl GainSuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.zero_gain == 0 && self.instances > 0
    }

    pub fn passed_exact(&self) -> bool {
        self.exact_violations == 0 && self.zero_gain == 0 && self.instances > 0
    }
}

/// Random dominated `de + df` blocks with random `L ≠ 0`; the gain
/// inequality is checked against the largest `‖Au‖` over `directions`
/// sampled unit vectors `u` of the graph.
pub fn gain_suite(instances: usize, directions: usize, de: usize, df: usize, slack: f64, seed: u64) -> Result<GainSuiteReport> {
    use rayon::prelude::*;
    let rows: Vec<(f64, f64, f64)> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = crate::rng::stream(seed, i as u64, crate::rng::Purpose::GainSampling);
            let (a_e, a_f, _) = random_dominated_blocks(&mut rng, de, df);
            let scale = rng.random_range(0.01..3.0);
            let l = DMatrix::from_fn(df, de, |_, _| rng.random_range(-1.0..1.0)) * scale;
            let gain = graph_gain(&a_e, &a_f, &l)?;
            let mut basis = DMatrix::zeros(de + df, de);
            basis.view_mut((0, 0), (de, de)).fill_with_identity();
            basis.view_mut((de, 0), (df, de)).copy_from(&l);
            let q = basis.qr().q();
            let mut a = DMatrix::zeros(de + df, de + df);
            a.view_mut((0, 0), (de, de)).copy_from(&a_e);
            a.view_mut((de, de), (df, df)).copy_from(&a_f);
            let aq = &a * &q;
            let brute = (0..directions)
                .map(|_| (&aq * crate::rng::unit_vector(&mut rng, de)).norm())
                .fold(0.0, f64::max);
            let target = (1.0 + gain.xi) * gain.norm_on_e;
            Ok((gain.xi, 1.0 - brute / target, 1.0 - gain.norm_on_graph / target))
        })
        .collect::<Result<_>>()?;
    Ok(GainSuiteReport {
        instances,
        directions,
        violations: rows.iter().filter(|r| r.1 > slack).count(),
        zero_gain: rows.iter().filter(|r| !(r.0 > 0.0)).count(),
        min_xi: rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min),
        worst_shortfall: rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max),
        exact_violations: rows.iter().filter(|r| r.2 > slack).count(),
        worst_exact_shortfall: rows.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Slope of `u = (u_E, u_F)` with respect to `E`.
pub fn slope_wrt(u_e: &DVector<f64>, u_f: &DVector<f64>) -> f64 {
    let ne = u_e.norm();
    if ne == 0.0 {
        return f64::INFINITY;
    }
    u_f.norm() / ne
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slope_examples() {
        assert_eq!(slope(&FrameVector::center_unstable(1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(slope(&FrameVector::center_unstable(1.0, 2.0)).unwrap(), 2.0);
        assert_eq!(slope(&FrameVector::center_unstable(0.0, 1.0)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn slope_errors() {
        assert_eq!(slope(&FrameVector::center_unstable(0.0, 0.0)), Err(Error::ZeroVector));
        let v = FrameVector::from_parts(&[0.1], &[1.0], &[0.0]);
        assert_eq!(slope(&v), Err(Error::NotCenterUnstable));
    }

    #[test]
    fn cone_examples() {
        let c1 = Cone::new(1.0).unwrap();
        assert!(c1.contains(&FrameVector::center_unstable(1.0, 0.5)).unwrap());
        assert!(!c1.contains(&FrameVector::center_unstable(1.0, 2.0)).unwrap());
        let c0 = Cone::new(0.0).unwrap();
        assert!(c0.contains(&FrameVector::center_unstable(1.0, 0.0)).unwrap());
        assert!(c0.contains(&FrameVector::center_unstable(0.0, 0.0)).unwrap());
        assert!(c0.contains(&FrameVector::from_parts(&[1.0], &[1.0], &[0.0])).is_err());
        assert!(Cone::new(-1.0).is_err());
    }

    fn m1(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn graph_gain_zero_map() {
        let g = graph_gain(&m1(1.0), &m1(2.0), &m1(0.0)).unwrap();
        assert_eq!(g.xi, 0.0);
        assert!((g.norm_on_graph - g.norm_on_e).abs() < 1e-15);
    }

    #[test]
    fn graph_gain_diag_one_two() {
        let g = graph_gain(&m1(1.0), &m1(2.0), &m1(1.0)).unwrap();
        // Closed form: ‖A(1,1)‖/‖(1,1)‖ = sqrt(5/2).
        let expected = (5.0f64 / 2.0).sqrt();
        assert!((g.norm_on_graph - expected).abs() < 1e-12);
        assert!((g.xi - (expected - 1.0)).abs() < 1e-12);
        // Sampled maximization over unit vectors of G.
        let brute = (0..1000)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let u = [sign / 2f64.sqrt(), sign / 2f64.sqrt()];
                ((u[0]).powi(2) + (2.0 * u[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        assert!((brute - 1.5811388300841898).abs() < 1e-12);
    }

    #[test]
    fn gain_suite_small() {
        let r = gain_suite(2000, 1000, 2, 2, 1e-9, 4).unwrap();
        assert!(r.passed_exact(), "{r:?}");
        let r = gain_suite(200, 1000, 1, 2, 1e-9, 4).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn graph_gain_rejects_undominated() {
        assert!(matches!(graph_gain(&m1(2.0), &m1(1.5), &m1(1.0)), Err(Error::NotDominated { .. })));
        assert!(matches!(graph_gain(&m1(0.5), &m1(0.9), &m1(1.0)), Err(Error::NotDominated { .. })));
    }

    #[test]
    fn domination_flags_corrupted_center() {
        let dims = Dims::new(1, 1, 1);
        let spec = SplittingSpec::new(dims, [0.3, 1.0, 2.0], [0.5, 1.0, 3.0], 1.0).unwrap();
        let ok = FrameMatrix::from_diagonal(dims, &[0.4, 1.0, 2.5]);
        assert!(check_domination(&spec, &[ok.clone()]).passed());
        let bad = FrameMatrix::from_diagonal(dims, &[0.4, 1.5, 2.5]);
        let report = check_domination(&spec, &[ok, bad]);
        assert!(!report.passed());
        assert!(report.violations.iter().all(|v| v.sample == 1 && v.bundle == Bundle::Center));
    }

    #[test]
    fn splitting_spec_validation() {
        let dims = Dims::new(1, 1, 1);
        assert!(SplittingSpec::new(dims, [0.3, 1.0, 1.0], [0.5, 1.0, 3.0], 1.0).is_err());
        assert!(SplittingSpec::new(dims, [0.3, 1.0, 2.0], [1.0, 1.0, 3.0], 1.0).is_err());
        assert!(SplittingSpec::new(Dims::new(0, 1, 1), [0.3, 1.0, 2.0], [0.5, 1.0, 3.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn slope_is_scale_invariant(c in -1e3f64..1e3, u in -1e3f64..1e3, alpha in -1e3f64..1e3) {
            prop_assume!(c.abs() > 1e-6 && alpha.abs() > 1e-6);
            let v = FrameVector::center_unstable(c, u);
            let s1 = slope(&v).unwrap();
            let s2 = slope(&v.scale(alpha)).unwrap();
            prop_assert!((s1 - s2).abs() <= 1e-12 * s1.max(1.0));
        }

        #[test]
        fn dominated_action_increases_slope(seed in any::<u64>(), ue in -1.0f64..1.0, uf in -1.0f64..1.0) {
            prop_assume!(ue.abs() > 1e-3 && uf.abs() > 1e-3);
            let mut rng = crate::rng::stream(seed, 0, crate::rng::Purpose::Test);
            let (a_e, a_f, _) = random_dominated_blocks(&mut rng, 1, 1);
            let before = slope_wrt(&DVector::from_element(1, ue), &DVector::from_element(1, uf));
            let after = slope_wrt(&(&a_e * DVector::from_element(1, ue)), &(&a_f * DVector::from_element(1, uf)));
            prop_assert!(after > before);
        }
    }
}
