//! Smooth bump `φ` built from `η₀(t) = exp(−1/t²)`, and the box mollifier
//! `Φ_ε(x, y, z) = ∏ φ(x_i/ε) · φ(y/ε) · ∏ φ(z_j/ε)`.
//!
//! `η₁(s) = η₀(s)η₀(1−s)`, `η₂(s) = c⁻¹∫_{−∞}^s η₁` and
//! `φ(s) = η₂(s+2)·η₂(2−s)`, so `φ ≡ 1` on `[−1, 1]` and `φ ≡ 0` off
//! `(−2, 2)`. Derivatives of `η₂` use the closed form `η₂′ = η₁/c`.
//!
//! Higher partials obey `|∂^k Φ_ε| ≤ C_k ε^{−k}`; only `k ≤ 2` is certified here.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::splitting::Dims;

const CELLS: usize = 1024;
const GAUSS_POINTS: usize = 16;

fn eta0(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / (t * t)).exp()
    } else {
        0.0
    }
}

fn eta0_prime(t: f64) -> f64 {
    if t > 0.0 {
        2.0 / (t * t * t) * (-1.0 / (t * t)).exp()
    } else {
        0.0
    }
}

/// `η₁(s) = η₀(s)·η₀(1−s)`, supported on `(0, 1)`.
pub fn eta1(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    (-1.0 / (s * s) - 1.0 / ((1.0 - s) * (1.0 - s))).exp()
}

fn eta1_prime(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    eta0_prime(s) * eta0(1.0 - s) - eta0(s) * eta0_prime(1.0 - s)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// The bump profile `φ` with cached normalization and `s₀`.
#[derive(Debug, Clone)]
pub struct BumpProfile {
    c: f64,
    cumulative: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    s0: f64,
}

impl BumpProfile {
    pub fn new() -> Result<Self> {
        let (nodes, weights) = gauss_legendre(GAUSS_POINTS);
        let mut profile = Self { c: 1.0, cumulative: Vec::with_capacity(CELLS + 1), nodes, weights, s0: f64::NAN };
        let h = 1.0 / CELLS as f64;
        let mut acc = 0.0;
        profile.cumulative.push(0.0);
        for i in 0..CELLS {
            acc += profile.integrate_eta1(i as f64 * h, (i + 1) as f64 * h);
            profile.cumulative.push(acc);
        }
        profile.c = acc;
        if !(profile.c > 0.0) {
            return Err(Error::BumpConstruction("normalization ∫η₁ is not positive".into()));
        }
        profile.s0 = profile.locate_s0()?;
        Ok(profile)
    }

    fn integrate_eta1(&self, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * eta1(mid + half * x)).sum::<f64>() * half
    }

    /// `c = ∫η₁`.
    pub fn normalization(&self) -> f64 {
        self.c
    }

    /// The zero of `(sφ(s))′` in `(1, 2)`.
    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// `η₂(s) = c⁻¹∫_{−∞}^s η₁`.
    pub fn eta2(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        let pos = s * CELLS as f64;
        let i = (pos.floor() as usize).min(CELLS - 1);
        let left = i as f64 / CELLS as f64;
        (self.cumulative[i] + self.integrate_eta1(left, s)) / self.c
    }

    fn eta2_d1(&self, s: f64) -> f64 {
        eta1(s) / self.c
    }

    fn eta2_d2(&self, s: f64) -> f64 {
        eta1_prime(s) / self.c
    }

    /// `φ`, `φ′` or `φ″` at `s` (`order` ≤ 2).
    pub fn phi(&self, s: f64, order: u8) -> f64 {
        if s.abs() >= 2.0 {
            return 0.0;
        }
        let (a, b) = (s + 2.0, 2.0 - s);
        match order {
            0 => self.eta2(a) * self.eta2(b),
            1 => self.eta2_d1(a) * self.eta2(b) - self.eta2(a) * self.eta2_d1(b),
            2 => {
                self.eta2_d2(a) * self.eta2(b) - 2.0 * self.eta2_d1(a) * self.eta2_d1(b)
                    + self.eta2(a) * self.eta2_d2(b)
            }
            _ => panic!("phi derivative order {order} not supported"),
        }
    }

    /// `ζ′(s) = (sφ(s))′ = φ(s) + sφ′(s)`.
    pub fn zeta_prime(&self, s: f64) -> f64 {
        self.phi(s, 0) + s * self.phi(s, 1)
    }

    fn locate_s0(&self) -> Result<f64> {
        let mut lo = 1.0;
        let mut hi = 1.9;
        if !(self.zeta_prime(lo) > 0.0 && self.zeta_prime(hi) < 0.0) {
            return Err(Error::BumpConstruction("ζ′ does not change sign on (1, 1.9)".into()));
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.zeta_prime(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

pub fn phi_eval(profile: &BumpProfile, s: f64, order: u8) -> f64 {
    profile.phi(s, order)
}

/// Certified constants and structural flags of a [`BumpProfile`].
#[derive(Debug, Clone, Serialize)]
pub struct BumpCertificate {
    #[serde(rename = "C")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub s0: f64,
    pub normalization: f64,
    pub flags: BumpFlags,
}

#[derive(Debug, Clone, Serialize)]
pub struct BumpFlags {
    pub plateau: bool,
    pub support: bool,
    pub range: bool,
    pub even: bool,
    pub zeta_prime_zeros_in_1_2: usize,
}

impl BumpFlags {
    pub fn all_pass(&self) -> bool {
        self.plateau && self.support && self.range && self.even && self.zeta_prime_zeros_in_1_2 == 1
    }
}

/// Maximum of `f` on `[a, b]` from a uniform grid followed by golden-section
/// refinement around the best node.
pub fn grid_max(f: impl Fn(f64) -> f64, a: f64, b: f64, points: usize) -> f64 {
    let h = (b - a) / (points - 1) as f64;
    let (best, mut value) = (0..points)
        .map(|i| (i, f(a + i as f64 * h)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let (mut lo, mut hi) = ((a + (best as f64 - 1.0) * h).max(a), (a + (best as f64 + 1.0) * h).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) > f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    value = value.max(f(0.5 * (lo + hi)));
    value
}

/// Number of sign changes of `f` on a uniform scan of `(a, b)`; exact zeros
/// (underflow) are skipped.
pub fn count_sign_changes(f: impl Fn(f64) -> f64, a: f64, b: f64, step: f64) -> usize {
    let n = ((b - a) / step).round() as usize;
    let mut last = 0.0f64;
    let mut changes = 0;
    for i in 1..n {
        let v = f(a + i as f64 * step);
        if v == 0.0 {
            continue;
        }
        if last != 0.0 && v.signum() != last.signum() {
            changes += 1;
        }
        last = v;
    }
    changes
}

pub fn bump_certificate(profile: &BumpProfile) -> Result<BumpCertificate> {
    let c1 = grid_max(|s| profile.phi(s, 1).abs(), -2.0, 2.0, 10_001);
    let c2 = grid_max(|s| profile.phi(s, 2).abs(), -2.0, 2.0, 10_001);
    let samples: Vec<f64> = (0..=8000).map(|i| -4.0 + i as f64 * 1e-3).collect();
    let plateau = samples.iter().filter(|s| s.abs() <= 1.0).all(|&s| profile.phi(s, 0) == 1.0);
    let support = samples.iter().filter(|s| s.abs() >= 2.0).all(|&s| profile.phi(s, 0) == 0.0);
    let range = samples.iter().all(|&s| (0.0..=1.0).contains(&profile.phi(s, 0)));
    let even = samples.iter().all(|&s| (profile.phi(s, 0) - profile.phi(-s, 0)).abs() <= 1e-15);
    let zeros = count_sign_changes(|s| profile.zeta_prime(s), 1.0, 2.0, 1e-4);
    let flags = BumpFlags { plateau, support, range, even, zeta_prime_zeros_in_1_2: zeros };
    if zeros != 1 {
        return Err(Error::BumpConstruction(format!("(sφ)′ has {zeros} zeros in (1, 2), expected 1")));
    }
    Ok(BumpCertificate { c1, c2, s0: profile.s0(), normalization: profile.normalization(), flags })
}

/// `Φ_ε` on a chart with bundle dimensions `dims`.
#[derive(Debug, Clone, Copy)]
pub struct MollifierField {
    pub eps: f64,
    pub dims: Dims,
}

impl MollifierField {
    pub fn new(eps: f64, dims: Dims) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParams(format!("ε must be positive, got {eps}")));
        }
        Ok(Self { eps, dims })
    }

    pub fn in_support(&self, p: &[f64]) -> bool {
        p.iter().all(|x| x.abs() < 2.0 * self.eps)
    }

    pub fn value(&self, profile: &BumpProfile, p: &[f64]) -> f64 {
        if !self.in_support(p) {
            return 0.0;
        }
        p.iter().map(|x| profile.phi(x / self.eps, 0)).product()
    }

    /// Full gradient; each partial carries one factor `1/ε`.
    pub fn gradient(&self, profile: &BumpProfile, p: &[f64]) -> Vec<f64> {
        let d = p.len();
        if !self.in_support(p) {
            return vec![0.0; d];
        }
        let vals: Vec<f64> = p.iter().map(|x| profile.phi(x / self.eps, 0)).collect();
        let ders: Vec<f64> = p.iter().map(|x| profile.phi(x / self.eps, 1) / self.eps).collect();
        (0..d)
            .map(|i| ders[i] * vals.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product::<f64>())
            .collect()
    }
}

pub fn mollifier_eval(field: &MollifierField, profile: &BumpProfile, p: &[f64]) -> f64 {
    field.value(profile, p)
}
