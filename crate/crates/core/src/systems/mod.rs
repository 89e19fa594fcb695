//! Partially hyperbolic systems with closed-form time-1 maps.

mod cat;
mod geodesic;

pub use cat::{CatChart, CatPoint, CatSuspension};
pub use geodesic::{displacement as hyperbolic_displacement, GeoChart, GeoPoint, GeodesicSurface};

use std::fmt::Debug;

use crate::error::Result;
use crate::rng::Stream;
use crate::splitting::{Dims, FrameMatrix, SplittingSpec};

/// An invertible map with its derivative expressed in the adapted frame.
pub trait DiffMap: Sync + Send {
    type Point: Copy + Debug + PartialEq + Send + Sync;

    fn dims(&self) -> Dims;

    fn apply(&self, q: &Self::Point) -> Result<Self::Point>;

    fn inverse(&self, q: &Self::Point) -> Result<Self::Point>;

    /// One-step derivative at `q` in adapted-frame coordinates.
    fn jacobian(&self, q: &Self::Point) -> FrameMatrix;

    /// `(apply(q), jacobian(q))`; implementors may share work between the two.
    fn step(&self, q: &Self::Point) -> Result<(Self::Point, FrameMatrix)> {
        Ok((self.apply(q)?, self.jacobian(q)))
    }

    /// Plain coordinates used by observables and CSV output.
    fn coords(&self, q: &Self::Point) -> Vec<f64>;

    /// Membership in the perturbation support `V`; empty for unperturbed maps.
    fn in_support(&self, _q: &Self::Point) -> bool {
        false
    }

    /// Membership in the chart image `U ⊃ V`; empty for unperturbed maps.
    fn in_chart_image(&self, _q: &Self::Point) -> bool {
        false
    }
}

/// Time-1 map of an Anosov-type flow with an adapted orthonormal frame.
pub trait PartiallyHyperbolicSystem: DiffMap {
    type Chart: LocalChart<Point = Self::Point>;

    fn name(&self) -> &'static str;

    fn rates(&self) -> SplittingSpec;

    fn volume_preserving(&self) -> bool;

    /// Dynamically coherent chart `ψ` centered at `q0` with box radius `gamma`.
    fn chart_at(&self, q0: &Self::Point, gamma: f64) -> Result<Self::Chart>;

    /// Move along the strong-unstable leaf through `q` by arclength `tau`.
    fn along_unstable(&self, q: &Self::Point, tau: f64) -> Result<Self::Point>;

    /// Distance used for periodicity detection.
    fn distance(&self, a: &Self::Point, b: &Self::Point) -> f64;

    /// One draw from the normalized invariant volume.
    fn sample_volume(&self, rng: &mut Stream) -> Result<Self::Point>;

    fn frame_differential(&self, q: &Self::Point) -> FrameMatrix {
        self.jacobian(q)
    }
}

/// Local parametrization `ψ: [−γ, γ]^d → M` aligned with the splitting.
///
/// `z`-lines lie in strong-unstable leaves, `{z = 0}` in the center-stable
/// set through the base point and the center axis in a flow orbit.
pub trait LocalChart: Sync + Send {
    type Point;

    fn radius(&self) -> f64;

    fn dims(&self) -> Dims;

    fn base(&self) -> Self::Point;

    /// `ψ(p)`; rejects `p` outside the closed chart box.
    fn forward(&self, p: &[f64]) -> Result<Self::Point>;

    /// `ψ⁻¹(q)` when `q` lies in the chart image `U`.
    fn locate(&self, q: &Self::Point) -> Option<Vec<f64>>;

    /// `Dψ(p)` from chart coordinates to adapted-frame coordinates at `ψ(p)`.
    fn frame_jacobian(&self, p: &[f64]) -> FrameMatrix;

    fn in_box(&self, p: &[f64]) -> bool {
        p.iter().all(|x| x.abs() <= self.radius())
    }
}

/// Ensures `q0` does not come back within `separation` in `steps` iterates.
pub fn check_non_periodic<S: PartiallyHyperbolicSystem>(
    system: &S,
    q0: &S::Point,
    steps: usize,
    separation: f64,
) -> Result<()> {
    let mut q = *q0;
    for k in 1..=steps {
        q = system.apply(&q)?;
        let dist = system.distance(&q, q0);
        if dist <= separation {
            return Err(crate::error::Error::PeriodicBasePoint { period: k, distance: dist });
        }
    }
    Ok(())
}
