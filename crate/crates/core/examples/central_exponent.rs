//! Central exponent of g = f∘H on the cat suspension, tracked along one
//! orbit, next to the middle exponent from QR on the same orbit.

use hypexp::lyapunov::{orbit_exponents, CentralOptions};
use hypexp::perturbation::{Perturbation, Perturbed, TChoice};
use hypexp::systems::{CatPoint, CatSuspension, DiffMap};

fn main() -> hypexp::Result<()> {
    let f = CatSuspension::sqrt2();
    let h = Perturbation::new(0.05, TChoice::CapFraction(0.9), 0.2, f.dims())?;
    let g = Perturbed::new(f, &CatPoint::new(0.2, 0.7, 0.7), h)?;
    let opts = CentralOptions { steps: 200_000, ..Default::default() };
    let q = CatPoint::new(0.123, 0.456, 0.789);
    let (c, spec) = orbit_exponents(&g, &q, &opts, true)?;
    let spec = spec.expect("spectrum requested");
    println!("λc(g) = {:.3e} ± {:.1e}", c.estimate, c.stderr);
    println!("summands in [{:.3e}, {:.3e}], {} negative", c.min_summand, c.max_summand, c.negative_summands);
    println!("visits to V {}, steps with ξ > 0 {}", c.visits, c.xi_positive);
    println!("cases {}", c.cases.compact());
    println!("QR spectrum {:?}", spec.exponents);
    Ok(())
}
