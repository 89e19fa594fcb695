//! Closeness of the shear h to the identity as ε shrinks under
//! t(ε) = min(ε³, 1/(4C)).

use hypexp::perturbation::{Perturbation, TChoice};
use hypexp::splitting::Dims;

fn main() -> hypexp::Result<()> {
    let dims = Dims::new(1, 1, 1);
    println!("{:>6} {:>10} {:>12} {:>12} {:>12} {:>10}", "eps", "t", "C1 dist", "C2 dist", "det min", "roundtrip");
    for eps in [0.05, 0.02, 0.01] {
        let h = Perturbation::new(eps, TChoice::Auto, 0.2, dims)?;
        let r = h.closeness_audit(41, 2e-4 * eps, 2e-2 * eps)?;
        let rt = h.round_trip_error(10_000, 7)?;
        println!("{eps:>6} {:>10.3e} {:>12.4e} {:>12.4e} {:>12.8} {:>10.1e}", r.t, r.c1_distance, r.c2_distance, r.det_min, rt);
    }
    // the shear itself at one point of the plateau
    let h = Perturbation::new(0.05, TChoice::CapFraction(0.9), 0.2, dims)?;
    let p = [0.01, 0.02, -0.01];
    println!("h({p:?}) = {:?}", h.h_apply(&p)?);
    println!("Dh = {}", h.h_jacobian(&p)?.matrix());
    Ok(())
}
