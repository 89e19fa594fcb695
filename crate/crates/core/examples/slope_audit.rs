//! Return blocks to the support: the exit slope of the center equals the
//! kicked entry slope times the realized unstable stretch.

use hypexp::lyapunov::{invariance_audit, slope_audit};
use hypexp::perturbation::{Perturbation, Perturbed, TChoice};
use hypexp::systems::{CatPoint, CatSuspension, DiffMap};

fn main() -> hypexp::Result<()> {
    let f = CatSuspension::sqrt2();
    let h = Perturbation::new(0.05, TChoice::CapFraction(0.9), 0.2, f.dims())?;
    let g = Perturbed::new(f, &CatPoint::new(0.2, 0.7, 0.7), h)?;
    let q = CatPoint::new(0.6, 0.1, 0.4);
    let r = slope_audit(&g, &q, 200, 50_000_000, 80)?;
    println!(
        "{} blocks, max telescoping error {:.2e}, bound violations {}, passed {}",
        r.blocks_audited,
        r.max_telescoping_error,
        r.bound_violations,
        r.passed(1e-10)
    );
    for b in r.blocks.iter().take(6) {
        println!("{:>8} n={:<4} {:<8} entry {:.3e} exit {:.3e}", b.entry_step, b.n, b.vector, b.entry_slope, b.exit_slope);
    }
    let inv = invariance_audit(&g, &q, 20_000, 80)?;
    println!("invariance: max angle {:.2e}", inv.max_angle);
    Ok(())
}
