//! Forward averages from several initial points should agree when a single
//! physical measure attracts them all.

use hypexp::gibbs::{basin_agreement, Observable};
use hypexp::perturbation::{Perturbation, Perturbed, TChoice};
use hypexp::rng::{self, Purpose};
use hypexp::systems::{CatPoint, CatSuspension, DiffMap, PartiallyHyperbolicSystem};

fn main() -> hypexp::Result<()> {
    let f = CatSuspension::sqrt2();
    let h = Perturbation::new(0.05, TChoice::CapFraction(0.9), 0.2, f.dims())?;
    let g = Perturbed::new(f.clone(), &CatPoint::new(0.2, 0.7, 0.7), h)?;
    let starts = (0..8).map(|k| f.sample_volume(&mut rng::stream(5, k, Purpose::InitialPoints))).collect::<hypexp::Result<Vec<_>>>()?;
    let observables = ["coord:0", "coord:2", "cos:1:1"].map(|s| s.parse::<Observable>().map_err(hypexp::Error::Config)).into_iter().collect::<hypexp::Result<Vec<_>>>()?;
    let r = basin_agreement(&g, &observables, &starts, 200_000, 50)?;
    for o in &r.observables {
        println!("{:<10} mean {:.5} dispersion {:.2e} within-orbit se {:.2e}", o.observable, o.mean, o.dispersion, o.mean_within_se);
    }
    Ok(())
}
