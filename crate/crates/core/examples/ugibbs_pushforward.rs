//! Approximate u-Gibbs states by pushing a short unstable disk forward and
//! averaging over the first n iterates.

use hypexp::gibbs::{integrate, marginal_ks, pushforward_measure, Observable, UnstableDisk};
use hypexp::perturbation::{Perturbation, Perturbed, TChoice};
use hypexp::systems::{CatPoint, CatSuspension, DiffMap};

fn main() -> hypexp::Result<()> {
    let f = CatSuspension::sqrt2();
    let disk = UnstableDisk::sample(&f, &CatPoint::new(0.3, 0.6, 0.7), 0.01, 1024, 11)?;
    let cloud = pushforward_measure(&f, &disk, 200)?;
    println!("{} points, total weight {}", cloud.len(), cloud.total_weight());
    println!("KS from uniform per coordinate {:?}", marginal_ks(&f, &cloud, &f.coord_ranges()));

    let h = Perturbation::new(0.05, TChoice::CapFraction(0.9), 0.2, f.dims())?;
    let g = Perturbed::new(f.clone(), &CatPoint::new(0.2, 0.7, 0.7), h)?;
    let cloud = pushforward_measure(&g, &disk, 200)?;
    for spec in ["cos:0:1", "ind:V", "logstretch"] {
        let obs: Observable = spec.parse().map_err(hypexp::Error::Config)?;
        let r = integrate(&g, &cloud, &obs)?;
        println!("∫ {spec} dμ = {:.6e} ± {:.1e}", r.value, r.stderr);
    }
    Ok(())
}
