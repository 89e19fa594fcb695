//! Visits to the support V and to an arbitrary box, with return times.

use hypexp::gibbs::{support_volume_fraction, visit_frequency, Region};
use hypexp::perturbation::{Perturbation, Perturbed, TChoice};
use hypexp::systems::{CatPoint, CatSuspension, DiffMap};

fn main() -> hypexp::Result<()> {
    let f = CatSuspension::sqrt2();
    let h = Perturbation::new(0.05, TChoice::CapFraction(0.9), 0.2, f.dims())?;
    let g = Perturbed::new(f, &CatPoint::new(0.2, 0.7, 0.7), h)?;
    let q = CatPoint::new(0.9, 0.05, 1.1);
    let v = visit_frequency(&g, &q, 1_000_000, &Region::Support, 100)?;
    println!("V: {} visits, frequency {:.5} ± {:.1e}, shortest return {:?}", v.visits, v.frequency, v.stderr, v.min_return);
    let vol = support_volume_fraction(&g, 1_000_000, 3)?;
    println!("Leb(V)/Leb(M) ≈ {:.5} ± {:.1e}, exact {:.5}", vol.mean, vol.se, 0.2f64.powi(3) / 2f64.sqrt());

    let region: Region = "box:0:0.1,0:0.1,0:0.2".parse().map_err(hypexp::Error::Config)?;
    let b = visit_frequency(&g, &q, 1_000_000, &region, 100)?;
    println!("{}: frequency {:.5} ± {:.1e}", b.region, b.frequency, b.stderr);
    Ok(())
}
