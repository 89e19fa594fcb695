//! Geodesic flow on the Bolza surface, points kept in the octagon's
//! fundamental domain. The spectrum is (1, 0, −1) along every orbit.

use hypexp::lyapunov::qr_spectrum;
use hypexp::rng::{self, Purpose};
use hypexp::systems::{hyperbolic_displacement, DiffMap, GeodesicSurface, PartiallyHyperbolicSystem};

fn main() -> hypexp::Result<()> {
    let surface = GeodesicSurface::new()?;
    println!("{} side pairings, inradius {:.6}", surface.generators().len(), surface.inradius());
    let q = surface.polar_point(0.3, 0.2, 0.7)?;
    let mut p = q;
    for k in 1..=5 {
        p = surface.apply(&p)?;
        println!("step {k}: distance from the origin {:.6}", hyperbolic_displacement(&p.m));
    }
    let spec = qr_spectrum(&surface, &q, 100_000, 50)?;
    println!("QR spectrum {:?}", spec.exponents);

    let mut stream = rng::stream(1, 0, Purpose::InitialPoints);
    let r = surface.sample_volume(&mut stream)?;
    println!("Haar sample at distance {:.4}", hyperbolic_displacement(&r.m));
    Ok(())
}
