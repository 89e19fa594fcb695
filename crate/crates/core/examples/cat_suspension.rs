//! The suspension of Arnold's cat map under a constant roof: one time-1 step,
//! its frame differential and the exact top exponent from roof crossings.

use hypexp::lyapunov::qr_spectrum;
use hypexp::systems::{CatPoint, CatSuspension, DiffMap, PartiallyHyperbolicSystem};

fn main() -> hypexp::Result<()> {
    let f = CatSuspension::sqrt2();
    let q = CatPoint::new(0.1, 0.2, 0.3);
    let next = f.apply(&q)?;
    println!("f({q:?}) = {next:?}");
    println!("Df in the (s, c, u) frame:\n{}", f.jacobian(&q).matrix());
    let rates = f.rates();
    println!("rates λ = {:?}, μ = {:?}, C = {:.4}", rates.lambda, rates.mu, rates.c_rate);

    // λ_u(f) = (crossings/N)·log λ_u exactly
    let n = 200_000;
    let mut p = q;
    let mut crossings = 0u64;
    for _ in 0..n {
        crossings += f.crossings(p.s) as u64;
        p = f.apply(&p)?;
    }
    let oracle = crossings as f64 / n as f64 * f.lambda_u().ln();
    let qr = qr_spectrum(&f, &q, n, 50)?;
    println!("QR spectrum {:?}", qr.exponents);
    println!("oracle top exponent {oracle:.15}, difference {:.1e}", qr.exponents[0] - oracle);
    Ok(())
}
