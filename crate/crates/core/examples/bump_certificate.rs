//! The smooth bump profile behind the perturbation and its certified
//! derivative bounds.

use hypexp::bump::{bump_certificate, BumpProfile};

fn main() -> hypexp::Result<()> {
    let profile = BumpProfile::new()?;
    let cert = bump_certificate(&profile)?;
    println!("C = sup|φ'| = {:.10}", cert.c1);
    println!("C2 = sup|φ''| = {:.10}", cert.c2);
    println!("s0 = {:.10}, normalization {:.10}", cert.s0, cert.normalization);
    println!("flags {:?} all pass: {}", cert.flags, cert.flags.all_pass());
    for s in [0.0, 0.5, 1.0, 1.5, 1.9, 2.0] {
        println!("φ({s}) = {:.8}  φ'({s}) = {:+.8}", profile.phi(s, 0), profile.phi(s, 1));
    }
    Ok(())
}
