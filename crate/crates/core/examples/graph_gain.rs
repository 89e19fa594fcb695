//! The gain ξ of a dominated block map on the graph of a linear map L.

use hypexp::splitting::{gain_suite, graph_gain};
use nalgebra::DMatrix;

fn main() -> hypexp::Result<()> {
    let a_e = DMatrix::from_row_slice(2, 2, &[1.2, 0.1, 0.0, 1.1]);
    let a_f = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.5, 2.8]);
    let l = DMatrix::from_row_slice(2, 2, &[0.3, -0.1, 0.2, 0.05]);
    let g = graph_gain(&a_e, &a_f, &l)?;
    println!("ξ = {:.6e}, ‖A|E‖ = {:.6}, ‖A|G‖ = {:.6}", g.xi, g.norm_on_e, g.norm_on_graph);

    let r = gain_suite(2000, 1000, 2, 2, 1e-9, 3)?;
    println!(
        "{} instances: {} violations against sampled directions, {} against the exact norm",
        r.instances, r.violations, r.exact_violations
    );
    Ok(())
}
