//! One-sided reflection of a piecewise-linear path.

use rsnlab::bcp::skorokhod::piecewise_linear;
use rsnlab::bcp::skorokhod_reflect;

fn main() {
    let psi = piecewise_linear(&[(0.0, 0.0), (1.0, -1.0), (3.0, 1.0), (4.0, -2.5)], 0.25);
    for w0 in [0.0, 0.5] {
        let out = skorokhod_reflect(&psi, &[w0]);
        println!("w0 = {w0}");
        println!("{:>6} {:>8} {:>8} {:>8}", "t", "psi", "phi", "eta");
        for k in 0..psi.len() {
            println!(
                "{:>6.2} {:>8.3} {:>8.3} {:>8.3}",
                psi.times[k], psi.values[k][0], out.phi.values[k][0], out.eta.values[k][0]
            );
        }
    }
}
