//! The effective cost on the two-resource linear network: values, minimizers,
//! the norm-equivalence constant and the monotonicity check.

use rsnlab::bcp::EffectiveCost;
use rsnlab::model::validate_topology;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let topo = validate_topology(&[vec![1, 0, 1], vec![0, 1, 1]], &[2.0, 2.0])?;

    for h in [[1.0, 1.0, 1.0], [2.0, 3.0, 1.0], [1.0, 1.0, 10.0]] {
        let ec = EffectiveCost::new(&topo, &[1.0; 3], &h);
        println!("h = {h:?}");
        for w in [[0.0, 0.0], [2.0, 3.0], [3.0, 2.0], [1.0, 1.0], [4.0, 0.5]] {
            let (v, q) = ec.solve(&w)?;
            println!("  w = {w:?}  hhat = {v:.3}  q* = {q:.3?}");
        }
        println!("  c_h ~ {:.4}", ec.bound_constant(256)?);
        match ec.check_monotone(5_000, 7) {
            m if m.is_monotone() => println!("  monotone on 5000 sampled pairs"),
            m => println!("  not monotone: {m:?}"),
        }
    }
    Ok(())
}
