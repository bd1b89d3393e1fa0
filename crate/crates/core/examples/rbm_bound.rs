//! Lower-bound report for every bundled scenario.

use rsnlab::bcp::{lower_bound_report, BoundParams};
use rsnlab::harness::load_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    for name in ["single_queue", "linear2", "x_network", "unstable"] {
        let s = load_scenario(format!("{dir}/{name}.toml"))?;
        let rep = lower_bound_report(&s.model, &BoundParams::default())?;
        match (rep.bound_value, rep.ci) {
            (Some(v), Some(ci)) => println!("{name:>13}: {v:.4} ± {ci:.4}  [{}]", rep.label),
            _ => println!("{name:>13}: {}", rep.label),
        }
        if let Some(c) = &rep.caveat {
            println!("{:>15}{c}", "");
        }
    }
    Ok(())
}
