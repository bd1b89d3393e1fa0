//! Built-in policies against two closure policies on the same random
//! numbers: the static shared-nominal rule and a threshold rule that keeps
//! the shared queue short.

use rsnlab::harness::load_scenario;
use rsnlab::policies::{shared_nominal, BuiltinPolicy, FnPolicy, Policy};
use rsnlab::sim::{run, RunConfig};
use rsnlab::stats::summarize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = load_scenario(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/linear2.toml"
    ))?;
    let r = 10;
    let horizon = 60.0;
    let reps = 6;

    let mut policies: Vec<Box<dyn Policy>> = BuiltinPolicy::ALL
        .iter()
        .map(|&p| Box::new(p) as Box<dyn Policy>)
        .collect();
    policies.push(Box::new(FnPolicy::new("shared_nominal", |snap| {
        shared_nominal(snap).rates
    })));
    policies.push(Box::new(FnPolicy::new("threshold", move |snap| {
        let c = snap.ctx.topology.capacity();
        let shared = snap.queue[2] as f64 > f64::from(snap.r);
        if shared {
            vec![0.0, 0.0, c[0].min(c[1])]
        } else {
            vec![c[0], c[1], 0.0]
        }
    })));

    let lb = rsnlab::bcp::lower_bound_report(&s.model, &Default::default())?;
    println!("bound {:.3}", lb.bound_value.unwrap_or(f64::NAN));
    for p in policies.iter_mut() {
        let mut costs = Vec::new();
        for rep in 0..reps {
            let mut cfg = RunConfig::new(r, horizon, vec![0; 3], s.seed);
            cfg.key.replication = rep;
            costs.push(run(&s.model, p.as_mut(), &cfg)?.1.cost);
        }
        let m = summarize(&costs);
        println!("{:>15}: J = {:.3} ± {:.3}", p.name(), m.mean, m.ci95);
    }
    Ok(())
}
