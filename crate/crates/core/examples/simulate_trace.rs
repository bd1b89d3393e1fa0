//! One run of the hgi policy on the linear network, with its diagnostics.
//!
//!     cargo run --example simulate_trace > events.csv

use std::io::Write;

use rsnlab::harness::load_scenario;
use rsnlab::policies::BuiltinPolicy;
use rsnlab::sim::{
    allocation_drift, initial_workload, occupation_samples, residual_diagnostics, run,
    scaled_views, RunConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = load_scenario(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/scenarios/linear2.toml"
    ))?;
    let r = 10;
    let mut cfg = RunConfig::new(r, 5.0, vec![20, 20, 20], 42);
    cfg.record_events = true;
    let mut policy = BuiltinPolicy::Hgi;
    let (trace, metrics) = run(&s.model, &mut policy, &cfg)?;

    eprintln!(
        "J = {:.4} (no burn-in {:.4}), avg W = {:.3?}, {} events",
        metrics.cost, metrics.cost_no_burn, metrics.workload_avg, metrics.events
    );
    let w0 = initial_workload(&trace);
    let gap = scaled_views(&trace)
        .iter()
        .map(|v| v.identity_gap(&w0))
        .fold(0.0, f64::max);
    eprintln!("workload identity gap {gap:.2e}");
    let res = residual_diagnostics(&trace, 0.5);
    eprintln!(
        "residuals: arrival sup {:?}, service avg {:.4?}",
        res.arrival_sup, res.service_avg
    );
    eprintln!(
        "allocation drift {:.4?}",
        allocation_drift(&trace, 1.0, 0.1)?
    );
    for o in occupation_samples(&trace, 0.5, 4)? {
        eprintln!(
            "  t={:.2} W={:.3?} dX(u)={:.3?}",
            o.t,
            o.w_hat,
            o.dx.last().unwrap()
        );
    }

    let mut out = std::io::stdout().lock();
    trace.write_events_csv(&mut out)?;
    out.flush()?;
    Ok(())
}
