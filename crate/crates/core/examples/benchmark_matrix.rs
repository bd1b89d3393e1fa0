//! Full policy × r × replication matrix for one scenario, written to a
//! report directory.
//!
//!     cargo run --release --example benchmark_matrix -- scenarios/x_network.toml out/x

use rsnlab::harness::{load_scenario, run_matrix, write_reports, MatrixOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| {
        concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/single_queue.toml").into()
    });
    let out = args.next().unwrap_or_else(|| "out/benchmark".into());

    let s = load_scenario(&path)?;
    let res = run_matrix(&s, &MatrixOptions::default())?;
    for c in &res.summaries {
        let gap = c.gap.map_or("n/a".into(), |g| format!("{g:+.3}"));
        println!(
            "{:>12} r={:<3} T={:<5} J={:.3} ± {:.3} gap {gap}",
            c.policy, c.r, c.horizon, c.mean, c.ci95
        );
    }
    for f in &res.failures {
        eprintln!("failed: {} r={} rep={}: {}", f.policy, f.r, f.rep, f.error);
    }
    let files = write_reports(&res, std::path::Path::new(&out))?;
    println!("wrote {}", files.results.parent().unwrap().display());
    Ok(())
}
