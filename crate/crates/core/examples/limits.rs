//! Limit quantities and the pre-limit rate sequence for a bundled scenario.
//!
//!     cargo run --example limits -- linear2

use rsnlab::harness::load_scenario;
use rsnlab::model::{derive_limits, rates_at};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "linear2".into());
    let path = format!("{}/scenarios/{name}.toml", env!("CARGO_MANIFEST_DIR"));
    let s = load_scenario(path)?;
    let lim = derive_limits(&s.model)?;

    println!("scenario {}", s.name);
    println!("rho   = {:?}", lim.rho);
    println!("eta   = {:?}", lim.eta);
    println!("theta = {:?}  (stable: {})", lim.theta, lim.stable);
    println!("sigma = {:.4}", lim.sigma);

    for &r in &s.r_grid {
        let rates = rates_at(&s.model, r)?;
        let rho_r = rates.rho_r();
        // r (rho^r - rho) approaches eta as r grows
        let scaled: Vec<f64> = rho_r
            .iter()
            .zip(&lim.rho)
            .map(|(a, b)| f64::from(r) * (a - b))
            .collect();
        println!(
            "r={r:>3}  alpha^r={:?}  beta^r={:?}  r(rho^r-rho)={scaled:.4?}",
            rates.alpha_r, rates.beta_r
        );
    }
    Ok(())
}
