#![allow(dead_code)]

use std::path::PathBuf;

use rsnlab::harness::{load_scenario, Scenario};
use rsnlab::model::{validate_topology, HeavyTrafficModel};
use rsnlab::stochastic::Family;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(format!("{name}.toml"))
}

pub fn bundled(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).unwrap()
}

/// α = β = 1, σ = 1, exponential primitives, h = 1, `C = Kρ`.
pub fn uniform_model(incidence: Vec<Vec<u8>>, alpha_bar: f64) -> HeavyTrafficModel {
    let capacity: Vec<f64> = incidence
        .iter()
        .map(|row| row.iter().map(|&k| f64::from(k)).sum())
        .collect();
    let topology = validate_topology(&incidence, &capacity).unwrap();
    let j = topology.num_types();
    HeavyTrafficModel {
        topology,
        alpha: vec![1.0; j],
        beta: vec![1.0; j],
        alpha_bar: vec![alpha_bar; j],
        beta_bar: vec![0.0; j],
        sigma_u: vec![1.0; j],
        sigma_v: vec![1.0; j],
        arrival_family: vec![Family::Exponential; j],
        service_family: vec![Family::Exponential; j],
        holding_cost: vec![1.0; j],
    }
}

pub fn single_queue() -> HeavyTrafficModel {
    uniform_model(vec![vec![1]], -1.0)
}

pub fn linear2() -> HeavyTrafficModel {
    uniform_model(vec![vec![1, 0, 1], vec![0, 1, 1]], -1.0)
}
