//! Scenario files (TOML).
//!
//! ```toml
//! name = "linear2"
//! seed = 1
//! replications = 8
//! r = [5, 10, 20]
//!
//! [network]
//! K = [[1, 0, 1], [0, 1, 1]]
//! C = [2.0, 2.0]
//!
//! [traffic]
//! alpha = [1.0, 1.0, 1.0]
//! beta = [1.0, 1.0, 1.0]
//! alpha_bar = [-1.0, -1.0, -1.0]
//! h = [1.0, 1.0, 1.0]
//!
//! [run]
//! horizon = [50.0, 100.0, 200.0]
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::bcp::{BcpError, EffectiveCost};
use crate::model::{derive_limits, validate_topology, HeavyTrafficModel, ModelError};
use crate::policies::{BuiltinPolicy, UnknownPolicy};
use crate::stochastic::Family;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] UnknownPolicy),
    #[error("initial workload target: {0}")]
    Initial(BcpError),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    #[serde(rename = "K")]
    pub incidence: Vec<Vec<u8>>,
    #[serde(rename = "C")]
    pub capacity: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficSection {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    #[serde(default)]
    pub beta_bar: Option<Vec<f64>>,
    /// Coefficients of variation of the limiting interarrival times.
    #[serde(default)]
    pub arrival_cv: Option<Vec<f64>>,
    /// Coefficients of variation of the limiting job sizes.
    #[serde(default)]
    pub service_cv: Option<Vec<f64>>,
    #[serde(default)]
    pub arrival: Option<Vec<Family>>,
    #[serde(default)]
    pub service: Option<Vec<Family>>,
    pub h: Vec<f64>,
}

/// Initial queue lengths at each `r`.
#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialRule {
    /// `q⁰ = 0`.
    #[default]
    Zero,
    /// `q⁰ = round(r·q̂)`.
    Queue { q_hat: Vec<f64> },
    /// `q⁰ = round(r·q*(ŵ))` with `q*` the cheapest queue vector with workload `ŵ`.
    Workload { w_hat: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Scaled horizon per entry of the `r` grid. Defaults to `10·r`.
    #[serde(default)]
    pub horizon: Option<Vec<f64>>,
    /// Fraction of the horizon excluded from the cost average.
    #[serde(default)]
    pub burn_in: Option<f64>,
    #[serde(default)]
    pub grid: Option<f64>,
    #[serde(default)]
    pub initial: InitialRule,
    #[serde(default)]
    pub drift_window: Option<f64>,
    #[serde(default)]
    pub drift_eps: Option<f64>,
    #[serde(default)]
    pub residual_eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_reps")]
    replications: u32,
    r: Vec<u32>,
    #[serde(default)]
    policies: Option<Vec<String>>,
    network: NetworkSection,
    traffic: TrafficSection,
    #[serde(default)]
    run: RunSection,
}

fn default_reps() -> u32 {
    8
}

/// A fully validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: HeavyTrafficModel,
    pub seed: u64,
    pub replications: u32,
    pub r_grid: Vec<u32>,
    /// Scaled horizon per entry of `r_grid`.
    pub horizons: Vec<f64>,
    pub burn_in_fraction: f64,
    pub grid: f64,
    pub initial: InitialRule,
    pub policies: Vec<BuiltinPolicy>,
    pub drift_window: f64,
    pub drift_eps: f64,
    pub residual_eps: f64,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    build(file)
}

fn schema(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema(msg.into())
}

fn check_len<T>(field: &str, v: &[T], n: usize) -> Result<(), ScenarioError> {
    if v.len() != n {
        return Err(schema(format!(
            "field `{field}` has {} entries, expected {n}",
            v.len()
        )));
    }
    Ok(())
}

fn build(f: ScenarioFile) -> Result<Scenario, ScenarioError> {
    if f.name.trim().is_empty() {
        return Err(schema("field `name` is empty"));
    }
    if f.r.is_empty() || f.r[0] == 0 || f.r.windows(2).any(|w| w[0] >= w[1]) {
        return Err(schema(
            "field `r` must be a nonempty, strictly increasing list of positive integers",
        ));
    }
    if f.replications == 0 {
        return Err(schema("field `replications` must be positive"));
    }
    let topology = validate_topology(&f.network.incidence, &f.network.capacity)?;
    let nj = topology.num_types();
    let t = &f.traffic;
    for (field, v) in [
        ("alpha", &t.alpha),
        ("beta", &t.beta),
        ("alpha_bar", &t.alpha_bar),
        ("h", &t.h),
    ] {
        check_len(field, v, nj)?;
    }
    let ones = vec![1.0; nj];
    let beta_bar = t.beta_bar.clone().unwrap_or_else(|| vec![0.0; nj]);
    check_len("beta_bar", &beta_bar, nj)?;
    let a_cv = t.arrival_cv.clone().unwrap_or_else(|| ones.clone());
    let s_cv = t.service_cv.clone().unwrap_or_else(|| ones.clone());
    check_len("arrival_cv", &a_cv, nj)?;
    check_len("service_cv", &s_cv, nj)?;
    let arrival_family = t
        .arrival
        .clone()
        .unwrap_or_else(|| vec![Family::Exponential; nj]);
    let service_family = t
        .service
        .clone()
        .unwrap_or_else(|| vec![Family::Exponential; nj]);
    check_len("arrival", &arrival_family, nj)?;
    check_len("service", &service_family, nj)?;
    // σᵘ, σᵛ are standard deviations, cv = σ·rate
    let sigma_u = a_cv.iter().zip(&t.alpha).map(|(c, a)| c / a).collect();
    let sigma_v = s_cv.iter().zip(&t.beta).map(|(c, b)| c / b).collect();
    let model = HeavyTrafficModel {
        topology,
        alpha: t.alpha.clone(),
        beta: t.beta.clone(),
        alpha_bar: t.alpha_bar.clone(),
        beta_bar,
        sigma_u,
        sigma_v,
        arrival_family,
        service_family,
        holding_cost: t.h.clone(),
    };
    derive_limits(&model)?;
    for &r in &f.r {
        crate::model::rates_at(&model, r)?;
    }

    let run = f.run;
    let horizons = match run.horizon {
        Some(h) => {
            check_len("run.horizon", &h, f.r.len())?;
            h
        }
        None => f.r.iter().map(|&r| 10.0 * f64::from(r)).collect(),
    };
    if horizons.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(schema("field `run.horizon` must be positive"));
    }
    let burn_in_fraction = run.burn_in.unwrap_or(0.2);
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(schema("field `run.burn_in` must lie in [0, 1)"));
    }
    let grid = run.grid.unwrap_or(0.01);
    if !(grid.is_finite() && grid > 0.0) {
        return Err(schema("field `run.grid` must be positive"));
    }
    match &run.initial {
        InitialRule::Zero => {}
        InitialRule::Queue { q_hat } => {
            check_len("run.initial.q_hat", q_hat, nj)?;
            if q_hat.iter().any(|v| !(*v >= 0.0)) {
                return Err(schema("field `run.initial.q_hat` must be nonnegative"));
            }
        }
        InitialRule::Workload { w_hat } => {
            check_len("run.initial.w_hat", w_hat, model.num_resources())?;
            if w_hat.iter().any(|v| !(*v >= 0.0)) {
                return Err(schema("field `run.initial.w_hat` must be nonnegative"));
            }
        }
    }
    let drift_window = run.drift_window.unwrap_or(1.0);
    let drift_eps = run.drift_eps.unwrap_or(0.1);
    let residual_eps = run.residual_eps.unwrap_or(0.5);
    if !(drift_window > 0.0 && drift_eps > 0.0 && residual_eps > 0.0) {
        return Err(schema(
            "fields `run.drift_window`, `run.drift_eps`, `run.residual_eps` must be positive",
        ));
    }
    if horizons.iter().any(|&h| h < drift_window) {
        return Err(schema("field `run.drift_window` exceeds a horizon"));
    }
    let policies = match f.policies {
        Some(names) => names
            .iter()
            .map(|n| n.parse())
            .collect::<Result<Vec<_>, _>>()?,
        None => BuiltinPolicy::ALL.to_vec(),
    };
    Ok(Scenario {
        name: f.name,
        model,
        seed: f.seed,
        replications: f.replications,
        r_grid: f.r,
        horizons,
        burn_in_fraction,
        grid,
        initial: run.initial,
        policies,
        drift_window,
        drift_eps,
        residual_eps,
    })
}

impl Scenario {
    /// Initial queue vector at `r`.
    pub fn initial_queue(&self, r: u32) -> Result<Vec<u64>, ScenarioError> {
        let rf = f64::from(r);
        let nj = self.model.num_types();
        let q_hat = match &self.initial {
            InitialRule::Zero => return Ok(vec![0; nj]),
            InitialRule::Queue { q_hat } => q_hat.clone(),
            InitialRule::Workload { w_hat } => {
                let limits = derive_limits(&self.model)?;
                let cost = EffectiveCost::new(
                    &self.model.topology,
                    &limits.m_diag,
                    &self.model.holding_cost,
                );
                cost.solve(w_hat).map_err(ScenarioError::Initial)?.1
            }
        };
        Ok(q_hat.iter().map(|v| (rf * v).round() as u64).collect())
    }

    /// Scaled horizon used at `r`.
    pub fn horizon(&self, r: u32) -> Option<f64> {
        self.r_grid
            .iter()
            .position(|&x| x == r)
            .map(|k| self.horizons[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE: &str = r#"
name = "single_queue"
seed = 3
r = [5, 10]

[network]
K = [[1]]
C = [1.0]

[traffic]
alpha = [1.0]
beta = [1.0]
alpha_bar = [-1.0]
h = [1.0]
"#;

    #[test]
    fn parses_minimal_file() {
        let s = parse_scenario(SINGLE).unwrap();
        assert_eq!(s.name, "single_queue");
        assert_eq!(s.replications, 8);
        assert_eq!(s.horizons, vec![50.0, 100.0]);
        assert_eq!(s.policies, BuiltinPolicy::ALL.to_vec());
        assert_eq!(s.model.sigma_u, vec![1.0]);
        assert_eq!(s.initial_queue(10).unwrap(), vec![0]);
    }

    #[test]
    fn missing_capacity_names_field() {
        let text = SINGLE.replace("C = [1.0]\n", "");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Schema(_)));
        assert!(err.to_string().contains("`C`"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let text = SINGLE.replace("seed = 3", "seed = 3\nsede = 4");
        let err = parse_scenario(&text).unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
    }

    #[test]
    fn heavy_traffic_violation_shows_vectors() {
        let text = SINGLE.replace("C = [1.0]", "C = [1.5]");
        let err = parse_scenario(&text).unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::Model(ModelError::HeavyTrafficViolation { .. })
        ));
        let msg = err.to_string();
        assert!(msg.contains("1.5") && msg.contains('1'), "{msg}");
    }

    #[test]
    fn r_grid_must_increase() {
        let text = SINGLE.replace("r = [5, 10]", "r = [10, 5]");
        assert!(parse_scenario(&text).is_err());
    }

    #[test]
    fn initial_rules() {
        let text = format!("{SINGLE}\n[run]\ninitial = {{ rule = \"queue\", q_hat = [2.5] }}\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.initial_queue(10).unwrap(), vec![25]);
        let text = format!("{SINGLE}\n[run]\ninitial = {{ rule = \"workload\", w_hat = [3.0] }}\n");
        let s = parse_scenario(&text).unwrap();
        assert_eq!(s.initial_queue(5).unwrap(), vec![15]);
    }
}
