//! Lower-bound report for a heavy-traffic model.

use serde::{Deserialize, Serialize};

use super::effective_cost::{BcpError, EffectiveCost, MonotoneCheck};
use super::rbm::{rbm_stationary_cost, BcpModel, RbmParams};
use crate::model::{derive_limits, HeavyTrafficModel, ModelError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `ĥ` passed the monotonicity check, so the reflected Brownian motion
    /// is optimal and its cost is the control-problem value.
    ExactMonotone,
    /// `ĥ` is not monotone; the reflected Brownian motion cost only bounds
    /// the control-problem value from above.
    UpperBoundNonmonotone,
    /// Some drift coordinate is nonnegative; every policy has infinite cost.
    InfiniteUnstable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theta: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub bound_value: Option<f64>,
    pub ci: Option<f64>,
    /// Standard error behind `ci`.
    pub se: Option<f64>,
    pub bound_kind: BoundKind,
    pub label: String,
    pub caveat: Option<String>,
    pub stable: bool,
    pub monotone: MonotoneCheck,
    pub hhat_bound_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub rbm: RbmParams,
    pub monotone_pairs: usize,
    pub monotone_seed: u64,
    pub bound_dirs: usize,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            rbm: RbmParams::default(),
            monotone_pairs: 5_000,
            monotone_seed: 7,
            bound_dirs: 256,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bcp(#[from] BcpError),
}

/// Builds the control-problem data (`θ`, `Σ`, `ĥ` with the limit `M`).
pub fn bcp_model(model: &HeavyTrafficModel) -> Result<BcpModel, ReportError> {
    let limits = derive_limits(model)?;
    let cost = EffectiveCost::new(&model.topology, &limits.m_diag, &model.holding_cost);
    Ok(BcpModel::new(limits.theta, limits.sigma, cost)?)
}

pub fn lower_bound_report(
    model: &HeavyTrafficModel,
    params: &BoundParams,
) -> Result<BoundReport, ReportError> {
    let bcp = bcp_model(model)?;
    let monotone = bcp
        .cost
        .check_monotone(params.monotone_pairs, params.monotone_seed);
    let hhat_bound_constant = bcp.cost.bound_constant(params.bound_dirs)?;
    let sigma = (0..bcp.dim())
        .map(|i| (0..bcp.dim()).map(|j| bcp.sigma[(i, j)]).collect())
        .collect();
    let stable = bcp.unstable_coordinate().is_none();
    if !stable {
        return Ok(BoundReport {
            theta: bcp.theta.clone(),
            sigma,
            bound_value: None,
            ci: None,
            se: None,
            bound_kind: BoundKind::InfiniteUnstable,
            label: "ergodic cost is infinite: drift is not negative".into(),
            caveat: None,
            stable,
            monotone,
            hhat_bound_constant,
        });
    }
    let est = rbm_stationary_cost(&bcp, &params.rbm)?;
    let (bound_kind, label, caveat) = if monotone.is_monotone() {
        (
            BoundKind::ExactMonotone,
            "exact_bcp_value (monotone case)".to_string(),
            None,
        )
    } else {
        (
            BoundKind::UpperBoundNonmonotone,
            "upper_bound_on_bcp_value".to_string(),
            Some(
                "effective cost is not monotone: the true control-problem value, and hence \
                 the asymptotic lower bound, is at most the reported value"
                    .to_string(),
            ),
        )
    };
    Ok(BoundReport {
        theta: bcp.theta.clone(),
        sigma,
        bound_value: Some(est.estimate),
        ci: Some(est.ci_halfwidth),
        se: Some(est.se),
        bound_kind,
        label,
        caveat,
        stable,
        monotone,
        hhat_bound_constant,
    })
}
