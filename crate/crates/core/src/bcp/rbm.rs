//! Monte Carlo estimate of `∫ ĥ dπ` for the reflected Brownian motion
//! `W = Γ(w + X)`, where `X` has drift `θ` and covariance `Σ`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::effective_cost::{BcpError, EffectiveCost};
use crate::stats::summarize;
use crate::stochastic::{RngStream, Role, StreamId};

/// Eigenvalues above `-EIG_CLIP` (relative) are clipped to zero.
const EIG_CLIP: f64 = 1e-12;

/// Drift, covariance and effective cost of the workload control problem.
#[derive(Debug, Clone)]
pub struct BcpModel {
    pub theta: Vec<f64>,
    pub sigma: DMatrix<f64>,
    pub cost: EffectiveCost,
    /// Symmetric square root, `ΛΛᵀ = Σ`.
    pub sqrt_sigma: DMatrix<f64>,
}

impl BcpModel {
    pub fn new(
        theta: Vec<f64>,
        sigma: DMatrix<f64>,
        cost: EffectiveCost,
    ) -> Result<Self, BcpError> {
        let d = theta.len();
        if sigma.nrows() != d || sigma.ncols() != d || cost.dim() != d {
            return Err(BcpError::InvalidArgument(format!(
                "theta has length {d}, sigma is {}x{}, cost has dimension {}",
                sigma.nrows(),
                sigma.ncols(),
                cost.dim()
            )));
        }
        let sqrt_sigma = psd_sqrt(&sigma)?;
        Ok(Self {
            theta,
            sigma,
            cost,
            sqrt_sigma,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Index of the first coordinate with `θ_i ≥ 0`, if any.
    pub fn unstable_coordinate(&self) -> Option<usize> {
        self.theta.iter().position(|&t| t >= 0.0)
    }
}

/// Symmetric square root via eigendecomposition.
pub fn psd_sqrt(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>, BcpError> {
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < -EIG_CLIP * scale {
            return Err(BcpError::NotPsd(*v));
        }
        *v = v.max(0.0).sqrt();
    }
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// One-step reflection scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectionScheme {
    /// `W ← max(W + ΔX, 0)`. Biased low by `O(√dt)` near the boundary.
    Euler,
    /// Samples each coordinate's Brownian-bridge minimum over the step and
    /// reflects against it: `W ← max(W + ΔX, ΔX − m)`. Exact for each
    /// coordinate's marginal law.
    #[default]
    Bridge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbmParams {
    pub dt: f64,
    /// Horizon per replication, including burn-in.
    pub horizon: f64,
    pub burn_in: f64,
    pub reps: usize,
    /// Batches per replication for the interval estimate.
    pub batches: usize,
    pub seed: u64,
    pub scheme: ReflectionScheme,
}

impl Default for RbmParams {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            horizon: 2e3,
            burn_in: 20.0,
            reps: 16,
            batches: 10,
            seed: 1,
            scheme: ReflectionScheme::Bridge,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmEstimate {
    pub estimate: f64,
    /// 95% halfwidth from the batch means of all replications.
    pub ci_halfwidth: f64,
    pub se: f64,
    pub rep_means: Vec<f64>,
    pub batch_means: Vec<f64>,
}

/// Time-averaged `ĥ(W)` after burn-in, pooled over replications.
pub fn rbm_stationary_cost(bcp: &BcpModel, p: &RbmParams) -> Result<RbmEstimate, BcpError> {
    if let Some(i) = bcp.unstable_coordinate() {
        return Err(BcpError::UnstableDrift(i));
    }
    if !(p.dt > 0.0 && p.horizon > p.burn_in && p.burn_in >= 0.0 && p.reps >= 1 && p.batches >= 1) {
        return Err(BcpError::InvalidArgument(format!(
            "bad Monte Carlo parameters {p:?}"
        )));
    }
    let per_rep: Vec<Vec<f64>> = (0..p.reps)
        .into_par_iter()
        .map(|rep| replicate(bcp, p, rep as u32))
        .collect();
    let rep_means: Vec<f64> = per_rep
        .iter()
        .map(|b| b.iter().sum::<f64>() / b.len() as f64)
        .collect();
    let batch_means: Vec<f64> = per_rep.into_iter().flatten().collect();
    let s = summarize(&batch_means);
    Ok(RbmEstimate {
        estimate: s.mean,
        ci_halfwidth: s.ci95,
        se: s.se,
        rep_means,
        batch_means,
    })
}

fn replicate(bcp: &BcpModel, p: &RbmParams, rep: u32) -> Vec<f64> {
    let d = bcp.dim();
    let mut stream = RngStream::new(p.seed, StreamId::new(0, 0, rep, 0, Role::Noise));
    let steps = (p.horizon / p.dt).round() as u64;
    let burn = (p.burn_in / p.dt).round() as u64;
    let sqrt_dt = p.dt.sqrt();
    let drift: Vec<f64> = bcp.theta.iter().map(|t| t * p.dt).collect();
    let step_var: Vec<f64> = (0..d).map(|i| bcp.sigma[(i, i)].max(0.0) * p.dt).collect();
    let lam = &bcp.sqrt_sigma;

    let mut w = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut dx = vec![0.0; d];
    let kept = steps.saturating_sub(burn).max(1);
    let batch_len = (kept / p.batches as u64).max(1);
    let mut batches = Vec::with_capacity(p.batches);
    let mut acc = 0.0;
    for k in 0..steps {
        for z in xi.iter_mut() {
            *z = stream.standard_normal();
        }
        for i in 0..d {
            let mut s = 0.0;
            for l in 0..d {
                s += lam[(i, l)] * xi[l];
            }
            dx[i] = drift[i] + sqrt_dt * s;
        }
        match p.scheme {
            ReflectionScheme::Euler => {
                for i in 0..d {
                    w[i] = (w[i] + dx[i]).max(0.0);
                }
            }
            ReflectionScheme::Bridge => {
                for i in 0..d {
                    let x = dx[i];
                    let min = if step_var[i] > 0.0 {
                        let u = stream.open_unit();
                        0.5 * (x - (x * x - 2.0 * step_var[i] * u.ln()).sqrt())
                    } else {
                        x.min(0.0)
                    };
                    w[i] = (w[i] + x).max(x - min);
                }
            }
        }
        if k >= burn {
            acc += bcp.cost.value_unchecked(&w);
            if (k - burn + 1).is_multiple_of(batch_len) && batches.len() < p.batches {
                batches.push(acc / batch_len as f64);
                acc = 0.0;
            }
        }
    }
    if batches.is_empty() {
        batches.push(acc / kept as f64);
    }
    batches
}
