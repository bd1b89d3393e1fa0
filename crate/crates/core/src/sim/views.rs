//! Diffusion-scaled views and diagnostics computed from a [`Trace`].

use super::{SimError, Trace};

/// Scaled processes at one grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPoint {
    pub t: f64,
    pub q_hat: Vec<f64>,
    pub w_hat: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub x_hat: Vec<f64>,
}

impl ScaledPoint {
    /// `max_i |Ŵ_i − (ŵ_i + X̂_i + Û_i)|`.
    pub fn identity_gap(&self, w0_hat: &[f64]) -> f64 {
        self.w_hat
            .iter()
            .zip(w0_hat)
            .zip(self.x_hat.iter().zip(&self.u_hat))
            .map(|((w, w0), (x, u))| (w - (w0 + x + u)).abs())
            .fold(0.0, f64::max)
    }
}

/// `ŵ^r = K M^r q0 / r`.
pub fn initial_workload(trace: &Trace) -> Vec<f64> {
    let r = f64::from(trace.meta.r);
    let q0: Vec<f64> = trace.meta.q0.iter().map(|&v| v as f64 / r).collect();
    trace.meta.km_r(&q0)
}

/// `Q̂`, `Ŵ = K M^r Q̂`, `Û = (r²tC − K B(r²t))/r` and
/// `X̂ = K M^r (Â − Ŝ(B̄)) + r t K(ρ^r − ρ)` on every grid point.
pub fn scaled_views(trace: &Trace) -> Vec<ScaledPoint> {
    let meta = &trace.meta;
    let r = f64::from(meta.r);
    let r2 = r * r;
    let rho_gap: Vec<f64> = meta
        .alpha_r
        .iter()
        .zip(&meta.beta_r)
        .zip(&meta.rho)
        .map(|((a, b), rho)| a / b - rho)
        .collect();
    let k_rho_gap = meta.k(&rho_gap);
    trace
        .grid
        .iter()
        .map(|g| {
            let s = g.t_scaled * r2;
            let q_hat: Vec<f64> = g.queue.iter().map(|&v| v as f64 / r).collect();
            let w_hat = meta.km_r(&q_hat);
            let used = meta.k(&g.cum_allocation);
            let u_hat = meta
                .capacity
                .iter()
                .zip(&used)
                .map(|(c, u)| (s * c - u) / r)
                .collect();
            let centered: Vec<f64> = (0..meta.num_types())
                .map(|j| {
                    let a_hat = (g.cum_arrivals[j] as f64 - s * meta.alpha_r[j]) / r;
                    let s_hat =
                        (g.cum_completions[j] as f64 - g.cum_allocation[j] * meta.beta_r[j]) / r;
                    a_hat - s_hat
                })
                .collect();
            let x_hat = meta
                .km_r(&centered)
                .into_iter()
                .zip(&k_rho_gap)
                .map(|(x, d)| x + r * g.t_scaled * d)
                .collect();
            ScaledPoint {
                t: g.t_scaled,
                q_hat,
                w_hat,
                u_hat,
                x_hat,
            }
        })
        .collect()
}

/// Per-type residual diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualDiagnostics {
    /// `max_t 1{Υ̂^A_j(t) > ε}` over the grid.
    pub arrival_sup: Vec<f64>,
    /// Grid time-average of `1{Υ̂^S_j(t) > ε}`.
    pub service_avg: Vec<f64>,
}

/// `Υ̂^A = r·(ξ̄^A − t)` is the scaled time to the next arrival and
/// `Υ̂^S = r·(ξ̄^S − B̄)` the scaled work still owed to a head-of-line job in
/// service (0 when none has started).
pub fn residual_diagnostics(trace: &Trace, eps: f64) -> ResidualDiagnostics {
    let nj = trace.meta.num_types();
    let r = f64::from(trace.meta.r);
    let n = trace.grid.len().max(1) as f64;
    let mut arrival_sup = vec![0.0; nj];
    let mut service_avg = vec![0.0; nj];
    for g in &trace.grid {
        for j in 0..nj {
            if g.arrival_residual[j] / r > eps {
                arrival_sup[j] = 1.0;
            }
            if g.service_residual[j] / r > eps {
                service_avg[j] += 1.0;
            }
        }
    }
    service_avg.iter_mut().for_each(|v| *v /= n);
    ResidualDiagnostics {
        arrival_sup,
        service_avg,
    }
}

/// Grid time-average, per type, of
/// `1{ sup_{s∈[0,u]} |(B̄(t+s) − ξ̄^S(t))⁺ − ρs| > ε }` over `t ∈ [0, T−u]`.
pub fn allocation_drift(trace: &Trace, u: f64, eps: f64) -> Result<Vec<f64>, SimError> {
    let meta = &trace.meta;
    if !(u >= 0.0) || u > meta.horizon {
        return Err(SimError::WindowExceedsHorizon {
            window: u,
            horizon: meta.horizon,
        });
    }
    let nj = meta.num_types();
    let r2 = f64::from(meta.r).powi(2);
    let width = (u / meta.grid + 1e-9).floor() as usize;
    let n = trace.grid.len();
    if n <= width {
        return Err(SimError::WindowExceedsHorizon {
            window: u,
            horizon: meta.horizon,
        });
    }
    let starts = n - width;
    let mut out = vec![0.0; nj];
    for k in 0..starts {
        let g = &trace.grid[k];
        for j in 0..nj {
            let xi = (g.cum_allocation[j] + g.service_residual[j]) / r2;
            let exceeded = (0..=width).any(|l| {
                let h = &trace.grid[k + l];
                let s = h.t_scaled - g.t_scaled;
                let b = h.cum_allocation[j] / r2;
                ((b - xi).max(0.0) - meta.rho[j] * s).abs() > eps
            });
            if exceeded {
                out[j] += 1.0;
            }
        }
    }
    out.iter_mut().for_each(|v| *v /= starts as f64);
    Ok(out)
}

/// One windowed sample of the path occupation measure.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationSample {
    pub t: f64,
    pub w_hat: Vec<f64>,
    /// `X̂(t+s) − X̂(t)` for grid offsets `s ∈ [0, u]`.
    pub dx: Vec<Vec<f64>>,
    /// `Û(t+s) − Û(t)` for grid offsets `s ∈ [0, u]`.
    pub du: Vec<Vec<f64>>,
}

/// `n_samples` window start times evenly spaced over `[0, T−u]`, snapped to
/// the grid.
pub fn occupation_samples(
    trace: &Trace,
    u: f64,
    n_samples: usize,
) -> Result<Vec<OccupationSample>, SimError> {
    let meta = &trace.meta;
    let width = (u / meta.grid + 1e-9).floor() as usize;
    let n = trace.grid.len();
    if u > meta.horizon || n <= width {
        return Err(SimError::WindowExceedsHorizon {
            window: u,
            horizon: meta.horizon,
        });
    }
    let views = scaled_views(trace);
    let last_start = n - 1 - width;
    let starts: Vec<usize> = match n_samples {
        0 => Vec::new(),
        1 => vec![0],
        m => (0..m)
            .map(|k| ((k as f64) * last_start as f64 / (m - 1) as f64).round() as usize)
            .collect(),
    };
    Ok(starts
        .into_iter()
        .map(|k| {
            let base = &views[k];
            let dx = (0..=width)
                .map(|l| {
                    views[k + l]
                        .x_hat
                        .iter()
                        .zip(&base.x_hat)
                        .map(|(a, b)| a - b)
                        .collect()
                })
                .collect();
            let du = (0..=width)
                .map(|l| {
                    views[k + l]
                        .u_hat
                        .iter()
                        .zip(&base.u_hat)
                        .map(|(a, b)| a - b)
                        .collect()
                })
                .collect();
            OccupationSample {
                t: base.t,
                w_hat: base.w_hat.clone(),
                dx,
                du,
            }
        })
        .collect())
}
