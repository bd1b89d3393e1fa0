//! Network topology and the heavy-traffic parameter sequence.
//!
//! A resource sharing network has `I` resources with capacities `C` and `J`
//! job types. The 0/1 incidence matrix `K` (I×J) records which resources a
//! job type occupies simultaneously. The `r`-th network in the heavy-traffic
//! sequence uses arrival rates `α^r = α + ᾱ/r` and service rates
//! `β^r = β + β̄/r`, with the balance condition `C = Kρ`, `ρ_j = α_j/β_j`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stochastic::Family;

/// Absolute tolerance on `C − Kρ`.
pub const HEAVY_TRAFFIC_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("incidence matrix is {rows}x{cols} but capacity has length {cap_len}")]
    Dimension {
        rows: usize,
        cols: usize,
        cap_len: usize,
    },
    #[error("incidence matrix is empty or ragged")]
    Ragged,
    #[error("incidence entry ({0}, {1}) is not 0 or 1")]
    NotBinary(usize, usize),
    #[error("resource {0} has no local job type (no column equals its basis vector)")]
    MissingLocalTraffic(usize),
    #[error("job type {0} uses no resource")]
    EmptyColumn(usize),
    #[error("capacity of resource {0} is not positive")]
    NonPositiveCapacity(usize),
    #[error("heavy traffic violated: C = {capacity:?} but K*rho = {load:?}")]
    HeavyTrafficViolation { capacity: Vec<f64>, load: Vec<f64> },
    #[error("rate of job type {job_type} is not positive at r = {r}")]
    RateNonPositive { job_type: usize, r: u32 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
}

fn invalid(name: &str, reason: impl Into<String>) -> ModelError {
    ModelError::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}

/// Validated network structure.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    incidence: Vec<Vec<u8>>,
    capacity: Vec<f64>,
    local_type: Vec<usize>,
}

/// Validates `K` and `C` and selects, for each resource, the lowest-index job
/// type whose column is that resource's basis vector.
pub fn validate_topology(
    incidence: &[Vec<u8>],
    capacity: &[f64],
) -> Result<NetworkTopology, ModelError> {
    let rows = incidence.len();
    if rows == 0 || incidence[0].is_empty() {
        return Err(ModelError::Ragged);
    }
    let cols = incidence[0].len();
    if incidence.iter().any(|row| row.len() != cols) {
        return Err(ModelError::Ragged);
    }
    if capacity.len() != rows {
        return Err(ModelError::Dimension {
            rows,
            cols,
            cap_len: capacity.len(),
        });
    }
    for (i, row) in incidence.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 1 {
                return Err(ModelError::NotBinary(i, j));
            }
        }
    }
    for j in 0..cols {
        if incidence.iter().all(|row| row[j] == 0) {
            return Err(ModelError::EmptyColumn(j));
        }
    }
    for (i, &c) in capacity.iter().enumerate() {
        if !(c > 0.0 && c.is_finite()) {
            return Err(ModelError::NonPositiveCapacity(i));
        }
    }
    let mut local_type = Vec::with_capacity(rows);
    for i in 0..rows {
        let found = (0..cols).find(|&j| (0..rows).all(|l| incidence[l][j] == u8::from(l == i)));
        match found {
            Some(j) => local_type.push(j),
            None => return Err(ModelError::MissingLocalTraffic(i)),
        }
    }
    Ok(NetworkTopology {
        incidence: incidence.to_vec(),
        capacity: capacity.to_vec(),
        local_type,
    })
}

impl NetworkTopology {
    pub fn num_resources(&self) -> usize {
        self.capacity.len()
    }

    pub fn num_types(&self) -> usize {
        self.incidence[0].len()
    }

    pub fn incidence(&self) -> &[Vec<u8>] {
        &self.incidence
    }

    #[inline]
    pub fn uses(&self, resource: usize, job_type: usize) -> bool {
        self.incidence[resource][job_type] == 1
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    /// Local job type of each resource.
    pub fn local_type(&self) -> &[usize] {
        &self.local_type
    }

    /// Number of resources job type `j` occupies.
    pub fn column_weight(&self, job_type: usize) -> usize {
        self.incidence
            .iter()
            .filter(|row| row[job_type] == 1)
            .count()
    }

    /// Job types occupying two or more resources.
    pub fn is_shared(&self, job_type: usize) -> bool {
        self.column_weight(job_type) >= 2
    }

    pub fn max_capacity(&self) -> f64 {
        self.capacity.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn k_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_resources(), self.num_types(), |i, j| {
            f64::from(self.incidence[i][j])
        })
    }

    /// `K·x` for a length-J vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.incidence
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .filter(|(&k, _)| k == 1)
                    .map(|(_, &v)| v)
                    .sum()
            })
            .collect()
    }
}

/// Primitive parameters of the heavy-traffic sequence.
#[derive(Debug, Clone)]
pub struct HeavyTrafficModel {
    pub topology: NetworkTopology,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha_bar: Vec<f64>,
    pub beta_bar: Vec<f64>,
    /// Limiting standard deviation of interarrival times.
    pub sigma_u: Vec<f64>,
    /// Limiting standard deviation of job sizes.
    pub sigma_v: Vec<f64>,
    pub arrival_family: Vec<Family>,
    pub service_family: Vec<Family>,
    pub holding_cost: Vec<f64>,
}

impl HeavyTrafficModel {
    /// Checks lengths and signs. The balance condition `C = Kρ` is checked by
    /// [`derive_limits`].
    pub fn validate(&self) -> Result<(), ModelError> {
        let j = self.topology.num_types();
        let vectors: [(&str, usize); 9] = [
            ("alpha", self.alpha.len()),
            ("beta", self.beta.len()),
            ("alpha_bar", self.alpha_bar.len()),
            ("beta_bar", self.beta_bar.len()),
            ("sigma_u", self.sigma_u.len()),
            ("sigma_v", self.sigma_v.len()),
            ("arrival_family", self.arrival_family.len()),
            ("service_family", self.service_family.len()),
            ("holding_cost", self.holding_cost.len()),
        ];
        for (name, len) in vectors {
            if len != j {
                return Err(invalid(name, format!("expected length {j}, got {len}")));
            }
        }
        let positive: [(&str, &[f64]); 5] = [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("sigma_u", &self.sigma_u),
            ("sigma_v", &self.sigma_v),
            ("holding_cost", &self.holding_cost),
        ];
        for (name, v) in positive {
            if let Some(k) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(invalid(
                    name,
                    format!("entry {k} must be positive and finite"),
                ));
            }
        }
        for (name, v) in [("alpha_bar", &self.alpha_bar), ("beta_bar", &self.beta_bar)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid(name, "entries must be finite"));
            }
        }
        for k in 0..j {
            self.arrival_family[k]
                .check_cv(self.sigma_u[k] * self.alpha[k])
                .map_err(|e| invalid("sigma_u", format!("type {k}: {e}")))?;
            self.service_family[k]
                .check_cv(self.sigma_v[k] * self.beta[k])
                .map_err(|e| invalid("sigma_v", format!("type {k}: {e}")))?;
        }
        Ok(())
    }

    pub fn num_types(&self) -> usize {
        self.topology.num_types()
    }

    pub fn num_resources(&self) -> usize {
        self.topology.num_resources()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(a, b)| a / b)
            .collect()
    }

    /// Coefficient of variation of interarrival times (held fixed along `r`).
    pub fn arrival_cv(&self) -> Vec<f64> {
        self.sigma_u
            .iter()
            .zip(&self.alpha)
            .map(|(s, a)| s * a)
            .collect()
    }

    /// Coefficient of variation of job sizes (held fixed along `r`).
    pub fn service_cv(&self) -> Vec<f64> {
        self.sigma_v
            .iter()
            .zip(&self.beta)
            .map(|(s, b)| s * b)
            .collect()
    }
}

/// Limit quantities of the diffusion approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitQuantities {
    pub rho: Vec<f64>,
    pub eta: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma: DMatrix<f64>,
    /// Diagonal of `M`, i.e. `1/β_j`.
    pub m_diag: Vec<f64>,
    pub stable: bool,
}

/// Computes `ρ`, `η`, `θ = Kη` and `Σ = KM(Σᵘ + ΣᵛR)MᵀKᵀ`.
pub fn derive_limits(m: &HeavyTrafficModel) -> Result<LimitQuantities, ModelError> {
    m.validate()?;
    let topo = &m.topology;
    let rho = m.rho();
    let load = topo.apply(&rho);
    if load
        .iter()
        .zip(topo.capacity())
        .any(|(l, c)| (l - c).abs() > HEAVY_TRAFFIC_TOL)
    {
        return Err(ModelError::HeavyTrafficViolation {
            capacity: topo.capacity().to_vec(),
            load,
        });
    }
    let j = m.num_types();
    let eta: Vec<f64> = (0..j)
        .map(|k| {
            (m.alpha_bar[k] * m.beta[k] - m.alpha[k] * m.beta_bar[k]) / (m.beta[k] * m.beta[k])
        })
        .collect();
    let theta = topo.apply(&eta);
    let m_diag: Vec<f64> = m.beta.iter().map(|b| 1.0 / b).collect();

    // Inner matrices are diagonal, so the square-root form reduces to a
    // diagonal product.
    let inner = DVector::from_fn(j, |k, _| {
        let su = m.alpha[k].powi(3) * m.sigma_u[k].powi(2);
        let sv = m.beta[k].powi(3) * m.sigma_v[k].powi(2);
        (su + sv * rho[k]) * m_diag[k] * m_diag[k]
    });
    let k_mat = topo.k_matrix();
    let sigma = &k_mat * DMatrix::from_diagonal(&inner) * k_mat.transpose();
    let stable = theta.iter().all(|&t| t < 0.0);
    Ok(LimitQuantities {
        rho,
        eta,
        theta,
        sigma,
        m_diag,
        stable,
    })
}

/// Rates of the `r`-th network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSequence {
    pub r: u32,
    pub alpha_r: Vec<f64>,
    pub beta_r: Vec<f64>,
    pub sigma_u_r: Vec<f64>,
    pub sigma_v_r: Vec<f64>,
}

impl RateSequence {
    pub fn rho_r(&self) -> Vec<f64> {
        self.alpha_r
            .iter()
            .zip(&self.beta_r)
            .map(|(a, b)| a / b)
            .collect()
    }

    /// Diagonal of `M^r`.
    pub fn m_r_diag(&self) -> Vec<f64> {
        self.beta_r.iter().map(|b| 1.0 / b).collect()
    }

    pub fn mean_interarrival(&self) -> Vec<f64> {
        self.alpha_r.iter().map(|a| 1.0 / a).collect()
    }

    pub fn mean_size(&self) -> Vec<f64> {
        self.beta_r.iter().map(|b| 1.0 / b).collect()
    }
}

/// First-order parametrization `α^r = α + ᾱ/r`, `β^r = β + β̄/r`. Standard
/// deviations keep the limiting coefficient of variation, so
/// `σ^{u,r} = (σᵘα)/α^r → σᵘ`.
pub fn rates_at(m: &HeavyTrafficModel, r: u32) -> Result<RateSequence, ModelError> {
    if r == 0 {
        return Err(invalid("r", "must be a positive integer"));
    }
    let rf = f64::from(r);
    let j = m.num_types();
    let mut alpha_r = Vec::with_capacity(j);
    let mut beta_r = Vec::with_capacity(j);
    for k in 0..j {
        let a = m.alpha[k] + m.alpha_bar[k] / rf;
        let b = m.beta[k] + m.beta_bar[k] / rf;
        if !(a > 0.0) || !(b > 0.0) {
            return Err(ModelError::RateNonPositive { job_type: k, r });
        }
        alpha_r.push(a);
        beta_r.push(b);
    }
    let sigma_u_r = m
        .arrival_cv()
        .iter()
        .zip(&alpha_r)
        .map(|(cv, a)| cv / a)
        .collect();
    let sigma_v_r = m
        .service_cv()
        .iter()
        .zip(&beta_r)
        .map(|(cv, b)| cv / b)
        .collect();
    Ok(RateSequence {
        r,
        alpha_r,
        beta_r,
        sigma_u_r,
        sigma_v_r,
    })
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn topology_single_queue() {
        let t = validate_topology(&[vec![1]], &[1.0]).unwrap();
        assert_eq!(t.local_type(), &[0]);
    }

    #[test]
    fn topology_linear_network() {
        let t = validate_topology(&[vec![1, 0, 1], vec![0, 1, 1]], &[2.0, 2.0]).unwrap();
        assert_eq!(t.local_type(), &[0, 1]);
        assert!(t.is_shared(2));
        assert!(!t.is_shared(0));
    }

    #[test]
    fn topology_missing_local() {
        let e = validate_topology(&[vec![1, 1], vec![1, 1]], &[1.0, 1.0]).unwrap_err();
        assert_eq!(e, ModelError::MissingLocalTraffic(0));
    }

    #[test]
    fn topology_errors() {
        assert_eq!(
            validate_topology(&[vec![1, 0], vec![0, 0]], &[1.0, 1.0]).unwrap_err(),
            ModelError::EmptyColumn(1)
        );
        assert_eq!(
            validate_topology(&[vec![1]], &[0.0]).unwrap_err(),
            ModelError::NonPositiveCapacity(0)
        );
        assert!(matches!(
            validate_topology(&[vec![1]], &[1.0, 1.0]).unwrap_err(),
            ModelError::Dimension { .. }
        ));
        assert_eq!(
            validate_topology(&[vec![2]], &[1.0]).unwrap_err(),
            ModelError::NotBinary(0, 0)
        );
    }

    #[test]
    fn local_type_picks_lowest_index() {
        let t = validate_topology(&[vec![1, 1, 0], vec![0, 0, 1]], &[1.0, 1.0]).unwrap();
        assert_eq!(t.local_type(), &[0, 2]);
    }

    #[test]
    fn limits_single_queue() {
        let l = derive_limits(&single_queue()).unwrap();
        assert_eq!(l.rho, vec![1.0]);
        assert_eq!(l.eta, vec![-1.0]);
        assert_eq!(l.theta, vec![-1.0]);
        assert_eq!(l.sigma[(0, 0)], 2.0);
        assert!(l.stable);
    }

    /// Entry-by-entry triple sum, independent of the matrix library.
    fn brute_sigma(m: &HeavyTrafficModel) -> Vec<Vec<f64>> {
        let inc = m.topology.incidence();
        let (ni, nj) = (inc.len(), inc[0].len());
        let mut out = vec![vec![0.0; ni]; ni];
        for a in 0..ni {
            for b in 0..ni {
                for k in 0..nj {
                    let km_a = f64::from(inc[a][k]) / m.beta[k];
                    let km_b = f64::from(inc[b][k]) / m.beta[k];
                    let rho = m.alpha[k] / m.beta[k];
                    let d = m.alpha[k].powi(3) * m.sigma_u[k].powi(2)
                        + m.beta[k].powi(3) * m.sigma_v[k].powi(2) * rho;
                    out[a][b] += km_a * d * km_b;
                }
            }
        }
        out
    }

    #[test]
    fn limits_linear_network() {
        let m = linear2();
        let l = derive_limits(&m).unwrap();
        assert_eq!(l.theta, vec![-2.0, -2.0]);
        let expected = [[4.0, 2.0], [2.0, 4.0]];
        let brute = brute_sigma(&m);
        for a in 0..2 {
            for b in 0..2 {
                assert_eq!(l.sigma[(a, b)], expected[a][b]);
                assert_eq!(brute[a][b], expected[a][b]);
            }
        }
    }

    #[test]
    fn limits_heavy_traffic_violation() {
        let mut m = linear2();
        m.topology = validate_topology(m.topology.incidence(), &[1.0, 1.0]).unwrap();
        assert!(matches!(
            derive_limits(&m).unwrap_err(),
            ModelError::HeavyTrafficViolation { .. }
        ));
    }

    #[test]
    fn rates_examples() {
        let m = single_queue();
        let s = rates_at(&m, 10).unwrap();
        assert!((s.alpha_r[0] - 0.9).abs() < 1e-15);
        assert_eq!(
            rates_at(&m, 1).unwrap_err(),
            ModelError::RateNonPositive { job_type: 0, r: 1 }
        );

        let mut m2 = single_queue();
        m2.beta = vec![2.0];
        m2.beta_bar = vec![4.0];
        let s = rates_at(&m2, 8).unwrap();
        assert_eq!(s.beta_r[0], 2.5);
        assert_eq!(8.0 * (s.beta_r[0] - 2.0), 4.0);
    }

    #[test]
    fn sigma_sequence_converges() {
        let m = single_queue();
        let s = rates_at(&m, 1000).unwrap();
        assert!((s.sigma_u_r[0] - 1.0).abs() < 2e-3);
        // Exponential interarrivals keep cv = 1 at every r.
        assert!((s.sigma_u_r[0] * s.alpha_r[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_family_cv_mismatch() {
        let mut m = single_queue();
        m.sigma_u = vec![0.5];
        assert!(matches!(
            m.validate().unwrap_err(),
            ModelError::InvalidParameter { .. }
        ));
    }
}
