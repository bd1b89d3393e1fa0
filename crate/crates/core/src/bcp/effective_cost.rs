//! Effective cost `ĥ(w) = min{h·q : KMq = w, q ≥ 0}`.
//!
//! Two evaluation routes are kept. [`EffectiveCost::solve`] runs the simplex
//! and returns a minimizer `q*`. [`EffectiveCost::value`] evaluates the dual
//! form `max_v y_v·w` over the precomputed vertices of
//! `{y : (KM)ᵀy ≤ h}`, which is much cheaper inside Monte Carlo loops.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lp::{self, LpError};
use crate::model::NetworkTopology;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BcpError {
    #[error("workload must be nonnegative and finite, got {0:?}")]
    NegativeWorkload(Vec<f64>),
    #[error("effective-cost program failed: {0}")]
    Lp(#[from] LpError),
    #[error("drift is not negative in coordinate {0}; the ergodic cost is infinite")]
    UnstableDrift(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("covariance matrix is not positive semidefinite (eigenvalue {0})")]
    NotPsd(f64),
}

/// Above this many column subsets the dual vertex cache is skipped.
const MAX_SUBSETS: usize = 20_000;

#[derive(Debug, Clone)]
pub struct EffectiveCost {
    /// `KM`, I×J.
    km: Vec<Vec<f64>>,
    h: Vec<f64>,
    dual_vertices: Option<Vec<Vec<f64>>>,
}

impl EffectiveCost {
    pub fn new(topology: &NetworkTopology, m_diag: &[f64], h: &[f64]) -> Self {
        let km: Vec<Vec<f64>> = topology
            .incidence()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(m_diag)
                    .map(|(&k, m)| f64::from(k) * m)
                    .collect()
            })
            .collect();
        let dual_vertices = dual_vertices(&km, h);
        Self {
            km,
            h: h.to_vec(),
            dual_vertices,
        }
    }

    pub fn dim(&self) -> usize {
        self.km.len()
    }

    pub fn holding_cost(&self) -> &[f64] {
        &self.h
    }

    pub fn km(&self) -> &[Vec<f64>] {
        &self.km
    }

    fn check(&self, w: &[f64]) -> Result<(), BcpError> {
        if w.len() != self.dim() || w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(BcpError::NegativeWorkload(w.to_vec()));
        }
        Ok(())
    }

    /// Optimal value and lexicographically smallest optimal vertex `q*`.
    pub fn solve(&self, w: &[f64]) -> Result<(f64, Vec<f64>), BcpError> {
        self.check(w)?;
        let scale = w.iter().cloned().fold(0.0, f64::max);
        if scale == 0.0 {
            return Ok((0.0, vec![0.0; self.h.len()]));
        }
        let b: Vec<f64> = w.iter().map(|x| x / scale).collect();
        let sol = lp::solve(&self.h, &self.km, &b)?;
        let q: Vec<f64> = sol.x.iter().map(|x| x * scale).collect();
        Ok((sol.objective * scale, q))
    }

    /// Optimal value only. Uses the dual vertex cache when available.
    pub fn value(&self, w: &[f64]) -> Result<f64, BcpError> {
        self.check(w)?;
        Ok(self.value_unchecked(w))
    }

    /// [`Self::value`] without input validation, for hot loops over
    /// nonnegative states.
    pub fn value_unchecked(&self, w: &[f64]) -> f64 {
        match &self.dual_vertices {
            Some(vs) => vs
                .iter()
                .map(|y| y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
                .fold(0.0, f64::max),
            None => self.solve(w).map(|(v, _)| v).unwrap_or(f64::NAN),
        }
    }

    /// Estimates the constant `c_h > 1` with `|w|/c_h ≤ ĥ(w) ≤ c_h|w|` over
    /// `n_dirs` unit directions: the coordinate axes, then the diagonal, then
    /// pseudo-random directions in the positive orthant.
    pub fn bound_constant(&self, n_dirs: usize) -> Result<f64, BcpError> {
        if n_dirs == 0 {
            return Err(BcpError::InvalidArgument(
                "n_dirs must be at least 1".into(),
            ));
        }
        let d = self.dim();
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed_c0de);
        let mut worst: f64 = 1.0;
        for k in 0..n_dirs {
            let mut w = vec![0.0; d];
            if k < d {
                w[k] = 1.0;
            } else if k == d {
                w.iter_mut().for_each(|x| *x = 1.0);
            } else {
                w.iter_mut().for_each(|x| *x = rng.random::<f64>());
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            w.iter_mut().for_each(|x| *x /= norm);
            let v = self.value(&w)?;
            worst = worst.max(v).max(1.0 / v);
        }
        Ok(worst.max(1.0 + 1e-9))
    }

    /// Samples ordered pairs `w₁ ≤ w₂` looking for `ĥ(w₁) > ĥ(w₂) + 1e-9`.
    pub fn check_monotone(&self, n_pairs: usize, seed: u64) -> MonotoneCheck {
        let d = self.dim();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for k in 0..n_pairs {
            let w1: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            let mut w2 = w1.clone();
            if k % 2 == 0 {
                // single-coordinate increase
                let i = rng.random_range(0..d);
                w2[i] += rng.random::<f64>();
            } else {
                w2.iter_mut().for_each(|x| *x += rng.random::<f64>());
            }
            let (h1, h2) = (self.value_unchecked(&w1), self.value_unchecked(&w2));
            if h1 > h2 + 1e-9 {
                return MonotoneCheck::Counterexample {
                    lower: w1,
                    upper: w2,
                    lower_cost: h1,
                    upper_cost: h2,
                };
            }
        }
        MonotoneCheck::Monotone { pairs: n_pairs }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum MonotoneCheck {
    Monotone {
        pairs: usize,
    },
    Counterexample {
        lower: Vec<f64>,
        upper: Vec<f64>,
        lower_cost: f64,
        upper_cost: f64,
    },
}

impl MonotoneCheck {
    pub fn is_monotone(&self) -> bool {
        matches!(self, MonotoneCheck::Monotone { .. })
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k.min(n));
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn dual_vertices(km: &[Vec<f64>], h: &[f64]) -> Option<Vec<Vec<f64>>> {
    let d = km.len();
    let j = h.len();
    if d > j || binomial(j, d) > MAX_SUBSETS {
        return None;
    }
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..d).collect();
    loop {
        // (KM)_Sᵀ y = h_S
        let a = DMatrix::from_fn(d, d, |r, c| km[c][subset[r]]);
        let rhs = DVector::from_fn(d, |r, _| h[subset[r]]);
        if let Some(y) = a.lu().solve(&rhs) {
            let feasible = (0..j).all(|col| {
                let lhs: f64 = (0..d).map(|i| km[i][col] * y[i]).sum();
                lhs <= h[col] + 1e-9 * (1.0 + h[col].abs())
            });
            if feasible && y.iter().all(|v| v.is_finite()) {
                let y: Vec<f64> = y.iter().cloned().collect();
                if !out
                    .iter()
                    .any(|v| v.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12))
                {
                    out.push(y);
                }
            }
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return Some(out);
            }
            i -= 1;
            if subset[i] < j - d + i {
                subset[i] += 1;
                for k in i + 1..d {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_topology;

    fn linear(h: &[f64]) -> EffectiveCost {
        let t = validate_topology(&[vec![1, 0, 1], vec![0, 1, 1]], &[2.0, 2.0]).unwrap();
        EffectiveCost::new(&t, &[1.0, 1.0, 1.0], h)
    }

    fn single(h: f64, beta: f64) -> EffectiveCost {
        let t = validate_topology(&[vec![1]], &[1.0]).unwrap();
        EffectiveCost::new(&t, &[1.0 / beta], &[h])
    }

    /// Enumerates every basic solution of `KMq = w` by brute force.
    fn brute_force(ec: &EffectiveCost, w: &[f64]) -> (f64, Vec<Vec<f64>>) {
        let km = ec.km();
        let (d, j) = (km.len(), km[0].len());
        let mut best = f64::INFINITY;
        let mut argmins = Vec::new();
        for mask in 0u32..(1 << j) {
            if mask.count_ones() as usize != d {
                continue;
            }
            let cols: Vec<usize> = (0..j).filter(|c| mask & (1 << c) != 0).collect();
            let a = DMatrix::from_fn(d, d, |r, c| km[r][cols[c]]);
            let Some(sol) = a.lu().solve(&DVector::from_column_slice(w)) else {
                continue;
            };
            if sol.iter().any(|&v| v < -1e-12) {
                continue;
            }
            let mut q = vec![0.0; j];
            for (k, &c) in cols.iter().enumerate() {
                q[c] = sol[k].max(0.0);
            }
            let cost: f64 = q.iter().zip(ec.holding_cost()).map(|(a, b)| a * b).sum();
            if cost < best - 1e-12 {
                best = cost;
                argmins = vec![q];
            } else if (cost - best).abs() <= 1e-12 {
                argmins.push(q);
            }
        }
        (best, argmins)
    }

    #[test]
    fn zero_workload() {
        let ec = linear(&[1.0, 1.0, 1.0]);
        let (v, q) = ec.solve(&[0.0, 0.0]).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(q, vec![0.0; 3]);
        assert_eq!(ec.value(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn single_queue_value() {
        let ec = single(1.0, 1.0);
        assert_eq!(ec.solve(&[2.0]).unwrap().0, 2.0);
        let ec = single(3.0, 2.0);
        assert!((ec.value(&[1.5]).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn linear_network_value() {
        let ec = linear(&[1.0, 1.0, 1.0]);
        let (v, q) = ec.solve(&[2.0, 3.0]).unwrap();
        let (bv, argmins) = brute_force(&ec, &[2.0, 3.0]);
        assert_eq!(bv, 3.0);
        assert_eq!(argmins, vec![vec![0.0, 1.0, 2.0]]);
        assert!((v - 3.0).abs() < 1e-12);
        assert!(q
            .iter()
            .zip(&[0.0, 1.0, 2.0])
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn rejects_negative_workload() {
        let ec = linear(&[1.0, 1.0, 1.0]);
        assert!(matches!(
            ec.solve(&[-1.0, 0.0]),
            Err(BcpError::NegativeWorkload(_))
        ));
    }

    #[test]
    fn routes_agree_with_brute_force() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for h in [[1.0, 1.0, 1.0], [1.0, 1.0, 10.0], [2.0, 3.0, 1.0]] {
            let ec = linear(&h);
            for _ in 0..200 {
                let w = [rng.random::<f64>() * 5.0, rng.random::<f64>() * 5.0];
                let (v, q) = ec.solve(&w).unwrap();
                let fast = ec.value(&w).unwrap();
                let (brute, argmins) = brute_force(&ec, &w);
                assert!((v - brute).abs() < 1e-9, "{h:?} {w:?}");
                assert!((fast - brute).abs() < 1e-9);
                // returned vertex is the lexicographically smallest optimum
                let lexmin = argmins
                    .iter()
                    .min_by(|a, b| a.partial_cmp(b).unwrap())
                    .unwrap();
                assert!(q.iter().zip(lexmin).all(|(a, b)| (a - b).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn bound_constant_examples() {
        let ec = single(1.0, 1.0);
        assert_eq!(ec.bound_constant(5).unwrap(), 1.0 + 1e-9);
        let ec = linear(&[1.0, 1.0, 1.0]);
        // axis (1,0) gives 1; diagonal (1,1)/√2 gives 1/√2.
        let c = ec.bound_constant(3).unwrap();
        assert!((c - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            ec.bound_constant(0),
            Err(BcpError::InvalidArgument(_))
        ));
    }

    #[test]
    fn bound_constant_inequalities_hold() {
        let ec = linear(&[2.0, 3.0, 1.0]);
        let c = ec.bound_constant(200).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..200 {
            let w = [rng.random::<f64>(), rng.random::<f64>()];
            let n = (w[0] * w[0] + w[1] * w[1]).sqrt();
            let v = ec.value(&w).unwrap();
            // sampled directions only; allow a small margin for unsampled ones
            assert!(v <= c * n * 1.01 && v >= n / (c * 1.01));
        }
    }

    #[test]
    fn monotone_cases() {
        assert!(single(1.0, 1.0).check_monotone(500, 1).is_monotone());
        assert!(linear(&[1.0, 1.0, 1.0])
            .check_monotone(500, 1)
            .is_monotone());
    }

    #[test]
    fn cheap_shared_type_is_not_monotone() {
        // h₃ < h₂: raising w₁ moves work into the cheaper shared type.
        let c = linear(&[2.0, 3.0, 1.0]).check_monotone(2000, 1);
        assert!(!c.is_monotone());
    }

    #[test]
    fn adversarial_cost_snapshot() {
        // Expensive shared type: ĥ(w) = w₁ + w₂, monotone.
        let ec = linear(&[1.0, 1.0, 10.0]);
        assert!((ec.value(&[1.0, 2.0]).unwrap() - 3.0).abs() < 1e-12);
        assert!(ec.check_monotone(1000, 9).is_monotone());
    }
}
