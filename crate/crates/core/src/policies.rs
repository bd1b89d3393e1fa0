//! Resource allocation policies.
//!
//! A policy maps the current snapshot to a rate vector `b` with `K·b ≤ C`.
//! The simulator zeroes `b_j` on empty queues before checking feasibility,
//! so policies may return positive rates for empty types.

use std::fmt;
use std::str::FromStr;

use crate::bcp::{lp, EffectiveCost};
use crate::model::{HeavyTrafficModel, NetworkTopology, RateSequence};

/// Constants a policy may consult. Built once per run.
#[derive(Debug, Clone)]
pub struct PolicyContext {
    pub topology: NetworkTopology,
    pub rho: Vec<f64>,
    pub beta: Vec<f64>,
    pub beta_r: Vec<f64>,
    pub m_r: Vec<f64>,
    pub holding_cost: Vec<f64>,
    /// `ĥ` with the pre-limit `M^r`, used to find the ideal queue vector.
    pub ideal: EffectiveCost,
}

impl PolicyContext {
    pub fn new(model: &HeavyTrafficModel, rates: &RateSequence) -> Self {
        let m_r = rates.m_r_diag();
        Self {
            topology: model.topology.clone(),
            rho: model.rho(),
            beta: model.beta.clone(),
            beta_r: rates.beta_r.clone(),
            ideal: EffectiveCost::new(&model.topology, &m_r, &model.holding_cost),
            m_r,
            holding_cost: model.holding_cost.clone(),
        }
    }
}

/// Read-only view of the system at a review epoch.
#[derive(Debug, Clone, Copy)]
pub struct PolicySnapshot<'a> {
    pub t_scaled: f64,
    pub r: u32,
    pub queue: &'a [u64],
    /// `K M^r Q`, unscaled.
    pub workload: &'a [f64],
    /// `K M^r Q / r`.
    pub workload_scaled: &'a [f64],
    pub ctx: &'a PolicyContext,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub rates: Vec<f64>,
}

pub trait Policy: Send {
    fn name(&self) -> &str;
    fn decide(&mut self, snap: &PolicySnapshot<'_>) -> PolicyDecision;
}

/// `b = ρ`.
pub fn nominal_static(snap: &PolicySnapshot<'_>) -> PolicyDecision {
    PolicyDecision {
        rates: snap.ctx.rho.clone(),
    }
}

/// Shared types run at their nominal rate while backlogged; each resource's
/// leftover capacity goes to its local type if that type is backlogged.
/// Not work-conserving: a resource idles when its local queue is empty.
pub fn shared_nominal(snap: &PolicySnapshot<'_>) -> PolicyDecision {
    let topo = &snap.ctx.topology;
    let nj = topo.num_types();
    let mut b = vec![0.0; nj];
    for j in 0..nj {
        if topo.is_shared(j) && snap.queue[j] > 0 {
            b[j] = snap.ctx.rho[j];
        }
    }
    for (i, &local) in topo.local_type().iter().enumerate() {
        if snap.queue[local] == 0 {
            continue;
        }
        let used: f64 = (0..nj)
            .filter(|&j| j != local && topo.uses(i, j))
            .map(|j| b[j])
            .sum();
        b[local] = (topo.capacity()[i] - used).max(0.0);
    }
    PolicyDecision { rates: b }
}

/// Weight of the utilization term relative to one unit of excess work.
const UTILIZATION_WEIGHT: f64 = 1e-6;

/// Greedy tracking of the ideal queue vector `q*(W) = argmin{h·q : KM^r q = W}`.
///
/// Capacity goes first to types holding more than their ideal share, with
/// weights `β^r_j (Q_j − q*_j)⁺`; remaining capacity is spread so that as
/// many resources as possible stay busy. Resources only idle when no
/// backlogged type can use them.
pub fn hgi_greedy(snap: &PolicySnapshot<'_>) -> PolicyDecision {
    let ctx = snap.ctx;
    let topo = &ctx.topology;
    let nj = topo.num_types();
    let active: Vec<bool> = snap.queue.iter().map(|&q| q > 0).collect();
    if !active.iter().any(|&a| a) {
        return PolicyDecision {
            rates: vec![0.0; nj],
        };
    }
    let ideal = ctx
        .ideal
        .solve(snap.workload)
        .map(|(_, q)| q)
        .unwrap_or_else(|_| vec![0.0; nj]);
    let weights: Vec<f64> = (0..nj)
        .map(|j| {
            let excess = (snap.queue[j] as f64 - ideal[j]).max(0.0);
            ctx.beta_r[j] * excess + UTILIZATION_WEIGHT * topo.column_weight(j) as f64
        })
        .collect();
    let g: Vec<Vec<f64>> = topo
        .incidence()
        .iter()
        .map(|row| row.iter().map(|&k| f64::from(k)).collect())
        .collect();
    let sol = lp::maximize_packing(&weights, &g, topo.capacity(), &active)
        .expect("b = 0 is feasible and the packing region is bounded");
    PolicyDecision { rates: sol.x }
}

/// Maximizes `Σ_j Q_j β^r_j b_j` over `K·b ≤ C`, `b ≥ 0`, `b_j = 0` on empty
/// queues. Ties go to the lexicographically smallest vertex.
pub fn max_pressure(snap: &PolicySnapshot<'_>) -> PolicyDecision {
    let topo = &snap.ctx.topology;
    let nj = topo.num_types();
    let active: Vec<bool> = snap.queue.iter().map(|&q| q > 0).collect();
    if !active.iter().any(|&a| a) {
        return PolicyDecision {
            rates: vec![0.0; nj],
        };
    }
    let weights: Vec<f64> = (0..nj)
        .map(|j| snap.queue[j] as f64 * snap.ctx.beta_r[j])
        .collect();
    let g: Vec<Vec<f64>> = topo
        .incidence()
        .iter()
        .map(|row| row.iter().map(|&k| f64::from(k)).collect())
        .collect();
    let sol = lp::maximize_packing(&weights, &g, topo.capacity(), &active)
        .expect("b = 0 is feasible and the packing region is bounded");
    PolicyDecision { rates: sol.x }
}

/// The built-in policies, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinPolicy {
    Nominal,
    Hgi,
    MaxPressure,
}

impl BuiltinPolicy {
    pub const ALL: [BuiltinPolicy; 3] = [
        BuiltinPolicy::Nominal,
        BuiltinPolicy::Hgi,
        BuiltinPolicy::MaxPressure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BuiltinPolicy::Nominal => "nominal",
            BuiltinPolicy::Hgi => "hgi",
            BuiltinPolicy::MaxPressure => "maxpressure",
        }
    }
}

impl fmt::Display for BuiltinPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown policy `{0}` (expected nominal, hgi or maxpressure)")]
pub struct UnknownPolicy(pub String);

impl FromStr for BuiltinPolicy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "nominal" => Ok(BuiltinPolicy::Nominal),
            "hgi" => Ok(BuiltinPolicy::Hgi),
            "maxpressure" => Ok(BuiltinPolicy::MaxPressure),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}

impl Policy for BuiltinPolicy {
    fn name(&self) -> &str {
        self.as_str()
    }

    fn decide(&mut self, snap: &PolicySnapshot<'_>) -> PolicyDecision {
        match self {
            BuiltinPolicy::Nominal => nominal_static(snap),
            BuiltinPolicy::Hgi => hgi_greedy(snap),
            BuiltinPolicy::MaxPressure => max_pressure(snap),
        }
    }
}

/// Any closure over snapshots is a policy.
pub struct FnPolicy<F> {
    name: String,
    f: F,
}

impl<F> FnPolicy<F>
where
    F: FnMut(&PolicySnapshot<'_>) -> Vec<f64> + Send,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F> Policy for FnPolicy<F>
where
    F: FnMut(&PolicySnapshot<'_>) -> Vec<f64> + Send,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, snap: &PolicySnapshot<'_>) -> PolicyDecision {
        PolicyDecision {
            rates: (self.f)(snap),
        }
    }
}

/// Zeroes rates on empty queues.
pub fn clamp_empty(rates: &mut [f64], queue: &[u64]) {
    for (b, &q) in rates.iter_mut().zip(queue) {
        if q == 0 {
            *b = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fixtures, rates_at};

    fn ctx(model: &HeavyTrafficModel) -> PolicyContext {
        PolicyContext::new(model, &rates_at(model, 10).unwrap())
    }

    fn decide(policy: BuiltinPolicy, ctx: &PolicyContext, q: &[u64]) -> Vec<f64> {
        let qf: Vec<f64> = q.iter().zip(&ctx.m_r).map(|(&v, m)| v as f64 * m).collect();
        let w = ctx.topology.apply(&qf);
        let mut p = policy;
        let snap = PolicySnapshot {
            t_scaled: 0.0,
            r: 10,
            queue: q,
            workload: &w,
            workload_scaled: &w,
            ctx,
        };
        let mut b = p.decide(&snap).rates;
        clamp_empty(&mut b, q);
        b
    }

    fn load(ctx: &PolicyContext, b: &[f64]) -> Vec<f64> {
        ctx.topology.apply(b)
    }

    #[test]
    fn nominal_examples() {
        let c = ctx(&fixtures::linear2());
        let b = decide(BuiltinPolicy::Nominal, &c, &[1, 2, 3]);
        assert_eq!(b, c.rho);
        assert_eq!(load(&c, &b), c.topology.capacity());
        assert_eq!(decide(BuiltinPolicy::Nominal, &c, &[0, 0, 0]), vec![0.0; 3]);
        let s = ctx(&fixtures::single_queue());
        assert_eq!(decide(BuiltinPolicy::Nominal, &s, &[5]), vec![1.0]);
    }

    #[test]
    fn max_pressure_examples() {
        let s = ctx(&fixtures::single_queue());
        assert_eq!(decide(BuiltinPolicy::MaxPressure, &s, &[3]), vec![1.0]);
        let c = ctx(&fixtures::linear2());
        assert_eq!(
            decide(BuiltinPolicy::MaxPressure, &c, &[5, 5, 0]),
            vec![2.0, 2.0, 0.0]
        );
        assert_eq!(
            decide(BuiltinPolicy::MaxPressure, &c, &[0, 0, 5]),
            vec![0.0, 0.0, 2.0]
        );
    }

    #[test]
    fn max_pressure_asymmetric_capacity() {
        let mut m = fixtures::linear2();
        m.topology = crate::model::validate_topology(m.topology.incidence(), &[2.0, 3.0]).unwrap();
        m.alpha = vec![1.0, 2.0, 1.0];
        let c = ctx(&m);
        // vertices of {b₃ ≤ 2, b₃ ≤ 3}: optimum at min(C₁, C₂)
        assert_eq!(
            decide(BuiltinPolicy::MaxPressure, &c, &[0, 0, 5]),
            vec![0.0, 0.0, 2.0]
        );
    }

    #[test]
    fn names_round_trip() {
        for p in BuiltinPolicy::ALL {
            assert_eq!(p.as_str().parse::<BuiltinPolicy>().unwrap(), p);
        }
        assert!("fair".parse::<BuiltinPolicy>().is_err());
    }

    fn snapshot_decide(
        f: fn(&PolicySnapshot<'_>) -> PolicyDecision,
        ctx: &PolicyContext,
        q: &[u64],
    ) -> Vec<f64> {
        let qf: Vec<f64> = q.iter().zip(&ctx.m_r).map(|(&v, m)| v as f64 * m).collect();
        let w = ctx.topology.apply(&qf);
        let snap = PolicySnapshot {
            t_scaled: 0.0,
            r: 10,
            queue: q,
            workload: &w,
            workload_scaled: &w,
            ctx,
        };
        let mut b = f(&snap).rates;
        clamp_empty(&mut b, q);
        b
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn shared_nominal_examples() {
        let c = ctx(&fixtures::linear2());
        let f = |q: &[u64]| snapshot_decide(shared_nominal, &c, q);
        // ρ₃ = 1 for the shared type, locals get C_i − ρ₃ = ρ_i.
        assert_eq!(f(&[4, 4, 4]), vec![1.0, 1.0, 1.0]);
        assert_eq!(f(&[4, 4, 0]), vec![2.0, 2.0, 0.0]);
        assert_eq!(f(&[0, 0, 0]), vec![0.0; 3]);
        // resource 1 idles
        assert_eq!(f(&[0, 3, 3]), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn hgi_examples() {
        let c = ctx(&fixtures::linear2());
        let hgi = |q: &[u64]| snapshot_decide(hgi_greedy, &c, q);
        // locals above their ideal level (0) are drained first
        assert!(close(&hgi(&[4, 4, 4]), &[2.0, 2.0, 0.0]));
        assert!(close(&hgi(&[4, 4, 0]), &[2.0, 2.0, 0.0]));
        assert_eq!(hgi(&[0, 0, 0]), vec![0.0; 3]);
        assert!(close(&hgi(&[0, 3, 3]), &[0.0, 0.0, 2.0]));
        assert!(close(&hgi(&[0, 0, 5]), &[0.0, 0.0, 2.0]));
        let s = ctx(&fixtures::single_queue());
        assert!(close(&snapshot_decide(hgi_greedy, &s, &[7]), &[1.0]));
    }

    #[test]
    fn hgi_is_work_conserving() {
        let c = ctx(&fixtures::linear2());
        for q1 in 0..4u64 {
            for q2 in 0..4u64 {
                for q3 in 0..4u64 {
                    let q = [q1, q2, q3];
                    let b = snapshot_decide(hgi_greedy, &c, &q);
                    let load = c.topology.apply(&b);
                    for i in 0..2 {
                        assert!(load[i] <= c.topology.capacity()[i] + 1e-12);
                        let busy = (0..3).any(|j| c.topology.uses(i, j) && q[j] > 0);
                        if busy {
                            assert!((load[i] - 2.0).abs() < 1e-9, "{q:?} -> {b:?}");
                        }
                    }
                }
            }
        }
    }
}
