use std::fmt::Write as _;
use std::io::{self, Write};

/// Kind of event processed at an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Arrival(usize),
    Completion(usize),
    Review,
    Horizon,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::Arrival(_) => "arrival",
            EventKind::Completion(_) => "completion",
            EventKind::Review => "review",
            EventKind::Horizon => "horizon",
        }
    }

    pub fn job_type(&self) -> Option<usize> {
        match *self {
            EventKind::Arrival(j) | EventKind::Completion(j) => Some(j),
            _ => None,
        }
    }
}

/// Post-event record. `rates` are the rates in force just before the event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t_scaled: f64,
    pub kind: EventKind,
    pub queue: Vec<u64>,
    pub rates: Vec<f64>,
    pub cum_allocation: Vec<f64>,
}

/// Raw (unscaled) state at one sampling-grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub t_scaled: f64,
    pub queue: Vec<u64>,
    pub cum_arrivals: Vec<u64>,
    pub cum_completions: Vec<u64>,
    pub cum_allocation: Vec<f64>,
    /// Time until the next arrival of each type.
    pub arrival_residual: Vec<f64>,
    /// Size still owed to a head-of-line job that has started service, else 0.
    pub service_residual: Vec<f64>,
    /// `∫₀ᵗ h·Q(s) ds`, unscaled time.
    pub cost_integral: f64,
}

/// Constants needed to rebuild scaled processes from a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub r: u32,
    pub horizon: f64,
    pub grid: f64,
    pub q0: Vec<u64>,
    pub alpha_r: Vec<f64>,
    pub beta_r: Vec<f64>,
    pub rho: Vec<f64>,
    pub capacity: Vec<f64>,
    pub incidence: Vec<Vec<u8>>,
}

impl TraceMeta {
    pub fn num_types(&self) -> usize {
        self.rho.len()
    }

    pub fn num_resources(&self) -> usize {
        self.capacity.len()
    }

    /// `K M^r x`.
    pub fn km_r(&self, x: &[f64]) -> Vec<f64> {
        self.incidence
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .zip(&self.beta_r)
                    .filter(|((&k, _), _)| k == 1)
                    .map(|((_, v), b)| v / b)
                    .sum()
            })
            .collect()
    }

    /// `K x`.
    pub fn k(&self, x: &[f64]) -> Vec<f64> {
        self.incidence
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .filter(|(&k, _)| k == 1)
                    .map(|(_, v)| v)
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub grid: Vec<GridPoint>,
    pub events: Vec<EventRecord>,
}

impl Trace {
    /// Average of `h·Q̂` over `[from, to]`, both on the grid.
    pub fn cost_between(&self, from: usize, to: usize) -> f64 {
        let a = &self.grid[from];
        let b = &self.grid[to];
        let r = f64::from(self.meta.r);
        (b.cost_integral - a.cost_integral) / (r * r * r * (b.t_scaled - a.t_scaled))
    }

    /// Writes the event log as CSV with header
    /// `t_scaled,kind,type,Q_1..Q_J,W_1..W_I,U_1..U_I` (scaled `Ŵ`, `Û`).
    pub fn write_events_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let nj = self.meta.num_types();
        let ni = self.meta.num_resources();
        let mut header = String::from("t_scaled,kind,type");
        for j in 1..=nj {
            let _ = write!(header, ",Q_{j}");
        }
        for i in 1..=ni {
            let _ = write!(header, ",W_{i}");
        }
        for i in 1..=ni {
            let _ = write!(header, ",U_{i}");
        }
        writeln!(out, "{header}")?;
        let r = f64::from(self.meta.r);
        for e in &self.events {
            let q: Vec<f64> = e.queue.iter().map(|&v| v as f64).collect();
            let w = self.meta.km_r(&q);
            let used = self.meta.k(&e.cum_allocation);
            let t = e.t_scaled * r * r;
            let mut line = format!("{},{},", e.t_scaled, e.kind.label());
            if let Some(j) = e.kind.job_type() {
                let _ = write!(line, "{}", j + 1);
            }
            for v in &e.queue {
                let _ = write!(line, ",{v}");
            }
            for v in &w {
                let _ = write!(line, ",{}", v / r);
            }
            for (c, u) in self.meta.capacity.iter().zip(&used) {
                let _ = write!(line, ",{}", (t * c - u) / r);
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}
