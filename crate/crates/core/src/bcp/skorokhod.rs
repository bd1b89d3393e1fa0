//! Normal reflection into the nonnegative orthant on a sampled path.
//!
//! With identity reflection the map decouples by coordinate:
//! `η_i(t) = max(0, sup_{s≤t} −(w0_i + ψ_i(s)))` and `φ = w0 + ψ + η`.

/// A path sampled on a time grid; `values[k]` is the state at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl GridPath {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Self {
        assert_eq!(times.len(), values.len(), "one value per time point");
        Self { times, values }
    }

    /// One-dimensional path from scalar samples.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>) -> Self {
        let values = values.into_iter().map(|v| vec![v]).collect();
        Self::new(times, values)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Coordinate `i` as a vector over the grid.
    pub fn coordinate(&self, i: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[i]).collect()
    }
}

/// Reflected path `φ` and regulator `η`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflection {
    pub phi: GridPath,
    pub eta: GridPath,
}

/// Applies the Skorokhod map to `w0 + ψ`.
pub fn skorokhod_reflect(psi: &GridPath, w0: &[f64]) -> Reflection {
    let d = psi.dim();
    assert_eq!(w0.len(), d, "start has the path's dimension");
    let mut push = vec![0.0f64; d];
    let mut phi = Vec::with_capacity(psi.len());
    let mut eta = Vec::with_capacity(psi.len());
    for v in &psi.values {
        let mut p = Vec::with_capacity(d);
        for i in 0..d {
            let shifted = w0[i] + v[i];
            if -shifted > push[i] {
                push[i] = -shifted;
            }
            p.push(shifted + push[i]);
        }
        phi.push(p);
        eta.push(push.clone());
    }
    Reflection {
        phi: GridPath::new(psi.times.clone(), phi),
        eta: GridPath::new(psi.times.clone(), eta),
    }
}

/// Linear interpolation of breakpoints `(t, x)` onto a uniform grid.
pub fn piecewise_linear(breaks: &[(f64, f64)], step: f64) -> GridPath {
    let (t0, _) = breaks[0];
    let (t1, _) = breaks[breaks.len() - 1];
    let n = ((t1 - t0) / step).round() as usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let t = t0 + k as f64 * step;
        while seg + 2 < breaks.len() && t > breaks[seg + 1].0 {
            seg += 1;
        }
        let (ta, xa) = breaks[seg];
        let (tb, xb) = breaks[seg + 1];
        let x = if tb > ta {
            xa + (xb - xa) * ((t - ta) / (tb - ta)).clamp(0.0, 1.0)
        } else {
            xb
        };
        times.push(t);
        values.push(vec![x]);
    }
    GridPath::new(times, values)
}
