//! Dense two-phase simplex for small standard-form programs
//!
//! ```text
//! minimize c·x  subject to  A x = b,  x ≥ 0
//! ```
//!
//! Pivoting follows Bland's rule. Phase II minimizes the objective vector
//! `(c·x, x₀, x₁, …)` lexicographically, so among optimal solutions the
//! lexicographically smallest one is returned. This makes the selected vertex
//! a deterministic function of the data.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

struct Tableau {
    /// `m` rows of `B⁻¹[A | b]`, width `ncols + 1`.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.ncols]
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[col] = 0.0;
            }
        }
        self.basis[r] = col;
    }

    /// Reduced cost of column `col` for objective `c` (indexed by column).
    fn reduced_cost(&self, c: &[f64], col: usize) -> f64 {
        let mut d = c[col];
        for (i, row) in self.rows.iter().enumerate() {
            d -= c[self.basis[i]] * row[col];
        }
        d
    }

    /// Minimum-ratio row for an entering column; ties go to the lowest basic
    /// variable index.
    fn ratio_test(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = row[col];
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs simplex iterations over `allowed` columns for a lexicographic
    /// objective (list of cost vectors, most significant first).
    fn optimize(&mut self, objectives: &[Vec<f64>], allowed: usize) -> Result<(), LpError> {
        // Bland's rule guarantees termination; the cap guards against
        // floating-point stalls.
        let max_iter = 50 * (self.ncols + self.rows.len() + 10);
        for _ in 0..max_iter {
            let entering = (0..allowed).find(|&col| {
                if self.basis.contains(&col) {
                    return false;
                }
                for c in objectives {
                    let d = self.reduced_cost(c, col);
                    if d < -COST_TOL {
                        return true;
                    }
                    if d > COST_TOL {
                        return false;
                    }
                }
                false
            });
            let Some(col) = entering else {
                return Ok(());
            };
            match self.ratio_test(col) {
                Some(r) => self.pivot(r, col),
                None => return Err(LpError::Unbounded),
            }
        }
        Err(LpError::Unbounded)
    }
}

/// Solves `min c·x, A x = b, x ≥ 0`, returning the lexicographically smallest
/// optimal solution.
pub fn solve(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = a.len();
    if b.len() != m {
        return Err(LpError::Dimension(format!(
            "A has {m} rows, b has {}",
            b.len()
        )));
    }
    if a.iter().any(|row| row.len() != n) {
        return Err(LpError::Dimension(format!(
            "rows of A must have length {n}"
        )));
    }
    if m == 0 {
        // Every x ≥ 0 is feasible: bounded iff c ≥ 0, optimum at 0.
        if c.iter().any(|&v| v < 0.0) {
            return Err(LpError::Unbounded);
        }
        return Ok(LpSolution {
            x: vec![0.0; n],
            objective: 0.0,
        });
    }

    // Columns: originals 0..n, artificials n..n+m, then rhs.
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; ncols + 1];
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = 1.0;
        row[ncols] = sign * b[i];
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        basis: (n..n + m).collect(),
        ncols,
    };

    let mut phase1 = vec![0.0; ncols];
    for v in phase1.iter_mut().skip(n) {
        *v = 1.0;
    }
    t.optimize(&[phase1], ncols)?;
    let infeas: f64 = (0..m)
        .filter(|&i| t.basis[i] >= n)
        .map(|i| t.rhs(i).abs())
        .sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeas > FEAS_TOL * scale {
        return Err(LpError::Infeasible);
    }

    // Drive artificials out of the basis; drop redundant rows.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&col| t.rows[i][col].abs() > 1e-9) {
                Some(col) => {
                    t.pivot(i, col);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }

    let mut objectives = Vec::with_capacity(n + 1);
    let mut main = c.to_vec();
    main.resize(ncols, 0.0);
    objectives.push(main);
    for k in 0..n {
        let mut e = vec![0.0; ncols];
        e[k] = 1.0;
        objectives.push(e);
    }
    t.optimize(&objectives, n)?;

    let mut x = vec![0.0; n];
    for (i, &col) in t.basis.iter().enumerate() {
        if col < n {
            x[col] = t.rhs(i).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpSolution { x, objective })
}

/// Solves `max w·x, G x ≤ cap, x ≥ 0` with `cap ≥ 0`, excluding columns where
/// `active` is false (they are fixed at zero). Returns the lexicographically
/// smallest optimal `x`.
pub fn maximize_packing(
    weights: &[f64],
    g: &[Vec<f64>],
    cap: &[f64],
    active: &[bool],
) -> Result<LpSolution, LpError> {
    let n = weights.len();
    let m = g.len();
    let cols: Vec<usize> = (0..n).filter(|&j| active[j]).collect();
    let nv = cols.len();
    let mut c = Vec::with_capacity(nv + m);
    c.extend(cols.iter().map(|&j| -weights[j]));
    c.extend(std::iter::repeat_n(0.0, m));
    let a: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row: Vec<f64> = cols.iter().map(|&j| g[i][j]).collect();
            row.extend((0..m).map(|s| if s == i { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    let sol = solve(&c, &a, cap)?;
    let mut x = vec![0.0; n];
    for (k, &j) in cols.iter().enumerate() {
        x[j] = sol.x[k];
    }
    Ok(LpSolution {
        objective: -sol.objective,
        x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_equality() {
        // min x + y + z, x + z = 2, y + z = 3 → z = 2, y = 1.
        let s = solve(
            &[1.0, 1.0, 1.0],
            &[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]],
            &[2.0, 3.0],
        )
        .unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert_eq!(s.x, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn infeasible() {
        let e = solve(&[1.0], &[vec![1.0], vec![1.0]], &[1.0, 2.0]).unwrap_err();
        assert_eq!(e, LpError::Infeasible);
    }

    #[test]
    fn unbounded() {
        let e = solve(&[-1.0, 0.0], &[vec![1.0, -1.0]], &[0.0]).unwrap_err();
        assert_eq!(e, LpError::Unbounded);
    }

    #[test]
    fn redundant_rows() {
        let s = solve(&[1.0, 2.0], &[vec![1.0, 1.0], vec![2.0, 2.0]], &[1.0, 2.0]).unwrap();
        assert_eq!(s.x, vec![1.0, 0.0]);
    }

    #[test]
    fn lexicographic_tie_break() {
        // min x0 + x1 s.t. x0 + x1 = 1: every point on the segment is
        // optimal; lexmin is (0, 1).
        let s = solve(&[1.0, 1.0], &[vec![1.0, 1.0]], &[1.0]).unwrap();
        assert_eq!(s.x, vec![0.0, 1.0]);
    }

    #[test]
    fn negative_rhs() {
        let s = solve(&[1.0, 1.0], &[vec![-1.0, -1.0]], &[-2.0]).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert_eq!(s.x, vec![0.0, 2.0]);
    }

    #[test]
    fn packing() {
        let g = vec![vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]];
        let s = maximize_packing(&[0.0, 0.0, 5.0], &g, &[2.0, 3.0], &[false, false, true]).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0, 2.0]);
        let s = maximize_packing(&[5.0, 5.0, 0.0], &g, &[2.0, 3.0], &[true, true, false]).unwrap();
        assert_eq!(s.x, vec![2.0, 3.0, 0.0]);
        assert!((s.objective - 25.0).abs() < 1e-12);
    }
}
