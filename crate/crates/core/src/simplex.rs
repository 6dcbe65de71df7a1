//! Dense revised simplex: two phases, Bland's rule, explicit basis inverse with periodic refresh.

use crate::error::{Error, Result};

pub const PIVOT_TOL: f64 = 1e-10;
pub const FEAS_TOL: f64 = 1e-9;
const REFRESH_EVERY: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

/// `maximize objective·x` subject to `rows[i].0 · x (cmp) rows[i].2` and `x ≥ 0`.
/// Constraints are stored by column because the master problems here are wide and short.
#[derive(Clone, Debug, Default)]
pub struct LpProblem {
    pub num_rows: usize,
    pub objective: Vec<f64>,
    /// Column `k` as sparse `(row, coefficient)` pairs.
    pub columns: Vec<Vec<(usize, f64)>>,
    pub cmp: Vec<Cmp>,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(cmp: Vec<Cmp>, rhs: Vec<f64>) -> LpProblem {
        assert_eq!(cmp.len(), rhs.len());
        LpProblem { num_rows: rhs.len(), objective: Vec::new(), columns: Vec::new(), cmp, rhs }
    }

    /// Appends a variable and returns its index.
    pub fn add_column(&mut self, cost: f64, entries: Vec<(usize, f64)>) -> usize {
        debug_assert!(entries.iter().all(|(r, _)| *r < self.num_rows));
        self.objective.push(cost);
        self.columns.push(entries);
        self.columns.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow price of each row in its original orientation (`∂ objective / ∂ rhs`).
    pub duals: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    rows: usize,
    /// Dense columns of the normalized constraint matrix, structural then slack then artificial.
    cols: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    first_artificial: usize,
    iterations: usize,
    max_iterations: usize,
}

impl Tableau {
    fn binv_row(&self, i: usize) -> &[f64] {
        &self.binv[i * self.rows..(i + 1) * self.rows]
    }

    fn ftran(&self, col: &[f64]) -> Vec<f64> {
        let r = self.rows;
        let mut out = vec![0.0; r];
        for (k, &a) in col.iter().enumerate() {
            if a != 0.0 {
                for i in 0..r {
                    out[i] += self.binv[i * r + k] * a;
                }
            }
        }
        out
    }

    fn basic_values(&self) -> Vec<f64> {
        self.ftran(&self.b)
    }

    fn prices(&self, cost: &[f64]) -> Vec<f64> {
        let r = self.rows;
        let mut y = vec![0.0; r];
        for i in 0..r {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = self.binv_row(i);
                for k in 0..r {
                    y[k] += cb * row[k];
                }
            }
        }
        y
    }

    fn refresh(&mut self) -> Result<()> {
        let r = self.rows;
        // Gauss-Jordan on [B | I].
        let mut a = vec![0.0; r * r];
        for (k, &j) in self.basis.iter().enumerate() {
            for i in 0..r {
                a[i * r + k] = self.cols[j][i];
            }
        }
        let mut inv = vec![0.0; r * r];
        for i in 0..r {
            inv[i * r + i] = 1.0;
        }
        for c in 0..r {
            let piv = (c..r)
                .max_by(|&x, &y| a[x * r + c].abs().total_cmp(&a[y * r + c].abs()))
                .unwrap();
            if a[piv * r + c].abs() < 1e-14 {
                return Err(Error::Simplex("singular basis during refresh".into()));
            }
            if piv != c {
                for k in 0..r {
                    a.swap(piv * r + k, c * r + k);
                    inv.swap(piv * r + k, c * r + k);
                }
            }
            let d = a[c * r + c];
            for k in 0..r {
                a[c * r + k] /= d;
                inv[c * r + k] /= d;
            }
            for i in 0..r {
                if i != c {
                    let f = a[i * r + c];
                    if f != 0.0 {
                        for k in 0..r {
                            a[i * r + k] -= f * a[c * r + k];
                            inv[i * r + k] -= f * inv[c * r + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        Ok(())
    }

    fn pivot(&mut self, leave_row: usize, enter: usize, d: &[f64]) -> Result<()> {
        let r = self.rows;
        let piv = d[leave_row];
        for k in 0..r {
            self.binv[leave_row * r + k] /= piv;
        }
        for i in 0..r {
            if i != leave_row && d[i] != 0.0 {
                let f = d[i];
                for k in 0..r {
                    self.binv[i * r + k] -= f * self.binv[leave_row * r + k];
                }
            }
        }
        self.basis[leave_row] = enter;
        self.iterations += 1;
        if self.iterations % REFRESH_EVERY == 0 {
            self.refresh()?;
        }
        Ok(())
    }

    /// Runs primal simplex on `cost` with Bland's rule. `allowed(j)` gates entering columns.
    fn optimize(&mut self, cost: &[f64], allowed: impl Fn(usize) -> bool) -> Result<LpStatus> {
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::Simplex(format!("iteration limit {} reached", self.max_iterations)));
            }
            let y = self.prices(cost);
            let in_basis = {
                let mut v = vec![false; self.cols.len()];
                for &j in &self.basis {
                    v[j] = true;
                }
                v
            };
            let mut enter = None;
            for j in 0..self.cols.len() {
                if in_basis[j] || !allowed(j) {
                    continue;
                }
                let col = &self.cols[j];
                let mut rc = cost[j];
                for i in 0..self.rows {
                    if col[i] != 0.0 {
                        rc -= y[i] * col[i];
                    }
                }
                if rc > FEAS_TOL {
                    enter = Some(j);
                    break;
                }
            }
            let Some(enter) = enter else { return Ok(LpStatus::Optimal) };
            let d = self.ftran(&self.cols[enter]);
            let xb = self.basic_values();
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..self.rows {
                if d[i] > PIVOT_TOL {
                    let ratio = xb[i].max(0.0) / d[i];
                    let take = match leave {
                        None => true,
                        Some(l) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[l]),
                    };
                    if take {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(leave) = leave else { return Ok(LpStatus::Unbounded) };
            self.pivot(leave, enter, &d)?;
        }
    }
}

/// Solves `problem`. The iteration guard defaults to `200 · (rows + columns) + 1000`.
pub fn solve(problem: &LpProblem) -> Result<LpResult> {
    solve_with_limit(problem, None)
}

pub fn solve_with_limit(problem: &LpProblem, max_iterations: Option<usize>) -> Result<LpResult> {
    let r = problem.num_rows;
    let n = problem.columns.len();
    // Normalize rows so that every right-hand side is nonnegative.
    let sign: Vec<f64> = problem.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let cmp: Vec<Cmp> = problem
        .cmp
        .iter()
        .zip(&sign)
        .map(|(&c, &s)| match (c, s < 0.0) {
            (Cmp::Le, true) => Cmp::Ge,
            (Cmp::Ge, true) => Cmp::Le,
            (c, _) => c,
        })
        .collect();
    let b: Vec<f64> = problem.rhs.iter().zip(&sign).map(|(x, s)| x * s).collect();

    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n + 2 * r);
    for col in &problem.columns {
        let mut dense = vec![0.0; r];
        for &(i, a) in col {
            dense[i] += a * sign[i];
        }
        cols.push(dense);
    }
    let mut basis = vec![usize::MAX; r];
    for i in 0..r {
        match cmp[i] {
            Cmp::Le | Cmp::Ge => {
                let mut s = vec![0.0; r];
                s[i] = if cmp[i] == Cmp::Le { 1.0 } else { -1.0 };
                if cmp[i] == Cmp::Le {
                    basis[i] = cols.len();
                }
                cols.push(s);
            }
            Cmp::Eq => {}
        }
    }
    let first_artificial = cols.len();
    for i in 0..r {
        if basis[i] == usize::MAX {
            let mut a = vec![0.0; r];
            a[i] = 1.0;
            basis[i] = cols.len();
            cols.push(a);
        }
    }
    let total = cols.len();
    let mut binv = vec![0.0; r * r];
    for i in 0..r {
        binv[i * r + i] = 1.0;
    }
    let mut t = Tableau {
        rows: r,
        cols,
        b,
        basis,
        binv,
        first_artificial,
        iterations: 0,
        max_iterations: max_iterations.unwrap_or(200 * (r + n) + 1000),
    };

    if t.first_artificial < total {
        let cost1: Vec<f64> = (0..total).map(|j| if j >= first_artificial { -1.0 } else { 0.0 }).collect();
        t.optimize(&cost1, |_| true)?;
        let xb = t.basic_values();
        let infeas: f64 = (0..r).filter(|&i| t.basis[i] >= first_artificial).map(|i| xb[i]).sum();
        if infeas > FEAS_TOL * (1.0 + t.b.iter().fold(0.0f64, |a, x| a.max(x.abs()))) {
            return Ok(LpResult { status: LpStatus::Infeasible, x: vec![0.0; n], objective: f64::NAN, duals: vec![0.0; r], iterations: t.iterations });
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..r {
            if t.basis[i] >= first_artificial {
                let row: Vec<f64> = t.binv_row(i).to_vec();
                let in_basis: Vec<bool> = {
                    let mut v = vec![false; total];
                    for &j in &t.basis {
                        v[j] = true;
                    }
                    v
                };
                let candidate = (0..first_artificial).find(|&j| {
                    !in_basis[j] && row.iter().zip(&t.cols[j]).map(|(a, b)| a * b).sum::<f64>().abs() > 1e-7
                });
                if let Some(j) = candidate {
                    let d = t.ftran(&t.cols[j]);
                    t.pivot(i, j, &d)?;
                }
            }
        }
    }

    let mut cost2 = vec![0.0; total];
    cost2[..n].copy_from_slice(&problem.objective);
    let status = t.optimize(&cost2, |j| j < first_artificial)?;
    if status == LpStatus::Unbounded {
        return Ok(LpResult { status, x: vec![0.0; n], objective: f64::INFINITY, duals: vec![0.0; r], iterations: t.iterations });
    }
    t.refresh()?;
    let xb = t.basic_values();
    let mut x = vec![0.0; n];
    for i in 0..r {
        if t.basis[i] < n {
            x[t.basis[i]] = xb[i].max(0.0);
        }
    }
    let y = t.prices(&cost2);
    let duals = y.iter().zip(&sign).map(|(v, s)| v * s).collect();
    let objective = x.iter().zip(&problem.objective).map(|(a, c)| a * c).sum();
    Ok(LpResult { status: LpStatus::Optimal, x, objective, duals, iterations: t.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(rows: &[(&[f64], Cmp, f64)], obj: &[f64]) -> LpProblem {
        let mut p = LpProblem::new(rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.2).collect());
        for (k, &c) in obj.iter().enumerate() {
            let entries = rows.iter().enumerate().filter(|(_, r)| r.0[k] != 0.0).map(|(i, r)| (i, r.0[k])).collect();
            p.add_column(c, entries);
        }
        p
    }

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y; x ≤ 4; 2y ≤ 12; 3x + 2y ≤ 18 → (2, 6), 36, duals (0, 1.5, 1).
        let p = lp(&[(&[1.0, 0.0], Cmp::Le, 4.0), (&[0.0, 2.0], Cmp::Le, 12.0), (&[3.0, 2.0], Cmp::Le, 18.0)], &[3.0, 5.0]);
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 36.0).abs() < 1e-9);
        assert!((r.x[0] - 2.0).abs() < 1e-9 && (r.x[1] - 6.0).abs() < 1e-9);
        let expect = [0.0, 1.5, 1.0];
        for (a, b) in r.duals.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9, "{:?}", r.duals);
        }
    }

    #[test]
    fn equality_and_ge_rows_with_negative_rhs() {
        // max -x - y; x + y = 2; x - y ≥ -1 (i.e. y - x ≤ 1); → optimum -2.
        let p = lp(&[(&[1.0, 1.0], Cmp::Eq, 2.0), (&[1.0, -1.0], Cmp::Ge, -1.0)], &[-1.0, -1.0]);
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective + 2.0).abs() < 1e-9);
        assert!((r.duals[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let p = lp(&[(&[1.0], Cmp::Le, 1.0), (&[1.0], Cmp::Ge, 2.0)], &[1.0]);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);
        let p = lp(&[(&[1.0, -1.0], Cmp::Le, 1.0)], &[1.0, 0.0]);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the largest-coefficient rule.
        let p = lp(
            &[
                (&[0.25, -60.0, -0.04, 9.0], Cmp::Le, 0.0),
                (&[0.5, -90.0, -0.02, 3.0], Cmp::Le, 0.0),
                (&[0.0, 0.0, 1.0, 0.0], Cmp::Le, 1.0),
            ],
            &[0.75, -150.0, 0.02, -6.0],
        );
        let r = solve(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 0.05).abs() < 1e-9);
    }
}
