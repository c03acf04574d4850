//! Dense revised simplex for `min cᵀx  s.t.  Ax = b, x ≥ 0` with sparse columns.
//!
//! Two phases with one artificial per row. Pricing is Dantzig's rule until a
//! configurable number of degenerate pivots has occurred, then Bland's rule
//! for the rest of the solve so that cycling cannot occur.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const ZERO_STEP: f64 = 1e-12;
const REFACTOR_EVERY: usize = 64;

/// Equality-form LP. `columns[j]` lists the nonzero `(row, value)` entries of column `j`.
#[derive(Debug, Clone)]
pub(crate) struct EqualityLp {
    pub rows: usize,
    pub columns: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct SimplexOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub basis_size: usize,
}

struct Tableau<'a> {
    lp: &'a EqualityLp,
    /// Row sign flips so that every right-hand side is nonnegative.
    sign: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    degenerate: usize,
    bland_after: usize,
    since_refactor: usize,
}

impl<'a> Tableau<'a> {
    fn new(lp: &'a EqualityLp, bland_after: usize) -> Self {
        let m = lp.rows;
        let n = lp.columns.len();
        let sign: Vec<f64> = lp.rhs.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut is_basic = vec![false; n + m];
        for b in &mut is_basic[n..] {
            *b = true;
        }
        Self {
            lp,
            xb: lp.rhs.iter().zip(&sign).map(|(b, s)| b * s).collect(),
            sign,
            basis: (n..n + m).collect(),
            is_basic,
            binv,
            iterations: 0,
            max_iterations: 100_000.max(50 * (n + m)),
            degenerate: 0,
            bland_after,
            since_refactor: 0,
        }
    }

    fn n(&self) -> usize {
        self.lp.columns.len()
    }

    fn m(&self) -> usize {
        self.lp.rows
    }

    /// Entries of column `j` in the sign-normalized system; artificials are unit columns.
    fn entries(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n() {
            self.lp.columns[j].iter().map(|&(r, v)| (r, v * self.sign[r])).collect()
        } else {
            vec![(j - self.n(), 1.0)]
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m();
        let mut u = vec![0.0; m];
        for (r, v) in self.entries(j) {
            for (i, ui) in u.iter_mut().enumerate() {
                *ui += self.binv[i * m + r] * v;
            }
        }
        u
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut y = vec![0.0; m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb != 0.0 {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk += cb * self.binv[i * m + k];
                }
            }
        }
        y
    }

    fn pivot(&mut self, leave: usize, enter: usize, u: &[f64]) {
        let m = self.m();
        let piv = u[leave];
        for k in 0..m {
            self.binv[leave * m + k] /= piv;
        }
        self.xb[leave] /= piv;
        for i in 0..m {
            if i != leave && u[i] != 0.0 {
                let f = u[i];
                for k in 0..m {
                    self.binv[i * m + k] -= f * self.binv[leave * m + k];
                }
                self.xb[i] -= f * self.xb[leave];
            }
        }
        self.is_basic[self.basis[leave]] = false;
        self.is_basic[enter] = true;
        self.basis[leave] = enter;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    /// Recomputes `B⁻¹` and `x_B` from scratch by Gauss–Jordan elimination.
    fn refactor(&mut self) {
        let m = self.m();
        let mut a = vec![0.0; m * m];
        for (col, &bj) in self.basis.iter().enumerate() {
            for (r, v) in self.entries(bj) {
                a[r * m + col] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&i, &k| a[i * m + c].abs().total_cmp(&a[k * m + c].abs()))
                .unwrap();
            if a[p * m + c].abs() < 1e-14 {
                // Numerically singular; keep the product-form inverse.
                self.since_refactor = 0;
                return;
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c];
            for k in 0..m {
                a[c * m + k] /= d;
                inv[c * m + k] /= d;
            }
            for i in 0..m {
                if i != c {
                    let f = a[i * m + c];
                    if f != 0.0 {
                        for k in 0..m {
                            a[i * m + k] -= f * a[c * m + k];
                            inv[i * m + k] -= f * inv[c * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        let rhs: Vec<f64> = self.lp.rhs.iter().zip(&self.sign).map(|(b, s)| b * s).collect();
        for i in 0..m {
            self.xb[i] = (0..m).map(|k| self.binv[i * m + k] * rhs[k]).sum();
        }
        self.since_refactor = 0;
    }

    /// Runs simplex iterations for `cost` over columns allowed by `can_enter`.
    fn optimize(&mut self, cost: &[f64], can_enter: impl Fn(usize) -> bool) -> Result<()> {
        let cmax = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let dtol = 1e-11 * (1.0 + cmax);
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::IterationLimit(self.max_iterations));
            }
            let bland = self.degenerate >= self.bland_after;
            let y = self.duals(cost);
            let mut enter = None;
            let mut best = -dtol;
            for j in 0..cost.len() {
                if self.is_basic[j] || !can_enter(j) {
                    continue;
                }
                let d = cost[j] - self.entries(j).iter().map(|&(r, v)| y[r] * v).sum::<f64>();
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(enter) = enter else {
                return Ok(());
            };

            let u = self.ftran(enter);
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            for (i, &ui) in u.iter().enumerate() {
                if ui <= PIVOT_TOL {
                    continue;
                }
                let t = self.xb[i].max(0.0) / ui;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if t < theta - ZERO_STEP {
                            true
                        } else if t <= theta + ZERO_STEP {
                            if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                ui > u[l]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    theta = theta.min(t);
                }
            }
            let Some(leave) = leave else {
                return Err(Error::Unbounded);
            };
            if theta <= ZERO_STEP {
                self.degenerate += 1;
            }
            self.iterations += 1;
            self.pivot(leave, enter, &u);
            for x in &mut self.xb {
                if *x < 0.0 && *x > -1e-13 {
                    *x = 0.0;
                }
            }
        }
    }

    /// Swaps artificial variables left in the basis at zero level for real columns.
    fn expel_artificials(&mut self) {
        let (n, m) = (self.n(), self.m());
        for l in 0..m {
            if self.basis[l] < n {
                continue;
            }
            let found = (0..n).filter(|&j| !self.is_basic[j]).find(|&j| {
                let w: f64 = self
                    .entries(j)
                    .iter()
                    .map(|&(r, v)| self.binv[l * m + r] * v)
                    .sum();
                w.abs() > PIVOT_TOL
            });
            if let Some(j) = found {
                let u = self.ftran(j);
                self.pivot(l, j, &u);
            }
        }
    }
}

/// Solves `lp`, switching to Bland's rule after `bland_after` degenerate pivots.
pub(crate) fn solve(lp: &EqualityLp, bland_after: usize) -> Result<SimplexOutcome> {
    assert_eq!(lp.rhs.len(), lp.rows);
    assert_eq!(lp.cost.len(), lp.columns.len());
    let n = lp.columns.len();
    let m = lp.rows;
    let mut t = Tableau::new(lp, bland_after);

    let mut phase1 = vec![0.0; n + m];
    for c in &mut phase1[n..] {
        *c = 1.0;
    }
    t.optimize(&phase1, |j| j < n)?;
    t.refactor();
    let residual: f64 = t
        .basis
        .iter()
        .zip(&t.xb)
        .filter(|(&bj, _)| bj >= n)
        .map(|(_, &x)| x.abs())
        .sum();
    let scale = 1.0 + lp.rhs.iter().map(|b| b.abs()).sum::<f64>();
    if residual > 1e-9 * scale {
        return Err(Error::Infeasible(residual));
    }
    t.expel_artificials();

    let mut phase2 = lp.cost.clone();
    phase2.extend(std::iter::repeat_n(0.0, m));
    t.optimize(&phase2, |j| j < n)?;
    t.refactor();

    let mut x = vec![0.0; n];
    for (&bj, &v) in t.basis.iter().zip(&t.xb) {
        if bj < n {
            x[bj] = v.max(0.0);
        }
    }
    let objective = x.iter().zip(&lp.cost).map(|(x, c)| x * c).sum();
    Ok(SimplexOutcome { x, objective, iterations: t.iterations, basis_size: m })
}
