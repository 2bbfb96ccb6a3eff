//! Dense simplex for `max cᵀz s.t. Gz ≤ h` with `z` free.
//!
//! The problems here have few variables and many rows, so the dual
//! `min hᵀy s.t. Gᵀy = c, y ≥ 0` is solved instead: its tableau has one row
//! per primal variable. Two-phase method, Bland's rule throughout.

use alloc::vec;
use alloc::vec::Vec;

use crate::linsys::Mat;

const PIVOT_TOL: f64 = 1e-12;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const ZERO_ROW: f64 = 1e-12;

/// Result of an LP solve.
#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, point: Option<Vec<f64>> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize, // excluding rhs
    t: Vec<f64>, // (rows + 1) x (cols + 1), last row = reduced costs
    basis: Vec<usize>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.at(r, c);
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f != 0.0 {
                for j in 0..w {
                    let v = self.t[r * w + j];
                    self.t[i * w + j] -= f * v;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes the cost row using columns `< allowed`.
    fn run(&mut self, allowed: usize) -> Phase {
        loop {
            let entering = (0..allowed).find(|&j| self.at(self.rows, j) < -COST_TOL);
            let Some(c) = entering else {
                return Phase::Optimal;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    match best {
                        None => best = Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-15 || (ratio <= br + 1e-15 && self.basis[i] < self.basis[bi]) {
                                best = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            match best {
                None => return Phase::Unbounded,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let (m, n) = (self.rows, self.cols);
        for j in 0..=n {
            let mut v = if j < n { cost[j] } else { 0.0 };
            for i in 0..m {
                v -= cost[self.basis[i]] * self.at(i, j);
            }
            *self.at_mut(m, j) = v;
        }
    }
}

/// Solves `max cᵀz s.t. G z ≤ h`. Rows of `g` are scaled internally.
pub fn solve(c: &[f64], g: &Mat, h: &[f64]) -> LpOutcome {
    let d = c.len();
    let rows = g.rows();
    debug_assert_eq!(g.cols(), d);
    // normalize rows; rows that vanish relative to the largest one count as zero
    let gmax = g.max_abs();
    let mut kept = Vec::with_capacity(rows * d);
    let mut hn = Vec::with_capacity(rows);
    for i in 0..rows {
        let s = g.row(i).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        if s > ZERO_ROW * gmax {
            kept.extend(g.row(i).iter().map(|v| v / s));
            hn.push(h[i] / s);
        } else if h[i] < -FEAS_TOL {
            return LpOutcome::Infeasible;
        }
    }
    let rows = hn.len();
    let gn = Mat::from_vec(rows, d, kept).expect("row-major storage");
    let cs = c.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if d == 0 {
        return LpOutcome::Optimal { value: 0.0, point: Some(Vec::new()) };
    }
    if cs == 0.0 {
        return if feasible(&gn, &hn) { LpOutcome::Optimal { value: 0.0, point: None } } else { LpOutcome::Infeasible };
    }
    let cn: Vec<f64> = c.iter().map(|v| v / cs).collect();
    match dual_solve(&cn, &gn, &hn) {
        DualResult::Optimal(value, basis) => {
            let point = primal_point(&gn, &hn, &basis, rows);
            LpOutcome::Optimal { value: value * cs, point }
        }
        DualResult::Unbounded => LpOutcome::Infeasible,
        DualResult::Infeasible => {
            if feasible(&gn, &hn) {
                LpOutcome::Unbounded
            } else {
                LpOutcome::Infeasible
            }
        }
    }
}

enum DualResult {
    Optimal(f64, Vec<usize>),
    Unbounded,
    Infeasible,
}

fn dual_solve(c: &[f64], g: &Mat, h: &[f64]) -> DualResult {
    let (d, n) = (c.len(), g.rows());
    let cols = n + d;
    let mut tab = Tableau { rows: d, cols, t: vec![0.0; (d + 1) * (cols + 1)], basis: (n..n + d).collect() };
    for i in 0..d {
        let sgn = if c[i] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..n {
            *tab.at_mut(i, k) = sgn * g[(k, i)];
        }
        *tab.at_mut(i, n + i) = 1.0;
        *tab.at_mut(i, cols) = sgn * c[i];
    }
    let mut cost1 = vec![0.0; cols];
    for v in cost1.iter_mut().skip(n) {
        *v = 1.0;
    }
    tab.set_costs(&cost1);
    tab.run(cols);
    let phase1 = -tab.at(d, cols);
    if phase1 > FEAS_TOL {
        return DualResult::Infeasible;
    }
    // drive artificials out where possible
    for i in 0..d {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.at(i, j).abs() > 1e-9) {
                tab.pivot(i, j);
            }
        }
    }
    let mut cost2 = vec![0.0; cols];
    cost2[..n].copy_from_slice(h);
    tab.set_costs(&cost2);
    match tab.run(n) {
        Phase::Unbounded => DualResult::Unbounded,
        Phase::Optimal => DualResult::Optimal(-tab.at(d, cols), tab.basis.clone()),
    }
}

fn primal_point(g: &Mat, h: &[f64], basis: &[usize], n: usize) -> Option<Vec<f64>> {
    if basis.iter().any(|&b| b >= n) {
        return None;
    }
    let d = basis.len();
    let mut gb = Mat::zeros(d, d);
    let mut hb = vec![0.0; d];
    for (r, &b) in basis.iter().enumerate() {
        for j in 0..d {
            gb[(r, j)] = g[(b, j)];
        }
        hb[r] = h[b];
    }
    gb.lu().ok().map(|lu| lu.solve_vec(&hb))
}

/// Primal feasibility of `{G z ≤ h}` via the dual with zero objective.
fn feasible(g: &Mat, h: &[f64]) -> bool {
    let d = g.cols();
    !matches!(dual_solve(&vec![0.0; d], g, h), DualResult::Unbounded)
}
