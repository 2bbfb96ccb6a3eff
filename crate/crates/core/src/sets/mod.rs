//! Boxes, halfspace polytopes and the LP used for redundancy checks.

mod hyperbox;
pub mod lp;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

pub use hyperbox::{pontryagin_diff_box, Hyperbox};
pub use lp::LpOutcome;

use crate::error::{dim_err, Error, Result};
use crate::linsys::Mat;

/// Feasibility and redundancy tolerance.
pub const SET_TOL: f64 = 1e-9;

/// `{z : A z ≤ b}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    dim: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Polytope {
    /// The whole space (no rows).
    pub fn new(dim: usize) -> Self {
        Polytope { dim, a: Vec::new(), b: Vec::new() }
    }

    pub fn from_box(bx: &Hyperbox) -> Self {
        let n = bx.dim();
        let mut p = Polytope::new(n);
        for i in 0..n {
            let mut e = alloc::vec![0.0; n];
            e[i] = 1.0;
            p.push_unchecked(&e, bx.upper[i]);
            e[i] = -1.0;
            p.push_unchecked(&e, -bx.lower[i]);
        }
        p
    }

    pub fn from_rows(normals: &Mat, offsets: &[f64]) -> Result<Self> {
        if normals.rows() != offsets.len() {
            return Err(dim_err("one offset per normal"));
        }
        let mut p = Polytope::new(normals.cols());
        for i in 0..normals.rows() {
            p.push(normals.row(i), offsets[i])?;
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn push(&mut self, normal: &[f64], offset: f64) -> Result<()> {
        if normal.len() != self.dim {
            return Err(dim_err("halfspace normal length"));
        }
        if normal.iter().any(|v| !v.is_finite()) || offset.is_nan() {
            return Err(Error::Numeric("non-finite halfspace".into()));
        }
        self.push_unchecked(normal, offset);
        Ok(())
    }

    fn push_unchecked(&mut self, normal: &[f64], offset: f64) {
        self.a.extend_from_slice(normal);
        self.b.push(offset);
    }

    pub fn normal(&self, i: usize) -> &[f64] {
        &self.a[i * self.dim..(i + 1) * self.dim]
    }

    pub fn offset(&self, i: usize) -> f64 {
        self.b[i]
    }

    pub fn offsets(&self) -> &[f64] {
        &self.b
    }

    pub fn normals(&self) -> Mat {
        Mat::from_vec(self.len(), self.dim, self.a.clone()).expect("consistent storage")
    }

    /// Largest `aᵢ·z − bᵢ` over rows, each row scaled to unit ∞-norm.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| {
                let n = self.normal(i);
                let s = n.iter().fold(0.0, |m: f64, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
                (n.iter().zip(z).map(|(a, x)| a * x).sum::<f64>() - self.b[i]) / s
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> bool {
        z.len() == self.dim && (self.is_empty() || self.max_violation(z) <= tol)
    }

    pub fn intersect_box(&self, bx: &Hyperbox) -> Result<Polytope> {
        if bx.dim() != self.dim {
            return Err(dim_err("box vs polytope dimension"));
        }
        let mut p = self.clone();
        let q = Polytope::from_box(bx);
        p.a.extend_from_slice(&q.a);
        p.b.extend_from_slice(&q.b);
        Ok(p)
    }

    /// Plain-text export: one row per line, normal coefficients then offset.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..self.len() {
            for v in self.normal(i) {
                let _ = write!(s, "{v:e} ");
            }
            let _ = writeln!(s, "{:e}", self.b[i]);
        }
        s
    }

    /// Inverse of [`Polytope::to_text`].
    pub fn from_text(text: &str) -> Result<Polytope> {
        let mut p: Option<Polytope> = None;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: core::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let vals = vals.map_err(|e| Error::Parameter(format!("line {}: {e}", ln + 1)))?;
            if vals.len() < 2 {
                return Err(Error::Parameter(format!("line {}: need normal and offset", ln + 1)));
            }
            let poly = p.get_or_insert_with(|| Polytope::new(vals.len() - 1));
            poly.push(&vals[..vals.len() - 1], vals[vals.len() - 1])?;
        }
        p.ok_or_else(|| Error::Parameter("no halfspaces".into()))
    }
}

/// `max objective·z` over `P` (optionally intersected with `bounds`).
pub fn lp_max(objective: &[f64], p: &Polytope, bounds: Option<&Hyperbox>) -> Result<LpOutcome> {
    if objective.len() != p.dim() {
        return Err(dim_err("objective length"));
    }
    let q;
    let poly = match bounds {
        Some(b) => {
            q = p.intersect_box(b)?;
            &q
        }
        None => p,
    };
    Ok(lp::solve(objective, &poly.normals(), poly.offsets()))
}

/// `true` iff `normal·z ≤ offset` holds on all of `P` (up to [`SET_TOL`] after
/// scaling the row to unit ∞-norm).
pub fn is_redundant(normal: &[f64], offset: f64, p: &Polytope) -> Result<bool> {
    let s = normal.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if s == 0.0 {
        return Ok(offset >= -SET_TOL);
    }
    let scaled: Vec<f64> = normal.iter().map(|v| v / s).collect();
    match lp_max(&scaled, p, None)? {
        LpOutcome::Optimal { value, .. } => Ok(value <= offset / s + SET_TOL),
        LpOutcome::Unbounded => Ok(false),
        LpOutcome::Infeasible => Err(Error::EmptySet("polytope has no points".into())),
    }
}
