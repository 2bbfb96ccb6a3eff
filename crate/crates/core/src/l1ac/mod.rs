//! L1 adaptive controller: design-time bounds and run-time components.

mod bounds;
mod runtime;

pub use bounds::*;
pub use runtime::*;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linsys::{is_hurwitz, Mat};
use crate::sets::Hyperbox;

/// Tuning of the adaptive loop.
#[derive(Clone, Debug, PartialEq)]
pub struct L1Config {
    /// Hurwitz predictor matrix.
    pub ae: Mat,
    /// Low-pass filter bandwidth per input channel.
    pub kf: Vec<f64>,
    /// Estimation sample time used for the bound computation.
    pub t: f64,
    /// Target tube margin between the reference system and the true state.
    pub gamma1: f64,
}

impl L1Config {
    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        if self.ae.shape() != (n, n) {
            return Err(dim_err("predictor matrix must be n x n"));
        }
        if self.kf.len() != m {
            return Err(dim_err("one filter bandwidth per input"));
        }
        if self.kf.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::Parameter("filter bandwidths must be positive".into()));
        }
        if !(self.t > 0.0) || !(self.gamma1 > 0.0) {
            return Err(Error::Parameter("sample time and gamma1 must be positive".into()));
        }
        if !is_hurwitz(&self.ae)? {
            return Err(Error::Stability("predictor matrix is not Hurwitz".into()));
        }
        Ok(())
    }
}

/// Closed-loop nominal matrices `Am = A + B Kx`, `Bv = B Kv`, plus `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlantMatrices {
    pub am: Mat,
    pub b: Mat,
    pub bv: Mat,
}

impl PlantMatrices {
    pub fn from_gains(a: &Mat, b: &Mat, kx: &Mat, kv: &Mat) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || kx.shape() != (b.cols(), n) || kv.rows() != b.cols() {
            return Err(dim_err("plant and gain shapes"));
        }
        let am = a + &b.matmul(kx)?;
        let bv = b.matmul(kv)?;
        if !is_hurwitz(&am)? {
            return Err(Error::Stability("A + B Kx is not Hurwitz".into()));
        }
        Ok(PlantMatrices { am, b: b.clone(), bv })
    }

    pub fn n(&self) -> usize {
        self.am.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }
}

/// A checked inequality `lhs < rhs`, kept for the design report.
#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Condition {
    pub fn strict(name: &str, lhs: f64, rhs: f64) -> Self {
        Condition { name: name.into(), lhs, rhs, holds: lhs < rhs }
    }
}

/// All uniform bounds produced by the design pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSet {
    pub rho_in: f64,
    pub rho_r: f64,
    pub rho: f64,
    pub rho_r_i: Vec<f64>,
    pub rho_i: Vec<f64>,
    pub tilde_rho_i: Vec<f64>,
    pub rho_ur: f64,
    pub gamma2: f64,
    pub rho_ua_j: Vec<f64>,
    pub tilde_rho_u_j: Vec<f64>,
    pub tilde_rho_y_j: Vec<f64>,
    pub b_f_xr: f64,
    pub l_f_xa: f64,
    pub b_f_xa: f64,
    pub xr: Hyperbox,
    pub xa: Hyperbox,
}
