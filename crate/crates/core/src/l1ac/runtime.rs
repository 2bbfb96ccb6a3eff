use alloc::vec;
use alloc::vec::Vec;

use super::phi_inverse_exp;
use crate::error::{dim_err, Result};
use crate::linsys::Mat;

/// Piecewise-constant adaptive law `[σ̂1; σ̂2] = −[B B⊥]⁻¹ Φ⁻¹(T) e^{Ae T} x̃(iT)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveLaw {
    pub b_perp: Mat,
    pub gain: Mat,
    pub t: f64,
    m: usize,
}

impl AdaptiveLaw {
    pub fn new(ae: &Mat, b: &Mat, t: f64) -> Result<Self> {
        let b_perp = b.orth_complement()?;
        let gain = adaptive_gain(ae, b, &b_perp, t)?;
        Ok(AdaptiveLaw { b_perp, gain, t, m: b.cols() })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Returns `(σ̂1, σ̂2)` for the sampled prediction error.
    pub fn update(&self, xtilde: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let s = self.gain.mul_vec(xtilde);
        let (a, b) = s.split_at(self.m);
        (a.to_vec(), b.to_vec())
    }
}

fn adaptive_gain(ae: &Mat, b: &Mat, b_perp: &Mat, t: f64) -> Result<Mat> {
    let (_, m) = phi_inverse_exp(ae, t)?;
    let full = b.hstack(b_perp)?;
    Ok(-&full.solve(&m)?)
}

/// Free-function form of [`AdaptiveLaw::update`].
pub fn adaptive_update(xtilde: &[f64], ae: &Mat, b: &Mat, b_perp: &Mat, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if xtilde.len() != b.rows() {
        return Err(dim_err("prediction error length"));
    }
    let s = adaptive_gain(ae, b, b_perp, t)?.mul_vec(xtilde);
    let (a, c) = s.split_at(b.cols());
    Ok((a.to_vec(), c.to_vec()))
}

/// Internal state of the adaptive loop.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveState {
    pub xhat: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Output of the filter realization, equal to `ua`.
    pub ua: Vec<f64>,
    pub last_update: f64,
}

impl AdaptiveState {
    /// Predictor started at the measured state, estimates and filter at zero.
    pub fn new(x0: &[f64], m: usize) -> Self {
        AdaptiveState {
            xhat: x0.to_vec(),
            sigma1: vec![0.0; m],
            sigma2: vec![0.0; x0.len() - m],
            ua: vec![0.0; m],
            last_update: 0.0,
        }
    }
}

/// Matrices the predictor needs.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictorMatrices {
    pub am: Mat,
    pub bv: Mat,
    pub b: Mat,
    pub b_perp: Mat,
    pub ae: Mat,
}

/// `x̂' = Am x + Bv v + B(ua + σ̂1) + B⊥σ̂2 + Ae(x̂ − x)`.
#[allow(clippy::too_many_arguments)]
pub fn predictor_derivative(
    xhat: &[f64],
    x: &[f64],
    v: &[f64],
    ua: &[f64],
    sigma1: &[f64],
    sigma2: &[f64],
    pm: &PredictorMatrices,
    out: &mut [f64],
) {
    let n = x.len();
    pm.am.mul_vec_into(x, out);
    pm.bv.mul_vec_acc(v, out);
    let mut w = [0.0f64; 16];
    let m = ua.len();
    let mut heap;
    let buf: &mut [f64] = if m <= 16 {
        &mut w[..m]
    } else {
        heap = vec![0.0; m];
        &mut heap[..]
    };
    for j in 0..m {
        buf[j] = ua[j] + sigma1[j];
    }
    pm.b.mul_vec_acc(buf, out);
    if !sigma2.is_empty() {
        pm.b_perp.mul_vec_acc(sigma2, out);
    }
    let mut xt = [0.0f64; 16];
    let mut heap2;
    let xtil: &mut [f64] = if n <= 16 {
        &mut xt[..n]
    } else {
        heap2 = vec![0.0; n];
        &mut heap2[..]
    };
    for i in 0..n {
        xtil[i] = xhat[i] - x[i];
    }
    pm.ae.mul_vec_acc(xtil, out);
}

/// `u̇a,j = −kf_j (ua,j + σ̂1,j)`.
pub fn control_filter_derivative(ua: &[f64], sigma1: &[f64], kf: &[f64], out: &mut [f64]) {
    for j in 0..ua.len() {
        out[j] = -kf[j] * (ua[j] + sigma1[j]);
    }
}
