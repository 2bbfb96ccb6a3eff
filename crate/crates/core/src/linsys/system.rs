use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::eig::{is_hurwitz, lyapunov, spectral_radius, symmetric_eigenvalues};
use super::expm::expm;
use super::Mat;
use crate::error::{dim_err, Error, Result};

/// LTI realization `ẋ = Ax + Bu, y = Cx + Du`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateSpaceSystem {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl StateSpaceSystem {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || c.cols() != n || d.rows() != c.rows() || d.cols() != b.cols() {
            return Err(dim_err("inconsistent state-space realization"));
        }
        Ok(StateSpaceSystem { a, b, c, d })
    }

    /// A pure gain `y = Du` with no states.
    pub fn static_gain(d: Mat) -> Self {
        StateSpaceSystem { a: Mat::zeros(0, 0), b: Mat::zeros(0, d.cols()), c: Mat::zeros(d.rows(), 0), d }
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.d.cols()
    }

    pub fn outputs(&self) -> usize {
        self.d.rows()
    }

    /// Series connection: `self` feeds `next`, i.e. `next(s)·self(s)`.
    pub fn then(&self, next: &StateSpaceSystem) -> Result<StateSpaceSystem> {
        if self.outputs() != next.inputs() {
            return Err(dim_err("series connection signal widths"));
        }
        let (n1, n2) = (self.order(), next.order());
        let mut a = Mat::zeros(n1 + n2, n1 + n2);
        a.set_block(0, 0, &self.a);
        a.set_block(n1, n1, &next.a);
        a.set_block(n1, 0, &(&next.b * &self.c));
        let b = self.b.vstack(&(&next.b * &self.d))?;
        let c = (&next.d * &self.c).hstack(&next.c)?;
        let d = &next.d * &self.d;
        StateSpaceSystem::new(a, b, c, d)
    }

    /// Premultiplies the output by a constant matrix.
    pub fn premultiply(&self, t: &Mat) -> Result<StateSpaceSystem> {
        StateSpaceSystem::new(self.a.clone(), self.b.clone(), t.matmul(&self.c)?, t.matmul(&self.d)?)
    }
}

/// Transfer operators that appear in the bound pipeline.
#[derive(Clone, Copy, Debug)]
pub enum Cascade<'a> {
    /// `(sI − Am)⁻¹ B (I − C(s))`
    Gxm { am: &'a Mat, b: &'a Mat, kf: &'a [f64] },
    /// `(sI − Am)⁻¹ Bv`
    Hxv { am: &'a Mat, bv: &'a Mat },
    /// `(sI − Am)⁻¹ B`
    Hxm { am: &'a Mat, b: &'a Mat },
    /// `C(s) B† (sI − Ae)`, proper thanks to the low-pass filter.
    CBdagSIminusAe { b: &'a Mat, ae: &'a Mat, kf: &'a [f64] },
    /// `(sI − Am)⁻¹ B C(s) B† (sI − Ae)`
    HxmCBdagSIminusAe { am: &'a Mat, b: &'a Mat, ae: &'a Mat, kf: &'a [f64] },
    /// `s (sI − Am)⁻¹ = I + Am (sI − Am)⁻¹`
    STimesResolvent { am: &'a Mat },
    /// `C(s) = diag(kf_j / (s + kf_j))`
    Filter { kf: &'a [f64] },
}

fn check_kf(kf: &[f64]) -> Result<()> {
    if kf.is_empty() || kf.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
        return Err(Error::Parameter("filter bandwidths must be positive".into()));
    }
    Ok(())
}

/// Explicit proper realization of a pipeline operator.
pub fn realize_cascade(kind: Cascade<'_>) -> Result<StateSpaceSystem> {
    match kind {
        Cascade::Filter { kf } => {
            check_kf(kf)?;
            let k = Mat::from_diag(kf);
            let m = kf.len();
            StateSpaceSystem::new(-&k, Mat::identity(m), k, Mat::zeros(m, m))
        }
        Cascade::Hxv { am, bv } => {
            let n = am.rows();
            StateSpaceSystem::new(am.clone(), bv.clone(), Mat::identity(n), Mat::zeros(n, bv.cols()))
        }
        Cascade::Hxm { am, b } => {
            let n = am.rows();
            StateSpaceSystem::new(am.clone(), b.clone(), Mat::identity(n), Mat::zeros(n, b.cols()))
        }
        Cascade::STimesResolvent { am } => {
            let n = am.rows();
            StateSpaceSystem::new(am.clone(), Mat::identity(n), am.clone(), Mat::identity(n))
        }
        Cascade::Gxm { am, b, kf } => {
            check_kf(kf)?;
            let (n, m) = (am.rows(), b.cols());
            if kf.len() != m {
                return Err(dim_err("one bandwidth per input channel"));
            }
            // I − C(s): z' = −K z + u, y = −K z + u
            let k = Mat::from_diag(kf);
            let mut a = Mat::zeros(n + m, n + m);
            a.set_block(0, 0, am);
            a.set_block(0, n, &-&(b * &k));
            a.set_block(n, n, &-&k);
            let bb = b.vstack(&Mat::identity(m))?;
            let c = Mat::identity(n).hstack(&Mat::zeros(n, m))?;
            StateSpaceSystem::new(a, bb, c, Mat::zeros(n, m))
        }
        Cascade::CBdagSIminusAe { b, ae, kf } => {
            let (bz, cz, dz) = filtered_inverse_parts(b, ae, kf)?;
            let m = b.cols();
            StateSpaceSystem::new(-&Mat::from_diag(kf), bz, cz, dz).inspect(|s| {
                debug_assert_eq!(s.order(), m);
            })
        }
        Cascade::HxmCBdagSIminusAe { am, b, ae, kf } => {
            let (bz, cz, dz) = filtered_inverse_parts(b, ae, kf)?;
            let (n, m) = (am.rows(), b.cols());
            let mut a = Mat::zeros(n + m, n + m);
            a.set_block(0, 0, am);
            a.set_block(0, n, &(b * &cz));
            a.set_block(n, n, &-&Mat::from_diag(kf));
            let bb = (b * &dz).vstack(&bz)?;
            let c = Mat::identity(n).hstack(&Mat::zeros(n, m))?;
            StateSpaceSystem::new(a, bb, c, Mat::zeros(n, n))
        }
    }
}

// K(sI+K)⁻¹ B†(sI − Ae) = K B† − K(sI+K)⁻¹(K B† + B† Ae)
// realized as z' = −K z + (K B† + B† Ae) u, y = −K z + K B† u.
fn filtered_inverse_parts(b: &Mat, ae: &Mat, kf: &[f64]) -> Result<(Mat, Mat, Mat)> {
    check_kf(kf)?;
    if kf.len() != b.cols() || ae.shape() != (b.rows(), b.rows()) {
        return Err(dim_err("filter, input matrix and predictor matrix disagree"));
    }
    let k = Mat::from_diag(kf);
    let bdag = b.pinv_left()?;
    let kb = &k * &bdag;
    let bz = &kb + &(&bdag * ae);
    Ok((bz, -&k, kb))
}

/// Induced L1 (peak-to-peak) norm with per-output-row values.
#[derive(Clone, Debug, PartialEq)]
pub struct L1Norm {
    pub total: f64,
    pub per_row: Vec<f64>,
}

/// Relative truncation threshold for the certified tail.
const TAIL_REL: f64 = 1e-9;
/// Per-segment local error target relative to the accumulated integral.
const SEG_REL: f64 = 1e-10;
const PANELS: usize = 8;

/// `∫|q(s)| ds` over `s ∈ [0, 2]` for the quadratic through `(0,g0), (1,g1), (2,g2)`.
fn abs_quadratic_panel(g0: f64, g1: f64, g2: f64) -> f64 {
    let pos = g0 >= 0.0 && g1 >= 0.0 && g2 >= 0.0;
    let neg = g0 <= 0.0 && g1 <= 0.0 && g2 <= 0.0;
    if pos || neg {
        return (g0.abs() + 4.0 * g1.abs() + g2.abs()) / 3.0;
    }
    let a2 = 0.5 * (g0 - 2.0 * g1 + g2);
    let a1 = 0.5 * (-3.0 * g0 + 4.0 * g1 - g2);
    let a0 = g0;
    let prim = |s: f64| a0 * s + 0.5 * a1 * s * s + a2 * s * s * s / 3.0;
    let mut cuts: Vec<f64> = Vec::with_capacity(4);
    cuts.push(0.0);
    let scale = a0.abs() + a1.abs() + a2.abs();
    if a2.abs() <= 1e-14 * scale {
        if a1 != 0.0 {
            cuts.push(-a0 / a1);
        }
    } else {
        let disc = a1 * a1 - 4.0 * a2 * a0;
        if disc >= 0.0 {
            let sq = libm::sqrt(disc);
            let q = -0.5 * (a1 + if a1 >= 0.0 { sq } else { -sq });
            if q != 0.0 {
                cuts.push(q / a2);
                cuts.push(a0 / q);
            } else {
                cuts.push(0.0);
            }
        }
    }
    cuts.retain(|&s| (0.0..=2.0).contains(&s));
    cuts.push(2.0);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    cuts.windows(2).map(|w| (prim(w[1]) - prim(w[0])).abs()).sum()
}

/// Per-row integrals over `2k` steps of width `h` given samples `g[k][row*p + col]`.
fn simpson_rows(samples: &[Vec<f64>], stride: usize, h: f64, q: usize, p: usize, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = 0.0;
    }
    let last = samples.len() - 1;
    let mut k = 0;
    while k + 2 * stride <= last {
        let (s0, s1, s2) = (&samples[k], &samples[k + stride], &samples[k + 2 * stride]);
        for i in 0..q {
            let mut acc = 0.0;
            for j in 0..p {
                let idx = i * p + j;
                acc += abs_quadratic_panel(s0[idx], s1[idx], s2[idx]);
            }
            out[i] += acc * h * stride as f64;
        }
        k += 2 * stride;
    }
}

/// `∫₀^∞ |C e^{At} B| dt` per row plus `|D|` row sums, returned as an upper estimate.
pub fn l1_norm(sys: &StateSpaceSystem) -> Result<L1Norm> {
    let (n, p, q) = (sys.order(), sys.inputs(), sys.outputs());
    let dsum = sys.d.row_abs_sums();
    if n == 0 || p == 0 {
        let total = dsum.iter().cloned().fold(0.0, f64::max);
        return Ok(L1Norm { total, per_row: dsum });
    }
    if !is_hurwitz(&sys.a)? {
        return Err(Error::Stability("L1 norm requires a Hurwitz state matrix".into()));
    }
    // Lyapunov certificate: AᵀP + PA = −I gives V = xᵀPx decaying at rate 1/λmax(P).
    let pm = lyapunov(&sys.a, &Mat::identity(n))?;
    let pev = symmetric_eigenvalues(&pm)?;
    let (lmin, lmax) = (pev[0], pev[n - 1]);
    if !(lmin > 0.0) {
        return Err(Error::Numeric("Lyapunov certificate is not positive definite".into()));
    }
    let c_norms: Vec<f64> = (0..q).map(|i| libm::sqrt(sys.c.row(i).iter().map(|v| v * v).sum())).collect();
    let tail = |x: &Mat, out: &mut [f64]| {
        let mut col_bound = 0.0;
        for j in 0..p {
            let xj = x.col(j);
            let px = pm.mul_vec(&xj);
            let v: f64 = xj.iter().zip(&px).map(|(a, b)| a * b).sum();
            col_bound += libm::sqrt(v.max(0.0) / lmin);
        }
        for (o, cn) in out.iter_mut().zip(&c_norms) {
            *o = cn * col_bound * 2.0 * lmax;
        }
    };

    let rho = spectral_radius(&sys.a)?.max(1e-12);
    let h0 = 0.05 / rho;
    let mut level: i32 = 0;
    let mut cache: Vec<(i32, Mat)> = Vec::new();
    let mut step_matrix = |lvl: i32| -> Result<Mat> {
        if let Some((_, m)) = cache.iter().find(|(l, _)| *l == lvl) {
            return Ok(m.clone());
        }
        let m = expm(&sys.a, h0 * libm::pow(2.0, lvl as f64))?;
        cache.push((lvl, m.clone()));
        Ok(m)
    };

    let mut x = sys.b.clone();
    let mut acc = vec![0.0; q];
    let mut fine = vec![0.0; q];
    let mut coarse = vec![0.0; q];
    let mut tails = vec![0.0; q];
    let mut t = 0.0;
    let steps = 2 * PANELS;
    let sample = |x: &Mat| -> Vec<f64> { (&sys.c * x).as_slice().to_vec() };
    for _segment in 0..1_000_000 {
        let h = h0 * libm::pow(2.0, level as f64);
        let e = step_matrix(level)?;
        let mut xs = Vec::with_capacity(steps + 1);
        let mut samples = Vec::with_capacity(steps + 1);
        let mut xk = x.clone();
        samples.push(sample(&xk));
        xs.push(xk.clone());
        for _ in 0..steps {
            xk = &e * &xk;
            samples.push(sample(&xk));
            xs.push(xk.clone());
        }
        simpson_rows(&samples, 1, h, q, p, &mut fine);
        simpson_rows(&samples, 2, h, q, p, &mut coarse);
        let global = acc.iter().zip(&fine).map(|(a, f)| a + f).fold(0.0, f64::max);
        let mut ok = true;
        let mut very_ok = true;
        for i in 0..q {
            let err = (fine[i] - coarse[i]).abs() / 15.0;
            let tol = SEG_REL * (acc[i] + fine[i]) + 1e-16 * global;
            if err > tol {
                ok = false;
            }
            if err > tol / 32.0 {
                very_ok = false;
            }
        }
        if !ok {
            level -= 1;
            if level < -40 {
                return Err(Error::Tolerance(format!("step refinement exhausted at t = {t:.3e}")));
            }
            continue;
        }
        for i in 0..q {
            acc[i] += fine[i];
        }
        t += h * steps as f64;
        x = xs.pop().expect("segment has samples");
        if very_ok && level < 40 {
            level += 1;
        }
        tail(&x, &mut tails);
        let scale = acc.iter().cloned().fold(0.0, f64::max);
        let done = (0..q).all(|i| tails[i] <= TAIL_REL * acc[i] || tails[i] <= 1e-13 * scale);
        if done {
            let per_row: Vec<f64> = (0..q).map(|i| dsum[i] + acc[i] + tails[i]).collect();
            let total = per_row.iter().cloned().fold(0.0, f64::max);
            return Ok(L1Norm { total, per_row });
        }
    }
    Err(Error::Tolerance(format!("tail bound not reached by t = {t:.3e}")))
}
