//! Fixed-step RK4 simulation of the hybrid closed loop, companion replays,
//! and comparison of traces against the design bounds.
//!
//! Events (governor at multiples of `Td`, adaptive law at multiples of `T`)
//! are applied at grid points before the step that starts there.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::l1ac::{control_filter_derivative, gamma0, predictor_derivative};
use crate::l1rg::{runtime_step, Clocks, L1RGController, ProblemSpec};
use crate::linsys::{zoh_discretize, Mat};
use crate::refgov::{nominal_model_step, rg_step, GovernorDesign, GovernorState, K_MAX};
use crate::sets::Hyperbox;
use crate::uncertainty::UncertaintyModel;

/// Reference signal `r(t)`.
pub type Signal<'a> = &'a dyn Fn(f64) -> Vec<f64>;

/// Fixed-width rows stored contiguously.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Channel {
    pub width: usize,
    pub data: Vec<f64>,
}

impl Channel {
    pub fn new(width: usize) -> Self {
        Channel { width, data: Vec::new() }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.width);
        self.data.extend_from_slice(row);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Column `j` over all rows.
    pub fn col(&self, j: usize) -> Vec<f64> {
        self.data.iter().skip(j).step_by(self.width).copied().collect()
    }

    /// `max_t |self_j(t)|`.
    pub fn max_abs(&self, j: usize) -> f64 {
        self.data.iter().skip(j).step_by(self.width).fold(0.0, |m: f64, v| m.max(v.abs()))
    }
}

/// A logged run. Every `stride`-th integration step is recorded.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct SimTrace {
    pub h: f64,
    pub stride: usize,
    pub t: Vec<f64>,
    pub x: Channel,
    pub xn: Channel,
    pub u: Channel,
    pub ua: Channel,
    pub v: Channel,
    pub r: Channel,
    pub sigma1: Channel,
    pub sigma2: Channel,
    pub xtilde: Channel,
    /// True uncertainty `f(t, x(t))`.
    pub f: Channel,
    /// Governor κ at `Td` events, NaN elsewhere.
    pub kappa: Vec<f64>,
}

impl SimTrace {
    pub fn new(n: usize, m: usize, h: f64, stride: usize) -> Self {
        SimTrace {
            h,
            stride,
            t: Vec::new(),
            x: Channel::new(n),
            xn: Channel::new(n),
            u: Channel::new(m),
            ua: Channel::new(m),
            v: Channel::new(m),
            r: Channel::new(m),
            sigma1: Channel::new(m),
            sigma2: Channel::new(n - m),
            xtilde: Channel::new(n),
            f: Channel::new(m),
            kappa: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n(&self) -> usize {
        self.x.width
    }

    pub fn m(&self) -> usize {
        self.u.width
    }

    /// Index of the first record at or after `t`.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        self.t.iter().position(|s| *s >= t - 1e-12)
    }

    fn same_grid(&self, other: &SimTrace) -> Result<()> {
        if self.len() != other.len() || self.t.iter().zip(&other.t).any(|(a, b)| (a - b).abs() > 1e-9) {
            return Err(Error::GridMismatch(format!("{} vs {} records", self.len(), other.len())));
        }
        Ok(())
    }
}

/// Integration options.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub horizon: f64,
    pub h: f64,
    pub stride: usize,
}

impl SimOptions {
    pub fn new(horizon: f64, h: f64) -> Self {
        SimOptions { horizon, h, stride: 1 }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.horizon > 0.0 && self.h > 0.0) || self.stride == 0 {
            return Err(Error::Parameter("horizon, step and stride must be positive".into()));
        }
        Ok(libm::round(self.horizon / self.h) as usize)
    }
}

fn rk4<F>(y: &mut [f64], t: f64, h: f64, mut f: F, buf: &mut [Vec<f64>; 5])
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let [k1, k2, k3, k4, tmp] = buf;
    f(t, y, k1);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(t + 0.5 * h, tmp, k2);
    for i in 0..y.len() {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(t + 0.5 * h, tmp, k3);
    for i in 0..y.len() {
        tmp[i] = y[i] + h * k3[i];
    }
    f(t + h, tmp, k4);
    for i in 0..y.len() {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn buffers(len: usize) -> [Vec<f64>; 5] {
    [vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len], vec![0.0; len]]
}

fn check_finite(y: &[f64], t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { last_good: t })
    }
}

/// `ẋ = Am x + Bv v + B(ua + f)`; `Am`, `Bv` absorb the baseline law.
fn plant_derivative(am: &Mat, bv: &Mat, b: &Mat, x: &[f64], v: &[f64], w: &[f64], out: &mut [f64]) {
    am.mul_vec_into(x, out);
    bv.mul_vec_acc(v, out);
    b.mul_vec_acc(w, out);
}

/// Closed loop under the L1-RG controller, started at `x0`.
pub fn simulate_l1rg(
    ctrl: &L1RGController,
    unc: &dyn UncertaintyModel,
    r_signal: Signal<'_>,
    x0: &[f64],
    opts: &SimOptions,
) -> Result<SimTrace> {
    let (n, m) = (ctrl.n(), ctrl.m());
    if x0.len() != n || unc.channels() != m {
        return Err(dim_err("initial state or uncertainty channels"));
    }
    let steps = opts.steps()?;
    let clocks = Clocks::new(opts.h, ctrl.t_runtime, ctrl.gov.td)?;
    let mut rt = ctrl.initial_runtime(x0);
    let pm = &ctrl.predictor;
    let kf = &ctrl.l1.config.kf;
    // y = [x, x̂, ua, xn]
    let mut y = vec![0.0; 3 * n + m];
    y[..n].copy_from_slice(x0);
    y[n..2 * n].copy_from_slice(x0);
    y[2 * n + m..].copy_from_slice(x0);
    let mut tr = SimTrace::new(n, m, opts.h, opts.stride);
    let mut buf = buffers(y.len());
    let mut fbuf = vec![0.0; m];
    let mut w = vec![0.0; m];
    for k in 0..=steps {
        let t = k as f64 * opts.h;
        check_finite(&y, t - opts.h)?;
        rt.adaptive.xhat.copy_from_slice(&y[n..2 * n]);
        rt.adaptive.ua.copy_from_slice(&y[2 * n..2 * n + m]);
        let r = r_signal(t);
        let (u, diag) = runtime_step(ctrl, &clocks, k, &y[..n], &r, &mut rt)?;
        if k % opts.stride == 0 {
            unc.evaluate(t, &y[..n], &mut fbuf);
            tr.t.push(t);
            tr.x.push(&y[..n]);
            tr.xn.push(&y[2 * n + m..]);
            tr.u.push(&u);
            tr.ua.push(&y[2 * n..2 * n + m]);
            tr.v.push(&rt.v);
            tr.r.push(&r);
            tr.sigma1.push(&rt.adaptive.sigma1);
            tr.sigma2.push(&rt.adaptive.sigma2);
            let xt: Vec<f64> = (0..n).map(|i| y[n + i] - y[i]).collect();
            tr.xtilde.push(&xt);
            tr.f.push(&fbuf);
            tr.kappa.push(diag.governor.as_ref().map_or(f64::NAN, |g| g.kappa));
        }
        if k == steps {
            break;
        }
        let (v, s1, s2) = (&rt.v, &rt.adaptive.sigma1, &rt.adaptive.sigma2);
        rk4(
            &mut y,
            t,
            opts.h,
            |tt, s, d| {
                let (x, rest) = s.split_at(n);
                let (xhat, rest) = rest.split_at(n);
                let (ua, xn) = rest.split_at(m);
                let (dx, drest) = d.split_at_mut(n);
                let (dxhat, drest) = drest.split_at_mut(n);
                let (dua, dxn) = drest.split_at_mut(m);
                unc.evaluate(tt, x, &mut w);
                for j in 0..m {
                    w[j] += ua[j];
                }
                plant_derivative(&pm.am, &pm.bv, &pm.b, x, v, &w, dx);
                predictor_derivative(xhat, x, v, ua, s1, s2, pm, dxhat);
                control_filter_derivative(ua, s1, kf, dua);
                pm.am.mul_vec_into(xn, dxn);
                pm.bv.mul_vec_acc(v, dxn);
            },
            &mut buf,
        );
    }
    Ok(tr)
}

/// Value of the logged command at integration step `k`.
fn replay_v(src: &SimTrace, k: usize) -> &[f64] {
    src.v.row((k / src.stride).min(src.len() - 1))
}

fn check_replay(src: &SimTrace) -> Result<usize> {
    if src.is_empty() {
        return Err(Error::Parameter("empty source trace".into()));
    }
    Ok((src.len() - 1) * src.stride)
}

/// `ẋn = Am xn + Bv v` under the command logged in `src` (held between records).
pub fn simulate_nominal(ctrl: &L1RGController, src: &SimTrace, x0: &[f64]) -> Result<SimTrace> {
    let (n, m) = (ctrl.n(), ctrl.m());
    let steps = check_replay(src)?;
    let (am, bv) = (&ctrl.plant.am, &ctrl.plant.bv);
    let mut y = x0.to_vec();
    let mut tr = SimTrace::new(n, m, src.h, src.stride);
    let mut buf = buffers(n);
    for k in 0..=steps {
        let t = k as f64 * src.h;
        let v = replay_v(src, k);
        if k % src.stride == 0 {
            let u = ctrl.baseline_input(&y, v);
            tr.t.push(t);
            tr.x.push(&y);
            tr.xn.push(&y);
            tr.u.push(&u);
            tr.ua.push(&vec![0.0; m]);
            tr.v.push(v);
            tr.r.push(src.r.row(k / src.stride));
            tr.sigma1.push(&vec![0.0; m]);
            tr.sigma2.push(&vec![0.0; n - m]);
            tr.xtilde.push(&vec![0.0; n]);
            tr.f.push(&vec![0.0; m]);
            tr.kappa.push(f64::NAN);
        }
        if k == steps {
            break;
        }
        rk4(
            &mut y,
            t,
            src.h,
            |_, s, d| {
                am.mul_vec_into(s, d);
                bv.mul_vec_acc(v, d);
            },
            &mut buf,
        );
    }
    Ok(tr)
}

/// Non-implementable reference system: `ẋr = Am xr + Bv v + B(ur + f(t, xr))`
/// with `ur = −C(s) f(t, xr)`, under the command logged in `src`.
/// The `ua` channel holds `ur` and `f` holds `f(t, xr)`.
pub fn simulate_reference(
    ctrl: &L1RGController,
    unc: &dyn UncertaintyModel,
    src: &SimTrace,
    x0: &[f64],
) -> Result<SimTrace> {
    let (n, m) = (ctrl.n(), ctrl.m());
    let steps = check_replay(src)?;
    let pm = &ctrl.predictor;
    let kf = &ctrl.l1.config.kf;
    let mut y = vec![0.0; n + m];
    y[..n].copy_from_slice(x0);
    let mut tr = SimTrace::new(n, m, src.h, src.stride);
    let mut buf = buffers(n + m);
    let mut w = vec![0.0; m];
    let mut fbuf = vec![0.0; m];
    for k in 0..=steps {
        let t = k as f64 * src.h;
        check_finite(&y, t - src.h)?;
        let v = replay_v(src, k);
        if k % src.stride == 0 {
            unc.evaluate(t, &y[..n], &mut fbuf);
            let mut u = ctrl.baseline_input(&y[..n], v);
            for j in 0..m {
                u[j] += y[n + j];
            }
            tr.t.push(t);
            tr.x.push(&y[..n]);
            tr.xn.push(src.xn.row(k / src.stride));
            tr.u.push(&u);
            tr.ua.push(&y[n..]);
            tr.v.push(v);
            tr.r.push(src.r.row(k / src.stride));
            tr.sigma1.push(&vec![0.0; m]);
            tr.sigma2.push(&vec![0.0; n - m]);
            tr.xtilde.push(&vec![0.0; n]);
            tr.f.push(&fbuf);
            tr.kappa.push(f64::NAN);
        }
        if k == steps {
            break;
        }
        rk4(
            &mut y,
            t,
            src.h,
            |tt, s, d| {
                let (x, ur) = s.split_at(n);
                let (dx, dur) = d.split_at_mut(n);
                unc.evaluate(tt, x, &mut w);
                // ur' = −kf (ur + f)
                control_filter_derivative(ur, &w, kf, dur);
                for j in 0..m {
                    w[j] += ur[j];
                }
                plant_derivative(&pm.am, &pm.bv, &pm.b, x, v, &w, dx);
            },
            &mut buf,
        );
    }
    Ok(tr)
}

/// Governor design and run settings for the baseline that ignores `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineOptions {
    pub td: f64,
    pub epsilon: f64,
    pub k_max: usize,
}

impl Default for BaselineOptions {
    fn default() -> Self {
        BaselineOptions { td: 0.005, epsilon: 0.01, k_max: K_MAX }
    }
}

/// Governor on the untightened constraints, no adaptive augmentation;
/// the plant is still driven by the true uncertainty.
pub fn simulate_plain_rg_baseline(
    spec: &ProblemSpec,
    unc: &dyn UncertaintyModel,
    r_signal: Signal<'_>,
    x0: &[f64],
    base: &BaselineOptions,
    opts: &SimOptions,
) -> Result<SimTrace> {
    spec.validate()?;
    let (n, m) = (spec.n(), spec.m());
    let am = &spec.a + &spec.b.matmul(&spec.kx)?;
    let bv = spec.b.matmul(&spec.kv)?;
    let gov = GovernorDesign::for_nominal_loop(
        &am,
        &bv,
        &spec.kx,
        &spec.kv,
        &spec.x,
        &spec.u,
        base.epsilon,
        base.td,
        0.0,
        base.k_max,
    )?;
    simulate_with_governor(spec, &am, &bv, &gov, unc, r_signal, x0, opts, n, m)
}

#[allow(clippy::too_many_arguments)]
fn simulate_with_governor(
    spec: &ProblemSpec,
    am: &Mat,
    bv: &Mat,
    gov: &GovernorDesign,
    unc: &dyn UncertaintyModel,
    r_signal: Signal<'_>,
    x0: &[f64],
    opts: &SimOptions,
    n: usize,
    m: usize,
) -> Result<SimTrace> {
    let steps = opts.steps()?;
    let per_td = Clocks::new(opts.h, gov.td, gov.td)?.per_td;
    let mut gs = GovernorState::new(&spec.v0, x0);
    let mut v = spec.v0.clone();
    // y = [x, xn]
    let mut y = x0.to_vec();
    y.extend_from_slice(x0);
    let mut tr = SimTrace::new(n, m, opts.h, opts.stride);
    let mut buf = buffers(2 * n);
    let mut w = vec![0.0; m];
    for k in 0..=steps {
        let t = k as f64 * opts.h;
        check_finite(&y, t - opts.h)?;
        let r = r_signal(t);
        let mut kappa = f64::NAN;
        if k % per_td == 0 {
            let s = rg_step(gov, &gs, &r)?;
            gs = nominal_model_step(gov, &gs, &s.v);
            v = s.v;
            kappa = s.kappa;
        }
        if k % opts.stride == 0 {
            let mut u = spec.kx.mul_vec(&y[..n]);
            spec.kv.mul_vec_acc(&v, &mut u);
            unc.evaluate(t, &y[..n], &mut w);
            tr.t.push(t);
            tr.x.push(&y[..n]);
            tr.xn.push(&y[n..]);
            tr.u.push(&u);
            tr.ua.push(&vec![0.0; m]);
            tr.v.push(&v);
            tr.r.push(&r);
            tr.sigma1.push(&vec![0.0; m]);
            tr.sigma2.push(&vec![0.0; n - m]);
            tr.xtilde.push(&vec![0.0; n]);
            tr.f.push(&w);
            tr.kappa.push(kappa);
        }
        if k == steps {
            break;
        }
        rk4(
            &mut y,
            t,
            opts.h,
            |tt, s, d| {
                let (x, xn) = s.split_at(n);
                let (dx, dxn) = d.split_at_mut(n);
                unc.evaluate(tt, x, &mut w);
                plant_derivative(am, bv, &spec.b, x, &v, &w, dx);
                am.mul_vec_into(xn, dxn);
                bv.mul_vec_acc(&v, dxn);
            },
            &mut buf,
        );
    }
    Ok(tr)
}

/// Exact ZOH propagation of `ẋ = A x + B u` on the trace grid (an oracle for RK4).
pub fn zoh_propagate(a: &Mat, b: &Mat, x0: &[f64], inputs: &[Vec<f64>], h: f64) -> Result<Vec<Vec<f64>>> {
    let (ad, bd) = zoh_discretize(a, b, h)?;
    let mut out = vec![x0.to_vec()];
    for u in inputs {
        let last = out.last().expect("nonempty");
        let mut next = ad.mul_vec(last);
        bd.mul_vec_acc(u, &mut next);
        out.push(next);
    }
    Ok(out)
}

/// One row of a verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub bound: f64,
    pub empirical: f64,
    pub satisfied: bool,
    /// `bound − empirical`.
    pub margin: f64,
    pub worst_time: f64,
    /// `false` when the bound only holds empirically (practical sample time).
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct VerificationReport {
    pub checks: Vec<BoundCheck>,
}

impl VerificationReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push(&mut self, name: String, bound: f64, worst: (f64, f64), strict: bool, certified: bool) {
        let (empirical, worst_time) = worst;
        let satisfied = if strict { empirical < bound } else { empirical <= bound };
        self.checks.push(BoundCheck {
            name,
            bound,
            empirical,
            satisfied,
            margin: bound - empirical,
            worst_time,
            certified,
        });
    }
}

fn worst<F: Fn(usize) -> f64>(t: &[f64], f: F) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    for (i, &ti) in t.iter().enumerate() {
        let v = f(i);
        if !(v <= best.0) {
            best = (v, ti);
        }
    }
    best
}

/// Interior constraint checks `x(t) ∈ int X`, `u(t) ∈ int U` on every record.
pub fn verify_constraints(tr: &SimTrace, x: &Hyperbox, u: &Hyperbox, certified: bool) -> Result<VerificationReport> {
    if x.dim() != tr.n() || u.dim() != tr.m() {
        return Err(dim_err("constraint boxes vs trace"));
    }
    let mut rep = VerificationReport::default();
    for (label, ch, bx) in [("x", &tr.x, x), ("u", &tr.u, u)] {
        let (c, hw) = (bx.center(), bx.half_width());
        for i in 0..bx.dim() {
            let w = worst(&tr.t, |k| (ch.row(k)[i] - c[i]).abs());
            rep.push(format!("constraint_{label}{}", i + 1), hw[i], w, true, certified);
        }
    }
    Ok(rep)
}

/// Compares an L1-RG trace and its nominal replay with every design bound.
pub fn verify_bounds(tr: &SimTrace, nominal: &SimTrace, ctrl: &L1RGController) -> Result<VerificationReport> {
    tr.same_grid(nominal)?;
    let cert = ctrl.certified;
    let mut rep = verify_constraints(tr, &ctrl.spec.x, &ctrl.spec.u, cert)?;
    let b = &ctrl.l1.bounds;
    let (n, m) = (ctrl.n(), ctrl.m());
    for i in 0..n {
        let w = worst(&tr.t, |k| (tr.x.row(k)[i] - nominal.x.row(k)[i]).abs());
        rep.push(format!("x_minus_xn_{}", i + 1), b.tilde_rho_i[i], w, false, cert);
    }
    let c = &ctrl.spec.c;
    for j in 0..c.rows() {
        let w = worst(&tr.t, |k| {
            c.row(j).iter().enumerate().map(|(i, cj)| cj * (tr.x.row(k)[i] - nominal.x.row(k)[i])).sum::<f64>().abs()
        });
        rep.push(format!("y_minus_yn_{}", j + 1), b.tilde_rho_y_j[j], w, false, cert);
    }
    for j in 0..m {
        let w = worst(&tr.t, |k| (tr.u.row(k)[j] - nominal.u.row(k)[j]).abs());
        rep.push(format!("u_minus_un_{}", j + 1), b.tilde_rho_u_j[j], w, false, cert);
        let w = worst(&tr.t, |k| tr.ua.row(k)[j].abs());
        rep.push(format!("ua_{}", j + 1), b.rho_ua_j[j], w, false, cert);
    }
    // prediction error against γ0 at the run-time sample time
    let g0 = gamma0(ctrl.t_runtime, b.b_f_xa, &ctrl.l1.config.ae, &ctrl.spec.b)?;
    let w = worst(&tr.t, |k| tr.xtilde.row(k).iter().fold(0.0, |a: f64, v| a.max(v.abs())));
    rep.push(String::from("prediction_error"), g0, w, false, cert);
    Ok(rep)
}

/// `max_t ‖a.x(t) − b.x(t)‖∞` per state.
pub fn max_state_gap(a: &SimTrace, b: &SimTrace) -> Result<Vec<f64>> {
    a.same_grid(b)?;
    Ok((0..a.n()).map(|i| (0..a.len()).fold(0.0, |m: f64, k| m.max((a.x.row(k)[i] - b.x.row(k)[i]).abs()))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l1ac::L1Config;
    use crate::l1rg::{design, DesignOptions};
    use crate::uncertainty::{ChannelTerm, SinePolynomial, ZeroUncertainty};

    fn toy(t: f64) -> (L1RGController, SinePolynomial) {
        let spec = ProblemSpec {
            a: Mat::from_diag(&[-1.0]),
            b: Mat::identity(1),
            c: Mat::identity(1),
            kx: Mat::zeros(1, 1),
            kv: Mat::identity(1),
            x: Hyperbox::symmetric(&[2.0]),
            u: Hyperbox::symmetric(&[3.0]),
            x0: Hyperbox::ball(1, 0.1),
            v_bound: 1.0,
            r_bound: 1.0,
            v0: vec![0.0],
        };
        let cfg = L1Config { ae: Mat::from_diag(&[-10.0]), kf: vec![50.0], t, gamma1: 0.01 };
        let f = SinePolynomial::new(vec![ChannelTerm {
            amplitude: 0.1,
            omega: 1.0,
            phase: 0.0,
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
            state: 0,
        }])
        .unwrap();
        let c = design(&spec, &cfg, &DesignOptions { td: 0.01, ..Default::default() }, &f).unwrap();
        (c, f)
    }

    fn step_r(_t: f64) -> Vec<f64> {
        vec![0.9]
    }

    #[test]
    fn rk4_matches_zoh_for_constant_input() {
        let a = Mat::from_rows(&[[0.0, 1.0], [-4.0, -0.4]]).unwrap();
        let b = Mat::from_rows(&[[0.0], [1.0]]).unwrap();
        let h = 1e-3;
        let mut y = vec![1.0, 0.0];
        let mut buf = buffers(2);
        let inputs = vec![vec![0.5]; 1000];
        let exact = zoh_propagate(&a, &b, &y.clone(), &inputs, h).unwrap();
        for u in &inputs {
            rk4(
                &mut y,
                0.0,
                h,
                |_, s, d| {
                    a.mul_vec_into(s, d);
                    b.mul_vec_acc(u, d);
                },
                &mut buf,
            );
        }
        let last = exact.last().unwrap();
        assert!((y[0] - last[0]).abs() < 1e-9 && (y[1] - last[1]).abs() < 1e-9);
    }

    #[test]
    fn zero_uncertainty_collapse() {
        let (c, _) = toy(1e-3);
        let z = ZeroUncertainty { m: 1 };
        let tr = simulate_l1rg(&c, &z, &step_r, &[0.05], &SimOptions::new(2.0, 2e-4)).unwrap();
        let nom = simulate_nominal(&c, &tr, &[0.05]).unwrap();
        assert!(max_state_gap(&tr, &nom).unwrap()[0] < 1e-9);
        assert!(tr.sigma1.max_abs(0) < 1e-9);
        let rf = simulate_reference(&c, &z, &tr, &[0.05]).unwrap();
        assert!(max_state_gap(&rf, &nom).unwrap()[0] < 1e-12);
        assert_eq!(tr.len(), 10001);
    }

    #[test]
    fn toy_theorem_checks_at_certified_t() {
        let (c, f) = toy(1e-4);
        assert!(c.certified);
        let x0 = [0.05];
        let tr = simulate_l1rg(&c, &f, &step_r, &x0, &SimOptions::new(5.0, 1e-4)).unwrap();
        let nom = simulate_nominal(&c, &tr, &x0).unwrap();
        let rf = simulate_reference(&c, &f, &tr, &x0).unwrap();
        let rep = verify_bounds(&tr, &nom, &c).unwrap();
        assert!(rep.all_satisfied(), "{rep:#?}");
        assert!(max_state_gap(&rf, &tr).unwrap()[0] <= c.l1.config.gamma1);
        let lemma = c.l1.g_i[0] * c.l1.bounds.b_f_xr;
        assert!(max_state_gap(&rf, &nom).unwrap()[0] <= lemma);
    }

    #[test]
    fn baseline_without_uncertainty_is_nominal() {
        let (c, _) = toy(1e-3);
        let z = ZeroUncertainty { m: 1 };
        let base = BaselineOptions { td: 0.01, ..Default::default() };
        let tr = simulate_plain_rg_baseline(&c.spec, &z, &step_r, &[0.0], &base, &SimOptions::new(1.0, 1e-3)).unwrap();
        let gap = (0..tr.len()).fold(0.0f64, |a, k| a.max((tr.x.row(k)[0] - tr.xn.row(k)[0]).abs()));
        assert!(gap < 1e-12);
        let rep = verify_constraints(&tr, &c.spec.x, &c.spec.u, true).unwrap();
        assert!(rep.all_satisfied());
    }

    #[test]
    fn divergence_reported() {
        struct Blow;
        impl UncertaintyModel for Blow {
            fn channels(&self) -> usize {
                1
            }
            fn evaluate(&self, _t: f64, x: &[f64], out: &mut [f64]) {
                out[0] = 1e3 * x[0] * x[0] * x[0].abs();
            }
            fn channel_meta(&self, _z: &Hyperbox) -> Vec<crate::uncertainty::LipschitzRecord> {
                Vec::new()
            }
        }
        let (c, _) = toy(1e-3);
        let e = simulate_l1rg(&c, &Blow, &step_r, &[1.5], &SimOptions::new(1.0, 1e-3)).unwrap_err();
        assert!(matches!(e, Error::Divergence { .. } | Error::InvarianceLoss { .. }), "{e:?}");
    }

    #[test]
    fn grid_mismatch() {
        let (c, _) = toy(1e-3);
        let z = ZeroUncertainty { m: 1 };
        let a = simulate_l1rg(&c, &z, &step_r, &[0.0], &SimOptions::new(0.1, 1e-3)).unwrap();
        let b = simulate_l1rg(&c, &z, &step_r, &[0.0], &SimOptions::new(0.2, 1e-3)).unwrap();
        assert!(matches!(verify_bounds(&a, &b, &c), Err(Error::GridMismatch(_))));
    }
}
