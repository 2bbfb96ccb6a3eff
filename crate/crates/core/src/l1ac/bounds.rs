use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{BoundSet, Condition, L1Config, PlantMatrices};
use crate::error::{dim_err, infeasible, Error, Result};
use crate::linsys::{expm, expm_integral, l1_norm, realize_cascade, Cascade, Mat};
use crate::sets::Hyperbox;
use crate::uncertainty::{aggregate_bounds, LipschitzRecord, UncertaintyModel};

/// Strict margin required in the stability inequalities.
pub const STRICT_MARGIN: f64 = 1e-9;
/// Search ceiling for the state bound.
pub const RHO_CEILING: f64 = 1e6;
/// Stop criterion of the box-refinement loop (decrease of the uncertainty bound).
pub const REFINE_TOL: f64 = 1e-6;
/// Grid size for the sample-time constants.
const ALPHA_GRID: usize = 400;

/// Per-output-row L1 norms of every operator the bounds need.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferNorms {
    /// `Gxm = Hxm (I − C)`
    pub gxm: Vec<f64>,
    /// `Hxv`
    pub hxv: Vec<f64>,
    /// `s (sI − Am)⁻¹`
    pub s_resolvent: Vec<f64>,
    /// `C_j(s)` per channel
    pub filter: Vec<f64>,
    /// `C B† (sI − Ae)` per channel
    pub c_bdag: Vec<f64>,
    /// `Hxm C B† (sI − Ae)`
    pub hxm_c_bdag: Vec<f64>,
}

fn rows_max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

/// `‖T G‖` for diagonal `T` with 1 at `i` and `offdiag` elsewhere, given row norms of `G`.
pub fn weighted_norm(rows: &[f64], i: usize, offdiag: f64) -> f64 {
    rows.iter().enumerate().map(|(k, r)| if k == i { *r } else { offdiag * r }).fold(0.0, f64::max)
}

impl TransferNorms {
    pub fn compute(plant: &PlantMatrices, cfg: &L1Config) -> Result<Self> {
        cfg.validate(plant.n(), plant.m())?;
        let (am, b, bv, ae, kf) = (&plant.am, &plant.b, &plant.bv, &cfg.ae, &cfg.kf[..]);
        let norm = |c: Cascade<'_>| -> Result<Vec<f64>> { Ok(l1_norm(&realize_cascade(c)?)?.per_row) };
        Ok(TransferNorms {
            gxm: norm(Cascade::Gxm { am, b, kf })?,
            hxv: norm(Cascade::Hxv { am, bv })?,
            s_resolvent: norm(Cascade::STimesResolvent { am })?,
            filter: norm(Cascade::Filter { kf })?,
            c_bdag: norm(Cascade::CBdagSIminusAe { b, ae, kf })?,
            hxm_c_bdag: norm(Cascade::HxmCBdagSIminusAe { am, b, ae, kf })?,
        })
    }

    pub fn gxm_total(&self) -> f64 {
        rows_max(&self.gxm)
    }

    pub fn hxv_total(&self) -> f64 {
        rows_max(&self.hxv)
    }

    pub fn s_resolvent_total(&self) -> f64 {
        rows_max(&self.s_resolvent)
    }

    pub fn filter_total(&self) -> f64 {
        rows_max(&self.filter)
    }

    pub fn c_bdag_total(&self) -> f64 {
        rows_max(&self.c_bdag)
    }

    pub fn hxm_c_bdag_total(&self) -> f64 {
        rows_max(&self.hxm_c_bdag)
    }
}

/// `Ω(ρ) ∩ cap`.
pub fn capped_ball(n: usize, rho: f64, cap: Option<&Hyperbox>) -> Result<Hyperbox> {
    let ball = Hyperbox::ball(n, rho);
    match cap {
        Some(c) => ball.intersect(c),
        None => Ok(ball),
    }
}

fn capped_box(half: &[f64], cap: Option<&Hyperbox>) -> Result<Hyperbox> {
    let bx = Hyperbox::symmetric(half);
    match cap {
        Some(c) => bx.intersect(c),
        None => Ok(bx),
    }
}

fn meta(unc: &dyn UncertaintyModel, z: &Hyperbox) -> Result<(Vec<LipschitzRecord>, f64, f64)> {
    let recs = unc.channel_meta(z);
    let agg = aggregate_bounds(&recs)?;
    Ok((recs, agg.l_state, agg.bound))
}

/// Outcome of the unscaled state-bound search.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoR {
    pub rho_in: f64,
    pub rho_r: f64,
    pub xr: Hyperbox,
    pub b_f_xr: f64,
    pub l_f_xa: f64,
    pub stability: Condition,
    pub lipschitz: Condition,
}

/// Smallest `ρr` with `‖Gxm‖ b_f(Ω(ρr) ∩ cap) < ρr − ‖Hxv‖ v̄ − ρin`, followed by
/// the check `‖Gxm‖ L_f(Ω(ρr + γ1) ∩ cap) < 1`.
pub fn find_rho_r(
    norms: &TransferNorms,
    unc: &dyn UncertaintyModel,
    v_bound: f64,
    x0: &Hyperbox,
    cap: Option<&Hyperbox>,
    gamma1: f64,
) -> Result<RhoR> {
    if !(v_bound >= 0.0) {
        return Err(Error::Parameter("command bound must be non-negative".into()));
    }
    let n = norms.gxm.len();
    let g = norms.gxm_total();
    let rho_in = norms.s_resolvent_total() * x0.norm_inf();
    let base = norms.hxv_total() * v_bound + rho_in;
    let b_of = |rho: f64| -> Result<f64> { Ok(meta(unc, &capped_ball(n, rho, cap)?)?.2) };
    let fail = || {
        infeasible(
            "no rho_r satisfies ||Gxm|| b_f(Xr) < rho_r - ||Hxv|| v - rho_in",
            "increase the filter bandwidth or reduce the command bound",
        )
    };
    // least fixed point of ρ = base + g·b(ρ), approached monotonically from below
    let mut rho = base;
    let mut converged = false;
    for _ in 0..1_000_000 {
        let next = base + g * b_of(rho)?;
        if !(next <= RHO_CEILING) {
            return Err(fail());
        }
        if next - rho <= 1e-14 * next.max(1.0) {
            rho = next;
            converged = true;
            break;
        }
        rho = next;
    }
    if !converged {
        return Err(fail());
    }
    let mut cand = rho + 2.0 * STRICT_MARGIN * rho.max(1.0);
    loop {
        let slack = cand - base - g * b_of(cand)?;
        if slack > STRICT_MARGIN {
            break;
        }
        cand *= 1.0 + 1e-4;
        if cand > RHO_CEILING {
            return Err(fail());
        }
    }
    let rho_r = cand;
    let xr = capped_ball(n, rho_r, cap)?;
    let (_, _, b_f_xr) = meta(unc, &xr)?;
    let (_, l_f_xa, _) = meta(unc, &capped_ball(n, rho_r + gamma1, cap)?)?;
    let stability = Condition::strict("gxm_bf_xr_lt_rho_r_margin", g * b_f_xr, rho_r - base);
    let lipschitz = Condition::strict("gxm_lf_xa_lt_1", g * l_f_xa, 1.0);
    if !lipschitz.holds {
        return Err(infeasible(
            format!("||Gxm|| L_f(Xa) = {:.4} is not below 1", g * l_f_xa),
            "increase the filter bandwidth",
        ));
    }
    Ok(RhoR { rho_in, rho_r, xr, b_f_xr, l_f_xa, stability, lipschitz })
}

/// Per-state bounds from the diagonal scaling technique.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledBounds {
    pub rho_r_i: Vec<f64>,
    pub rho_i: Vec<f64>,
    pub tilde_rho_i: Vec<f64>,
    /// `‖Tⁱ Gxm‖` per state
    pub g_i: Vec<f64>,
    pub b_f_xr: f64,
    pub xr: Hyperbox,
    pub xa: Hyperbox,
    pub iterations: usize,
    pub conditions: Vec<Condition>,
}

/// Separate bounds for each state (with `offdiag = 1` this is the unscaled bound).
#[allow(clippy::too_many_arguments)]
pub fn scaled_state_bounds(
    norms: &TransferNorms,
    unc: &dyn UncertaintyModel,
    v_bound: f64,
    x0: &Hyperbox,
    cap: Option<&Hyperbox>,
    gamma1: f64,
    offdiag: f64,
    base: &RhoR,
) -> Result<ScaledBounds> {
    if !(offdiag > 0.0 && offdiag <= 1.0) {
        return Err(Error::Parameter("scaling weight must lie in (0, 1]".into()));
    }
    let n = norms.gxm.len();
    let x0max = x0.norm_inf();
    let g_i: Vec<f64> = (0..n).map(|i| weighted_norm(&norms.gxm, i, offdiag)).collect();
    let h_i: Vec<f64> = (0..n).map(|i| weighted_norm(&norms.hxv, i, offdiag)).collect();
    let in_i: Vec<f64> = (0..n).map(|i| weighted_norm(&norms.s_resolvent, i, offdiag) * x0max).collect();
    let mut b = base.b_f_xr;
    let mut rho_r_i = vec![base.rho_r; n];
    let mut xr: Hyperbox;
    let mut iterations = 0;
    loop {
        iterations += 1;
        for i in 0..n {
            let r = h_i[i] * v_bound + in_i[i] + g_i[i] * b + STRICT_MARGIN;
            // never looser than the unscaled bound
            rho_r_i[i] = r.min(base.rho_r);
        }
        xr = capped_box(&rho_r_i, cap)?;
        let b_old = b;
        b = meta(unc, &xr)?.2;
        if b_old - b <= REFINE_TOL || iterations >= 200 {
            break;
        }
    }
    let conditions = (0..n)
        .map(|i| {
            Condition::strict(
                &format!("scaled_stability_state_{}", i + 1),
                g_i[i] * b,
                rho_r_i[i] - h_i[i] * v_bound - in_i[i],
            )
        })
        .collect();
    let rho_i: Vec<f64> = rho_r_i.iter().map(|r| r + gamma1).collect();
    let tilde_rho_i: Vec<f64> = g_i.iter().map(|g| g * b + gamma1).collect();
    let xa = capped_box(&rho_i, cap)?;
    Ok(ScaledBounds { rho_r_i, rho_i, tilde_rho_i, g_i, b_f_xr: b, xr, xa, iterations, conditions })
}

/// Largest `‖v‖∞` for which the scaled stability condition of `state` can hold
/// with the bound box pinned at `cap`:
/// `(cap_i − ‖Tⁱ s(sI−Am)⁻¹‖ ‖x0‖ − ‖Tⁱ Gxm‖ b_f(cap)) / ‖Tⁱ Hxv‖`.
/// A negative value means no command is admissible.
pub fn admissible_command_bound(
    norms: &TransferNorms,
    unc: &dyn UncertaintyModel,
    x0: &Hyperbox,
    cap: &Hyperbox,
    offdiag: f64,
    state: usize,
) -> Result<f64> {
    let n = norms.gxm.len();
    if state >= n || cap.dim() != n || x0.dim() != n {
        return Err(dim_err("state index or box dimension"));
    }
    let h = weighted_norm(&norms.hxv, state, offdiag);
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("state {} does not depend on the command", state + 1)));
    }
    let b = meta(unc, cap)?.2;
    let g = weighted_norm(&norms.gxm, state, offdiag);
    let init = weighted_norm(&norms.s_resolvent, state, offdiag) * x0.norm_inf();
    Ok((cap.max_abs()[state] - init - g * b) / h)
}

/// `ᾱ0, ᾱ1, ᾱ2` of the piecewise-constant adaptive law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaConstants {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

/// `Φ(T) = ∫₀ᵀ e^{Ae τ} dτ` and `Φ⁻¹(T) e^{Ae T}`.
pub fn phi_inverse_exp(ae: &Mat, t: f64) -> Result<(Mat, Mat)> {
    let phi = expm_integral(ae, t)?;
    let e = expm(ae, t)?;
    let m = phi
        .solve(&e)
        .map_err(|_| Error::Numeric(format!("Phi(T) is singular at T = {t:e}; use a larger sample time")))?;
    Ok((phi, m))
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let mut s = f[0] + f[n];
    for (k, v) in f.iter().enumerate().take(n).skip(1) {
        s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Constants on a grid of `ALPHA_GRID + 1` points over `[0, T]`.
pub fn alpha_constants(ae: &Mat, b: &Mat, t: f64) -> Result<AlphaConstants> {
    alpha_constants_on_grid(ae, b, t, ALPHA_GRID)
}

/// As [`alpha_constants`] with an explicit (even) number of intervals.
pub fn alpha_constants_on_grid(ae: &Mat, b: &Mat, t: f64, intervals: usize) -> Result<AlphaConstants> {
    if !(t > 0.0) {
        return Err(Error::Parameter("sample time must be positive".into()));
    }
    let nint = intervals + intervals % 2;
    let h = t / nint as f64;
    let (_, m) = phi_inverse_exp(ae, t)?;
    let step = expm(ae, h)?;
    let mut e = Mat::identity(ae.rows());
    let mut fb = Vec::with_capacity(nint + 1);
    let mut fm = Vec::with_capacity(nint + 1);
    let mut a1: f64 = 0.0;
    for k in 0..=nint {
        if k > 0 {
            e = &step * &e;
        }
        a1 = a1.max(e.norm_inf());
        fb.push((&e * b).norm_inf());
        fm.push((&e * &m).norm_inf());
    }
    let a0 = simpson(&fb, h);
    // cumulative integral of a non-negative integrand; max over even nodes
    let mut a2: f64 = 0.0;
    for k in (2..=nint).step_by(2) {
        a2 = a2.max(simpson(&fm[..=k], h));
    }
    Ok(AlphaConstants { a0, a1, a2 })
}

/// `γ0(T) = b_f(Xa) ᾱ0 (ᾱ1 + ᾱ2 + 1)`.
pub fn gamma0(t: f64, b_f_xa: f64, ae: &Mat, b: &Mat) -> Result<f64> {
    let a = alpha_constants(ae, b, t)?;
    Ok(b_f_xa * a.a0 * (a.a1 + a.a2 + 1.0))
}

/// `γ2 = ‖C‖ L_f(Xa) γ1 + ‖C B†(sI − Ae)‖ γ0`.
pub fn gamma2_of(norms: &TransferNorms, l_f_xa: f64, gamma1: f64, gamma0_val: f64) -> f64 {
    norms.filter_total() * l_f_xa * gamma1 + norms.c_bdag_total() * gamma0_val
}

/// Left side of the sample-time condition; it must stay below `γ1`.
pub fn sample_time_lhs(norms: &TransferNorms, l_f_xa: f64, b_f_xa: f64, ae: &Mat, b: &Mat, t: f64) -> Result<f64> {
    let denom = 1.0 - norms.gxm_total() * l_f_xa;
    if !(denom > 0.0) {
        return Err(infeasible("||Gxm|| L_f(Xa) < 1 violated", "increase the filter bandwidth"));
    }
    Ok(norms.hxm_c_bdag_total() * gamma0(t, b_f_xa, ae, b)? / denom)
}

/// Largest `T ∈ {1e-2, 1e-3, …, 1e-12}` satisfying the sample-time condition.
pub fn choose_sample_time(
    norms: &TransferNorms,
    l_f_xa: f64,
    b_f_xa: f64,
    gamma1: f64,
    ae: &Mat,
    b: &Mat,
) -> Result<f64> {
    let mut t = 1e-2;
    while t >= 1e-12 * 0.999 {
        if sample_time_lhs(norms, l_f_xa, b_f_xa, ae, b, t)? < gamma1 {
            return Ok(t);
        }
        t /= 10.0;
    }
    Err(infeasible(
        "no sample time down to 1e-12 satisfies the sample-time condition",
        "increase gamma1 or the filter bandwidth",
    ))
}

/// Per-input and per-output bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct InputBounds {
    pub rho_ua_j: Vec<f64>,
    pub tilde_rho_u_j: Vec<f64>,
    pub tilde_rho_y_j: Vec<f64>,
}

/// `ρ_ua^j = ‖C_j‖ b_fj(Xr) + γ2`, `ρ̃_u^j = ρ_ua^j + Σ|Kx[j,i]| ρ̃ⁱ`, `ρ̃_y^j = Σ|C[j,i]| ρ̃ⁱ`.
pub fn input_bounds(
    filter_norms: &[f64],
    records_xr: &[LipschitzRecord],
    kx: &Mat,
    c_out: &Mat,
    tilde_rho_i: &[f64],
    gamma2: f64,
) -> InputBounds {
    let rho_ua_j: Vec<f64> = filter_norms.iter().zip(records_xr).map(|(c, r)| c * r.bound + gamma2).collect();
    let weigh = |m: &Mat, j: usize| -> f64 { m.row(j).iter().zip(tilde_rho_i).map(|(k, r)| k.abs() * r).sum() };
    let tilde_rho_u_j = (0..kx.rows()).map(|j| rho_ua_j[j] + weigh(kx, j)).collect();
    let tilde_rho_y_j = (0..c_out.rows()).map(|j| weigh(c_out, j)).collect();
    InputBounds { rho_ua_j, tilde_rho_u_j, tilde_rho_y_j }
}

/// Inputs of the full bound pipeline.
#[derive(Clone, Debug)]
pub struct BoundProblem<'a> {
    pub plant: &'a PlantMatrices,
    pub cfg: &'a L1Config,
    pub kx: &'a Mat,
    pub c_out: &'a Mat,
    pub v_bound: f64,
    pub x0: &'a Hyperbox,
    pub cap: Option<&'a Hyperbox>,
    pub offdiag: f64,
}

/// Everything the bound pipeline computes.
#[derive(Clone, Debug, PartialEq)]
pub struct L1Design {
    pub config: L1Config,
    pub norms: TransferNorms,
    pub bounds: BoundSet,
    pub g_i: Vec<f64>,
    pub alpha: AlphaConstants,
    pub gamma0: f64,
    /// `T` used for `γ0` in the bounds.
    pub t_design: f64,
    /// Largest decade `T` meeting the sample-time condition.
    pub t_certified: f64,
    pub conditions: Vec<Condition>,
    pub refinement_iterations: usize,
}

impl L1Design {
    /// Runtime sample times at or below this keep every bound certified.
    pub fn t_certified_runtime(&self) -> f64 {
        let eq42_holds = self.conditions.iter().any(|c| c.name == "sample_time_at_design_t" && c.holds);
        if eq42_holds {
            self.t_design
        } else {
            self.t_certified.min(self.t_design)
        }
    }
}

/// Bound pipeline with precomputed transfer norms.
pub fn design_bounds_with(p: &BoundProblem<'_>, norms: TransferNorms, unc: &dyn UncertaintyModel) -> Result<L1Design> {
    let cfg = p.cfg;
    let rr = find_rho_r(&norms, unc, p.v_bound, p.x0, p.cap, cfg.gamma1)?;
    let sc = scaled_state_bounds(&norms, unc, p.v_bound, p.x0, p.cap, cfg.gamma1, p.offdiag, &rr)?;
    let (recs_xr, _, b_f_xr) = meta(unc, &sc.xr)?;
    let (_, l_f_xa, b_f_xa) = meta(unc, &sc.xa)?;
    let g = norms.gxm_total();
    let lip = Condition::strict("gxm_lf_xa_lt_1_scaled", g * l_f_xa, 1.0);
    if !lip.holds {
        return Err(infeasible("||Gxm|| L_f(Xa) < 1 violated on the scaled set", "increase the filter bandwidth"));
    }
    let alpha = alpha_constants(&cfg.ae, &p.plant.b, cfg.t)?;
    let gamma0_val = b_f_xa * alpha.a0 * (alpha.a1 + alpha.a2 + 1.0);
    let gamma2 = gamma2_of(&norms, l_f_xa, cfg.gamma1, gamma0_val);
    let ib = input_bounds(&norms.filter, &recs_xr, p.kx, p.c_out, &sc.tilde_rho_i, gamma2);
    let lhs42 = sample_time_lhs(&norms, l_f_xa, b_f_xa, &cfg.ae, &p.plant.b, cfg.t)?;
    let eq42 = Condition::strict("sample_time_at_design_t", lhs42, cfg.gamma1);
    let t_certified = choose_sample_time(&norms, l_f_xa, b_f_xa, cfg.gamma1, &cfg.ae, &p.plant.b)?;

    let mut conditions = vec![rr.stability.clone(), rr.lipschitz.clone()];
    conditions.extend(sc.conditions.iter().cloned());
    conditions.push(lip);
    conditions.push(eq42);

    let bounds = BoundSet {
        rho_in: rr.rho_in,
        rho_r: rr.rho_r,
        rho: rr.rho_r + cfg.gamma1,
        rho_r_i: sc.rho_r_i.clone(),
        rho_i: sc.rho_i.clone(),
        tilde_rho_i: sc.tilde_rho_i.clone(),
        rho_ur: norms.filter_total() * b_f_xr,
        gamma2,
        rho_ua_j: ib.rho_ua_j,
        tilde_rho_u_j: ib.tilde_rho_u_j,
        tilde_rho_y_j: ib.tilde_rho_y_j,
        b_f_xr,
        l_f_xa,
        b_f_xa,
        xr: sc.xr.clone(),
        xa: sc.xa.clone(),
    };
    Ok(L1Design {
        config: cfg.clone(),
        norms,
        bounds,
        g_i: sc.g_i,
        alpha,
        gamma0: gamma0_val,
        t_design: cfg.t,
        t_certified,
        conditions,
        refinement_iterations: sc.iterations,
    })
}

/// Full bound pipeline (transfer norms, state bounds, input bounds, sample time).
pub fn design_bounds(p: &BoundProblem<'_>, unc: &dyn UncertaintyModel) -> Result<L1Design> {
    let norms = TransferNorms::compute(p.plant, p.cfg)?;
    design_bounds_with(p, norms, unc)
}
