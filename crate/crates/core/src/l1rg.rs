//! Integrated design: L1 bounds, constraint tightening, governor on the
//! tightened nominal problem, and the composite run-time law
//! `u = Kx x + Kv v + ua`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, infeasible, Error, Result};
use crate::l1ac::{
    design_bounds_with, AdaptiveLaw, AdaptiveState, BoundProblem, L1Config, L1Design, PlantMatrices, PredictorMatrices,
    TransferNorms,
};
use crate::linsys::Mat;
use crate::refgov::{
    inter_sample_margin, nominal_model_step, rg_step, tighten_for_sampling, GovernorDesign, GovernorState, RgStep,
    K_MAX,
};
use crate::sets::Hyperbox;
use crate::uncertainty::UncertaintyModel;

/// The constrained uncertain plant `ẋ = A x + B(u + f(t, x))`, `y = C x`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub kx: Mat,
    pub kv: Mat,
    pub x: Hyperbox,
    pub u: Hyperbox,
    pub x0: Hyperbox,
    /// Bound on `‖v‖∞` used by the L1 bounds.
    pub v_bound: f64,
    /// Bound on `‖r‖∞`; the governor output stays in `Ω(r_bound)`.
    pub r_bound: f64,
    pub v0: Vec<f64>,
}

impl ProblemSpec {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.b.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n(), self.m());
        if !self.a.is_square()
            || self.b.rows() != n
            || self.c.cols() != n
            || self.kx.shape() != (m, n)
            || self.kv.shape() != (m, m)
            || self.x.dim() != n
            || self.x0.dim() != n
            || self.u.dim() != m
            || self.v0.len() != m
        {
            return Err(dim_err("problem specification"));
        }
        if !self.x.contains_interior(&vec![0.0; n]) {
            return Err(Error::Parameter("state constraints must contain 0 in their interior".into()));
        }
        if !(self.v_bound >= 0.0 && self.r_bound >= 0.0) {
            return Err(Error::Parameter("command bounds must be non-negative".into()));
        }
        Ok(())
    }

    pub fn f16() -> Self {
        use crate::f16;
        ProblemSpec {
            a: f16::a(),
            b: f16::b(),
            c: f16::c(),
            kx: f16::kx(),
            kv: f16::kv(),
            x: f16::state_constraints(),
            u: f16::input_constraints(),
            x0: f16::initial_set(),
            v_bound: f16::V_BOUND,
            r_bound: f16::R_BOUND,
            v0: vec![0.0; 2],
        }
    }
}

/// Governor and scaling options.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignOptions {
    pub td: f64,
    pub epsilon: f64,
    /// Skip the inter-sample tightening (`X̂n = Xn`, `Ûn = Un`).
    pub practical: bool,
    /// Off-diagonal weight of the scaling matrices; 1 disables scaling.
    pub offdiag: f64,
    pub k_max: usize,
    /// Sample time of the adaptive law at run time; `None` uses the design `T`.
    pub t_runtime: Option<f64>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions { td: 0.005, epsilon: 0.01, practical: true, offdiag: 1.0, k_max: K_MAX, t_runtime: None }
    }
}

/// A complete L1-RG design.
#[derive(Clone, Debug, PartialEq)]
pub struct L1RGController {
    pub spec: ProblemSpec,
    pub plant: PlantMatrices,
    pub l1: L1Design,
    pub gov: GovernorDesign,
    pub tilde_x: Hyperbox,
    pub tilde_u: Hyperbox,
    pub xn: Hyperbox,
    pub un: Hyperbox,
    pub xn_hat: Hyperbox,
    pub un_hat: Hyperbox,
    /// `ν(Td)`, computed even in practical mode.
    pub nu: f64,
    pub practical: bool,
    pub law: AdaptiveLaw,
    pub predictor: PredictorMatrices,
    /// Adaptive sample time at run time, a divisor of `Td`.
    pub t_runtime: f64,
    /// `true` when `t_runtime` satisfies the sample-time condition.
    pub certified: bool,
}

/// Largest `Td / k` not exceeding `t`.
pub fn align_sample_time(t: f64, td: f64) -> Result<f64> {
    if !(t > 0.0 && td > 0.0) {
        return Err(Error::Parameter("sample times must be positive".into()));
    }
    let k = libm::ceil(td / t * (1.0 - 1e-12)).max(1.0);
    Ok(td / k)
}

/// Runs the full design with precomputed transfer norms.
pub fn design_with_norms(
    spec: &ProblemSpec,
    l1cfg: &L1Config,
    opts: &DesignOptions,
    unc: &dyn UncertaintyModel,
    norms: TransferNorms,
) -> Result<L1RGController> {
    spec.validate()?;
    let (n, m) = (spec.n(), spec.m());
    l1cfg.validate(n, m)?;
    if unc.channels() != m {
        return Err(dim_err("uncertainty channels vs inputs"));
    }
    let plant = PlantMatrices::from_gains(&spec.a, &spec.b, &spec.kx, &spec.kv)?;
    let problem = BoundProblem {
        plant: &plant,
        cfg: l1cfg,
        kx: &spec.kx,
        c_out: &spec.c,
        v_bound: spec.v_bound,
        x0: &spec.x0,
        cap: Some(&spec.x),
        offdiag: opts.offdiag,
    };
    let l1 = design_bounds_with(&problem, norms, unc)?;

    let tilde_x = Hyperbox::symmetric(&l1.bounds.tilde_rho_i);
    let tilde_u = Hyperbox::symmetric(&l1.bounds.tilde_rho_u_j);
    let xn = spec.x.pontryagin_diff(&tilde_x)?;
    let un = spec.u.pontryagin_diff(&tilde_u)?;
    if !xn.contains_interior(&vec![0.0; n]) {
        return Err(infeasible("Assumption 2 violated: X̂n empty", "increase the filter bandwidth or reduce gamma1"));
    }
    if !un.contains_interior(&vec![0.0; m]) {
        return Err(infeasible("Assumption 2 violated: Ûn empty", "increase the filter bandwidth or reduce gamma1"));
    }
    let v_box = Hyperbox::ball(m, spec.r_bound);
    let nu = inter_sample_margin(&plant.am, &plant.bv, &xn, &v_box, opts.td)?;
    let (xn_hat, un_hat) = if opts.practical {
        (xn.clone(), un.clone())
    } else {
        tighten_for_sampling(&xn, &un, &spec.kx, nu)
            .map_err(|_| infeasible("Assumption 2 violated: sampling margin empties X̂n or Ûn", "reduce Td"))?
    };
    let gov = GovernorDesign::for_nominal_loop(
        &plant.am,
        &plant.bv,
        &spec.kx,
        &spec.kv,
        &xn_hat,
        &un_hat,
        opts.epsilon,
        opts.td,
        if opts.practical { 0.0 } else { nu },
        opts.k_max,
    )?;
    for x0 in spec.x0.vertices() {
        if !gov.admits(&spec.v0, &x0, 0.0) {
            return Err(infeasible(
                format!("Assumption 2 violated: (v0, x0) = ({:?}, {:?}) outside the admissible set", spec.v0, x0),
                "shrink the initial set or loosen the constraints",
            ));
        }
    }

    let t_runtime = align_sample_time(opts.t_runtime.unwrap_or(l1cfg.t), opts.td)?;
    let certified = t_runtime <= l1.t_certified_runtime() * (1.0 + 1e-9);
    let law = AdaptiveLaw::new(&l1cfg.ae, &spec.b, t_runtime)?;
    let predictor = PredictorMatrices {
        am: plant.am.clone(),
        bv: plant.bv.clone(),
        b: spec.b.clone(),
        b_perp: law.b_perp.clone(),
        ae: l1cfg.ae.clone(),
    };
    Ok(L1RGController {
        spec: spec.clone(),
        plant,
        l1,
        gov,
        tilde_x,
        tilde_u,
        xn,
        un,
        xn_hat,
        un_hat,
        nu,
        practical: opts.practical,
        law,
        predictor,
        t_runtime,
        certified,
    })
}

/// Algorithm-level entry point: bounds, tightening, governor, checks.
pub fn design(
    spec: &ProblemSpec,
    l1cfg: &L1Config,
    opts: &DesignOptions,
    unc: &dyn UncertaintyModel,
) -> Result<L1RGController> {
    let plant = PlantMatrices::from_gains(&spec.a, &spec.b, &spec.kx, &spec.kv)?;
    l1cfg.validate(spec.n(), spec.m())?;
    let norms = TransferNorms::compute(&plant, l1cfg)?;
    design_with_norms(spec, l1cfg, opts, unc, norms)
}

impl L1RGController {
    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn m(&self) -> usize {
        self.spec.m()
    }

    /// Baseline law `Kx x + Kv v`.
    pub fn baseline_input(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let mut u = self.spec.kx.mul_vec(x);
        self.spec.kv.mul_vec_acc(v, &mut u);
        u
    }

    pub fn initial_runtime(&self, x0: &[f64]) -> RuntimeState {
        RuntimeState {
            adaptive: AdaptiveState::new(x0, self.m()),
            gov: GovernorState::new(&self.spec.v0, x0),
            v: self.spec.v0.clone(),
        }
    }
}

/// Integration grid with event periods in whole steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Clocks {
    pub h: f64,
    pub per_t: usize,
    pub per_td: usize,
}

impl Clocks {
    pub fn new(h: f64, t: f64, td: f64) -> Result<Self> {
        let per = |p: f64| -> Result<usize> {
            let k = libm::round(p / h);
            if !(h > 0.0) || k < 1.0 || (k * h - p).abs() > 1e-9 * p {
                return Err(Error::Parameter(format!("step {h} does not divide period {p}")));
            }
            Ok(k as usize)
        };
        let c = Clocks { h, per_t: per(t)?, per_td: per(td)? };
        if !c.per_td.is_multiple_of(c.per_t) {
            return Err(Error::Parameter("T must divide Td".into()));
        }
        Ok(c)
    }
}

/// Single-owner run-time state.
#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeState {
    pub adaptive: AdaptiveState,
    pub gov: GovernorState,
    /// Command currently applied.
    pub v: Vec<f64>,
}

/// What happened during a run-time step.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Diagnostics {
    pub governor: Option<RgStep>,
    pub adaptive_updated: bool,
}

/// Event processing at grid index `k` followed by the composite control law.
/// Continuous propagation of `x̂` and `ua` is left to the integrator.
pub fn runtime_step(
    ctrl: &L1RGController,
    clocks: &Clocks,
    k: usize,
    x_meas: &[f64],
    r: &[f64],
    rt: &mut RuntimeState,
) -> Result<(Vec<f64>, Diagnostics)> {
    let mut diag = Diagnostics::default();
    if k.is_multiple_of(clocks.per_td) {
        let step = rg_step(&ctrl.gov, &rt.gov, r)?;
        rt.gov = nominal_model_step(&ctrl.gov, &rt.gov, &step.v);
        rt.v = step.v.clone();
        diag.governor = Some(step);
    }
    if k.is_multiple_of(clocks.per_t) {
        let xt: Vec<f64> = rt.adaptive.xhat.iter().zip(x_meas).map(|(a, b)| a - b).collect();
        let (s1, s2) = ctrl.law.update(&xt);
        rt.adaptive.sigma1 = s1;
        rt.adaptive.sigma2 = s2;
        rt.adaptive.last_update = k as f64 * clocks.h;
        diag.adaptive_updated = true;
    }
    let mut u = ctrl.baseline_input(x_meas, &rt.v);
    for (u, a) in u.iter_mut().zip(&rt.adaptive.ua) {
        *u += a;
    }
    Ok((u, diag))
}
