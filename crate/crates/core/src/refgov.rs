//! Reference governor for the nominal closed loop `ẋn = Am xn + Bv v`.
//!
//! The governor works on the Td-sampled model and keeps `(v, xn)` inside
//! the maximal output admissible set intersected with the ε-tightened
//! steady-state set. Polytope coordinates are `z = (v, xn)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linsys::{expm, is_schur, zoh_discretize, Mat};
use crate::sets::{is_redundant, Hyperbox, Polytope};

/// Default bound on the prediction horizon explored for finite determination.
pub const K_MAX: usize = 500;
/// Admissible numerical excursion outside the set before the governor gives up.
pub const INVARIANCE_TOL: f64 = 1e-7;

/// Immutable governor data.
#[derive(Clone, Debug, PartialEq)]
pub struct GovernorDesign {
    pub ahat: Mat,
    pub bhat: Mat,
    pub cc: Mat,
    pub dc: Mat,
    pub yn: Hyperbox,
    pub epsilon: f64,
    pub td: f64,
    pub nu: f64,
    pub oinf: Polytope,
    pub k_star: usize,
}

/// Run-time state: last command and the internal nominal model.
#[derive(Clone, Debug, PartialEq)]
pub struct GovernorState {
    pub v_prev: Vec<f64>,
    pub xn: Vec<f64>,
}

impl GovernorState {
    pub fn new(v0: &[f64], x0: &[f64]) -> Self {
        GovernorState { v_prev: v0.to_vec(), xn: x0.to_vec() }
    }

    /// `(v_prev, xn)` stacked in polytope coordinates.
    pub fn stacked(&self) -> Vec<f64> {
        let mut z = self.v_prev.clone();
        z.extend_from_slice(&self.xn);
        z
    }
}

/// Result of one governor update.
#[derive(Clone, Debug, PartialEq)]
pub struct RgStep {
    pub kappa: f64,
    pub v: Vec<f64>,
    /// Row of the polytope that limited κ, if any.
    pub binding_row: Option<usize>,
}

impl GovernorDesign {
    /// Governor for `ẋn = Am xn + Bv v` with outputs `[xn; Kx xn + Kv v]`
    /// constrained to `Xn_hat × Un_hat`.
    #[allow(clippy::too_many_arguments)]
    pub fn for_nominal_loop(
        am: &Mat,
        bv: &Mat,
        kx: &Mat,
        kv: &Mat,
        xn_hat: &Hyperbox,
        un_hat: &Hyperbox,
        epsilon: f64,
        td: f64,
        nu: f64,
        k_max: usize,
    ) -> Result<Self> {
        let n = am.rows();
        let m = bv.cols();
        if kx.shape() != (m, n) || kv.shape() != (m, m) || xn_hat.dim() != n || un_hat.dim() != m {
            return Err(dim_err("governor gains and boxes"));
        }
        let (ahat, bhat) = zoh_discretize(am, bv, td)?;
        let cc = Mat::identity(n).vstack(kx)?;
        let dc = Mat::zeros(n, m).vstack(kv)?;
        let mut lower = xn_hat.lower.clone();
        lower.extend_from_slice(&un_hat.lower);
        let mut upper = xn_hat.upper.clone();
        upper.extend_from_slice(&un_hat.upper);
        let yn = Hyperbox::new(lower, upper)?;
        Self::from_discrete(ahat, bhat, cc, dc, yn, epsilon, td, nu, k_max)
    }

    /// Governor for an already discretized model with output `Cc xn + Dc v ∈ Yn`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_discrete(
        ahat: Mat,
        bhat: Mat,
        cc: Mat,
        dc: Mat,
        yn: Hyperbox,
        epsilon: f64,
        td: f64,
        nu: f64,
        k_max: usize,
    ) -> Result<Self> {
        let (oinf, k_star) = build_tilde_o_infinity(&ahat, &bhat, &cc, &dc, &yn, epsilon, k_max)?;
        Ok(GovernorDesign { ahat, bhat, cc, dc, yn, epsilon, td, nu, oinf, k_star })
    }

    pub fn n(&self) -> usize {
        self.ahat.rows()
    }

    pub fn m(&self) -> usize {
        self.bhat.cols()
    }

    /// Membership of `(v, xn)` in the admissible set.
    pub fn admits(&self, v: &[f64], xn: &[f64], tol: f64) -> bool {
        let mut z = v.to_vec();
        z.extend_from_slice(xn);
        self.oinf.contains(&z, tol)
    }

    /// Steady-state output gain `Dc + Cc (I − Â)⁻¹ B̂`.
    pub fn steady_state_gain(&self) -> Result<Mat> {
        steady_gain(&self.ahat, &self.bhat, &self.cc, &self.dc)
    }
}

fn steady_gain(ahat: &Mat, bhat: &Mat, cc: &Mat, dc: &Mat) -> Result<Mat> {
    let n = ahat.rows();
    let x = (&Mat::identity(n) - ahat).solve(bhat)?;
    Ok(dc + &cc.matmul(&x)?)
}

/// `true` iff `[C; CA; …; CA^{n−1}]` has full column rank.
pub fn is_observable(a: &Mat, c: &Mat) -> Result<bool> {
    let n = a.rows();
    if !a.is_square() || c.cols() != n {
        return Err(dim_err("observability pair"));
    }
    let mut o = c.clone();
    let mut blk = c.clone();
    for _ in 1..n {
        blk = blk.matmul(a)?;
        o = o.vstack(&blk)?;
    }
    Ok(o.rank(1e-10) == n)
}

fn push_box_rows(p: &mut Polytope, cv: &Mat, cx: &Mat, yn: &Hyperbox, scale: f64, only_new: bool) -> Result<bool> {
    let m = cv.cols();
    let n = cx.cols();
    let mut normal = vec![0.0; m + n];
    let mut added = false;
    // entries this small relative to the block are rounding residue
    let floor = 1e-12 * cv.max_abs().max(cx.max_abs());
    for i in 0..yn.dim() {
        for (sign, off) in [(1.0, scale * yn.upper[i]), (-1.0, -scale * yn.lower[i])] {
            for j in 0..m {
                normal[j] = sign * cv[(i, j)];
            }
            for j in 0..n {
                normal[m + j] = sign * cx[(i, j)];
            }
            if normal.iter().all(|v| v.abs() <= floor) {
                if off < 0.0 {
                    return Err(Error::EmptySet("constant output outside its box".into()));
                }
                continue;
            }
            if only_new && is_redundant(&normal, off, p)? {
                continue;
            }
            p.push(&normal, off)?;
            added = true;
        }
    }
    Ok(added)
}

/// Builds `O∞ ∩ Oε` over `z = (v, xn)` and returns it with the determination index.
pub fn build_tilde_o_infinity(
    ahat: &Mat,
    bhat: &Mat,
    cc: &Mat,
    dc: &Mat,
    yn: &Hyperbox,
    epsilon: f64,
    k_max: usize,
) -> Result<(Polytope, usize)> {
    let n = ahat.rows();
    let m = bhat.cols();
    let p = cc.rows();
    if !ahat.is_square() || bhat.rows() != n || cc.cols() != n || dc.shape() != (p, m) || yn.dim() != p {
        return Err(dim_err("governor model"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter("epsilon must lie in (0, 1)".into()));
    }
    if !is_schur(ahat)? {
        return Err(Error::Stability("discretized nominal loop is not Schur".into()));
    }
    if !is_observable(ahat, cc)? {
        return Err(Error::Parameter("(Â, Cc) is not observable".into()));
    }
    if !yn.contains_interior(&vec![0.0; p]) {
        return Err(Error::EmptySet("output constraint box must contain 0 in its interior".into()));
    }

    let mut poly = Polytope::new(m + n);
    let hss = steady_gain(ahat, bhat, cc, dc)?;
    push_box_rows(&mut poly, &hss, &Mat::zeros(p, n), yn, 1.0 - epsilon, false)?;
    // k = 0
    push_box_rows(&mut poly, dc, cc, yn, 1.0, false)?;

    // ŷ(k) = Cc Âᵏ xn + (Cc Σ_{j<k} Âʲ B̂ + Dc) v
    let mut ak = Mat::identity(n);
    let mut sum = Mat::zeros(n, m);
    for k in 1..=k_max {
        sum = &sum + &ak.matmul(bhat)?;
        ak = ak.matmul(ahat)?;
        let cx = cc.matmul(&ak)?;
        let cv = dc + &cc.matmul(&sum)?;
        if !push_box_rows(&mut poly, &cv, &cx, yn, 1.0, true)? {
            return Ok((poly, k - 1));
        }
    }
    Err(Error::Determination { k_max })
}

/// Scalar line search `v = v_prev + κ (r − v_prev)` with the largest admissible κ ∈ [0, 1].
pub fn rg_step(gd: &GovernorDesign, state: &GovernorState, r: &[f64]) -> Result<RgStep> {
    let m = gd.m();
    let n = gd.n();
    if r.len() != m || state.v_prev.len() != m || state.xn.len() != n {
        return Err(dim_err("governor step"));
    }
    let z = state.stacked();
    let viol = gd.oinf.max_violation(&z);
    if viol > INVARIANCE_TOL {
        return Err(Error::InvarianceLoss { violation: viol });
    }
    let dir: Vec<f64> = r.iter().zip(&state.v_prev).map(|(a, b)| a - b).collect();
    let mut kappa = 1.0;
    let mut binding = None;
    for i in 0..gd.oinf.len() {
        let a = gd.oinf.normal(i);
        let coef: f64 = a[..m].iter().zip(&dir).map(|(x, y)| x * y).sum();
        if coef <= 0.0 {
            continue;
        }
        let lhs: f64 = a.iter().zip(&z).map(|(x, y)| x * y).sum();
        let slack = (gd.oinf.offset(i) - lhs).max(0.0);
        let k = slack / coef;
        if k < kappa {
            kappa = k;
            binding = Some(i);
        }
    }
    let v = if kappa >= 1.0 {
        r.to_vec()
    } else if kappa <= 0.0 {
        state.v_prev.clone()
    } else {
        state.v_prev.iter().zip(&dir).map(|(v, d)| v + kappa * d).collect()
    };
    Ok(RgStep { kappa, v, binding_row: binding })
}

/// `xn ← Â xn + B̂ v`, `v_prev ← v`.
pub fn nominal_model_step(gd: &GovernorDesign, state: &GovernorState, v: &[f64]) -> GovernorState {
    let mut xn = gd.ahat.mul_vec(&state.xn);
    gd.bhat.mul_vec_acc(v, &mut xn);
    GovernorState { v_prev: v.to_vec(), xn }
}

const NU_GRID: usize = 1000;

/// `max_{τ∈[0,Td]} ‖e^{Am τ} − I‖∞ · max_{x∈Xn, v∈V} ‖x + Am⁻¹Bv v‖∞`.
pub fn inter_sample_margin(am: &Mat, bv: &Mat, xn: &Hyperbox, v: &Hyperbox, td: f64) -> Result<f64> {
    let n = am.rows();
    if !am.is_square() || bv.rows() != n || xn.dim() != n || v.dim() != bv.cols() {
        return Err(dim_err("inter-sample margin"));
    }
    if xn.is_empty() || v.is_empty() {
        return Err(Error::EmptySet("inter-sample margin boxes".into()));
    }
    if !(td >= 0.0) {
        return Err(Error::Parameter("Td must be nonnegative".into()));
    }
    let gain = am.solve(bv).map_err(|_| Error::Parameter("Am is singular".into()))?;
    let hull = xn.minkowski_sum(&v.image_bounds(&gain)?)?;
    let second = hull.norm_inf();
    Ok(transient_factor(am, td, NU_GRID)? * second)
}

/// `max_{τ∈[0,Td]} ‖e^{Am τ} − I‖∞` on a uniform grid refined by golden-section
/// search around the best grid point.
pub fn transient_factor(am: &Mat, td: f64, grid: usize) -> Result<f64> {
    if td == 0.0 {
        return Ok(0.0);
    }
    let n = am.rows();
    let id = Mat::identity(n);
    let f = |tau: f64| -> Result<f64> { Ok((&expm(am, tau)? - &id).norm_inf()) };
    let h = td / grid as f64;
    let mut best = (0.0, 0usize);
    for i in 1..=grid {
        let val = f(i as f64 * h)?;
        if val > best.0 {
            best = (val, i);
        }
    }
    let (mut a, mut b) = ((best.1 as f64 - 1.0) * h, ((best.1 + 1) as f64 * h).min(td));
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(best.0.max(fc).max(fd).max(f(td)?))
}

/// `X̂n = Xn ⊖ Ω(ν)`, `Ûn = Un ⊖ Ω(‖Kx‖∞ ν)`.
pub fn tighten_for_sampling(xn: &Hyperbox, un: &Hyperbox, kx: &Mat, nu: f64) -> Result<(Hyperbox, Hyperbox)> {
    if kx.shape() != (un.dim(), xn.dim()) {
        return Err(dim_err("tightening gain"));
    }
    if xn.is_empty() || un.is_empty() {
        return Err(Error::EmptySet("constraint box before sampling tightening".into()));
    }
    if nu == 0.0 {
        return Ok((xn.clone(), un.clone()));
    }
    let xh = xn.pontryagin_diff(&Hyperbox::ball(xn.dim(), nu))?;
    let uh = un.pontryagin_diff(&Hyperbox::ball(un.dim(), kx.norm_inf() * nu))?;
    if xh.is_empty() || uh.is_empty() {
        return Err(Error::EmptySet("sampling margin removes the whole constraint box; reduce Td".into()));
    }
    Ok((xh, uh))
}
