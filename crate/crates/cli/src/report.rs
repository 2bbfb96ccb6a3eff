//! JSON report documents.

use l1rg_core::l1rg::L1RGController;
use l1rg_core::simkit::{BoundCheck, VerificationReport};
use l1rg_core::Hyperbox;
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDoc {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl From<&Hyperbox> for BoxDoc {
    fn from(b: &Hyperbox) -> Self {
        BoxDoc { lower: b.lower.clone(), upper: b.upper.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionDoc {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormsDoc {
    pub gxm: Vec<f64>,
    pub hxv: Vec<f64>,
    pub s_resolvent: Vec<f64>,
    pub filter: Vec<f64>,
    pub c_bdag: Vec<f64>,
    pub hxm_c_bdag: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsDoc {
    pub rho_in: f64,
    pub rho_r: f64,
    pub rho: f64,
    pub rho_r_i: Vec<f64>,
    pub rho_i: Vec<f64>,
    pub rho_tilde: Vec<f64>,
    pub rho_ur: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub rho_ua: Vec<f64>,
    pub rho_tilde_u: Vec<f64>,
    pub rho_tilde_y: Vec<f64>,
    pub b_f_xr: f64,
    pub l_f_xa: f64,
    pub b_f_xa: f64,
    /// `‖Tⁱ Gxm‖` per state.
    pub g_i: Vec<f64>,
    pub xr: BoxDoc,
    pub xa: BoxDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GovernorDoc {
    pub td: f64,
    pub epsilon: f64,
    pub k_star: usize,
    pub rows: usize,
    pub nu: f64,
    pub practical_sampling: bool,
    /// File holding the admissible-set halfspaces, relative to the report.
    pub polytope_file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleTimeDoc {
    pub t_design: f64,
    pub t_certified: f64,
    pub t_runtime: f64,
    pub runtime_certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub schema_version: u32,
    pub config: String,
    pub scaling_offdiag: f64,
    pub norms: NormsDoc,
    pub bounds: BoundsDoc,
    pub sample_time: SampleTimeDoc,
    pub conditions: Vec<ConditionDoc>,
    pub tightened: TightenedDoc,
    pub governor: GovernorDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightenedDoc {
    pub tilde_x: BoxDoc,
    pub tilde_u: BoxDoc,
    pub xn: BoxDoc,
    pub un: BoxDoc,
    pub xn_hat: BoxDoc,
    pub un_hat: BoxDoc,
}

impl DesignReport {
    pub fn new(name: &str, offdiag: f64, c: &L1RGController, polytope_file: &str) -> Self {
        let l1 = &c.l1;
        let b = &l1.bounds;
        let nm = &l1.norms;
        DesignReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config: name.to_string(),
            scaling_offdiag: offdiag,
            norms: NormsDoc {
                gxm: nm.gxm.clone(),
                hxv: nm.hxv.clone(),
                s_resolvent: nm.s_resolvent.clone(),
                filter: nm.filter.clone(),
                c_bdag: nm.c_bdag.clone(),
                hxm_c_bdag: nm.hxm_c_bdag.clone(),
            },
            bounds: BoundsDoc {
                rho_in: b.rho_in,
                rho_r: b.rho_r,
                rho: b.rho,
                rho_r_i: b.rho_r_i.clone(),
                rho_i: b.rho_i.clone(),
                rho_tilde: b.tilde_rho_i.clone(),
                rho_ur: b.rho_ur,
                gamma0: l1.gamma0,
                gamma1: l1.config.gamma1,
                gamma2: b.gamma2,
                rho_ua: b.rho_ua_j.clone(),
                rho_tilde_u: b.tilde_rho_u_j.clone(),
                rho_tilde_y: b.tilde_rho_y_j.clone(),
                b_f_xr: b.b_f_xr,
                l_f_xa: b.l_f_xa,
                b_f_xa: b.b_f_xa,
                g_i: l1.g_i.clone(),
                xr: (&b.xr).into(),
                xa: (&b.xa).into(),
            },
            sample_time: SampleTimeDoc {
                t_design: l1.t_design,
                t_certified: l1.t_certified,
                t_runtime: c.t_runtime,
                runtime_certified: c.certified,
            },
            conditions: l1
                .conditions
                .iter()
                .map(|k| ConditionDoc { name: k.name.clone(), lhs: k.lhs, rhs: k.rhs, holds: k.holds })
                .collect(),
            tightened: TightenedDoc {
                tilde_x: (&c.tilde_x).into(),
                tilde_u: (&c.tilde_u).into(),
                xn: (&c.xn).into(),
                un: (&c.un).into(),
                xn_hat: (&c.xn_hat).into(),
                un_hat: (&c.un_hat).into(),
            },
            governor: GovernorDoc {
                td: c.gov.td,
                epsilon: c.gov.epsilon,
                k_star: c.gov.k_star,
                rows: c.gov.oinf.len(),
                nu: c.nu,
                practical_sampling: c.practical,
                polytope_file: polytope_file.to_string(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckDoc {
    pub name: String,
    /// `None` when the bound does not apply to the trace.
    pub bound: Option<f64>,
    pub empirical: Option<f64>,
    pub satisfied: Option<bool>,
    pub margin: Option<f64>,
    pub worst_time: Option<f64>,
    pub certified: bool,
}

impl From<&BoundCheck> for CheckDoc {
    fn from(c: &BoundCheck) -> Self {
        CheckDoc {
            name: c.name.clone(),
            bound: Some(c.bound),
            empirical: Some(c.empirical),
            satisfied: Some(c.satisfied),
            margin: Some(c.margin),
            worst_time: Some(c.worst_time),
            certified: c.certified,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationDoc {
    pub schema_version: u32,
    pub trace: String,
    pub passed: bool,
    pub checks: Vec<CheckDoc>,
}

impl VerificationDoc {
    pub fn new(trace: &str, rep: &VerificationReport, not_applicable: &[String]) -> Self {
        let mut checks: Vec<CheckDoc> = rep.checks.iter().map(CheckDoc::from).collect();
        checks.extend(not_applicable.iter().map(|name| CheckDoc {
            name: name.clone(),
            bound: None,
            empirical: None,
            satisfied: None,
            margin: None,
            worst_time: None,
            certified: false,
        }));
        VerificationDoc {
            schema_version: REPORT_SCHEMA_VERSION,
            trace: trace.to_string(),
            passed: rep.all_satisfied(),
            checks,
        }
    }

    /// Fixed-width table for the terminal.
    pub fn to_table(&self) -> String {
        let mut s =
            format!("{:<18} {:>12} {:>12} {:>12} {:>9}  status\n", "check", "bound", "empirical", "margin", "worst t");
        for c in &self.checks {
            let status = match c.satisfied {
                Some(true) if c.certified => "pass",
                Some(true) => "pass (empirical)",
                Some(false) => "FAIL",
                None => "n/a",
            };
            let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5e}"));
            let wt = c.worst_time.map_or("-".to_string(), |v| format!("{v:.4}"));
            s.push_str(&format!(
                "{:<18} {:>12} {:>12} {:>12} {:>9}  {status}\n",
                c.name,
                num(c.bound),
                num(c.empirical),
                num(c.margin),
                wt
            ));
        }
        s
    }
}
