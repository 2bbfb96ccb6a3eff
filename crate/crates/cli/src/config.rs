//! Experiment configuration documents.

use std::path::{Path, PathBuf};

use l1rg_core::l1ac::L1Config;
use l1rg_core::l1rg::{DesignOptions, ProblemSpec};
use l1rg_core::uncertainty::{f16_uncertainty, ChannelTerm, SinePolynomial, UncertaintyModel, ZeroUncertainty};
use l1rg_core::{Hyperbox, Mat};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub plant: PlantConfig,
    pub constraints: ConstraintConfig,
    pub uncertainty: UncertaintyConfig,
    pub l1: L1Params,
    pub rg: RgParams,
    pub scenario: Scenario,
    pub output_dir: PathBuf,
    /// Published bounds for the comparison table, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<PublishedBounds>,
}

/// Row-major matrices. `c` maps states to the tracked outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub kx: Vec<Vec<f64>>,
    pub kv: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintConfig {
    pub x: BoxConfig,
    pub u: BoxConfig,
    pub x0: BoxConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UncertaintyConfig {
    F16,
    Zero,
    Tabulated { channels: Vec<TabulatedChannel> },
}

/// `amplitude·sin(omega·t + phase) + c0 + c1·x_state + c2·x_state²`, `state` zero-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedChannel {
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub c1: f64,
    #[serde(default)]
    pub c2: f64,
    pub state: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct L1Params {
    pub ae_diag: Vec<f64>,
    pub kf: Vec<f64>,
    pub gamma1: f64,
    /// Sample time used for the bounds.
    pub t_design: f64,
    /// Sample time of the adaptive law in practical-sampling runs.
    pub t_practical: f64,
    pub v_bound: f64,
    /// Off-diagonal scaling weight; 1 disables scaling.
    pub tx_offdiag: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RgParams {
    pub td: f64,
    pub epsilon: f64,
    pub practical_sampling: bool,
    pub k_max: usize,
    pub r_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
}

/// `r(t) = segment.r` for the first segment with `t ≤ until`; a missing
/// `until` extends the segment forever.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub until: Option<f64>,
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schedule: Vec<Segment>,
    pub horizon: f64,
    /// Integration step; defaults to a fifth of the run-time sample time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub x0: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublishedBounds {
    pub b_f_xr: f64,
    pub rho_tilde_scaled: Vec<f64>,
    pub rho_tilde_unscaled: Vec<f64>,
    pub rho_tilde_u_scaled: Vec<f64>,
    pub rho_tilde_u_unscaled: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_sup: Option<f64>,
}

fn mat(name: &str, rows: &[Vec<f64>]) -> Result<Mat, CliError> {
    Mat::from_rows(rows).map_err(|e| CliError::Input(format!("plant.{name}: {e}")))
}

fn bx(name: &str, b: &BoxConfig) -> Result<Hyperbox, CliError> {
    Hyperbox::new(b.lower.clone(), b.upper.clone()).map_err(|e| CliError::Input(format!("constraints.{name}: {e}")))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn check(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "schema_version {} unsupported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let spec = self.problem_spec()?;
        spec.validate().map_err(|e| CliError::Input(format!("plant/constraints: {e}")))?;
        let (n, m) = (spec.n(), spec.m());
        if self.l1.ae_diag.len() != n {
            return Err(CliError::Input(format!("l1.ae_diag: expected {n} entries")));
        }
        if self.l1.kf.len() != m {
            return Err(CliError::Input(format!("l1.kf: expected {m} entries")));
        }
        let positive = [
            ("l1.gamma1", self.l1.gamma1),
            ("l1.t_design", self.l1.t_design),
            ("l1.t_practical", self.l1.t_practical),
            ("rg.td", self.rg.td),
            ("scenario.horizon", self.scenario.horizon),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(CliError::Input(format!("{name}: must be positive")));
        }
        if let Some(h) = self.scenario.step {
            if !(h > 0.0) {
                return Err(CliError::Input("scenario.step: must be positive".into()));
            }
        }
        if self.scenario.x0.len() != n {
            return Err(CliError::Input(format!("scenario.x0: expected {n} entries")));
        }
        if self.scenario.schedule.is_empty() {
            return Err(CliError::Input("scenario.schedule: empty".into()));
        }
        if let Some(i) = self.scenario.schedule.iter().position(|s| s.r.len() != m) {
            return Err(CliError::Input(format!("scenario.schedule[{i}].r: expected {m} entries")));
        }
        let unc = self.uncertainty_model()?;
        if unc.channels() != m {
            return Err(CliError::Input(format!("uncertainty: expected {m} channels")));
        }
        Ok(())
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        let p = &self.plant;
        let b = mat("b", &p.b)?;
        let m = b.cols();
        Ok(ProblemSpec {
            a: mat("a", &p.a)?,
            b,
            c: mat("c", &p.c)?,
            kx: mat("kx", &p.kx)?,
            kv: mat("kv", &p.kv)?,
            x: bx("x", &self.constraints.x)?,
            u: bx("u", &self.constraints.u)?,
            x0: bx("x0", &self.constraints.x0)?,
            v_bound: self.l1.v_bound,
            r_bound: self.rg.r_bound,
            v0: self.rg.v0.clone().unwrap_or_else(|| vec![0.0; m]),
        })
    }

    pub fn l1_config(&self) -> L1Config {
        L1Config {
            ae: Mat::from_diag(&self.l1.ae_diag),
            kf: self.l1.kf.clone(),
            t: self.l1.t_design,
            gamma1: self.l1.gamma1,
        }
    }

    /// Practical sampling keeps `X̂n = Xn` and runs the adaptive law at `t_practical`.
    pub fn design_options(&self) -> DesignOptions {
        let practical = self.rg.practical_sampling;
        DesignOptions {
            td: self.rg.td,
            epsilon: self.rg.epsilon,
            practical,
            offdiag: self.l1.tx_offdiag,
            k_max: self.rg.k_max,
            t_runtime: practical.then_some(self.l1.t_practical),
        }
    }

    pub fn uncertainty_model(&self) -> Result<Box<dyn UncertaintyModel>, CliError> {
        let m = self.plant.b.first().map_or(0, Vec::len);
        Ok(match &self.uncertainty {
            UncertaintyConfig::F16 => Box::new(f16_uncertainty()),
            UncertaintyConfig::Zero => Box::new(ZeroUncertainty { m }),
            UncertaintyConfig::Tabulated { channels } => {
                let terms = channels
                    .iter()
                    .map(|c| ChannelTerm {
                        amplitude: c.amplitude,
                        omega: c.omega,
                        phase: c.phase,
                        c0: c.c0,
                        c1: c.c1,
                        c2: c.c2,
                        state: c.state,
                    })
                    .collect();
                let sp = SinePolynomial::new(terms).map_err(|e| CliError::Input(format!("uncertainty: {e}")))?;
                sp.check_states(self.plant.a.len()).map_err(|e| CliError::Input(format!("uncertainty: {e}")))?;
                Box::new(sp)
            }
        })
    }

    pub fn reference(&self, t: f64) -> Vec<f64> {
        let sched = &self.scenario.schedule;
        sched.iter().find(|s| s.until.is_none_or(|u| t <= u)).unwrap_or(&sched[sched.len() - 1]).r.clone()
    }
}
