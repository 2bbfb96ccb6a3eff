//! The `design`, `simulate`, `verify` and `table2` workflows.

use std::path::{Path, PathBuf};

use l1rg_core::l1ac::{admissible_command_bound, design_bounds, BoundProblem, L1Design, PlantMatrices};
use l1rg_core::l1rg::{design, L1RGController};
use l1rg_core::simkit::{
    simulate_l1rg, simulate_nominal, simulate_plain_rg_baseline, simulate_reference, verify_bounds, verify_constraints,
    BaselineOptions, SimOptions, SimTrace,
};
use l1rg_core::uncertainty::UncertaintyModel;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::report::{DesignReport, VerificationDoc};
use crate::{plots, trace_csv};

pub const DESIGN_REPORT: &str = "design_report.json";
pub const POLYTOPE_FILE: &str = "admissible_set.txt";
pub const TRACE_FILES: [&str; 4] = ["l1rg.csv", "plain_rg.csv", "nominal.csv", "reference.csv"];

/// Command-line overrides of config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub practical_sampling: Option<bool>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig, CliError> {
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(p) = self.practical_sampling {
            cfg.rg.practical_sampling = p;
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0) {
                return Err(CliError::Input("--horizon must be positive".into()));
            }
            cfg.scenario.horizon = h;
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return Err(CliError::Input("--step must be positive".into()));
            }
            cfg.scenario.step = Some(s);
        }
        Ok(cfg)
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

/// Runs the full design for `cfg`.
pub fn build_controller(cfg: &ExperimentConfig) -> Result<L1RGController, CliError> {
    let spec = cfg.problem_spec()?;
    let unc = cfg.uncertainty_model()?;
    design(&spec, &cfg.l1_config(), &cfg.design_options(), unc.as_ref()).map_err(CliError::from_design)
}

/// Writes the design report and the admissible-set halfspaces.
pub fn cmd_design(cfg: &ExperimentConfig) -> Result<(L1RGController, DesignReport), CliError> {
    let ctrl = build_controller(cfg)?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let report = DesignReport::new(&cfg.name, cfg.l1.tx_offdiag, &ctrl, POLYTOPE_FILE);
    write_json(&dir.join(DESIGN_REPORT), &report)?;
    std::fs::write(dir.join(POLYTOPE_FILE), ctrl.gov.oinf.to_text())?;
    Ok((ctrl, report))
}

/// The four traces of one scenario.
#[derive(Clone, Debug)]
pub struct Runs {
    pub l1rg: SimTrace,
    pub plain_rg: SimTrace,
    pub nominal: SimTrace,
    pub reference: SimTrace,
}

pub fn sim_options(cfg: &ExperimentConfig, ctrl: &L1RGController) -> SimOptions {
    SimOptions::new(cfg.scenario.horizon, cfg.scenario.step.unwrap_or(ctrl.t_runtime / 5.0))
}

/// Runs L1-RG and the plain-RG baseline side by side, then replays the
/// nominal and reference systems under the L1-RG command.
pub fn run_scenario(cfg: &ExperimentConfig, ctrl: &L1RGController) -> Result<Runs, CliError> {
    let unc: Box<dyn UncertaintyModel> = cfg.uncertainty_model()?;
    let unc = unc.as_ref();
    let spec = cfg.problem_spec()?;
    let opts = sim_options(cfg, ctrl);
    let x0 = &cfg.scenario.x0;
    let r = |t: f64| cfg.reference(t);
    let base = BaselineOptions { td: cfg.rg.td, epsilon: cfg.rg.epsilon, k_max: cfg.rg.k_max };
    let (l1rg, plain_rg) = std::thread::scope(|s| {
        let b = s.spawn(|| simulate_plain_rg_baseline(&spec, unc, &r, x0, &base, &opts));
        let a = simulate_l1rg(ctrl, unc, &r, x0, &opts);
        (a, b.join().expect("baseline thread"))
    });
    let l1rg = l1rg.map_err(CliError::from_sim)?;
    let plain_rg = plain_rg.map_err(CliError::from_sim)?;
    let (nominal, reference) = std::thread::scope(|s| {
        let rf = s.spawn(|| simulate_reference(ctrl, unc, &l1rg, x0));
        let nm = simulate_nominal(ctrl, &l1rg, x0);
        (nm, rf.join().expect("reference thread"))
    });
    Ok(Runs {
        l1rg,
        plain_rg,
        nominal: nominal.map_err(CliError::from_sim)?,
        reference: reference.map_err(CliError::from_sim)?,
    })
}

/// Design, simulate, and write the traces, the design report and the figures.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<(L1RGController, Runs), CliError> {
    let (ctrl, _) = cmd_design(cfg)?;
    let runs = run_scenario(cfg, &ctrl)?;
    let dir = &cfg.output_dir;
    for (name, tr) in TRACE_FILES.iter().zip([&runs.l1rg, &runs.plain_rg, &runs.nominal, &runs.reference]) {
        trace_csv::save(tr, &dir.join(name))?;
    }
    plots::write_all(dir, &ctrl, &runs.l1rg, &runs.plain_rg, &runs.nominal)?;
    Ok((ctrl, runs))
}

fn bound_names(n: usize, m: usize, p: usize) -> Vec<String> {
    let mut v: Vec<String> = (1..=n).map(|i| format!("x_minus_xn_{i}")).collect();
    v.extend((1..=p).map(|j| format!("y_minus_yn_{j}")));
    for j in 1..=m {
        v.push(format!("u_minus_un_{j}"));
        v.push(format!("ua_{j}"));
    }
    v.push("prediction_error".into());
    v
}

/// Checks a trace against the design. With a nominal replay every bound is
/// checked; without one only the constraints are.
pub fn cmd_verify(cfg: &ExperimentConfig, trace: &Path, nominal: Option<&Path>) -> Result<VerificationDoc, CliError> {
    let ctrl = build_controller(cfg)?;
    let tr = trace_csv::load(trace)?;
    if tr.n() != ctrl.n() || tr.m() != ctrl.m() {
        return Err(CliError::Input(format!(
            "{}: trace has n = {}, m = {} but the config has n = {}, m = {}",
            trace.display(),
            tr.n(),
            tr.m(),
            ctrl.n(),
            ctrl.m()
        )));
    }
    let (rep, na) = match nominal {
        Some(p) => {
            let nom = trace_csv::load(p)?;
            (verify_bounds(&tr, &nom, &ctrl).map_err(CliError::from_sim)?, vec![])
        }
        None => (
            verify_constraints(&tr, &ctrl.spec.x, &ctrl.spec.u, ctrl.certified).map_err(CliError::from_sim)?,
            bound_names(ctrl.n(), ctrl.m(), ctrl.spec.c.rows()),
        ),
    };
    let doc = VerificationDoc::new(&trace.display().to_string(), &rep, &na);
    ensure_dir(&cfg.output_dir)?;
    let stem = trace.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    write_json(&cfg.output_dir.join(format!("verification_{stem}.json")), &doc)?;
    Ok(doc)
}

/// One cell group of the bound comparison table.
#[derive(Clone, Debug, Serialize)]
pub struct Table2Entry {
    pub config: String,
    pub scaled: bool,
    pub offdiag: f64,
    pub gamma1: f64,
    pub t: f64,
    pub kf: Vec<f64>,
    pub b_f_xr: f64,
    pub rho_tilde: Vec<f64>,
    pub rho_tilde_u: Vec<f64>,
    pub published_b_f_xr: Option<f64>,
    pub published_rho_tilde: Option<Vec<f64>>,
    pub published_rho_tilde_u: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandSweep {
    pub config: String,
    /// State whose constraint pins the bound box.
    pub state: usize,
    pub v_sup: f64,
    pub published: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table2 {
    pub schema_version: u32,
    pub entries: Vec<Table2Entry>,
    pub sweeps: Vec<CommandSweep>,
}

fn rel_dev(got: f64, want: f64) -> f64 {
    (got - want) / want
}

/// L1 bounds only, at a given scaling weight.
pub fn l1_bounds(cfg: &ExperimentConfig, offdiag: f64) -> Result<L1Design, CliError> {
    let spec = cfg.problem_spec()?;
    let l1cfg = cfg.l1_config();
    let unc = cfg.uncertainty_model()?;
    let plant = PlantMatrices::from_gains(&spec.a, &spec.b, &spec.kx, &spec.kv).map_err(CliError::from_design)?;
    let p = BoundProblem {
        plant: &plant,
        cfg: &l1cfg,
        kx: &spec.kx,
        c_out: &spec.c,
        v_bound: spec.v_bound,
        x0: &spec.x0,
        cap: Some(&spec.x),
        offdiag,
    };
    design_bounds(&p, unc.as_ref()).map_err(CliError::from_design)
}

fn sweep(cfg: &ExperimentConfig, d: &L1Design) -> Result<CommandSweep, CliError> {
    let spec = cfg.problem_spec()?;
    let unc = cfg.uncertainty_model()?;
    let hw = spec.x.half_width();
    let state = (0..hw.len()).min_by(|a, b| hw[*a].total_cmp(&hw[*b])).unwrap_or(0);
    let v = admissible_command_bound(&d.norms, unc.as_ref(), &spec.x0, &spec.x, cfg.l1.tx_offdiag, state)
        .map_err(CliError::from_design)?;
    Ok(CommandSweep {
        config: cfg.name.clone(),
        state,
        v_sup: v,
        published: cfg.published.as_ref().and_then(|p| p.v_sup),
    })
}

/// Bounds with and without scaling for every config, evaluated in parallel.
pub fn compute_table2(cfgs: &[ExperimentConfig]) -> Result<Table2, CliError> {
    let jobs: Vec<(usize, bool)> = (0..cfgs.len()).flat_map(|i| [(i, true), (i, false)]).collect();
    let results: Vec<Result<(L1Design, Option<CommandSweep>), CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(i, scaled)| {
                s.spawn(move || {
                    let cfg = &cfgs[i];
                    let d = l1_bounds(cfg, if scaled { cfg.l1.tx_offdiag } else { 1.0 })?;
                    let sw = if scaled { Some(sweep(cfg, &d)?) } else { None };
                    Ok((d, sw))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("table worker")).collect()
    });
    let mut entries = Vec::new();
    let mut sweeps = Vec::new();
    for (&(i, scaled), res) in jobs.iter().zip(results) {
        let (d, sw) = res?;
        let cfg = &cfgs[i];
        let pubd = cfg.published.as_ref();
        entries.push(Table2Entry {
            config: cfg.name.clone(),
            scaled,
            offdiag: if scaled { cfg.l1.tx_offdiag } else { 1.0 },
            gamma1: d.config.gamma1,
            t: d.config.t,
            kf: d.config.kf.clone(),
            b_f_xr: d.bounds.b_f_xr,
            rho_tilde: d.bounds.tilde_rho_i.clone(),
            rho_tilde_u: d.bounds.tilde_rho_u_j.clone(),
            published_b_f_xr: pubd.map(|p| p.b_f_xr),
            published_rho_tilde: pubd.map(|p| {
                if scaled {
                    p.rho_tilde_scaled.clone()
                } else {
                    p.rho_tilde_unscaled.clone()
                }
            }),
            published_rho_tilde_u: pubd.map(|p| {
                if scaled {
                    p.rho_tilde_u_scaled.clone()
                } else {
                    p.rho_tilde_u_unscaled.clone()
                }
            }),
        });
        sweeps.extend(sw);
    }
    Ok(Table2 { schema_version: crate::report::REPORT_SCHEMA_VERSION, entries, sweeps })
}

impl Table2 {
    /// Long format: one line per scalar quantity.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("config,scaling,quantity,computed,published,rel_dev\n");
        let mut line = |cfg: &str, scaled: bool, q: &str, got: f64, want: Option<f64>| {
            let (w, d) = match want {
                Some(w) => (w.to_string(), rel_dev(got, w).to_string()),
                None => (String::new(), String::new()),
            };
            let sc = if scaled { "with" } else { "without" };
            s.push_str(&format!("{cfg},{sc},{q},{got},{w},{d}\n"));
        };
        for e in &self.entries {
            line(&e.config, e.scaled, "gamma1", e.gamma1, None);
            line(&e.config, e.scaled, "b_f_xr", e.b_f_xr, e.published_b_f_xr);
            for (i, v) in e.rho_tilde.iter().enumerate() {
                line(
                    &e.config,
                    e.scaled,
                    &format!("rho_tilde_{}", i + 1),
                    *v,
                    e.published_rho_tilde.as_ref().map(|p| p[i]),
                );
            }
            for (j, v) in e.rho_tilde_u.iter().enumerate() {
                let want = e.published_rho_tilde_u.as_ref().map(|p| p[j]);
                line(&e.config, e.scaled, &format!("rho_tilde_u_{}", j + 1), *v, want);
            }
        }
        for sw in &self.sweeps {
            line(&sw.config, true, &format!("v_sup_state_{}", sw.state + 1), sw.v_sup, sw.published);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        for e in &self.entries {
            let sc = if e.scaled { "with scaling" } else { "without scaling" };
            s.push_str(&format!("{} ({sc}, kf = {}, T = {:e}, gamma1 = {:e})\n", e.config, fmt(&e.kf), e.t, e.gamma1));
            let devs = |got: &[f64], want: &Option<Vec<f64>>| match want {
                Some(w) => format!(
                    "  published [{}]  deviation [{}]",
                    fmt(w),
                    got.iter()
                        .zip(w)
                        .map(|(g, w)| format!("{:+.1}%", 100.0 * rel_dev(*g, *w)))
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
                None => String::new(),
            };
            let bw = e.published_b_f_xr.map_or(String::new(), |w| format!("  published {w:.4}"));
            s.push_str(&format!("  b_f_xr      {:.6}{bw}\n", e.b_f_xr));
            s.push_str(&format!(
                "  rho_tilde   [{}]{}\n",
                fmt(&e.rho_tilde),
                devs(&e.rho_tilde, &e.published_rho_tilde)
            ));
            s.push_str(&format!(
                "  rho_tilde_u [{}]{}\n",
                fmt(&e.rho_tilde_u),
                devs(&e.rho_tilde_u, &e.published_rho_tilde_u)
            ));
        }
        for sw in &self.sweeps {
            let p = sw
                .published
                .map_or(String::new(), |w| format!("  published {w}  deviation {:+.1}%", 100.0 * rel_dev(sw.v_sup, w)));
            s.push_str(&format!(
                "{}: sup |v| with state {} pinned at its constraint = {:.4}{p}\n",
                sw.config,
                sw.state + 1,
                sw.v_sup
            ));
        }
        s
    }
}

/// Computes the table and writes `table2.csv` and `table2.json` into `out`.
pub fn cmd_table2(cfgs: &[ExperimentConfig], out: &Path) -> Result<Table2, CliError> {
    let t = compute_table2(cfgs)?;
    ensure_dir(out)?;
    std::fs::write(out.join("table2.csv"), t.to_csv())?;
    write_json(&out.join("table2.json"), &t)?;
    Ok(t)
}
