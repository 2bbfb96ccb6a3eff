use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use l1rg::commands::{self, Overrides, DESIGN_REPORT, TRACE_FILES};
use l1rg::{CliError, ExperimentConfig};

/// L1 adaptive control with a reference governor.
#[derive(Parser)]
#[command(name = "l1rg", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the inter-sample tightening and run the adaptive law at `t_practical`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    practical_sampling: Option<bool>,
    /// Simulation horizon in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Integration step in seconds.
    #[arg(long)]
    step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute bounds, tighten constraints and build the governor.
    Design(Common),
    /// Design, then run L1-RG, plain RG, nominal and reference simulations.
    Simulate(Common),
    /// Check a trace against the design bounds and constraints.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Trace to check; defaults to `l1rg.csv` in the output directory.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Nominal replay of the trace. Without it only constraints are checked.
        #[arg(long)]
        nominal: Option<PathBuf>,
    },
    /// Bounds with and without scaling for a set of configs.
    Table2 {
        /// Configs to compare; defaults to the bundled F-16 pair.
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        #[arg(long, default_value = "out/table2")]
        out: PathBuf,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig, CliError> {
    let ov =
        Overrides { out: c.out.clone(), practical_sampling: c.practical_sampling, horizon: c.horizon, step: c.step };
    ov.apply(ExperimentConfig::load(&c.config)?)
}

fn bundled() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    vec![dir.join("f16_kf200.json"), dir.join("f16_kf1000.json")]
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Command::Design(c) => {
            let cfg = load(&c)?;
            let (ctrl, rep) = commands::cmd_design(&cfg)?;
            let b = &rep.bounds;
            println!("design written to {}", cfg.output_dir.join(DESIGN_REPORT).display());
            println!("b_f_xr = {:.6}, gamma0 = {:.4e}, gamma1 = {:e}", b.b_f_xr, b.gamma0, b.gamma1);
            println!("rho_tilde = {:?}", b.rho_tilde);
            println!("rho_tilde_u = {:?}, rho_ua = {:?}", b.rho_tilde_u, b.rho_ua);
            println!(
                "governor: k* = {}, {} halfspaces; T runtime = {:e} ({})",
                rep.governor.k_star,
                rep.governor.rows,
                ctrl.t_runtime,
                if ctrl.certified { "certified" } else { "not certified" }
            );
            for k in rep.conditions.iter().filter(|k| !k.holds) {
                println!("warning: condition {} does not hold ({:.4e} vs {:.4e})", k.name, k.lhs, k.rhs);
            }
        }
        Command::Simulate(c) => {
            let cfg = load(&c)?;
            let (_, runs) = commands::cmd_simulate(&cfg)?;
            println!("{} records per trace written to {}", runs.l1rg.len(), cfg.output_dir.display());
            for (name, tr) in TRACE_FILES.iter().zip([&runs.l1rg, &runs.plain_rg]) {
                let x: Vec<String> = (0..tr.n()).map(|i| format!("{:.4}", tr.x.max_abs(i))).collect();
                let u: Vec<String> = (0..tr.m()).map(|j| format!("{:.4}", tr.u.max_abs(j))).collect();
                println!("{name}: max|x| = [{}], max|u| = [{}]", x.join(", "), u.join(", "));
            }
        }
        Command::Verify { common, trace, nominal } => {
            let cfg = load(&common)?;
            let (trace, nominal) = match trace {
                Some(t) => (t, nominal),
                None => {
                    let d = &cfg.output_dir;
                    (d.join(TRACE_FILES[0]), Some(nominal.unwrap_or_else(|| d.join(TRACE_FILES[2]))))
                }
            };
            let doc = commands::cmd_verify(&cfg, &trace, nominal.as_deref())?;
            print!("{}", doc.to_table());
            if !doc.passed {
                let failed: Vec<String> = doc
                    .checks
                    .iter()
                    .filter(|c| c.satisfied == Some(false))
                    .map(|c| format!("{} at t = {}", c.name, c.worst_time.unwrap_or(f64::NAN)))
                    .collect();
                return Err(CliError::Verification(failed.join("; ")));
            }
        }
        Command::Table2 { configs, out } => {
            let paths = if configs.is_empty() { bundled() } else { configs };
            let cfgs = paths.iter().map(|p| ExperimentConfig::load(p)).collect::<Result<Vec<_>, _>>()?;
            let t = commands::cmd_table2(&cfgs, &out)?;
            print!("{}", t.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
