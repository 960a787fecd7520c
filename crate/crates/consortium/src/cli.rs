//! Command-line front end.
//!
//! Six subcommands cover the workflow: `simulate` a schedule, tabulate
//! `equilibria`, solve the static problem (`socp`), solve the dynamic
//! problem (`docp`), verify a trajectory against the maximum principle
//! (`pmp-check`), and `compare` the static and dynamic strategies from
//! both canonical initial conditions. All runs are driven by a scenario
//! (defaults, `--config` file, then per-flag overrides, in that order) and
//! write their outputs plus the resolved scenario into `--out`.

use crate::config::{Scenario, X0Spec};
use crate::docp::{self, DocpSolution, DocpSpec};
use crate::equilibria;
use crate::error::{Error, Result};
use crate::model::StateVector;
use crate::pmp;
use crate::sim::{integrate, ControlSchedule, IntegrationMethod, Trajectory};
use crate::socp;
use crate::tabular;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "consortium",
    about = "Simulation and optimal control of an algal-bacterial consortium chemostat",
    version
)]
pub struct Cli {
    /// Scenario file (TOML); defaults apply for missing fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for tabular files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Horizon in days.
    #[arg(long)]
    pub tf: Option<f64>,
    /// Number of mesh intervals.
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model under a constant control pair.
    Simulate {
        /// Initial condition: x_init, x_star, or five comma-separated values.
        #[arg(long)]
        x0: Option<String>,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Constant allocation; defaults to the static optimum.
        #[arg(long)]
        alpha: Option<f64>,
        /// Constant dilution rate (1/day); defaults to the static optimum.
        #[arg(long)]
        d: Option<f64>,
        /// Integration scheme: gauss2 or rk4.
        #[arg(long)]
        method: Option<String>,
        /// Keep every n-th node in the trajectory file.
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Tabulate equilibria, thresholds and stability labels.
    Equilibria {
        /// Comma-separated allocation values; defaults to the static optimum.
        #[arg(long)]
        alpha: Option<String>,
        /// Comma-separated dilution values; defaults to the static optimum.
        #[arg(long)]
        d: Option<String>,
    },
    /// Solve the static problem and write the objective contours.
    Socp {
        #[arg(long)]
        grid_alpha: Option<usize>,
        #[arg(long)]
        grid_d: Option<usize>,
        #[arg(long)]
        alpha0: Option<f64>,
        #[arg(long)]
        d0: Option<f64>,
    },
    /// Optimize the control schedule over a finite horizon.
    Docp {
        /// Initial condition: x_init, x_star, or five comma-separated values.
        #[arg(long)]
        x0: Option<String>,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Dilution upper bound (1/day).
        #[arg(long)]
        dmax: Option<f64>,
        /// Number of ascent starts.
        #[arg(long)]
        starts: Option<usize>,
        /// Use the static optimum as the first start.
        #[arg(long)]
        warm_start: Option<bool>,
    },
    /// Verify a trajectory file against the maximum principle.
    PmpCheck {
        /// Trajectory file produced by simulate/docp (undecimated mesh).
        #[arg(long)]
        trajectory: PathBuf,
        /// Singular band relative to the peak switching magnitude.
        #[arg(long)]
        eps_singular: Option<f64>,
    },
    /// Compare static and dynamic strategies from x_init and x_star.
    Compare {
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        dmax: Option<f64>,
        #[arg(long)]
        starts: Option<usize>,
    },
}

/// Harvest totals of the four (initial condition, strategy) cells.
///
/// Improvement percentages are derived from the cells on demand, never
/// stored, so the report cannot go stale against its own numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonReport {
    pub t_f: f64,
    pub n_steps: usize,
    pub d_max: f64,
    pub alpha_bar: f64,
    pub d_bar: f64,
    pub static_from_x_init: f64,
    pub dynamic_from_x_init: f64,
    pub static_from_x_star: f64,
    pub dynamic_from_x_star: f64,
}

impl ComparisonReport {
    pub fn improvement_from_x_init_percent(&self) -> f64 {
        100.0 * (self.dynamic_from_x_init - self.static_from_x_init) / self.static_from_x_init
    }

    pub fn improvement_from_x_star_percent(&self) -> f64 {
        100.0 * (self.dynamic_from_x_star - self.static_from_x_star) / self.static_from_x_star
    }
}

/// Everything the compare subcommand produces, kept for plotting exports.
pub struct CompareArtifacts {
    pub report: ComparisonReport,
    pub static_from_x_init: Trajectory,
    pub static_from_x_star: Trajectory,
    pub dynamic_from_x_init: DocpSolution,
    pub dynamic_from_x_star: DocpSolution,
}

/// Fills the 2x2 comparison grid: both initial conditions under the static
/// optimal constant control and under the optimized dynamic schedule.
pub fn run_compare(scenario: &Scenario) -> Result<CompareArtifacts> {
    let params = &scenario.params;
    let socp_opt = socp::coordinate_ascent(params, scenario.socp.alpha0, scenario.socp.d0)?;
    let x_init = X0Spec::Preset("x_init".into()).resolve(params)?;
    let x_star = equilibria::functional_equilibrium(socp_opt.alpha_bar, socp_opt.d_bar, params)?
        .ok_or_else(|| {
            Error::Infeasible("no coexistence equilibrium at the static optimum".into())
        })?;

    let static_schedule = ControlSchedule::constant(
        socp_opt.alpha_bar,
        socp_opt.d_bar.min(params.d_max),
        scenario.t_f,
        scenario.n_steps,
    );
    let static_from_x_init = integrate(&x_init, &static_schedule, params, scenario.method)?;
    let static_from_x_star = integrate(&x_star, &static_schedule, params, scenario.method)?;

    let docp_run = |x0: StateVector| -> Result<DocpSolution> {
        let mut spec = DocpSpec::with_constant_start(
            x0,
            scenario.t_f,
            scenario.n_steps,
            params.d_max,
            socp_opt.alpha_bar,
            socp_opt.d_bar.min(params.d_max),
        );
        spec.settings.max_iterations = scenario.docp.max_iterations;
        multi_start_with_options(&spec, scenario)
    };
    let dynamic_from_x_init = docp_run(x_init)?;
    let dynamic_from_x_star = docp_run(x_star)?;

    let report = ComparisonReport {
        t_f: scenario.t_f,
        n_steps: scenario.n_steps,
        d_max: params.d_max,
        alpha_bar: socp_opt.alpha_bar,
        d_bar: socp_opt.d_bar,
        static_from_x_init: static_from_x_init.total_harvest(),
        dynamic_from_x_init: dynamic_from_x_init.objective,
        static_from_x_star: static_from_x_star.total_harvest(),
        dynamic_from_x_star: dynamic_from_x_star.objective,
    };
    Ok(CompareArtifacts {
        report,
        static_from_x_init,
        static_from_x_star,
        dynamic_from_x_init,
        dynamic_from_x_star,
    })
}

fn multi_start_with_options(spec: &DocpSpec, scenario: &Scenario) -> Result<DocpSolution> {
    if scenario.docp.warm_start {
        docp::multi_start(spec, &scenario.params, scenario.docp.starts, scenario.seed)
    } else {
        // no warm start: begin from a mid-box constant schedule instead
        let mut run = spec.clone();
        run.initial_schedule =
            ControlSchedule::constant(0.5, 0.5 * spec.d_max, spec.t_f, spec.n_steps);
        docp::multi_start_from(&run, &scenario.params, scenario.docp.starts, scenario.seed)
    }
}

/// Six-significant-digit formatting used by the printed reports.
fn sig6(v: f64) -> String {
    format!("{v:.6}")
}

fn scenario_for(cli_config: &Option<PathBuf>) -> Result<Scenario> {
    match cli_config {
        Some(path) => Scenario::load(path),
        None => Ok(Scenario::default()),
    }
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number {v:?}: {e}")))
        })
        .collect()
}

/// Runs one parsed command line; returns the process error, if any.
pub fn run(cli: Cli) -> Result<()> {
    let mut scenario = scenario_for(&cli.config)?;
    let out = cli.out.as_path();
    std::fs::create_dir_all(out)?;

    match cli.command {
        Command::Simulate {
            x0,
            mesh,
            alpha,
            d,
            method,
            stride,
        } => {
            if let Some(tf) = mesh.tf {
                scenario.t_f = tf;
            }
            if let Some(steps) = mesh.steps {
                scenario.n_steps = steps;
            }
            if let Some(x0) = x0 {
                scenario.x0 = X0Spec::parse(&x0)?;
            }
            if let Some(m) = method {
                scenario.method = m.parse()?;
            }
            if let Some(s) = stride {
                scenario.stride = s;
            }
            scenario.validate()?;
            let (alpha, d) = match (alpha, d) {
                (Some(a), Some(d)) => (a, d),
                (a, d) => {
                    let opt = socp::coordinate_ascent(
                        &scenario.params,
                        scenario.socp.alpha0,
                        scenario.socp.d0,
                    )?;
                    (
                        a.unwrap_or(opt.alpha_bar),
                        d.unwrap_or(opt.d_bar.min(scenario.params.d_max)),
                    )
                }
            };
            let x0 = scenario.x0.resolve(&scenario.params)?;
            let schedule = ControlSchedule::constant(alpha, d, scenario.t_f, scenario.n_steps);
            let traj = integrate(&x0, &schedule, &scenario.params, scenario.method)?;
            let path = out.join("trajectory.txt");
            tabular::write_trajectory(&path, &traj, scenario.stride)?;
            scenario.save(&out.join("scenario_used.toml"))?;
            let xf = traj.final_state();
            println!(
                "simulate: alpha = {}, d = {}, t_f = {} days, {} steps",
                sig6(alpha),
                sig6(d),
                sig6(scenario.t_f),
                scenario.n_steps
            );
            println!(
                "final state: s = {}, e = {}, v = {}, q = {}, c = {}",
                sig6(xf.s),
                sig6(xf.e),
                sig6(xf.v),
                sig6(xf.q),
                sig6(xf.c)
            );
            println!("total harvest: {} g/L", sig6(traj.total_harvest()));
            if traj.quota_clamp_warnings > 0 {
                println!("warnings: quota clamped {} times", traj.quota_clamp_warnings);
            }
            println!("wrote {}", path.display());
        }

        Command::Equilibria { alpha, d } => {
            scenario.validate()?;
            let (alphas, ds) = match (alpha, d) {
                (Some(a), Some(d)) => (parse_list(&a)?, parse_list(&d)?),
                (a, d) => {
                    let opt = socp::coordinate_ascent(
                        &scenario.params,
                        scenario.socp.alpha0,
                        scenario.socp.d0,
                    )?;
                    (
                        a.map(|t| parse_list(&t)).transpose()?.unwrap_or(vec![opt.alpha_bar]),
                        d.map(|t| parse_list(&t)).transpose()?.unwrap_or(vec![opt.d_bar]),
                    )
                }
            };
            let mut rows = Vec::new();
            for &alpha in &alphas {
                for &d in &ds {
                    let report = match equilibria::classify_stability(alpha, d, &scenario.params) {
                        Ok(r) => Some(r),
                        Err(Error::Bifurcation { .. }) => None,
                        Err(e) => return Err(e),
                    };
                    if let Some(r) = &report {
                        println!(
                            "alpha = {}, d = {}: d1 = {}, d2 = {}, GAS = {}",
                            sig6(alpha),
                            sig6(d),
                            sig6(r.d1),
                            sig6(r.d2),
                            r.gas_label()
                        );
                    } else {
                        println!("alpha = {}, d = {}: bifurcation value", sig6(alpha), sig6(d));
                    }
                    rows.push(tabular::EquilibriumRow { alpha, d, report });
                }
            }
            let path = out.join("equilibria.txt");
            tabular::write_equilibrium_table(&path, &rows)?;
            scenario.save(&out.join("scenario_used.toml"))?;
            println!("wrote {}", path.display());
        }

        Command::Socp {
            grid_alpha,
            grid_d,
            alpha0,
            d0,
        } => {
            if let Some(g) = grid_alpha {
                scenario.socp.grid_alpha = g;
            }
            if let Some(g) = grid_d {
                scenario.socp.grid_d = g;
            }
            if let Some(a) = alpha0 {
                scenario.socp.alpha0 = a;
            }
            if let Some(d) = d0 {
                scenario.socp.d0 = d;
            }
            scenario.validate()?;
            let sol = socp::coordinate_ascent(
                &scenario.params,
                scenario.socp.alpha0,
                scenario.socp.d0,
            )?;
            println!(
                "static optimum: alpha_bar = {}, d_bar = {} 1/day",
                sig6(sol.alpha_bar),
                sig6(sol.d_bar)
            );
            println!(
                "equilibrium harvest rate f0* = {} g/L/day ({} sweeps)",
                sig6(sol.objective),
                sol.iterations
            );
            let grid = socp::contour_grid(
                &scenario.params,
                &socp::GridSpec {
                    n_alpha: scenario.socp.grid_alpha,
                    n_d: scenario.socp.grid_d,
                    d_hi: scenario.params.d_max,
                },
            )?;
            let path = out.join("socp_contour.txt");
            tabular::write_contour(&path, &grid)?;
            scenario.save(&out.join("scenario_used.toml"))?;
            println!("wrote {}", path.display());
        }

        Command::Docp {
            x0,
            mesh,
            dmax,
            starts,
            warm_start,
        } => {
            if let Some(tf) = mesh.tf {
                scenario.t_f = tf;
            }
            if let Some(steps) = mesh.steps {
                scenario.n_steps = steps;
            }
            if let Some(x0) = x0 {
                scenario.x0 = X0Spec::parse(&x0)?;
            }
            if let Some(dmax) = dmax {
                scenario.params.d_max = dmax;
            }
            if let Some(s) = starts {
                scenario.docp.starts = s;
            }
            if let Some(w) = warm_start {
                scenario.docp.warm_start = w;
            }
            scenario.validate()?;
            let params = &scenario.params;
            let socp_opt =
                socp::coordinate_ascent(params, scenario.socp.alpha0, scenario.socp.d0)?;
            let x0 = scenario.x0.resolve(params)?;
            let mut spec = DocpSpec::with_constant_start(
                x0,
                scenario.t_f,
                scenario.n_steps,
                params.d_max,
                socp_opt.alpha_bar,
                socp_opt.d_bar.min(params.d_max),
            );
            spec.settings.max_iterations = scenario.docp.max_iterations;
            let sol = multi_start_with_options(&spec, &scenario)?;
            println!(
                "dynamic optimum: total harvest = {} g/L over {} days ({} steps, d_max = {})",
                sig6(sol.objective),
                sig6(scenario.t_f),
                scenario.n_steps,
                sig6(params.d_max)
            );
            println!(
                "termination: {:?} after {} iterations, projected gradient {:.3e}, start #{}",
                sol.termination, sol.iterations, sol.gradient_norm_projected, sol.start_index
            );
            let traj_path = out.join("docp_trajectory.txt");
            tabular::write_trajectory(&traj_path, &sol.trajectory, scenario.stride)?;
            let costates = pmp::integrate_costates(&sol.trajectory, params)?;
            tabular::write_control_series(
                &out.join("docp_controls.txt"),
                &sol.trajectory,
                &costates,
                socp_opt.alpha_bar,
                socp_opt.d_bar,
                params,
            )?;
            scenario.save(&out.join("scenario_used.toml"))?;
            println!("wrote {}", traj_path.display());
        }

        Command::PmpCheck {
            trajectory,
            eps_singular,
        } => {
            if let Some(eps) = eps_singular {
                scenario.pmp.eps_singular_rel = eps;
            }
            scenario.validate()?;
            let params = &scenario.params;
            let (x0, schedule) = tabular::read_trajectory_schedule(&trajectory)?;
            // re-simulate to recover stage data on the file's own mesh
            let traj = integrate(&x0, &schedule, params, IntegrationMethod::GaussLegendre2)?;
            let costates = pmp::integrate_costates(&traj, params)?;
            let report =
                pmp::classify_arcs(&traj, &costates, scenario.pmp.eps_singular_rel, params)?;
            let path = out.join("pmp_nodes.txt");
            tabular::write_pmp_table(&path, &traj, &costates, &report, params)?;
            scenario.save(&out.join("scenario_used.toml"))?;

            let terminal = costates.costates.last().unwrap();
            let (za_tf, zd_tf) =
                pmp::switching_functions(&traj.final_state(), terminal, params);
            let h_values: Vec<f64> = (0..traj.times.len())
                .map(|i| {
                    pmp::hamiltonian(
                        &traj.states[i],
                        &costates.costates[i],
                        &traj.controls[i.min(traj.n_steps() - 1)],
                        params,
                    )
                })
                .collect();
            let h_min = h_values.iter().cloned().fold(f64::INFINITY, f64::min);
            let h_max = h_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            println!("pmp-check on {} intervals:", traj.n_steps());
            println!(
                "  sign consistency: alpha = {:.2}%, d = {:.2}% of non-singular intervals",
                100.0 * report.alpha_consistency,
                100.0 * report.d_consistency
            );
            println!(
                "  singular bands: eps_alpha = {:.3e}, eps_d = {:.3e}",
                report.eps_alpha, report.eps_d
            );
            println!("  final d interval is a high bang: {}", report.final_d_bang_high);
            println!(
                "  zeta_alpha(t_f) = {:.3e}, zeta_d(t_f) = {:.6} (c(t_f) = {})",
                za_tf,
                zd_tf,
                sig6(traj.final_state().c)
            );
            println!(
                "  Hamiltonian drift over horizon: {:.3e} (diagnostic)",
                h_max - h_min
            );
            println!("wrote {}", path.display());
        }

        Command::Compare { mesh, dmax, starts } => {
            if let Some(tf) = mesh.tf {
                scenario.t_f = tf;
            }
            if let Some(steps) = mesh.steps {
                scenario.n_steps = steps;
            }
            if let Some(dmax) = dmax {
                scenario.params.d_max = dmax;
            }
            if let Some(s) = starts {
                scenario.docp.starts = s;
            }
            scenario.validate()?;
            let artifacts = run_compare(&scenario)?;
            let r = &artifacts.report;
            println!(
                "total harvested algae over {} days ({} steps, d_max = {}):",
                sig6(r.t_f),
                r.n_steps,
                sig6(r.d_max)
            );
            println!(
                "  static optimum: alpha_bar = {}, d_bar = {}",
                sig6(r.alpha_bar),
                sig6(r.d_bar)
            );
            println!("  x0       static       dynamic      improvement");
            println!(
                "  x_init   {}   {}   {}%",
                sig6(r.static_from_x_init),
                sig6(r.dynamic_from_x_init),
                sig6(r.improvement_from_x_init_percent())
            );
            println!(
                "  x_star   {}   {}   {}%",
                sig6(r.static_from_x_star),
                sig6(r.dynamic_from_x_star),
                sig6(r.improvement_from_x_star_percent())
            );
            write_comparison_outputs(out, &scenario, &artifacts)?;
            scenario.save(&out.join("scenario_used.toml"))?;
            println!("wrote {}", out.join("compare_report.txt").display());
        }
    }
    Ok(())
}

fn write_comparison_outputs(
    out: &Path,
    scenario: &Scenario,
    artifacts: &CompareArtifacts,
) -> Result<()> {
    let r = &artifacts.report;
    let mut text = String::new();
    text.push_str(&format!(
        "# t_f = {} days, n_steps = {}, d_max = {}, alpha_bar = {}, d_bar = {}\n",
        r.t_f, r.n_steps, r.d_max, r.alpha_bar, r.d_bar
    ));
    text.push_str("x0 static dynamic improvement_percent\n");
    text.push_str(&format!(
        "x_init {} {} {}\n",
        sig6(r.static_from_x_init),
        sig6(r.dynamic_from_x_init),
        sig6(r.improvement_from_x_init_percent())
    ));
    text.push_str(&format!(
        "x_star {} {} {}\n",
        sig6(r.static_from_x_star),
        sig6(r.dynamic_from_x_star),
        sig6(r.improvement_from_x_star_percent())
    ));
    std::fs::write(out.join("compare_report.txt"), text)?;

    tabular::write_state_comparison(
        &out.join("compare_states_x_init.txt"),
        &artifacts.dynamic_from_x_init.trajectory,
        &artifacts.static_from_x_init,
    )?;
    tabular::write_state_comparison(
        &out.join("compare_states_x_star.txt"),
        &artifacts.dynamic_from_x_star.trajectory,
        &artifacts.static_from_x_star,
    )?;
    let costates =
        pmp::integrate_costates(&artifacts.dynamic_from_x_init.trajectory, &scenario.params)?;
    tabular::write_control_series(
        &out.join("compare_controls_x_init.txt"),
        &artifacts.dynamic_from_x_init.trajectory,
        &costates,
        r.alpha_bar,
        r.d_bar,
        &scenario.params,
    )?;
    Ok(())
}
