//! Dynamic problem: maximize the harvest integral over a finite horizon
//! by optimizing the piecewise-constant control schedule directly.
//!
//! The state trajectory is eliminated through the fixed-step integrator
//! (single shooting), leaving `2 * n_steps` bounded control variables.
//! Gradients come from a discrete adjoint that differentiates the
//! Gauss-Legendre step itself, so they are exact for the transcribed
//! objective. Ascent is projected gradient with Armijo backtracking; the
//! raw box-constrained solution is reported without any control smoothing
//! so that bang arcs survive for later classification.

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::model::{
    control_jacobian, state_jacobian, ModelParams, StateVector,
};
use crate::sim::{gl2, integrate, ControlSchedule, IntegrationMethod, Trajectory};
use crate::socp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Stopping rules and line-search constants of the projected ascent.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerSettings {
    /// Iteration cap.
    pub max_iterations: usize,
    /// Projected-gradient infinity-norm tolerance.
    pub grad_tol: f64,
    /// Minimal objective improvement per accepted iteration.
    pub improvement_tol: f64,
    /// Initial Armijo step.
    pub armijo_init_step: f64,
    /// Armijo backtracking factor.
    pub armijo_shrink: f64,
    /// Armijo slope fraction.
    pub armijo_slope: f64,
    /// Step length below which the line search is declared stalled.
    pub step_floor: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 5000,
            grad_tol: 1e-8,
            improvement_tol: 1e-12,
            armijo_init_step: 1.0,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            step_floor: 1e-16,
        }
    }
}

/// Specification of one dynamic optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct DocpSpec {
    pub x0: StateVector,
    /// Horizon (days).
    pub t_f: f64,
    /// Mesh size of the control discretization.
    pub n_steps: usize,
    /// Upper bound on the dilution rate (1/day).
    pub d_max: f64,
    /// Starting schedule of the ascent.
    pub initial_schedule: ControlSchedule,
    pub settings: OptimizerSettings,
}

impl DocpSpec {
    /// Spec starting from a constant schedule.
    pub fn with_constant_start(
        x0: StateVector,
        t_f: f64,
        n_steps: usize,
        d_max: f64,
        alpha0: f64,
        d0: f64,
    ) -> Self {
        DocpSpec {
            x0,
            t_f,
            n_steps,
            d_max,
            initial_schedule: ControlSchedule::constant(alpha0, d0, t_f, n_steps),
            settings: OptimizerSettings::default(),
        }
    }

    fn validate(&self, params: &ModelParams) -> Result<()> {
        if !(self.t_f > 0.0) || self.n_steps == 0 {
            return Err(Error::Config(format!(
                "need t_f > 0 and n_steps >= 1, got t_f = {}, n_steps = {}",
                self.t_f, self.n_steps
            )));
        }
        if !(self.d_max > 0.0) || !self.d_max.is_finite() {
            return Err(Error::Config(format!("d_max = {} must be positive", self.d_max)));
        }
        self.x0.validate(params)?;
        if self.initial_schedule.n_steps() != self.n_steps
            || (self.initial_schedule.t_f - self.t_f).abs() > 1e-12 * self.t_f
        {
            return Err(Error::Config(
                "initial schedule mesh disagrees with the spec".into(),
            ));
        }
        self.initial_schedule.validate(self.d_max)
    }
}

/// Why the ascent stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Projected gradient below tolerance.
    GradientTolerance,
    /// Accepted step improved the objective by less than the threshold.
    ImprovementTolerance,
    /// Backtracking hit the step floor without an acceptable step.
    StalledLineSearch,
    IterationCap,
}

/// One ascent iteration record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub projected_gradient_norm: f64,
    pub step: f64,
}

/// Optimized schedule with its trajectory and convergence data.
#[derive(Debug, Clone, PartialEq)]
pub struct DocpSolution {
    pub schedule: ControlSchedule,
    /// Total harvest of the optimized schedule (g/L).
    pub objective: f64,
    pub trajectory: Trajectory,
    /// Projected-gradient infinity norm at termination.
    pub gradient_norm_projected: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// Index of the start that produced this solution (multi-start only).
    pub start_index: usize,
}

/// Exact gradient of the discrete harvest objective with respect to every
/// `(alpha_i, d_i)`, by a backward sweep through the integrator steps.
///
/// Returns `(d_objective/d_alpha, d_objective/d_d)`, one entry per interval.
pub fn discrete_adjoint_gradient(
    schedule: &ControlSchedule,
    x0: &StateVector,
    params: &ModelParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let traj = integrate(x0, schedule, params, IntegrationMethod::GaussLegendre2)?;
    Ok(adjoint_from_trajectory(&traj, params))
}

/// Backward sweep over an existing Gauss-Legendre trajectory.
fn adjoint_from_trajectory(traj: &Trajectory, params: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    let n = traj.n_steps();
    let h = traj.times[1] - traj.times[0];
    let mut grad_alpha = vec![0.0; n];
    let mut grad_d = vec![0.0; n];
    // adjoint of the node state; zero at the terminal node
    let mut lambda = [0.0f64; 5];

    for step in (0..n).rev() {
        let u = traj.controls[step];
        let stages = &traj.stage_states[step];
        let jac = [
            state_jacobian(&stages[0], &u, params),
            state_jacobian(&stages[1], &u, params),
        ];

        // right-hand side of the transposed stage system
        let mut rhs = [0.0f64; 10];
        for j in 0..2 {
            for r in 0..5 {
                rhs[5 * j + r] = h * gl2::B[j] * lambda[r];
            }
            // harvest integrand d*c sensed through the stage states
            let w = h * h * u.d * (gl2::B[0] * gl2::A[0][j] + gl2::B[1] * gl2::A[1][j]);
            rhs[5 * j + 4] += w;
        }
        // matrix blocks: (j,i) -> delta_ij I - h a_ij J_i^T
        let mut mat = vec![vec![0.0f64; 10]; 10];
        for j in 0..2 {
            for i in 0..2 {
                let a = h * gl2::A[i][j];
                for r in 0..5 {
                    for s in 0..5 {
                        mat[5 * j + r][5 * i + s] = -a * jac[i][s][r];
                    }
                }
            }
        }
        for c in 0..10 {
            mat[c][c] += 1.0;
        }
        let mut w = rhs.to_vec();
        solve_dense(&mut mat, &mut w).expect("transposed stage system is nonsingular");

        // pull the adjoint and the control sensitivities back through the step
        let mut lambda_prev = lambda;
        lambda_prev[4] += h * u.d * (gl2::B[0] + gl2::B[1]);
        let mut ga = 0.0;
        let mut gd = h * (gl2::B[0] * stages[0].c + gl2::B[1] * stages[1].c);
        for i in 0..2 {
            let (fa, fd) = control_jacobian(&stages[i], &u, params);
            for r in 0..5 {
                let wi = w[5 * i + r];
                ga += fa[r] * wi;
                gd += fd[r] * wi;
            }
            // J_i^T w_i accumulated into the previous-node adjoint
            for s in 0..5 {
                let mut acc = 0.0;
                for r in 0..5 {
                    acc += jac[i][r][s] * w[5 * i + r];
                }
                lambda_prev[s] += acc;
            }
        }
        grad_alpha[step] = ga;
        grad_d[step] = gd;
        lambda = lambda_prev;
    }
    (grad_alpha, grad_d)
}

/// Projected-gradient ascent with Armijo backtracking over the box
/// `[0,1]^n x [0,d_max]^n`. Projection is exact, so every iterate is
/// feasible to the bit.
pub fn transcribe_and_optimize(spec: &DocpSpec, params: &ModelParams) -> Result<DocpSolution> {
    params.validate()?;
    spec.validate(params)?;
    // the integrator validates schedules against params.d_max; the box may
    // be tighter or looser, so run with a copy that carries the box bound
    let mut run_params = *params;
    run_params.d_max = spec.d_max;

    let n = spec.n_steps;
    let project = |theta: &mut [f64]| {
        for i in 0..n {
            theta[i] = theta[i].clamp(0.0, 1.0);
        }
        for i in n..2 * n {
            theta[i] = theta[i].clamp(0.0, spec.d_max);
        }
    };
    let to_schedule = |theta: &[f64]| {
        ControlSchedule::from_values(
            spec.t_f,
            theta[..n].to_vec(),
            theta[n..].to_vec(),
        )
        .expect("split arrays have equal length")
    };

    let mut theta: Vec<f64> = spec
        .initial_schedule
        .alpha_values
        .iter()
        .chain(spec.initial_schedule.d_values.iter())
        .copied()
        .collect();
    project(&mut theta);

    let mut traj = integrate(
        &spec.x0,
        &to_schedule(&theta),
        &run_params,
        IntegrationMethod::GaussLegendre2,
    )?;
    let mut objective = traj.total_harvest();

    let mut trace = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut gnorm = f64::NAN;
    let mut iterations = 0;
    // spectral (Barzilai-Borwein) initialization of the line-search step;
    // the raw control gradients are badly scaled, a unit step would crawl
    let mut step_init = spec.settings.armijo_init_step;
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;

    for iter in 0..spec.settings.max_iterations {
        iterations = iter + 1;
        let (ga, gd) = adjoint_from_trajectory(&traj, &run_params);
        let grad: Vec<f64> = ga.into_iter().chain(gd).collect();

        if let Some((prev_theta, prev_grad)) = &previous {
            let mut ss = 0.0;
            let mut sy = 0.0;
            for i in 0..2 * n {
                let s = theta[i] - prev_theta[i];
                let y = prev_grad[i] - grad[i];
                ss += s * s;
                sy += s * y;
            }
            step_init = if sy > 0.0 && ss > 0.0 {
                (ss / sy).clamp(1e-8, 1e8)
            } else {
                (step_init * 2.0).clamp(1e-8, 1e8)
            };
        }
        previous = Some((theta.clone(), grad.clone()));

        gnorm = 0.0;
        for i in 0..2 * n {
            let (lo, hi) = if i < n { (0.0, 1.0) } else { (0.0, spec.d_max) };
            let g = grad[i];
            let blocked = (theta[i] <= lo && g < 0.0) || (theta[i] >= hi && g > 0.0);
            if !blocked {
                gnorm = gnorm.max(g.abs());
            }
        }
        if gnorm < spec.settings.grad_tol {
            termination = Termination::GradientTolerance;
            trace.push(IterationRecord {
                iteration: iter,
                objective,
                projected_gradient_norm: gnorm,
                step: 0.0,
            });
            break;
        }

        // Armijo backtracking along the projection arc
        let mut step = step_init;
        let mut accepted = None;
        while step >= spec.settings.step_floor {
            let mut candidate = theta.clone();
            for i in 0..2 * n {
                candidate[i] += step * grad[i];
            }
            project(&mut candidate);
            let predicted: f64 = (0..2 * n)
                .map(|i| grad[i] * (candidate[i] - theta[i]))
                .sum();
            if predicted <= 0.0 {
                // projection annihilated the step
                step *= spec.settings.armijo_shrink;
                continue;
            }
            let cand_traj = integrate(
                &spec.x0,
                &to_schedule(&candidate),
                &run_params,
                IntegrationMethod::GaussLegendre2,
            )?;
            let cand_obj = cand_traj.total_harvest();
            if cand_obj >= objective + spec.settings.armijo_slope * predicted {
                accepted = Some((candidate, cand_traj, cand_obj));
                break;
            }
            step *= spec.settings.armijo_shrink;
        }

        match accepted {
            None => {
                termination = Termination::StalledLineSearch;
                trace.push(IterationRecord {
                    iteration: iter,
                    objective,
                    projected_gradient_norm: gnorm,
                    step: 0.0,
                });
                break;
            }
            Some((candidate, cand_traj, cand_obj)) => {
                let improvement = cand_obj - objective;
                theta = candidate;
                traj = cand_traj;
                objective = cand_obj;
                trace.push(IterationRecord {
                    iteration: iter,
                    objective,
                    projected_gradient_norm: gnorm,
                    step,
                });
                if improvement < spec.settings.improvement_tol {
                    termination = Termination::ImprovementTolerance;
                    break;
                }
            }
        }
    }

    let schedule = to_schedule(&theta);
    // re-simulate to guarantee the reported objective belongs to the schedule
    let final_traj = integrate(
        &spec.x0,
        &schedule,
        &run_params,
        IntegrationMethod::GaussLegendre2,
    )?;
    let objective = final_traj.total_harvest();
    Ok(DocpSolution {
        schedule,
        objective,
        trajectory: final_traj,
        gradient_norm_projected: gnorm,
        termination,
        iterations,
        trace,
        start_index: 0,
    })
}

/// Runs the ascent from the warm start (the static optimum held constant)
/// plus `starts - 1` random constant schedules, in parallel, and returns
/// the best solution. Ties resolve to the lowest start index.
pub fn multi_start(
    spec: &DocpSpec,
    params: &ModelParams,
    starts: usize,
    seed: u64,
) -> Result<DocpSolution> {
    let socp_opt = socp::coordinate_ascent(params, 0.5, 0.2)?;
    let warm = ControlSchedule::constant(
        socp_opt.alpha_bar,
        socp_opt.d_bar.min(spec.d_max),
        spec.t_f,
        spec.n_steps,
    );
    run_starts(spec, params, starts, seed, warm)
}

/// As [`multi_start`], but the first start is the spec's own initial
/// schedule instead of the static optimum.
pub fn multi_start_from(
    spec: &DocpSpec,
    params: &ModelParams,
    starts: usize,
    seed: u64,
) -> Result<DocpSolution> {
    run_starts(spec, params, starts, seed, spec.initial_schedule.clone())
}

fn run_starts(
    spec: &DocpSpec,
    params: &ModelParams,
    starts: usize,
    seed: u64,
    first: ControlSchedule,
) -> Result<DocpSolution> {
    if starts == 0 {
        return Err(Error::Config("multi-start needs starts >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schedules = vec![first];
    for _ in 1..starts {
        schedules.push(ControlSchedule::constant(
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..spec.d_max),
            spec.t_f,
            spec.n_steps,
        ));
    }

    let runs: Vec<Result<DocpSolution>> = schedules
        .into_par_iter()
        .enumerate()
        .map(|(idx, schedule)| {
            let mut run_spec = spec.clone();
            run_spec.initial_schedule = schedule;
            transcribe_and_optimize(&run_spec, params).map(|mut sol| {
                sol.start_index = idx;
                sol
            })
        })
        .collect();

    let mut best: Option<DocpSolution> = None;
    let mut errors = Vec::new();
    for run in runs {
        match run {
            Ok(sol) => {
                let replace = match &best {
                    None => true,
                    Some(b) => {
                        sol.objective > b.objective
                            || (sol.objective == b.objective && sol.start_index < b.start_index)
                    }
                };
                if replace {
                    best = Some(sol);
                }
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    best.ok_or_else(|| Error::Optimization(format!("all starts failed: {}", errors.join("; "))))
}
