//! Maximum-principle diagnostics for a candidate optimal trajectory.
//!
//! The Hamiltonian of the harvest problem is affine in both controls, so
//! each control has a switching function whose sign selects the bang value
//! and whose vanishing admits a singular arc. Costates are integrated
//! backward from the free-terminal-state condition `lambda(t_f) = 0` with
//! the same Gauss-Legendre scheme and mesh as the forward pass, and each
//! mesh interval is then labeled bang-low / bang-high / singular per
//! control. The cost multiplier is normalized to `lambda_0 = 1`: with a
//! free terminal state an abnormal extremal would force the costate to
//! vanish identically, contradicting nontriviality.

use crate::error::{Error, Result};
use crate::linalg::solve_dense;
use crate::model::{dynamics_unchecked, state_jacobian, ControlPoint, ModelParams, StateVector};
use crate::sim::{gl2, IntegrationMethod, Trajectory};

/// Default singular-arc detection threshold, relative to the largest
/// switching-function magnitude over the horizon.
pub const EPS_SINGULAR_REL: f64 = 1e-3;

/// Adjoint state at one instant, with the (normalized) cost multiplier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostateVector {
    pub lambda_s: f64,
    pub lambda_e: f64,
    pub lambda_v: f64,
    pub lambda_q: f64,
    pub lambda_c: f64,
    /// Cost multiplier; normalized to 1 for the normal extremal.
    pub lambda_0: f64,
}

impl CostateVector {
    pub fn as_array(&self) -> [f64; 5] {
        [
            self.lambda_s,
            self.lambda_e,
            self.lambda_v,
            self.lambda_q,
            self.lambda_c,
        ]
    }

    pub fn from_array(l: [f64; 5], lambda_0: f64) -> Self {
        CostateVector {
            lambda_s: l[0],
            lambda_e: l[1],
            lambda_v: l[2],
            lambda_q: l[3],
            lambda_c: l[4],
            lambda_0,
        }
    }
}

/// Costates at every mesh node of a trajectory, aligned with its times.
#[derive(Debug, Clone, PartialEq)]
pub struct CostatePath {
    pub times: Vec<f64>,
    pub costates: Vec<CostateVector>,
    pub lambda_0: f64,
}

/// Arc label of one mesh interval for one control.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcLabel {
    /// Switching function negative: the control should ride its lower bound.
    BangLow,
    /// Switching function positive: the control should ride its upper bound.
    BangHigh,
    /// Switching function inside the singular band.
    Singular,
}

impl std::fmt::Display for ArcLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArcLabel::BangLow => write!(f, "bang_low"),
            ArcLabel::BangHigh => write!(f, "bang_high"),
            ArcLabel::Singular => write!(f, "singular"),
        }
    }
}

/// Classification of one mesh interval for one control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcInterval {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub label: ArcLabel,
    /// Switching-function value on the interval (endpoint average).
    pub zeta: f64,
    /// Control value applied on the interval.
    pub control: f64,
    /// For non-singular intervals: control saturates the prescribed bound.
    pub consistent: bool,
}

/// Per-control arc sequences and consistency summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcReport {
    pub alpha_arcs: Vec<ArcInterval>,
    pub d_arcs: Vec<ArcInterval>,
    /// Fraction of non-singular alpha intervals with matching saturation.
    pub alpha_consistency: f64,
    /// Fraction of non-singular d intervals with matching saturation.
    pub d_consistency: f64,
    /// Whether the last interval of d is a high bang.
    pub final_d_bang_high: bool,
    /// Absolute singular bands used per control.
    pub eps_alpha: f64,
    pub eps_d: f64,
}

/// Hamiltonian `<lambda, f(x, u)> + lambda_0 * d * c`.
pub fn hamiltonian(
    x: &StateVector,
    lambda: &CostateVector,
    u: &ControlPoint,
    params: &ModelParams,
) -> f64 {
    let f = dynamics_unchecked(x, u, params);
    let l = lambda.as_array();
    let mut h = lambda.lambda_0 * u.d * x.c;
    for r in 0..5 {
        h += l[r] * f[r];
    }
    h
}

/// Control-free part of the Hamiltonian plus both switching functions:
/// `H = h_tilde + zeta_alpha * alpha + zeta_d * d`.
pub fn hamiltonian_decomposition(
    x: &StateVector,
    lambda: &CostateVector,
    params: &ModelParams,
) -> (f64, f64, f64) {
    let phi = params.phi(x.s);
    let rho = params.rho(x.v);
    let mu = crate::model::mu_unchecked(x.q, params);
    let h_tilde = -lambda.lambda_s * phi * x.e / params.gamma
        + lambda.lambda_e * phi * x.e
        - lambda.lambda_v * rho * x.c
        + lambda.lambda_q * (rho - mu * x.q)
        + lambda.lambda_c * mu * x.c;
    let (zeta_alpha, zeta_d) = switching_functions(x, lambda, params);
    (h_tilde, zeta_alpha, zeta_d)
}

/// Switching functions of the two controls:
/// `zeta_alpha = (beta*lambda_v - lambda_e) * phi(s) * e` and
/// `zeta_d = lambda_s*(s_in - s) - lambda_e*e - lambda_v*v + (lambda_0 - lambda_c)*c`.
pub fn switching_functions(
    x: &StateVector,
    lambda: &CostateVector,
    params: &ModelParams,
) -> (f64, f64) {
    let zeta_alpha = (params.beta * lambda.lambda_v - lambda.lambda_e) * params.phi(x.s) * x.e;
    let zeta_d = lambda.lambda_s * (params.s_in - x.s) - lambda.lambda_e * x.e
        - lambda.lambda_v * x.v
        + (lambda.lambda_0 - lambda.lambda_c) * x.c;
    (zeta_alpha, zeta_d)
}

/// Gradient of the Hamiltonian in the state, `dH/dx = J^T lambda + lambda_0 * d * e_c`.
fn hamiltonian_state_gradient(
    x: &StateVector,
    lambda: &[f64; 5],
    lambda_0: f64,
    u: &ControlPoint,
    params: &ModelParams,
) -> [f64; 5] {
    let jac = state_jacobian(x, u, params);
    let mut g = [0.0; 5];
    for s in 0..5 {
        for r in 0..5 {
            g[s] += jac[r][s] * lambda[r];
        }
    }
    g[4] += lambda_0 * u.d;
    g
}

/// Integrates the costate equations `lambda' = -dH/dx` backward from
/// `lambda(t_f) = 0` with the trajectory's own Gauss-Legendre mesh.
///
/// The costate dynamics are linear in the costate, so each backward stage
/// system is solved directly. The forward stage states are reused: the
/// symmetric stage abscissae make the backward stage times coincide with
/// the forward ones in reversed order.
pub fn integrate_costates(traj: &Trajectory, params: &ModelParams) -> Result<CostatePath> {
    if traj.method != IntegrationMethod::GaussLegendre2 || traj.stage_states.len() != traj.n_steps()
    {
        return Err(Error::Config(
            "costate integration needs a Gauss-Legendre trajectory with stage states".into(),
        ));
    }
    let lambda_0 = 1.0;
    let n = traj.n_steps();
    let h = traj.times[1] - traj.times[0];
    let mut costates = vec![[0.0f64; 5]; n + 1];

    for step in (0..n).rev() {
        let u = traj.controls[step];
        // backward stage i sees the forward stage 1 - i
        let xs = [&traj.stage_states[step][1], &traj.stage_states[step][0]];
        let jt: Vec<[[f64; 5]; 5]> = xs
            .iter()
            .map(|x| {
                let j = state_jacobian(x, &u, params);
                let mut t = [[0.0; 5]; 5];
                for r in 0..5 {
                    for s in 0..5 {
                        t[r][s] = j[s][r];
                    }
                }
                t
            })
            .collect();
        let lam_right = costates[step + 1];

        // stage system: k_i - h sum_j a_ij Jt_i k_j = dH/dx(x_i, lam_right)
        let mut mat = vec![vec![0.0f64; 10]; 10];
        let mut rhs = [0.0f64; 10];
        for i in 0..2 {
            let g = hamiltonian_state_gradient(xs[i], &lam_right, lambda_0, &u, params);
            for r in 0..5 {
                rhs[5 * i + r] = g[r];
                for j in 0..2 {
                    let a = h * gl2::A[i][j];
                    for s in 0..5 {
                        mat[5 * i + r][5 * j + s] = -a * jt[i][r][s];
                    }
                }
            }
        }
        for c in 0..10 {
            mat[c][c] += 1.0;
        }
        let mut k = rhs.to_vec();
        solve_dense(&mut mat, &mut k).map_err(|e| Error::Integration {
            step,
            message: format!("backward costate stage solve failed: {e}"),
        })?;

        let mut lam_left = lam_right;
        for r in 0..5 {
            lam_left[r] += h * (gl2::B[0] * k[r] + gl2::B[1] * k[5 + r]);
        }
        costates[step] = lam_left;
    }

    Ok(CostatePath {
        times: traj.times.clone(),
        costates: costates
            .into_iter()
            .map(|l| CostateVector::from_array(l, lambda_0))
            .collect(),
        lambda_0,
    })
}

/// Labels every mesh interval of both controls and summarizes sign
/// consistency. `epsilon_sing_rel` scales the singular band relative to
/// the largest switching-function magnitude of each control.
pub fn classify_arcs(
    traj: &Trajectory,
    costates: &CostatePath,
    epsilon_sing_rel: f64,
    params: &ModelParams,
) -> Result<ArcReport> {
    if costates.times.len() != traj.times.len() {
        return Err(Error::Config(format!(
            "mesh mismatch: {} costate nodes vs {} trajectory nodes",
            costates.times.len(),
            traj.times.len()
        )));
    }
    let n = traj.n_steps();
    let zetas: Vec<(f64, f64)> = (0..=n)
        .map(|i| switching_functions(&traj.states[i], &costates.costates[i], params))
        .collect();
    let max_abs_alpha = zetas.iter().map(|z| z.0.abs()).fold(0.0f64, f64::max);
    let max_abs_d = zetas.iter().map(|z| z.1.abs()).fold(0.0f64, f64::max);
    let eps_alpha = epsilon_sing_rel * max_abs_alpha;
    let eps_d = epsilon_sing_rel * max_abs_d;

    let classify = |zeta: f64, control: f64, lo: f64, hi: f64, eps: f64| {
        let sat_tol = 1e-6 * (hi - lo);
        if zeta.abs() <= eps {
            (ArcLabel::Singular, true)
        } else if zeta < 0.0 {
            (ArcLabel::BangLow, control <= lo + sat_tol)
        } else {
            (ArcLabel::BangHigh, control >= hi - sat_tol)
        }
    };

    let mut alpha_arcs = Vec::with_capacity(n);
    let mut d_arcs = Vec::with_capacity(n);
    for i in 0..n {
        let za = 0.5 * (zetas[i].0 + zetas[i + 1].0);
        let zd = 0.5 * (zetas[i].1 + zetas[i + 1].1);
        let u = traj.controls[i];
        let (label, consistent) = classify(za, u.alpha, 0.0, 1.0, eps_alpha);
        alpha_arcs.push(ArcInterval {
            index: i,
            t_start: traj.times[i],
            t_end: traj.times[i + 1],
            label,
            zeta: za,
            control: u.alpha,
            consistent,
        });
        let (label, consistent) = classify(zd, u.d, 0.0, params.d_max, eps_d);
        d_arcs.push(ArcInterval {
            index: i,
            t_start: traj.times[i],
            t_end: traj.times[i + 1],
            label,
            zeta: zd,
            control: u.d,
            consistent,
        });
    }

    let consistency = |arcs: &[ArcInterval]| {
        let non_singular: Vec<&ArcInterval> = arcs
            .iter()
            .filter(|a| a.label != ArcLabel::Singular)
            .collect();
        if non_singular.is_empty() {
            1.0
        } else {
            non_singular.iter().filter(|a| a.consistent).count() as f64 / non_singular.len() as f64
        }
    };
    let alpha_consistency = consistency(&alpha_arcs);
    let d_consistency = consistency(&d_arcs);
    let final_d_bang_high = d_arcs
        .last()
        .map(|a| a.label == ArcLabel::BangHigh && a.consistent)
        .unwrap_or(false);

    Ok(ArcReport {
        alpha_arcs,
        d_arcs,
        alpha_consistency,
        d_consistency,
        final_d_bang_high,
        eps_alpha,
        eps_d,
    })
}
