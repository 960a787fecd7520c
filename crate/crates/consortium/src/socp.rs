//! Static problem: the constant `(alpha, d)` maximizing the equilibrium
//! harvest rate `d * c*`.
//!
//! The reduced objective is strictly concave in `alpha` and strictly
//! log-concave in `d` on the feasible set, so each coordinate has a unique
//! maximizer and derivative-free golden-section searches are exact.
//! Sequential maximization (alpha, then d) is iterated to a partial
//! optimum; uniqueness is not guaranteed in theory, so multi-start
//! agreement is checked in tests rather than assumed.

use crate::equilibria::{derived_rates, psi_alpha_inverse, thresholds};
use crate::error::{Error, Result};
use crate::model::{mu_inverse, ModelParams};
use rayon::prelude::*;

/// Bracket-shrink tolerance of the golden-section line searches.
pub const GOLDEN_TOL: f64 = 1e-10;
/// Objective improvement threshold between ascent sweeps.
pub const SWEEP_IMPROVEMENT_TOL: f64 = 1e-12;
/// Coordinate movement threshold between ascent sweeps.
pub const SWEEP_MOVE_TOL: f64 = 1e-8;
/// Default sweep cap of the coordinate ascent.
pub const SWEEP_CAP: usize = 200;

/// Result of the coordinate ascent over the static problem.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSolution {
    /// Optimal allocation fraction.
    pub alpha_bar: f64,
    /// Optimal dilution rate (1/day).
    pub d_bar: f64,
    /// Equilibrium harvest rate at the optimum (g/L/day).
    pub objective: f64,
    /// Number of ascent sweeps performed.
    pub iterations: usize,
    /// Per-sweep `(alpha, d, objective)` records.
    pub trace: Vec<(f64, f64, f64)>,
}

/// Rectangular evaluation grid over the open control rectangle.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub n_alpha: usize,
    pub n_d: usize,
    /// Upper edge of the dilution axis (1/day).
    pub d_hi: f64,
}

/// Contour data for the static objective, with both ridge curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourGrid {
    pub alphas: Vec<f64>,
    pub ds: Vec<f64>,
    /// Row-major `values[i_alpha * n_d + i_d]`; `None` marks infeasible cells.
    pub values: Vec<Option<f64>>,
    /// Per grid `d`: the maximizing `alpha`, where any exists.
    pub ridge_alpha_of_d: Vec<(f64, Option<f64>)>,
    /// Per grid `alpha`: the maximizing `d`, where any exists.
    pub ridge_d_of_alpha: Vec<(f64, Option<f64>)>,
}

impl ContourGrid {
    pub fn value(&self, i_alpha: usize, i_d: usize) -> Option<f64> {
        self.values[i_alpha * self.ds.len() + i_d]
    }
}

/// Equilibrium harvest rate `d * c*(alpha, d)` through the reduced closed
/// form `(s_in - psi_alpha_inverse(d)) * (alpha*beta*gamma*d / mu_inverse(d))`.
///
/// Errors with [`Error::Infeasible`] when the coexistence equilibrium does
/// not exist at `(alpha, d)`.
pub fn static_objective(alpha: f64, d: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) || !(d > 0.0) {
        return Err(Error::Infeasible(format!(
            "functional equilibrium does not exist at alpha = {alpha}, d = {d}"
        )));
    }
    let rates = derived_rates(params);
    if d / (1.0 - alpha) >= params.phi(params.s_in) || d >= rates.psi_max {
        return Err(Error::Infeasible(format!(
            "functional equilibrium does not exist at alpha = {alpha}, d = {d}"
        )));
    }
    let s_req = psi_alpha_inverse(d, alpha, params)?;
    if s_req >= params.s_in {
        return Err(Error::Infeasible(format!(
            "functional equilibrium does not exist at alpha = {alpha}, d = {d}"
        )));
    }
    let q_star = mu_inverse(d, params)?;
    Ok((params.s_in - s_req) * (alpha * params.beta * params.gamma * d / q_star))
}

fn objective_or_neg_inf(alpha: f64, d: f64, params: &ModelParams) -> f64 {
    static_objective(alpha, d, params).unwrap_or(f64::NEG_INFINITY)
}

/// Golden-section search for the maximum of a unimodal function on
/// `[lo, hi]`; never evaluates the endpoints themselves.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618033988749895;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Open interval of allocations admitting the coexistence equilibrium at
/// fixed `d`, found from the convexity of the required glucose level.
pub fn feasible_alpha_interval(d: f64, params: &ModelParams) -> Result<(f64, f64)> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("d = {d} must be positive")));
    }
    let phi_sin = params.phi(params.s_in);
    if d >= phi_sin {
        return Err(Error::Infeasible(format!(
            "no bacterial equilibrium for any alpha at d = {d}"
        )));
    }
    let alpha_cap = (1.0 - d / phi_sin) * (1.0 - 1e-12);
    // required glucose level; +inf outside the domain of the closed forms
    let requirement = |alpha: f64| psi_alpha_inverse(d, alpha, params).unwrap_or(f64::INFINITY);
    // strictly convex in alpha: locate its minimum, then bisect both flanks
    let alpha_min = golden_max(|a| -requirement(a), 1e-12, alpha_cap, 1e-12);
    if requirement(alpha_min) >= params.s_in {
        return Err(Error::Infeasible(format!(
            "empty feasible alpha-interval at d = {d}"
        )));
    }
    let (mut lo, mut hi) = (1e-15, alpha_min);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if requirement(mid) < params.s_in {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha_lo = hi;
    let (mut lo, mut hi) = (alpha_min, alpha_cap);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if requirement(mid) < params.s_in {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_hi = lo;
    Ok((alpha_lo, alpha_hi))
}

/// Unique maximizer of the objective over `alpha` at fixed `d`, to 1e-10.
pub fn maximize_alpha(d: f64, params: &ModelParams) -> Result<f64> {
    let (alpha_lo, alpha_hi) = feasible_alpha_interval(d, params)?;
    Ok(golden_max(
        |a| objective_or_neg_inf(a, d, params),
        alpha_lo,
        alpha_hi,
        GOLDEN_TOL,
    ))
}

/// Unique maximizer of the objective over `d` at fixed `alpha`, to 1e-10.
///
/// Searches the log of the objective; strict log-concavity in `d` makes
/// the search exact.
pub fn maximize_d(alpha: f64, params: &ModelParams) -> Result<f64> {
    let th = thresholds(alpha, params)?;
    if th.degenerate || th.d1 <= 0.0 {
        return Err(Error::Infeasible(format!(
            "no coexistence window at alpha = {alpha}"
        )));
    }
    let log_objective = |d: f64| {
        let v = objective_or_neg_inf(alpha, d, params);
        if v > 0.0 {
            v.ln()
        } else {
            f64::NEG_INFINITY
        }
    };
    Ok(golden_max(
        log_objective,
        th.d1 * 1e-9,
        th.d1 * (1.0 - 1e-12),
        GOLDEN_TOL,
    ))
}

/// Alternating exact line searches (alpha first, then d) until neither the
/// objective nor the iterate moves. Every limit point is a partial optimum
/// by strict biconcavity of the log-objective.
pub fn coordinate_ascent(params: &ModelParams, alpha0: f64, d0: f64) -> Result<StaticSolution> {
    params.validate()?;
    let mut d = d0;
    let mut trace: Vec<(f64, f64, f64)> = Vec::new();
    // the first half-sweep replaces alpha0; it only seeds the trace
    if let Ok(objective) = static_objective(alpha0, d0, params) {
        trace.push((alpha0, d0, objective));
    }
    let mut prev: Option<(f64, f64, f64)> = None;
    for sweep in 1..=SWEEP_CAP {
        let alpha = maximize_alpha(d, params)?;
        d = maximize_d(alpha, params)?;
        let objective = static_objective(alpha, d, params)?;
        trace.push((alpha, d, objective));
        if let Some((pa, pd, pobj)) = prev {
            let improved = objective - pobj;
            if improved < SWEEP_IMPROVEMENT_TOL
                && (alpha - pa).abs() < SWEEP_MOVE_TOL
                && (d - pd).abs() < SWEEP_MOVE_TOL
            {
                return Ok(StaticSolution {
                    alpha_bar: alpha,
                    d_bar: d,
                    objective,
                    iterations: sweep,
                    trace,
                });
            }
        }
        prev = Some((alpha, d, objective));
    }
    Err(Error::Optimization(format!(
        "coordinate ascent exceeded {SWEEP_CAP} sweeps; last iterate {:?}",
        trace.last()
    )))
}

/// Evaluates the objective over a rectangular grid and both ridge curves.
/// Infeasible cells carry `None`, never zero.
pub fn contour_grid(params: &ModelParams, spec: &GridSpec) -> Result<ContourGrid> {
    params.validate()?;
    if spec.n_alpha == 0 || spec.n_d == 0 || !(spec.d_hi > 0.0) {
        return Err(Error::Config(format!("bad grid spec {spec:?}")));
    }
    let alphas: Vec<f64> = (0..spec.n_alpha)
        .map(|i| (i + 1) as f64 / (spec.n_alpha + 1) as f64)
        .collect();
    let ds: Vec<f64> = (0..spec.n_d)
        .map(|j| (j + 1) as f64 * spec.d_hi / (spec.n_d + 1) as f64)
        .collect();
    let values: Vec<Option<f64>> = alphas
        .par_iter()
        .flat_map_iter(|&alpha| {
            let ds = &ds;
            ds.iter()
                .map(move |&d| static_objective(alpha, d, params).ok())
        })
        .collect();
    let ridge_alpha_of_d: Vec<(f64, Option<f64>)> = ds
        .par_iter()
        .map(|&d| (d, maximize_alpha(d, params).ok()))
        .collect();
    let ridge_d_of_alpha: Vec<(f64, Option<f64>)> = alphas
        .par_iter()
        .map(|&alpha| (alpha, maximize_d(alpha, params).ok()))
        .collect();
    Ok(ContourGrid {
        alphas,
        ds,
        values,
        ridge_alpha_of_d,
        ridge_d_of_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::functional_equilibrium;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn objective_matches_reported_optimum_value() {
        let p = params();
        let f = static_objective(0.8251, 0.4409, &p).unwrap();
        assert_relative_eq!(f, 0.330786, max_relative = 1e-6);
    }

    #[test]
    fn objective_agrees_with_equilibrium_route() {
        // two algebraic routes to the same number
        let p = params();
        for alpha in [0.2, 0.4, 0.6, 0.8] {
            let th = thresholds(alpha, &p).unwrap();
            for frac in [0.15, 0.5, 0.85] {
                let d = th.d1 * frac;
                let reduced = static_objective(alpha, d, &p).unwrap();
                let x = functional_equilibrium(alpha, d, &p).unwrap().unwrap();
                assert_relative_eq!(reduced, d * x.c, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn objective_vanishes_toward_the_boundary() {
        let p = params();
        // shrink alpha along feasible pairs (d must shrink with alpha)
        let mut prev = f64::INFINITY;
        for alpha in [1e-2, 1e-4, 1e-6] {
            let d = 0.5 * thresholds(alpha, &p).unwrap().d1;
            let f = static_objective(alpha, d, &p).unwrap();
            assert!(f < prev, "objective should shrink with alpha");
            prev = f;
        }
        assert!(prev < 1e-3);
        // d -> 0+ at fixed alpha
        let f = static_objective(0.5, 1e-10, &p).unwrap();
        assert!(f < 1e-9);
        // out of domain errors
        assert!(static_objective(0.8251, 0.95, &p).is_err());
        assert!(static_objective(0.0, 0.3, &p).is_err());
    }

    #[test]
    fn alpha_line_search_reference_point() {
        let p = params();
        let alpha = maximize_alpha(0.4409, &p).unwrap();
        assert_relative_eq!(alpha, 0.8251, epsilon = 1e-3);
    }

    #[test]
    fn alpha_concavity_midpoint_probe() {
        let p = params();
        let d = 0.3;
        let (lo, hi) = feasible_alpha_interval(d, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(901);
        for _ in 0..50 {
            let a: f64 = rng.random_range(lo..hi);
            let b: f64 = rng.random_range(lo..hi);
            if (a - b).abs() < 1e-6 {
                continue;
            }
            let mid = static_objective(0.5 * (a + b), d, &p).unwrap();
            let ends =
                0.5 * (static_objective(a, d, &p).unwrap() + static_objective(b, d, &p).unwrap());
            assert!(mid > ends, "concavity violated at a = {a}, b = {b}");
        }
    }

    #[test]
    fn alpha_search_near_upper_dilution_limit() {
        let p = params();
        // close below the largest d admitting coexistence for any alpha
        let mut d_sup: f64 = 0.0;
        for k in 1..100 {
            let alpha = k as f64 / 100.0;
            d_sup = d_sup.max(thresholds(alpha, &p).unwrap().d1);
        }
        let d = 0.995 * d_sup;
        let alpha = maximize_alpha(d, &p).unwrap();
        let (lo, hi) = feasible_alpha_interval(d, &p).unwrap();
        assert!(lo < alpha && alpha < hi);
        assert!(static_objective(alpha, d, &p).unwrap() > 0.0);
    }

    #[test]
    fn d_line_search_reference_point() {
        let p = params();
        let d = maximize_d(0.8251, &p).unwrap();
        assert_relative_eq!(d, 0.4409, epsilon = 1e-3);
    }

    #[test]
    fn d_log_concavity_midpoint_probe() {
        let p = params();
        let alpha = 0.5;
        let d1 = thresholds(alpha, &p).unwrap().d1;
        let mut rng = ChaCha8Rng::seed_from_u64(902);
        for _ in 0..50 {
            let a: f64 = rng.random_range(d1 * 1e-3..d1 * (1.0 - 1e-6));
            let b: f64 = rng.random_range(d1 * 1e-3..d1 * (1.0 - 1e-6));
            if (a - b).abs() < 1e-9 {
                continue;
            }
            let mid = static_objective(alpha, 0.5 * (a + b), &p).unwrap().ln();
            let ends = 0.5
                * (static_objective(alpha, a, &p).unwrap().ln()
                    + static_objective(alpha, b, &p).unwrap().ln());
            assert!(mid > ends, "log-concavity violated at a = {a}, b = {b}");
        }
    }

    #[test]
    fn d_maximizer_is_interior() {
        let p = params();
        let alpha = 0.5;
        let d1 = thresholds(alpha, &p).unwrap().d1;
        let d = maximize_d(alpha, &p).unwrap();
        assert!(d > 1e-4 * d1 && d < d1 * (1.0 - 1e-6), "d = {d}, d1 = {d1}");
    }

    #[test]
    fn ascent_finds_reported_optimum() {
        let p = params();
        let sol = coordinate_ascent(&p, 0.5, 0.2).unwrap();
        assert_relative_eq!(sol.alpha_bar, 0.8251, epsilon = 2e-3);
        assert_relative_eq!(sol.d_bar, 0.4409, epsilon = 2e-3);
        assert_relative_eq!(sol.objective, 0.330786, epsilon = 5e-4);
        assert!(sol.iterations <= SWEEP_CAP);
        assert!(!sol.trace.is_empty());
        // invariant: stored objective is the recomputed one
        let again = static_objective(sol.alpha_bar, sol.d_bar, &p).unwrap();
        assert_relative_eq!(sol.objective, again, max_relative = 1e-12);
    }

    #[test]
    fn ascent_multi_start_agreement() {
        let p = params();
        let a = coordinate_ascent(&p, 0.5, 0.2).unwrap();
        let b = coordinate_ascent(&p, 0.9, 0.6).unwrap();
        assert!((a.alpha_bar - b.alpha_bar).abs() < 1e-4);
        assert!((a.d_bar - b.d_bar).abs() < 1e-4);
        // degenerate start on the alpha-axis boundary still converges
        let c = coordinate_ascent(&p, 1e-6, 0.2).unwrap();
        assert!((a.alpha_bar - c.alpha_bar).abs() < 1e-4);
        assert!((a.d_bar - c.d_bar).abs() < 1e-4);
    }

    #[test]
    fn ascent_first_order_conditions() {
        let p = params();
        let sol = coordinate_ascent(&p, 0.5, 0.2).unwrap();
        let h = 1e-6;
        let da = (static_objective(sol.alpha_bar + h, sol.d_bar, &p).unwrap()
            - static_objective(sol.alpha_bar - h, sol.d_bar, &p).unwrap())
            / (2.0 * h);
        let dd = (static_objective(sol.alpha_bar, sol.d_bar + h, &p).unwrap()
            - static_objective(sol.alpha_bar, sol.d_bar - h, &p).unwrap())
            / (2.0 * h);
        assert!(da.abs() < 1e-6, "df/dalpha = {da}");
        assert!(dd.abs() < 1e-6, "df/dd = {dd}");
    }

    #[test]
    fn contour_grid_marks_infeasible_and_respects_optimum() {
        let p = params();
        let sol = coordinate_ascent(&p, 0.5, 0.2).unwrap();
        let grid = contour_grid(
            &p,
            &GridSpec {
                n_alpha: 40,
                n_d: 40,
                d_hi: 1.0,
            },
        )
        .unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut best_cell = (0usize, 0usize);
        for (i, &alpha) in grid.alphas.iter().enumerate() {
            let d1 = thresholds(alpha, &p).unwrap().d1;
            for (j, &d) in grid.ds.iter().enumerate() {
                match grid.value(i, j) {
                    Some(v) => {
                        assert!(d < d1, "feasible cell above d1 at ({alpha}, {d})");
                        assert!(v <= sol.objective + 1e-12, "cell beats the optimum");
                        if v > best {
                            best = v;
                            best_cell = (i, j);
                        }
                    }
                    None => {
                        assert!(
                            d >= d1 * (1.0 - 1e-9),
                            "infeasible cell below d1 at ({alpha}, {d})"
                        );
                    }
                }
            }
        }
        // the best cell sits next to the ascent optimum
        let da = grid.alphas[1] - grid.alphas[0];
        let dd = grid.ds[1] - grid.ds[0];
        assert!((grid.alphas[best_cell.0] - sol.alpha_bar).abs() <= da);
        assert!((grid.ds[best_cell.1] - sol.d_bar).abs() <= dd);
        // ridge curves exist where the cells are feasible
        for (d, ridge) in &grid.ridge_alpha_of_d {
            if *d < 0.85 {
                assert!(ridge.is_some(), "missing alpha-ridge at d = {d}");
            }
        }
        for (_, ridge) in &grid.ridge_d_of_alpha {
            assert!(ridge.is_some());
        }
    }
}
