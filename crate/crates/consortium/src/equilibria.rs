//! Closed-form equilibria of the consortium under constant controls,
//! their existence thresholds and global stability classification.
//!
//! For constant `(alpha, d)` the model has up to three steady states:
//! total washout, an algae-free state with bacteria at equilibrium, and a
//! functional state where both species coexist. The coexistence threshold
//! `d1` and the bacterial threshold `d2 = (1 - alpha) * phi(s_in)` split
//! the dilution axis into three regimes, each with exactly one globally
//! asymptotically stable point.

use crate::error::{Error, Result};
use crate::model::{
    monod_inverse, monod_unchecked, mu_inverse, state_jacobian, ControlPoint, ModelParams,
    StateVector,
};

/// Absolute bisection tolerance for the coexistence threshold `d1`.
pub const D1_BISECTION_TOL: f64 = 1e-12;

/// Exclusion band around the bifurcation values `d1`, `d2`.
pub const BIFURCATION_TOL: f64 = 1e-9;

/// Stability label of one equilibrium under constant controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// Globally asymptotically stable on the relevant domain.
    Gas,
    Unstable,
    Nonexistent,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Gas => write!(f, "GAS"),
            Stability::Unstable => write!(f, "unstable"),
            Stability::Nonexistent => write!(f, "nonexistent"),
        }
    }
}

/// The quota-limited algal growth rate as a function of dissolved vitamin,
/// reduced to Monod form: `psi(v) = psi_max * v / (k_c + v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// Supremum of the reduced algal growth rate (1/day); below `mu_max`.
    pub psi_max: f64,
    /// Half-saturation of the reduced rate (mg/L).
    pub k_c: f64,
}

impl DerivedRates {
    /// Reduced growth rate at vitamin level `v`.
    pub fn psi(&self, v: f64) -> f64 {
        monod_unchecked(v, self.psi_max, self.k_c)
    }

    /// Vitamin level sustaining reduced growth rate `y`; needs `0 < y < psi_max`.
    pub fn psi_inverse(&self, y: f64) -> Result<f64> {
        monod_inverse(y, self.psi_max, self.k_c)
    }
}

/// All equilibria at one constant `(alpha, d)`, with thresholds and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub alpha: f64,
    pub d: f64,
    /// Total washout point; always exists.
    pub washout: StateVector,
    /// Algae-free point with bacteria at steady state; exists for `d < d2`.
    pub algal_washout: Option<StateVector>,
    /// Coexistence point; exists for `d < d1`.
    pub functional: Option<StateVector>,
    /// Coexistence threshold (1/day).
    pub d1: f64,
    /// Bacterial persistence threshold (1/day).
    pub d2: f64,
    pub washout_stability: Stability,
    pub algal_washout_stability: Stability,
    pub functional_stability: Stability,
}

impl EquilibriumReport {
    /// The equilibrium labeled GAS.
    pub fn gas_point(&self) -> StateVector {
        if self.functional_stability == Stability::Gas {
            self.functional.expect("functional labeled GAS must exist")
        } else if self.algal_washout_stability == Stability::Gas {
            self.algal_washout
                .expect("algal washout labeled GAS must exist")
        } else {
            self.washout
        }
    }

    /// Name of the GAS equilibrium, for reports.
    pub fn gas_label(&self) -> &'static str {
        if self.functional_stability == Stability::Gas {
            "functional"
        } else if self.algal_washout_stability == Stability::Gas {
            "algal_washout"
        } else {
            "washout"
        }
    }
}

/// Existence thresholds at a fixed allocation `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    /// Coexistence threshold `d1` (1/day); zero when degenerate.
    pub d1: f64,
    /// Bacterial persistence threshold `d2` (1/day).
    pub d2: f64,
    /// Set when `alpha` is 0 or 1 and `d1` collapses to zero
    /// (no vitamin production / no bacterial growth).
    pub degenerate: bool,
}

/// Reduction of the algal subsystem to Monod form.
pub fn derived_rates(params: &ModelParams) -> DerivedRates {
    let den = params.rho_max + params.q_min * params.mu_max;
    DerivedRates {
        psi_max: params.mu_max * params.rho_max / den,
        k_c: params.k_v * params.q_min * params.mu_max / den,
    }
}

/// Glucose level required to sustain coexistence at dilution `y` under
/// allocation `alpha`; strictly increasing in `y`.
///
/// Defined for `0 < y < min((1-alpha)*phi_max, psi_max)` and `0 < alpha < 1`.
pub fn psi_alpha_inverse(y: f64, alpha: f64, params: &ModelParams) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "psi_alpha requires 0 < alpha < 1, got {alpha}"
        )));
    }
    let rates = derived_rates(params);
    let s_bac = monod_inverse(y / (1.0 - alpha), params.phi_max, params.k_s)?;
    let v_req = rates.psi_inverse(y)?;
    Ok(s_bac + v_req / (alpha * params.beta * params.gamma))
}

/// Bacterial steady state `(s*, e*)`; `None` when dilution washes bacteria out.
pub fn bacterial_equilibrium(
    alpha: f64,
    d: f64,
    params: &ModelParams,
) -> Result<Option<(f64, f64)>> {
    if !(0.0..=1.0).contains(&alpha) || d < 0.0 {
        return Err(Error::Domain(format!(
            "inadmissible controls alpha = {alpha}, d = {d}"
        )));
    }
    if d == 0.0 {
        // limit point: bacteria consume all glucose
        return Ok(Some((0.0, (1.0 - alpha) * params.gamma * params.s_in)));
    }
    if alpha >= 1.0 {
        return Ok(None);
    }
    let growth = d / (1.0 - alpha);
    if growth >= params.phi(params.s_in) {
        return Ok(None);
    }
    let s_star = monod_inverse(growth, params.phi_max, params.k_s)?;
    let e_star = (1.0 - alpha) * params.gamma * (params.s_in - s_star);
    Ok(Some((s_star, e_star)))
}

/// Steady-state vitamin supply rate ratio seen by the algae (mg/L).
///
/// Zero at bacterial washout, `alpha*beta*gamma*(s_in - s*)` otherwise.
pub fn vitamin_feed(alpha: f64, d: f64, params: &ModelParams) -> Result<f64> {
    match bacterial_equilibrium(alpha, d, params)? {
        Some((s_star, _)) => Ok(alpha * params.beta * params.gamma * (params.s_in - s_star)),
        None => Ok(0.0),
    }
}

/// Coexistence steady state, `None` when it does not exist.
pub fn functional_equilibrium(
    alpha: f64,
    d: f64,
    params: &ModelParams,
) -> Result<Option<StateVector>> {
    if !(0.0..=1.0).contains(&alpha) || d < 0.0 {
        return Err(Error::Domain(format!(
            "inadmissible controls alpha = {alpha}, d = {d}"
        )));
    }
    if alpha == 0.0 || alpha == 1.0 {
        return Ok(None);
    }
    let rates = derived_rates(params);
    if d == 0.0 {
        // limit point of the closed forms as d -> 0+
        let v_in = alpha * params.beta * params.gamma * params.s_in;
        return Ok(Some(StateVector::new(
            0.0,
            (1.0 - alpha) * params.gamma * params.s_in,
            0.0,
            params.q_min,
            v_in / params.q_min,
        )));
    }
    if d / (1.0 - alpha) >= params.phi(params.s_in) || d >= rates.psi_max {
        return Ok(None);
    }
    if psi_alpha_inverse(d, alpha, params)? >= params.s_in {
        return Ok(None);
    }
    let (s_star, e_star) = bacterial_equilibrium(alpha, d, params)?
        .expect("bacterial equilibrium exists below d2");
    let v_in = alpha * params.beta * params.gamma * (params.s_in - s_star);
    let v_star = rates.psi_inverse(d)?;
    let q_star = mu_inverse(d, params)?;
    let c_star = (v_in - v_star) / q_star;
    Ok(Some(StateVector::new(s_star, e_star, v_star, q_star, c_star)))
}

/// Existence thresholds `(d1, d2)` at fixed `alpha`.
///
/// `d1` has no closed form; it is found by bisection on the strictly
/// increasing map `y -> psi_alpha_inverse(y)` to absolute tolerance 1e-12.
pub fn thresholds(alpha: f64, params: &ModelParams) -> Result<Thresholds> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0, 1]")));
    }
    let d2 = (1.0 - alpha) * params.phi(params.s_in);
    if alpha == 0.0 || alpha == 1.0 {
        return Ok(Thresholds {
            d1: 0.0,
            d2,
            degenerate: true,
        });
    }
    let rates = derived_rates(params);
    let hi_cap = d2.min(rates.psi_max);
    let mut lo = 0.0;
    let mut hi = hi_cap * (1.0 - 1e-15);
    // psi_alpha_inverse grows from 0 to above s_in on (0, hi_cap)
    while hi - lo > D1_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if psi_alpha_inverse(mid, alpha, params)? < params.s_in {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Thresholds {
        d1: 0.5 * (lo + hi),
        d2,
        degenerate: false,
    })
}

/// Full equilibrium report with the global stability pattern.
///
/// Refuses dilution rates within [`BIFURCATION_TOL`] of a threshold.
pub fn classify_stability(alpha: f64, d: f64, params: &ModelParams) -> Result<EquilibriumReport> {
    let th = thresholds(alpha, params)?;
    for t in [th.d1, th.d2] {
        if t > 0.0 && (d - t).abs() <= BIFURCATION_TOL {
            return Err(Error::Bifurcation { d, threshold: t });
        }
    }
    let washout = StateVector::new(params.s_in, 0.0, 0.0, params.q_min, 0.0);
    let algal_washout = match bacterial_equilibrium(alpha, d, params)? {
        Some((s_star, e_star)) if d < th.d2 => {
            let v_in = alpha * params.beta * params.gamma * (params.s_in - s_star);
            let q0 = params.q_min + params.rho(v_in) / params.mu_max;
            Some(StateVector::new(s_star, e_star, v_in, q0, 0.0))
        }
        _ => None,
    };
    let functional = functional_equilibrium(alpha, d, params)?;

    let (ws, aws, fs) = if functional.is_some() {
        (Stability::Unstable, Stability::Unstable, Stability::Gas)
    } else if algal_washout.is_some() {
        (Stability::Unstable, Stability::Gas, Stability::Nonexistent)
    } else {
        (Stability::Gas, Stability::Nonexistent, Stability::Nonexistent)
    };

    Ok(EquilibriumReport {
        alpha,
        d,
        washout,
        algal_washout,
        functional,
        d1: th.d1,
        d2: th.d2,
        washout_stability: ws,
        algal_washout_stability: aws,
        functional_stability: fs,
    })
}

/// Numerical Jacobian of the vector field by central differences with a
/// relative step of 1e-6. Diagnostic companion to the analytic Jacobian.
pub fn numerical_jacobian(
    x: &StateVector,
    u: &ControlPoint,
    params: &ModelParams,
) -> Result<[[f64; 5]; 5]> {
    let base = x.as_array();
    let mut jac = [[0.0; 5]; 5];
    for j in 0..5 {
        let h = 1e-6 * base[j].abs().max(1e-6);
        let mut xp = base;
        let mut xm = base;
        xp[j] += h;
        xm[j] -= h;
        let fp = crate::model::dynamics_unchecked(&StateVector::from_array(xp), u, params);
        let fm = crate::model::dynamics_unchecked(&StateVector::from_array(xm), u, params);
        for i in 0..5 {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Eigenvalues of the linearization at `x` as `(re, im)` pairs, for local
/// stability diagnostics. Characteristic polynomial by Faddeev-LeVerrier,
/// roots by Durand-Kerner iteration.
pub fn linearization_eigenvalues(
    x: &StateVector,
    u: &ControlPoint,
    params: &ModelParams,
) -> [(f64, f64); 5] {
    let jac = state_jacobian(x, u, params);
    let coeffs = characteristic_polynomial(&jac);
    polynomial_roots(&coeffs)
}

/// Monic characteristic polynomial coefficients `[c0, c1, c2, c3, c4]` of a
/// 5x5 matrix: `l^5 + c4 l^4 + ... + c0`.
fn characteristic_polynomial(a: &[[f64; 5]; 5]) -> [f64; 5] {
    let matmul = |x: &[[f64; 5]; 5], y: &[[f64; 5]; 5]| {
        let mut out = [[0.0; 5]; 5];
        for i in 0..5 {
            for k in 0..5 {
                let xik = x[i][k];
                if xik == 0.0 {
                    continue;
                }
                for j in 0..5 {
                    out[i][j] += xik * y[k][j];
                }
            }
        }
        out
    };
    let trace = |x: &[[f64; 5]; 5]| (0..5).map(|i| x[i][i]).sum::<f64>();
    let mut m = *a;
    let mut coeffs = [0.0; 5];
    let mut c = -trace(&m);
    coeffs[4] = c;
    for k in 2..=5 {
        let mut shifted = m;
        for i in 0..5 {
            shifted[i][i] += c;
        }
        m = matmul(a, &shifted);
        c = -trace(&m) / k as f64;
        coeffs[5 - k] = c;
    }
    coeffs
}

/// Roots of a monic quintic by Durand-Kerner, returned as `(re, im)`.
fn polynomial_roots(coeffs: &[f64; 5]) -> [(f64, f64); 5] {
    let cadd = |a: (f64, f64), b: (f64, f64)| (a.0 + b.0, a.1 + b.1);
    let csub = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0, a.1 - b.1);
    let cmul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let cdiv = |a: (f64, f64), b: (f64, f64)| {
        let den = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / den, (a.1 * b.0 - a.0 * b.1) / den)
    };
    let eval = |z: (f64, f64)| {
        let mut p = (1.0, 0.0);
        for k in (0..5).rev() {
            p = cadd(cmul(p, z), (coeffs[k], 0.0));
        }
        p
    };
    // scale the start circle to the coefficient magnitude
    let radius = 1.0 + coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut roots = [(0.0, 0.0); 5];
    let seed = (0.4, 0.9);
    let mut z = (1.0, 0.0);
    for r in roots.iter_mut() {
        z = cmul(z, seed);
        *r = (z.0 * radius, z.1 * radius);
    }
    for _ in 0..200 {
        let mut max_step = 0.0f64;
        for i in 0..5 {
            let mut denom = (1.0, 0.0);
            for j in 0..5 {
                if i != j {
                    denom = cmul(denom, csub(roots[i], roots[j]));
                }
            }
            let step = cdiv(eval(roots[i]), denom);
            roots[i] = csub(roots[i], step);
            max_step = max_step.max(step.0.abs().max(step.1.abs()));
        }
        if max_step < 1e-13 * radius.max(1.0) {
            break;
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    /// Independent bisection on the raw existence condition, used as the
    /// oracle for `thresholds`.
    fn d1_bisect_oracle(alpha: f64, p: &ModelParams) -> f64 {
        let rates = derived_rates(p);
        let d2 = (1.0 - alpha) * p.phi(p.s_in);
        let mut lo = 0.0;
        let mut hi = d2.min(rates.psi_max) * (1.0 - 1e-14);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let g = psi_alpha_inverse(mid, alpha, p).unwrap();
            if g < p.s_in {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn bacterial_equilibrium_reference_point() {
        let p = params();
        let (s, e) = bacterial_equilibrium(0.8251, 0.4409, &p).unwrap().unwrap();
        assert_relative_eq!(s, 0.05730505508, max_relative = 1e-9);
        assert_relative_eq!(e, 0.03406803218, max_relative = 1e-9);
    }

    #[test]
    fn bacterial_equilibrium_none_above_d2() {
        let p = params();
        // d2(0.8251) ~ 0.96047
        assert!(bacterial_equilibrium(0.8251, 1.0, &p).unwrap().is_none());
        assert!(bacterial_equilibrium(0.8251, 0.9605, &p).unwrap().is_none());
        assert!(bacterial_equilibrium(1.0, 0.1, &p).unwrap().is_none());
    }

    #[test]
    fn bacterial_equilibrium_low_dilution_limit() {
        let p = params();
        let (s, e) = bacterial_equilibrium(0.0, 1e-12, &p).unwrap().unwrap();
        assert!(s < 1e-12);
        assert_relative_eq!(e, p.gamma * p.s_in, max_relative = 1e-9);
        let (s0, e0) = bacterial_equilibrium(0.0, 0.0, &p).unwrap().unwrap();
        assert_eq!(s0, 0.0);
        assert_relative_eq!(e0, p.gamma * p.s_in, max_relative = 1e-15);
    }

    #[test]
    fn vitamin_feed_values() {
        let p = params();
        assert_eq!(vitamin_feed(0.0, 0.3, &p).unwrap(), 0.0);
        let v = vitamin_feed(0.8251, 0.4409, &p).unwrap();
        assert_relative_eq!(v, 3.69650810242, max_relative = 1e-9);
        // past washout the feed vanishes
        assert_eq!(vitamin_feed(0.8251, 1.2, &p).unwrap(), 0.0);
    }

    #[test]
    fn derived_rates_reference_values() {
        let p = params();
        let r = derived_rates(&p);
        assert_relative_eq!(r.psi_max, 0.92546535662, max_relative = 1e-10);
        assert_relative_eq!(r.k_c, 0.05338531655, max_relative = 1e-10);
        assert!(r.psi_max < p.mu_max);
        // inverse composition
        let y = 0.5 * r.psi_max;
        assert_relative_eq!(r.psi(r.psi_inverse(y).unwrap()), y, max_relative = 1e-13);
    }

    #[test]
    fn functional_equilibrium_reference_point() {
        let p = params();
        let x = functional_equilibrium(0.8251, 0.4409, &p).unwrap().unwrap();
        assert_relative_eq!(x.v, 0.04857463652, max_relative = 1e-9);
        assert_relative_eq!(x.q, 4.86228038607, max_relative = 1e-9);
        assert_relative_eq!(x.c, 0.75025156434, max_relative = 1e-9);
        assert!(x.c > 0.0);
    }

    #[test]
    fn functional_equilibrium_gone_above_d1() {
        let p = params();
        assert!(functional_equilibrium(0.8251, 0.95, &p).unwrap().is_none());
    }

    #[test]
    fn functional_equilibrium_low_dilution_limits() {
        let p = params();
        let x = functional_equilibrium(0.5, 1e-10, &p).unwrap().unwrap();
        assert!(x.v < 1e-9);
        assert_relative_eq!(x.q, p.q_min, max_relative = 1e-9);
        let v_in = vitamin_feed(0.5, 1e-10, &p).unwrap();
        assert_relative_eq!(x.c, v_in / x.q, max_relative = 1e-6);
    }

    #[test]
    fn equilibria_are_fixed_points_of_the_dynamics() {
        let p = params();
        let report = classify_stability(0.8251, 0.4409, &p).unwrap();
        let u = ControlPoint::new(0.8251, 0.4409);
        let mut points = vec![report.washout];
        points.extend(report.algal_washout);
        points.extend(report.functional);
        assert_eq!(points.len(), 3);
        for x in points {
            let dx = crate::model::dynamics(&x, &u, &p).unwrap();
            let norm = dx.iter().map(|r| r * r).sum::<f64>().sqrt();
            assert!(norm < 1e-10, "residual {norm} at {x:?}");
        }
    }

    #[test]
    fn thresholds_reference_values() {
        let p = params();
        let th = thresholds(0.8251, &p).unwrap();
        assert_relative_eq!(th.d2, 0.96046779661, max_relative = 1e-10);
        assert!(th.d1 > 0.88 && th.d1 < 0.90, "d1 = {}", th.d1);
        let oracle = d1_bisect_oracle(0.8251, &p);
        assert_relative_eq!(th.d1, oracle, epsilon = 1e-11);
        assert!(!th.degenerate);
    }

    #[test]
    fn thresholds_order_and_degeneracy() {
        let p = params();
        for alpha in [0.1, 0.5, 0.9] {
            let th = thresholds(alpha, &p).unwrap();
            assert!(th.d1 < th.d2, "d1 < d2 violated at alpha = {alpha}");
            assert!(th.d1 > 0.0);
        }
        for alpha in [0.0, 1.0] {
            let th = thresholds(alpha, &p).unwrap();
            assert_eq!(th.d1, 0.0);
            assert!(th.degenerate);
        }
    }

    #[test]
    fn d1_vanishes_toward_allocation_extremes() {
        let p = params();
        let mid = thresholds(0.5, &p).unwrap().d1;
        let near0 = thresholds(0.01, &p).unwrap().d1;
        let very0 = thresholds(1e-5, &p).unwrap().d1;
        let near1 = thresholds(0.99, &p).unwrap().d1;
        assert!(near0 < mid && near1 < mid);
        assert!(very0 < 0.01 * mid, "d1(1e-5) = {very0}");
        assert!(near1 < 0.06, "d1(0.99) = {near1}");
    }

    #[test]
    fn psi_alpha_inverse_strictly_increasing() {
        let p = params();
        let alpha = 0.8251;
        let th = thresholds(alpha, &p).unwrap();
        // the map is defined up to min(d2, psi_max)
        let cap = th.d2.min(derived_rates(&p).psi_max) * (1.0 - 1e-12);
        let mut prev = 0.0;
        for k in 1..=100 {
            let y = cap * k as f64 / 101.0;
            let g = psi_alpha_inverse(y, alpha, &p).unwrap();
            assert!(g > prev, "not increasing at y = {y}");
            prev = g;
        }
    }

    #[test]
    fn functional_equilibrium_ordering_properties() {
        let p = params();
        for alpha in [0.2, 0.5, 0.8] {
            let th = thresholds(alpha, &p).unwrap();
            for frac in [0.1, 0.5, 0.9] {
                let d = th.d1 * frac;
                let x = functional_equilibrium(alpha, d, &p).unwrap().unwrap();
                let v_in = vitamin_feed(alpha, d, &p).unwrap();
                assert!(x.v < v_in);
                assert!(x.q > p.q_min);
                assert!(x.s < p.s_in);
            }
        }
    }

    #[test]
    fn classification_over_the_three_regimes() {
        let p = params();
        let r = classify_stability(0.8251, 0.4409, &p).unwrap();
        assert_eq!(r.functional_stability, Stability::Gas);
        assert_eq!(r.algal_washout_stability, Stability::Unstable);
        assert_eq!(r.washout_stability, Stability::Unstable);
        assert_eq!(r.gas_label(), "functional");

        let r = classify_stability(0.8251, 0.93, &p).unwrap();
        assert_eq!(r.functional_stability, Stability::Nonexistent);
        assert_eq!(r.algal_washout_stability, Stability::Gas);
        assert_eq!(r.washout_stability, Stability::Unstable);

        let r = classify_stability(0.8251, 1.2, &p).unwrap();
        assert_eq!(r.washout_stability, Stability::Gas);
        assert_eq!(r.algal_washout_stability, Stability::Nonexistent);
        assert_eq!(r.functional_stability, Stability::Nonexistent);
    }

    #[test]
    fn exactly_one_gas_label() {
        let p = params();
        for (alpha, d) in [(0.3, 0.2), (0.3, 1.5), (0.3, 4.2), (0.8251, 0.5), (0.9, 0.57)] {
            let r = classify_stability(alpha, d, &p).unwrap();
            let gas_count = [
                r.washout_stability,
                r.algal_washout_stability,
                r.functional_stability,
            ]
            .iter()
            .filter(|s| **s == Stability::Gas)
            .count();
            assert_eq!(gas_count, 1, "at ({alpha}, {d})");
        }
    }

    #[test]
    fn classification_refuses_bifurcation_values() {
        let p = params();
        let th = thresholds(0.8251, &p).unwrap();
        assert!(matches!(
            classify_stability(0.8251, th.d1, &p),
            Err(Error::Bifurcation { .. })
        ));
        assert!(matches!(
            classify_stability(0.8251, th.d2 + 0.5e-9, &p),
            Err(Error::Bifurcation { .. })
        ));
    }

    #[test]
    fn numerical_jacobian_agrees_with_analytic() {
        let p = params();
        let x = StateVector::new(0.3, 0.05, 0.6, 5.0, 0.4);
        let u = ControlPoint::new(0.7, 0.4);
        let num = numerical_jacobian(&x, &u, &p).unwrap();
        let ana = state_jacobian(&x, &u, &p);
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(num[i][j], ana[i][j], max_relative = 1e-5, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn eigenvalue_solver_on_known_matrix() {
        // block diagonal: eigenvalues -1, -2, -3, -0.5 +/- 2i
        let m = [
            [-1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, -2.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, -3.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -0.5, 2.0],
            [0.0, 0.0, 0.0, -2.0, -0.5],
        ];
        let coeffs = characteristic_polynomial(&m);
        let mut roots = polynomial_roots(&coeffs).to_vec();
        roots.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert_relative_eq!(roots[0].0, -3.0, max_relative = 1e-8);
        assert_relative_eq!(roots[1].0, -2.0, max_relative = 1e-8);
        assert_relative_eq!(roots[2].0, -1.0, max_relative = 1e-8);
        assert_relative_eq!(roots[3].0, -0.5, max_relative = 1e-8);
        assert_relative_eq!(roots[4].0, -0.5, max_relative = 1e-8);
        assert_relative_eq!(roots[3].1.abs(), 2.0, max_relative = 1e-8);
    }

    #[test]
    fn gas_equilibrium_is_locally_stable() {
        let p = params();
        let r = classify_stability(0.8251, 0.4409, &p).unwrap();
        let u = ControlPoint::new(0.8251, 0.4409);
        let eigs = linearization_eigenvalues(&r.functional.unwrap(), &u, &p);
        for (re, im) in eigs {
            assert!(re < 0.0, "eigenvalue {re} + {im}i should be stable");
        }
    }
}
