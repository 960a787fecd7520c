//! State space, parameters and kinetics of the algal-bacterial chemostat.
//!
//! Five states: glucose `s` (g/L), bacterial biomass `e` (g/L), dissolved
//! vitamin `v` (mg/L), internal algal quota `q` (mg/g) and algal biomass
//! `c` (g/L). Two controls: the bacterial resource-allocation fraction
//! `alpha` (dimensionless) and the dilution rate `d` (1/day). Bacteria grow
//! on glucose with Monod kinetics and divert a fraction `alpha` of their
//! metabolic flux to vitamin synthesis; algae take the vitamin up into an
//! internal quota and grow on the quota (variable-yield kinetics).

use crate::error::{Error, Result};

/// Biological and operational constants. All strictly positive.
///
/// Units: `k_v` mg/L, `k_s` g/L, `rho_max` mg/g/day, `phi_max` 1/day,
/// `q_min` mg/g, `gamma` g/g, `mu_max` 1/day, `beta` mg/g, `s_in` g/L,
/// `d_max` 1/day.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Half-saturation constant for vitamin uptake (mg/L).
    pub k_v: f64,
    /// Half-saturation constant for glucose (g/L).
    pub k_s: f64,
    /// Maximal specific vitamin uptake rate (mg/g/day).
    pub rho_max: f64,
    /// Maximal specific bacterial growth rate (1/day).
    pub phi_max: f64,
    /// Minimal internal quota sustaining algal growth (mg/g).
    pub q_min: f64,
    /// Bacterial growth yield on glucose (g/g).
    pub gamma: f64,
    /// Maximal specific algal growth rate (1/day).
    pub mu_max: f64,
    /// Vitamin production yield (mg/g).
    pub beta: f64,
    /// Glucose feed concentration (g/L).
    pub s_in: f64,
    /// Upper bound on the dilution rate (1/day).
    pub d_max: f64,
}

impl Default for ModelParams {
    /// Reference parameter set for the Chlorella / E. coli co-culture.
    fn default() -> Self {
        ModelParams {
            k_v: 0.57,
            k_s: 0.09,
            rho_max: 27.3,
            phi_max: 6.48,
            q_min: 2.7628,
            gamma: 0.44,
            mu_max: 1.0211,
            beta: 23.0,
            s_in: 0.5,
            d_max: 1.0,
        }
    }
}

impl ModelParams {
    /// Checks that every field is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("k_v", self.k_v),
            ("k_s", self.k_s),
            ("rho_max", self.rho_max),
            ("phi_max", self.phi_max),
            ("q_min", self.q_min),
            ("gamma", self.gamma),
            ("mu_max", self.mu_max),
            ("beta", self.beta),
            ("s_in", self.s_in),
            ("d_max", self.d_max),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Params(format!(
                    "{name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Bacterial growth rate at glucose level `s` (1/day).
    pub fn phi(&self, s: f64) -> f64 {
        monod_unchecked(s, self.phi_max, self.k_s)
    }

    /// Vitamin uptake rate at dissolved vitamin level `v` (mg/g/day).
    pub fn rho(&self, v: f64) -> f64 {
        monod_unchecked(v, self.rho_max, self.k_v)
    }
}

/// One point of the five-dimensional state space.
///
/// The valid domain has `s`, `e`, `v`, `c` nonnegative and `q >= q_min`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StateVector {
    /// Glucose concentration (g/L).
    pub s: f64,
    /// Bacterial biomass concentration (g/L).
    pub e: f64,
    /// Dissolved vitamin concentration (mg/L).
    pub v: f64,
    /// Internal algal vitamin quota (mg/g).
    pub q: f64,
    /// Algal biomass concentration (g/L).
    pub c: f64,
}

impl StateVector {
    pub fn new(s: f64, e: f64, v: f64, q: f64, c: f64) -> Self {
        StateVector { s, e, v, q, c }
    }

    /// Checks domain membership: nonnegative concentrations, quota floor.
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.s < 0.0 || self.e < 0.0 || self.v < 0.0 || self.c < 0.0 {
            return Err(Error::Domain(format!(
                "negative concentration in state {self:?}"
            )));
        }
        if self.q < params.q_min {
            return Err(Error::Domain(format!(
                "quota below q_min: q = {} < {}",
                self.q, params.q_min
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.s, self.e, self.v, self.q, self.c]
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        StateVector {
            s: x[0],
            e: x[1],
            v: x[2],
            q: x[3],
            c: x[4],
        }
    }
}

/// Experimental initial condition used throughout the numerical studies.
pub const X_INIT: StateVector = StateVector {
    s: 0.1629,
    e: 0.0487,
    v: 0.0003,
    q: 17.7,
    c: 0.035,
};

/// One admissible control value: `0 <= alpha <= 1`, `0 <= d <= d_max`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ControlPoint {
    /// Fraction of bacterial flux allocated to vitamin synthesis.
    pub alpha: f64,
    /// Dilution rate (1/day).
    pub d: f64,
}

impl ControlPoint {
    pub fn new(alpha: f64, d: f64) -> Self {
        ControlPoint { alpha, d }
    }

    /// Checks the box bounds against `d_max`.
    pub fn validate(&self, d_max: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(Error::Domain(format!(
                "alpha = {} outside [0, 1]",
                self.alpha
            )));
        }
        if self.d < 0.0 || self.d > d_max || !self.d.is_finite() {
            return Err(Error::Domain(format!(
                "d = {} outside [0, {d_max}]",
                self.d
            )));
        }
        Ok(())
    }
}

/// Saturating rate `a*x / (b + x)`. Increasing in `x`, bounded by `a`.
///
/// `x` must be nonnegative; `a` and `b` strictly positive.
pub fn monod(x: f64, a: f64, b: f64) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("monod input x = {x} must be >= 0")));
    }
    Ok(monod_unchecked(x, a, b))
}

pub(crate) fn monod_unchecked(x: f64, a: f64, b: f64) -> f64 {
    a * x / (b + x)
}

/// Derivative of the saturating rate with respect to `x`.
pub(crate) fn monod_deriv(x: f64, a: f64, b: f64) -> f64 {
    a * b / ((b + x) * (b + x))
}

/// Inverse of [`monod`] on its range: returns the `x` with `a*x/(b+x) = y`.
///
/// Defined for `0 < y < a`; the closed form is `b*y / (a - y)`.
pub fn monod_inverse(y: f64, a: f64, b: f64) -> Result<f64> {
    if y <= 0.0 || y >= a || !y.is_finite() {
        return Err(Error::Domain(format!(
            "y = {y} outside range of Monod function (0, {a})"
        )));
    }
    Ok(b * y / (a - y))
}

/// Specific algal growth rate at quota `q` (1/day): `mu_max * (1 - q_min/q)`.
///
/// Zero at the quota floor, increasing, bounded by `mu_max`.
pub fn mu(q: f64, params: &ModelParams) -> Result<f64> {
    if q < params.q_min {
        return Err(Error::Domain(format!(
            "quota below q_min: q = {} < {}",
            q, params.q_min
        )));
    }
    Ok(mu_unchecked(q, params))
}

pub(crate) fn mu_unchecked(q: f64, params: &ModelParams) -> f64 {
    params.mu_max * (1.0 - params.q_min / q)
}

/// Inverse of [`mu`]: the quota at which algae grow at rate `y`.
///
/// Defined for `0 <= y < mu_max`.
pub fn mu_inverse(y: f64, params: &ModelParams) -> Result<f64> {
    if y < 0.0 || y >= params.mu_max || !y.is_finite() {
        return Err(Error::Domain(format!(
            "y = {y} outside range of mu [0, {})",
            params.mu_max
        )));
    }
    Ok(params.q_min * params.mu_max / (params.mu_max - y))
}

/// Right-hand side of the five-state consortium model (per day).
///
/// Glucose is consumed by bacteria and replenished by dilution; a fraction
/// `1 - alpha` of the bacterial flux goes to growth and `alpha` to vitamin
/// synthesis; algae take vitamin up into the internal quota and grow on it;
/// dilution washes every dissolved or suspended component out.
pub fn dynamics(x: &StateVector, u: &ControlPoint, params: &ModelParams) -> Result<[f64; 5]> {
    if x.q < params.q_min {
        return Err(Error::Domain(format!(
            "quota below q_min: q = {} < {}",
            x.q, params.q_min
        )));
    }
    Ok(dynamics_unchecked(x, u, params))
}

/// Same vector field without the domain check.
///
/// Used inside implicit integrator stages where iterates may transiently
/// leave the domain; the formulas remain well defined for q > 0.
pub(crate) fn dynamics_unchecked(
    x: &StateVector,
    u: &ControlPoint,
    params: &ModelParams,
) -> [f64; 5] {
    let phi = params.phi(x.s);
    let rho = params.rho(x.v);
    let mu = mu_unchecked(x.q, params);
    [
        -phi * x.e / params.gamma + u.d * (params.s_in - x.s),
        (1.0 - u.alpha) * phi * x.e - u.d * x.e,
        u.alpha * params.beta * phi * x.e - rho * x.c - u.d * x.v,
        rho - mu * x.q,
        mu * x.c - u.d * x.c,
    ]
}

/// Jacobian of the vector field with respect to the state (row-major 5x5).
pub(crate) fn state_jacobian(
    x: &StateVector,
    u: &ControlPoint,
    params: &ModelParams,
) -> [[f64; 5]; 5] {
    let phi = params.phi(x.s);
    let dphi = monod_deriv(x.s, params.phi_max, params.k_s);
    let rho = params.rho(x.v);
    let drho = monod_deriv(x.v, params.rho_max, params.k_v);
    let mu = mu_unchecked(x.q, params);
    let dmu = params.mu_max * params.q_min / (x.q * x.q);
    let ab = u.alpha * params.beta;
    [
        [-dphi * x.e / params.gamma - u.d, -phi / params.gamma, 0.0, 0.0, 0.0],
        [
            (1.0 - u.alpha) * dphi * x.e,
            (1.0 - u.alpha) * phi - u.d,
            0.0,
            0.0,
            0.0,
        ],
        [ab * dphi * x.e, ab * phi, -drho * x.c - u.d, 0.0, -rho],
        // d/dq of mu(q)*q is mu_max since mu(q)*q = mu_max*(q - q_min)
        [0.0, 0.0, drho, -params.mu_max, 0.0],
        [0.0, 0.0, 0.0, dmu * x.c, mu - u.d],
    ]
}

/// Partial derivatives of the vector field with respect to (alpha, d).
pub(crate) fn control_jacobian(
    x: &StateVector,
    _u: &ControlPoint,
    params: &ModelParams,
) -> ([f64; 5], [f64; 5]) {
    let phi = params.phi(x.s);
    let d_alpha = [0.0, -phi * x.e, params.beta * phi * x.e, 0.0, 0.0];
    let d_d = [params.s_in - x.s, -x.e, -x.v, 0.0, -x.c];
    (d_alpha, d_d)
}

/// Instantaneous harvest rate `d * c` (g/L/day).
pub fn harvest_rate(x: &StateVector, u: &ControlPoint) -> f64 {
    u.d * x.c
}
