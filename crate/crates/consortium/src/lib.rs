//! Simulation, equilibrium analysis and optimal control of an
//! algal-bacterial consortium grown in a continuous bioreactor.
//!
//! The crate covers the full workflow around one five-state chemostat
//! model in which engineered bacteria feed a vitamin-limited algal
//! population:
//!
//! - [`model`] — states, parameters, kinetic rates and the vector field;
//! - [`equilibria`] — closed-form steady states, existence thresholds and
//!   global stability classification;
//! - [`sim`] — fixed-step integration (implicit Gauss-Legendre 2-stage or
//!   classic RK4) with exact harvest quadrature;
//! - [`socp`] — the static problem: best constant `(alpha, d)` at
//!   equilibrium, by coordinate ascent with golden-section line searches;
//! - [`docp`] — the dynamic problem: best piecewise-constant schedule over
//!   a finite horizon, by projected-gradient ascent with discrete-adjoint
//!   gradients;
//! - [`pmp`] — maximum-principle diagnostics: backward costates, switching
//!   functions, bang/singular arc classification;
//! - [`config`] / [`tabular`] / [`cli`] — scenario files, plot-ready
//!   tabular output and the command-line front end.

pub mod cli;
pub mod config;
pub mod docp;
pub mod equilibria;
pub mod error;
mod linalg;
pub mod model;
pub mod pmp;
pub mod sim;
pub mod socp;
pub mod tabular;

pub use error::{Error, Result};
pub use model::{ControlPoint, ModelParams, StateVector, X_INIT};
pub use sim::{ControlSchedule, IntegrationMethod, Trajectory};
