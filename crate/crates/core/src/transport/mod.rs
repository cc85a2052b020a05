//! Forward and backward transport solvers.
//!
//! Two interchangeable schemes: the explicit TVD scheme with superbee
//! limiting, and the semi-Lagrangian characteristic solver.

mod characteristic;
mod limiter;
mod tvd;

pub use characteristic::{
    backtrace_rk4, solve_backward_characteristic, solve_transport_characteristic, DEFAULT_DT_ODE,
};
pub use limiter::superbee;
pub use tvd::{cfl_number, solve_transport_backward, solve_transport_tvd, tvd_step};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TimeFlow};
use crate::scalar::Real;

/// Time-step rule for the explicit scheme: `dt` is chosen so that
/// `max(|v|, |w|) dt / h` equals `sigma_target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CflPolicy<T> {
    pub sigma_target: T,
}

impl<T: Real> Default for CflPolicy<T> {
    fn default() -> Self {
        Self {
            sigma_target: T::lit(0.1),
        }
    }
}

impl<T: Real> CflPolicy<T> {
    pub fn new(sigma_target: T) -> Result<Self> {
        if !(sigma_target > T::zero() && sigma_target <= T::one()) {
            return Err(Error::InvalidConfig(format!(
                "sigma_cfl must lie in (0, 1], got {sigma_target}"
            )));
        }
        Ok(Self { sigma_target })
    }

    /// Step for a field with maximal speed `speed` (must be positive).
    #[inline]
    pub fn step(&self, speed: T, spacing: T) -> T {
        self.sigma_target * spacing / speed
    }
}

/// States of a transport solve at the requested times.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportTrajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<ScalarField<T>>,
}

impl<T: Real> TransportTrajectory<T> {
    pub fn last(&self) -> Option<&ScalarField<T>> {
        self.states.last()
    }
}

/// Which discretization drives the transport equations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Characteristic,
    Tvd,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "char" | "characteristic" | "characteristics" => Ok(Scheme::Characteristic),
            "tvd" => Ok(Scheme::Tvd),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Scheme-agnostic transport driver used by the control loops.
#[derive(Clone, Copy, Debug)]
pub struct Transport<T> {
    pub scheme: Scheme,
    pub cfl: CflPolicy<T>,
    pub dt_ode: T,
}

impl<T: Real> Default for Transport<T> {
    fn default() -> Self {
        Self {
            scheme: Scheme::Characteristic,
            cfl: CflPolicy::default(),
            dt_ode: T::lit(DEFAULT_DT_ODE),
        }
    }
}

impl<T: Real> Transport<T> {
    /// Forward solution of `u_t + b . grad u = 0`, `u(0) = u0`, at sorted times.
    pub fn forward(&self, u0: &ScalarField<T>, flow: &TimeFlow<T>, times: &[T]) -> Result<Vec<ScalarField<T>>> {
        match self.scheme {
            Scheme::Tvd => Ok(solve_transport_tvd(u0, flow, times, &self.cfl)?.states),
            Scheme::Characteristic => times
                .iter()
                .map(|&t| solve_transport_characteristic(u0, flow, t, self.dt_ode))
                .collect(),
        }
    }

    /// Backward solution of `p_t + b . grad p = 0`, `p(T) = p_terminal`.
    pub fn backward(&self, p_terminal: &ScalarField<T>, flow: &TimeFlow<T>, times: &[T]) -> Result<Vec<ScalarField<T>>> {
        match self.scheme {
            Scheme::Tvd => Ok(solve_transport_backward(p_terminal, flow, times, &self.cfl)?.states),
            Scheme::Characteristic => times
                .iter()
                .map(|&t| solve_backward_characteristic(p_terminal, flow, t, self.dt_ode))
                .collect(),
        }
    }
}
