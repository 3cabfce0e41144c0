//! Bound states and scattering amplitudes of `−ψ'' + uψ = Eψ`.
//!
//! This is the verification engine for everything else in the crate: it
//! knows nothing about Darboux transformations and only ever looks at a
//! sampled potential.

mod numerov;
mod scattering;
mod shooting;

pub use numerov::{numerov_integrate, Boundary, Direction, NumerovSolution, OVERFLOW_GUARD};
pub use scattering::{rt_coefficients, ScatteringData};
pub use shooting::{
    count_levels_below, level, second_solution, solve_bound_states, solve_levels, spectrum_json, zero_mode,
    zero_mode_with,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::CalculusError;
use crate::potential::DomainCut;
use crate::sampled::SampledFunction;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("only {} of {requested} levels found in the energy window", levels.len())]
    WindowExhausted { levels: Vec<EigenPair>, requested: usize },
    #[error("level {level} did not converge: matching residual {residual:e}")]
    NotConverged { level: usize, residual: f64 },
    #[error("no eigenvalue near E = {energy}")]
    NoEigenvalueNear { energy: f64 },
    #[error("mode at E = {energy} has {nodes} node(s); not the ground level")]
    Nodeful { energy: f64, nodes: usize },
    #[error("seed function has a node near x = {x}")]
    Node { x: f64 },
    #[error("potential is not short-range: |u| = {edge_value:e} at a grid edge")]
    LongRange { edge_value: f64 },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// One bound state: energy, normalized wavefunction, node count.
#[derive(Debug, Clone, Serialize)]
pub struct EigenPair {
    pub energy: f64,
    #[serde(skip)]
    pub wavefunction: SampledFunction,
    pub node_count: usize,
    /// Log-derivative mismatch at the matching point.
    pub matching_residual: f64,
    pub left_boundary: Boundary,
}

/// Shooting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub energy_window: (f64, f64),
    pub max_levels: usize,
    /// Largest accepted log-derivative mismatch at the matching point.
    pub bisection_tolerance: f64,
    pub matching_point_fraction: f64,
    #[serde(default)]
    pub left_boundary: Boundary,
    #[serde(default)]
    pub right_boundary: Boundary,
}

/// `(min u, edge)` pulled in slightly at both ends. A level within `1e-6`
/// of the edge value decays too slowly to fit any practical grid, and an
/// energy right at the edge value leaves the edge seed undefined.
fn window(v: &[f64], edge: f64) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    (lo - 1e-9 * (1.0 + lo.abs()), (edge - 1e-6 * (1.0 + edge.abs())).max(lo))
}

impl SolveConfig {
    pub fn new(energy_window: (f64, f64), max_levels: usize) -> Self {
        SolveConfig {
            energy_window,
            max_levels,
            bisection_tolerance: 1e-8,
            matching_point_fraction: 0.5,
            left_boundary: Boundary::Decaying,
            right_boundary: Boundary::Decaying,
        }
    }

    /// Window from `min u` up to just below the lower of the two edge
    /// values, which bounds the discrete spectrum for both confining and
    /// short-range potentials.
    pub fn auto(u: &SampledFunction, max_levels: usize) -> Self {
        let v = u.values();
        Self::new(window(v, v[0].min(v[v.len() - 1])), max_levels)
    }

    /// [`SolveConfig::auto`] for the given domain. On the half line the
    /// window top is the far edge value, since `x_min` carries a wall.
    pub fn for_domain(u: &SampledFunction, max_levels: usize, cut: DomainCut) -> Self {
        match cut {
            DomainCut::FullLine => Self::auto(u, max_levels),
            DomainCut::HalfLine => {
                let v = u.values();
                Self::new(window(v, v[v.len() - 1]), max_levels).half_line()
            }
        }
    }

    /// Dirichlet condition `ψ(x_min) = 0`, for half-line problems.
    pub fn half_line(mut self) -> Self {
        self.left_boundary = Boundary::Dirichlet;
        self
    }

    pub fn validate(&self) -> Result<(), EigenError> {
        let (a, b) = self.energy_window;
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(EigenError::InvalidConfig(format!("energy window ({a}, {b}) is empty")));
        }
        if !(self.bisection_tolerance > 0.0) {
            return Err(EigenError::InvalidConfig("bisection_tolerance must be positive".into()));
        }
        if !(self.matching_point_fraction > 0.0 && self.matching_point_fraction < 1.0) {
            return Err(EigenError::InvalidConfig("matching_point_fraction must lie in (0, 1)".into()));
        }
        if self.max_levels == 0 {
            return Err(EigenError::InvalidConfig("max_levels must be positive".into()));
        }
        Ok(())
    }
}
