//! Darboux transformations and their iterates.
//!
//! A seed `ψ₁` solving `−ψ'' + uψ = λ₁ψ` produces `v = u − 2D² ln ψ₁`
//! and the map `ψ ↦ ψ' − σ₁ψ` between solutions at the same energy.

mod crum;
mod factorization;
mod wronskian;

pub use crum::{adler_delete_pair, crum_iterate, CrumMap, CrumResult};
pub use factorization::{factorize, intertwining_residual, operator_identity_residuals, FactorizationPair};
pub use wronskian::{derivative_rows, wronskian};

use thiserror::Error;

use crate::calculus::{
    self, derivative_slice, second_log_derivative, second_log_derivative_masked, sign_changes, smooth_derivative, CalculusError,
    EDGE_SKIP,
};
use crate::eigensolve::{self, EigenError, SolveConfig};
use crate::sampled::SampledFunction;

/// Largest interior Schrödinger residual accepted for a seed.
pub const SEED_RESIDUAL: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum DarbouxError {
    #[error("seed function has nodes at x = {nodes:?}")]
    SingularSeed { nodes: Vec<f64> },
    #[error("seed Wronskian has nodes at x = {nodes:?}")]
    SingularWronskian { nodes: Vec<f64> },
    #[error("seed does not solve the source equation at λ = {lambda}: residual {residual:e}")]
    InvalidSeed { lambda: f64, residual: f64 },
    #[error("inconsistent inputs: {0}")]
    InconsistentLengths(String),
    #[error("needs {needed} bound states, found {found}")]
    InsufficientLevels { needed: usize, found: usize },
    #[error("potential has no bound state")]
    NoBoundState,
    #[error("energy {0} coincides with a seed energy")]
    SeedEnergy(f64),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// Transformation function with its factorization energy.
#[derive(Debug, Clone)]
pub struct DarbouxSeed {
    pub psi1: SampledFunction,
    pub lambda1: f64,
    /// `ψ₁'/ψ₁`; NaN next to nodes of `ψ₁`.
    pub sigma1: SampledFunction,
}

impl DarbouxSeed {
    pub fn new(psi1: SampledFunction, lambda1: f64) -> Self {
        let sigma1 = match calculus::log_derivative(&psi1) {
            Ok(s) => s,
            Err(_) => {
                let d = derivative_slice(psi1.values(), psi1.grid().spacing(), 1);
                let v = psi1.values().iter().zip(d).map(|(p, dp)| if *p == 0.0 { f64::NAN } else { dp / p }).collect();
                SampledFunction::new(*psi1.grid(), v).expect("same grid")
            }
        };
        DarbouxSeed { psi1, lambda1, sigma1 }
    }

    /// Seed from the `n`-th bound state of `u`.
    pub fn from_level(u: &SampledFunction, n: usize) -> Result<Self, DarbouxError> {
        let pair = eigensolve::level(u, n, &SolveConfig::auto(u, n + 1)).map_err(|e| match e {
            EigenError::WindowExhausted { levels, .. } if levels.is_empty() => DarbouxError::NoBoundState,
            EigenError::WindowExhausted { levels, requested } => {
                DarbouxError::InsufficientLevels { needed: requested, found: levels.len() }
            }
            e => e.into(),
        })?;
        Ok(Self::new(pair.wavefunction, pair.energy))
    }

    pub fn ground(u: &SampledFunction) -> Result<Self, DarbouxError> {
        Self::from_level(u, 0)
    }

    /// Interior residual of the seed against `u`, relative to `max |ψ₁|`.
    pub fn residual(&self, u: &SampledFunction) -> f64 {
        calculus::schrodinger_residual(&self.psi1, u, self.lambda1, EDGE_SKIP)
    }

    pub fn validate(&self, u: &SampledFunction) -> Result<(), DarbouxError> {
        if !self.psi1.grid().same_as(u.grid()) {
            return Err(DarbouxError::InconsistentLengths("seed and potential live on different grids".into()));
        }
        let residual = self.residual(u);
        if !(residual <= SEED_RESIDUAL) {
            return Err(DarbouxError::InvalidSeed { lambda: self.lambda1, residual });
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        node_positions(&self.psi1)
    }
}

pub(crate) fn node_positions(f: &SampledFunction) -> Vec<f64> {
    sign_changes(f.values()).into_iter().map(|i| f.grid().x(i)).collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DarbouxOptions {
    /// Compute singular transforms anyway, with poles masked as NaN.
    pub force_singular: bool,
}

/// `ψ ↦ ψ' − σ₁ψ`, taking solutions at `λ ≠ λ₁` to solutions of the
/// transformed equation.
#[derive(Debug, Clone)]
pub struct DarbouxMap {
    pub sigma1: SampledFunction,
    pub lambda1: f64,
}

impl DarbouxMap {
    pub fn apply(&self, psi: &SampledFunction) -> SampledFunction {
        let d = smooth_derivative(psi.values(), psi.grid().spacing());
        let v = psi.values().iter().zip(d).zip(self.sigma1.values()).map(|((p, dp), s)| dp - s * p).collect();
        SampledFunction::new(*psi.grid(), v).expect("same grid")
    }
}

#[derive(Debug, Clone)]
pub struct DarbouxResult {
    pub potential: SampledFunction,
    pub map: DarbouxMap,
    /// Node positions of a forced singular seed; empty otherwise.
    pub singular_nodes: Vec<f64>,
}

/// `v = u − 2D² ln ψ₁`.
pub fn darboux_transform(u: &SampledFunction, seed: &DarbouxSeed) -> Result<DarbouxResult, DarbouxError> {
    darboux_transform_with(u, seed, DarbouxOptions::default())
}

pub fn darboux_transform_with(
    u: &SampledFunction,
    seed: &DarbouxSeed,
    opts: DarbouxOptions,
) -> Result<DarbouxResult, DarbouxError> {
    seed.validate(u)?;
    let nodes = seed.nodes();
    let d2 = if nodes.is_empty() {
        second_log_derivative(&seed.psi1)?
    } else if opts.force_singular {
        second_log_derivative_masked(&seed.psi1)
    } else {
        return Err(DarbouxError::SingularSeed { nodes });
    };
    let potential = u.zip_with(&d2, |a, b| a - 2.0 * b).expect("same grid");
    Ok(DarbouxResult {
        potential,
        map: DarbouxMap { sigma1: seed.sigma1.clone(), lambda1: seed.lambda1 },
        singular_nodes: nodes,
    })
}

/// `u = v − 2D² ln φ₁` with `φ₁ = 1/ψ₁` solving the transformed equation
/// at `λ₁`.
pub fn inverse_darboux(v: &SampledFunction, phi1: &SampledFunction, lambda1: f64) -> Result<SampledFunction, DarbouxError> {
    let seed = DarbouxSeed::new(phi1.clone(), lambda1);
    seed.validate(v)?;
    let nodes = seed.nodes();
    if !nodes.is_empty() {
        return Err(DarbouxError::SingularSeed { nodes });
    }
    let d2 = second_log_derivative(phi1)?;
    Ok(v.zip_with(&d2, |a, b| a - 2.0 * b).expect("same grid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::interior;
    use crate::grid::Grid;

    fn gaussian(g: Grid) -> SampledFunction {
        SampledFunction::tabulate(g, |x| (-x * x / 2.0).exp())
    }

    #[test]
    fn gaussian_seed_shifts_by_two() {
        let g = Grid::full_line_default();
        let u = SampledFunction::tabulate(g, |x| x * x);
        let r = darboux_transform(&u, &DarbouxSeed::new(gaussian(g), 1.0)).unwrap();
        for i in interior(&g, EDGE_SKIP) {
            assert!((r.potential.at(i) - g.x(i).powi(2) - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn cosh_seed_gives_soliton() {
        let g = Grid::full_line_default();
        let u = SampledFunction::zeros(g);
        let r = darboux_transform(&u, &DarbouxSeed::new(SampledFunction::tabulate(g, f64::cosh), -1.0)).unwrap();
        for i in interior(&g, EDGE_SKIP) {
            assert!((r.potential.at(i) + 2.0 / g.x(i).cosh().powi(2)).abs() < 1e-6);
        }
    }

    #[test]
    fn sine_seed_is_singular() {
        let g = Grid::full_line_default();
        let u = SampledFunction::zeros(g);
        let seed = DarbouxSeed::new(SampledFunction::tabulate(g, f64::sin), 1.0);
        match darboux_transform(&u, &seed) {
            Err(DarbouxError::SingularSeed { nodes }) => {
                assert!(nodes.iter().any(|x| x.abs() < 0.02));
                assert!(nodes.len() >= 9);
            }
            other => panic!("expected singular seed, got {other:?}"),
        }
        let forced = darboux_transform_with(&u, &seed, DarbouxOptions { force_singular: true }).unwrap();
        assert!(!forced.singular_nodes.is_empty());
        let mid = g.nearest_index(0.0);
        assert!(forced.potential.at(mid).is_nan());
        // away from poles the result is 2 csc² x
        let i = g.nearest_index(1.0);
        assert!((forced.potential.at(i) - 2.0 / g.x(i).sin().powi(2)).abs() < 1e-6);
    }

    #[test]
    fn map_sends_solutions_to_solutions() {
        let g = Grid::full_line_default();
        let u = SampledFunction::zeros(g);
        let r = darboux_transform(&u, &DarbouxSeed::new(SampledFunction::tabulate(g, f64::cosh), -1.0)).unwrap();
        let wave = SampledFunction::tabulate(g, |x| (2.0 * x).cos());
        let mapped = r.map.apply(&wave);
        assert!(calculus::schrodinger_residual(&mapped, &r.potential, 4.0, EDGE_SKIP) < 1e-6);
    }

    #[test]
    fn inverse_round_trips() {
        let g = Grid::full_line_default();
        let v = SampledFunction::tabulate(g, |x| x * x + 2.0);
        let phi = SampledFunction::tabulate(g, |x| (x * x / 2.0).exp());
        let u = inverse_darboux(&v, &phi, 1.0).unwrap();
        for i in interior(&g, EDGE_SKIP) {
            assert!((u.at(i) - g.x(i).powi(2)).abs() < 1e-6);
        }
        let v = SampledFunction::tabulate(g, |x| -2.0 / x.cosh().powi(2));
        // undoes the cosh seed: φ₁ = 1/cosh is the bound mode of v
        let u = inverse_darboux(&v, &SampledFunction::tabulate(g, |x| 1.0 / x.cosh()), -1.0).unwrap();
        for i in interior(&g, EDGE_SKIP) {
            assert!(u.at(i).abs() < 1e-6);
        }
    }

    #[test]
    fn inverse_rejects_nodes() {
        let g = Grid::full_line_default();
        let v = SampledFunction::zeros(g);
        let phi = SampledFunction::tabulate(g, f64::sinh);
        assert!(matches!(inverse_darboux(&v, &phi, -1.0), Err(DarbouxError::SingularSeed { .. })));
    }

    #[test]
    fn wrong_energy_rejected() {
        let g = Grid::full_line_default();
        let u = SampledFunction::tabulate(g, |x| x * x);
        let seed = DarbouxSeed::new(gaussian(g), 2.0);
        assert!(matches!(darboux_transform(&u, &seed), Err(DarbouxError::InvalidSeed { .. })));
    }
}
