use super::{node_positions, wronskian, DarbouxError, DarbouxSeed};
use crate::calculus::{second_log_derivative, EDGE_SKIP};
use crate::eigensolve::{self, EigenError, SolveConfig};
use crate::sampled::SampledFunction;

/// Edge magnitude below which a source counts as short-range.
const SHORT_RANGE_EDGE: f64 = 1e-10;

/// `ψ ↦ W(ψ₁,…,ψ_N, ψ) / W(ψ₁,…,ψ_N)`.
#[derive(Debug, Clone)]
pub struct CrumMap {
    source: SampledFunction,
    seeds: Vec<SampledFunction>,
    lambdas: Vec<f64>,
    denominator: SampledFunction,
}

impl CrumMap {
    pub fn apply(&self, psi: &SampledFunction, lambda: f64) -> Result<SampledFunction, DarbouxError> {
        if self.lambdas.iter().any(|l| *l == lambda) {
            return Err(DarbouxError::SeedEnergy(lambda));
        }
        let mut funcs = self.seeds.clone();
        funcs.push(psi.clone());
        let mut lambdas = self.lambdas.clone();
        lambdas.push(lambda);
        let num = wronskian(&funcs, &self.source, &lambdas)?;
        Ok(num.zip_with(&self.denominator, |a, b| a / b).expect("same grid"))
    }

    pub fn seed_wronskian(&self) -> &SampledFunction {
        &self.denominator
    }
}

#[derive(Debug, Clone)]
pub struct CrumResult {
    pub potential: SampledFunction,
    pub map: CrumMap,
}

/// `u[N] = u − 2D² ln W(ψ₁,…,ψ_N)`.
pub fn crum_iterate(u: &SampledFunction, seeds: &[DarbouxSeed]) -> Result<CrumResult, DarbouxError> {
    if seeds.is_empty() {
        return Err(DarbouxError::InconsistentLengths("no seeds".into()));
    }
    for s in seeds {
        s.validate(u)?;
    }
    let funcs: Vec<SampledFunction> = seeds.iter().map(|s| s.psi1.clone()).collect();
    let lambdas: Vec<f64> = seeds.iter().map(|s| s.lambda1).collect();
    let w = wronskian(&funcs, u, &lambdas)?;
    let nodes = node_positions(&w);
    if !nodes.is_empty() {
        return Err(DarbouxError::SingularWronskian { nodes });
    }
    let d2 = second_log_derivative(&w)?;
    let potential = u.zip_with(&d2, |a, b| a - 2.0 * b).expect("same grid");
    Ok(CrumResult { potential, map: CrumMap { source: u.clone(), seeds: funcs, lambdas, denominator: w } })
}

/// Removes levels `k` and `k + 1` by a Crum step with the two consecutive
/// eigenfunctions. Short-range results are shifted so their tails sit at
/// zero.
pub fn adler_delete_pair(u: &SampledFunction, k: usize) -> Result<SampledFunction, DarbouxError> {
    let cfg = SolveConfig::auto(u, k + 2);
    let levels = match eigensolve::solve_bound_states(u, &cfg) {
        Ok(l) => l,
        Err(EigenError::WindowExhausted { levels, requested }) => {
            return Err(DarbouxError::InsufficientLevels { needed: requested, found: levels.len() })
        }
        Err(e) => return Err(e.into()),
    };
    let seeds: Vec<DarbouxSeed> =
        levels[k..k + 2].iter().map(|p| DarbouxSeed::new(p.wavefunction.clone(), p.energy)).collect();
    let mut v = crum_iterate(u, &seeds)?.potential;
    let n = u.len();
    if u.at(0).abs() < SHORT_RANGE_EDGE && u.at(n - 1).abs() < SHORT_RANGE_EDGE {
        let tail = 0.5 * (v.at(EDGE_SKIP) + v.at(n - 1 - EDGE_SKIP));
        v = v.map(|x| x - tail);
    }
    Ok(v)
}
