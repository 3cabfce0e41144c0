use nalgebra::DMatrix;
use rayon::prelude::*;

use super::DarbouxError;
use crate::calculus::{derivative_slice, smooth_derivative};
use crate::sampled::SampledFunction;

/// `ψ, ψ', …, ψ^{(rows−1)}` for a solution of `ψ'' = (u − λ)ψ`.
///
/// Only `ψ'` is differenced (via `ln|ψ|` away from nodes). Higher
/// derivatives follow from `ψ^{(n)} = aₙψ + bₙψ'` with
/// `aₙ₊₁ = aₙ' + bₙ(u − λ)`, `bₙ₊₁ = aₙ + bₙ'`.
pub fn derivative_rows(psi: &SampledFunction, u: &SampledFunction, lambda: f64, rows: usize) -> Vec<Vec<f64>> {
    let h = psi.grid().spacing();
    let n = psi.len();
    let p = psi.values();
    let dp = smooth_derivative(p, h);
    let q: Vec<f64> = u.values().iter().map(|v| v - lambda).collect();
    let mut out = Vec::with_capacity(rows);
    let mut a = vec![1.0; n];
    let mut b = vec![0.0; n];
    for r in 0..rows {
        if r == 1 {
            out.push(dp.clone());
        } else {
            out.push((0..n).map(|i| a[i] * p[i] + b[i] * dp[i]).collect());
        }
        if r + 1 < rows {
            let da = if a.iter().all(|v| *v == a[0]) { vec![0.0; n] } else { derivative_slice(&a, h, 1) };
            let db = if b.iter().all(|v| *v == b[0]) { vec![0.0; n] } else { derivative_slice(&b, h, 1) };
            let na: Vec<f64> = (0..n).map(|i| da[i] + b[i] * q[i]).collect();
            let nb: Vec<f64> = (0..n).map(|i| a[i] + db[i]).collect();
            a = na;
            b = nb;
        }
    }
    out
}

/// Wronskian determinant of solutions `funcs[i]` of the `u`-equation at
/// `lambdas[i]`.
pub fn wronskian(funcs: &[SampledFunction], u: &SampledFunction, lambdas: &[f64]) -> Result<SampledFunction, DarbouxError> {
    if funcs.is_empty() {
        return Err(DarbouxError::InconsistentLengths("no functions".into()));
    }
    if funcs.len() != lambdas.len() {
        return Err(DarbouxError::InconsistentLengths(format!(
            "{} functions but {} energies",
            funcs.len(),
            lambdas.len()
        )));
    }
    if funcs.iter().any(|f| !f.grid().same_as(u.grid())) {
        return Err(DarbouxError::InconsistentLengths("functions and potential live on different grids".into()));
    }
    let k = funcs.len();
    if k == 1 {
        return Ok(funcs[0].clone());
    }
    let cols: Vec<Vec<Vec<f64>>> = funcs.iter().zip(lambdas).map(|(f, l)| derivative_rows(f, u, *l, k)).collect();
    let n = u.len();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if k == 2 {
                cols[0][0][i] * cols[1][1][i] - cols[0][1][i] * cols[1][0][i]
            } else {
                DMatrix::from_fn(k, k, |r, c| cols[c][r][i]).determinant()
            }
        })
        .collect();
    Ok(SampledFunction::new(*u.grid(), values).expect("same grid"))
}
