//! Numerov propagation of `ψ'' = (u − E) ψ`.

use serde::{Deserialize, Serialize};

use crate::calculus::derivative_slice;
use crate::sampled::SampledFunction;

/// Above this magnitude the partial solution is rescaled.
pub const OVERFLOW_GUARD: f64 = 1e250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LeftToRight,
    RightToLeft,
}

/// Boundary treatment at a grid edge when shooting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Match the decaying exponential of a classically forbidden edge;
    /// falls back to Dirichlet where the edge is allowed.
    #[default]
    Decaying,
    /// `ψ = 0` at the edge.
    Dirichlet,
}

/// A Numerov solution with its accumulated rescaling.
///
/// The true solution equals `psi * exp(scale_log)`; every sample shares
/// the factor.
#[derive(Debug, Clone)]
pub struct NumerovSolution {
    pub psi: SampledFunction,
    pub scale_log: f64,
}

/// Propagates `ψ'' = (u − E)ψ` across the whole grid from the two seed
/// values at the starting edge (`boundary.0` at the edge point,
/// `boundary.1` at its neighbour).
pub fn numerov_integrate(
    u: &SampledFunction,
    energy: f64,
    direction: Direction,
    boundary: (f64, f64),
) -> NumerovSolution {
    let q: Vec<f64> = u.values().iter().map(|v| v - energy).collect();
    let h = u.grid().spacing();
    let (values, scale_log) = match direction {
        Direction::LeftToRight => run(&q, h, boundary),
        Direction::RightToLeft => {
            let rq: Vec<f64> = q.iter().rev().copied().collect();
            let (mut v, s) = run(&rq, h, boundary);
            v.reverse();
            (v, s)
        }
    };
    NumerovSolution { psi: SampledFunction::new(*u.grid(), values).expect("same grid"), scale_log }
}

/// Weight `β(Z)` of the exponentially fitted Numerov scheme, `Z = h²q`.
///
/// With `β = 1/12` this is classical Numerov; the fitted value makes
/// `exp(±√q x)` exact for locally constant `q`, which removes the
/// leading `(h²q)³` error in strongly forbidden regions.
pub(crate) fn fitted_beta(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        return 1.0 / 12.0 - z / 240.0 + z * z / 6048.0;
    }
    let c = if z > 0.0 { z.sqrt().cosh() } else { (-z).sqrt().cos() };
    if (c - 1.0).abs() < 1e-12 {
        return 1.0 / 12.0;
    }
    1.0 / z - 1.0 / (2.0 * (c - 1.0))
}

#[inline]
fn step(q: &[f64], h2: f64, i: usize, prev: f64, cur: f64) -> f64 {
    let b = fitted_beta(h2 * q[i]);
    (cur * (2.0 + (1.0 - 2.0 * b) * h2 * q[i]) - prev * (1.0 - b * h2 * q[i - 1])) / (1.0 - b * h2 * q[i + 1])
}

/// Forward Numerov recursion over `q = u − E` from seeds `(ψ₀, ψ₁)`.
pub(crate) fn run(q: &[f64], h: f64, seeds: (f64, f64)) -> (Vec<f64>, f64) {
    let n = q.len();
    let h2 = h * h;
    let mut psi = vec![0.0; n];
    psi[0] = seeds.0;
    if n > 1 {
        psi[1] = seeds.1;
    }
    let mut scale_log = 0.0;
    for i in 1..n - 1 {
        let next = step(q, h2, i, psi[i - 1], psi[i]);
        psi[i + 1] = next;
        if next.abs() > OVERFLOW_GUARD {
            let s = 1.0 / next.abs();
            for v in &mut psi[..=i + 1] {
                *v *= s;
            }
            scale_log -= s.ln();
        }
    }
    (psi, scale_log)
}

/// Counts sign changes of the forward solution without storing it.
pub(crate) fn count_sign_changes(q: &[f64], h: f64, seeds: (f64, f64)) -> usize {
    let h2 = h * h;
    let (mut prev, mut cur) = seeds;
    let mut last_sign = sign(prev);
    let mut changes = 0;
    let mut note = |v: f64, last: &mut i8| {
        let s = sign(v);
        if s != 0 {
            if *last != 0 && s != *last {
                changes += 1;
            }
            *last = s;
        }
    };
    note(cur, &mut last_sign);
    for i in 1..q.len() - 1 {
        let mut next = step(q, h2, i, prev, cur);
        if next.abs() > OVERFLOW_GUARD {
            let s = 1.0 / next.abs();
            next *= s;
            cur *= s;
        }
        note(next, &mut last_sign);
        prev = cur;
        cur = next;
    }
    changes
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Seeds at the start of `q` for the requested boundary treatment.
///
/// In a forbidden edge region the ratio `ψ₁/ψ₀` integrates the WKB
/// log-derivative `√q − q'/4q + …` to second order, so the inward
/// solution starts on the branch that decays toward the edge.
pub(crate) fn edge_seeds(q: &[f64], h: f64, boundary: Boundary) -> (f64, f64) {
    let (q0, q1) = (q[0], q[1]);
    match boundary {
        Boundary::Decaying if q0 > 0.0 && q1 > 0.0 => {
            let log_ratio = match wkb_sigma(q, h) {
                Some(s) => h * (5.0 * s[0] + 8.0 * s[1] - s[2]) / 12.0,
                None => h * (0.5 * (q0 + q1)).sqrt() - 0.25 * (q1 / q0).ln(),
            };
            (1.0, log_ratio.exp())
        }
        _ => (0.0, h),
    }
}

/// Second-order WKB log-derivative of the branch growing away from the
/// start of `q`, at its first three samples.
pub(crate) fn wkb_sigma(q: &[f64], h: f64) -> Option<[f64; 3]> {
    if q.len() < 7 || !q[..3].iter().all(|v| *v > 0.0) {
        return None;
    }
    let w = &q[..7];
    let d1 = derivative_slice(w, h, 1);
    let d2 = derivative_slice(w, h, 2);
    let sigma = |i: usize| {
        let k = w[i].sqrt();
        let s1 = -d1[i] / (4.0 * w[i]);
        let ds1 = -d2[i] / (4.0 * w[i]) + d1[i] * d1[i] / (4.0 * w[i] * w[i]);
        k + s1 - (ds1 + s1 * s1) / (2.0 * k)
    };
    Some([sigma(0), sigma(1), sigma(2)])
}

/// Phase advance per unit length of classical Numerov for `q = −k²`.
pub(crate) fn discrete_wavenumber(k: f64, h: f64) -> f64 {
    let g = h * h / 12.0;
    let q = -k * k;
    let c = (1.0 + 5.0 * g * q) / (1.0 - g * q);
    c.clamp(-1.0, 1.0).acos() / h
}
