//! Shape-invariant potentials and SUSY-WKB quantization.
//!
//! Convention: `V₋(x, a) = W² − W'`, `V₊(x, a) = W² + W'`, ground energy
//! of `V₋` fixed at zero. Shape invariance means
//! `V₊(x, a) = V₋(x, a') + R(a)` with `a' = step(a)`, and then
//! `E_n = R(a₁) + … + R(a_n)` along the orbit `a₁, a₂ = step(a₁), …`.

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::calculus::{self, count_nodes, derivative_slice, interior, smooth_derivative, EDGE_SKIP};
use crate::grid::Grid;
use crate::sampled::SampledFunction;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("parameter {value} is outside the valid range of the {family} family")]
    InvalidParameter { family: &'static str, value: f64 },
    #[error("level {level} does not exist: the family holds {count} bound state(s) at this parameter")]
    LevelOutOfRange { level: usize, count: usize },
    #[error("no energy satisfies the quantization condition for n = {n} below E = {e_max}")]
    NoBracket { n: usize, e_max: f64 },
    #[error("superpotential has no single well in the scan range")]
    NoWell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SiFamily {
    /// `W = ωx`, `a = ω` fixed along the orbit.
    Harmonic,
    /// `W = A tanh x`, `A → A − 1`.
    PoschlTeller,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiPotential {
    pub family: SiFamily,
}

impl SiPotential {
    pub fn harmonic() -> Self {
        SiPotential { family: SiFamily::Harmonic }
    }

    pub fn poschl_teller() -> Self {
        SiPotential { family: SiFamily::PoschlTeller }
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            SiFamily::Harmonic => "harmonic",
            SiFamily::PoschlTeller => "poschl_teller",
        }
    }

    pub fn validate(&self, a: f64) -> Result<(), ShapeError> {
        if a.is_finite() && a > 0.0 {
            Ok(())
        } else {
            Err(ShapeError::InvalidParameter { family: self.name(), value: a })
        }
    }

    pub fn superpotential(&self, x: f64, a: f64) -> f64 {
        match self.family {
            SiFamily::Harmonic => a * x,
            SiFamily::PoschlTeller => a * x.tanh(),
        }
    }

    /// `exp(−∫W)`, unnormalized.
    pub fn ground_state(&self, x: f64, a: f64) -> f64 {
        match self.family {
            SiFamily::Harmonic => (-0.5 * a * x * x).exp(),
            SiFamily::PoschlTeller => x.cosh().powf(-a),
        }
    }

    pub fn step(&self, a: f64) -> f64 {
        match self.family {
            SiFamily::Harmonic => a,
            SiFamily::PoschlTeller => a - 1.0,
        }
    }

    /// Number of bound states of `V₋(·, a)`, or `None` if unbounded.
    pub fn bound_count(&self, a: f64) -> Option<usize> {
        match self.family {
            SiFamily::Harmonic => None,
            SiFamily::PoschlTeller => Some(a.ceil() as usize),
        }
    }

    fn sample_w(&self, grid: &Grid, a: f64) -> SampledFunction {
        SampledFunction::tabulate(*grid, |x| self.superpotential(x, a))
    }

    /// `W² − W'` on `grid`, with `W'` by the stencil.
    pub fn v_minus(&self, grid: &Grid, a: f64) -> SampledFunction {
        self.partner(grid, a, -1.0)
    }

    /// `W² + W'` on `grid`.
    pub fn v_plus(&self, grid: &Grid, a: f64) -> SampledFunction {
        self.partner(grid, a, 1.0)
    }

    fn partner(&self, grid: &Grid, a: f64, sign: f64) -> SampledFunction {
        let w = self.sample_w(grid, a);
        let dw = derivative_slice(w.values(), grid.spacing(), 1);
        let v = w.values().iter().zip(dw).map(|(w, d)| w * w + sign * d).collect();
        SampledFunction::new(*grid, v).expect("same grid")
    }

    /// `R(a)` as the interior mean of `V₊(x, a) − V₋(x, step(a))`, with the
    /// largest deviation from that mean. A shape-invariant pair gives a
    /// constant difference.
    pub fn remainder(&self, grid: &Grid, a: f64) -> (f64, f64) {
        let plus = self.v_plus(grid, a);
        let minus = self.v_minus(grid, self.step(a));
        let diff: Vec<f64> = interior(grid, EDGE_SKIP).map(|i| plus.at(i) - minus.at(i)).collect();
        let mean = diff.iter().sum::<f64>() / diff.len() as f64;
        let spread = diff.iter().map(|d| (d - mean).abs()).fold(0.0, f64::max);
        (mean, spread)
    }

    fn check_level(&self, a1: f64, n: usize) -> Result<(), ShapeError> {
        self.validate(a1)?;
        match self.bound_count(a1) {
            Some(count) if n >= count => Err(ShapeError::LevelOutOfRange { level: n, count }),
            _ => Ok(()),
        }
    }
}

/// `E₀ … E_{n_max}` from partial sums of `R` along the parameter orbit.
/// `R` is evaluated numerically on `grid`.
pub fn si_spectrum(p: &SiPotential, a1: f64, n_max: usize, grid: &Grid) -> Result<Vec<f64>, ShapeError> {
    p.check_level(a1, n_max)?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(0.0);
    let mut a = a1;
    let mut e = 0.0;
    for _ in 0..n_max {
        e += p.remainder(grid, a).0;
        out.push(e);
        a = p.step(a);
    }
    Ok(out)
}

/// `ψ_n(x, a₁) = A⁺(a₁) ⋯ A⁺(a_n) ψ₀(x, a_{n+1})` with `A⁺ = −D + W`,
/// normalized and signed so the leftmost lobe is positive.
pub fn si_wavefunction(p: &SiPotential, a1: f64, n: usize, grid: &Grid) -> Result<SampledFunction, ShapeError> {
    p.check_level(a1, n)?;
    let orbit: Vec<f64> = std::iter::successors(Some(a1), |a| Some(p.step(*a))).take(n + 1).collect();
    let mut psi = SampledFunction::tabulate(*grid, |x| p.ground_state(x, orbit[n]));
    for &a in orbit[..n].iter().rev() {
        let d = smooth_derivative(psi.values(), grid.spacing());
        let w = p.sample_w(grid, a);
        let v = psi.values().iter().zip(d).zip(w.values()).map(|((f, df), w)| -df + w * f).collect();
        psi = SampledFunction::new(*grid, v).expect("same grid");
    }
    let mut psi = calculus::normalized(&psi).map_err(|_| ShapeError::LevelOutOfRange { level: n, count: n })?;
    let peak = psi.max_modulus();
    if psi.values().iter().find(|v| v.abs() > 1e-8 * peak).is_some_and(|v| *v < 0.0) {
        psi = psi.map(|v| -v);
    }
    debug_assert_eq!(count_nodes(psi.values(), 1e-10), n);
    Ok(psi)
}

/// Spectrum table in the eigensolver's JSON layout.
pub fn si_spectrum_json(p: &SiPotential, a1: f64, energies: &[f64]) -> serde_json::Value {
    json!({
        "levels": energies.iter().enumerate().map(|(n, e)| json!({"n": n, "energy": e, "nodes": n})).collect::<Vec<_>>(),
        "config": {"family": p.name(), "a1": a1},
    })
}

/// Scan range and tolerances for [`swkb_quantization`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwkbConfig {
    pub x_range: (f64, f64),
    pub scan_points: usize,
    pub energy_tolerance: f64,
    pub quadrature_tolerance: f64,
}

impl Default for SwkbConfig {
    fn default() -> Self {
        SwkbConfig { x_range: (-15.0, 15.0), scan_points: 3001, energy_tolerance: 1e-12, quadrature_tolerance: 1e-12 }
    }
}

/// `∫_a^b √(E − W²) dy` between the turning points around the well.
pub fn swkb_action(w: &dyn Fn(f64) -> f64, energy: f64, cfg: &SwkbConfig) -> Result<f64, ShapeError> {
    let (xmin, bottom) = well_bottom(w, cfg)?;
    if energy <= bottom {
        return Ok(0.0);
    }
    let f = |y: f64| energy - w(y).powi(2);
    let a = turning_point(&f, xmin, cfg.x_range.0);
    let b = turning_point(&f, xmin, cfg.x_range.1);
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(f64::INFINITY),
    };
    // y = a + (b − a)(1 − cos θ)/2 removes the square-root endpoints
    let half = 0.5 * (b - a);
    let g = |t: f64| {
        let y = a + half * (1.0 - t.cos());
        f(y).max(0.0).sqrt() * half * t.sin()
    };
    Ok(adaptive_simpson(&g, 0.0, std::f64::consts::PI, cfg.quadrature_tolerance))
}

/// Energy solving `∫√(E − W²) = nπ` (ħ = 1) by bisection.
pub fn swkb_quantization(w: &dyn Fn(f64) -> f64, n: usize, cfg: &SwkbConfig) -> Result<f64, ShapeError> {
    let (_, bottom) = well_bottom(w, cfg)?;
    if n == 0 {
        return Ok(bottom);
    }
    let target = n as f64 * std::f64::consts::PI;
    let e_max = w(cfg.x_range.0).powi(2).min(w(cfg.x_range.1).powi(2));
    // closer to the threshold E − W² is mostly cancellation noise
    let top = e_max * (1.0 - 1e-9);
    // approach the threshold geometrically; actions near it are costly
    let mut lo = bottom;
    let mut hi = None;
    for k in 1..=60 {
        let e = (top - (top - bottom) * 0.5f64.powi(k)).min(top);
        if swkb_action(w, e, cfg)? > target {
            hi = Some(e);
            break;
        }
        if e >= top || e <= lo {
            break;
        }
        lo = e;
    }
    let Some(mut hi) = hi else {
        return Err(ShapeError::NoBracket { n, e_max });
    };
    while hi - lo > cfg.energy_tolerance * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if swkb_action(w, mid, cfg)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn well_bottom(w: &dyn Fn(f64) -> f64, cfg: &SwkbConfig) -> Result<(f64, f64), ShapeError> {
    let (x0, x1) = cfg.x_range;
    let m = cfg.scan_points.max(3);
    let xs: Vec<f64> = (0..m).map(|i| x0 + (x1 - x0) * i as f64 / (m - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|x| w(*x).powi(2)).collect();
    let (i, _) = vals.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).ok_or(ShapeError::NoWell)?;
    if i == 0 || i == m - 1 || !vals[i].is_finite() {
        return Err(ShapeError::NoWell);
    }
    // golden-section refinement of the minimum of W²
    let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if w(c).powi(2) < w(d).powi(2) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, w(x).powi(2)))
}

/// Root of `f` between `inside` (where `f > 0`) and `edge`.
fn turning_point(f: &dyn Fn(f64) -> f64, inside: f64, edge: f64) -> Option<f64> {
    if f(edge) > 0.0 {
        return None;
    }
    let (mut a, mut b) = (inside, edge);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if f(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        // below roundoff further halving cannot help
        let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        if depth == 0 || diff.abs() <= 15.0 * tol.max(floor) {
            left + right + diff / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}
