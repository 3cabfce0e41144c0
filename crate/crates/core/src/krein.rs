//! Krein's inverse scattering for the s-wave equation `−y'' + V y = k² y`
//! on the half line.
//!
//! `H(t) = π⁻¹∫₀^∞ [|F(k)|⁻² − 1] cos kt dk` feeds the Fredholm equation
//! `Γ_{2r}(t) + H(t) + ∫₀^{2r} Γ_{2r}(s) H(s − t) ds = 0`; then
//! `A(r) = 2Γ_{2r}(2r)` and `V = −A' + A²`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{derivative_slice, integrate_slice};
use crate::grid::Grid;
use crate::sampled::SampledFunction;

pub const DEFAULT_K_CUTOFF: f64 = 40.0;
pub const DEFAULT_K_POINTS: usize = 4000;
/// Largest Nyström condition number accepted.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error)]
pub enum KreinError {
    #[error("|F|⁻² − 1 is not integrable near k = {k}")]
    Divergent { k: f64 },
    #[error("|F|⁻² − 1 decays no faster than 1/k² over the last decade below the cutoff (k²g ratio {ratio:e})")]
    SlowDecay { ratio: f64 },
    #[error("radius {r} is outside [0, {max}]")]
    InvalidRadius { r: f64, max: f64 },
    #[error("Nyström system is numerically singular (condition {condition:e})")]
    SingularSystem { condition: f64 },
    #[error("potential does not vanish at the end of the grid (|V| = {tail:e})")]
    LongRange { tail: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone)]
enum Profile {
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Table(SampledFunction),
}

/// The scattering data `k ↦ |F(k)|⁻² − 1` with its quadrature settings.
#[derive(Clone)]
pub struct JostInput {
    profile: Profile,
    pub k_cutoff: f64,
    pub k_points: usize,
}

impl fmt::Debug for JostInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.profile {
            Profile::Function(_) => "function",
            Profile::Table(_) => "table",
        };
        f.debug_struct("JostInput").field("profile", &kind).field("k_cutoff", &self.k_cutoff).field("k_points", &self.k_points).finish()
    }
}

impl JostInput {
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        JostInput { profile: Profile::Function(Arc::new(f)), k_cutoff: DEFAULT_K_CUTOFF, k_points: DEFAULT_K_POINTS }
    }

    /// `F ≡ 1`.
    pub fn free() -> Self {
        Self::from_fn(|_| 0.0)
    }

    /// Tabulated `|F|⁻² − 1` on a uniform k grid starting at 0; the cutoff
    /// is the last sample.
    pub fn from_table(values: SampledFunction) -> Result<Self, KreinError> {
        if values.grid().x_min().abs() > 1e-12 {
            return Err(KreinError::InvalidInput("k table must start at k = 0".into()));
        }
        let k_cutoff = values.grid().x_max();
        Ok(JostInput { profile: Profile::Table(values), k_cutoff, k_points: DEFAULT_K_POINTS })
    }

    /// Tabulated `|F(k)|`.
    pub fn from_moduli(moduli: &SampledFunction) -> Result<Self, KreinError> {
        if moduli.values().iter().any(|m| !(*m > 0.0)) {
            return Err(KreinError::InvalidInput("|F| must be positive".into()));
        }
        Self::from_table(moduli.map(|m| 1.0 / (m * m) - 1.0))
    }

    pub fn with_quadrature(mut self, k_cutoff: f64, k_points: usize) -> Self {
        self.k_cutoff = match self.profile {
            Profile::Table(ref t) => k_cutoff.min(t.grid().x_max()),
            Profile::Function(_) => k_cutoff,
        };
        self.k_points = k_points;
        self
    }

    pub fn eval(&self, k: f64) -> f64 {
        match &self.profile {
            Profile::Function(f) => f(k),
            Profile::Table(t) => t.interpolate(k),
        }
    }

    fn validate(&self) -> Result<(), KreinError> {
        if !(self.k_cutoff > 0.0) || self.k_points < 2 {
            return Err(KreinError::InvalidInput(format!(
                "need a positive cutoff and at least two points (got {}, {})",
                self.k_cutoff, self.k_points
            )));
        }
        let k1 = 1e-6 * self.k_cutoff;
        let (g0, g1, g2) = (self.eval(0.0), self.eval(k1), self.eval(10.0 * k1));
        if !g0.is_finite() || !g1.is_finite() {
            return Err(KreinError::Divergent { k: 0.0 });
        }
        // local power law g ~ k^{−p} with p ≥ 1 is not integrable at 0
        if g1.abs() > 1e6 && g2 != 0.0 {
            let p = (g1.abs() / g2.abs()).ln() / 10f64.ln();
            if p > 0.9 {
                return Err(KreinError::Divergent { k: k1 });
            }
        }
        let kc = self.k_cutoff;
        let tail = |k: f64| k * k * self.eval(k).abs();
        let decade: Vec<f64> = (0..=20).map(|j| tail(kc * (0.1 + 0.9 * j as f64 / 20.0))).collect();
        let peak = decade.iter().fold(0.0f64, |m, v| m.max(*v));
        if decade.iter().any(|v| !v.is_finite()) {
            return Err(KreinError::Divergent { k: kc });
        }
        if peak > 1e-12 && decade[20] > 0.5 * peak {
            return Err(KreinError::SlowDecay { ratio: decade[20] / peak });
        }
        Ok(())
    }
}

/// `H` on a t grid with an estimate of the neglected `k > k_cutoff` part.
#[derive(Debug, Clone)]
pub struct HTransform {
    pub h: SampledFunction,
    pub truncation_error: f64,
}

/// Filon–Simpson weights `(α, β, γ)` for `θ = t·Δk`.
fn filon_weights(theta: f64) -> (f64, f64, f64) {
    if theta.abs() < 1.0 / 6.0 {
        let t2 = theta * theta;
        let a = theta * t2 * (2.0 / 45.0 - t2 * (2.0 / 315.0 - t2 * 2.0 / 4725.0));
        let b = 2.0 / 3.0 + t2 * (2.0 / 15.0 - t2 * (4.0 / 105.0 - t2 * 2.0 / 567.0));
        let c = 4.0 / 3.0 - t2 * (2.0 / 15.0 - t2 * (1.0 / 210.0 - t2 / 11340.0));
        return (a, b, c);
    }
    let (s, c) = theta.sin_cos();
    let t3 = theta.powi(3);
    (
        (theta * theta + theta * s * c - 2.0 * s * s) / t3,
        2.0 * (theta * (1.0 + c * c) - 2.0 * s * c) / t3,
        4.0 * (s - theta * c) / t3,
    )
}

/// `∫₀^K g(k) cos(kt) dk` from samples at `K·j/n`, `n` even.
fn filon_cos(g: &[f64], dk: f64, t: f64) -> f64 {
    let n = g.len() - 1;
    let (a, b, c) = filon_weights(t * dk);
    let kmax = n as f64 * dk;
    let mut even = -0.5 * (g[0] + g[n] * (kmax * t).cos());
    let mut odd = 0.0;
    for (j, gj) in g.iter().enumerate() {
        let v = gj * (j as f64 * dk * t).cos();
        if j % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    dk * (a * g[n] * (kmax * t).sin() + b * even + c * odd)
}

pub fn build_h(j: &JostInput, t_grid: &Grid) -> Result<HTransform, KreinError> {
    j.validate()?;
    let n = j.k_points + j.k_points % 2;
    let dk = j.k_cutoff / n as f64;
    let g: Vec<f64> = (0..=n).map(|i| j.eval(i as f64 * dk)).collect();
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(KreinError::Divergent { k: i as f64 * dk });
    }
    let values: Vec<f64> = (0..t_grid.len()).map(|i| filon_cos(&g, dk, t_grid.x(i)) / std::f64::consts::PI).collect();
    // a tail decaying like k⁻² or faster contributes at most K·|g(K)|
    let truncation_error = j.k_cutoff * g[n].abs() / std::f64::consts::PI;
    Ok(HTransform { h: SampledFunction::new(*t_grid, values).expect("same grid"), truncation_error })
}

/// `Γ_{2r}` on the collocation points `t_i ∈ [0, 2r]`, with diagnostics.
#[derive(Debug, Clone)]
pub struct FredholmSolution {
    pub gamma: Vec<f64>,
    pub residual: f64,
    pub condition: f64,
}

/// Trapezoid Nyström solve on the t points of `h` up to `2r`; `H` is
/// extended evenly to negative arguments.
pub fn solve_fredholm(h: &SampledFunction, r: f64) -> Result<FredholmSolution, KreinError> {
    let g = h.grid();
    if g.x_min().abs() > 1e-12 {
        return Err(KreinError::InvalidInput("H must be sampled from t = 0".into()));
    }
    let dt = g.spacing();
    if !(r >= 0.0) || 2.0 * r > g.x_max() * (1.0 + 1e-12) {
        return Err(KreinError::InvalidRadius { r, max: 0.5 * g.x_max() });
    }
    let m = (2.0 * r / dt).round() as usize;
    if ((2.0 * r / dt) - m as f64).abs() > 1e-6 {
        return Err(KreinError::InvalidInput(format!("2r = {} is not a sample of the t grid", 2.0 * r)));
    }
    let hv = h.values();
    if m == 0 {
        return Ok(FredholmSolution { gamma: vec![-hv[0]], residual: 0.0, condition: 1.0 });
    }
    let w = |j: usize| if j == 0 || j == m { 0.5 * dt } else { dt };
    let a = DMatrix::from_fn(m + 1, m + 1, |i, j| if i == j { 1.0 } else { 0.0 } + w(j) * hv[i.abs_diff(j)]);
    let rhs = DVector::from_fn(m + 1, |i, _| -hv[i]);
    let lu = a.clone().lu();
    let gamma = lu.solve(&rhs).ok_or(KreinError::SingularSystem { condition: f64::INFINITY })?;
    let inv = lu.try_inverse().ok_or(KreinError::SingularSystem { condition: f64::INFINITY })?;
    let norm1 = |mat: &DMatrix<f64>| mat.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let condition = norm1(&a) * norm1(&inv);
    if !(condition <= MAX_CONDITION) {
        return Err(KreinError::SingularSystem { condition });
    }
    let residual = (&a * &gamma - &rhs).amax();
    Ok(FredholmSolution { gamma: gamma.iter().copied().collect(), residual, condition })
}

/// `H(t)` on `[0, 2r_max]` with the Fredholm solution for every `r` of the
/// radial grid.
#[derive(Debug, Clone)]
pub struct KreinKernel {
    pub t_grid: Grid,
    pub h: SampledFunction,
    /// `gamma[i][j] = Γ_{2r_i}(t_j)`, `j ≤ i`.
    pub gamma: Vec<Vec<f64>>,
}

impl KreinKernel {
    /// `k⁻¹ Im[e^{ikr}(1 + ∫₀^{2r} Γ_{2r}(t) e^{−ikt} dt)]` at `r_i`.
    pub fn representation(&self, k: f64, i: usize) -> f64 {
        let dt = self.t_grid.spacing();
        let r = 0.5 * i as f64 * dt;
        let f: Vec<Complex64> =
            self.gamma[i].iter().enumerate().map(|(j, gv)| Complex64::new(0.0, -k * j as f64 * dt).exp() * *gv).collect();
        let integral = match f.len() {
            1 => Complex64::new(0.0, 0.0),
            2 => 0.5 * dt * (f[0] + f[1]),
            _ => integrate_slice(&f, dt),
        };
        (Complex64::new(0.0, k * r).exp() * (1.0 + integral)).im / k
    }
}

#[derive(Debug, Clone)]
pub struct KreinResult {
    pub a: SampledFunction,
    pub v: SampledFunction,
    pub kernel: KreinKernel,
    pub truncation_error: f64,
    pub max_residual: f64,
    pub max_condition: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KreinSummary {
    pub truncation_error: f64,
    pub max_residual: f64,
    pub max_condition: f64,
}

impl KreinResult {
    pub fn summary(&self) -> KreinSummary {
        KreinSummary {
            truncation_error: self.truncation_error,
            max_residual: self.max_residual,
            max_condition: self.max_condition,
        }
    }
}

/// `A(r) = 2Γ_{2r}(2r)` and `V = −A' + A²` on a radial grid `[0, r_max]`.
pub fn recover_potential(j: &JostInput, r_grid: &Grid) -> Result<KreinResult, KreinError> {
    if r_grid.x_min().abs() > 1e-12 {
        return Err(KreinError::InvalidInput("radial grid must start at r = 0".into()));
    }
    let n = r_grid.len();
    let t_grid = Grid::new(0.0, 2.0 * r_grid.x_max(), n).map_err(|e| KreinError::InvalidInput(e.to_string()))?;
    let ht = build_h(j, &t_grid)?;
    let sols: Vec<FredholmSolution> =
        (0..n).into_par_iter().map(|i| solve_fredholm(&ht.h, r_grid.x(i))).collect::<Result<_, _>>()?;
    let a: Vec<f64> = sols.iter().map(|s| 2.0 * s.gamma[s.gamma.len() - 1]).collect();
    let da = derivative_slice(&a, r_grid.spacing(), 1);
    let v: Vec<f64> = a.iter().zip(&da).map(|(a, d)| -d + a * a).collect();
    let max_residual = sols.iter().fold(0.0f64, |m, s| m.max(s.residual));
    let max_condition = sols.iter().fold(1.0f64, |m, s| m.max(s.condition));
    Ok(KreinResult {
        a: SampledFunction::new(*r_grid, a).expect("same grid"),
        v: SampledFunction::new(*r_grid, v).expect("same grid"),
        kernel: KreinKernel { t_grid, h: ht.h, gamma: sols.into_iter().map(|s| s.gamma).collect() },
        truncation_error: ht.truncation_error,
        max_residual,
        max_condition,
    })
}

fn check_half_line(v: &SampledFunction) -> Result<(), KreinError> {
    if v.grid().x_min().abs() > 1e-12 {
        return Err(KreinError::InvalidInput("potential must be sampled from r = 0".into()));
    }
    let n = v.len();
    let tail = v.values()[n - n / 10..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if tail > 1e-4 * v.max_modulus().max(1.0) {
        return Err(KreinError::LongRange { tail });
    }
    Ok(())
}

/// `(φ, φ')` at every grid point for `φ(0) = 0`, `φ'(0) = 1`, by RK4 with
/// substeps no longer than `0.05/k`.
pub fn regular_solution(v: &SampledFunction, k: f64) -> Vec<(f64, f64)> {
    let g = v.grid();
    let h = g.spacing();
    let subs = ((h * k / 0.05).ceil() as usize).max(1);
    let s = h / subs as f64;
    let k2 = k * k;
    let mut y = (0.0, 1.0);
    let mut out = Vec::with_capacity(g.len());
    out.push(y);
    let f = |r: f64, y: (f64, f64)| (y.1, (v.interpolate(r) - k2) * y.0);
    for i in 0..g.len() - 1 {
        for m in 0..subs {
            let r = g.x(i) + m as f64 * s;
            let k1 = f(r, y);
            let k2v = f(r + 0.5 * s, (y.0 + 0.5 * s * k1.0, y.1 + 0.5 * s * k1.1));
            let k3 = f(r + 0.5 * s, (y.0 + 0.5 * s * k2v.0, y.1 + 0.5 * s * k2v.1));
            let k4 = f(r + s, (y.0 + s * k3.0, y.1 + s * k3.1));
            y = (
                y.0 + s / 6.0 * (k1.0 + 2.0 * k2v.0 + 2.0 * k3.0 + k4.0),
                y.1 + s / 6.0 * (k1.1 + 2.0 * k2v.1 + 2.0 * k3.1 + k4.1),
            );
        }
        out.push(y);
    }
    out
}

/// `|F(k)| = k·(φ² + φ'²/k²)^{1/2}` at the end of the grid, where
/// `φ → |F| k⁻¹ sin(kr + δ)`.
pub fn jost_forward(v: &SampledFunction, ks: &[f64]) -> Result<Vec<f64>, KreinError> {
    check_half_line(v)?;
    if let Some(k) = ks.iter().find(|k| !(**k >= 0.0) || !k.is_finite()) {
        return Err(KreinError::InvalidInput(format!("wavenumber {k} is not a nonnegative real")));
    }
    Ok(ks
        .par_iter()
        .map(|&k| {
            let (p, dp) = *regular_solution(v, k).last().expect("nonempty grid");
            (k * k * p * p + dp * dp).sqrt()
        })
        .collect())
}

/// `|F|` sampled on `[0, k_max]` and converted to Krein input.
pub fn jost_input_from_potential(v: &SampledFunction, k_max: f64, samples: usize) -> Result<JostInput, KreinError> {
    let kg = Grid::new(0.0, k_max, samples).map_err(|e| KreinError::InvalidInput(e.to_string()))?;
    let moduli = jost_forward(v, &kg.abscissae())?;
    JostInput::from_moduli(&SampledFunction::new(kg, moduli).expect("same grid"))
}
