//! Darboux transformations of the time-dependent equation `iψ_t = −ψ_xx + Vψ`.
//!
//! A seed `χ` with `e^{−χ}` solving the `V₀` equation and a positive
//! `L₁(t)` define `T = L₁(∂ₓ + χₓ)`, which intertwines `i∂_t − H₀` with
//! `i∂_t − H₁` for `V₁ = V₀ + 2χₓₓ + i(ln L₁)_t`. `V₁` is real exactly
//! when `Im χₓₓₓ = 0` and `L₁ = exp[−2∫ Im χₓₓ dt]`.
//!
//! Claims are checked against a Crank–Nicolson propagator.

use std::fs;
use std::io::BufReader;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calculus::{cumulative_integral_complex, derivative_slice, EDGE_SKIP};
use crate::grid::Grid;
use crate::sampled::{ComplexFunction, SampleError, SampledFunction};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Largest `dt · max|V|` used when choosing internal steps.
pub const PHASE_STEP: f64 = 0.05;
/// Largest relative norm change tolerated in one propagation step.
pub const STEP_DRIFT: f64 = 1e-10;
/// Per-slice residual accepted for seeds and source solutions.
pub const SOLUTION_RESIDUAL: f64 = 1e-4;
/// Largest `|Im V₁|` accepted in strict mode.
pub const REALITY_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum TdseError {
    #[error("invalid time list: {0}")]
    InvalidTimes(String),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error("norm drift {drift:e} at step {step} exceeds the per-step budget")]
    NormDrift { step: usize, drift: f64 },
    #[error("singular propagator matrix")]
    SingularStep,
    #[error("{what} does not solve its equation: per-slice residual {residual:e}")]
    NotASolution { what: &'static str, residual: f64 },
    #[error("transformed potential has imaginary part {imag:e} (max |Im χₓₓₓ| = {chi_xxx:e})")]
    RealityViolation { imag: f64, chi_xxx: f64 },
    #[error("inner integral of the inverse map is not finite at t = {t}")]
    QuadratureDivergence { t: f64 },
    #[error("samples are not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Complex samples on `times × grid`, indexed `[time][space]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeFunction {
    grid: Grid,
    times: Vec<f64>,
    values: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    grid: Grid,
    times: Vec<f64>,
    slices: Vec<String>,
}

fn check_times(times: &[f64]) -> Result<(), TdseError> {
    if times.is_empty() {
        return Err(TdseError::InvalidTimes("no instants".into()));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(TdseError::InvalidTimes("non-finite instant".into()));
    }
    if times.len() < 2 {
        return Ok(());
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(TdseError::InvalidTimes("instants must increase".into()));
    }
    let tol = 1e-12 * times.iter().fold(1.0f64, |m, t| m.max(t.abs()));
    for (j, w) in times.windows(2).enumerate() {
        if w[1] <= w[0] || ((w[1] - w[0]) - dt).abs() > tol {
            return Err(TdseError::InvalidTimes(format!("step {} differs from the uniform step {dt}", j)));
        }
    }
    Ok(())
}

/// `n` uniform instants `t0, t0 + dt, …`.
pub fn uniform_times(t0: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| t0 + j as f64 * dt).collect()
}

impl SpaceTimeFunction {
    pub fn new(grid: Grid, times: Vec<f64>, values: Vec<Vec<Complex64>>) -> Result<Self, TdseError> {
        check_times(&times)?;
        if values.len() != times.len() {
            return Err(TdseError::Inconsistent(format!("{} slices for {} instants", values.len(), times.len())));
        }
        for (row, t) in values.iter().zip(&times) {
            if row.len() != grid.len() {
                return Err(SampleError::LengthMismatch { expected: grid.len(), got: row.len() }.into());
            }
            if row.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(TdseError::NonFinite { t: *t });
            }
        }
        Ok(SpaceTimeFunction { grid, times, values })
    }

    pub fn tabulate(grid: Grid, times: Vec<f64>, f: impl Fn(f64, f64) -> Complex64) -> Result<Self, TdseError> {
        let values = times.iter().map(|&t| (0..grid.len()).map(|i| f(grid.x(i), t)).collect()).collect();
        Self::new(grid, times, values)
    }

    /// A real function repeated at every instant.
    pub fn constant_in_time(f: &SampledFunction, times: Vec<f64>) -> Result<Self, TdseError> {
        let row: Vec<Complex64> = f.values().iter().map(|v| Complex64::new(*v, 0.0)).collect();
        let values = vec![row; times.len()];
        Self::new(*f.grid(), times, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Time step; zero for a single slice.
    pub fn dt(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
        }
    }

    pub fn slices(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn slice(&self, j: usize) -> ComplexFunction {
        SampledFunction::new(self.grid, self.values[j].clone()).expect("same grid")
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        let values = self.values.iter().map(|r| r.iter().map(|v| f(*v)).collect()).collect();
        SpaceTimeFunction { grid: self.grid, times: self.times.clone(), values }
    }

    pub fn compatible(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid)
            && self.times.len() == other.times.len()
            && self.times.iter().zip(&other.times).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }

    /// `(∫ |f|² dx)^{1/2}` per slice (trapezoid).
    pub fn norms(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        self.values.iter().map(|r| slice_norm(r, h)).collect()
    }

    pub fn max_imag(&self, skip: usize) -> f64 {
        let n = self.grid.len();
        self.values.iter().flat_map(|r| r[skip.min(n)..n.saturating_sub(skip)].iter()).fold(0.0, |m, v| m.max(v.im.abs()))
    }

    /// Writes `slice_NNNNN.csv` per instant plus `manifest.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), TdseError> {
        fs::create_dir_all(dir)?;
        let mut names = Vec::with_capacity(self.times.len());
        for j in 0..self.times.len() {
            let name = format!("slice_{j:05}.csv");
            let mut buf = Vec::new();
            self.slice(j).write_csv(&mut buf)?;
            fs::write(dir.join(&name), buf)?;
            names.push(name);
        }
        let m = Manifest { grid: self.grid, times: self.times.clone(), slices: names };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self, TdseError> {
        let m: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let mut values = Vec::with_capacity(m.slices.len());
        for name in &m.slices {
            let f = ComplexFunction::read_csv(BufReader::new(fs::File::open(dir.join(name))?))?;
            if !f.grid().same_as(&m.grid) {
                return Err(SampleError::GridMismatch.into());
            }
            values.push(f.into_values());
        }
        Self::new(m.grid, m.times, values)
    }
}

fn slice_norm(r: &[Complex64], h: f64) -> f64 {
    let n = r.len();
    let mut s: f64 = r.iter().map(|v| v.norm_sqr()).sum();
    s -= 0.5 * (r[0].norm_sqr() + r[n - 1].norm_sqr());
    (s * h).sqrt()
}

/// `∂ₓ` and `∂ₓ²` of every slice.
fn space_derivatives(f: &SpaceTimeFunction) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let h = f.grid.spacing();
    let d1 = f.values.iter().map(|r| derivative_slice(r, h, 1)).collect();
    let d2 = f.values.iter().map(|r| derivative_slice(r, h, 2)).collect();
    (d1, d2)
}

/// `∂_t` at every point by the seven-point stencil along time.
fn time_derivative(f: &SpaceTimeFunction) -> Vec<Vec<Complex64>> {
    let m = f.times.len();
    let n = f.grid.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; m];
    if m < 2 {
        return out;
    }
    let dt = f.dt();
    let mut series = vec![Complex64::new(0.0, 0.0); m];
    for i in 0..n {
        for j in 0..m {
            series[j] = f.values[j][i];
        }
        for (j, d) in derivative_slice(&series, dt, 1).into_iter().enumerate() {
            out[j][i] = d;
        }
    }
    out
}

/// `∫_{t_anchor}^{t_j} g` at every instant.
fn time_integral(g: &[Complex64], dt: f64, anchor: usize) -> Vec<Complex64> {
    let m = g.len();
    if m >= 3 {
        let tg = Grid::new(0.0, dt * (m - 1) as f64, m).expect("m >= 3");
        return cumulative_integral_complex(&SampledFunction::new(tg, g.to_vec()).expect("same length"), anchor)
            .into_values();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    if m == 2 {
        let half = 0.5 * dt * (g[0] + g[1]);
        out[1 - anchor] = if anchor == 0 { half } else { -half };
    }
    out
}

/// Per-slice `‖iψ_t + ψ_xx − Vψ‖ / ‖ψ‖` over the interior.
pub fn tdse_residual(v: &SpaceTimeFunction, psi: &SpaceTimeFunction) -> Result<Vec<f64>, TdseError> {
    if !v.compatible(psi) {
        return Err(TdseError::Inconsistent("potential and solution use different grids or instants".into()));
    }
    let (_, d2) = space_derivatives(psi);
    let dt = time_derivative(psi);
    let n = psi.grid.len();
    let lo = EDGE_SKIP.min(n / 2);
    let hi = n - lo;
    Ok((0..psi.times.len())
        .map(|j| {
            let mut r = 0.0;
            let mut s = 0.0;
            for i in lo..hi {
                let p = psi.values[j][i];
                r += (I * dt[j][i] + d2[j][i] - v.values[j][i] * p).norm_sqr();
                s += p.norm_sqr();
            }
            if s == 0.0 {
                0.0
            } else {
                (r / s).sqrt()
            }
        })
        .collect())
}

/// Potential driving [`propagate_tdse`].
#[derive(Debug, Clone, Copy)]
pub enum TdsePotential<'a> {
    Static(&'a SampledFunction),
    Dynamic(&'a SpaceTimeFunction),
}

impl<'a> From<&'a SampledFunction> for TdsePotential<'a> {
    fn from(v: &'a SampledFunction) -> Self {
        TdsePotential::Static(v)
    }
}

impl<'a> From<&'a SpaceTimeFunction> for TdsePotential<'a> {
    fn from(v: &'a SpaceTimeFunction) -> Self {
        TdsePotential::Dynamic(v)
    }
}

impl TdsePotential<'_> {
    fn grid(&self) -> Grid {
        match self {
            TdsePotential::Static(v) => *v.grid(),
            TdsePotential::Dynamic(v) => v.grid,
        }
    }

    fn max_modulus(&self) -> f64 {
        match self {
            TdsePotential::Static(v) => v.max_modulus(),
            TdsePotential::Dynamic(v) => v.values.iter().flatten().fold(0.0, |m, z| m.max(z.norm())),
        }
    }

    fn is_static(&self) -> bool {
        match self {
            TdsePotential::Static(_) => true,
            TdsePotential::Dynamic(v) => v.times.len() == 1,
        }
    }

    /// Samples at time `t`, linear between slices.
    fn at(&self, t: f64) -> Result<Vec<Complex64>, TdseError> {
        match self {
            TdsePotential::Static(v) => Ok(v.values().iter().map(|x| Complex64::new(*x, 0.0)).collect()),
            TdsePotential::Dynamic(v) => {
                let m = v.times.len();
                if m == 1 {
                    return Ok(v.values[0].clone());
                }
                let dt = v.dt();
                let s = (t - v.times[0]) / dt;
                if s < -1e-9 || s > (m - 1) as f64 + 1e-9 {
                    return Err(TdseError::InvalidTimes(format!("potential is not sampled at t = {t}")));
                }
                let j = (s.floor().max(0.0) as usize).min(m - 2);
                let w = (s - j as f64).clamp(0.0, 1.0);
                Ok(v.values[j].iter().zip(&v.values[j + 1]).map(|(a, b)| a * (1.0 - w) + b * w).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Upper bound on the internal step in addition to `dt·max|V| ≤ PHASE_STEP`.
    pub max_dt: Option<f64>,
    pub step_drift: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        PropagateOptions { max_dt: None, step_drift: STEP_DRIFT }
    }
}

/// Banded matrix with two sub- and two super-diagonals; `rows[i][j − i + 2]`
/// holds entry `(i, j)`.
struct Banded {
    rows: Vec<[Complex64; 5]>,
}

impl Banded {
    /// In-place LU without pivoting; multipliers overwrite the lower band.
    fn factor(&mut self) -> Result<(), TdseError> {
        let n = self.rows.len();
        for k in 0..n {
            let p = self.rows[k][2];
            if p.norm() == 0.0 || !p.norm().is_finite() {
                return Err(TdseError::SingularStep);
            }
            for i in k + 1..(k + 3).min(n) {
                let off = k + 2 - i;
                let f = self.rows[i][off] / p;
                self.rows[i][off] = f;
                for j in k + 1..(k + 3).min(n) {
                    let upper = self.rows[k][j + 2 - k];
                    self.rows[i][j + 2 - i] -= f * upper;
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [Complex64]) {
        let n = self.rows.len();
        for i in 0..n {
            for k in i.saturating_sub(2)..i {
                let l = self.rows[i][k + 2 - i];
                b[i] = b[i] - l * b[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..(i + 3).min(n) {
                s -= self.rows[i][j + 2 - i] * b[j];
            }
            b[i] = s / self.rows[i][2];
        }
    }
}

/// `∫|ψ'|² / ∫|ψ|²`.
fn kinetic_energy(psi: &[Complex64], h: f64) -> f64 {
    let d = derivative_slice(psi, h, 1);
    let num: f64 = d.iter().map(|v| v.norm_sqr()).sum();
    let den: f64 = psi.iter().map(|v| v.norm_sqr()).sum();
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// `Hψ` on interior unknowns with the five-point Laplacian and zero
/// Dirichlet values outside.
fn apply_h(psi: &[Complex64], v: &[Complex64], h: f64, out: &mut [Complex64]) {
    let m = psi.len();
    let c = 1.0 / (12.0 * h * h);
    let get = |k: isize| if k < 0 || k >= m as isize { Complex64::new(0.0, 0.0) } else { psi[k as usize] };
    for i in 0..m {
        let k = i as isize;
        let lap = (-get(k - 2) + get(k - 1) * 16.0 - psi[i] * 30.0 + get(k + 1) * 16.0 - get(k + 2)) * c;
        out[i] = -lap + v[i] * psi[i];
    }
}

/// `I + iα H` for interior potential values `v`.
fn implicit_matrix(v: &[Complex64], h: f64, alpha: f64) -> Banded {
    let c = alpha / (12.0 * h * h);
    let rows = v
        .iter()
        .map(|vi| {
            let d = Complex64::new(1.0, 0.0) + I * (*vi * alpha + 30.0 * c);
            [I * c, I * (-16.0 * c), d, I * (-16.0 * c), I * c]
        })
        .collect();
    Banded { rows }
}

/// Crank–Nicolson evolution of `psi0` (taken at `times[0]`), returning a
/// slice at every instant. Edge values are held at zero.
pub fn propagate_tdse<'a>(
    v: impl Into<TdsePotential<'a>>,
    psi0: &ComplexFunction,
    times: &[f64],
) -> Result<SpaceTimeFunction, TdseError> {
    propagate_tdse_with(v, psi0, times, &PropagateOptions::default())
}

pub fn propagate_tdse_with<'a>(
    v: impl Into<TdsePotential<'a>>,
    psi0: &ComplexFunction,
    times: &[f64],
    opts: &PropagateOptions,
) -> Result<SpaceTimeFunction, TdseError> {
    let v = v.into();
    let grid = *psi0.grid();
    if !v.grid().same_as(&grid) {
        return Err(SampleError::GridMismatch.into());
    }
    if times.is_empty() {
        return SpaceTimeFunction::new(grid, vec![0.0], vec![psi0.values().to_vec()]);
    }
    check_times(times)?;
    let n = grid.len();
    let h = grid.spacing();
    // the phase advanced per step is bounded by the potential and by the
    // mean kinetic energy of the initial state
    let scale = v.max_modulus().max(kinetic_energy(psi0.values(), h));
    let mut dt_max = if scale > 0.0 { PHASE_STEP / scale } else { f64::INFINITY };
    if let Some(cap) = opts.max_dt {
        dt_max = dt_max.min(cap);
    }
    let mut values = Vec::with_capacity(times.len());
    let mut psi: Vec<Complex64> = psi0.values()[1..n - 1].to_vec();
    let mut first = psi0.values().to_vec();
    first[0] = Complex64::new(0.0, 0.0);
    first[n - 1] = Complex64::new(0.0, 0.0);
    values.push(first);
    let mut hpsi = vec![Complex64::new(0.0, 0.0); n - 2];
    let mut cached: Option<(f64, Banded)> = None;
    let mut step = 0usize;
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let subs = if dt_max.is_finite() { (span / dt_max).ceil().max(1.0) as usize } else { 1 };
        let dt = span / subs as f64;
        for s in 0..subs {
            let tm = w[0] + (s as f64 + 0.5) * dt;
            let vfull = v.at(tm)?;
            let vin = &vfull[1..n - 1];
            let alpha = 0.5 * dt;
            let reuse = v.is_static() && cached.as_ref().is_some_and(|(a, _)| *a == alpha);
            if !reuse {
                let mut a = implicit_matrix(vin, h, alpha);
                a.factor()?;
                cached = Some((alpha, a));
            }
            let lu = &cached.as_ref().expect("factored").1;
            let before: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            apply_h(&psi, vin, h, &mut hpsi);
            for (p, hp) in psi.iter_mut().zip(&hpsi) {
                *p -= I * alpha * hp;
            }
            lu.solve(&mut psi);
            let after: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            let drift = if before > 0.0 { (after - before).abs() / before } else { 0.0 };
            if !(drift <= opts.step_drift) {
                return Err(TdseError::NormDrift { step, drift });
            }
            step += 1;
        }
        let mut row = Vec::with_capacity(n);
        row.push(Complex64::new(0.0, 0.0));
        row.extend_from_slice(&psi);
        row.push(Complex64::new(0.0, 0.0));
        values.push(row);
    }
    SpaceTimeFunction::new(grid, times.to_vec(), values)
}

/// Transformation data `χ(x, t)` and `L₁(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TdseSeed {
    pub chi: SpaceTimeFunction,
    pub l1: Vec<f64>,
}

impl TdseSeed {
    pub fn new(chi: SpaceTimeFunction, l1: Vec<f64>) -> Result<Self, TdseError> {
        if l1.len() != chi.times.len() {
            return Err(TdseError::Inconsistent(format!("{} values of L₁ for {} instants", l1.len(), chi.times.len())));
        }
        if l1.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(TdseError::Inconsistent("L₁ must be positive and finite".into()));
        }
        Ok(TdseSeed { chi, l1 })
    }

    /// `L₁ = exp[−2∫_{t₀}^t Im χₓₓ ds]` evaluated at the grid midpoint.
    pub fn with_real_potential(chi: SpaceTimeFunction) -> Result<Self, TdseError> {
        let l1 = reality_l1(&chi);
        Self::new(chi, l1)
    }

    /// `e^{−χ} = φ(x) e^{−iEt}` for a nodeless stationary solution `φ`.
    pub fn stationary(phi: &SampledFunction, energy: f64, times: Vec<f64>) -> Result<Self, TdseError> {
        let logs: Vec<f64> = phi.values().iter().map(|p| -p.abs().ln()).collect();
        let g = *phi.grid();
        let values = times.iter().map(|t| logs.iter().map(|l| Complex64::new(*l, energy * t)).collect()).collect();
        let l1 = vec![1.0; times.len()];
        Self::new(SpaceTimeFunction::new(g, times, values)?, l1)
    }

    /// `e^{−χ} = e^{i(kx − k²t)}`.
    pub fn plane_wave(grid: Grid, k: f64, times: Vec<f64>) -> Result<Self, TdseError> {
        let l1 = vec![1.0; times.len()];
        let chi = SpaceTimeFunction::tabulate(grid, times, |x, t| Complex64::new(0.0, -k * x + k * k * t))?;
        Self::new(chi, l1)
    }

    /// Per-slice `max |−iχ_t + χₓ² − χₓₓ − V₀| / (1 + max|χₓ|²)`, the
    /// equation for `e^{−χ}` divided by `e^{−χ}`.
    pub fn residual(&self, v0: &SpaceTimeFunction) -> Result<Vec<f64>, TdseError> {
        if !v0.compatible(&self.chi) {
            return Err(TdseError::Inconsistent("seed and potential use different grids or instants".into()));
        }
        let (d1, d2) = space_derivatives(&self.chi);
        let dt = time_derivative(&self.chi);
        let n = self.chi.grid.len();
        let lo = EDGE_SKIP.min(n / 2);
        Ok((0..self.chi.times.len())
            .map(|j| {
                let mut r = 0.0f64;
                let mut s = 0.0f64;
                for i in lo..n - lo {
                    let cx = d1[j][i];
                    r = r.max((-I * dt[j][i] + cx * cx - d2[j][i] - v0.values[j][i]).norm());
                    s = s.max(cx.norm_sqr());
                }
                r / (1.0 + s)
            })
            .collect())
    }
}

fn reality_l1(chi: &SpaceTimeFunction) -> Vec<f64> {
    let mid = chi.grid.len() / 2;
    let h = chi.grid.spacing();
    let g: Vec<Complex64> = chi
        .values
        .iter()
        .map(|r| {
            let lo = mid.saturating_sub(3);
            let win = &r[lo..(lo + 7).min(r.len())];
            Complex64::new(derivative_slice(win, h, 2)[mid - lo].im, 0.0)
        })
        .collect();
    time_integral(&g, chi.dt(), 0).into_iter().map(|v| (-2.0 * v.re).exp()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealityReport {
    /// `max |Im χₓₓₓ|` over interior points of every slice.
    pub max_im_chi_xxx: f64,
    /// `max |L₁(t) − exp[−2∫ Im χₓₓ ds]|`.
    pub l1_deviation: f64,
}

impl RealityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_im_chi_xxx <= tol && self.l1_deviation <= tol
    }
}

pub fn check_reality(seed: &TdseSeed) -> RealityReport {
    let h = seed.chi.grid.spacing();
    let n = seed.chi.grid.len();
    let lo = EDGE_SKIP.min(n / 2);
    let mut worst = 0.0f64;
    for r in &seed.chi.values {
        let im: Vec<f64> = r.iter().map(|v| v.im).collect();
        let d3 = derivative_slice(&derivative_slice(&im, h, 2), h, 1);
        worst = d3[lo..n - lo].iter().fold(worst, |m, v| m.max(v.abs()));
    }
    let want = reality_l1(&seed.chi);
    let l1_deviation = seed.l1.iter().zip(&want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    RealityReport { max_im_chi_xxx: worst, l1_deviation }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdseOptions {
    /// Fail when `Im V₁` exceeds `reality_tolerance`.
    pub strict: bool,
    pub reality_tolerance: f64,
    pub solution_tolerance: f64,
}

impl Default for TdseOptions {
    fn default() -> Self {
        TdseOptions { strict: false, reality_tolerance: REALITY_TOLERANCE, solution_tolerance: SOLUTION_RESIDUAL }
    }
}

#[derive(Debug, Clone)]
pub struct TdseForward {
    pub v1: SpaceTimeFunction,
    pub psi1: SpaceTimeFunction,
    /// `max |Im V₁|` over interior points.
    pub imaginary_part: f64,
    pub reality: RealityReport,
    pub seed_residual: f64,
    pub source_residual: f64,
}

fn check_seed(v0: &SpaceTimeFunction, seed: &TdseSeed, tol: f64) -> Result<f64, TdseError> {
    let r = seed.residual(v0)?.into_iter().fold(0.0, f64::max);
    if !(r <= tol) {
        return Err(TdseError::NotASolution { what: "seed e^{−χ}", residual: r });
    }
    Ok(r)
}

/// `V₁ = V₀ + 2χₓₓ + i(ln L₁)_t`.
pub fn transformed_potential(v0: &SpaceTimeFunction, seed: &TdseSeed) -> Result<SpaceTimeFunction, TdseError> {
    if !v0.compatible(&seed.chi) {
        return Err(TdseError::Inconsistent("seed and potential use different grids or instants".into()));
    }
    let (_, d2) = space_derivatives(&seed.chi);
    let logs: Vec<f64> = seed.l1.iter().map(|l| l.ln()).collect();
    let dlog = if logs.len() > 1 { derivative_slice(&logs, seed.chi.dt(), 1) } else { vec![0.0] };
    let values = v0
        .values
        .iter()
        .zip(&d2)
        .zip(&dlog)
        .map(|((v, c), dl)| v.iter().zip(c).map(|(a, b)| a + b * 2.0 + I * *dl).collect())
        .collect();
    SpaceTimeFunction::new(v0.grid, v0.times.clone(), values)
}

/// `Tψ = L₁(ψₓ + χₓψ)` slice by slice.
pub fn apply_intertwiner(seed: &TdseSeed, psi: &SpaceTimeFunction) -> Result<SpaceTimeFunction, TdseError> {
    if !psi.compatible(&seed.chi) {
        return Err(TdseError::Inconsistent("seed and solution use different grids or instants".into()));
    }
    let (cx, _) = space_derivatives(&seed.chi);
    let (px, _) = space_derivatives(psi);
    let values = psi
        .values
        .iter()
        .enumerate()
        .map(|(j, r)| r.iter().enumerate().map(|(i, p)| (px[j][i] + cx[j][i] * *p) * seed.l1[j]).collect())
        .collect();
    SpaceTimeFunction::new(psi.grid, psi.times.clone(), values)
}

pub fn tdse_darboux_forward(
    v0: &SpaceTimeFunction,
    seed: &TdseSeed,
    psi0: &SpaceTimeFunction,
) -> Result<TdseForward, TdseError> {
    tdse_darboux_forward_with(v0, seed, psi0, &TdseOptions::default())
}

pub fn tdse_darboux_forward_with(
    v0: &SpaceTimeFunction,
    seed: &TdseSeed,
    psi0: &SpaceTimeFunction,
    opts: &TdseOptions,
) -> Result<TdseForward, TdseError> {
    let seed_residual = check_seed(v0, seed, opts.solution_tolerance)?;
    let source_residual = tdse_residual(v0, psi0)?.into_iter().fold(0.0, f64::max);
    if !(source_residual <= opts.solution_tolerance) {
        return Err(TdseError::NotASolution { what: "source wave", residual: source_residual });
    }
    let v1 = transformed_potential(v0, seed)?;
    let imaginary_part = v1.max_imag(EDGE_SKIP);
    let reality = check_reality(seed);
    if opts.strict && !(imaginary_part <= opts.reality_tolerance) {
        return Err(TdseError::RealityViolation { imag: imaginary_part, chi_xxx: reality.max_im_chi_xxx });
    }
    let psi1 = apply_intertwiner(seed, psi0)?;
    Ok(TdseForward { v1, psi1, imaginary_part, reality, seed_residual, source_residual })
}

/// `ψ₀ = (e^{−χ}/L₁)[∫_{x₀}^x e^{χ}ψ₁ dy + c₀(t)]` with
/// `c₀(t) = iL₁(t)∫_{t₀}^t (e^{χ}/L₁)(ψ₁ₓ − χₓψ₁)|_{x₀} ds`.
///
/// `x₀` defaults to the grid midpoint and `t₀` to the first instant; both
/// snap to the nearest sample. With `L₁ ≡ 1` this is the non-local
/// transformation of Bluman and Shtelen.
pub fn tdse_darboux_inverse(
    v1: &SpaceTimeFunction,
    seed: &TdseSeed,
    psi1: &SpaceTimeFunction,
    x0: Option<f64>,
    t0: Option<f64>,
) -> Result<SpaceTimeFunction, TdseError> {
    if !v1.compatible(&seed.chi) || !psi1.compatible(&seed.chi) {
        return Err(TdseError::Inconsistent("inputs use different grids or instants".into()));
    }
    let grid = psi1.grid;
    let times = &psi1.times;
    let ix = match x0 {
        Some(x) if x < grid.x_min() || x > grid.x_max() => {
            return Err(TdseError::Inconsistent(format!("x₀ = {x} lies outside the grid")))
        }
        Some(x) => grid.nearest_index(x),
        None => grid.len() / 2,
    };
    let jt = match t0 {
        None => 0,
        Some(t) => {
            let dt = psi1.dt();
            let tol = 1e-9 * dt.max(1.0);
            if t < times[0] - tol || t > times[times.len() - 1] + tol {
                return Err(TdseError::InvalidTimes(format!("t₀ = {t} lies outside the sampled instants")));
            }
            if dt == 0.0 {
                0
            } else {
                (((t - times[0]) / dt).round() as usize).min(times.len() - 1)
            }
        }
    };
    let (cx, _) = space_derivatives(&seed.chi);
    let (px, _) = space_derivatives(psi1);
    let g: Vec<Complex64> = (0..times.len())
        .map(|j| {
            let c = seed.chi.values[j][ix];
            c.exp() / seed.l1[j] * (px[j][ix] - cx[j][ix] * psi1.values[j][ix])
        })
        .collect();
    let c0: Vec<Complex64> =
        time_integral(&g, psi1.dt(), jt).into_iter().zip(&seed.l1).map(|(v, l)| I * *l * v).collect();
    let mut values = Vec::with_capacity(times.len());
    for (j, t) in times.iter().enumerate() {
        let chi = &seed.chi.values[j];
        let integrand: Vec<Complex64> = chi.iter().zip(&psi1.values[j]).map(|(c, p)| c.exp() * *p).collect();
        let f = SampledFunction::new(grid, integrand)?;
        let inner = cumulative_integral_complex(&f, ix);
        if inner.values().iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(TdseError::QuadratureDivergence { t: *t });
        }
        let row: Vec<Complex64> =
            chi.iter().zip(inner.values()).map(|(c, fv)| (-c).exp() / seed.l1[j] * (fv + c0[j])).collect();
        if row.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(TdseError::QuadratureDivergence { t: *t });
        }
        values.push(row);
    }
    SpaceTimeFunction::new(grid, times.clone(), values)
}

/// Per-slice `‖T(i∂_t − H₀)φ − (i∂_t − H₁)Tφ‖ / ‖φ‖` for a probe `φ`.
pub fn intertwining_defect(
    v0: &SpaceTimeFunction,
    v1: &SpaceTimeFunction,
    seed: &TdseSeed,
    probe: &SpaceTimeFunction,
) -> Result<Vec<f64>, TdseError> {
    if !v0.compatible(probe) || !v1.compatible(probe) {
        return Err(TdseError::Inconsistent("inputs use different grids or instants".into()));
    }
    let apply_l = |v: &SpaceTimeFunction, f: &SpaceTimeFunction| -> Result<SpaceTimeFunction, TdseError> {
        let (_, d2) = space_derivatives(f);
        let dt = time_derivative(f);
        let values = (0..f.times.len())
            .map(|j| (0..f.grid.len()).map(|i| I * dt[j][i] + d2[j][i] - v.values[j][i] * f.values[j][i]).collect())
            .collect();
        SpaceTimeFunction::new(f.grid, f.times.clone(), values)
    };
    let left = apply_intertwiner(seed, &apply_l(v0, probe)?)?;
    let right = apply_l(v1, &apply_intertwiner(seed, probe)?)?;
    let n = probe.grid.len();
    // the composed stencils widen near the edges
    let lo = (3 * EDGE_SKIP).min(n / 2);
    Ok((0..probe.times.len())
        .map(|j| {
            let mut d = 0.0;
            let mut s = 0.0;
            for i in lo..n - lo {
                d += (left.values[j][i] - right.values[j][i]).norm_sqr();
                s += probe.values[j][i].norm_sqr();
            }
            if s == 0.0 {
                0.0
            } else {
                (d / s).sqrt()
            }
        })
        .collect())
}

/// Per-slice `‖a − b‖ / ‖b‖` over the interior.
pub fn relative_distance(a: &SpaceTimeFunction, b: &SpaceTimeFunction) -> Result<Vec<f64>, TdseError> {
    if !a.compatible(b) {
        return Err(TdseError::Inconsistent("different grids or instants".into()));
    }
    let n = a.grid.len();
    let lo = EDGE_SKIP.min(n / 2);
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(ra, rb)| {
            let mut d = 0.0;
            let mut s = 0.0;
            for i in lo..n - lo {
                d += (ra[i] - rb[i]).norm_sqr();
                s += rb[i].norm_sqr();
            }
            if s == 0.0 {
                d.sqrt()
            } else {
                (d / s).sqrt()
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(g: Grid, x0: f64, k: f64, width: f64) -> ComplexFunction {
        SampledFunction::tabulate(g, |x| {
            let a = (-(x - x0).powi(2) / (2.0 * width * width)).exp();
            Complex64::new(0.0, k * x).exp() * a
        })
    }

    fn centre(f: &[Complex64], g: &Grid) -> f64 {
        let w: f64 = f.iter().map(|v| v.norm_sqr()).sum();
        f.iter().enumerate().map(|(i, v)| g.x(i) * v.norm_sqr()).sum::<f64>() / w
    }

    fn max(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(*x))
    }

    #[test]
    fn free_packet_moves_at_group_velocity() {
        let g = Grid::full_line_default();
        let k = 2.0;
        let times = uniform_times(0.0, 0.05, 21);
        let out = propagate_tdse(&SampledFunction::zeros(g), &packet(g, -3.0, k, 1.0), &times).unwrap();
        let norms = out.norms();
        for n in &norms {
            assert!((n - norms[0]).abs() <= 1e-8);
        }
        let shift = centre(&out.slices()[20], &g) - centre(&out.slices()[0], &g);
        assert!((shift / (2.0 * k * 1.0) - 1.0).abs() < 0.01, "shift {shift}");
    }

    #[test]
    fn harmonic_ground_state_is_stationary() {
        let g = Grid::full_line_default();
        let v = SampledFunction::tabulate(g, |x| x * x);
        let psi0 = SampledFunction::tabulate(g, |x| Complex64::new((-x * x / 2.0).exp(), 0.0));
        let times = uniform_times(0.0, 0.1, 11);
        let out = propagate_tdse(&v, &psi0, &times).unwrap();
        let mid = g.len() / 2;
        for (j, t) in times.iter().enumerate() {
            for i in 0..g.len() {
                assert!((out.slices()[j][i].norm() - psi0.at(i).norm()).abs() < 1e-6);
            }
            let expected = Complex64::new(0.0, -t).exp();
            assert!((out.slices()[j][mid] - expected).norm() < 1e-5, "t = {t}");
        }
    }

    #[test]
    fn empty_time_list_returns_initial_state() {
        let g = Grid::full_line_default();
        let psi0 = packet(g, 0.0, 1.0, 1.0);
        let out = propagate_tdse(&SampledFunction::zeros(g), &psi0, &[]).unwrap();
        assert_eq!(out.n_times(), 1);
        assert_eq!(out.slices()[0], psi0.values());
    }

    #[test]
    fn non_hermitian_potential_drifts() {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 3);
        let v = SpaceTimeFunction::tabulate(g, times.clone(), |_, _| Complex64::new(0.0, -0.5)).unwrap();
        assert!(matches!(
            propagate_tdse(&v, &packet(g, 0.0, 1.0, 1.0), &times),
            Err(TdseError::NormDrift { .. })
        ));
    }

    #[test]
    fn rejects_uneven_times() {
        let g = Grid::full_line_default();
        assert!(matches!(
            propagate_tdse(&SampledFunction::zeros(g), &packet(g, 0.0, 1.0, 1.0), &[0.0, 0.1, 0.3]),
            Err(TdseError::InvalidTimes(_))
        ));
    }

    #[test]
    fn plane_wave_seed_is_transparent() {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 11);
        let k = 0.7;
        let seed = TdseSeed::plane_wave(g, k, times.clone()).unwrap();
        let v0 = SpaceTimeFunction::constant_in_time(&SampledFunction::zeros(g), times.clone()).unwrap();
        let psi0 = propagate_tdse(&SampledFunction::zeros(g), &packet(g, 0.0, 0.5, 2.0), &times).unwrap();
        let fw = tdse_darboux_forward(&v0, &seed, &psi0).unwrap();
        assert!(fw.v1.slices().iter().flatten().all(|v| v.norm() < 1e-8));
        let r = check_reality(&seed);
        // third differences of x-proportional samples amplify rounding by 1/h³
        assert!(r.max_im_chi_xxx < 1e-7 && r.l1_deviation < 1e-12);
        let back = tdse_darboux_inverse(&fw.v1, &seed, &fw.psi1, None, None).unwrap();
        let again = apply_intertwiner(&seed, &back).unwrap();
        assert!(max(&relative_distance(&again, &fw.psi1).unwrap()) < 1e-8);
    }

    #[test]
    fn cosh_seed_gives_static_soliton() {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 21);
        let seed = TdseSeed::stationary(&SampledFunction::tabulate(g, f64::cosh), -1.0, times.clone()).unwrap();
        let r = check_reality(&seed);
        assert!(r.max_im_chi_xxx <= 1e-10 && r.l1_deviation <= 1e-10, "{r:?}");
        let v0 = SpaceTimeFunction::constant_in_time(&SampledFunction::zeros(g), times.clone()).unwrap();
        let psi0 = propagate_tdse(&SampledFunction::zeros(g), &packet(g, -1.0, 0.5, 1.5), &times).unwrap();
        let fw = tdse_darboux_forward_with(&v0, &seed, &psi0, &TdseOptions { strict: true, ..Default::default() }).unwrap();
        for row in fw.v1.slices() {
            for i in EDGE_SKIP..g.len() - EDGE_SKIP {
                assert!((row[i].re + 2.0 / g.x(i).cosh().powi(2)).abs() < 1e-6);
            }
        }
        assert!(max(&tdse_residual(&fw.v1, &fw.psi1).unwrap()) <= 1e-3);
        let back = tdse_darboux_inverse(&fw.v1, &seed, &fw.psi1, None, None).unwrap();
        assert!(max(&tdse_residual(&v0, &back).unwrap()) <= 1e-3);
        let again = apply_intertwiner(&seed, &back).unwrap();
        assert!(max(&relative_distance(&again, &fw.psi1).unwrap()) < 1e-4);
    }

    #[test]
    fn c0_vanishes_at_reference_time() {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 5);
        let seed = TdseSeed::stationary(&SampledFunction::tabulate(g, f64::cosh), -1.0, times.clone()).unwrap();
        let psi1 = SpaceTimeFunction::tabulate(g, times.clone(), |x, _| Complex64::new((-x * x).exp(), 0.0)).unwrap();
        let v1 = psi1.map(|_| Complex64::new(0.0, 0.0));
        let back = tdse_darboux_inverse(&v1, &seed, &psi1, Some(0.0), Some(0.02)).unwrap();
        // at t₀ and x = x₀ both the inner integral and c₀ vanish
        assert!(back.slices()[2][g.nearest_index(0.0)].norm() < 1e-15);
        assert!(back.slices()[0][g.nearest_index(0.0)].norm() > 0.0);
    }

    #[test]
    fn spreading_gaussian_seed_needs_l1() {
        // e^{−χ} = β^{−1/2} e^{−x²/4β}, β = a + it: Im χₓₓ = −t / 2|β|², so
        // L₁ = |β|/a and V₁ = a/|β|² is real and uniform in x.
        let g = Grid::full_line_default();
        let a = 4.0;
        let times = uniform_times(0.0, 0.02, 11);
        let chi = SpaceTimeFunction::tabulate(g, times.clone(), |x, t| {
            let b = Complex64::new(a, t);
            0.5 * b.ln() + x * x / (4.0 * b)
        })
        .unwrap();
        let seed = TdseSeed::with_real_potential(chi.clone()).unwrap();
        for (l, t) in seed.l1.iter().zip(&times) {
            assert!((l - (a * a + t * t).sqrt() / a).abs() < 1e-6);
        }
        let v0 = SpaceTimeFunction::constant_in_time(&SampledFunction::zeros(g), times.clone()).unwrap();
        assert!(max(&seed.residual(&v0).unwrap()) < 1e-8);
        let v1 = transformed_potential(&v0, &seed).unwrap();
        for (row, t) in v1.slices().iter().zip(&times) {
            for v in &row[EDGE_SKIP..g.len() - EDGE_SKIP] {
                assert!((v.re - a / (a * a + t * t)).abs() < 1e-6 && v.im.abs() < 1e-6);
            }
        }
        let bare = TdseSeed::new(chi, vec![1.0; times.len()]).unwrap();
        let psi0 = propagate_tdse(&SampledFunction::zeros(g), &packet(g, 0.0, 0.5, 2.0), &times).unwrap();
        let strict = TdseOptions { strict: true, ..Default::default() };
        assert!(matches!(tdse_darboux_forward_with(&v0, &bare, &psi0, &strict), Err(TdseError::RealityViolation { .. })));
        assert!(check_reality(&bare).l1_deviation > 1e-4);
        assert!(tdse_darboux_forward_with(&v0, &seed, &psi0, &strict).is_ok());
    }

    #[test]
    fn cubic_phase_is_detected() {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 3);
        let c = 0.003;
        let chi = SpaceTimeFunction::tabulate(g, times, |x, _| Complex64::new(-x.cosh().ln(), c * x.powi(3) / 6.0)).unwrap();
        let r = check_reality(&TdseSeed::new(chi, vec![1.0; 3]).unwrap());
        assert!((r.max_im_chi_xxx / c - 1.0).abs() < 0.05);
    }

    #[test]
    fn non_real_seed_fails_in_strict_mode() {
        // e^{−χ} = 2 + e^{i(x − t)} solves the free equation and has no nodes
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 11);
        let chi = SpaceTimeFunction::tabulate(g, times.clone(), |x, t| -(2.0 + Complex64::new(0.0, x - t).exp()).ln())
            .unwrap();
        let seed = TdseSeed::new(chi, vec![1.0; times.len()]).unwrap();
        assert!(check_reality(&seed).max_im_chi_xxx > 1e-2);
        let v0 = SpaceTimeFunction::constant_in_time(&SampledFunction::zeros(g), times.clone()).unwrap();
        let psi0 = propagate_tdse(&SampledFunction::zeros(g), &packet(g, 0.0, 0.5, 2.0), &times).unwrap();
        let strict = TdseOptions { strict: true, ..Default::default() };
        assert!(matches!(tdse_darboux_forward_with(&v0, &seed, &psi0, &strict), Err(TdseError::RealityViolation { .. })));
        let lax = tdse_darboux_forward(&v0, &seed, &psi0).unwrap();
        assert!(lax.imaginary_part > 1e-2);
    }

    #[test]
    fn intertwining_holds_for_arbitrary_probe() {
        let g = Grid::full_line_default();
        let times = uniform_times(0.0, 0.01, 11);
        let seed = TdseSeed::stationary(&SampledFunction::tabulate(g, f64::cosh), -1.0, times.clone()).unwrap();
        let v0 = SpaceTimeFunction::constant_in_time(&SampledFunction::zeros(g), times.clone()).unwrap();
        let v1 = transformed_potential(&v0, &seed).unwrap();
        let probe = SpaceTimeFunction::tabulate(g, times, |x, t| {
            Complex64::new(-(x - t).powi(2), 0.3 * x * t).exp() * (1.0 + 0.2 * x)
        })
        .unwrap();
        assert!(max(&intertwining_defect(&v0, &v1, &seed, &probe).unwrap()) < 1e-3);
    }

    #[test]
    fn slices_round_trip_through_files() {
        let g = crate::grid::make_grid(-1.0, 1.0, 11).unwrap();
        let f = SpaceTimeFunction::tabulate(g, uniform_times(0.0, 0.5, 3), |x, t| Complex64::new(x, t)).unwrap();
        let dir = std::env::temp_dir().join(format!("tdse_slices_{}", std::process::id()));
        f.write_dir(&dir).unwrap();
        let back = SpaceTimeFunction::read_dir(&dir).unwrap();
        fs::remove_dir_all(&dir).unwrap();
        assert_eq!(back, f);
    }
}
