//! Real and complex functions sampled on a [`Grid`].

use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("sample count {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("analytic evaluator `{name}` disagrees with samples at index {index} (|diff| = {diff:e})")]
    AnalyticMismatch { name: String, index: usize, diff: f64 },
    #[error("grids differ")]
    GridMismatch,
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Scalar types a [`SampledFunction`] can hold.
pub trait Sample:
    Copy
    + Send
    + Sync
    + PartialEq
    + fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<f64, Output = Self>
    + 'static
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// A named closed-form evaluator attached to sampled data.
#[derive(Clone)]
pub struct Analytic<T> {
    name: String,
    eval: Arc<dyn Fn(f64) -> T + Send + Sync>,
}

impl<T> Analytic<T> {
    pub fn new(name: impl Into<String>, eval: impl Fn(f64) -> T + Send + Sync + 'static) -> Self {
        Analytic { name: name.into(), eval: Arc::new(eval) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> T {
        (self.eval)(x)
    }
}

impl<T> fmt::Debug for Analytic<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Analytic({})", self.name)
    }
}

/// Samples of a function on a uniform grid, optionally carrying the
/// closed form they were taken from.
#[derive(Debug, Clone)]
pub struct SampledFunction<T = f64> {
    grid: Grid,
    values: Vec<T>,
    analytic: Option<Analytic<T>>,
}

pub type ComplexFunction = SampledFunction<Complex64>;

impl<T: Sample> SampledFunction<T> {
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self, SampleError> {
        if values.len() != grid.n_points() {
            return Err(SampleError::LengthMismatch { expected: grid.n_points(), got: values.len() });
        }
        Ok(SampledFunction { grid, values, analytic: None })
    }

    /// Samples `f` on the grid and keeps it as the analytic evaluator.
    pub fn from_fn(grid: Grid, name: impl Into<String>, f: impl Fn(f64) -> T + Send + Sync + 'static) -> Self {
        let values = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        SampledFunction { grid, values, analytic: Some(Analytic::new(name, f)) }
    }

    /// Samples `f` without retaining it.
    pub fn tabulate(grid: Grid, f: impl Fn(f64) -> T) -> Self {
        let values = (0..grid.n_points()).map(|i| f(grid.x(i))).collect();
        SampledFunction { grid, values, analytic: None }
    }

    pub fn zeros(grid: Grid) -> Self {
        SampledFunction { grid, values: vec![T::zero(); grid.n_points()], analytic: None }
    }

    /// Attaches a closed form, checking it against every sample to
    /// `1e-12 * (1 + |analytic|)`.
    pub fn with_analytic(mut self, analytic: Analytic<T>) -> Result<Self, SampleError> {
        for (i, &v) in self.values.iter().enumerate() {
            let a = analytic.eval(self.grid.x(i));
            let diff = (v - a).modulus();
            if !(diff <= 1e-12 * (1.0 + a.modulus())) {
                return Err(SampleError::AnalyticMismatch { name: analytic.name.clone(), index: i, diff });
            }
        }
        self.analytic = Some(analytic);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn analytic(&self) -> Option<&Analytic<T>> {
        self.analytic.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize) -> T {
        self.values[i]
    }

    /// New function on the same grid; the analytic tag is dropped.
    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> SampledFunction<U> {
        SampledFunction { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect(), analytic: None }
    }

    pub fn map_indexed<U: Sample>(&self, f: impl Fn(usize, f64, T) -> U) -> SampledFunction<U> {
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i, self.grid.x(i), v)).collect();
        SampledFunction { grid: self.grid, values, analytic: None }
    }

    pub fn zip_with<U: Sample, V: Sample>(
        &self,
        other: &SampledFunction<U>,
        f: impl Fn(T, U) -> V,
    ) -> Result<SampledFunction<V>, SampleError> {
        if !self.grid.same_as(other.grid()) {
            return Err(SampleError::GridMismatch);
        }
        let values = self.values.iter().zip(other.values()).map(|(&a, &b)| f(a, b)).collect();
        Ok(SampledFunction { grid: self.grid, values, analytic: None })
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// Sup-norm distance over indices `skip..n-skip`.
    pub fn sup_distance(&self, other: &SampledFunction<T>, skip: usize) -> Result<f64, SampleError> {
        if !self.grid.same_as(other.grid()) {
            return Err(SampleError::GridMismatch);
        }
        let n = self.len();
        let hi = n.saturating_sub(skip);
        Ok((skip.min(hi)..hi).map(|i| (self.values[i] - other.values[i]).modulus()).fold(0.0, f64::max))
    }

    /// Keeps every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> Option<Self> {
        let grid = self.grid.decimate(stride)?;
        let values = self.values.iter().step_by(stride).copied().collect();
        Some(SampledFunction { grid, values, analytic: None })
    }

    /// `g(x) = f(-x)` on the mirrored grid.
    pub fn mirrored(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        SampledFunction { grid: self.grid.mirrored(), values, analytic: None }
    }
}

impl SampledFunction<f64> {
    pub fn to_complex(&self) -> ComplexFunction {
        self.map(|v| Complex64::new(v, 0.0))
    }

    /// Evaluates by cubic Lagrange interpolation between samples; clamps
    /// outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        let n = g.n_points();
        if x <= g.x_min() {
            return self.values[0];
        }
        if x >= g.x_max() {
            return self.values[n - 1];
        }
        let t = (x - g.x_min()) / g.spacing();
        let i = (t.floor() as usize).min(n - 2);
        let s = t - i as f64;
        let start = i.saturating_sub(1).min(n.saturating_sub(4));
        let nodes: Vec<usize> = (start..(start + 4).min(n)).collect();
        let pos = |j: usize| j as f64 - i as f64;
        let mut acc = 0.0;
        for &j in &nodes {
            let mut w = 1.0;
            for &m in &nodes {
                if m != j {
                    w *= (s - pos(m)) / (pos(j) - pos(m));
                }
            }
            acc += w * self.values[j];
        }
        acc
    }

    pub fn write_csv<W: Write>(&self, mut w: W, header: &str) -> Result<(), SampleError> {
        writeln!(w, "x,{header}")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", fmt_num(self.grid.x(i)), fmt_num(*v))?;
        }
        Ok(())
    }

    /// Reads a two-column `x,value` CSV with a one-line header.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SampleError> {
        let rows = read_rows(r, 2)?;
        let grid = grid_from_abscissae(&rows.iter().map(|r| r[0]).collect::<Vec<_>>())?;
        SampledFunction::new(grid, rows.iter().map(|r| r[1]).collect())
    }
}

impl ComplexFunction {
    pub fn re(&self) -> SampledFunction<f64> {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> SampledFunction<f64> {
        self.map(|v| v.im)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SampleError> {
        writeln!(w, "x,re,im")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{}", fmt_num(self.grid.x(i)), fmt_num(v.re), fmt_num(v.im))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, SampleError> {
        let rows = read_rows(r, 3)?;
        let grid = grid_from_abscissae(&rows.iter().map(|r| r[0]).collect::<Vec<_>>())?;
        SampledFunction::new(grid, rows.iter().map(|r| Complex64::new(r[1], r[2])).collect())
    }
}

/// Shortest round-trip decimal form; identical inputs give identical text.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:?}")
    }
}

fn read_rows<R: BufRead>(r: R, cols: usize) -> Result<Vec<Vec<f64>>, SampleError> {
    let mut rows = Vec::new();
    for (ln, line) in r.lines().enumerate() {
        let line = line?;
        if ln == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| SampleError::Csv(format!("line {}: {e}", ln + 1))))
            .collect::<Result<_, _>>()?;
        if fields.len() != cols {
            return Err(SampleError::Csv(format!("line {}: expected {cols} columns, got {}", ln + 1, fields.len())));
        }
        rows.push(fields);
    }
    Ok(rows)
}

fn grid_from_abscissae(xs: &[f64]) -> Result<Grid, SampleError> {
    if xs.len() < 3 {
        return Err(SampleError::Csv("need at least three rows".into()));
    }
    let grid = Grid::new(xs[0], xs[xs.len() - 1], xs.len()).map_err(|e| SampleError::Csv(e.to_string()))?;
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.x(i)).abs() > 1e-9 * (1.0 + x.abs()) {
            return Err(SampleError::Csv(format!("abscissa {i} is off the uniform grid")));
        }
    }
    Ok(grid)
}

#[derive(Serialize, Deserialize)]
struct Repr<T> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Sample + Serialize> Serialize for SampledFunction<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Repr { grid: self.grid, values: self.values.clone() }.serialize(s)
    }
}

impl<'de, T: Sample + Deserialize<'de>> Deserialize<'de> for SampledFunction<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = Repr::<T>::deserialize(d)?;
        SampledFunction::new(r.grid, r.values).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn length_checked() {
        let g = make_grid(0.0, 1.0, 5).unwrap();
        assert!(matches!(SampledFunction::new(g, vec![0.0; 4]), Err(SampleError::LengthMismatch { .. })));
    }

    #[test]
    fn analytic_tag_validated() {
        let g = make_grid(0.0, 1.0, 11).unwrap();
        let f = SampledFunction::tabulate(g, |x| x * x);
        assert!(f.clone().with_analytic(Analytic::new("sq", |x| x * x)).is_ok());
        assert!(f.with_analytic(Analytic::new("cube", |x| x * x * x)).is_err());
    }

    #[test]
    fn csv_roundtrip_real_and_complex() {
        let g = make_grid(-1.0, 1.0, 21).unwrap();
        let f = SampledFunction::tabulate(g, |x| (3.0 * x).sin());
        let mut buf = Vec::new();
        f.write_csv(&mut buf, "value").unwrap();
        let back = SampledFunction::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values(), f.values());

        let c = SampledFunction::tabulate(g, |x| Complex64::new(x, -x * x));
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert!(std::str::from_utf8(&buf).unwrap().starts_with("x,re,im\n"));
        let back = ComplexFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values(), c.values());
    }

    #[test]
    fn json_shape() {
        let g = make_grid(0.0, 1.0, 3).unwrap();
        let f = SampledFunction::new(g, vec![1.0, 2.0, 3.0]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"grid":{"x_min":0.0,"x_max":1.0,"n_points":3},"values":[1.0,2.0,3.0]}"#);
        let back: SampledFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn cubic_interpolation_exact_on_cubics() {
        let g = make_grid(-2.0, 2.0, 41).unwrap();
        let f = SampledFunction::tabulate(g, |x| x * x * x - 2.0 * x + 1.0);
        for &x in &[-1.93, -0.05, 0.77, 1.999] {
            let exact = x * x * x - 2.0 * x + 1.0;
            assert!((f.interpolate(x) - exact).abs() < 1e-12);
        }
    }
}
