//! Uniform one-dimensional lattices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid bounds: x_min={x_min}, x_max={x_max}, n_points={n_points} (need x_min < x_max and n_points >= 3)")]
    InvalidBounds { x_min: f64, x_max: f64, n_points: usize },
}

/// A uniform grid `x_i = x_min + i * spacing`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    #[serde(skip)]
    spacing: f64,
}

#[derive(Deserialize)]
struct GridRepr {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = GridRepr::deserialize(d)?;
        Grid::new(r.x_min, r.x_max, r.n_points).map_err(serde::de::Error::custom)
    }
}

/// Builds a uniform grid, rejecting degenerate bounds.
pub fn make_grid(x_min: f64, x_max: f64, n_points: usize) -> Result<Grid, GridError> {
    Grid::new(x_min, x_max, n_points)
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self, GridError> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max || n_points < 3 {
            return Err(GridError::InvalidBounds { x_min, x_max, n_points });
        }
        let spacing = (x_max - x_min) / (n_points - 1) as f64;
        Ok(Grid { x_min, x_max, n_points, spacing })
    }

    /// Default full-line window, `[-15, 15]` with 3001 points.
    pub fn full_line_default() -> Self {
        Grid::new(-15.0, 15.0, 3001).expect("static bounds")
    }

    /// Default half-line window, `[0, 30]` with 3001 points.
    pub fn half_line_default() -> Self {
        Grid::new(0.0, 30.0, 3001).expect("static bounds")
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Index of the sample nearest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let t = ((x - self.x_min) / self.spacing).round();
        t.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Sub-grid keeping every `stride`-th point. `None` if the stride does
    /// not tile the grid or leaves fewer than three points.
    pub fn decimate(&self, stride: usize) -> Option<Grid> {
        if stride == 0 || (self.n_points - 1) % stride != 0 {
            return None;
        }
        let n = (self.n_points - 1) / stride + 1;
        Grid::new(self.x_min, self.x_max, n).ok()
    }

    /// Grid mirrored through the origin, `[-x_max, -x_min]`.
    pub fn mirrored(&self) -> Grid {
        Grid::new(-self.x_max, -self.x_min, self.n_points).expect("mirror of a valid grid")
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n_points == other.n_points
            && (self.x_min - other.x_min).abs() <= 1e-12 * (1.0 + self.x_min.abs())
            && (self.x_max - other.x_max).abs() <= 1e-12 * (1.0 + self.x_max.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_window_spacing() {
        let g = make_grid(-15.0, 15.0, 3001).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert_eq!(g.x(1500), 0.0);
    }

    #[test]
    fn three_point_unit_grid() {
        let g = make_grid(0.0, 1.0, 3).unwrap();
        assert_eq!(g.abscissae(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(matches!(make_grid(1.0, 1.0, 10), Err(GridError::InvalidBounds { .. })));
        assert!(make_grid(0.0, 1.0, 2).is_err());
        assert!(make_grid(2.0, 1.0, 10).is_err());
    }

    #[test]
    fn json_roundtrip_validates() {
        let g = make_grid(-1.0, 2.0, 31).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"x_min":-1.0,"x_max":2.0,"n_points":31}"#);
        let back: Grid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Grid>(r#"{"x_min":1.0,"x_max":0.0,"n_points":31}"#).is_err());
    }

    #[test]
    fn decimation() {
        let g = make_grid(-15.0, 15.0, 3001).unwrap();
        let d = g.decimate(2).unwrap();
        assert_eq!(d.n_points(), 1501);
        assert!((d.spacing() - 0.02).abs() < 1e-15);
        assert!(g.decimate(7).is_none());
    }
}
