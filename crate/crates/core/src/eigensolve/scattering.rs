use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::numerov::discrete_wavenumber;
use super::EigenError;
use crate::sampled::{fmt_num, SampleError, SampledFunction};

/// Largest `|u|` tolerated at either grid edge.
const EDGE_DECAY: f64 = 1e-10;

/// Reflection and transmission amplitudes per wavenumber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringData {
    pub wavenumbers: Vec<f64>,
    pub reflection: Vec<Complex64>,
    pub transmission: Vec<Complex64>,
}

impl ScatteringData {
    pub fn reflection_moduli(&self) -> Vec<f64> {
        self.reflection.iter().map(|r| r.norm()).collect()
    }

    pub fn transmission_moduli(&self) -> Vec<f64> {
        self.transmission.iter().map(|t| t.norm()).collect()
    }

    /// Largest deviation of `|R|² + |T|²` from one.
    pub fn flux_defect(&self) -> f64 {
        self.reflection
            .iter()
            .zip(&self.transmission)
            .map(|(r, t)| (r.norm_sqr() + t.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `k,re_R,im_R,re_T,im_T`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), SampleError> {
        writeln!(w, "k,re_R,im_R,re_T,im_T")?;
        for ((k, r), t) in self.wavenumbers.iter().zip(&self.reflection).zip(&self.transmission) {
            writeln!(w, "{},{},{},{},{}", fmt_num(*k), fmt_num(r.re), fmt_num(r.im), fmt_num(t.re), fmt_num(t.im))?;
        }
        Ok(())
    }
}

/// Scattering amplitudes for waves incident from the left.
///
/// A pure transmitted wave `e^{ikx}` is propagated from the right edge to
/// the left edge and split there into `e^{±ikx}`. The discrete Numerov
/// wavenumber is used on both ends, so free propagation is exact.
pub fn rt_coefficients(u: &SampledFunction, k_list: &[f64]) -> Result<ScatteringData, EigenError> {
    let v = u.values();
    let edge = v[0].abs().max(v[v.len() - 1].abs());
    if edge > EDGE_DECAY {
        return Err(EigenError::LongRange { edge_value: edge });
    }
    if let Some(k) = k_list.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
        return Err(EigenError::InvalidConfig(format!("wavenumber {k} is not positive")));
    }
    let pairs: Vec<(Complex64, Complex64)> = k_list.par_iter().map(|&k| amplitudes(u, k)).collect();
    Ok(ScatteringData {
        wavenumbers: k_list.to_vec(),
        reflection: pairs.iter().map(|p| p.0).collect(),
        transmission: pairs.iter().map(|p| p.1).collect(),
    })
}

fn amplitudes(u: &SampledFunction, k: f64) -> (Complex64, Complex64) {
    let g = u.grid();
    let h = g.spacing();
    let n = g.n_points();
    let kt = discrete_wavenumber(k, h);
    let c = h * h / 12.0;
    let q: Vec<f64> = u.values().iter().map(|v| v - k * k).collect();
    let plane = |x: f64| Complex64::from_polar(1.0, kt * x);
    let mut next = plane(g.x(n - 1));
    let mut cur = plane(g.x(n - 2));
    for i in (1..n - 1).rev() {
        let prev = ((1.0 + 5.0 * c * q[i]) * 2.0 * cur - (1.0 - c * q[i + 1]) * next) / (1.0 - c * q[i - 1]);
        next = cur;
        cur = prev;
    }
    // cur = ψ(x₀), next = ψ(x₁); solve A e^{ik̃x} + B e^{−ik̃x}
    let (x0, x1) = (g.x(0), g.x(1));
    let (e0, e1) = (plane(x0), plane(x1));
    let det = e0 / e1 - e1 / e0;
    let a = (cur / e1 - next / e0) / det;
    let b = (next * e0 - cur * e1) / det;
    (b / a, Complex64::new(1.0, 0.0) / a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn ks() -> Vec<f64> {
        (1..=10).map(|i| 0.3 * i as f64).collect()
    }

    #[test]
    fn free_particle() {
        let u = SampledFunction::zeros(Grid::full_line_default());
        let s = rt_coefficients(&u, &ks()).unwrap();
        for (r, t) in s.reflection.iter().zip(&s.transmission) {
            assert!(r.norm() < 1e-10);
            assert!((t - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn soliton_is_reflectionless() {
        let g = Grid::full_line_default();
        let u = SampledFunction::tabulate(g, |x| -2.0 / x.cosh().powi(2));
        let s = rt_coefficients(&u, &ks()).unwrap();
        for (k, t) in s.wavenumbers.iter().zip(&s.transmission) {
            assert!((t.norm() - 1.0).abs() < 1e-4, "k = {k}");
            // T = (k + i)/(k − i) up to the grid phase
            let exact = Complex64::new(*k, 1.0) / Complex64::new(*k, -1.0);
            assert!((t - exact).norm() < 1e-4, "k = {k}: {t} vs {exact}");
        }
        assert!(s.flux_defect() < 1e-4);
    }

    #[test]
    fn barrier_conserves_flux() {
        let g = Grid::full_line_default();
        let u = SampledFunction::tabulate(g, |x| 1.5 * (-x * x).exp());
        let s = rt_coefficients(&u, &ks()).unwrap();
        assert!(s.flux_defect() < 1e-8);
        assert!(s.reflection[0].norm() > 0.1);
    }

    #[test]
    fn harmonic_is_long_range() {
        let u = SampledFunction::tabulate(Grid::full_line_default(), |x| x * x);
        assert!(matches!(rt_coefficients(&u, &[1.0]), Err(EigenError::LongRange { .. })));
    }

    #[test]
    fn csv_header() {
        let u = SampledFunction::zeros(Grid::full_line_default());
        let s = rt_coefficients(&u, &[1.0]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("k,re_R,im_R,re_T,im_T\n1.0,"));
    }
}
