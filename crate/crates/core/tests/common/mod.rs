//! Independent spectral oracle: the second-order finite-difference matrix
//! of `−D² + u` with Dirichlet ends, solved by Sturm-sequence bisection and
//! Richardson-extrapolated over three spacings. Shares no code with the
//! Numerov shooting solver.

#![allow(dead_code)]

/// Number of eigenvalues below `lambda` of the tridiagonal matrix with
/// diagonal `diag` and constant off-diagonal `off`.
fn sturm_count(diag: &[f64], off: f64, lambda: f64) -> usize {
    let off2 = off * off;
    let mut count = 0;
    let mut q = 1.0;
    for (i, d) in diag.iter().enumerate() {
        q = if i == 0 { d - lambda } else { d - lambda - off2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d.abs() + lambda.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest `count` eigenvalues of the finite-difference operator on the
/// `n` interior points of `[a, b]`.
pub fn fd_eigenvalues(u: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize, count: usize) -> Vec<f64> {
    let h = (b - a) / (n + 1) as f64;
    let diag: Vec<f64> = (1..=n).map(|i| 2.0 / (h * h) + u(a + i as f64 * h)).collect();
    let off = -1.0 / (h * h);
    // Gershgorin bounds
    let lo = diag.iter().fold(f64::INFINITY, |m, d| m.min(*d)) - 2.0 / (h * h);
    let hi = diag.iter().fold(f64::NEG_INFINITY, |m, d| m.max(*d)) + 2.0 / (h * h);
    (0..count)
        .map(|k| {
            let (mut l, mut r) = (lo, hi);
            while r - l > 1e-14 * (1.0 + l.abs().max(r.abs())) {
                let m = 0.5 * (l + r);
                if sturm_count(&diag, off, m) > k {
                    r = m;
                } else {
                    l = m;
                }
            }
            0.5 * (l + r)
        })
        .collect()
}

/// Eigenvalues extrapolated from spacings `h`, `h/2`, `h/4` (error
/// `O(h⁶)`), with `n_coarse` interior points on the coarsest grid.
pub fn oracle_levels(u: &dyn Fn(f64) -> f64, a: f64, b: f64, n_coarse: usize, count: usize) -> Vec<f64> {
    let e1 = fd_eigenvalues(u, a, b, n_coarse, count);
    let e2 = fd_eigenvalues(u, a, b, 2 * n_coarse + 1, count);
    let e3 = fd_eigenvalues(u, a, b, 4 * n_coarse + 3, count);
    (0..count)
        .map(|k| {
            let r1 = (4.0 * e2[k] - e1[k]) / 3.0;
            let r2 = (4.0 * e3[k] - e2[k]) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .collect()
}

/// Oracle on the default full-line window `[−15, 15]`.
pub fn full_line_levels(u: &dyn Fn(f64) -> f64, count: usize) -> Vec<f64> {
    oracle_levels(u, -15.0, 15.0, 1499, count)
}

/// Oracle levels lying below `threshold` (the bound part of the spectrum
/// of a short-range potential).
pub fn bound_levels(u: &dyn Fn(f64) -> f64, max: usize, threshold: f64) -> Vec<f64> {
    full_line_levels(u, max).into_iter().filter(|e| *e < threshold).collect()
}

pub fn sech2(ell: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| -ell * (ell + 1.0) / x.cosh().powi(2)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
