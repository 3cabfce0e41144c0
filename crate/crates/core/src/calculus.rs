//! Finite-difference stencils and cumulative quadrature on uniform grids.
//!
//! Derivatives use seven-point windows: centered (sixth order) in the
//! interior, shifted one-sided windows within three points of an edge.
//! Edge values are less accurate and comparisons conventionally skip
//! [`EDGE_SKIP`] points on each side.

use thiserror::Error;

use crate::grid::Grid;
use crate::sampled::{Sample, SampledFunction};

/// Outer points excluded from interior comparisons.
pub const EDGE_SKIP: usize = 5;

const WINDOW: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("function crosses zero near index {index} (x = {x})")]
    ZeroCrossing { index: usize, x: f64 },
    #[error("function vanishes identically")]
    Vanishing,
}

/// Finite-difference weights for derivatives `0..=order` at `z` over the
/// nodes `xs` (Fornberg's recursion). Row `k` holds the weights of the
/// `k`-th derivative.
pub fn fd_weights(z: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil plan for one derivative order on `n` points: window start and
/// weights (already divided by `h^order`) per output index.
struct Stencil {
    width: usize,
    half: usize,
    // weights[p] for window offset p = position of the target in the window
    weights: Vec<Vec<f64>>,
}

impl Stencil {
    fn new(n: usize, h: f64, order: usize) -> Self {
        let width = WINDOW.min(n);
        let half = width / 2;
        let scale = h.powi(order as i32);
        let nodes: Vec<f64> = (0..width).map(|j| j as f64).collect();
        let weights = (0..width)
            .map(|p| fd_weights(p as f64, &nodes, order)[order].iter().map(|w| w / scale).collect())
            .collect();
        Stencil { width, half, weights }
    }

    #[inline]
    fn apply<T: Sample>(&self, f: &[T], i: usize) -> T {
        let n = f.len();
        let start = if i < self.half {
            0
        } else if i + self.width - self.half > n {
            n - self.width
        } else {
            i - self.half
        };
        let w = &self.weights[i - start];
        let mut acc = T::zero();
        for (k, &wk) in w.iter().enumerate() {
            acc = acc + f[start + k] * wk;
        }
        acc
    }
}

/// `order`-th derivative (1 or 2) of samples with spacing `h`.
pub fn derivative_slice<T: Sample>(f: &[T], h: f64, order: usize) -> Vec<T> {
    let st = Stencil::new(f.len(), h, order);
    (0..f.len()).map(|i| st.apply(f, i)).collect()
}

pub fn derivative<T: Sample>(f: &SampledFunction<T>) -> SampledFunction<T> {
    let v = derivative_slice(f.values(), f.grid().spacing(), 1);
    SampledFunction::new(*f.grid(), v).expect("same grid")
}

pub fn second_derivative<T: Sample>(f: &SampledFunction<T>) -> SampledFunction<T> {
    let v = derivative_slice(f.values(), f.grid().spacing(), 2);
    SampledFunction::new(*f.grid(), v).expect("same grid")
}

/// First derivative that, point by point, differences either `f` or
/// `ln|f|` (as `f · D ln|f|`), whichever a 5-point versus 7-point
/// comparison says is better resolved. Exponential tails are nearly
/// polynomial in `ln|f|`; oscillations and nodes are not.
pub fn smooth_derivative(f: &[f64], h: f64) -> Vec<f64> {
    const NODE_MARGIN: usize = 10;
    let n = f.len();
    let direct = derivative_slice(f, h, 1);
    if n < WINDOW {
        return direct;
    }
    let direct5 = five_point_d1(f, h);
    let mut out = direct.clone();
    let mut start = 0;
    while start < n {
        if f[start] == 0.0 {
            start += 1;
            continue;
        }
        let sign = f[start] > 0.0;
        let mut end = start;
        while end < n && f[end] != 0.0 && (f[end] > 0.0) == sign {
            end += 1;
        }
        if end - start >= WINDOW {
            let logs: Vec<f64> = f[start..end].iter().map(|v| v.abs().ln()).collect();
            let d7 = derivative_slice(&logs, h, 1);
            let d5 = five_point_d1(&logs, h);
            for (k, i) in (start..end).enumerate() {
                // stay clear of sign changes, where ln|f| is singular
                if (start > 0 && k < NODE_MARGIN) || (end < n && end - i <= NODE_MARGIN) {
                    continue;
                }
                let err_log = (d7[k] - d5[k]).abs();
                let err_direct = ((direct[i] - direct5[i]) / f[i]).abs();
                if err_direct > 1e-12 && err_log < 0.1 * err_direct {
                    out[i] = f[i] * d7[k];
                }
            }
        }
        start = end;
    }
    out
}

fn five_point_d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let xs: Vec<f64> = (0..5).map(|j| j as f64).collect();
    let w: Vec<Vec<f64>> = (0..5).map(|p| fd_weights(p as f64, &xs, 1)[1].clone()).collect();
    (0..n)
        .map(|i| {
            let s = i.saturating_sub(2).min(n - 5);
            let p = i - s;
            (0..5).map(|j| w[p][j] * f[s + j]).sum::<f64>() / h
        })
        .collect()
}

/// Indices `i` where the samples change sign between `i` and `i + 1`, or
/// vanish exactly at an interior point. Exact zeros at the two endpoints
/// are boundary values, not crossings.
pub fn sign_changes(f: &[f64]) -> Vec<usize> {
    let n = f.len();
    let mut out = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let (a, b) = (f[i], f[i + 1]);
        if a == 0.0 {
            if i > 0 {
                out.push(i);
            }
            continue;
        }
        if b != 0.0 && (a < 0.0) != (b < 0.0) {
            out.push(if a.abs() <= b.abs() { i } else { i + 1 });
        }
    }
    out.dedup();
    out
}

/// Number of nodes, ignoring samples below `rel * max|f|`.
pub fn count_nodes(f: &[f64], rel: f64) -> usize {
    let floor = rel * f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut last = 0i8;
    let mut nodes = 0;
    for &v in f {
        if v.abs() <= floor {
            continue;
        }
        let s = if v > 0.0 { 1 } else { -1 };
        if last != 0 && s != last {
            nodes += 1;
        }
        last = s;
    }
    nodes
}

/// Span of samples with exact zeros at the endpoints trimmed off.
fn nonzero_span(f: &[f64]) -> (usize, usize) {
    let n = f.len();
    let lo = if f[0] == 0.0 { 1 } else { 0 };
    let hi = if f[n - 1] == 0.0 { n - 1 } else { n };
    (lo, hi)
}

fn check_nodeless(f: &SampledFunction) -> Result<(), CalculusError> {
    if f.values().iter().all(|v| *v == 0.0) {
        return Err(CalculusError::Vanishing);
    }
    if let Some(&index) = sign_changes(f.values()).first() {
        return Err(CalculusError::ZeroCrossing { index, x: f.grid().x(index) });
    }
    Ok(())
}

/// Applies a derivative stencil to `ln|f|`. Endpoints where `f` is exactly
/// zero come back as NaN.
fn log_stencil(f: &SampledFunction, order: usize) -> Vec<f64> {
    let v = f.values();
    let (lo, hi) = nonzero_span(v);
    let logs: Vec<f64> = v[lo..hi].iter().map(|x| x.abs().ln()).collect();
    let d = derivative_slice(&logs, f.grid().spacing(), order);
    let mut out = vec![f64::NAN; v.len()];
    out[lo..hi].copy_from_slice(&d);
    out
}

/// `D ln f = f'/f` for a nodeless function.
pub fn log_derivative(f: &SampledFunction) -> Result<SampledFunction, CalculusError> {
    check_nodeless(f)?;
    Ok(SampledFunction::new(*f.grid(), log_stencil(f, 1)).expect("same grid"))
}

/// `D² ln f = f''/f - (f'/f)²` for a function without interior zeros.
///
/// The stencil acts on `ln|f|` rather than on `f`: wavefunction tails
/// are close to `exp(polynomial)`, which the log stencil resolves far
/// better than the ratio of two stencils.
pub fn second_log_derivative(f: &SampledFunction) -> Result<SampledFunction, CalculusError> {
    check_nodeless(f)?;
    Ok(SampledFunction::new(*f.grid(), log_stencil(f, 2)).expect("same grid"))
}

/// Like [`second_log_derivative`] but tolerates nodes: samples within two
/// points of a sign change are masked as NaN.
pub fn second_log_derivative_masked(f: &SampledFunction) -> SampledFunction {
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    let mut out = vec![f64::NAN; n];
    let mut cuts: Vec<usize> = sign_changes(v);
    cuts.sort_unstable();
    // segments between crossings, each processed independently
    let mut bounds = Vec::new();
    let mut start = 0usize;
    for &c in &cuts {
        let end = c.saturating_sub(1);
        if end > start {
            bounds.push((start, end));
        }
        start = (c + 3).min(n);
    }
    if start < n {
        bounds.push((start, n));
    }
    for (a, b) in bounds {
        let seg = &v[a..b];
        if seg.len() < 3 || seg.iter().any(|x| *x == 0.0) {
            continue;
        }
        let logs: Vec<f64> = seg.iter().map(|x| x.abs().ln()).collect();
        let d = derivative_slice(&logs, h, 2);
        out[a..b].copy_from_slice(&d);
    }
    SampledFunction::new(*f.grid(), out).expect("same grid")
}

/// Per-interval integrals `∫_{x_i}^{x_{i+1}} f` from local cubic
/// interpolation (fourth order, symmetric in the interior).
fn interval_integrals<T: Sample>(f: &[T], h: f64) -> Vec<T> {
    let n = f.len();
    let mut inc = Vec::with_capacity(n - 1);
    if n == 3 {
        inc.push((f[0] * 5.0 + f[1] * 8.0 - f[2]) * (h / 12.0));
        inc.push((f[2] * 5.0 + f[1] * 8.0 - f[0]) * (h / 12.0));
        return inc;
    }
    let c = h / 24.0;
    for i in 0..n - 1 {
        let v = if i == 0 {
            f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]
        } else if i == n - 2 {
            f[n - 1] * 9.0 + f[n - 2] * 19.0 - f[n - 3] * 5.0 + f[n - 4]
        } else {
            (f[i] + f[i + 1]) * 13.0 - f[i - 1] - f[i + 2]
        };
        inc.push(v * c);
    }
    inc
}

fn real_increments(f: &[f64], h: f64) -> Vec<f64> {
    let mut inc = interval_integrals(f, h);
    let n = f.len();
    for (i, d) in inc.iter_mut().enumerate() {
        // a cubic through nonnegative data may dip below zero between
        // steep samples; fall back to the trapezoid so F stays monotone
        let lo = i.saturating_sub(1);
        let hi = (i + 3).min(n);
        if *d < 0.0 && f[lo..hi].iter().all(|v| *v >= 0.0) {
            *d = 0.5 * h * (f[i] + f[i + 1]);
        }
    }
    inc
}

/// `F(x) = ∫_{x_min}^x f`, fourth-order accurate; monotone for `f >= 0`.
pub fn cumulative_integral(f: &SampledFunction) -> SampledFunction {
    cumulative_integral_from(f, 0)
}

/// `F(x) = ∫_{x_anchor}^x f` with `F = 0` at the anchor index; accumulates
/// outward from the anchor in both directions.
pub fn cumulative_integral_from(f: &SampledFunction, anchor: usize) -> SampledFunction {
    let inc = real_increments(f.values(), f.grid().spacing());
    SampledFunction::new(*f.grid(), accumulate(&inc, anchor)).expect("same grid")
}

/// `G(x) = ∫_x^{x_max} f`, the mirror image of [`cumulative_integral`].
pub fn cumulative_integral_to_end(f: &SampledFunction) -> SampledFunction {
    let mut rev = f.values().to_vec();
    rev.reverse();
    let inc = real_increments(&rev, f.grid().spacing());
    let mut acc = accumulate(&inc, 0);
    acc.reverse();
    SampledFunction::new(*f.grid(), acc).expect("same grid")
}

pub fn cumulative_integral_complex<T: Sample>(f: &SampledFunction<T>, anchor: usize) -> SampledFunction<T> {
    let inc = interval_integrals(f.values(), f.grid().spacing());
    SampledFunction::new(*f.grid(), accumulate(&inc, anchor)).expect("same grid")
}

fn accumulate<T: Sample>(inc: &[T], anchor: usize) -> Vec<T> {
    let n = inc.len() + 1;
    let mut out = vec![T::zero(); n];
    for i in anchor + 1..n {
        out[i] = out[i - 1] + inc[i - 1];
    }
    for i in (0..anchor).rev() {
        out[i] = out[i + 1] - inc[i];
    }
    out
}

/// `∫ exp(g)` over `[x_i, x_{i+1}]`.
pub(crate) fn exp_segment(g: &[f64], i: usize, h: f64) -> f64 {
    const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let n = g.len();
    if n < 4 {
        return 0.5 * h * (g[i].exp() + g[i + 1].exp());
    }
    let start = i.saturating_sub(1).min(n - 4);
    let pts: Vec<f64> = (0..4).map(|j| (start + j) as f64).collect();
    let vals = &g[start..start + 4];
    let lagrange = |s: f64| {
        (0..4)
            .map(|j| {
                let mut w = 1.0;
                for m in 0..4 {
                    if m != j {
                        w *= (s - pts[m]) / (pts[j] - pts[m]);
                    }
                }
                w * vals[j]
            })
            .sum::<f64>()
    };
    let mid = i as f64 + 0.5;
    NODES.iter().zip(WEIGHTS).map(|(t, w)| w * lagrange(mid + 0.5 * t).exp()).sum::<f64>() * 0.5 * h
}

/// `∫ f` over the whole grid.
pub fn integrate_slice<T: Sample>(f: &[T], h: f64) -> T {
    interval_integrals(f, h).into_iter().fold(T::zero(), |a, b| a + b)
}

pub fn integrate(f: &SampledFunction) -> f64 {
    integrate_slice(f.values(), f.grid().spacing())
}

/// `∫ f²` over the grid.
pub fn norm_squared(f: &SampledFunction) -> f64 {
    let sq: Vec<f64> = f.values().iter().map(|v| v * v).collect();
    integrate_slice(&sq, f.grid().spacing())
}

/// Returns `f / sqrt(∫ f²)`.
pub fn normalized(f: &SampledFunction) -> Result<SampledFunction, CalculusError> {
    let n2 = norm_squared(f);
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(CalculusError::Vanishing);
    }
    let s = 1.0 / n2.sqrt();
    Ok(f.map(|v| v * s))
}

/// `∫ f g` over the grid.
pub fn inner_product(f: &SampledFunction, g: &SampledFunction) -> f64 {
    let p: Vec<f64> = f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect();
    integrate_slice(&p, f.grid().spacing())
}

/// Pointwise Schrödinger residual `max |−ψ'' + (u − E)ψ| / max |ψ|` over
/// indices `skip..n-skip`.
pub fn schrodinger_residual(psi: &SampledFunction, u: &SampledFunction, energy: f64, skip: usize) -> f64 {
    let d2 = derivative_slice(psi.values(), psi.grid().spacing(), 2);
    let n = psi.len();
    let hi = n.saturating_sub(skip);
    let mut res = 0.0f64;
    let mut scale = 0.0f64;
    for i in skip.min(hi)..hi {
        let p = psi.at(i);
        res = res.max((-d2[i] + (u.at(i) - energy) * p).abs());
        scale = scale.max(p.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        res / scale
    }
}

/// Interior index range `skip..n-skip` of a grid.
pub fn interior(grid: &Grid, skip: usize) -> std::ops::Range<usize> {
    let n = grid.n_points();
    skip.min(n / 2)..n.saturating_sub(skip).max(n / 2)
}

#[cfg(test)]
mod tests {
    #[test]
    fn smooth_derivative_on_tails_and_nodes() {
        let g = make_grid(-15.0, 15.0, 3001).unwrap();
        let f: Vec<f64> = (0..g.n_points()).map(|i| g.x(i) * (-g.x(i).powi(2) / 2.0).exp()).collect();
        let d = smooth_derivative(&f, g.spacing());
        for i in 0..g.n_points() {
            let x = g.x(i);
            let exact = (1.0 - x * x) * (-x * x / 2.0).exp();
            assert!((d[i] - exact).abs() <= 1e-9 * exact.abs().max(1e-300) + 1e-10 * (-x * x / 2.0).exp(), "x = {x}");
        }
    }

    use super::*;
    use crate::grid::make_grid;

    fn gauss_grid() -> Grid {
        make_grid(-15.0, 15.0, 3001).unwrap()
    }

    #[test]
    fn stencils_exact_on_low_polynomials() {
        let g = make_grid(-1.0, 2.0, 31).unwrap();
        let f = SampledFunction::tabulate(g, |x| 1.0 + x - 2.0 * x * x + 0.5 * x.powi(5));
        let d = derivative(&f);
        let d2 = second_derivative(&f);
        for i in 0..g.n_points() {
            let x = g.x(i);
            assert!((d.at(i) - (1.0 - 4.0 * x + 2.5 * x.powi(4))).abs() < 1e-9, "d at {i}");
            assert!((d2.at(i) - (-4.0 + 10.0 * x.powi(3))).abs() < 1e-7, "d2 at {i}");
        }
    }

    #[test]
    fn zero_integrand() {
        let f = SampledFunction::zeros(make_grid(0.0, 3.0, 31).unwrap());
        assert!(cumulative_integral(&f).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn unit_integrand() {
        for n in [3, 4, 11, 101] {
            let f = SampledFunction::tabulate(make_grid(0.0, 1.0, n).unwrap(), |_| 1.0);
            let big_f = cumulative_integral(&f);
            assert_eq!(big_f.at(0), 0.0);
            assert!((big_f.at(n - 1) - 1.0).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn normalized_gaussian_square_integrates_to_one() {
        // ψ = π^{-1/4} e^{-x²/2}; F(x) = (1 + erf(x)) / 2 closed form
        let g = gauss_grid();
        let f = SampledFunction::tabulate(g, |x| (-x * x).exp() / std::f64::consts::PI.sqrt());
        let big_f = cumulative_integral(&f);
        assert!((big_f.at(g.n_points() - 1) - 1.0).abs() < 1e-8);
        // F(0) = 1/2 by symmetry
        assert!((big_f.at(1500) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn cumulative_is_monotone_for_steep_nonnegative_data() {
        let g = make_grid(0.0, 1.0, 11).unwrap();
        let f = SampledFunction::tabulate(g, |x| if x > 0.45 && x < 0.55 { 1e6 } else { 0.0 });
        let big_f = cumulative_integral(&f);
        for w in big_f.values().windows(2) {
            assert!(w[1] >= w[0]);
        }
    }

    #[test]
    fn reverse_cumulative_mirrors_forward() {
        let g = make_grid(-3.0, 3.0, 61).unwrap();
        let f = SampledFunction::tabulate(g, |x| (-(x - 0.3) * (x - 0.3)).exp());
        let fwd = cumulative_integral(&f);
        let bwd = cumulative_integral_to_end(&f);
        let total = fwd.at(60);
        for i in 0..61 {
            assert!((fwd.at(i) + bwd.at(i) - total).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_second_log_derivative_is_minus_one() {
        let g = gauss_grid();
        let f = SampledFunction::tabulate(g, |x| (-x * x / 2.0).exp());
        let d = second_log_derivative(&f).unwrap();
        for i in interior(&g, EDGE_SKIP) {
            assert!((d.at(i) + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn cosh_second_log_derivative_is_sech_squared() {
        let g = gauss_grid();
        let f = SampledFunction::tabulate(g, f64::cosh);
        let d = second_log_derivative(&f).unwrap();
        for i in interior(&g, EDGE_SKIP) {
            let s = 1.0 / g.x(i).cosh();
            assert!((d.at(i) - s * s).abs() < 1e-6, "i = {i}");
        }
    }

    #[test]
    fn sign_change_reported() {
        let g = gauss_grid();
        let f = SampledFunction::tabulate(g, |x| (x - 0.505).sin());
        match second_log_derivative(&f) {
            Err(CalculusError::ZeroCrossing { x, .. }) => assert!(x < -3.0),
            other => panic!("expected zero crossing, got {other:?}"),
        }
    }

    #[test]
    fn node_counting_ignores_tail_noise() {
        let v = [1e-30, -1e-31, 1.0, 0.5, -0.5, -1.0, 1e-30];
        assert_eq!(count_nodes(&v, 1e-12), 1);
        assert_eq!(sign_changes(&[0.0, 1.0, 2.0, 0.0]), Vec::<usize>::new());
        assert_eq!(sign_changes(&[1.0, 0.0, 2.0]), vec![1]);
    }
}
