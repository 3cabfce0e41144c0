use rayon::prelude::*;
use serde_json::json;

use super::numerov::{count_sign_changes, edge_seeds, run, wkb_sigma, Boundary};
use super::{EigenError, EigenPair, SolveConfig};
use crate::calculus::{self, count_nodes, EDGE_SKIP, cumulative_integral_from, derivative_slice, exp_segment, sign_changes};
use crate::sampled::SampledFunction;

const LATTICE_STEPS: usize = 64;
const MAX_BISECTIONS: usize = 300;
/// Largest edge amplitude, relative to the peak, of an accepted bound state.
const TAIL_RESOLUTION: f64 = 5e-2;

struct Shooter<'a> {
    u: &'a [f64],
    h: f64,
    left: Boundary,
    right: Boundary,
}

impl<'a> Shooter<'a> {
    fn new(u: &'a SampledFunction, cfg: &SolveConfig) -> Self {
        Shooter { u: u.values(), h: u.grid().spacing(), left: cfg.left_boundary, right: cfg.right_boundary }
    }

    fn q(&self, e: f64) -> Vec<f64> {
        self.u.iter().map(|v| v - e).collect()
    }

    /// Number of eigenvalues below `e` (sign changes of the left solution).
    fn count(&self, e: f64) -> usize {
        let q = self.q(e);
        count_sign_changes(&q, self.h, edge_seeds(&q, self.h, self.left))
    }

    /// Turning point (sign change of `u − e`) nearest the requested
    /// fraction of the grid, kept clear of the edges.
    fn matching_index(&self, e: f64, fraction: f64) -> usize {
        let n = self.u.len();
        let target = (fraction * (n - 1) as f64).round() as usize;
        let mut best: Option<usize> = None;
        for i in 0..n - 1 {
            let (a, b) = (self.u[i] - e, self.u[i + 1] - e);
            if (a <= 0.0) != (b <= 0.0) {
                let j = if a.abs() < b.abs() { i } else { i + 1 };
                if best.map_or(true, |bj| j.abs_diff(target) < bj.abs_diff(target)) {
                    best = Some(j);
                }
            }
        }
        best.unwrap_or(target).clamp(8, n - 9)
    }

    /// Left solution on `0..=m+3` and right solution on `m-3..n`.
    fn halves(&self, e: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
        let q = self.q(e);
        let n = q.len();
        let (left, _) = run(&q[..=m + 3], self.h, edge_seeds(&q, self.h, self.left));
        let rq: Vec<f64> = q[m - 3..].iter().rev().copied().collect();
        let (mut right, _) = run(&rq, self.h, edge_seeds(&rq, self.h, self.right));
        right.reverse();
        debug_assert_eq!(right.len(), n - m + 3);
        (left, right)
    }

    /// Scale-free Wronskian mismatch `ψ_L ψ_R' − ψ_L' ψ_R` at `m`, and the
    /// log-derivative difference.
    fn mismatch(&self, e: f64, m: usize) -> (f64, f64) {
        let (left, right) = self.halves(e, m);
        let (l, dl) = value_and_slope(&left[m - 3..=m + 3], self.h);
        let (r, dr) = value_and_slope(&right[..7], self.h);
        let nl = l.hypot(dl);
        let nr = r.hypot(dr);
        let w = (l / nl) * (dr / nr) - (dl / nl) * (r / nr);
        let logdiff = if l != 0.0 && r != 0.0 { dr / r - dl / l } else { f64::INFINITY };
        (w, logdiff)
    }
}

fn value_and_slope(window: &[f64], h: f64) -> (f64, f64) {
    let d = derivative_slice(window, h, 1);
    (window[3], d[3])
}

/// Number of eigenvalues strictly below `energy` for the configured
/// boundary treatment.
pub fn count_levels_below(u: &SampledFunction, energy: f64, cfg: &SolveConfig) -> usize {
    Shooter::new(u, cfg).count(energy)
}

/// Bound states in `cfg.energy_window`, ascending, up to `cfg.max_levels`.
///
/// Levels are bracketed by node counting, then refined by bisection on
/// the sign of the matching Wronskian. If fewer than `max_levels` exist
/// the partial list comes back inside [`EigenError::WindowExhausted`].
pub fn solve_bound_states(u: &SampledFunction, cfg: &SolveConfig) -> Result<Vec<EigenPair>, EigenError> {
    let levels = solve_levels(u, cfg)?;
    if levels.len() < cfg.max_levels {
        return Err(EigenError::WindowExhausted { levels, requested: cfg.max_levels });
    }
    Ok(levels)
}

/// Like [`solve_bound_states`] but returns however many levels the window
/// holds (at most `max_levels`) without treating a short list as an error.
pub fn solve_levels(u: &SampledFunction, cfg: &SolveConfig) -> Result<Vec<EigenPair>, EigenError> {
    cfg.validate()?;
    let sh = Shooter::new(u, cfg);
    let (lo, hi) = cfg.energy_window;
    let lattice: Vec<f64> =
        (0..=LATTICE_STEPS).map(|j| lo + (hi - lo) * j as f64 / LATTICE_STEPS as f64).collect();
    let counts: Vec<usize> = lattice.par_iter().map(|&e| sh.count(e)).collect();
    let first = counts[0];
    let last = counts[LATTICE_STEPS];
    let wanted: Vec<usize> = (first..last).take(cfg.max_levels).collect();
    wanted
        .par_iter()
        .map(|&n| {
            let j = counts.iter().rposition(|&c| c <= n).expect("counts start at or below n");
            let (mut a, mut b) = (lattice[j], lattice[(j + 1).min(LATTICE_STEPS)]);
            let (mut ca, mut cb) = (counts[j], counts[(j + 1).min(LATTICE_STEPS)]);
            // isolate exactly one eigenvalue
            let mut it = 0;
            while !(ca == n && cb == n + 1) && it < MAX_BISECTIONS {
                let mid = 0.5 * (a + b);
                let cm = sh.count(mid);
                if cm <= n {
                    a = mid;
                    ca = cm;
                } else {
                    b = mid;
                    cb = cm;
                }
                it += 1;
            }
            match refine(u, &sh, cfg, n, a, b) {
                // a count next to the continuum edge that does not settle is
                // an unresolved mode, handled like one with a large tail
                Err(EigenError::NotConverged { .. }) if b >= lattice[LATTICE_STEPS - 1] => Ok(None),
                r => r.map(|l| tails_resolved(&l, cfg).then_some(l)),
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(|levels| levels.into_iter().map_while(|l| l).collect())
}

/// A bound state must have decayed by the grid edges. Near a threshold
/// (e.g. a zero-energy half-bound state) node counting can pick up a
/// box mode whose amplitude peaks at an edge; such modes and everything
/// above them are dropped.
fn tails_resolved(l: &EigenPair, cfg: &SolveConfig) -> bool {
    let v = l.wavefunction.values();
    let n = v.len();
    let peak = l.wavefunction.max_modulus();
    let k = EDGE_SKIP.min(n / 2);
    let left = cfg.left_boundary != Boundary::Decaying || v[k].abs() <= TAIL_RESOLUTION * peak;
    let right = cfg.right_boundary != Boundary::Decaying || v[n - 1 - k].abs() <= TAIL_RESOLUTION * peak;
    left && right
}

fn refine(u: &SampledFunction, sh: &Shooter, cfg: &SolveConfig, n: usize, a: f64, b: f64) -> Result<EigenPair, EigenError> {
    let m = sh.matching_index(0.5 * (a + b), cfg.matching_point_fraction);
    let (mut lo, mut hi) = (a, b);
    let (w_lo, _) = sh.mismatch(lo, m);
    let (w_hi, _) = sh.mismatch(hi, m);
    if (w_lo > 0.0) == (w_hi > 0.0) {
        // root sits on a bracket end (e.g. an eigenvalue on the lattice)
        if w_lo.abs() <= w_hi.abs() {
            hi = lo;
        } else {
            lo = hi;
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (w_mid, _) = sh.mismatch(mid, m);
        if w_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (w_mid > 0.0) == (w_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let energy = 0.5 * (lo + hi);
    let (_, residual) = sh.mismatch(energy, m);
    if !(residual.abs() <= cfg.bisection_tolerance) {
        return Err(EigenError::NotConverged { level: n, residual });
    }
    let mut psi = assemble(u, sh, energy, m)?;
    let node_count = count_nodes(psi.values(), 1e-10);
    let polished = if node_count == 0 { polish_nodeless(u, sh, energy, &psi) } else { polish_tails(sh, energy, &psi) };
    if let Some(p) = polished {
        psi = p;
    }
    Ok(EigenPair { energy, wavefunction: psi, node_count, matching_residual: residual.abs(), left_boundary: sh.left })
}

/// Joins the two shooting halves at `m`, normalizes, and fixes the sign
/// so the leftmost lobe is positive.
fn assemble(u: &SampledFunction, sh: &Shooter, energy: f64, m: usize) -> Result<SampledFunction, EigenError> {
    let (left, right) = sh.halves(energy, m);
    let n = u.len();
    let mut psi = vec![0.0; n];
    psi[..=m].copy_from_slice(&left[..=m]);
    let (l, dl) = value_and_slope(&left[m - 3..=m + 3], sh.h);
    let (r, dr) = value_and_slope(&right[..7], sh.h);
    let scale = if r.abs() * dl.abs() >= dr.abs() * l.abs() * 1e-3 && r != 0.0 { l / r } else { dl / dr };
    for i in m + 1..n {
        psi[i] = right[i - (m - 3)] * scale;
    }
    let top = psi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if top > 0.0 && top.is_finite() {
        psi.iter_mut().for_each(|v| *v /= top);
    }
    let f = SampledFunction::new(*u.grid(), psi).expect("same grid");
    let mut f = calculus::normalized(&f)?;
    let peak = f.max_modulus();
    if let Some(first) = f.values().iter().find(|v| v.abs() > 1e-8 * peak) {
        if *first < 0.0 {
            f = f.map(|v| -v);
        }
    }
    Ok(f)
}

/// Rebuilds a nodeless state as `exp ∫σ`, with `σ' = q − σ²` integrated
/// inward from both edges (the stable direction) by implicit
/// Adams–Moulton steps and joined at the peak. `σ` is smooth where `ψ`
/// varies exponentially, so this is far more accurate in the tails.
/// Returns `None` when an edge is not classically forbidden or the result
/// disagrees with the shooting solution.
fn polish_nodeless(u: &SampledFunction, sh: &Shooter, energy: f64, psi: &SampledFunction) -> Option<SampledFunction> {
    if sh.left != Boundary::Decaying || sh.right != Boundary::Decaying {
        return None;
    }
    let q = sh.q(energy);
    let n = q.len();
    let peak = psi.values().iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)?;
    let left = riccati_inward(&q[..=peak], sh.h)?;
    let rq: Vec<f64> = q[peak..].iter().rev().copied().collect();
    let right = riccati_inward(&rq, sh.h)?;
    let mut sigma = left;
    sigma.pop();
    sigma.extend(right.iter().rev().map(|s| -s));
    debug_assert_eq!(sigma.len(), n);
    let sigma = SampledFunction::new(*u.grid(), sigma).ok()?;
    let log_psi = cumulative_integral_from(&sigma, peak);
    let f = log_psi.map(|l| l.exp());
    let f = calculus::normalized(&f).ok()?;
    let peak_val = psi.at(peak);
    let agree = f.values().iter().zip(psi.values()).all(|(a, b)| (a - b).abs() <= 1e-5 * peak_val);
    agree.then_some(f)
}

/// Replaces the two forbidden tails with Riccati solutions. Each sweep
/// runs from the edge to the outermost extremum of `ψ`, and is blended in
/// `ln|ψ|` onto the shooting solution between the turning point and that
/// extremum with a C² weight, so no kink is left behind.
fn polish_tails(sh: &Shooter, energy: f64, psi: &SampledFunction) -> Option<SampledFunction> {
    if sh.left != Boundary::Decaying || sh.right != Boundary::Decaying {
        return None;
    }
    let q = sh.q(energy);
    let n = q.len();
    let tl = q.iter().position(|v| *v <= 0.0)?;
    let tr = q.iter().rposition(|v| *v <= 0.0)?;
    if tl < 8 || tr + 9 > n || tl >= tr {
        return None;
    }
    let p = psi.values();
    let pl = (tl..tr).find(|&i| p[i + 1].abs() < p[i].abs())?;
    let pr = (tl + 1..=tr).rev().find(|&i| p[i - 1].abs() < p[i].abs())?;
    if pl >= pr {
        return None;
    }
    let mut out = p.to_vec();
    blend_tail(&q[..=pl], &p[..=pl], tl, sh.h, &mut out[..=pl])?;
    let rq: Vec<f64> = q[pr..].iter().rev().copied().collect();
    let rp: Vec<f64> = p[pr..].iter().rev().copied().collect();
    let mut rout = rp.clone();
    blend_tail(&rq, &rp, n - 1 - tr, sh.h, &mut rout)?;
    for (j, v) in rout.into_iter().enumerate() {
        out[n - 1 - j] = v;
    }
    let peak = psi.max_modulus();
    let agree = out.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-5 * peak);
    if !agree {
        return None;
    }
    let f = SampledFunction::new(*psi.grid(), out).ok()?;
    calculus::normalized(&f).ok()
}

/// Tail from the edge (index 0) to an extremum (last index), blended
/// over `[turn, last]`.
fn blend_tail(q: &[f64], psi: &[f64], turn: usize, h: f64, out: &mut [f64]) -> Option<()> {
    let last = q.len() - 1;
    if turn + 4 > last {
        return None;
    }
    let sigma = riccati_inward(q, h)?;
    let log_r = tail_log(&sigma, h);
    let sign = psi[last].signum();
    let log_n: Vec<f64> = psi.iter().map(|v| v.abs().ln()).collect();
    let width = (last - turn) as f64;
    let offset = (turn..=last).map(|i| log_n[i] - log_r[i]).sum::<f64>() / (width + 1.0);
    for i in 0..=last {
        let w = if i <= turn {
            1.0
        } else {
            let t = (i - turn) as f64 / width;
            1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
        };
        let l = if w == 1.0 { log_r[i] + offset } else { w * (log_r[i] + offset) + (1.0 - w) * log_n[i] };
        out[i] = sign * l.exp();
    }
    Some(())
}

/// `∫₀ σ` sampled along a tail sweep.
fn tail_log(sigma: &[f64], h: f64) -> Vec<f64> {
    let g = crate::grid::make_grid(0.0, h * (sigma.len() - 1) as f64, sigma.len()).expect("at least 3 points");
    let f = SampledFunction::new(g, sigma.to_vec()).expect("same length");
    calculus::cumulative_integral(&f).into_values()
}

/// Riccati integration of the log-derivative growing away from `q[0]`.
///
/// The sweep starts `EXTENSION` points before the grid on a quadratic
/// continuation of `q`, so the error of the WKB start value is damped
/// before the first sample.
fn riccati_inward(q: &[f64], h: f64) -> Option<Vec<f64>> {
    const EXTENSION: usize = 50;
    if q.len() < 7 {
        return None;
    }
    // an interpolating polynomial through the first samples would amplify
    // their roundoff this far out
    let d1 = derivative_slice(&q[..7], h, 1)[0];
    let d2 = derivative_slice(&q[..7], h, 2)[0];
    let ext: Vec<f64> = (1..=EXTENSION)
        .rev()
        .map(|k| {
            let s = -(k as f64) * h;
            q[0] + d1 * s + 0.5 * d2 * s * s
        })
        .collect();
    // a flat q makes the comparison a roundoff coin toss, hence the slack
    let extended = if ext.iter().all(|v| *v > 0.0) && ext[0] >= q[0] - 1e-9 * (1.0 + q[0].abs()) {
        ext.into_iter().chain(q.iter().copied()).collect::<Vec<_>>()
    } else {
        q.to_vec()
    };
    let offset = extended.len() - q.len();
    let q = &extended[..];
    let n = q.len();
    let start = wkb_sigma(q, h)?;
    let mut s = vec![0.0; n];
    s[0] = start[0];
    let f = |s: f64, q: f64| q - s * s;
    for i in 0..n - 1 {
        // implicit in s[i+1]: s + a s² = r
        let (a, r) = match i {
            0 => (0.5 * h, s[0] + 0.5 * h * (f(s[0], q[0]) + q[1])),
            1 => (5.0 * h / 12.0, s[1] + h / 12.0 * (5.0 * q[2] + 8.0 * f(s[1], q[1]) - f(s[0], q[0]))),
            _ => (
                9.0 * h / 24.0,
                s[i] + h / 24.0
                    * (9.0 * q[i + 1] + 19.0 * f(s[i], q[i]) - 5.0 * f(s[i - 1], q[i - 1]) + f(s[i - 2], q[i - 2])),
            ),
        };
        let disc = 1.0 + 4.0 * a * r;
        if disc < 0.0 {
            return None;
        }
        s[i + 1] = 2.0 * r / (1.0 + disc.sqrt());
    }
    Some(s.split_off(offset))
}

/// The `n`-th bound state, searching the automatic window.
pub fn level(u: &SampledFunction, n: usize, cfg: &SolveConfig) -> Result<EigenPair, EigenError> {
    let c = SolveConfig { max_levels: n + 1, ..*cfg };
    let mut levels = solve_bound_states(u, &c)?;
    Ok(levels.swap_remove(n))
}

/// Nodeless normalized ground wavefunction at (numerically) `energy`.
pub fn zero_mode(u: &SampledFunction, energy: f64) -> Result<SampledFunction, EigenError> {
    zero_mode_with(u, energy, &SolveConfig::auto(u, 1))
}

pub fn zero_mode_with(u: &SampledFunction, energy: f64, cfg: &SolveConfig) -> Result<SampledFunction, EigenError> {
    let sh = Shooter::new(u, cfg);
    let mut delta = 1e-3 * (1.0 + energy.abs());
    let (mut a, mut b);
    let mut tries = 0;
    loop {
        a = energy - delta;
        b = energy + delta;
        let (ca, cb) = (sh.count(a), sh.count(b));
        if cb == ca + 1 {
            break;
        }
        if cb == ca || tries > 40 {
            return Err(EigenError::NoEigenvalueNear { energy });
        }
        delta *= 0.5;
        tries += 1;
    }
    let n = sh.count(a);
    let pair = refine(u, &sh, cfg, n, a, b)?;
    if pair.node_count > 0 {
        return Err(EigenError::Nodeful { energy: pair.energy, nodes: pair.node_count });
    }
    Ok(pair.wavefunction)
}

/// Second solution by reduction of order, `ψ(x) ∫ ψ⁻²`, anchored at the
/// peak of `|ψ|`. Its Wronskian with `ψ` is one.
///
/// `ψ⁻² = exp(−2 ln|ψ|)` is integrated per interval with a cubic
/// interpolant of `ln|ψ|` and 4-point Gauss–Legendre nodes, which stays
/// accurate where `ψ⁻²` grows like a Gaussian.
pub fn second_solution(_u: &SampledFunction, _energy: f64, psi: &SampledFunction) -> Result<SampledFunction, EigenError> {
    if let Some(&i) = sign_changes(psi.values()).first() {
        return Err(EigenError::Node { x: psi.grid().x(i) });
    }
    if let Some(i) = psi.values().iter().position(|v| *v == 0.0) {
        return Err(EigenError::Node { x: psi.grid().x(i) });
    }
    let n = psi.len();
    let h = psi.grid().spacing();
    let anchor = psi
        .values()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let g: Vec<f64> = psi.values().iter().map(|v| -2.0 * v.abs().ln()).collect();
    let mut integral = vec![0.0; n];
    for i in anchor..n - 1 {
        integral[i + 1] = integral[i] + exp_segment(&g, i, h);
    }
    for i in (1..=anchor).rev() {
        integral[i - 1] = integral[i] - exp_segment(&g, i - 1, h);
    }
    let chi = psi.values().iter().zip(&integral).map(|(p, i)| p * i).collect();
    Ok(SampledFunction::new(*psi.grid(), chi).expect("same grid"))
}

/// Spectrum table as JSON: `{levels: [{n, energy, nodes}], config}`.
pub fn spectrum_json(levels: &[EigenPair], cfg: &SolveConfig) -> serde_json::Value {
    json!({
        "levels": levels.iter().enumerate().map(|(i, l)| json!({
            "n": i,
            "energy": l.energy,
            "nodes": l.node_count,
        })).collect::<Vec<_>>(),
        "config": cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{interior, norm_squared};
    use crate::grid::{make_grid, Grid};

    fn harmonic() -> SampledFunction {
        SampledFunction::tabulate(Grid::full_line_default(), |x| x * x)
    }

    fn soliton() -> SampledFunction {
        SampledFunction::tabulate(Grid::full_line_default(), |x| -2.0 / x.cosh().powi(2))
    }

    #[test]
    fn harmonic_levels() {
        let levels = solve_bound_states(&harmonic(), &SolveConfig::new((0.0, 12.0), 5)).unwrap();
        for (n, l) in levels.iter().enumerate() {
            assert!((l.energy - (2 * n + 1) as f64).abs() < 1e-6, "level {n}: {}", l.energy);
            assert_eq!(l.node_count, n);
            assert!((norm_squared(&l.wavefunction) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn soliton_single_level() {
        let u = soliton();
        let levels = solve_levels(&u, &SolveConfig::new((-2.0, 0.0), 3)).unwrap();
        assert_eq!(levels.len(), 1);
        assert!((levels[0].energy + 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_potential_exhausts_window() {
        let u = SampledFunction::tabulate(make_grid(-40.0, 40.0, 4001).unwrap(), |_| 5.0);
        match solve_bound_states(&u, &SolveConfig::new((0.0, 4.0), 1)) {
            Err(EigenError::WindowExhausted { levels, requested }) => {
                assert!(levels.is_empty());
                assert_eq!(requested, 1);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn harmonic_zero_mode_is_gaussian() {
        let u = harmonic();
        let psi = zero_mode(&u, 1.0).unwrap();
        let g = *u.grid();
        let norm = std::f64::consts::PI.powf(-0.25);
        for i in interior(&g, 5) {
            let x = g.x(i);
            assert!((psi.at(i) - norm * (-x * x / 2.0).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn soliton_zero_mode_is_sech() {
        let u = soliton();
        let psi = zero_mode(&u, -1.0).unwrap();
        let g = *u.grid();
        for i in interior(&g, 5) {
            let x = g.x(i);
            assert!((psi.at(i) - 1.0 / (x.cosh() * 2f64.sqrt())).abs() < 1e-6);
        }
    }

    #[test]
    fn excited_energy_is_nodeful() {
        assert!(matches!(zero_mode(&harmonic(), 3.0), Err(EigenError::Nodeful { nodes: 1, .. })));
    }

    #[test]
    fn second_solution_of_constant_is_linear() {
        let g = make_grid(-5.0, 5.0, 101).unwrap();
        let u = SampledFunction::zeros(g);
        let one = SampledFunction::tabulate(g, |_| 1.0);
        let chi = second_solution(&u, 0.0, &one).unwrap();
        // x up to an additive constant
        let offset = chi.at(0) - g.x(0);
        for i in 0..g.n_points() {
            assert!((chi.at(i) - g.x(i) - offset).abs() < 1e-12);
        }
    }

    #[test]
    fn second_solution_wronskian_is_one() {
        let u = harmonic();
        let g = *u.grid();
        let psi = SampledFunction::tabulate(g, |x| (-x * x / 2.0).exp());
        let chi = second_solution(&u, 1.0, &psi).unwrap();
        let dpsi = derivative_slice(psi.values(), g.spacing(), 1);
        let dchi = derivative_slice(chi.values(), g.spacing(), 1);
        for i in interior(&g, 5) {
            let w = psi.at(i) * dchi[i] - dpsi[i] * chi.at(i);
            assert!((w - 1.0).abs() < 1e-6, "x = {}, W = {w}", g.x(i));
        }
    }

    #[test]
    fn second_solution_rejects_nodes() {
        let g = Grid::full_line_default();
        let psi = SampledFunction::tabulate(g, f64::sin);
        assert!(matches!(second_solution(&SampledFunction::zeros(g), 1.0, &psi), Err(EigenError::Node { .. })));
    }
}

