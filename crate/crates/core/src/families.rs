//! Strictly isospectral one-parameter families.
//!
//! All three schemes start from the ground state `u₀` of `u` and
//! `ℐ₀(x) = ∫_c^x u₀²`. DDGR re-adds the deleted level with the general
//! Riccati solution, `V(x;λ) = u − 2D² ln(ℐ₀ + λ)`; Pursey and
//! Abraham–Moses are the limits `λ → 0` and `λ → −1`, where the re-added
//! state stops being normalizable and the level disappears.

use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::calculus::{
    self, exp_segment, interior, log_derivative, second_log_derivative, smooth_derivative, CalculusError, EDGE_SKIP,
};
use crate::darboux::{darboux_transform, DarbouxError, DarbouxSeed};
use crate::eigensolve::{self, rt_coefficients, EigenError, SolveConfig};
use crate::potential::DomainCut;
use crate::record::TransformRecord;
use crate::sampled::{fmt_num, SampledFunction};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("λ = {0} is forbidden: ℐ₀ + λ vanishes somewhere for λ in [−1, 0]")]
    ForbiddenLambda(f64),
    #[error("potential has no normalizable ground state")]
    NoZeroMode,
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Darboux(#[from] DarbouxError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

/// `f(λ) = √(λ(λ+1))`.
pub fn normalization_factor(lambda: f64) -> f64 {
    (lambda * (lambda + 1.0)).sqrt()
}

pub fn check_lambda(lambda: f64) -> Result<(), FamilyError> {
    if !lambda.is_finite() || (-1.0..=0.0).contains(&lambda) {
        return Err(FamilyError::ForbiddenLambda(lambda));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DdgrMember {
    pub lambda: f64,
    /// `u − 2D² ln(ℐ₀ + λ)`.
    pub potential: SampledFunction,
    /// `f(λ) u₀ / |ℐ₀ + λ|`.
    pub ground_state: SampledFunction,
    /// `w_p + D ln(ℐ₀ + λ)`.
    pub superpotential_general: SampledFunction,
    pub normalization: f64,
    /// `1 / ‖u₀/(ℐ₀ + λ)‖` by quadrature.
    pub normalization_numeric: f64,
    /// Largest interior gap between the `D² ln` form and the explicit
    /// `u₀u₀'`, `u₀⁴` form of the potential.
    pub form_defect: f64,
    /// Largest interior spread between the three forms of `w_g`.
    pub superpotential_defect: f64,
    /// `max |v' − 2v w_p − 1| / (1 + |2v w_p|)` with `v = (ℐ₀ + λ)/u₀²`.
    pub bernoulli_residual: f64,
    /// `max |(w_g² + w_g') − (w_p² + w_p')|` over the interior.
    pub riccati_defect: f64,
}

#[derive(Debug, Clone)]
pub struct DdgrFamily {
    pub source_potential: SampledFunction,
    pub ground_energy: f64,
    pub zero_mode: SampledFunction,
    /// `w_p = −u₀'/u₀`.
    pub superpotential: SampledFunction,
    pub i0: SampledFunction,
    pub domain_cut: DomainCut,
    pub lambda_values: Vec<f64>,
    pub members: Vec<DdgrMember>,
}

/// `(ℐ₀, 1 − ℐ₀)` for a normalized nodeless `psi`, each accurate in the
/// tail where it is small.
///
/// Intervals are integrated as `exp(2 ln|ψ|)` with Gauss–Legendre nodes.
/// The part of the line beyond a decaying edge is added from a quadratic
/// extrapolation of `ln ψ`; for `HalfLine` the lower limit is the left
/// edge itself.
pub fn ground_integrals(psi: &SampledFunction, energy: f64, u: &SampledFunction, cut: DomainCut) -> (SampledFunction, SampledFunction) {
    let n = psi.len();
    let h = psi.grid().spacing();
    let g: Vec<f64> = psi.values().iter().map(|v| 2.0 * v.abs().ln()).collect();
    let sq: Vec<f64> = psi.values().iter().map(|v| v * v).collect();
    let seg: Vec<f64> = (0..n - 1)
        .map(|i| {
            let lo = i.saturating_sub(1).min(n.saturating_sub(4));
            if g[lo..(lo + 4).min(n)].iter().all(|v| v.is_finite()) {
                exp_segment(&g, i, h)
            } else {
                0.5 * h * (sq[i] + sq[i + 1])
            }
        })
        .collect();
    let slope = calculus::derivative_slice(&g, h, 1);
    let left_tail = match cut {
        DomainCut::HalfLine => 0.0,
        DomainCut::FullLine => outer_tail(sq[0], 0.5 * slope[0], u.at(0) - energy),
    };
    let right_tail = outer_tail(sq[n - 1], -0.5 * slope[n - 1], u.at(n - 1) - energy);
    let mut left = vec![left_tail; n];
    for i in 0..n - 1 {
        left[i + 1] = left[i] + seg[i];
    }
    let mut right = vec![right_tail; n];
    for i in (0..n - 1).rev() {
        right[i] = right[i + 1] + seg[i];
    }
    let total = left[n - 1] + right_tail;
    let grid = *psi.grid();
    (
        SampledFunction::new(grid, left.into_iter().map(|v| v / total).collect()).expect("same grid"),
        SampledFunction::new(grid, right.into_iter().map(|v| v / total).collect()).expect("same grid"),
    )
}

/// `∫_0^∞ ψ²(edge ∓ s) ds` with `ln ψ ≈ L − κs + κ's²/2`, where `κ` is the
/// outward decay rate and `κ' = q − κ²` from the Riccati equation.
fn outer_tail(edge_sq: f64, kappa: f64, q: f64) -> f64 {
    if !(kappa > 0.0) || edge_sq == 0.0 {
        return 0.0;
    }
    let curv = q - kappa * kappa;
    let exponent = |s: f64| -2.0 * kappa * s + curv * s * s;
    let s_max = if curv > 0.0 { kappa / curv } else { f64::INFINITY };
    let width = 0.25 / kappa;
    const NODES: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
    const WEIGHTS: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
    let mut sum = 0.0;
    let mut a = 0.0;
    while a < s_max && exponent(a) > -60.0 {
        let b = (a + width).min(s_max);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        sum += NODES.iter().zip(WEIGHTS).map(|(t, w)| w * exponent(mid + half * t).exp()).sum::<f64>() * half;
        a = b;
    }
    edge_sq * sum
}

fn ground_pair(u: &SampledFunction, cut: DomainCut) -> Result<(f64, SampledFunction), FamilyError> {
    let cfg = SolveConfig::for_domain(u, 1, cut);
    match eigensolve::level(u, 0, &cfg) {
        Ok(p) if p.node_count == 0 => Ok((p.energy, p.wavefunction)),
        Ok(_) => Err(FamilyError::NoZeroMode),
        Err(EigenError::WindowExhausted { .. }) => Err(FamilyError::NoZeroMode),
        Err(e) => Err(e.into()),
    }
}

/// DDGR family of a full-line source.
pub fn ddgr_family(u: &SampledFunction, lambda_values: &[f64]) -> Result<DdgrFamily, FamilyError> {
    ddgr_family_with(u, lambda_values, DomainCut::FullLine)
}

pub fn ddgr_family_with(u: &SampledFunction, lambda_values: &[f64], cut: DomainCut) -> Result<DdgrFamily, FamilyError> {
    for l in lambda_values {
        check_lambda(*l)?;
    }
    let (energy, u0) = ground_pair(u, cut)?;
    let (i0, _) = ground_integrals(&u0, energy, u, cut);
    let h = u.grid().spacing();
    let sigma = if cut == DomainCut::HalfLine {
        let d = smooth_derivative(u0.values(), h);
        u0.zip_with(&SampledFunction::new(*u.grid(), d).expect("same grid"), |p, dp| if p == 0.0 { f64::NAN } else { dp / p })
            .expect("same grid")
    } else {
        log_derivative(&u0)?
    };
    let wp = sigma.map(|s| -s);
    let members = lambda_values
        .par_iter()
        .map(|&l| ddgr_member(u, &u0, &i0, &wp, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DdgrFamily {
        source_potential: u.clone(),
        ground_energy: energy,
        zero_mode: u0,
        superpotential: wp,
        i0,
        domain_cut: cut,
        lambda_values: lambda_values.to_vec(),
        members,
    })
}

/// `u − 2D² ln s` for `s' = u₀²`, differencing `D ln s = u₀²/s` once.
fn readd(u: &SampledFunction, u0: &SampledFunction, s: &SampledFunction) -> SampledFunction {
    let ratio: Vec<f64> = u0.values().iter().zip(s.values()).map(|(p, s)| p * p / s).collect();
    let d = smooth_derivative(&ratio, u.grid().spacing());
    let v = u.values().iter().zip(d).map(|(a, b)| a - 2.0 * b).collect();
    SampledFunction::new(*u.grid(), v).expect("same grid")
}

fn ddgr_member(
    u: &SampledFunction,
    u0: &SampledFunction,
    i0: &SampledFunction,
    wp: &SampledFunction,
    lambda: f64,
) -> Result<DdgrMember, FamilyError> {
    let grid = *u.grid();
    let h = grid.spacing();
    let shifted = i0.map(|v| v + lambda);
    let potential = readd(u, u0, &shifted);
    let du0 = smooth_derivative(u0.values(), h);
    let range = interior(&grid, EDGE_SKIP);
    let form_defect = range
        .clone()
        .map(|i| {
            let (p, s) = (u0.at(i), shifted.at(i));
            let explicit = u.at(i) - 4.0 * p * du0[i] / s + 2.0 * p.powi(4) / (s * s);
            (explicit - potential.at(i)).abs()
        })
        .fold(0.0, f64::max);

    let f = normalization_factor(lambda);
    let raw = u0.zip_with(&shifted, |p, s| p / s.abs()).expect("same grid");
    let normalization_numeric = 1.0 / calculus::norm_squared(&raw).sqrt();
    let ground_state = raw.map(|v| f * v);

    let dlog = log_derivative(&shifted)?;
    let wg = wp.zip_with(&dlog, |a, b| a + b).expect("same grid");
    let wg_b: Vec<f64> = (0..grid.len()).map(|i| wp.at(i) + u0.at(i).powi(2) / shifted.at(i)).collect();
    let wg_c = log_derivative(&ground_state)?;
    let superpotential_defect = range
        .clone()
        .map(|i| {
            let (a, b, c) = (wg.at(i), wg_b[i], -wg_c.at(i));
            (a - b).abs().max((a - c).abs()).max((b - c).abs())
        })
        .fold(0.0, f64::max);

    let v: Vec<f64> = (0..grid.len()).map(|i| shifted.at(i) / u0.at(i).powi(2)).collect();
    let dv = smooth_derivative(&v, h);
    let bernoulli_residual = range
        .clone()
        .map(|i| {
            let t = 2.0 * v[i] * wp.at(i);
            (dv[i] - t - 1.0).abs() / (1.0 + t.abs())
        })
        .fold(0.0, f64::max);

    let dwg = smooth_derivative(wg.values(), h);
    let dwp = smooth_derivative(wp.values(), h);
    let riccati_defect = range
        .map(|i| ((wg.at(i).powi(2) + dwg[i]) - (wp.at(i).powi(2) + dwp[i])).abs())
        .fold(0.0, f64::max);

    Ok(DdgrMember {
        lambda,
        potential,
        ground_state,
        superpotential_general: wg,
        normalization: f,
        normalization_numeric,
        form_defect,
        superpotential_defect,
        bernoulli_residual,
        riccati_defect,
    })
}

impl DdgrFamily {
    /// `V₊ = u − 2D² ln u₀`, the common partner (`w_p² + w_p'` shifted by the
    /// ground energy).
    pub fn partner(&self) -> Result<SampledFunction, FamilyError> {
        let d2 = second_log_derivative(&self.zero_mode)?;
        Ok(self.source_potential.zip_with(&d2, |a, b| a - 2.0 * b).expect("same grid"))
    }

    /// `|E_n(member) − E_n(source)|` for the first `levels` levels of each
    /// member, by the eigensolver.
    pub fn spectrum_drift(&self, levels: usize) -> Result<Vec<Vec<f64>>, FamilyError> {
        let cfg = |u: &SampledFunction| SolveConfig::for_domain(u, levels, self.domain_cut);
        let source = eigensolve::solve_levels(&self.source_potential, &cfg(&self.source_potential))?;
        self.members
            .par_iter()
            .map(|m| {
                let got = eigensolve::solve_levels(&m.potential, &cfg(&m.potential))?;
                Ok(source
                    .iter()
                    .enumerate()
                    .map(|(n, s)| got.get(n).map_or(f64::INFINITY, |g| (g.energy - s.energy).abs()))
                    .collect())
            })
            .collect()
    }

    /// One JSON manifest plus `potential_<k>.csv` and `ground_<k>.csv`
    /// per member.
    pub fn write_to(&self, dir: &Path, record: &TransformRecord) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        for (k, m) in self.members.iter().enumerate() {
            let pot = format!("potential_{k}.csv");
            let gs = format!("ground_{k}.csv");
            write_csv(&dir.join(&pot), &m.potential, "x,V")?;
            write_csv(&dir.join(&gs), &m.ground_state, "x,psi")?;
            entries.push(json!({
                "lambda": m.lambda,
                "normalization": m.normalization,
                "normalization_numeric": m.normalization_numeric,
                "potential": pot,
                "ground_state": gs,
            }));
        }
        let manifest = json!({
            "ground_energy": self.ground_energy,
            "domain_cut": self.domain_cut,
            "lambda_values": self.lambda_values,
            "members": entries,
            "record": record,
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        fs::write(dir.join("family.json"), text)
    }
}

fn write_csv(path: &Path, f: &SampledFunction, header: &str) -> io::Result<()> {
    let mut buf = Vec::new();
    f.write_csv(&mut buf, header).map_err(io::Error::other)?;
    fs::write(path, buf)
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberCheck {
    pub lambda: f64,
    /// `max |V(x;λ) − V₊ − 2D² ln u₀(x;λ)|` over the interior.
    pub fermionic_defect: f64,
    /// Distance from the ground-deleted Darboux partner of the member to
    /// `V₊`, with the ground state taken from the eigensolver.
    pub partner_defect: f64,
    /// `|E₀(member) − E₀(source)|`.
    pub ground_energy_drift: f64,
    /// Largest gap between the constructed ground state and the
    /// eigensolver's zero mode of the member.
    pub closure_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoubleDarbouxReport {
    pub tolerance: f64,
    pub members: Vec<MemberCheck>,
    pub failures: Vec<String>,
}

/// Checks that every member is an inverse Darboux image of the shared
/// partner `V₊`, both by the closed form and through the eigensolver.
pub fn ddgr_double_darboux_check(family: &DdgrFamily) -> Result<DoubleDarbouxReport, FamilyError> {
    const TOL: f64 = 1e-5;
    let vp = family.partner()?;
    let grid = *vp.grid();
    let members: Vec<MemberCheck> = family
        .members
        .par_iter()
        .map(|m| -> Result<MemberCheck, FamilyError> {
            let d2 = second_log_derivative(&m.ground_state)?;
            let fermionic_defect = interior(&grid, EDGE_SKIP)
                .map(|i| (m.potential.at(i) - vp.at(i) - 2.0 * d2.at(i)).abs())
                .fold(0.0, f64::max);
            let (energy, mode) = ground_pair(&m.potential, family.domain_cut)?;
            let seed = DarbouxSeed::new(mode.clone(), energy);
            let partner = darboux_transform(&m.potential, &seed)?.potential;
            let partner_defect = partner.sup_distance(&vp, EDGE_SKIP).expect("same grid");
            let closure_defect = mode.sup_distance(&m.ground_state, EDGE_SKIP).expect("same grid");
            Ok(MemberCheck {
                lambda: m.lambda,
                fermionic_defect,
                partner_defect,
                ground_energy_drift: (energy - family.ground_energy).abs(),
                closure_defect,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut failures = Vec::new();
    for c in &members {
        if !(c.fermionic_defect <= TOL) {
            failures.push(format!("λ = {}: closed-form partner defect {:e}", c.lambda, c.fermionic_defect));
        }
        if !(c.partner_defect <= TOL) {
            failures.push(format!("λ = {}: Darboux partner defect {:e}", c.lambda, c.partner_defect));
        }
    }
    Ok(DoubleDarbouxReport { tolerance: TOL, members, failures })
}

/// Ground level deleted and re-added with `ℐ₀/u₀`: `u − 2D² ln ℐ₀`.
pub fn pursey_transform(u: &SampledFunction) -> Result<SampledFunction, FamilyError> {
    let (energy, u0) = ground_pair(u, DomainCut::FullLine)?;
    let (i0, _) = ground_integrals(&u0, energy, u, DomainCut::FullLine);
    Ok(readd(u, &u0, &i0))
}

/// Ground level deleted and re-added with `(1 − ℐ₀)/u₀`: `u − 2D² ln(1 − ℐ₀)`.
pub fn abraham_moses_transform(u: &SampledFunction) -> Result<SampledFunction, FamilyError> {
    let (energy, u0) = ground_pair(u, DomainCut::FullLine)?;
    let (_, rest) = ground_integrals(&u0, energy, u, DomainCut::FullLine);
    Ok(readd(u, &u0, &rest.map(|v| -v)))
}

/// Amplitude-match tolerance of [`compare_schemes`].
pub const AMPLITUDE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct SchemeResult {
    pub scheme: String,
    pub spectrum: Vec<f64>,
    pub reflection_moduli: Vec<f64>,
    pub transmission_moduli: Vec<f64>,
    /// `max_k max(|R − R_src|, |T − T_src|)`.
    pub amplitude_difference: f64,
    /// `max_k max(||R| − |R_src||, ||T| − |T_src||)`.
    pub modulus_difference: f64,
    pub amplitude_match: bool,
    #[serde(skip)]
    pub potential: SampledFunction,
    #[serde(skip)]
    pub reflection: Vec<Complex64>,
    #[serde(skip)]
    pub transmission: Vec<Complex64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeComparison {
    pub lambda: f64,
    pub wavenumbers: Vec<f64>,
    pub source: SchemeResult,
    pub schemes: Vec<SchemeResult>,
}

/// Spectra and scattering amplitudes of DDGR(λ), Pursey and Abraham–Moses
/// outputs against the source. Amplitudes are compared as complex
/// numbers: deleting a level leaves `|T|` alone and only rotates its
/// phase, so moduli cannot tell the schemes apart on a reflectionless
/// source.
pub fn compare_schemes(u: &SampledFunction, lambda: f64, k_list: &[f64]) -> Result<SchemeComparison, FamilyError> {
    check_lambda(lambda)?;
    let family = ddgr_family(u, &[lambda])?;
    let ddgr = family.members[0].potential.clone();
    let pursey = pursey_transform(u)?;
    let am = abraham_moses_transform(u)?;
    let source = scheme_result("source", u.clone(), k_list, None)?;
    let schemes = [("ddgr", ddgr), ("pursey", pursey), ("abraham_moses", am)]
        .into_par_iter()
        .map(|(name, v)| scheme_result(name, v, k_list, Some(&source)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SchemeComparison { lambda, wavenumbers: k_list.to_vec(), source, schemes })
}

fn scheme_result(
    name: &str,
    v: SampledFunction,
    k_list: &[f64],
    reference: Option<&SchemeResult>,
) -> Result<SchemeResult, FamilyError> {
    let spectrum = eigensolve::solve_levels(&v, &SolveConfig::auto(&v, 16))
        .or_else(|e| match e {
            EigenError::InvalidConfig(_) => Ok(Vec::new()),
            e => Err(e),
        })?
        .into_iter()
        .map(|p| p.energy)
        .collect();
    let (reflection, transmission) = if k_list.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        let s = rt_coefficients(&v, k_list)?;
        (s.reflection, s.transmission)
    };
    let (amplitude_difference, modulus_difference) = match reference {
        Some(r) => reflection.iter().zip(&transmission).zip(r.reflection.iter().zip(&r.transmission)).fold(
            (0.0f64, 0.0f64),
            |(a, m), ((rv, tv), (rr, tr))| {
                (
                    a.max((rv - rr).norm()).max((tv - tr).norm()),
                    m.max((rv.norm() - rr.norm()).abs()).max((tv.norm() - tr.norm()).abs()),
                )
            },
        ),
        None => (0.0, 0.0),
    };
    Ok(SchemeResult {
        scheme: name.to_string(),
        spectrum,
        reflection_moduli: reflection.iter().map(|c| c.norm()).collect(),
        transmission_moduli: transmission.iter().map(|c| c.norm()).collect(),
        amplitude_difference,
        modulus_difference,
        amplitude_match: reference.is_some() && !k_list.is_empty() && amplitude_difference <= AMPLITUDE_TOLERANCE,
        potential: v,
        reflection,
        transmission,
    })
}

impl SchemeComparison {
    /// `k,|R|,|T|` rows for one scheme.
    pub fn curve_csv(&self, scheme: &SchemeResult) -> String {
        let mut s = String::from("k,abs_R,abs_T\n");
        for (i, k) in self.wavenumbers.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{}\n",
                fmt_num(*k),
                fmt_num(scheme.reflection_moduli[i]),
                fmt_num(scheme.transmission_moduli[i])
            ));
        }
        s
    }
}
