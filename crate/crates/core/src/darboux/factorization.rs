use super::{DarbouxError, DarbouxSeed};
use crate::calculus::{derivative_slice, interior, second_log_derivative, EDGE_SKIP};
use crate::sampled::SampledFunction;

/// Superpotential `σ = ψ₀'/ψ₀` with the two partners it factorizes.
#[derive(Debug, Clone)]
pub struct FactorizationPair {
    pub superpotential: SampledFunction,
    pub lambda1: f64,
    /// `σ' + σ² + λ₁`
    pub u_minus: SampledFunction,
    /// `−σ' + σ² + λ₁`
    pub u_plus: SampledFunction,
}

impl FactorizationPair {
    /// Factorization through a nodeless seed.
    pub fn from_seed(seed: &DarbouxSeed) -> Result<Self, DarbouxError> {
        let nodes = seed.nodes();
        if !nodes.is_empty() {
            return Err(DarbouxError::SingularSeed { nodes });
        }
        let ds = second_log_derivative(&seed.psi1)?;
        let s = &seed.sigma1;
        let l = seed.lambda1;
        let u_minus = s.zip_with(&ds, |s, d| d + s * s + l).expect("same grid");
        let u_plus = s.zip_with(&ds, |s, d| -d + s * s + l).expect("same grid");
        Ok(FactorizationPair { superpotential: s.clone(), lambda1: l, u_minus, u_plus })
    }

    /// `max |(u₋ − u₊) − 2σ'|` over the interior.
    pub fn partner_gap_defect(&self) -> f64 {
        let ds = derivative_slice(self.superpotential.values(), self.superpotential.grid().spacing(), 1);
        interior(self.u_minus.grid(), EDGE_SKIP)
            .map(|i| (self.u_minus.at(i) - self.u_plus.at(i) - 2.0 * ds[i]).abs())
            .fold(0.0, f64::max)
    }

    /// `B⁺f = −f' + σf`.
    pub fn b_plus(&self, f: &SampledFunction) -> SampledFunction {
        let d = derivative_slice(f.values(), f.grid().spacing(), 1);
        let v = f.values().iter().zip(d).zip(self.superpotential.values()).map(|((f, d), s)| -d + s * f).collect();
        SampledFunction::new(*f.grid(), v).expect("same grid")
    }

    /// `B⁻f = f' + σf`.
    pub fn b_minus(&self, f: &SampledFunction) -> SampledFunction {
        let d = derivative_slice(f.values(), f.grid().spacing(), 1);
        let v = f.values().iter().zip(d).zip(self.superpotential.values()).map(|((f, d), s)| d + s * f).collect();
        SampledFunction::new(*f.grid(), v).expect("same grid")
    }
}

/// Factorization of `u` at its ground level.
pub fn factorize(u: &SampledFunction) -> Result<FactorizationPair, DarbouxError> {
    let seed = match DarbouxSeed::ground(u) {
        Err(DarbouxError::InsufficientLevels { found: 0, .. }) => return Err(DarbouxError::NoBoundState),
        other => other?,
    };
    FactorizationPair::from_seed(&seed)
}

/// `‖(L₁T − TL₀)f‖∞ / ‖f‖∞` over the interior with `T = D − w` and
/// `Lᵢ = −D² + uᵢ`.
///
/// Expanded, the commutator is `(2w' + u₁ − u₀)f' + (w'' − u₀' − w(u₁ − u₀))f`,
/// so only first derivatives of the probe are needed.
pub fn intertwining_residual(
    l0_potential: &SampledFunction,
    l1_potential: &SampledFunction,
    t_superpotential: &SampledFunction,
    probe: &SampledFunction,
) -> f64 {
    let h = probe.grid().spacing();
    let w = t_superpotential.values();
    let dw = derivative_slice(w, h, 1);
    let d2w = derivative_slice(w, h, 2);
    let du0 = derivative_slice(l0_potential.values(), h, 1);
    let df = derivative_slice(probe.values(), h, 1);
    let mut res = 0.0f64;
    let mut scale = 0.0f64;
    for i in interior(probe.grid(), EDGE_SKIP) {
        let gap = l1_potential.at(i) - l0_potential.at(i);
        let f = probe.at(i);
        let r = (2.0 * dw[i] + gap) * df[i] + (d2w[i] - du0[i] - w[i] * gap) * f;
        res = res.max(r.abs());
        scale = scale.max(f.abs());
    }
    if scale == 0.0 {
        0.0
    } else {
        res / scale
    }
}

/// Relative defects of `B⁻B⁺ = −D² + u − λ₁` and `B⁺B⁻ = −D² + v − λ₁`
/// on `probe`, each as `‖lhs − rhs‖∞ / ‖probe‖∞` over the interior.
pub fn operator_identity_residuals(
    pair: &FactorizationPair,
    u: &SampledFunction,
    v: &SampledFunction,
    probe: &SampledFunction,
) -> (f64, f64) {
    let h = probe.grid().spacing();
    let d2 = derivative_slice(probe.values(), h, 2);
    let mp = pair.b_minus(&pair.b_plus(probe));
    let pm = pair.b_plus(&pair.b_minus(probe));
    let mut r1 = 0.0f64;
    let mut r2 = 0.0f64;
    let mut scale = 0.0f64;
    for i in interior(probe.grid(), 2 * EDGE_SKIP) {
        let f = probe.at(i);
        r1 = r1.max((mp.at(i) - (-d2[i] + (u.at(i) - pair.lambda1) * f)).abs());
        r2 = r2.max((pm.at(i) - (-d2[i] + (v.at(i) - pair.lambda1) * f)).abs());
        scale = scale.max(f.abs());
    }
    if scale == 0.0 {
        (0.0, 0.0)
    } else {
        (r1 / scale, r2 / scale)
    }
}
