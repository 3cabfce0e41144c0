//! Catalog of source potentials.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Grid;
use crate::sampled::SampledFunction;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("half-line potential sampled on a grid starting at x_min = {x_min} < 0")]
    DomainMismatch { x_min: f64 },
    #[error("potential `{kind}` expects parameters {expected:?}, got {got:?}")]
    Parameters { kind: &'static str, expected: Vec<&'static str>, got: Vec<String> },
    #[error("parameter `{name}` = {value} is out of range: {reason}")]
    OutOfRange { name: &'static str, value: f64, reason: &'static str },
    #[error("custom samples live on a different grid")]
    GridMismatch,
    #[error("unknown potential kind `{0}`")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DomainCut {
    /// `c = -∞`, proxied numerically by the left grid edge.
    #[default]
    FullLine,
    /// `c = 0`; the potential lives on `x >= 0`.
    HalfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Free,
    Harmonic,
    PoschlTeller,
    CustomSampled,
}

impl PotentialKind {
    pub fn name(self) -> &'static str {
        match self {
            PotentialKind::Free => "free",
            PotentialKind::Harmonic => "harmonic",
            PotentialKind::PoschlTeller => "poschl_teller",
            PotentialKind::CustomSampled => "custom_sampled",
        }
    }

    pub fn required_parameters(self) -> &'static [&'static str] {
        match self {
            PotentialKind::PoschlTeller => &["ell"],
            _ => &[],
        }
    }

    pub fn parse(s: &str) -> Result<Self, PotentialError> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "free" => Ok(PotentialKind::Free),
            "harmonic" => Ok(PotentialKind::Harmonic),
            "poschl_teller" | "pt" | "sech2" => Ok(PotentialKind::PoschlTeller),
            "custom_sampled" | "custom" => Ok(PotentialKind::CustomSampled),
            _ => Err(PotentialError::UnknownKind(s.to_string())),
        }
    }
}

/// A catalog entry: kind, its parameters, and the domain cut.
#[derive(Debug, Clone, Serialize)]
pub struct PotentialSpec {
    kind: PotentialKind,
    parameters: BTreeMap<String, f64>,
    domain_cut: DomainCut,
    #[serde(skip)]
    samples: Option<Arc<SampledFunction>>,
}

impl PotentialSpec {
    pub fn new(
        kind: PotentialKind,
        parameters: BTreeMap<String, f64>,
        domain_cut: DomainCut,
    ) -> Result<Self, PotentialError> {
        let expected = kind.required_parameters();
        let mut got: Vec<String> = parameters.keys().cloned().collect();
        got.sort();
        let mut want: Vec<&str> = expected.to_vec();
        want.sort_unstable();
        if got.iter().map(String::as_str).ne(want.iter().copied()) {
            return Err(PotentialError::Parameters { kind: kind.name(), expected: expected.to_vec(), got });
        }
        if kind == PotentialKind::PoschlTeller {
            let ell = parameters["ell"];
            if !(ell > 0.0) || !ell.is_finite() {
                return Err(PotentialError::OutOfRange { name: "ell", value: ell, reason: "need ell > 0" });
            }
        }
        Ok(PotentialSpec { kind, parameters, domain_cut, samples: None })
    }

    pub fn free() -> Self {
        Self::new(PotentialKind::Free, BTreeMap::new(), DomainCut::FullLine).expect("valid")
    }

    pub fn harmonic() -> Self {
        Self::new(PotentialKind::Harmonic, BTreeMap::new(), DomainCut::FullLine).expect("valid")
    }

    /// `-ℓ(ℓ+1) sech² x`.
    pub fn poschl_teller(ell: f64) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::PoschlTeller, BTreeMap::from([("ell".to_string(), ell)]), DomainCut::FullLine)
    }

    /// Wraps externally supplied samples.
    pub fn custom(samples: SampledFunction, domain_cut: DomainCut) -> Self {
        PotentialSpec {
            kind: PotentialKind::CustomSampled,
            parameters: BTreeMap::new(),
            domain_cut,
            samples: Some(Arc::new(samples)),
        }
    }

    pub fn with_domain_cut(mut self, cut: DomainCut) -> Self {
        self.domain_cut = cut;
        self
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn parameters(&self) -> &BTreeMap<String, f64> {
        &self.parameters
    }

    pub fn domain_cut(&self) -> DomainCut {
        self.domain_cut
    }

    /// Closed form `u(x)`, when the kind has one.
    pub fn evaluator(&self) -> Option<impl Fn(f64) -> f64 + Send + Sync + 'static> {
        let ell = self.parameters.get("ell").copied().unwrap_or(0.0);
        let kind = self.kind;
        match kind {
            PotentialKind::CustomSampled => None,
            _ => Some(move |x: f64| match kind {
                PotentialKind::Free => 0.0,
                PotentialKind::Harmonic => x * x,
                PotentialKind::PoschlTeller => {
                    let s = 1.0 / x.cosh();
                    -ell * (ell + 1.0) * s * s
                }
                PotentialKind::CustomSampled => unreachable!(),
            }),
        }
    }

    /// Short-range kinds decay at both ends of the line.
    pub fn is_short_range(&self) -> bool {
        matches!(self.kind, PotentialKind::Free | PotentialKind::PoschlTeller)
    }
}

/// Samples `u(x)` for a catalog entry on `grid`.
pub fn sample_potential(spec: &PotentialSpec, grid: &Grid) -> Result<SampledFunction, PotentialError> {
    if spec.domain_cut == DomainCut::HalfLine && grid.x_min() < 0.0 {
        return Err(PotentialError::DomainMismatch { x_min: grid.x_min() });
    }
    if let Some(samples) = &spec.samples {
        if !samples.grid().same_as(grid) {
            return Err(PotentialError::GridMismatch);
        }
        return Ok((**samples).clone());
    }
    let name = match spec.kind {
        PotentialKind::PoschlTeller => format!("poschl_teller(ell={})", spec.parameters["ell"]),
        k => k.name().to_string(),
    };
    let f = spec.evaluator().expect("catalog kind");
    Ok(SampledFunction::from_fn(*grid, name, f))
}
