//! Provenance chains for transformed potentials.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::darboux::{adler_delete_pair, crum_iterate, darboux_transform, inverse_darboux, DarbouxError, DarbouxSeed};
use crate::families::{abraham_moses_transform, ddgr_family, pursey_transform, FamilyError};
use crate::sampled::SampledFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Darboux,
    InverseDarboux,
    Crum,
    Ddgr,
    Pursey,
    AbrahamMoses,
    TdseForward,
    TdseInverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformStep {
    pub step_kind: StepKind,
    #[serde(default)]
    pub seed_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factorization_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_parameter: Option<f64>,
    /// Lower level of a consecutive pair removed by a Crum step whose seeds
    /// are the source eigenfunctions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deleted_level: Option<usize>,
}

impl TransformStep {
    pub fn new(step_kind: StepKind) -> Self {
        TransformStep { step_kind, seed_ids: Vec::new(), factorization_energy: None, family_parameter: None, deleted_level: None }
    }

    pub fn seeds(mut self, ids: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.seed_ids = ids.into_iter().map(Into::into).collect();
        self
    }

    pub fn energy(mut self, e: f64) -> Self {
        self.factorization_energy = Some(e);
        self
    }

    pub fn parameter(mut self, l: f64) -> Self {
        self.family_parameter = Some(l);
        self
    }

    pub fn deleting(mut self, k: usize) -> Self {
        self.deleted_level = Some(k);
        self
    }
}

/// Root description plus an append-only list of steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub root: String,
    steps: Vec<TransformStep>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("seed `{0}` is not in the store")]
    MissingSeed(String),
    #[error("step {index} ({kind:?}) lacks {what}")]
    Incomplete { index: usize, kind: StepKind, what: &'static str },
    #[error("{0:?} steps act on space-time data and cannot be replayed on a static potential")]
    NotReplayable(StepKind),
    #[error(transparent)]
    Darboux(#[from] DarbouxError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Seed functions referenced by `seed_ids`, each with its energy.
pub type SeedStore = BTreeMap<String, DarbouxSeed>;

impl TransformRecord {
    pub fn new(root: impl Into<String>) -> Self {
        TransformRecord { root: root.into(), steps: Vec::new() }
    }

    pub fn push(&mut self, step: TransformStep) -> &mut Self {
        self.steps.push(step);
        self
    }

    pub fn with(mut self, step: TransformStep) -> Self {
        self.steps.push(step);
        self
    }

    pub fn steps(&self) -> &[TransformStep] {
        &self.steps
    }

    /// Re-applies every step to `root`.
    pub fn replay(&self, root: &SampledFunction, seeds: &SeedStore) -> Result<SampledFunction, ReplayError> {
        let mut u = root.clone();
        for (index, step) in self.steps.iter().enumerate() {
            let lookup = |id: &String| seeds.get(id).ok_or_else(|| ReplayError::MissingSeed(id.clone()));
            let first = || {
                step.seed_ids.first().ok_or(ReplayError::Incomplete { index, kind: step.step_kind, what: "a seed id" })
            };
            u = match step.step_kind {
                StepKind::Darboux => darboux_transform(&u, lookup(first()?)?)?.potential,
                StepKind::InverseDarboux => {
                    let s = lookup(first()?)?;
                    inverse_darboux(&u, &s.psi1, s.lambda1)?
                }
                StepKind::Crum => match step.deleted_level {
                    Some(k) => adler_delete_pair(&u, k)?,
                    None => {
                        let list = step.seed_ids.iter().map(|id| lookup(id).cloned()).collect::<Result<Vec<_>, _>>()?;
                        crum_iterate(&u, &list)?.potential
                    }
                },
                StepKind::Ddgr => {
                    let l = step.family_parameter.ok_or(ReplayError::Incomplete {
                        index,
                        kind: step.step_kind,
                        what: "a family parameter",
                    })?;
                    ddgr_family(&u, &[l])?.members.remove(0).potential
                }
                StepKind::Pursey => pursey_transform(&u)?,
                StepKind::AbrahamMoses => abraham_moses_transform(&u)?,
                k @ (StepKind::TdseForward | StepKind::TdseInverse) => return Err(ReplayError::NotReplayable(k)),
            };
        }
        Ok(u)
    }
}
