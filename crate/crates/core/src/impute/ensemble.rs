use std::fmt;
use std::str::FromStr;

use super::{Imputer, ImputerQuery, Prediction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsemblePolicy {
    /// Ask every member; keep the most confident answer (earlier wins ties).
    MaxConfidence,
    /// Back-off chain: the first member that answers.
    FirstSuccess,
}

impl FromStr for EnsemblePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max_confidence" => Ok(EnsemblePolicy::MaxConfidence),
            "first_success" => Ok(EnsemblePolicy::FirstSuccess),
            _ => Err(Error::Config(format!("unknown ensemble policy `{s}`"))),
        }
    }
}

impl fmt::Display for EnsemblePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsemblePolicy::MaxConfidence => "max_confidence",
            EnsemblePolicy::FirstSuccess => "first_success",
        })
    }
}

/// Combines imputers. The source of each answer is prefixed with the name of
/// the member that gave it.
pub struct Ensemble {
    members: Vec<Box<dyn Imputer>>,
    policy: EnsemblePolicy,
}

impl Ensemble {
    pub fn new(members: Vec<Box<dyn Imputer>>, policy: EnsemblePolicy) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Config("ensemble needs at least one member".into()));
        }
        Ok(Ensemble { members, policy })
    }

    pub fn members(&self) -> impl Iterator<Item = &dyn Imputer> {
        self.members.iter().map(|m| m.as_ref())
    }
}

fn tagged(member: &dyn Imputer, mut p: Prediction) -> Prediction {
    p.source = format!("{}:{}", member.name(), p.source);
    p
}

impl Imputer for Ensemble {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn predict(&self, q: &ImputerQuery<'_>) -> Result<Prediction> {
        let mut last_err = None;
        let mut best: Option<Prediction> = None;
        for m in &self.members {
            match m.predict(q) {
                Ok(p) => {
                    let p = tagged(m.as_ref(), p);
                    if self.policy == EnsemblePolicy::FirstSuccess {
                        return Ok(p);
                    }
                    if best.as_ref().is_none_or(|b| p.confidence > b.confidence) {
                        best = Some(p);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        best.ok_or_else(|| last_err.expect("non-empty ensemble"))
    }
}
