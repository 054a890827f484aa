//! Imputation engines behind one interface.
//!
//! Every engine is fitted on a training [`Dataset`] and then answers
//! [`ImputerQuery`]s: "given this language and the features we know, what is
//! the value of `target`?". An engine that has nothing to say returns an
//! error ([`Error::UnknownFeature`] or [`Error::NoEvidence`]) so that an
//! [`Ensemble`] can back off to the next member.
//!
//! Confidence is engine-specific but always a number in `[0, 1]`:
//! relative frequency for the counting engines, normalized vote mass for the
//! correlation engine, softmax probability for the ridge engine.

mod backoff;
mod config;
mod cooccur;
mod correlation;
mod ensemble;
mod knn;
mod prior;
mod ridge;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

pub use backoff::{GenusFamilyBackoff, GlobalFrequency, StatisticalBackoff};
pub use config::{ImputerConfig, Method};
pub use correlation::{Correlation, CorrelationParams};
pub use ensemble::{Ensemble, EnsemblePolicy};
pub use knn::{Knn, LanguageVectors};
pub use prior::{build_prior_features, PriorBlocks, PriorConfig, PriorKey, PriorStats, SparseVector};
pub use ridge::{solve_ridge, RidgeParams, RidgePrior, RidgeSolution, RidgeSolver};

use crate::error::{Error, Result};
use crate::kb::{Dataset, Language};

/// One cell to fill.
#[derive(Debug, Clone, Copy)]
pub struct ImputerQuery<'a> {
    pub language: &'a Language,
    pub observed: &'a BTreeMap<String, String>,
    pub target: &'a str,
}

impl<'a> ImputerQuery<'a> {
    pub fn new(
        language: &'a Language,
        observed: &'a BTreeMap<String, String>,
        target: &'a str,
    ) -> Result<Self> {
        if observed.contains_key(target) {
            return Err(Error::Config(format!(
                "target `{target}` is already observed for `{}`",
                language.code
            )));
        }
        Ok(ImputerQuery {
            language,
            observed,
            target,
        })
    }

    pub(crate) fn no_evidence(&self, reason: &'static str) -> Error {
        Error::NoEvidence {
            language: self.language.code.clone(),
            feature: self.target.to_string(),
            reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub value: String,
    pub confidence: f64,
    /// Which rule or back-off level decided.
    pub source: String,
}

pub trait Imputer: Send + Sync {
    fn name(&self) -> &str;

    fn predict(&self, query: &ImputerQuery<'_>) -> Result<Prediction>;
}

impl<T: Imputer + ?Sized> Imputer for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn predict(&self, query: &ImputerQuery<'_>) -> Result<Prediction> {
        (**self).predict(query)
    }
}

/// Counts of values of one feature over some group of languages.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValueCounts {
    counts: BTreeMap<String, usize>,
    total: usize,
}

impl ValueCounts {
    pub fn add(&mut self, value: &str) {
        *self.counts.entry(value.to_string()).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn get(&self, value: &str) -> usize {
        self.counts.get(value).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.counts.iter().map(|(v, &c)| (v.as_str(), c))
    }

    /// Most frequent value; ties go to the lexicographically smaller value.
    pub fn mode(&self) -> Option<(&str, usize)> {
        let mut best: Option<(&str, usize)> = None;
        for (v, c) in self.iter() {
            if c > 0 && best.is_none_or(|(_, bc)| c > bc) {
                best = Some((v, c));
            }
        }
        best
    }

    pub(crate) fn predict(&self, source: &str) -> Option<Prediction> {
        self.mode().map(|(v, c)| Prediction {
            value: v.to_string(),
            confidence: c as f64 / self.total as f64,
            source: source.to_string(),
        })
    }
}

/// Lexicographically smallest argmax over `(value, score)` pairs in value order.
pub(crate) fn argmax<'a>(scores: impl IntoIterator<Item = (&'a str, f64)>) -> Option<(&'a str, f64)> {
    let mut best: Option<(&str, f64)> = None;
    for (v, s) in scores {
        let better = match best {
            None => true,
            Some((bv, bs)) => s > bs || (s == bs && v < bv),
        };
        if better {
            best = Some((v, s));
        }
    }
    best
}

/// Result of filling every open cell of a dataset.
#[derive(Debug, Default)]
pub struct Imputation {
    pub predictions: BTreeMap<(String, String), Prediction>,
    pub failures: Vec<((String, String), Error)>,
}

impl Imputation {
    pub fn values(&self) -> BTreeMap<(String, String), String> {
        self.predictions
            .iter()
            .map(|(k, p)| (k.clone(), p.value.clone()))
            .collect()
    }
}

/// Predicts every blanked or unknown cell of `test`. Runs in parallel; the
/// result does not depend on scheduling.
pub fn impute_dataset(imputer: &dyn Imputer, test: &Dataset) -> Imputation {
    let observed: HashMap<&str, BTreeMap<String, String>> = test
        .languages()
        .iter()
        .map(|l| (l.code.as_str(), test.observed(&l.code)))
        .collect();
    let cells: Vec<(&Language, &str)> = test
        .matrix()
        .iter()
        .filter(|(_, _, s)| s.is_open())
        .map(|(l, f, _)| (test.language(l).expect("cell language exists"), f))
        .collect();
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(lang, feature)| {
            let obs = &observed[lang.code.as_str()];
            let r = ImputerQuery::new(lang, obs, feature).and_then(|q| imputer.predict(&q));
            ((lang.code.clone(), feature.to_string()), r)
        })
        .collect();
    let mut out = Imputation::default();
    for (key, r) in results {
        match r {
            Ok(p) => {
                out.predictions.insert(key, p);
            }
            Err(e) => out.failures.push((key, e)),
        }
    }
    out
}
