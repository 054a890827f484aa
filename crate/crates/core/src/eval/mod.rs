//! Scoring filled test sets against gold.
//!
//! Accuracy is macro-averaged in two steps: the accuracy of each language is
//! the share of its blanked cells predicted correctly, a genus scores the
//! mean of its languages, and the overall macro score is the mean over
//! genera. Missing predictions count as wrong unless
//! [`MissingPolicy::Exclude`] is requested.

mod analysis;
mod permutation;
mod report;

use std::collections::BTreeMap;

pub use analysis::{
    blanking_ratio_correlation, feature_accuracy_table, grouped_accuracy, meta_correlation, pearson, Correlation,
    FeatureRow, GroupRow,
};
pub use permutation::{paired_permutation_test, SignificanceResult};
pub use report::{evaluate_systems, Evaluation, EvaluationOptions};

use crate::error::{Error, Result};
use crate::kb::{CellState, Dataset};

/// One system's predictions for blanked cells, keyed by `(language, feature)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SystemOutput {
    pub name: String,
    pub predictions: BTreeMap<(String, String), String>,
}

impl SystemOutput {
    pub fn new(name: impl Into<String>) -> Self {
        SystemOutput {
            name: name.into(),
            predictions: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, language: &str, feature: &str, value: &str) {
        self.predictions
            .insert((language.to_string(), feature.to_string()), value.to_string());
    }

    /// Reads the predictions for `gold`'s blanked cells out of a filled
    /// dataset. Cells left as `?` are simply absent.
    pub fn from_filled(name: impl Into<String>, gold: &Dataset, filled: &Dataset) -> Self {
        let mut out = SystemOutput::new(name);
        for (l, f, _) in gold.blanked() {
            if let Some(v) = filled.matrix().get(l, f).and_then(CellState::observed) {
                out.insert(l, f, v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingPolicy {
    #[default]
    CountAsWrong,
    /// Drop unanswered cells from the denominators.
    Exclude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanguageScore {
    pub code: String,
    pub genus: String,
    pub blanked: usize,
    pub correct: usize,
    pub missing: usize,
    /// `None` when every cell was excluded.
    pub accuracy: Option<f64>,
    /// Blanked share of the language's known cells.
    pub blanking_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenusScore {
    pub genus: String,
    pub languages: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub system: String,
    /// In language-code order.
    pub languages: Vec<LanguageScore>,
    pub genera: Vec<GenusScore>,
    pub macro_accuracy: f64,
    pub micro_accuracy: f64,
    /// Per feature: `(correct, scored)`.
    pub features: BTreeMap<String, (usize, usize)>,
    pub missing: usize,
    /// Predictions that do not address a blanked cell; ignored.
    pub warnings: Vec<String>,
}

impl EvalReport {
    pub fn language(&self, code: &str) -> Option<&LanguageScore> {
        self.languages.iter().find(|l| l.code == code)
    }

    pub fn genus(&self, genus: &str) -> Option<&GenusScore> {
        self.genera.iter().find(|g| g.genus == genus)
    }
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for x in xs {
        sum += x;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Macro (mean of genus means) over `(genus, accuracy)` pairs.
pub(crate) fn macro_average<'a>(scores: impl IntoIterator<Item = (&'a str, f64)>) -> (Vec<GenusScore>, f64) {
    let mut by_genus: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (g, a) in scores {
        by_genus.entry(g).or_default().push(a);
    }
    let genera: Vec<GenusScore> = by_genus
        .into_iter()
        .map(|(g, accs)| GenusScore {
            genus: g.to_string(),
            languages: accs.len(),
            accuracy: mean(accs).expect("non-empty"),
        })
        .collect();
    let macro_acc = mean(genera.iter().map(|g| g.accuracy)).unwrap_or(0.0);
    (genera, macro_acc)
}

pub fn score(gold: &Dataset, out: &SystemOutput, policy: MissingPolicy) -> Result<EvalReport> {
    if !gold.has_blanked() {
        return Err(Error::Config("gold dataset has no blanked cells".into()));
    }
    let mut warnings = Vec::new();
    for (l, f) in out.predictions.keys() {
        if gold.matrix().get(l, f).and_then(CellState::gold).is_none() {
            warnings.push(format!("prediction for ({l}, {f}) is not a blanked cell; ignored"));
        }
    }

    let mut languages = Vec::new();
    let mut features: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let (mut total_correct, mut total_scored, mut total_missing) = (0, 0, 0);
    // code order keeps floating-point sums independent of record order
    let mut ordered: Vec<_> = gold.languages().iter().collect();
    ordered.sort_by(|a, b| a.code.cmp(&b.code));
    for lang in ordered {
        let Some(row) = gold.matrix().row(&lang.code) else { continue };
        let (mut blanked, mut correct, mut missing, mut observed) = (0, 0, 0, 0);
        for (f, state) in row {
            match state {
                CellState::Observed(_) => observed += 1,
                CellState::Blanked(g) => {
                    blanked += 1;
                    let key = (lang.code.clone(), f.clone());
                    let entry = features.entry(f.clone()).or_insert((0, 0));
                    match out.predictions.get(&key) {
                        Some(p) => {
                            let hit = p == g;
                            correct += usize::from(hit);
                            entry.0 += usize::from(hit);
                            entry.1 += 1;
                        }
                        None => {
                            missing += 1;
                            if policy == MissingPolicy::CountAsWrong {
                                entry.1 += 1;
                            }
                        }
                    }
                }
                CellState::Unknown => {}
            }
        }
        if blanked == 0 {
            continue;
        }
        let scored = match policy {
            MissingPolicy::CountAsWrong => blanked,
            MissingPolicy::Exclude => blanked - missing,
        };
        total_correct += correct;
        total_scored += scored;
        total_missing += missing;
        languages.push(LanguageScore {
            code: lang.code.clone(),
            genus: lang.genus.clone(),
            blanked,
            correct,
            missing,
            accuracy: (scored > 0).then(|| correct as f64 / scored as f64),
            blanking_ratio: blanked as f64 / (blanked + observed) as f64,
        });
    }
    features.retain(|_, (_, n)| *n > 0);

    let (genera, macro_accuracy) = macro_average(
        languages
            .iter()
            .filter_map(|l| l.accuracy.map(|a| (l.genus.as_str(), a))),
    );
    Ok(EvalReport {
        system: out.name.clone(),
        languages,
        genera,
        macro_accuracy,
        micro_accuracy: if total_scored == 0 { 0.0 } else { total_correct as f64 / total_scored as f64 },
        features,
        missing: total_missing,
        warnings,
    })
}
