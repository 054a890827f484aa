use std::collections::{BTreeMap, BTreeSet};

use super::Dataset;

/// Minimum coverage kept by [`filter_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterThresholds {
    pub min_feats_per_lang: usize,
    pub min_langs_per_feat: usize,
}

impl Default for FilterThresholds {
    fn default() -> Self {
        // "more than 3 features" per language, "more than 9 languages" per feature
        FilterThresholds {
            min_feats_per_lang: 4,
            min_langs_per_feat: 10,
        }
    }
}

/// Drops sparse languages, then rare features, until neither rule removes
/// anything. Only observed cells count towards coverage.
pub fn filter_dataset(d: &Dataset, t: FilterThresholds) -> Dataset {
    let mut current = d.clone();
    loop {
        let keep: BTreeSet<String> = current
            .languages()
            .iter()
            .filter(|l| current.observed_count(&l.code) >= t.min_feats_per_lang)
            .map(|l| l.code.clone())
            .collect();
        let langs_removed = keep.len() != current.len();
        if langs_removed {
            current = current.subset(&keep);
        }

        let mut coverage: BTreeMap<&str, usize> = current.catalog().features().map(|f| (f, 0)).collect();
        for (_, f, s) in current.matrix().iter() {
            if s.observed().is_some() {
                *coverage.entry(f).or_insert(0) += 1;
            }
        }
        let drop: BTreeSet<String> = coverage
            .into_iter()
            .filter(|&(_, n)| n < t.min_langs_per_feat)
            .map(|(f, _)| f.to_string())
            .collect();
        if !drop.is_empty() {
            current = current.without_features(&drop);
        } else if !langs_removed {
            return current;
        }
    }
}
