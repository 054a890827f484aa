use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{macro_average, mean, score, EvalReport, MissingPolicy, SystemOutput};
use crate::error::{Error, Result};
use crate::kb::Dataset;

/// Pearson's r with its two-sided p-value under the t distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::Config("correlation inputs differ in length".into()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two points"));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p_value = if n < 3 || r.abs() >= 1.0 {
        if n < 3 { 1.0 } else { 0.0 }
    } else {
        let df = (n - 2) as f64;
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numeric(e.to_string()))?;
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(Correlation { r, p_value, n })
}

/// Correlation between each test language's blanking ratio and its accuracy.
pub fn blanking_ratio_correlation(report: &EvalReport) -> Result<Correlation> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = report
        .languages
        .iter()
        .filter_map(|l| Some((l.blanking_ratio, l.accuracy?)))
        .unzip();
    if xs.len() < 3 {
        return Err(Error::UndefinedCorrelation("fewer than three scored languages"));
    }
    pearson(&xs, &ys)
}

/// Correlation, across systems, between overall accuracy and the
/// blanking-ratio correlation. Takes `(macro_accuracy, r)` pairs.
pub fn meta_correlation(points: &[(f64, f64)]) -> Result<Correlation> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    pearson(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub feature: String,
    /// Test languages with this feature blanked.
    pub languages: usize,
    /// Mean over systems of the per-feature accuracy.
    pub mean_accuracy: f64,
    /// Population standard deviation over systems.
    pub std_dev: f64,
}

/// Per-feature accuracy averaged over systems, hardest features first.
/// Missing predictions count as wrong.
pub fn feature_accuracy_table(gold: &Dataset, outputs: &[SystemOutput]) -> Result<Vec<FeatureRow>> {
    if outputs.is_empty() {
        return Err(Error::Config("feature table needs at least one system".into()));
    }
    let mut accs: BTreeMap<String, (usize, Vec<f64>)> = BTreeMap::new();
    for out in outputs {
        let r = score(gold, out, MissingPolicy::CountAsWrong)?;
        for (f, (correct, total)) in r.features {
            let e = accs.entry(f).or_insert((total, Vec::new()));
            e.1.push(correct as f64 / total as f64);
        }
    }
    let mut rows: Vec<FeatureRow> = accs
        .into_iter()
        .map(|(feature, (languages, xs))| {
            let m = mean(xs.iter().copied()).expect("one entry per system");
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64;
            FeatureRow {
                feature,
                languages,
                mean_accuracy: m,
                std_dev: var.sqrt(),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mean_accuracy
            .total_cmp(&b.mean_accuracy)
            .then_with(|| a.feature.cmp(&b.feature))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRow {
    pub group: String,
    pub languages: usize,
    pub accuracy: f64,
}

pub const OTHER_POOLED: &str = "other (pooled)";
pub const OTHER_GENUS_MEAN: &str = "other (genus mean)";

/// Accuracy for each listed genus present in the report, followed by the
/// remaining genera averaged two ways: pooled over their languages, and as
/// the mean of genus means.
pub fn grouped_accuracy(report: &EvalReport, genera: &[String]) -> Vec<GroupRow> {
    let mut rows: Vec<GroupRow> = genera
        .iter()
        .filter_map(|g| report.genus(g))
        .map(|g| GroupRow {
            group: g.genus.clone(),
            languages: g.languages,
            accuracy: g.accuracy,
        })
        .collect();
    let others: Vec<(&str, f64)> = report
        .languages
        .iter()
        .filter(|l| !genera.contains(&l.genus))
        .filter_map(|l| Some((l.genus.as_str(), l.accuracy?)))
        .collect();
    if !others.is_empty() {
        let (gs, genus_mean) = macro_average(others.iter().copied());
        rows.push(GroupRow {
            group: OTHER_POOLED.into(),
            languages: others.len(),
            accuracy: mean(others.iter().map(|(_, a)| *a)).expect("non-empty"),
        });
        rows.push(GroupRow {
            group: OTHER_GENUS_MEAN.into(),
            languages: gs.iter().map(|g| g.languages).sum(),
            accuracy: genus_mean,
        });
    }
    rows
}
