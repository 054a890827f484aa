use std::fmt::Write as _;

use super::analysis::{
    blanking_ratio_correlation, feature_accuracy_table, grouped_accuracy, meta_correlation, Correlation, FeatureRow,
    GroupRow,
};
use super::{paired_permutation_test, score, EvalReport, MissingPolicy, SignificanceResult, SystemOutput};
use crate::error::{Error, Result};
use crate::kb::Dataset;

#[derive(Debug, Clone)]
pub struct EvaluationOptions {
    pub missing: MissingPolicy,
    pub samples: usize,
    pub seed: u64,
    /// Genera reported individually in the grouped table.
    pub genera: Vec<String>,
    /// Stamped on every table so outputs can be traced to their run.
    pub config_hash: String,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        EvaluationOptions {
            missing: MissingPolicy::CountAsWrong,
            samples: 5000,
            seed: 0,
            genera: Vec::new(),
            config_hash: String::new(),
        }
    }
}

/// Everything computed for a set of systems scored against one gold file.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub options: EvaluationOptions,
    pub reports: Vec<EvalReport>,
    pub blanking: Vec<Option<Correlation>>,
    pub groups: Vec<Vec<GroupRow>>,
    pub features: Vec<FeatureRow>,
    /// One result per unordered pair of systems.
    pub significance: Vec<SignificanceResult>,
    /// Across systems; needs two systems with defined blanking correlations.
    pub meta: Option<Correlation>,
}

pub fn evaluate_systems(gold: &Dataset, outputs: &[SystemOutput], options: EvaluationOptions) -> Result<Evaluation> {
    if outputs.is_empty() {
        return Err(Error::Config("no system outputs to evaluate".into()));
    }
    for (i, o) in outputs.iter().enumerate() {
        if outputs[..i].iter().any(|p| p.name == o.name) {
            return Err(Error::Config(format!("duplicate system name {:?}", o.name)));
        }
    }
    let reports = outputs
        .iter()
        .map(|o| score(gold, o, options.missing))
        .collect::<Result<Vec<_>>>()?;
    let blanking: Vec<Option<Correlation>> = reports.iter().map(|r| blanking_ratio_correlation(r).ok()).collect();
    let groups = reports.iter().map(|r| grouped_accuracy(r, &options.genera)).collect();
    let features = feature_accuracy_table(gold, outputs)?;
    let mut significance = Vec::new();
    for i in 0..outputs.len() {
        for j in i + 1..outputs.len() {
            significance.push(paired_permutation_test(
                gold,
                &outputs[i],
                &outputs[j],
                options.missing,
                options.samples,
                options.seed,
            )?);
        }
    }
    let points: Vec<(f64, f64)> = reports
        .iter()
        .zip(&blanking)
        .filter_map(|(r, c)| Some((r.macro_accuracy, c.as_ref()?.r)))
        .collect();
    let meta = meta_correlation(&points).ok();
    Ok(Evaluation {
        options,
        reports,
        blanking,
        groups,
        features,
        significance,
        meta,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Evaluation {
    fn stamp(&self) -> String {
        format!("# seed={} config={}\n", self.options.seed, self.options.config_hash)
    }

    pub fn systems_csv(&self) -> String {
        let mut s = self.stamp();
        s.push_str("system,macro_accuracy,micro_accuracy,missing,blanking_r,blanking_p\n");
        for (r, c) in self.reports.iter().zip(&self.blanking) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                field(&r.system),
                r.macro_accuracy,
                r.micro_accuracy,
                r.missing,
                opt(c.map(|c| c.r)),
                opt(c.map(|c| c.p_value)),
            );
        }
        s
    }

    pub fn languages_csv(&self) -> String {
        let mut s = self.stamp();
        s.push_str("system,code,genus,blanked,correct,missing,accuracy,blanking_ratio\n");
        for r in &self.reports {
            for l in &r.languages {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    field(&r.system),
                    field(&l.code),
                    field(&l.genus),
                    l.blanked,
                    l.correct,
                    l.missing,
                    opt(l.accuracy),
                    l.blanking_ratio
                );
            }
        }
        s
    }

    pub fn genera_csv(&self) -> String {
        let mut s = self.stamp();
        s.push_str("system,genus,languages,accuracy\n");
        for r in &self.reports {
            for g in &r.genera {
                let _ = writeln!(s, "{},{},{},{}", field(&r.system), field(&g.genus), g.languages, g.accuracy);
            }
        }
        s
    }

    pub fn groups_csv(&self) -> String {
        let mut s = self.stamp();
        s.push_str("system,group,languages,accuracy\n");
        for (r, rows) in self.reports.iter().zip(&self.groups) {
            for g in rows {
                let _ = writeln!(s, "{},{},{},{}", field(&r.system), field(&g.group), g.languages, g.accuracy);
            }
        }
        s
    }

    pub fn features_csv(&self) -> String {
        let mut s = self.stamp();
        s.push_str("feature,languages,mean_accuracy,std_dev\n");
        for f in &self.features {
            let _ = writeln!(s, "{},{},{},{}", field(&f.feature), f.languages, f.mean_accuracy, f.std_dev);
        }
        s
    }

    pub fn significance_csv(&self) -> String {
        let mut s = self.stamp();
        s.push_str("system_a,system_b,difference,p_value,samples\n");
        for t in &self.significance {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                field(&t.system_a),
                field(&t.system_b),
                t.observed_difference,
                t.p_value,
                t.samples
            );
        }
        s
    }

    /// Plain-text overview.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed {}  config {}", self.options.seed, self.options.config_hash);
        for (r, c) in self.reports.iter().zip(&self.blanking) {
            let _ = writeln!(
                s,
                "{}: macro {:.4}  micro {:.4}  missing {}  languages {}  genera {}",
                r.system,
                r.macro_accuracy,
                r.micro_accuracy,
                r.missing,
                r.languages.len(),
                r.genera.len()
            );
            if let Some(c) = c {
                let _ = writeln!(s, "  blanking ratio vs accuracy: r {:.4}  p {:.4}", c.r, c.p_value);
            }
            for w in &r.warnings {
                let _ = writeln!(s, "  warning: {w}");
            }
        }
        for t in &self.significance {
            let _ = writeln!(
                s,
                "{} vs {}: difference {:+.4}  p {:.4}",
                t.system_a, t.system_b, t.observed_difference, t.p_value
            );
        }
        if let Some(m) = &self.meta {
            let _ = writeln!(s, "accuracy vs blanking correlation across systems: r {:.4}", m.r);
        }
        s
    }

    /// `(file name, contents)` for every table.
    pub fn tables(&self) -> Vec<(&'static str, String)> {
        vec![
            ("systems.csv", self.systems_csv()),
            ("languages.csv", self.languages_csv()),
            ("genera.csv", self.genera_csv()),
            ("groups.csv", self.groups_csv()),
            ("features.csv", self.features_csv()),
            ("significance.csv", self.significance_csv()),
            ("summary.txt", self.summary()),
        ]
    }
}
