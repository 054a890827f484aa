//! Ridge regression and the one-vs-rest prior-feature imputer built on it.
//!
//! The solver minimizes `||X w + b 1 - y||^2 + lambda ||w||^2` with the
//! bias unpenalized by centering `X` and `y`. It factors whichever Gram
//! matrix is smaller (`d x d` primal or `n x n` dual), so one factorization
//! serves every right-hand side of a one-vs-rest fit.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;

use super::prior::{PriorConfig, PriorKey, PriorStats, SparseVector};
use super::{argmax, Imputer, ImputerQuery, Prediction};
use crate::error::{Error, Result};
use crate::kb::Dataset;

const REFINE_TOLERANCE: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeSolution {
    pub weights: DVector<f64>,
    pub bias: f64,
    /// `||(Xc'Xc + lambda I) w - Xc'yc|| / ||Xc'yc||` for centered data.
    pub relative_residual: f64,
}

/// Factored ridge system for a fixed design matrix.
pub struct RidgeSolver {
    xc: DMatrix<f64>,
    means: DVector<f64>,
    lambda: f64,
    intercept: bool,
    dual: bool,
    chol: Cholesky<f64, Dyn>,
    gram: DMatrix<f64>,
}

impl RidgeSolver {
    pub fn new(x: &DMatrix<f64>, lambda: f64, intercept: bool) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || d == 0 {
            return Err(Error::Numeric(format!("design matrix is {n}x{d}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Numeric(format!("lambda must be positive and finite, got {lambda}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite entry in design matrix".into()));
        }
        let means = if intercept {
            DVector::from_iterator(d, x.column_iter().map(|c| c.mean()))
        } else {
            DVector::zeros(d)
        };
        let mut xc = x.clone();
        if intercept {
            for (j, mut col) in xc.column_iter_mut().enumerate() {
                col.add_scalar_mut(-means[j]);
            }
        }
        let dual = n < d;
        let mut gram = if dual { &xc * xc.transpose() } else { xc.transpose() * &xc };
        for i in 0..gram.nrows() {
            gram[(i, i)] += lambda;
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("ridge system is not positive definite".into()))?;
        Ok(RidgeSolver {
            xc,
            means,
            lambda,
            intercept,
            dual,
            chol,
            gram,
        })
    }

    fn primal_residual(&self, w: &DVector<f64>, rhs: &DVector<f64>) -> DVector<f64> {
        self.xc.transpose() * (&self.xc * w) + w * self.lambda - rhs
    }

    pub fn solve(&self, y: &DVector<f64>) -> Result<RidgeSolution> {
        if y.len() != self.xc.nrows() {
            return Err(Error::Numeric(format!(
                "target has {} entries, design matrix {} rows",
                y.len(),
                self.xc.nrows()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite target".into()));
        }
        let y_mean = if self.intercept { y.mean() } else { 0.0 };
        let yc = y.add_scalar(-y_mean);
        let rhs = self.xc.transpose() * &yc;
        let scale = rhs.norm().max(f64::MIN_POSITIVE);

        let mut w = if self.dual {
            let mut alpha = self.chol.solve(&yc);
            for _ in 0..MAX_REFINEMENTS {
                let r = &self.gram * &alpha - &yc;
                if r.norm() <= REFINE_TOLERANCE * yc.norm().max(f64::MIN_POSITIVE) {
                    break;
                }
                alpha -= self.chol.solve(&r);
            }
            self.xc.transpose() * alpha
        } else {
            self.chol.solve(&rhs)
        };
        let mut residual = self.primal_residual(&w, &rhs);
        for _ in 0..MAX_REFINEMENTS {
            if residual.norm() <= REFINE_TOLERANCE * scale {
                break;
            }
            // refine in the primal metric; cheap relative to the factorization
            let correction = if self.dual {
                let r_dual = &self.xc * &residual;
                (residual.clone() - self.xc.transpose() * self.chol.solve(&r_dual)) / self.lambda
            } else {
                self.chol.solve(&residual)
            };
            w -= correction;
            residual = self.primal_residual(&w, &rhs);
        }
        let relative_residual = if rhs.norm() == 0.0 {
            residual.norm()
        } else {
            residual.norm() / rhs.norm()
        };
        let bias = if self.intercept { y_mean - self.means.dot(&w) } else { 0.0 };
        Ok(RidgeSolution {
            weights: w,
            bias,
            relative_residual,
        })
    }
}

/// Solves one ridge problem; see [`RidgeSolver`] for several targets.
pub fn solve_ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, intercept: bool) -> Result<RidgeSolution> {
    RidgeSolver::new(x, lambda, intercept)?.solve(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeParams {
    pub lambda: f64,
    pub prior: PriorConfig,
}

impl Default for RidgeParams {
    fn default() -> Self {
        RidgeParams {
            lambda: 1.0,
            prior: PriorConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
enum FeatureModel {
    Constant(String),
    Linear {
        space: HashMap<PriorKey, usize>,
        /// `(value, weights, bias)` in value order.
        per_value: Vec<(String, Vec<f64>, f64)>,
    },
}

/// One-vs-rest ridge classifiers over prior features, one set per feature.
#[derive(Debug, Clone)]
pub struct RidgePrior {
    name: String,
    stats: PriorStats,
    models: BTreeMap<String, FeatureModel>,
}

fn fit_feature(train: &Dataset, stats: &PriorStats, target: &str, lambda: f64) -> Result<FeatureModel> {
    let values: Vec<&str> = train
        .catalog()
        .counts(target)
        .map(|c| c.iter().filter(|(_, &n)| n > 0).map(|(v, _)| v.as_str()).collect())
        .unwrap_or_default();
    if values.len() == 1 {
        return Ok(FeatureModel::Constant(values[0].to_string()));
    }
    let mut rows: Vec<(SparseVector, &str)> = Vec::new();
    for l in train.languages() {
        if let Some(v) = train.matrix().get(&l.code, target).and_then(|s| s.observed()) {
            let mut obs = train.observed(&l.code);
            obs.remove(target);
            rows.push((stats.features(l, &obs, target), v));
        }
    }
    let mut keys: Vec<PriorKey> = rows.iter().flat_map(|(x, _)| x.keys().cloned()).collect();
    keys.sort();
    keys.dedup();
    let space: HashMap<PriorKey, usize> = keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect();

    let n = rows.len();
    let targets = |value: &str| DVector::from_iterator(n, rows.iter().map(|(_, v)| if *v == value { 1.0 } else { -1.0 }));
    let per_value = if space.is_empty() {
        // no features at all: the bias alone, i.e. the mean of the +-1 target
        values
            .iter()
            .map(|v| (v.to_string(), Vec::new(), targets(v).mean()))
            .collect()
    } else {
        let mut x = DMatrix::zeros(n, space.len());
        for (i, (feats, _)) in rows.iter().enumerate() {
            for (k, val) in feats {
                x[(i, space[k])] = *val;
            }
        }
        let solver = RidgeSolver::new(&x, lambda, true)?;
        values
            .iter()
            .map(|v| {
                let sol = solver.solve(&targets(v))?;
                Ok((v.to_string(), sol.weights.iter().copied().collect(), sol.bias))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(FeatureModel::Linear { space, per_value })
}

impl RidgePrior {
    /// Fits one model per training feature. Prior statistics come from
    /// `train`, plus the observed cells of `extra` when given (the test
    /// languages' known features).
    pub fn fit(train: &Dataset, params: RidgeParams, extra: Option<&Dataset>) -> Result<Self> {
        Self::fit_named("ridge_prior", train, params, extra)
    }

    pub(crate) fn fit_named(name: &str, train: &Dataset, params: RidgeParams, extra: Option<&Dataset>) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Config("cannot fit on an empty training set".into()));
        }
        let source = match extra {
            Some(e) => train.union_observed(e)?,
            None => train.clone(),
        };
        let stats = PriorStats::new(&source, params.prior)?;
        let features: Vec<&str> = train
            .catalog()
            .features()
            .filter(|f| train.catalog().counts(f).is_some_and(|c| c.values().any(|&n| n > 0)))
            .collect();
        let fitted: Vec<(String, FeatureModel)> = features
            .par_iter()
            .map(|&f| fit_feature(train, &stats, f, params.lambda).map(|m| (f.to_string(), m)))
            .collect::<Result<_>>()?;
        Ok(RidgePrior {
            name: name.to_string(),
            stats,
            models: fitted.into_iter().collect(),
        })
    }

    /// Raw one-vs-rest scores for a query, in value order.
    pub fn scores(&self, q: &ImputerQuery<'_>) -> Result<Vec<(String, f64)>> {
        let model = self
            .models
            .get(q.target)
            .ok_or_else(|| Error::UnknownFeature(q.target.to_string()))?;
        Ok(match model {
            FeatureModel::Constant(v) => vec![(v.clone(), 1.0)],
            FeatureModel::Linear { space, per_value } => {
                let x = self.stats.features(q.language, q.observed, q.target);
                per_value
                    .iter()
                    .map(|(v, w, b)| {
                        let s = x
                            .iter()
                            .filter_map(|(k, val)| space.get(k).map(|&j| w[j] * val))
                            .sum::<f64>();
                        (v.clone(), b + s)
                    })
                    .collect()
            }
        })
    }
}

impl Imputer for RidgePrior {
    fn name(&self) -> &str {
        &self.name
    }

    fn predict(&self, q: &ImputerQuery<'_>) -> Result<Prediction> {
        let scores = self.scores(q)?;
        let (value, top) = argmax(scores.iter().map(|(v, s)| (v.as_str(), *s))).expect("non-empty");
        let z: f64 = scores.iter().map(|(_, s)| (s - top).exp()).sum();
        Ok(Prediction {
            value: value.to_string(),
            confidence: 1.0 / z,
            source: self.name.clone(),
        })
    }
}
