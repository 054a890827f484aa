//! Pairwise feature-correlation voting.
//!
//! Each observed feature `A = a` votes for target values `b` with the
//! smoothed conditional `P(B = b | A = a)`, weighted by how strongly `A` and
//! `B` are associated (normalized mutual information). Only predictors with
//! at least `min_support` co-observing languages for `a` vote.

use super::cooccur::Cooccurrence;
use super::{argmax, Imputer, ImputerQuery, Prediction};
use crate::error::{Error, Result};
use crate::kb::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationParams {
    /// Additive smoothing of the conditionals.
    pub alpha: f64,
    pub min_support: u32,
}

impl Default for CorrelationParams {
    fn default() -> Self {
        CorrelationParams {
            alpha: 1.0,
            min_support: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Correlation {
    params: CorrelationParams,
    co: Cooccurrence,
    /// NMI per ordered pair, cached.
    weights: Vec<Vec<f64>>,
}

impl Correlation {
    pub fn fit(train: &Dataset, params: CorrelationParams) -> Result<Self> {
        if params.alpha.is_nan() || params.alpha < 0.0 {
            return Err(Error::Config("alpha must be >= 0".into()));
        }
        let co = Cooccurrence::new(train);
        let nf = train.catalog().len();
        let weights = (0..nf)
            .map(|a| {
                (0..nf)
                    .map(|b| co.table(a, b).map_or(0.0, |t| t.normalized_mutual_information()))
                    .collect()
            })
            .collect();
        Ok(Correlation { params, co, weights })
    }

    /// Smoothed `P(B = b | A = a)` over co-observing training languages.
    pub fn conditional(&self, a_feat: &str, a_val: &str, b_feat: &str, b_val: &str) -> Option<f64> {
        let (fa, fb) = (self.co.feature_id(a_feat)?, self.co.feature_id(b_feat)?);
        let (va, vb) = (self.co.value_id(fa, a_val)?, self.co.value_id(fb, b_val)?);
        let t = self.co.table(fa, fb)?;
        let k = self.co.values(fb).len() as f64;
        let alpha = self.params.alpha;
        Some((t.joint(va, vb) as f64 + alpha) / (t.support(va) as f64 + alpha * k))
    }

    pub fn weight(&self, a_feat: &str, b_feat: &str) -> Option<f64> {
        Some(self.weights[self.co.feature_id(a_feat)?][self.co.feature_id(b_feat)?])
    }
}

impl Imputer for Correlation {
    fn name(&self) -> &str {
        "correlation"
    }

    fn predict(&self, q: &ImputerQuery<'_>) -> Result<Prediction> {
        let fb = self
            .co
            .feature_id(q.target)
            .filter(|&f| !self.co.values(f).is_empty())
            .ok_or_else(|| Error::UnknownFeature(q.target.to_string()))?;
        let inventory = self.co.values(fb);
        let k = inventory.len() as f64;
        let alpha = self.params.alpha;
        let mut scores = vec![0.0; inventory.len()];
        let mut voters = 0;
        for (a_feat, a_val) in q.observed {
            let Some(fa) = self.co.feature_id(a_feat) else { continue };
            let Some(va) = self.co.value_id(fa, a_val) else { continue };
            let Some(t) = self.co.table(fa, fb) else { continue };
            let support = t.support(va);
            if support < self.params.min_support {
                continue;
            }
            voters += 1;
            let w = self.weights[fa][fb];
            for (vb, s) in scores.iter_mut().enumerate() {
                *s += w * (t.joint(va, vb) as f64 + alpha) / (support as f64 + alpha * k);
            }
        }
        if voters == 0 {
            return Err(q.no_evidence("no observed feature with enough support"));
        }
        let total: f64 = scores.iter().sum();
        if total <= 0.0 {
            return Err(q.no_evidence("all supported predictors are uninformative"));
        }
        let (value, top) = argmax(inventory.iter().map(String::as_str).zip(scores.iter().copied()))
            .expect("inventory non-empty");
        Ok(Prediction {
            value: value.to_string(),
            confidence: top / total,
            source: "correlation".into(),
        })
    }
}
