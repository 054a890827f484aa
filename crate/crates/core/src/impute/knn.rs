//! Nearest-neighbour imputation over language vectors, with an
//! observed-feature agreement metric when no vectors are available.

use std::collections::{BTreeMap, HashMap};

use super::{argmax, Imputer, ImputerQuery, Prediction};
use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::kb::{Dataset, Language};

/// Dense per-language vectors, one line per language: `code<TAB>v1<TAB>...`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LanguageVectors {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl LanguageVectors {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = LanguageVectors::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let code = fields.next().unwrap_or_default().trim().to_string();
            let v: Vec<f64> = fields
                .map(|x| x.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::record(i + 1, "non-numeric vector component"))?;
            if code.is_empty() || v.is_empty() {
                return Err(Error::record(i + 1, "expected code followed by components"));
            }
            out.insert(code, v).map_err(|e| match e {
                Error::Config(msg) => Error::record(i + 1, msg),
                e => e,
            })?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, code: String, v: Vec<f64>) -> Result<()> {
        if self.vectors.is_empty() {
            self.dim = v.len();
        } else if v.len() != self.dim {
            return Err(Error::Config(format!(
                "vector for `{code}` has {} components, expected {}",
                v.len(),
                self.dim
            )));
        }
        if self.vectors.insert(code.clone(), v).is_some() {
            return Err(Error::DuplicateLanguage(code));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, code: &str) -> Option<&[f64]> {
        self.vectors.get(code).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// `1 - cos(a, b)`; a zero vector is treated as orthogonal to everything.
pub(crate) fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let d = (1.0 - dot / (na * nb)).clamp(0.0, 2.0);
    // parallel vectors land a few ulps off zero
    if d < 1e-12 {
        0.0
    } else {
        d
    }
}

#[derive(Debug, Clone)]
struct Row {
    language: Language,
    observed: BTreeMap<String, String>,
}

/// k-nearest-neighbour imputer.
///
/// Candidates are training languages observing the target. With vectors for
/// the query, neighbours are ranked by cosine distance. Otherwise the
/// distance is `1 - matching / shared` over features observed by both,
/// languages sharing nothing rank last, and geographic distance breaks ties.
/// The prediction is the majority value among the `k` nearest (ties go to
/// the lexicographically smaller value); confidence is the winner's vote
/// share times the similarity of its closest voter.
#[derive(Debug, Clone)]
pub struct Knn {
    k: usize,
    rows: Vec<Row>,
    vectors: Option<LanguageVectors>,
    by_feature: HashMap<String, Vec<usize>>,
}

impl Knn {
    pub fn fit(train: &Dataset, vectors: Option<LanguageVectors>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        let rows: Vec<Row> = train
            .languages()
            .iter()
            .map(|l| Row {
                language: l.clone(),
                observed: train.observed(&l.code),
            })
            .collect();
        let mut by_feature: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, r) in rows.iter().enumerate() {
            for f in r.observed.keys() {
                by_feature.entry(f.clone()).or_default().push(i);
            }
        }
        Ok(Knn {
            k,
            rows,
            vectors,
            by_feature,
        })
    }

    /// Candidates with a sort key and a similarity in `[0, 1]`.
    fn ranked(&self, q: &ImputerQuery<'_>, candidates: &[usize]) -> Vec<(usize, f64)> {
        let own = q.language.code.as_str();
        let candidates = candidates.iter().copied().filter(|&i| self.rows[i].language.code != own);

        if let Some((vecs, qv)) = self.vectors.as_ref().and_then(|v| v.get(own).map(|qv| (v, qv))) {
            let mut with_vec: Vec<(usize, f64)> = candidates
                .clone()
                .filter_map(|i| vecs.get(&self.rows[i].language.code).map(|v| (i, cosine_distance(qv, v))))
                .collect();
            if !with_vec.is_empty() {
                with_vec.sort_by(|a, b| {
                    a.1.total_cmp(&b.1)
                        .then_with(|| self.rows[a.0].language.code.cmp(&self.rows[b.0].language.code))
                });
                return with_vec.into_iter().map(|(i, d)| (i, 1.0 - d / 2.0)).collect();
            }
        }

        let here = q.language.point();
        let mut keyed: Vec<(usize, bool, f64, f64)> = candidates
            .map(|i| {
                let r = &self.rows[i];
                let (mut shared, mut matching) = (0usize, 0usize);
                for (f, v) in q.observed {
                    if let Some(w) = r.observed.get(f) {
                        shared += 1;
                        matching += usize::from(v == w);
                    }
                }
                let d = if shared == 0 { 1.0 } else { 1.0 - matching as f64 / shared as f64 };
                (i, shared == 0, d, haversine_km(here, r.language.point()))
            })
            .collect();
        keyed.sort_by(|a, b| {
            a.1.cmp(&b.1)
                .then(a.2.total_cmp(&b.2))
                .then(a.3.total_cmp(&b.3))
                .then_with(|| self.rows[a.0].language.code.cmp(&self.rows[b.0].language.code))
        });
        keyed
            .into_iter()
            .map(|(i, none, d, _)| (i, if none { 0.0 } else { 1.0 - d }))
            .collect()
    }
}

impl Imputer for Knn {
    fn name(&self) -> &str {
        "knn"
    }

    fn predict(&self, q: &ImputerQuery<'_>) -> Result<Prediction> {
        let candidates = self
            .by_feature
            .get(q.target)
            .ok_or_else(|| Error::UnknownFeature(q.target.to_string()))?;
        let ranked = self.ranked(q, candidates);
        if ranked.is_empty() {
            return Err(q.no_evidence("no other training language observes the target"));
        }
        let nearest = &ranked[..self.k.min(ranked.len())];
        let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for &(i, sim) in nearest {
            let v = self.rows[i].observed[q.target].as_str();
            let e = votes.entry(v).or_insert((0, sim));
            e.0 += 1;
        }
        let (value, count) =
            argmax(votes.iter().map(|(v, (c, _))| (*v, *c as f64))).expect("at least one vote");
        let similarity = votes[value].1;
        Ok(Prediction {
            value: value.to_string(),
            confidence: count / nearest.len() as f64 * similarity,
            source: if self.vectors.is_some() { "knn-vector".into() } else { "knn-agreement".into() },
        })
    }
}
