//! Sparse prior features for one `(language, target feature)` cell.
//!
//! Four blocks, each present only when defined:
//!
//! * genetic: `P(target = v | genus)` and `P(target = v | family)`
//! * areal: `P(target = v)` over training languages within `areal_km`
//! * implicational: `P(target = v | A = a)` for each observed `A = a` with
//!   at least `min_support` co-observing languages
//! * indicators: a one-hot per observed `A = a`
//!
//! Statistics never include the query language's own target cell, so the
//! features of a training language are those it would get if it were held
//! out.

use std::collections::{BTreeMap, HashMap};

use super::cooccur::Cooccurrence;
use super::ValueCounts;
use crate::error::{Error, Result};
use crate::geo::NeighborIndex;
use crate::kb::{Dataset, Language};

/// Name of one sparse feature dimension.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PriorKey {
    Genus(String),
    Family(String),
    Areal(String),
    /// `P(target = value | feature = <observed value>)`.
    Implication { feature: String, value: String },
    Indicator { feature: String, value: String },
}

pub type SparseVector = BTreeMap<PriorKey, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriorBlocks {
    pub genetic: bool,
    pub areal: bool,
    pub implicational: bool,
    pub indicators: bool,
}

impl PriorBlocks {
    pub const ALL: PriorBlocks = PriorBlocks {
        genetic: true,
        areal: true,
        implicational: true,
        indicators: true,
    };

    pub const INDICATORS_ONLY: PriorBlocks = PriorBlocks {
        genetic: false,
        areal: false,
        implicational: false,
        indicators: true,
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub areal_km: f64,
    pub min_support: u32,
    pub blocks: PriorBlocks,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            areal_km: 2500.0,
            min_support: 5,
            blocks: PriorBlocks::ALL,
        }
    }
}

/// Counts behind the prior features, built once per statistics dataset.
#[derive(Debug, Clone)]
pub struct PriorStats {
    config: PriorConfig,
    source: Dataset,
    genus: HashMap<(String, String), ValueCounts>,
    family: HashMap<(String, String), ValueCounts>,
    co: Cooccurrence,
    observers: HashMap<String, NeighborIndex>,
}

fn grouped(d: &Dataset, key: impl Fn(&Language) -> &str) -> HashMap<(String, String), ValueCounts> {
    let mut out: HashMap<(String, String), ValueCounts> = HashMap::new();
    for l in d.languages() {
        for (f, v) in d.matrix().observed(&l.code) {
            out.entry((key(l).to_string(), f.to_string())).or_default().add(v);
        }
    }
    out
}

/// Relative frequencies after removing one observation of `minus`.
fn distribution(counts: Option<&ValueCounts>, minus: Option<&str>) -> Option<Vec<(String, f64)>> {
    let counts = counts?;
    let total = counts.total() - usize::from(minus.is_some());
    if total == 0 {
        return None;
    }
    Some(
        counts
            .iter()
            .map(|(v, c)| (v, c - usize::from(minus == Some(v))))
            .filter(|&(_, c)| c > 0)
            .map(|(v, c)| (v.to_string(), c as f64 / total as f64))
            .collect(),
    )
}

impl PriorStats {
    pub fn new(source: &Dataset, config: PriorConfig) -> Result<Self> {
        if config.areal_km.is_nan() || config.areal_km < 0.0 {
            return Err(Error::Config("areal_km must be >= 0".into()));
        }
        let mut members: HashMap<String, Vec<&Language>> = HashMap::new();
        for l in source.languages() {
            for (f, _) in source.matrix().observed(&l.code) {
                members.entry(f.to_string()).or_default().push(l);
            }
        }
        let observers = members
            .into_iter()
            .map(|(f, ls)| {
                let idx = NeighborIndex::new(ls.iter().map(|l| (l.code.clone(), l.point())))
                    .expect("codes unique");
                (f, idx)
            })
            .collect();
        Ok(PriorStats {
            config,
            source: source.clone(),
            genus: grouped(source, |l| &l.genus),
            family: grouped(source, |l| &l.family),
            co: Cooccurrence::new(source),
            observers,
        })
    }

    pub fn config(&self) -> &PriorConfig {
        &self.config
    }

    fn source_value(&self, code: &str, feature: &str) -> Option<&str> {
        self.source.matrix().get(code, feature).and_then(|s| s.observed())
    }

    pub fn features(
        &self,
        lang: &Language,
        observed: &BTreeMap<String, String>,
        target: &str,
    ) -> SparseVector {
        let mut out = SparseVector::new();
        let blocks = self.config.blocks;
        // the language's own target cell, if the statistics contain it
        let own = self.source_value(&lang.code, target);

        if blocks.genetic {
            let key = |g: &str| (g.to_string(), target.to_string());
            if let Some(dist) = distribution(self.genus.get(&key(&lang.genus)), own) {
                out.extend(dist.into_iter().map(|(v, p)| (PriorKey::Genus(v), p)));
            }
            if let Some(dist) = distribution(self.family.get(&key(&lang.family)), own) {
                out.extend(dist.into_iter().map(|(v, p)| (PriorKey::Family(v), p)));
            }
        }

        if blocks.areal {
            if let Some(idx) = self.observers.get(target) {
                let mut near = ValueCounts::default();
                for code in idx.within_radius(lang.point(), self.config.areal_km, Some(&lang.code)) {
                    near.add(self.source_value(&code, target).expect("observer has value"));
                }
                if let Some(dist) = distribution(Some(&near), None) {
                    out.extend(dist.into_iter().map(|(v, p)| (PriorKey::Areal(v), p)));
                }
            }
        }

        if blocks.implicational {
            if let Some(ft) = self.co.feature_id(target) {
                for (a_feat, a_val) in observed {
                    if a_feat == target {
                        continue;
                    }
                    let Some(fa) = self.co.feature_id(a_feat) else { continue };
                    let Some(va) = self.co.value_id(fa, a_val) else { continue };
                    let Some(table) = self.co.table(fa, ft) else { continue };
                    // drop the language's own (a, own) co-observation
                    let own_pair = own
                        .filter(|_| self.source_value(&lang.code, a_feat) == Some(a_val.as_str()))
                        .and_then(|t| self.co.value_id(ft, t));
                    let support = table.support(va) - u32::from(own_pair.is_some());
                    if support < self.config.min_support || support == 0 {
                        continue;
                    }
                    for (vt, value) in self.co.values(ft).iter().enumerate() {
                        let joint = table.joint(va, vt) - u32::from(own_pair == Some(vt));
                        if joint > 0 {
                            out.insert(
                                PriorKey::Implication {
                                    feature: a_feat.clone(),
                                    value: value.clone(),
                                },
                                joint as f64 / support as f64,
                            );
                        }
                    }
                }
            }
        }

        if blocks.indicators {
            for (a_feat, a_val) in observed {
                if a_feat != target {
                    out.insert(
                        PriorKey::Indicator {
                            feature: a_feat.clone(),
                            value: a_val.clone(),
                        },
                        1.0,
                    );
                }
            }
        }
        out
    }
}

/// One-off prior features for a single cell. Prefer [`PriorStats`] when
/// building many vectors over the same training set.
pub fn build_prior_features(
    train: &Dataset,
    lang: &Language,
    observed: &BTreeMap<String, String>,
    target: &str,
    config: &PriorConfig,
) -> Result<SparseVector> {
    Ok(PriorStats::new(train, *config)?.features(lang, observed, target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impute::testutil::{dataset, lang};

    fn fixture() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..6 {
            let t = if i < 4 { "X" } else { "Y" };
            rows.push((lang(&format!("a{i}"), "G1", "F1", 0.0, i as f64), vec![("A", "p"), ("T", t)]));
        }
        rows.push((lang("far", "G2", "F1", -60.0, 100.0), vec![("A", "q"), ("T", "Y")]));
        rows.push((lang("lone", "G3", "F3", 60.0, -100.0), vec![("A", "q")]));
        dataset(rows)
    }

    #[test]
    fn empty_neighbourhood_drops_areal_block() {
        let d = fixture();
        let q = lang("q", "G3", "F1", 70.0, -100.0);
        let obs: BTreeMap<String, String> = [("A".to_string(), "p".to_string())].into();
        let v = build_prior_features(&d, &q, &obs, "T", &PriorConfig::default()).unwrap();
        assert!(!v.keys().any(|k| matches!(k, PriorKey::Areal(_))));
        assert!(!v.keys().any(|k| matches!(k, PriorKey::Genus(_))));
        // F1: X 4, Y 3
        assert!((v[&PriorKey::Family("X".into())] - 4.0 / 7.0).abs() < 1e-12);
        // A=p: 6 co-observers, X 4 / Y 2
        let imp = |val: &str| PriorKey::Implication { feature: "A".into(), value: val.into() };
        assert!((v[&imp("X")] - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(v[&PriorKey::Indicator { feature: "A".into(), value: "p".into() }], 1.0);
    }

    #[test]
    fn own_cell_left_out() {
        let d = fixture();
        let a0 = d.language("a0").unwrap().clone();
        let obs: BTreeMap<String, String> = [("A".to_string(), "p".to_string())].into();
        let v = build_prior_features(&d, &a0, &obs, "T", &PriorConfig::default()).unwrap();
        // genus G1 without a0: X 3, Y 2
        assert!((v[&PriorKey::Genus("X".into())] - 0.6).abs() < 1e-12);
        // areal: a1..a5 within 2500 km
        assert!((v[&PriorKey::Areal("Y".into())] - 0.4).abs() < 1e-12);
        // support drops to 5, still enough
        let imp = PriorKey::Implication { feature: "A".into(), value: "Y".into() };
        assert!((v[&imp] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn blocks_can_be_disabled() {
        let d = fixture();
        let cfg = PriorConfig {
            blocks: PriorBlocks::INDICATORS_ONLY,
            ..PriorConfig::default()
        };
        let obs: BTreeMap<String, String> = [("A".to_string(), "p".to_string())].into();
        let v = build_prior_features(&d, &lang("q", "G1", "F1", 0.0, 0.0), &obs, "T", &cfg).unwrap();
        assert_eq!(v.len(), 1);
    }
}
