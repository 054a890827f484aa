//! Counting imputers: global mode, genus/family back-off and the
//! geographic back-off chain.

use std::collections::HashMap;

use super::{Imputer, ImputerQuery, Prediction, ValueCounts};
use crate::error::{Error, Result};
use crate::geo::NeighborIndex;
use crate::kb::Dataset;

fn per_feature(train: &Dataset) -> HashMap<String, ValueCounts> {
    let mut out: HashMap<String, ValueCounts> = HashMap::new();
    for (_, f, s) in train.matrix().iter() {
        if let Some(v) = s.observed() {
            out.entry(f.to_string()).or_default().add(v);
        }
    }
    out
}

fn per_group(train: &Dataset, group: impl Fn(&crate::kb::Language) -> &str) -> HashMap<(String, String), ValueCounts> {
    let mut out: HashMap<(String, String), ValueCounts> = HashMap::new();
    for l in train.languages() {
        for (f, v) in train.matrix().observed(&l.code) {
            out.entry((group(l).to_string(), f.to_string()))
                .or_default()
                .add(v);
        }
    }
    out
}

/// Most frequent training value of the target feature.
#[derive(Debug, Clone)]
pub struct GlobalFrequency {
    counts: HashMap<String, ValueCounts>,
}

impl GlobalFrequency {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Config("cannot fit on an empty training set".into()));
        }
        Ok(GlobalFrequency {
            counts: per_feature(train),
        })
    }

    pub fn counts(&self, feature: &str) -> Option<&ValueCounts> {
        self.counts.get(feature)
    }
}

impl Imputer for GlobalFrequency {
    fn name(&self) -> &str {
        "frequency"
    }

    fn predict(&self, q: &ImputerQuery<'_>) -> Result<Prediction> {
        self.counts
            .get(q.target)
            .and_then(|c| c.predict("global"))
            .ok_or_else(|| Error::UnknownFeature(q.target.to_string()))
    }
}

/// Genus mode, else family mode, else global mode.
#[derive(Debug, Clone)]
pub struct GenusFamilyBackoff {
    genus: HashMap<(String, String), ValueCounts>,
    family: HashMap<(String, String), ValueCounts>,
    global: GlobalFrequency,
}

impl GenusFamilyBackoff {
    pub fn fit(train: &Dataset) -> Result<Self> {
        Ok(GenusFamilyBackoff {
            genus: per_group(train, |l| &l.genus),
            family: per_group(train, |l| &l.family),
            global: GlobalFrequency::fit(train)?,
        })
    }

    fn genetic(&self, q: &ImputerQuery<'_>) -> Option<Prediction> {
        let key = |g: &str| (g.to_string(), q.target.to_string());
        self.genus
            .get(&key(&q.language.genus))
            .and_then(|c| c.predict("genus"))
            .or_else(|| {
                self.family
                    .get(&key(&q.language.family))
                    .and_then(|c| c.predict("family"))
            })
    }

    pub(crate) fn family_counts(&self, family: &str, feature: &str) -> Option<&ValueCounts> {
        self.family.get(&(family.to_string(), feature.to_string()))
    }
}

impl Imputer for GenusFamilyBackoff {
    fn name(&self) -> &str {
        "genus_family"
    }

    fn predict(&self, q: &ImputerQuery<'_>) -> Result<Prediction> {
        match self.genetic(q) {
            Some(p) => Ok(p),
            None => self.global.predict(q),
        }
    }
}

/// Locations of one feature's observers, and each observer's `(value, family)`.
type Observers = (NeighborIndex, HashMap<String, (String, String)>);

/// Genus, family, nearby languages, nearest family, global.
///
/// "Nearby" is every training language observing the target within
/// `near_km`. Failing that, the training language observing the target that
/// lies closest (and within `far_km`) names a family whose mode is used.
#[derive(Debug, Clone)]
pub struct StatisticalBackoff {
    genetic: GenusFamilyBackoff,
    near_km: f64,
    far_km: f64,
    /// Per feature: locations and values of training languages observing it.
    observers: HashMap<String, Observers>,
}

impl StatisticalBackoff {
    pub fn fit(train: &Dataset, near_km: f64, far_km: f64) -> Result<Self> {
        if !(near_km >= 0.0 && far_km >= 0.0) {
            return Err(Error::Config("back-off radii must be >= 0".into()));
        }
        let mut groups: HashMap<String, Vec<&crate::kb::Language>> = HashMap::new();
        for l in train.languages() {
            for (f, _) in train.matrix().observed(&l.code) {
                groups.entry(f.to_string()).or_default().push(l);
            }
        }
        let observers = groups
            .into_iter()
            .map(|(f, langs)| {
                let idx = NeighborIndex::new(langs.iter().map(|l| (l.code.clone(), l.point())))
                    .expect("codes unique");
                let values = langs
                    .iter()
                    .map(|l| {
                        let v = train.matrix().get(&l.code, &f).and_then(|s| s.observed()).unwrap();
                        (l.code.clone(), (v.to_string(), l.family.clone()))
                    })
                    .collect();
                (f, (idx, values))
            })
            .collect();
        Ok(StatisticalBackoff {
            genetic: GenusFamilyBackoff::fit(train)?,
            near_km,
            far_km,
            observers,
        })
    }

    fn geographic(&self, q: &ImputerQuery<'_>) -> Option<Prediction> {
        let (idx, values) = self.observers.get(q.target)?;
        let here = q.language.point();
        let own = q.language.code.as_str();

        let mut near = ValueCounts::default();
        for code in idx.within_radius(here, self.near_km, Some(own)) {
            near.add(&values[&code].0);
        }
        if let Some(p) = near.predict("areal") {
            return Some(p);
        }

        let (code, dist) = idx.nearest_with_predicate(here, |c| c != own)?;
        if dist > self.far_km {
            return None;
        }
        let family = &values[&code].1;
        self.genetic
            .family_counts(family, q.target)
            .and_then(|c| c.predict("nearest-family"))
    }
}

impl Imputer for StatisticalBackoff {
    fn name(&self) -> &str {
        "statistical"
    }

    fn predict(&self, q: &ImputerQuery<'_>) -> Result<Prediction> {
        if let Some(p) = self.genetic.genetic(q).or_else(|| self.geographic(q)) {
            return Ok(p);
        }
        self.genetic.global.predict(q)
    }
}
