//! Language records, the sparse feature matrix and the feature catalog.
//!
//! A [`Dataset`] is immutable once built: every constructor validates the
//! invariants (unique codes, coordinates in range, every cell pointing at a
//! known language) and derives the [`FeatureCatalog`] from the cells.

mod filter;
mod format;

use std::collections::{BTreeMap, BTreeSet, HashMap};

pub use filter::{filter_dataset, FilterThresholds};
pub use format::{parse_dataset, parse_dataset_with_gold, serialize_dataset, serialize_gold, HEADER};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// One language and its metadata columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Language {
    pub code: String,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
    pub genus: String,
    pub family: String,
    pub country_codes: Vec<String>,
}

impl Language {
    pub fn point(&self) -> GeoPoint {
        GeoPoint::new_unchecked(self.latitude, self.longitude)
    }
}

/// State of a single (language, feature) cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CellState {
    Observed(String),
    /// Hidden from systems; carries the gold value for scoring.
    Blanked(String),
    /// Requested (`?`) with no gold value known.
    Unknown,
}

impl CellState {
    pub fn observed(&self) -> Option<&str> {
        match self {
            CellState::Observed(v) => Some(v),
            _ => None,
        }
    }

    pub fn gold(&self) -> Option<&str> {
        match self {
            CellState::Blanked(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_open(&self) -> bool {
        !matches!(self, CellState::Observed(_))
    }
}

/// Sparse map `(language, feature) -> CellState`, stored row-wise.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureMatrix {
    rows: BTreeMap<String, BTreeMap<String, CellState>>,
}

impl FeatureMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a cell. A cell may only be set once.
    pub fn insert(&mut self, language: &str, feature: &str, state: CellState) -> Result<()> {
        let row = self.rows.entry(language.to_string()).or_default();
        if row.contains_key(feature) {
            return Err(Error::Config(format!(
                "cell ({language}, {feature}) set twice"
            )));
        }
        row.insert(feature.to_string(), state);
        Ok(())
    }

    pub fn get(&self, language: &str, feature: &str) -> Option<&CellState> {
        self.rows.get(language).and_then(|r| r.get(feature))
    }

    pub fn row(&self, language: &str) -> Option<&BTreeMap<String, CellState>> {
        self.rows.get(language)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &CellState)> {
        self.rows.iter().flat_map(|(lang, row)| {
            row.iter()
                .map(move |(feat, state)| (lang.as_str(), feat.as_str(), state))
        })
    }

    /// Observed `(feature, value)` pairs of one language, in feature order.
    pub fn observed(&self, language: &str) -> impl Iterator<Item = (&str, &str)> {
        self.rows
            .get(language)
            .into_iter()
            .flat_map(|row| row.iter())
            .filter_map(|(f, s)| s.observed().map(|v| (f.as_str(), v)))
    }

    pub fn len(&self) -> usize {
        self.rows.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn retain_rows(&mut self, keep: impl Fn(&str) -> bool) {
        self.rows.retain(|lang, _| keep(lang));
    }

    fn retain_features(&mut self, keep: impl Fn(&str) -> bool) {
        for row in self.rows.values_mut() {
            row.retain(|f, _| keep(f));
        }
    }
}

/// Per-feature value inventory with counts of observed cells.
///
/// Gold values of blanked cells enter the inventory with no count, so the
/// inventory covers every value present in the backing dataset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureCatalog {
    entries: BTreeMap<String, BTreeMap<String, usize>>,
}

impl FeatureCatalog {
    pub fn from_matrix(matrix: &FeatureMatrix) -> Self {
        let mut entries: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        for (_, feature, state) in matrix.iter() {
            let inv = entries.entry(feature.to_string()).or_default();
            match state {
                CellState::Observed(v) => *inv.entry(v.clone()).or_insert(0) += 1,
                CellState::Blanked(v) => {
                    inv.entry(v.clone()).or_insert(0);
                }
                CellState::Unknown => {}
            }
        }
        FeatureCatalog { entries }
    }

    pub fn contains(&self, feature: &str) -> bool {
        self.entries.contains_key(feature)
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Values of a feature in lexicographic order.
    pub fn inventory(&self, feature: &str) -> Option<Vec<&str>> {
        self.entries
            .get(feature)
            .map(|inv| inv.keys().map(String::as_str).collect())
    }

    pub fn counts(&self, feature: &str) -> Option<&BTreeMap<String, usize>> {
        self.entries.get(feature)
    }

    pub fn count(&self, feature: &str, value: &str) -> usize {
        self.entries
            .get(feature)
            .and_then(|inv| inv.get(value))
            .copied()
            .unwrap_or(0)
    }

    pub fn inventory_size(&self, feature: &str) -> usize {
        self.entries.get(feature).map_or(0, BTreeMap::len)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Languages plus their feature cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    languages: Vec<Language>,
    index: HashMap<String, usize>,
    matrix: FeatureMatrix,
    catalog: FeatureCatalog,
}

impl Dataset {
    pub fn new(languages: Vec<Language>, matrix: FeatureMatrix) -> Result<Self> {
        let mut index = HashMap::with_capacity(languages.len());
        for (i, lang) in languages.iter().enumerate() {
            if lang.code.is_empty() {
                return Err(Error::Config("empty language code".into()));
            }
            GeoPoint::new(lang.latitude, lang.longitude)?;
            if index.insert(lang.code.clone(), i).is_some() {
                return Err(Error::DuplicateLanguage(lang.code.clone()));
            }
        }
        for (code, _, _) in matrix.iter() {
            if !index.contains_key(code) {
                return Err(Error::UnknownLanguage(code.to_string()));
            }
        }
        let catalog = FeatureCatalog::from_matrix(&matrix);
        Ok(Dataset {
            languages,
            index,
            matrix,
            catalog,
        })
    }

    pub fn empty() -> Self {
        Dataset::new(Vec::new(), FeatureMatrix::new()).expect("empty dataset is valid")
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    pub fn language(&self, code: &str) -> Option<&Language> {
        self.index.get(code).map(|&i| &self.languages[i])
    }

    pub fn contains(&self, code: &str) -> bool {
        self.index.contains_key(code)
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub fn catalog(&self) -> &FeatureCatalog {
        &self.catalog
    }

    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    pub fn observed(&self, code: &str) -> BTreeMap<String, String> {
        self.matrix
            .observed(code)
            .map(|(f, v)| (f.to_string(), v.to_string()))
            .collect()
    }

    pub fn observed_count(&self, code: &str) -> usize {
        self.matrix.observed(code).count()
    }

    /// `(language, feature, gold)` for every blanked cell.
    pub fn blanked(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.matrix
            .iter()
            .filter_map(|(l, f, s)| s.gold().map(|g| (l, f, g)))
    }

    pub fn has_blanked(&self) -> bool {
        self.blanked().next().is_some()
    }

    /// Restricts to the given languages, keeping this dataset's order.
    pub fn subset(&self, codes: &BTreeSet<String>) -> Dataset {
        let languages: Vec<Language> = self
            .languages
            .iter()
            .filter(|l| codes.contains(&l.code))
            .cloned()
            .collect();
        let mut matrix = self.matrix.clone();
        matrix.retain_rows(|c| codes.contains(c));
        Dataset::new(languages, matrix).expect("subset of a valid dataset is valid")
    }

    /// Drops the given features from every row.
    pub fn without_features(&self, features: &BTreeSet<String>) -> Dataset {
        let mut matrix = self.matrix.clone();
        matrix.retain_features(|f| !features.contains(f));
        Dataset::new(self.languages.clone(), matrix).expect("valid")
    }

    /// Replaces the matrix, keeping the languages.
    pub fn with_matrix(&self, matrix: FeatureMatrix) -> Result<Dataset> {
        Dataset::new(self.languages.clone(), matrix)
    }

    /// Reveals blanked cells as observed: the gold view of an evaluation set.
    pub fn revealed(&self) -> Dataset {
        let mut matrix = FeatureMatrix::new();
        for (l, f, s) in self.matrix.iter() {
            let s = match s {
                CellState::Blanked(g) => CellState::Observed(g.clone()),
                other => other.clone(),
            };
            matrix.insert(l, f, s).expect("cells unique");
        }
        self.with_matrix(matrix).expect("valid")
    }

    /// This dataset plus the languages of `other` with only their observed
    /// cells. Language codes must not overlap.
    pub fn union_observed(&self, other: &Dataset) -> Result<Dataset> {
        let mut languages = self.languages.clone();
        let mut matrix = self.matrix.clone();
        for l in &other.languages {
            if self.contains(&l.code) {
                return Err(Error::DuplicateLanguage(l.code.clone()));
            }
            languages.push(l.clone());
            for (f, v) in other.matrix.observed(&l.code) {
                matrix.insert(&l.code, f, CellState::Observed(v.to_string()))?;
            }
        }
        Dataset::new(languages, matrix)
    }

    /// Languages whose genus is `genus`.
    pub fn genus_members<'a>(&'a self, genus: &'a str) -> impl Iterator<Item = &'a Language> {
        self.languages.iter().filter(move |l| l.genus == genus)
    }
}
