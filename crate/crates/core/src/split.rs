//! Controlled (held-out genus + geographic exclusion) and random splits, and
//! seeded blanking of evaluation cells.
//!
//! All randomness comes from one ChaCha stream per purpose derived from the
//! spec's seed, and languages are always visited in code order, so the same
//! dataset and spec give the same split regardless of record order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geo::haversine_km;
use crate::kb::{CellState, Dataset, FeatureMatrix, Language};
use crate::kv::KeyValues;

/// One genus per macroarea: the default controlled test genera.
pub const DEFAULT_HELD_OUT_GENERA: [&str; 6] = [
    "Mayan",
    "Tucanoan",
    "Madang",
    "Mahakiranti",
    "Northern Pama-Nyungan",
    "Nilotic",
];

const STREAM_SAMPLE: u64 = 0;
const STREAM_BLANK: u64 = 1;
const STREAM_RANDOM_SPLIT: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Round half up, tolerant of products like `0.05 * 10` landing just under `.5`.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub held_out_genera: Vec<String>,
    pub exclusion_radius_km: f64,
    pub random_holdout_fraction: f64,
    pub blanking_low: f64,
    pub blanking_high: f64,
    pub seed: u64,
    /// When set, randomly sampled test languages also exclude their genus
    /// and neighbourhood from training. Off by default.
    pub sample_triggers_exclusion: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            held_out_genera: DEFAULT_HELD_OUT_GENERA.iter().map(|g| g.to_string()).collect(),
            exclusion_radius_km: 1000.0,
            random_holdout_fraction: 0.10,
            blanking_low: 0.05,
            blanking_high: 0.95,
            seed: 0,
            sample_triggers_exclusion: false,
        }
    }
}

const SPEC_KEYS: [&str; 7] = [
    "held_out_genera",
    "exclusion_radius_km",
    "random_holdout_fraction",
    "blanking_low",
    "blanking_high",
    "seed",
    "sample_triggers_exclusion",
];

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.blanking_low, self.blanking_high);
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(Error::Config(format!(
                "blanking range must satisfy 0 < low <= high < 1, got [{lo}, {hi}]"
            )));
        }
        if !(0.0..=1.0).contains(&self.random_holdout_fraction) {
            return Err(Error::Config(format!(
                "random_holdout_fraction {} not in [0, 1]",
                self.random_holdout_fraction
            )));
        }
        if self.exclusion_radius_km.is_nan() || self.exclusion_radius_km < 0.0 {
            return Err(Error::Config("exclusion_radius_km must be >= 0".into()));
        }
        Ok(())
    }

    /// Reads a `key=value` spec; absent keys keep their defaults.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.check_keys(&SPEC_KEYS)?;
        let mut spec = SplitSpec::default();
        if let Some(g) = kv.list("held_out_genera") {
            spec.held_out_genera = g;
        }
        if let Some(v) = kv.parsed("exclusion_radius_km")? {
            spec.exclusion_radius_km = v;
        }
        if let Some(v) = kv.parsed("random_holdout_fraction")? {
            spec.random_holdout_fraction = v;
        }
        if let Some(v) = kv.parsed("blanking_low")? {
            spec.blanking_low = v;
        }
        if let Some(v) = kv.parsed("blanking_high")? {
            spec.blanking_high = v;
        }
        if let Some(v) = kv.parsed("seed")? {
            spec.seed = v;
        }
        if let Some(v) = kv.parsed("sample_triggers_exclusion")? {
            spec.sample_triggers_exclusion = v;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("held_out_genera", self.held_out_genera.join(","));
        kv.set("exclusion_radius_km", self.exclusion_radius_km);
        kv.set("random_holdout_fraction", self.random_holdout_fraction);
        kv.set("blanking_low", self.blanking_low);
        kv.set("blanking_high", self.blanking_high);
        kv.set("seed", self.seed);
        kv.set("sample_triggers_exclusion", self.sample_triggers_exclusion);
        kv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestReason {
    HeldOutGenus,
    RandomSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    SameGenus,
    WithinRadius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Train,
    Test(TestReason),
    Excluded(ExclusionReason),
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assignment::Train => "train",
            Assignment::Test(TestReason::HeldOutGenus) => "held-out-genus",
            Assignment::Test(TestReason::RandomSample) => "random-sample",
            Assignment::Excluded(ExclusionReason::SameGenus) => "same-genus",
            Assignment::Excluded(ExclusionReason::WithinRadius) => "within-radius",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub code: String,
    pub assignment: Assignment,
    /// Target blanking ratio for test languages.
    pub blanking_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    /// Test languages with blanked cells carrying gold values.
    pub test: Dataset,
    pub provenance: Vec<Provenance>,
}

impl SplitResult {
    /// `code,reason,ratio` table, one row per input language.
    pub fn provenance_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["code", "reason", "ratio"])?;
        for p in &self.provenance {
            let ratio = p.blanking_ratio.map(|r| r.to_string()).unwrap_or_default();
            w.write_record([p.code.as_str(), &p.assignment.to_string(), &ratio])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn sorted_codes<'a>(langs: impl Iterator<Item = &'a Language>) -> Vec<String> {
    let mut codes: Vec<String> = langs.map(|l| l.code.clone()).collect();
    codes.sort();
    codes
}

/// Held-out genera plus a random sample form the test set; training drops
/// every language sharing a genus with, or lying within the exclusion
/// radius of, a held-out-genus language.
pub fn build_controlled_split(d: &Dataset, spec: &SplitSpec) -> Result<SplitResult> {
    spec.validate()?;
    let held: BTreeSet<&str> = spec.held_out_genera.iter().map(String::as_str).collect();
    for g in &spec.held_out_genera {
        if d.genus_members(g).next().is_none() {
            return Err(Error::MissingGenus(g.to_string()));
        }
    }

    let mut assignment: BTreeMap<String, Assignment> = BTreeMap::new();
    for l in d.languages() {
        if held.contains(l.genus.as_str()) {
            assignment.insert(l.code.clone(), Assignment::Test(TestReason::HeldOutGenus));
        }
    }

    let remainder = sorted_codes(d.languages().iter().filter(|l| !held.contains(l.genus.as_str())));
    let n_sample = round_half_up(spec.random_holdout_fraction * remainder.len() as f64).min(remainder.len());
    let mut rng = rng_for(spec.seed, STREAM_SAMPLE);
    for i in index::sample(&mut rng, remainder.len(), n_sample) {
        assignment.insert(remainder[i].clone(), Assignment::Test(TestReason::RandomSample));
    }

    let triggers: Vec<&Language> = d
        .languages()
        .iter()
        .filter(|l| match assignment.get(&l.code) {
            Some(Assignment::Test(TestReason::HeldOutGenus)) => true,
            Some(Assignment::Test(TestReason::RandomSample)) => spec.sample_triggers_exclusion,
            _ => false,
        })
        .collect();
    let trigger_genera: BTreeSet<&str> = triggers.iter().map(|l| l.genus.as_str()).collect();

    for l in d.languages() {
        if assignment.contains_key(&l.code) {
            continue;
        }
        let a = if trigger_genera.contains(l.genus.as_str()) {
            Assignment::Excluded(ExclusionReason::SameGenus)
        } else if triggers
            .iter()
            .any(|h| haversine_km(l.point(), h.point()) <= spec.exclusion_radius_km)
        {
            Assignment::Excluded(ExclusionReason::WithinRadius)
        } else {
            Assignment::Train
        };
        assignment.insert(l.code.clone(), a);
    }

    let select = |want: fn(&Assignment) -> bool| -> BTreeSet<String> {
        assignment
            .iter()
            .filter(|(_, a)| want(a))
            .map(|(c, _)| c.clone())
            .collect()
    };
    let train = d.subset(&select(|a| *a == Assignment::Train));
    let test_full = d.subset(&select(|a| matches!(a, Assignment::Test(_))));
    let (test, ratios) = blank_with_ratios(&test_full, spec)?;

    let provenance = d
        .languages()
        .iter()
        .map(|l| Provenance {
            code: l.code.clone(),
            assignment: assignment[&l.code],
            blanking_ratio: ratios.get(&l.code).copied(),
        })
        .collect();
    Ok(SplitResult {
        train,
        test,
        provenance,
    })
}

/// Partition sizes by the largest-remainder method; ties favour earlier parts.
pub fn largest_remainder(n: usize, fractions: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = fractions
        .iter()
        .map(|f| (f * n as f64 * 1e9).round() / 1e9)
        .collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Seeded train/dev/test partition of languages.
pub fn random_split(d: &Dataset, fractions: [f64; 3], seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {fractions:?} must be in [0,1] and sum to 1")));
    }
    let mut codes = sorted_codes(d.languages().iter());
    codes.shuffle(&mut rng_for(seed, STREAM_RANDOM_SPLIT));
    let sizes = largest_remainder(codes.len(), &fractions);
    let mut parts = codes.chunks(1).map(|c| c[0].clone());
    let mut take = |k: usize| -> BTreeSet<String> { parts.by_ref().take(k).collect() };
    let (a, b, c) = (take(sizes[0]), take(sizes[1]), take(sizes[2]));
    Ok((d.subset(&a), d.subset(&b), d.subset(&c)))
}

/// `n` evenly spaced ratios over `[low, high]`; a single language gets the midpoint.
pub fn blanking_ratios(n: usize, low: f64, high: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![(low + high) / 2.0],
        _ => (0..n)
            .map(|i| low + (high - low) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Number of cells to blank out of `observed` at `ratio`: rounded half up,
/// then clamped so at least one cell stays observed and one is blanked.
pub fn blank_count(ratio: f64, observed: usize) -> usize {
    round_half_up(ratio * observed as f64).clamp(1, observed.saturating_sub(1).max(1))
}

/// Blanks a share of each test language's observed cells.
pub fn blank_features(test: &Dataset, spec: &SplitSpec) -> Result<Dataset> {
    blank_with_ratios(test, spec).map(|(d, _)| d)
}

/// Like [`blank_features`], also returning the ratio assigned to each language.
pub fn blank_with_ratios(test: &Dataset, spec: &SplitSpec) -> Result<(Dataset, BTreeMap<String, f64>)> {
    spec.validate()?;
    let codes = sorted_codes(test.languages().iter());
    for c in &codes {
        let observed = test.observed_count(c);
        if observed < 2 {
            return Err(Error::TooFewFeatures {
                code: c.clone(),
                observed,
            });
        }
    }
    let mut rng = rng_for(spec.seed, STREAM_BLANK);
    let mut ratios = blanking_ratios(codes.len(), spec.blanking_low, spec.blanking_high);
    ratios.shuffle(&mut rng);

    let mut matrix = FeatureMatrix::new();
    let mut assigned = BTreeMap::new();
    for (code, &ratio) in codes.iter().zip(&ratios) {
        let row = test.matrix().row(code).expect("language has observed cells");
        let observed: Vec<&str> = row
            .iter()
            .filter(|(_, s)| s.observed().is_some())
            .map(|(f, _)| f.as_str())
            .collect();
        let k = blank_count(ratio, observed.len());
        let chosen: BTreeSet<&str> = index::sample(&mut rng, observed.len(), k)
            .into_iter()
            .map(|i| observed[i])
            .collect();
        for (f, s) in row {
            let s = match s {
                CellState::Observed(v) if chosen.contains(f.as_str()) => CellState::Blanked(v.clone()),
                other => other.clone(),
            };
            matrix.insert(code, f, s)?;
        }
        assigned.insert(code.clone(), ratio);
    }
    Ok((test.with_matrix(matrix)?, assigned))
}
