use std::fmt;
use std::str::FromStr;

use super::{
    Correlation, CorrelationParams, Ensemble, EnsemblePolicy, GenusFamilyBackoff, GlobalFrequency, Imputer, Knn,
    LanguageVectors, PriorBlocks, PriorConfig, RidgeParams, RidgePrior, StatisticalBackoff,
};
use crate::error::{Error, Result};
use crate::kb::Dataset;
use crate::kv::KeyValues;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Frequency,
    GenusFamily,
    Statistical,
    Knn,
    Correlation,
    RidgePrior,
    /// Ridge over observed-feature indicators only.
    Hybrid,
    Ensemble,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "frequency" => Method::Frequency,
            "genus_family" => Method::GenusFamily,
            "statistical" => Method::Statistical,
            "knn" => Method::Knn,
            "correlation" => Method::Correlation,
            "ridge_prior" => Method::RidgePrior,
            "hybrid" => Method::Hybrid,
            "ensemble" => Method::Ensemble,
            _ => return Err(Error::Config(format!("unknown imputation method `{s}`"))),
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Frequency => "frequency",
            Method::GenusFamily => "genus_family",
            Method::Statistical => "statistical",
            Method::Knn => "knn",
            Method::Correlation => "correlation",
            Method::RidgePrior => "ridge_prior",
            Method::Hybrid => "hybrid",
            Method::Ensemble => "ensemble",
        })
    }
}

/// Imputer selection and hyperparameters, read from a `key=value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputerConfig {
    pub method: Method,
    pub members: Vec<Method>,
    pub policy: EnsemblePolicy,
    pub lambda: f64,
    pub alpha: f64,
    pub min_support: u32,
    pub near_km: f64,
    pub far_km: f64,
    pub areal_km: f64,
    pub k: usize,
    /// Compute prior statistics over train plus the test languages' observed cells.
    pub include_test_stats: bool,
    pub vectors: Option<String>,
}

impl Default for ImputerConfig {
    fn default() -> Self {
        ImputerConfig {
            method: Method::Frequency,
            members: vec![Method::Correlation, Method::Frequency],
            policy: EnsemblePolicy::MaxConfidence,
            lambda: 1.0,
            alpha: 1.0,
            min_support: 5,
            near_km: 1000.0,
            far_km: 2000.0,
            areal_km: 2500.0,
            k: 1,
            include_test_stats: false,
            vectors: None,
        }
    }
}

const KEYS: [&str; 12] = [
    "method",
    "members",
    "policy",
    "lambda",
    "alpha",
    "min_support",
    "near_km",
    "far_km",
    "areal_km",
    "k",
    "include_test_stats",
    "vectors",
];

impl ImputerConfig {
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv.check_keys(&KEYS)?;
        let mut c = ImputerConfig::default();
        if let Some(m) = kv.parsed("method")? {
            c.method = m;
        }
        if let Some(ms) = kv.list("members") {
            c.members = ms.iter().map(|m| m.parse()).collect::<Result<_>>()?;
        }
        if let Some(p) = kv.parsed("policy")? {
            c.policy = p;
        }
        macro_rules! num {
            ($($field:ident),*) => {$(
                if let Some(v) = kv.parsed(stringify!($field))? {
                    c.$field = v;
                }
            )*};
        }
        num!(lambda, alpha, min_support, near_km, far_km, areal_km, k, include_test_stats);
        c.vectors = kv.get("vectors").filter(|v| !v.is_empty()).map(str::to_string);
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(&KeyValues::parse(text)?)
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        kv.set("method", self.method);
        kv.set(
            "members",
            self.members.iter().map(Method::to_string).collect::<Vec<_>>().join(","),
        );
        kv.set("policy", self.policy);
        kv.set("lambda", self.lambda);
        kv.set("alpha", self.alpha);
        kv.set("min_support", self.min_support);
        kv.set("near_km", self.near_km);
        kv.set("far_km", self.far_km);
        kv.set("areal_km", self.areal_km);
        kv.set("k", self.k);
        kv.set("include_test_stats", self.include_test_stats);
        kv.set("vectors", self.vectors.as_deref().unwrap_or(""));
        kv
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be positive".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.method == Method::Ensemble {
            if self.members.is_empty() {
                return Err(Error::Config("ensemble needs members".into()));
            }
            if self.members.contains(&Method::Ensemble) {
                return Err(Error::Config("ensembles cannot nest".into()));
            }
        }
        Ok(())
    }

    fn prior(&self, blocks: PriorBlocks) -> PriorConfig {
        PriorConfig {
            areal_km: self.areal_km,
            min_support: self.min_support,
            blocks,
        }
    }

    fn build_one(
        &self,
        method: Method,
        train: &Dataset,
        test: Option<&Dataset>,
        vectors: Option<&LanguageVectors>,
    ) -> Result<Box<dyn Imputer>> {
        let extra = if self.include_test_stats { test } else { None };
        Ok(match method {
            Method::Frequency => Box::new(GlobalFrequency::fit(train)?),
            Method::GenusFamily => Box::new(GenusFamilyBackoff::fit(train)?),
            Method::Statistical => Box::new(StatisticalBackoff::fit(train, self.near_km, self.far_km)?),
            Method::Knn => Box::new(Knn::fit(train, vectors.cloned(), self.k)?),
            Method::Correlation => Box::new(Correlation::fit(
                train,
                CorrelationParams {
                    alpha: self.alpha,
                    min_support: self.min_support,
                },
            )?),
            Method::RidgePrior => Box::new(RidgePrior::fit(
                train,
                RidgeParams {
                    lambda: self.lambda,
                    prior: self.prior(PriorBlocks::ALL),
                },
                extra,
            )?),
            Method::Hybrid => Box::new(RidgePrior::fit_named(
                "hybrid",
                train,
                RidgeParams {
                    lambda: self.lambda,
                    prior: self.prior(PriorBlocks::INDICATORS_ONLY),
                },
                extra,
            )?),
            Method::Ensemble => return Err(Error::Config("ensembles cannot nest".into())),
        })
    }

    /// Fits the configured imputer. Ensembles always end with a frequency
    /// member so that every catalog feature gets an answer.
    pub fn build(
        &self,
        train: &Dataset,
        test: Option<&Dataset>,
        vectors: Option<&LanguageVectors>,
    ) -> Result<Box<dyn Imputer>> {
        self.validate()?;
        if self.method != Method::Ensemble {
            return self.build_one(self.method, train, test, vectors);
        }
        let mut methods = self.members.clone();
        if methods.last() != Some(&Method::Frequency) {
            methods.push(Method::Frequency);
        }
        let members = methods
            .iter()
            .map(|&m| self.build_one(m, train, test, vectors))
            .collect::<Result<Vec<_>>>()?;
        Ok(Box::new(Ensemble::new(members, self.policy)?))
    }
}
