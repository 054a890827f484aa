use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{score, EvalReport, MissingPolicy, SystemOutput};
use crate::error::{Error, Result};
use crate::kb::Dataset;

/// Outcome of a paired approximate-randomization test between two systems.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceResult {
    pub system_a: String,
    pub system_b: String,
    /// Macro accuracy of `a` minus that of `b`.
    pub observed_difference: f64,
    pub p_value: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Per-language accuracy pairs with the weight each language carries in the
/// macro score.
struct Paired {
    weights: Vec<f64>,
    diffs: Vec<f64>,
}

fn paired(a: &EvalReport, b: &EvalReport) -> Result<Paired> {
    let b_acc: BTreeMap<&str, f64> = b
        .languages
        .iter()
        .filter_map(|l| l.accuracy.map(|x| (l.code.as_str(), x)))
        .collect();
    let rows: Vec<(&str, f64, f64)> = a
        .languages
        .iter()
        .filter_map(|l| Some((l.genus.as_str(), l.accuracy?, *b_acc.get(l.code.as_str())?)))
        .collect();
    if rows.is_empty() {
        return Err(Error::Config("no language is scored for both systems".into()));
    }
    let mut genus_size: BTreeMap<&str, usize> = BTreeMap::new();
    for (g, _, _) in &rows {
        *genus_size.entry(g).or_default() += 1;
    }
    let genera = genus_size.len() as f64;
    Ok(Paired {
        weights: rows.iter().map(|(g, _, _)| 1.0 / (genera * genus_size[g] as f64)).collect(),
        diffs: rows.iter().map(|(_, x, y)| x - y).collect(),
    })
}

/// Tests whether two systems' macro accuracies differ, by randomly swapping
/// the two systems' outputs language by language. The p-value is
/// `(1 + hits) / (1 + samples)` where a hit is a shuffled absolute
/// difference at least as large as the observed one. Each sample draws from
/// its own stream of `seed`, so results do not depend on thread count.
pub fn paired_permutation_test(
    gold: &Dataset,
    a: &SystemOutput,
    b: &SystemOutput,
    policy: MissingPolicy,
    samples: usize,
    seed: u64,
) -> Result<SignificanceResult> {
    if samples == 0 {
        return Err(Error::Config("permutation samples must be positive".into()));
    }
    let (ra, rb) = (score(gold, a, policy)?, score(gold, b, policy)?);
    let p = paired(&ra, &rb)?;
    let stat = |signs: &mut dyn FnMut() -> bool| -> f64 {
        p.weights
            .iter()
            .zip(&p.diffs)
            .map(|(w, d)| if signs() { w * d } else { -w * d })
            .sum::<f64>()
            .abs()
    };
    let observed = stat(&mut || true);
    let hits: usize = (0..samples)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            stat(&mut || rng.random::<bool>()) >= observed - 1e-12
        })
        .count();
    Ok(SignificanceResult {
        system_a: a.name.clone(),
        system_b: b.name.clone(),
        observed_difference: ra.macro_accuracy - rb.macro_accuracy,
        p_value: (1 + hits) as f64 / (1 + samples) as f64,
        samples,
        seed,
    })
}
