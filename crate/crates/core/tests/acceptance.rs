//! Acceptance criteria, each checked against an oracle written here from
//! first principles. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use typimpute::eval::{
    blanking_ratio_correlation, paired_permutation_test, score, EvalReport, LanguageScore, MissingPolicy,
    SystemOutput,
};
use typimpute::impute::{
    solve_ridge, Correlation, CorrelationParams, GenusFamilyBackoff, GlobalFrequency, Imputer, ImputerQuery,
    StatisticalBackoff,
};
use typimpute::kb::{parse_dataset, serialize_dataset, CellState, Dataset, FeatureMatrix, Language};
use typimpute::split::{blank_with_ratios, build_controlled_split, Assignment, ExclusionReason, SplitSpec, TestReason};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn language(code: &str, genus: &str, family: &str, lat: f64, lon: f64) -> Language {
    Language {
        code: code.into(),
        name: format!("Name {code}"),
        latitude: lat,
        longitude: lon,
        genus: genus.into(),
        family: family.into(),
        country_codes: vec!["XX".into()],
    }
}

fn dataset(rows: Vec<(Language, Vec<(String, String)>)>) -> Dataset {
    let mut m = FeatureMatrix::new();
    let mut langs = Vec::new();
    for (l, cells) in rows {
        for (f, v) in cells {
            m.insert(&l.code, &f, CellState::Observed(v)).unwrap();
        }
        langs.push(l);
    }
    Dataset::new(langs, m).unwrap()
}

/// Great-circle distance from the chord between unit vectors.
fn oracle_km(a: &Language, b: &Language) -> f64 {
    let v = |l: &Language| {
        let (p, q) = (l.latitude.to_radians(), l.longitude.to_radians());
        [p.cos() * q.cos(), p.cos() * q.sin(), p.sin()]
    };
    let (x, y) = (v(a), v(b));
    let chord = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
    2.0 * 6371.0088 * (chord / 2.0).min(1.0).asin()
}

// 1. Split membership against the rule applied by brute force.
fn split_membership() -> Outcome {
    let mut violations = Vec::new();
    for case in 0..100u64 {
        let mut r = rng(1000 + case);
        let pool: Vec<String> = (0..8).map(|g| format!("G{g}")).collect();
        let centres: Vec<(f64, f64)> = (0..8)
            .map(|_| (r.random_range(-50.0..50.0), r.random_range(-150.0..150.0)))
            .collect();
        let rows: Vec<_> = (0..30)
            .map(|i| {
                let g = r.random_range(0..8);
                let spread = r.random_range(0.5..15.0);
                let lat = (centres[g].0 + r.random_range(-spread..spread)).clamp(-89.0, 89.0);
                let lon = (centres[g].1 + r.random_range(-spread..spread)).clamp(-179.0, 179.0);
                let feats = (0..6).map(|f| (format!("f{f}"), format!("v{}", r.random_range(0..3)))).collect();
                (language(&format!("c{i:02}"), &pool[g], "F", lat, lon), feats)
            })
            .collect();
        let d = dataset(rows);
        let present: Vec<String> = pool.iter().filter(|g| d.genus_members(g).next().is_some()).cloned().collect();
        let how_many = r.random_range(1..=3);
        let held: Vec<String> = present.choose_multiple(&mut r, how_many).cloned().collect();
        let spec = SplitSpec {
            held_out_genera: held.clone(),
            exclusion_radius_km: [0.0, 300.0, 1000.0, 2500.0][r.random_range(0..4)],
            random_holdout_fraction: [0.0, 0.1, 0.25][r.random_range(0..3)],
            seed: case,
            ..SplitSpec::default()
        };
        let out = build_controlled_split(&d, &spec).map_err(|e| format!("case {case}: {e}"))?;
        let by_code: BTreeMap<&str, Assignment> =
            out.provenance.iter().map(|p| (p.code.as_str(), p.assignment)).collect();

        let held_langs: Vec<&Language> = d.languages().iter().filter(|l| held.contains(&l.genus)).collect();
        let remainder = d.len() - held_langs.len();
        let want_sample = (spec.random_holdout_fraction * remainder as f64 + 0.5 + 1e-9).floor() as usize;
        let sampled = by_code
            .values()
            .filter(|a| **a == Assignment::Test(TestReason::RandomSample))
            .count();
        if sampled != want_sample {
            violations.push(format!("case {case}: sampled {sampled}, expected {want_sample}"));
        }
        for l in d.languages() {
            let got = by_code[l.code.as_str()];
            let expected = if held.contains(&l.genus) {
                Some(Assignment::Test(TestReason::HeldOutGenus))
            } else if got == Assignment::Test(TestReason::RandomSample) {
                None
            } else if held_langs.iter().any(|h| h.genus == l.genus) {
                Some(Assignment::Excluded(ExclusionReason::SameGenus))
            } else if held_langs.iter().any(|h| oracle_km(h, l) <= spec.exclusion_radius_km) {
                Some(Assignment::Excluded(ExclusionReason::WithinRadius))
            } else {
                Some(Assignment::Train)
            };
            if expected.is_some_and(|e| e != got) {
                violations.push(format!("case {case}: {} is {got}, expected {}", l.code, expected.unwrap()));
            }
            let in_train = out.train.contains(&l.code);
            let in_test = out.test.contains(&l.code);
            if in_train != (got == Assignment::Train) || in_test != matches!(got, Assignment::Test(_)) {
                violations.push(format!("case {case}: {} membership disagrees with provenance", l.code));
            }
        }
        for l in out.train.languages() {
            if held_langs.iter().any(|h| oracle_km(h, l) <= spec.exclusion_radius_km) {
                violations.push(format!("case {case}: train language {} within radius", l.code));
            }
        }
    }
    if violations.is_empty() {
        Ok("100 fixtures, 0 violations".into())
    } else {
        Err(format!("{} violations, first: {}", violations.len(), violations[0]))
    }
}

fn mode(values: &[&str]) -> Option<(String, f64)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let best = counts.iter().map(|(v, c)| (*c, std::cmp::Reverse(*v))).max()?;
    Some((best.1 .0.to_string(), best.0 as f64 / values.len() as f64))
}

fn observed_values<'a>(d: &'a Dataset, feature: &str, keep: impl Fn(&Language) -> bool) -> Vec<&'a str> {
    d.languages()
        .iter()
        .filter(|l| keep(l))
        .filter_map(|l| d.matrix().get(&l.code, feature).and_then(CellState::observed))
        .collect()
}

fn nmi(train: &Dataset, a: &str, b: &str) -> f64 {
    let pairs: Vec<(&str, &str)> = train
        .languages()
        .iter()
        .filter_map(|l| {
            let m = train.matrix();
            Some((m.get(&l.code, a)?.observed()?, m.get(&l.code, b)?.observed()?))
        })
        .collect();
    let n = pairs.len() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let mut pa: BTreeMap<&str, f64> = BTreeMap::new();
    let mut pb: BTreeMap<&str, f64> = BTreeMap::new();
    let mut pj: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for &(x, y) in &pairs {
        *pa.entry(x).or_default() += 1.0 / n;
        *pb.entry(y).or_default() += 1.0 / n;
        *pj.entry((x, y)).or_default() += 1.0 / n;
    }
    let h = |m: &BTreeMap<&str, f64>| -> f64 { m.values().map(|p| -p * p.ln()).sum() };
    let (ha, hb) = (h(&pa), h(&pb));
    if hb <= 1e-12 {
        return 1.0;
    }
    if ha <= 1e-12 {
        return 0.0;
    }
    let mi: f64 = pj.iter().map(|((x, y), p)| p * (p / (pa[x] * pb[y])).ln()).sum();
    (mi / (ha * hb).sqrt()).clamp(0.0, 1.0)
}

fn correlation_oracle(
    train: &Dataset,
    observed: &BTreeMap<String, String>,
    target: &str,
    alpha: f64,
    min_support: u32,
) -> Option<String> {
    let inventory: BTreeSet<&str> = observed_values(train, target, |_| true).into_iter().collect();
    let k = inventory.len() as f64;
    let mut scores: BTreeMap<&str, f64> = inventory.iter().map(|v| (*v, 0.0)).collect();
    let mut voters = 0;
    for (a, va) in observed {
        let rows: Vec<&str> = train
            .languages()
            .iter()
            .filter(|l| train.matrix().get(&l.code, a).and_then(CellState::observed) == Some(va.as_str()))
            .filter_map(|l| train.matrix().get(&l.code, target).and_then(CellState::observed))
            .collect();
        if rows.is_empty() || rows.len() < min_support as usize {
            continue;
        }
        voters += 1;
        let w = nmi(train, a, target);
        for (v, s) in scores.iter_mut() {
            let joint = rows.iter().filter(|r| *r == v).count() as f64;
            *s += w * (joint + alpha) / (rows.len() as f64 + alpha * k);
        }
    }
    let total: f64 = scores.values().sum();
    if voters == 0 || total <= 0.0 {
        return None;
    }
    let top = scores.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    scores.into_iter().find(|(_, s)| *s == top).map(|(v, _)| v.to_string())
}

// 2. Counting imputers against brute-force oracles.
fn counting_imputers() -> Outcome {
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for case in 0..200u64 {
        let mut r = rng(2000 + case);
        let n = r.random_range(4..=20);
        let nf = r.random_range(2..=5);
        let rows: Vec<_> = (0..n)
            .map(|i| {
                let g = r.random_range(0..4);
                let lang = language(
                    &format!("l{i:02}"),
                    &format!("G{g}"),
                    &format!("F{}", g / 2),
                    r.random_range(-40.0..40.0),
                    r.random_range(-40.0..40.0),
                );
                let a = r.random_range(0..3);
                let mut feats = Vec::new();
                for f in 0..nf {
                    if !r.random_bool(0.8) {
                        continue;
                    }
                    let v = if f == 1 && r.random_bool(0.8) { a % 2 } else { r.random_range(0..3) };
                    feats.push((format!("f{f}"), format!("v{}", if f == 0 { a } else { v })));
                }
                (lang, feats)
            })
            .collect();
        let full = dataset(rows);
        let codes: Vec<String> = full.languages().iter().map(|l| l.code.clone()).collect();
        let n_train = (n * 2 / 3).max(2);
        let train_codes: BTreeSet<String> = codes[..n_train].iter().cloned().collect();
        let train = full.subset(&train_codes);
        if train.matrix().is_empty() {
            continue;
        }
        let (near, far) = (1500.0, 3000.0);
        let freq = GlobalFrequency::fit(&train).unwrap();
        let backoff = GenusFamilyBackoff::fit(&train).unwrap();
        let stat = StatisticalBackoff::fit(&train, near, far).unwrap();
        let params = CorrelationParams {
            alpha: 1.0,
            min_support: r.random_range(1..=3),
        };
        let corr = Correlation::fit(&train, params).unwrap();

        for q in full.languages().iter().filter(|l| !train_codes.contains(&l.code)) {
            let obs_all = full.observed(&q.code);
            for target in train.catalog().features() {
                let mut observed = obs_all.clone();
                observed.remove(target);
                let query = ImputerQuery::new(q, &observed, target).unwrap();
                let global = mode(&observed_values(&train, target, |_| true));
                let genus = mode(&observed_values(&train, target, |l| l.genus == q.genus));
                let family = mode(&observed_values(&train, target, |l| l.family == q.family));
                let areal = mode(&observed_values(&train, target, |l| oracle_km(l, q) <= near));
                let nearest_family = train
                    .languages()
                    .iter()
                    .filter(|l| train.matrix().get(&l.code, target).is_some_and(|s| s.observed().is_some()))
                    .map(|l| (oracle_km(l, q), l))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.code.cmp(&b.1.code)))
                    .filter(|(dist, _)| *dist <= far)
                    .and_then(|(_, l)| mode(&observed_values(&train, target, |m| m.family == l.family)));

                let expect = [
                    ("frequency", global.clone().map(|m| m.0)),
                    ("genus_family", genus.clone().or(family.clone()).or(global.clone()).map(|m| m.0)),
                    (
                        "statistical",
                        genus.or(family).or(areal).or(nearest_family).or(global.clone()).map(|m| m.0),
                    ),
                    (
                        "correlation",
                        correlation_oracle(&train, &observed, target, params.alpha, params.min_support),
                    ),
                ];
                let imputers: [&dyn Imputer; 4] = [&freq, &backoff, &stat, &corr];
                for ((name, want), imp) in expect.into_iter().zip(imputers) {
                    let got = imp.predict(&query).ok().map(|p| p.value);
                    checked += 1;
                    if got != want {
                        mismatches.push(format!(
                            "case {case} {name} ({}, {target}): got {got:?}, oracle {want:?}",
                            q.code
                        ));
                    }
                }
                if let (Ok(p), Some((_, c))) = (freq.predict(&query), &global) {
                    if (p.confidence - c).abs() > 1e-12 {
                        mismatches.push(format!("case {case} frequency confidence {} vs {c}", p.confidence));
                    }
                }
            }
        }
    }
    if mismatches.is_empty() {
        Ok(format!("200 datasets, {checked} predictions match"))
    } else {
        Err(format!("{} mismatches of {checked}, first: {}", mismatches.len(), mismatches[0]))
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Normal equations of ridge with an optional unpenalized bias, as dense rows.
fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, intercept: bool) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (n, d) = x.shape();
    let m = d + usize::from(intercept);
    let col = |i: usize, j: usize| if j < d { x[(i, j)] } else { 1.0 };
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for j in 0..m {
        for k in 0..m {
            a[j][k] = (0..n).map(|i| col(i, j) * col(i, k)).sum();
        }
        if j < d {
            a[j][j] += lambda;
        }
        b[j] = (0..n).map(|i| col(i, j) * y[i]).sum();
    }
    (a, b)
}

// 3. Ridge solutions against dense normal equations.
fn ridge_correctness() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_diff = 0.0f64;
    let mut failures = Vec::new();
    for case in 0..100u64 {
        let mut r = rng(3000 + case);
        let n = r.random_range(1..=50);
        let d = r.random_range(1..=20);
        let intercept = r.random_bool(0.5);
        let x = DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut r));
        let y = DVector::from_fn(n, |_, _| { let e: f64 = StandardNormal.sample(&mut r); e * 3.0 + 1.0 });
        let mut norms = Vec::new();
        for lambda in [0.01, 1.0, 100.0] {
            let sol = solve_ridge(&x, &y, lambda, intercept).map_err(|e| format!("case {case}: {e}"))?;
            let (a, b) = normal_equations(&x, &y, lambda, intercept);
            let mut z: Vec<f64> = sol.weights.iter().copied().collect();
            if intercept {
                z.push(sol.bias);
            } else if sol.bias != 0.0 {
                failures.push(format!("case {case}: bias {} without intercept", sol.bias));
            }
            let resid: f64 = a
                .iter()
                .zip(&b)
                .map(|(row, bi)| (row.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>() - bi).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let rel = resid / scale;
            worst = worst.max(rel);
            if rel > 1e-8 {
                failures.push(format!("case {case} lambda {lambda}: relative residual {rel:e}"));
            }
            let oracle = gauss(a, b);
            let diff = z.iter().zip(&oracle).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
                / oracle.iter().map(|q| q * q).sum::<f64>().sqrt().max(1e-300);
            worst_diff = worst_diff.max(diff);
            norms.push(sol.weights.norm());
        }
        if !(norms[0] >= norms[1] * (1.0 - 1e-12) && norms[1] >= norms[2] * (1.0 - 1e-12)) {
            failures.push(format!("case {case}: weight norms {norms:?} not shrinking"));
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "100 systems x 3 lambdas, worst relative residual {worst:.1e}, worst distance to oracle {worst_diff:.1e}"
        ))
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

/// Gold where each language has `blanked` cells `f0..` with gold value "g".
fn blanked_gold(langs: &[(String, String, usize)]) -> Dataset {
    let mut m = FeatureMatrix::new();
    let mut out = Vec::new();
    for (code, genus, blanked) in langs {
        for j in 0..*blanked {
            m.insert(code, &format!("f{j}"), CellState::Blanked("g".into())).unwrap();
        }
        m.insert(code, "seen", CellState::Observed("x".into())).unwrap();
        out.push(language(code, genus, "F", 0.0, 0.0));
    }
    Dataset::new(out, m).unwrap()
}

fn random_output(name: &str, gold: &Dataset, r: &mut ChaCha8Rng, p_correct: f64) -> SystemOutput {
    let mut o = SystemOutput::new(name);
    for (l, f, g) in gold.blanked() {
        let v = if r.random_bool(p_correct) { g.to_string() } else { "wrong".to_string() };
        o.insert(l, f, &v);
    }
    o
}

/// Per-language accuracy computed directly from gold and predictions.
fn accuracies(gold: &Dataset, out: &SystemOutput) -> BTreeMap<String, f64> {
    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (l, f, g) in gold.blanked() {
        let e = hits.entry(l.to_string()).or_default();
        e.1 += 1;
        if out.predictions.get(&(l.to_string(), f.to_string())).map(String::as_str) == Some(g) {
            e.0 += 1;
        }
    }
    hits.into_iter().map(|(l, (c, n))| (l, c as f64 / n as f64)).collect()
}

fn macro_of(acc: &BTreeMap<String, f64>, genus: &BTreeMap<String, String>) -> f64 {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (l, a) in acc {
        by.entry(genus[l].as_str()).or_default().push(*a);
    }
    by.values().map(|v| v.iter().sum::<f64>() / v.len() as f64).sum::<f64>() / by.len() as f64
}

// 4. Monte-Carlo permutation p against exhaustive enumeration.
fn permutation_calibration() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for case in 0..20u64 {
        let mut r = rng(4000 + case);
        let langs: Vec<(String, String, usize)> = (0..5)
            .map(|i| (format!("l{i}"), format!("G{}", r.random_range(0..3)), r.random_range(2..=8)))
            .collect();
        let gold = blanked_gold(&langs);
        let genus: BTreeMap<String, String> = langs.iter().map(|(c, g, _)| (c.clone(), g.clone())).collect();
        let a = random_output("a", &gold, &mut r, 0.7);
        let b = random_output("b", &gold, &mut r, 0.4);
        let (acc_a, acc_b) = (accuracies(&gold, &a), accuracies(&gold, &b));
        let observed = (macro_of(&acc_a, &genus) - macro_of(&acc_b, &genus)).abs();
        let codes: Vec<&String> = acc_a.keys().collect();
        let mut hits = 0;
        for mask in 0..32u32 {
            let (mut sa, mut sb) = (BTreeMap::new(), BTreeMap::new());
            for (i, c) in codes.iter().enumerate() {
                let (x, y) = (acc_a[*c], acc_b[*c]);
                let (x, y) = if mask >> i & 1 == 1 { (y, x) } else { (x, y) };
                sa.insert((*c).clone(), x);
                sb.insert((*c).clone(), y);
            }
            if (macro_of(&sa, &genus) - macro_of(&sb, &genus)).abs() >= observed - 1e-12 {
                hits += 1;
            }
        }
        let exact = hits as f64 / 32.0;
        let res = paired_permutation_test(&gold, &a, &b, MissingPolicy::CountAsWrong, 5000, case)
            .map_err(|e| e.to_string())?;
        let gap = (res.p_value - exact).abs();
        worst = worst.max(gap);
        if gap > 0.02 {
            failures.push(format!("case {case}: p {} vs exact {exact}", res.p_value));
        }
        let same = paired_permutation_test(&gold, &a, &a, MissingPolicy::CountAsWrong, 5000, case)
            .map_err(|e| e.to_string())?;
        if same.p_value != 1.0 {
            failures.push(format!("case {case}: identical systems p = {}", same.p_value));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    if failures.is_empty() {
        Ok(format!("20 fixtures, worst |p - exact| {worst:.4}, identical p = 1, {secs:.2} s"))
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

fn shuffled_gold(gold: &Dataset, r: &mut ChaCha8Rng) -> Dataset {
    let mut langs: Vec<Language> = gold.languages().to_vec();
    langs.shuffle(r);
    let mut cells: Vec<(String, String, CellState)> = gold
        .matrix()
        .iter()
        .map(|(l, f, s)| (l.to_string(), f.to_string(), s.clone()))
        .collect();
    cells.shuffle(r);
    let mut m = FeatureMatrix::new();
    for (l, f, s) in cells {
        m.insert(&l, &f, s).unwrap();
    }
    Dataset::new(langs, m).unwrap()
}

fn sorted_report(mut rep: EvalReport) -> EvalReport {
    rep.languages.sort_by(|a, b| a.code.cmp(&b.code));
    rep
}

// 5. Metric identities and properties.
fn metric_identities() -> Outcome {
    let mut failures = Vec::new();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;

    // genus A = {1.0}, genus B = {0.5, 0.0}
    let gold = blanked_gold(&[("a".into(), "A".into(), 2), ("b1".into(), "B".into(), 2), ("b2".into(), "B".into(), 2)]);
    let mut o = SystemOutput::new("s");
    for (l, f) in [("a", "f0"), ("a", "f1"), ("b1", "f0")] {
        o.insert(l, f, "g");
    }
    o.insert("b1", "f1", "no");
    let rep = score(&gold, &o, MissingPolicy::CountAsWrong).map_err(|e| e.to_string())?;
    if !close(rep.macro_accuracy, 0.625) {
        failures.push(format!("worked example gives {}", rep.macro_accuracy));
    }

    for case in 0..100u64 {
        let mut r = rng(5000 + case);
        // one language with one blanked cell per genus: micro == macro
        let langs: Vec<_> = (0..r.random_range(1..12))
            .map(|i| (format!("l{i}"), format!("G{i}"), 1))
            .collect();
        let gold = blanked_gold(&langs);
        let out = random_output("s", &gold, &mut r, 0.5);
        let rep = score(&gold, &out, MissingPolicy::CountAsWrong).unwrap();
        if !close(rep.micro_accuracy, rep.macro_accuracy) {
            failures.push(format!("case {case}: micro {} != macro {}", rep.micro_accuracy, rep.macro_accuracy));
        }

        // general fixture
        let langs: Vec<_> = (0..r.random_range(2..15))
            .map(|i| (format!("l{i}"), format!("G{}", r.random_range(0..4)), r.random_range(1..6)))
            .collect();
        let gold = blanked_gold(&langs);
        let genus: BTreeMap<String, String> = langs.iter().map(|(c, g, _)| (c.clone(), g.clone())).collect();
        let mut out = random_output("s", &gold, &mut r, 0.6);
        let keys: Vec<_> = out.predictions.keys().cloned().collect();
        for k in keys {
            if r.random_bool(0.15) {
                out.predictions.remove(&k);
            }
        }
        let rep = score(&gold, &out, MissingPolicy::CountAsWrong).unwrap();
        let acc = accuracies(&gold, &out);
        if !close(rep.macro_accuracy, macro_of(&acc, &genus)) {
            failures.push(format!("case {case}: macro {} vs oracle {}", rep.macro_accuracy, macro_of(&acc, &genus)));
        }
        let all_in_range = rep.languages.iter().all(|l| l.accuracy.is_some_and(|a| (0.0..=1.0).contains(&a)))
            && (0.0..=1.0).contains(&rep.macro_accuracy)
            && (0.0..=1.0).contains(&rep.micro_accuracy);
        if !all_in_range {
            failures.push(format!("case {case}: accuracy out of range"));
        }

        // permutation invariance over record order
        let again = score(&shuffled_gold(&gold, &mut r), &out, MissingPolicy::CountAsWrong).unwrap();
        if sorted_report(again) != sorted_report(rep.clone()) {
            failures.push(format!("case {case}: record order changes the report"));
        }

        // removing a prediction moves every accuracy in one direction
        if let Some((key, value)) = out.predictions.iter().nth(r.random_range(0..out.predictions.len().max(1))) {
            let correct = gold.matrix().get(&key.0, &key.1).and_then(CellState::gold) == Some(value.as_str());
            let mut edited = out.clone();
            edited.predictions.remove(&key.clone());
            let after = score(&gold, &edited, MissingPolicy::CountAsWrong).unwrap();
            let pairs = rep
                .languages
                .iter()
                .zip(&after.languages)
                .map(|(x, y)| (x.accuracy.unwrap(), y.accuracy.unwrap()))
                .chain(rep.genera.iter().zip(&after.genera).map(|(x, y)| (x.accuracy, y.accuracy)))
                .chain([(rep.macro_accuracy, after.macro_accuracy), (rep.micro_accuracy, after.micro_accuracy)]);
            for (before, now) in pairs {
                let bad = if correct { now > before + 1e-12 } else { now < before - 1e-12 };
                if bad {
                    failures.push(format!("case {case}: removing a prediction moved {before} to {now}"));
                    break;
                }
            }
        }
    }
    if failures.is_empty() {
        Ok("worked example 0.625, 100 fixtures x 4 properties".into())
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

// 6. Blanking against the even-spacing oracle, and planted correlation recovery.
fn blanking_behavior() -> Outcome {
    let mut failures = Vec::new();
    for case in 0..50u64 {
        let mut r = rng(6000 + case);
        let n = r.random_range(1..=40);
        let rows: Vec<_> = (0..n)
            .map(|i| {
                let k = r.random_range(2..=15);
                let feats = (0..k).map(|f| (format!("f{f:02}"), format!("v{}", r.random_range(0..4)))).collect();
                (language(&format!("l{i:02}"), "G", "F", 0.0, 0.0), feats)
            })
            .collect();
        let d = dataset(rows);
        let spec = SplitSpec {
            seed: case,
            ..SplitSpec::default()
        };
        let (blanked, ratios) = blank_with_ratios(&d, &spec).map_err(|e| e.to_string())?;
        let mut got: Vec<f64> = ratios.values().copied().collect();
        got.sort_by(f64::total_cmp);
        let want: Vec<f64> = if n == 1 {
            vec![0.5]
        } else {
            (0..n).map(|i| 0.05 + 0.9 * i as f64 / (n - 1) as f64).collect()
        };
        if got.len() != want.len() || got.iter().zip(&want).any(|(a, b)| (a - b).abs() > 1e-12) {
            failures.push(format!("case {case}: ratios {got:?}"));
        }
        for l in d.languages() {
            let row = blanked.matrix().row(&l.code).unwrap();
            let nb = row.values().filter(|s| matches!(s, CellState::Blanked(_))).count();
            let no = row.values().filter(|s| matches!(s, CellState::Observed(_))).count();
            let total = d.observed_count(&l.code);
            let expect = ((ratios[&l.code] * total as f64 + 0.5 + 1e-9).floor() as usize).clamp(1, total - 1);
            if nb < 1 || no < 1 || nb != expect || nb + no != total {
                failures.push(format!("case {case} {}: {nb} blanked, {no} observed of {total}", l.code));
            }
            for (f, s) in row {
                if let CellState::Blanked(g) = s {
                    if d.matrix().get(&l.code, f).and_then(CellState::observed) != Some(g.as_str()) {
                        failures.push(format!("case {case} {}: gold for {f} altered", l.code));
                    }
                }
            }
        }
    }

    // planted population correlation 0.3 between ratio and accuracy
    let n = 500;
    let mut r = rng(6999);
    let xs: Vec<f64> = (0..n).map(|i| 0.05 + 0.9 * i as f64 / (n - 1) as f64).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let rho: f64 = 0.3;
    let languages = xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let e: f64 = StandardNormal.sample(&mut r);
            let y = rho * (x - mean) / sd + (1.0 - rho * rho).sqrt() * e;
            LanguageScore {
                code: format!("l{i}"),
                genus: "G".into(),
                blanked: 1,
                correct: 0,
                missing: 0,
                accuracy: Some(0.5 + 0.08 * y),
                blanking_ratio: *x,
            }
        })
        .collect();
    let report = EvalReport {
        system: "planted".into(),
        languages,
        genera: Vec::new(),
        macro_accuracy: 0.5,
        micro_accuracy: 0.5,
        features: BTreeMap::new(),
        missing: 0,
        warnings: Vec::new(),
    };
    let c = blanking_ratio_correlation(&report).map_err(|e| e.to_string())?;
    if (c.r - 0.3).abs() > 0.1 {
        failures.push(format!("planted r recovered as {:.3}", c.r));
    }
    if failures.is_empty() {
        Ok(format!("50 fixtures match the spacing oracle, planted r = 0.3 recovered as {:.3}", c.r))
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

// 7. Correlation imputer on deterministic implications.
fn correlation_implications() -> Outcome {
    let (mut total, mut correct) = (0, 0);
    let mut first_miss = None;
    for case in 0..50u64 {
        let mut r = rng(7000 + case);
        let na = r.random_range(2..=5);
        let nb = r.random_range(2..=4);
        let f: Vec<usize> = (0..na).map(|_| r.random_range(0..nb)).collect();
        let noise = r.random_range(0..=3);
        let make = |r: &mut ChaCha8Rng, code: String, a: usize| {
            let mut feats = vec![("A".to_string(), format!("a{a}")), ("B".to_string(), format!("b{}", f[a]))];
            for j in 0..noise {
                if r.random_bool(0.7) {
                    feats.push((format!("N{j}"), format!("n{}", r.random_range(0..3))));
                }
            }
            (language(&code, &format!("G{}", r.random_range(0..5)), "F", 0.0, 0.0), feats)
        };
        let mut rows = Vec::new();
        for a in 0..na {
            for i in 0..r.random_range(5..=12) {
                rows.push(make(&mut r, format!("t{a}_{i:02}"), a));
            }
        }
        let train = dataset(rows);
        let corr = Correlation::fit(&train, CorrelationParams::default()).map_err(|e| e.to_string())?;
        for a in 0..na {
            for i in 0..3 {
                let (lang, feats) = make(&mut r, format!("q{a}_{i}"), a);
                let observed: BTreeMap<String, String> = feats.into_iter().filter(|(k, _)| k != "B").collect();
                let q = ImputerQuery::new(&lang, &observed, "B").unwrap();
                total += 1;
                match corr.predict(&q) {
                    Ok(p) if p.value == format!("b{}", f[a]) => correct += 1,
                    other => {
                        first_miss.get_or_insert(format!("case {case} a{a}: {other:?}"));
                    }
                }
            }
        }
    }
    match first_miss {
        None => Ok(format!("{correct}/{total} queries correct")),
        Some(m) => Err(format!("{correct}/{total} correct, first miss: {m}")),
    }
}

const NAME_CHARS: &[char] = &['a', 'b', 'k', 'o', 'u', 'z', 'é', 'ŋ', '-', ' ', '\'', '(', ')'];

fn random_text(r: &mut ChaCha8Rng, len: std::ops::RangeInclusive<usize>, chars: &[char]) -> String {
    let n = r.random_range(len);
    let s: String = (0..n).map(|_| chars[r.random_range(0..chars.len())]).collect();
    let s = s.split_whitespace().collect::<Vec<_>>().join(" ");
    if s.is_empty() {
        "x".into()
    } else {
        s
    }
}

// 8. Parser robustness on records with stray tabs in the feature field.
fn parser_robustness() -> Outcome {
    let mut failures = Vec::new();
    let mut r = rng(8000);
    for case in 0..1000 {
        let code = format!("{}{case}", random_text(&mut r, 2..=3, &['a', 'b', 'm', 'q', 'x']).replace(' ', ""));
        let name = random_text(&mut r, 1..=20, NAME_CHARS);
        let genus = random_text(&mut r, 1..=12, NAME_CHARS);
        let family = random_text(&mut r, 1..=12, NAME_CHARS);
        let lat = (r.random_range(-90.0..=90.0f64) * 1000.0).round() / 1000.0;
        let lon = (r.random_range(-180.0..=180.0f64) * 1000.0).round() / 1000.0;
        let countries: Vec<String> = (0..r.random_range(0..=3)).map(|i| format!("C{i}")).collect();
        let nf = r.random_range(1..=8);
        let mut feats: BTreeMap<String, String> = BTreeMap::new();
        for i in 0..nf {
            let fname = format!("{}A {}", i + 1, random_text(&mut r, 1..=25, NAME_CHARS));
            let value = if r.random_bool(0.1) {
                "?".to_string()
            } else {
                format!("{} {}", r.random_range(1..9), random_text(&mut r, 1..=20, &['a', 'e', 'S', 'O', 'V', ' ', '=']))
            };
            feats.insert(fname, value);
        }
        let mut field = feats.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" | ");
        let spaces: Vec<usize> = field.match_indices(' ').map(|(i, _)| i).collect();
        let tabs = r.random_range(0..=3).min(spaces.len());
        for &i in spaces.choose_multiple(&mut r, tabs) {
            field.replace_range(i..i + 1, "\t");
        }
        let line = format!(
            "{code}\t{name}\t{lat}\t{lon}\t{genus}\t{family}\t{}\t{field}\n",
            countries.join(" ")
        );
        let d = match parse_dataset(&line) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("record {case} rejected: {e}"));
                continue;
            }
        };
        let l = &d.languages()[0];
        let meta_ok = l.code == code
            && l.name == name
            && l.latitude == lat
            && l.longitude == lon
            && l.genus == genus
            && l.family == family
            && l.country_codes == countries;
        if !meta_ok {
            failures.push(format!("record {case}: metadata corrupted: {l:?}"));
        }
        let parsed: BTreeMap<String, String> = d
            .matrix()
            .row(&code)
            .map(|row| {
                row.iter()
                    .map(|(f, s)| (f.clone(), s.observed().unwrap_or("?").to_string()))
                    .collect()
            })
            .unwrap_or_default();
        if parsed != feats {
            failures.push(format!("record {case}: features {parsed:?} != {feats:?}"));
        }
        let text = serialize_dataset(&d, None).unwrap();
        match parse_dataset(&text) {
            Ok(back) if back == d && serialize_dataset(&back, None).unwrap() == text => {}
            _ => failures.push(format!("record {case}: round trip differs")),
        }
    }
    if failures.is_empty() {
        Ok("1000 records, 0 corrupted, round trip exact".into())
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("split membership matches the rule oracle", split_membership),
        ("counting imputers match brute-force oracles", counting_imputers),
        ("ridge matches dense normal equations", ridge_correctness),
        ("permutation test calibration", permutation_calibration),
        ("metric identities", metric_identities),
        ("blanking behavior", blanking_behavior),
        ("correlation imputer on implications", correlation_implications),
        ("parser robustness", parser_robustness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
