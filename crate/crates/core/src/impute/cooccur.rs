//! Joint value counts for every ordered pair of features.

use std::collections::HashMap;

use crate::kb::Dataset;

/// Counts of `(a, b)` over languages observing both features `A` and `B`.
#[derive(Debug, Clone)]
pub(crate) struct PairTable {
    cols: usize,
    joint: Vec<u32>,
    row_totals: Vec<u32>,
    col_totals: Vec<u32>,
    total: u32,
}

impl PairTable {
    fn new(rows: usize, cols: usize) -> Self {
        PairTable {
            cols,
            joint: vec![0; rows * cols],
            row_totals: vec![0; rows],
            col_totals: vec![0; cols],
            total: 0,
        }
    }

    pub fn joint(&self, a: usize, b: usize) -> u32 {
        self.joint[a * self.cols + b]
    }

    /// Languages with `A = a` that also observe `B`.
    pub fn support(&self, a: usize) -> u32 {
        self.row_totals[a]
    }

    #[cfg(test)]
    pub fn total(&self) -> u32 {
        self.total
    }

    /// Mutual information over co-observing languages, normalized by
    /// `sqrt(H(A) H(B))`. A target that never varies is perfectly
    /// predictable (weight 1); a constant predictor carries no information
    /// (weight 0).
    pub fn normalized_mutual_information(&self) -> f64 {
        let n = self.total as f64;
        if n == 0.0 {
            return 0.0;
        }
        let entropy = |counts: &[u32]| -> f64 {
            counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * p.ln()
                })
                .sum()
        };
        let (ha, hb) = (entropy(&self.row_totals), entropy(&self.col_totals));
        if hb <= 1e-12 {
            return 1.0;
        }
        if ha <= 1e-12 {
            return 0.0;
        }
        let mut mi = 0.0;
        for (a, &ra) in self.row_totals.iter().enumerate() {
            for (b, &cb) in self.col_totals.iter().enumerate() {
                let j = self.joint(a, b);
                if j > 0 {
                    let pj = j as f64 / n;
                    mi += pj * (pj * n * n / (ra as f64 * cb as f64)).ln();
                }
            }
        }
        (mi / (ha * hb).sqrt()).clamp(0.0, 1.0)
    }
}

/// Interned features and values of a dataset with all pairwise tables.
#[derive(Debug, Clone)]
pub(crate) struct Cooccurrence {
    feature_ids: HashMap<String, usize>,
    values: Vec<Vec<String>>,
    value_ids: Vec<HashMap<String, usize>>,
    tables: Vec<Option<PairTable>>,
}

impl Cooccurrence {
    pub fn new(d: &Dataset) -> Self {
        let catalog = d.catalog();
        let mut feature_ids = HashMap::new();
        let mut values: Vec<Vec<String>> = Vec::new();
        let mut value_ids: Vec<HashMap<String, usize>> = Vec::new();
        for (i, f) in catalog.features().enumerate() {
            feature_ids.insert(f.to_string(), i);
            let inv: Vec<String> = catalog.inventory(f).unwrap().into_iter().map(str::to_string).collect::<Vec<_>>();
            value_ids.push(inv.iter().enumerate().map(|(j, v)| (v.clone(), j)).collect());
            values.push(inv);
        }
        let nf = values.len();
        let mut tables: Vec<Option<PairTable>> = vec![None; nf * nf];
        for l in d.languages() {
            let cells: Vec<(usize, usize)> = d
                .matrix()
                .observed(&l.code)
                .map(|(f, v)| {
                    let fi = feature_ids[f];
                    (fi, value_ids[fi][v])
                })
                .collect();
            for &(fa, va) in &cells {
                for &(fb, vb) in &cells {
                    if fa == fb {
                        continue;
                    }
                    let t = tables[fa * nf + fb]
                        .get_or_insert_with(|| PairTable::new(values[fa].len(), values[fb].len()));
                    t.joint[va * t.cols + vb] += 1;
                    t.row_totals[va] += 1;
                    t.col_totals[vb] += 1;
                    t.total += 1;
                }
            }
        }
        Cooccurrence {
            feature_ids,
            values,
            value_ids,
            tables,
        }
    }

    pub fn feature_id(&self, f: &str) -> Option<usize> {
        self.feature_ids.get(f).copied()
    }

    pub fn value_id(&self, feature: usize, v: &str) -> Option<usize> {
        self.value_ids[feature].get(v).copied()
    }

    pub fn values(&self, feature: usize) -> &[String] {
        &self.values[feature]
    }

    pub fn table(&self, a: usize, b: usize) -> Option<&PairTable> {
        self.tables[a * self.values.len() + b].as_ref()
    }
}
