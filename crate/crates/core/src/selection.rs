//! One-vs-rest chi-squared feature selection.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;

use crate::corpus::AgeCategory;
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, FeatureVector};

/// Critical value of χ² with one degree of freedom at 90% confidence.
pub const CRITICAL_90: f64 = 2.71;

/// 2×2 presence table for one feature and one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable {
    /// present, in class
    pub a: u64,
    /// present, rest
    pub b: u64,
    /// absent, in class
    pub c: u64,
    /// absent, rest
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        ContingencyTable { a, b, c, d }
    }

    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }
}

/// Uncorrected Pearson χ² of a 2×2 table; 0 when any margin is empty.
pub fn chi2(t: &ContingencyTable) -> f64 {
    let (a, b, c, d) = (t.a as f64, t.b as f64, t.c as f64, t.d as f64);
    let margins = (a + b) * (c + d) * (a + c) * (b + d);
    if margins == 0.0 {
        return 0.0;
    }
    let cross = a * d - b * c;
    (a + b + c + d) * cross * cross / margins
}

/// Per-category χ² scores of one feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScore {
    pub id: u32,
    pub scores: Vec<f64>,
    pub kept: bool,
}

impl FeatureScore {
    pub fn max(&self) -> f64 {
        self.scores.iter().copied().fold(0.0, f64::max)
    }
}

/// χ² scores for every feature in `space`, one per category present in
/// `docs` (in category order).
pub fn score_features(
    space: &FeatureSpace,
    docs: &[(FeatureVector, AgeCategory)],
    critical: f64,
) -> Result<(Vec<AgeCategory>, Vec<FeatureScore>)> {
    let categories: Vec<AgeCategory> = docs
        .iter()
        .map(|(_, c)| *c)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if categories.len() < 2 {
        return Err(Error::validation(format!(
            "chi-squared selection needs at least two categories, found {}",
            categories.len()
        )));
    }
    let slot = |c: AgeCategory| categories.binary_search(&c).expect("category collected above");
    let k = categories.len();
    let mut class_totals = vec![0u64; k];
    // presence[feature * k + class]
    let mut presence = vec![0u64; space.len() * k];
    for (fv, c) in docs {
        let s = slot(*c);
        class_totals[s] += 1;
        for &(id, w) in fv.entries() {
            if w > 0.0 && (id as usize) < space.len() {
                presence[id as usize * k + s] += 1;
            }
        }
    }
    let n = docs.len() as u64;
    let scores = (0..space.len())
        .into_par_iter()
        .map(|f| {
            let row = &presence[f * k..(f + 1) * k];
            let present: u64 = row.iter().sum();
            let scores: Vec<f64> = (0..k)
                .map(|s| {
                    let a = row[s];
                    let b = present - a;
                    let c = class_totals[s] - a;
                    let d = (n - class_totals[s]) - b;
                    chi2(&ContingencyTable::new(a, b, c, d))
                })
                .collect();
            let kept = scores.iter().any(|&x| x >= critical);
            FeatureScore {
                id: f as u32,
                scores,
                kept,
            }
        })
        .collect();
    Ok((categories, scores))
}

/// Ids of the features whose χ² against some category (vs. all others)
/// reaches `critical`.
pub fn select(space: &FeatureSpace, docs: &[(FeatureVector, AgeCategory)], critical: f64) -> Result<BTreeSet<u32>> {
    let (_, scores) = score_features(space, docs, critical)?;
    Ok(scores.into_iter().filter(|s| s.kept).map(|s| s.id).collect())
}

/// CSV with one row per feature: key, per-category χ², max, kept flag.
pub fn write_report(
    out: &mut impl Write,
    space: &FeatureSpace,
    categories: &[AgeCategory],
    scores: &[FeatureScore],
) -> std::io::Result<()> {
    write!(out, "feature")?;
    for c in categories {
        write!(out, ",chi2_{c}")?;
    }
    writeln!(out, ",max,kept")?;
    for s in scores {
        let key = space.key(s.id).map(|k| k.to_string()).unwrap_or_default();
        write!(out, "{}", csv_field(&key))?;
        for x in &s.scores {
            write!(out, ",{x}")?;
        }
        writeln!(out, ",{},{}", s.max(), s.kept)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
