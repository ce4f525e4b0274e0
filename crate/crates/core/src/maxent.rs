//! Maximum Entropy classification over age categories, trained with
//! Generalized Iterative Scaling.
//!
//! Features are the document weights `f_i(d)` crossed with categories: the
//! pair `(i, c)` fires with value `f_i(d)` when the candidate category is
//! `c`. Only pairs observed in training carry a parameter.
//!
//! GIS needs every document to have the same total feature mass. Training
//! pads each document with a correction feature of value `C - f#(d)`, where
//! `C` is the largest mass seen, and uses the constant step
//! `(1/C) * ln(empirical / model)`. With the padding the log-likelihood is
//! non-decreasing at every iteration.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::AgeCategory;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Documents per parallel work unit. Fixed so that reductions happen in the
/// same order whatever the thread count.
const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GisConfig {
    pub max_iterations: usize,
    pub constraint_tolerance: f64,
    pub likelihood_tolerance: f64,
    pub use_correction: bool,
}

impl Default for GisConfig {
    fn default() -> Self {
        GisConfig {
            max_iterations: 200,
            constraint_tolerance: 1e-3,
            likelihood_tolerance: 1e-6,
            use_correction: true,
        }
    }
}

impl GisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::validation("GIS max_iterations must be at least 1"));
        }
        if !(self.constraint_tolerance > 0.0 && self.likelihood_tolerance > 0.0) {
            return Err(Error::validation("GIS tolerances must be positive"));
        }
        Ok(())
    }
}

/// A trained (or zero-initialized) MaxEnt model.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    categories: Vec<AgeCategory>,
    /// Per feature id: `(category slot, lambda)` for instantiated pairs.
    lambda: Vec<Vec<(u8, f64)>>,
    correction_constant: f64,
    correction_weights: Vec<f64>,
}

/// One `(category, feature, value)` parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lambda {
    pub category: AgeCategory,
    pub feature: u32,
    pub value: f64,
}

impl MaxEntModel {
    /// All parameters zero: predicts the uniform distribution.
    pub fn zeroed(categories: &[AgeCategory], n_features: usize) -> Result<Self> {
        let categories = Self::check_categories(categories)?;
        let k = categories.len();
        Ok(MaxEntModel {
            categories,
            lambda: vec![Vec::new(); n_features],
            correction_constant: 1.0,
            correction_weights: vec![0.0; k],
        })
    }

    fn check_categories(categories: &[AgeCategory]) -> Result<Vec<AgeCategory>> {
        let set: BTreeSet<_> = categories.iter().copied().collect();
        if set.is_empty() || set.len() != categories.len() {
            return Err(Error::validation("model categories must be non-empty and distinct"));
        }
        Ok(set.into_iter().collect())
    }

    /// Reassembles a model from its stored parameters.
    pub fn from_parts(
        categories: &[AgeCategory],
        n_features: usize,
        lambdas: impl IntoIterator<Item = Lambda>,
        correction_constant: f64,
        correction_weights: Vec<f64>,
    ) -> Result<Self> {
        let mut model = Self::zeroed(categories, n_features)?;
        if !(correction_constant.is_finite() && correction_constant > 0.0) {
            return Err(Error::validation("correction constant must be positive and finite"));
        }
        if correction_weights.len() != model.categories.len() || correction_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::validation("one finite correction weight per category is required"));
        }
        model.correction_constant = correction_constant;
        model.correction_weights = correction_weights;
        for l in lambdas {
            let slot = model
                .slot(l.category)
                .ok_or_else(|| Error::validation(format!("parameter for unknown category {}", l.category)))?;
            let row = model
                .lambda
                .get_mut(l.feature as usize)
                .ok_or_else(|| Error::validation(format!("parameter for out-of-range feature {}", l.feature)))?;
            if !l.value.is_finite() {
                return Err(Error::validation(format!("non-finite parameter for feature {}", l.feature)));
            }
            match row.binary_search_by_key(&slot, |&(s, _)| s) {
                Ok(_) => {
                    return Err(Error::validation(format!(
                        "duplicate parameter ({}, {})",
                        l.category, l.feature
                    )))
                }
                Err(pos) => row.insert(pos, (slot, l.value)),
            }
        }
        Ok(model)
    }

    pub fn categories(&self) -> &[AgeCategory] {
        &self.categories
    }

    pub fn n_features(&self) -> usize {
        self.lambda.len()
    }

    pub fn correction_constant(&self) -> f64 {
        self.correction_constant
    }

    pub fn correction_weights(&self) -> &[f64] {
        &self.correction_weights
    }

    fn slot(&self, category: AgeCategory) -> Option<u8> {
        self.categories.binary_search(&category).ok().map(|s| s as u8)
    }

    /// Parameters in (feature, category) order.
    pub fn lambdas(&self) -> impl Iterator<Item = Lambda> + '_ {
        self.lambda.iter().enumerate().flat_map(move |(f, row)| {
            row.iter().map(move |&(slot, value)| Lambda {
                category: self.categories[slot as usize],
                feature: f as u32,
                value,
            })
        })
    }

    pub fn n_parameters(&self) -> usize {
        self.lambda.iter().map(Vec::len).sum()
    }

    /// Unnormalized log-scores per category.
    fn scores(&self, fv: &FeatureVector) -> Vec<f64> {
        let mut scores = vec![0.0; self.categories.len()];
        for &(id, w) in fv.entries() {
            if let Some(row) = self.lambda.get(id as usize) {
                for &(slot, l) in row {
                    scores[slot as usize] += l * w;
                }
            }
        }
        let pad = self.correction_constant - feature_mass(fv);
        for (s, cw) in scores.iter_mut().zip(&self.correction_weights) {
            *s += cw * pad;
        }
        scores
    }
}

/// Softmax with max subtraction; returns the distribution and log-normalizer.
fn softmax(scores: &[f64]) -> (Vec<f64>, f64) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    (exps.iter().map(|e| e / z).collect(), max + z.ln())
}

/// Total feature mass `f#(d)`: the sum of a vector's weights.
pub fn feature_mass(fv: &FeatureVector) -> f64 {
    fv.mass()
}

/// `p(c | d)` for each of the model's categories, in model order.
pub fn predict_proba(model: &MaxEntModel, fv: &FeatureVector) -> Vec<f64> {
    softmax(&model.scores(fv)).0
}

/// Most probable category; ties go to the lowest category.
pub fn predict(model: &MaxEntModel, fv: &FeatureVector) -> AgeCategory {
    let probs = predict_proba(model, fv);
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    model.categories[best]
}

pub type Expectations = BTreeMap<(AgeCategory, u32), f64>;

/// Empirical feature expectations `(1/N) Σ_d f_i(d) 1[label(d) = c]`, for
/// observed pairs only.
pub fn empirical_expectations(data: &[(FeatureVector, AgeCategory)]) -> Expectations {
    let n = data.len() as f64;
    let mut out = Expectations::new();
    for (fv, c) in data {
        for &(id, w) in fv.entries() {
            *out.entry((*c, id)).or_insert(0.0) += w;
        }
    }
    out.values_mut().for_each(|v| *v /= n);
    out
}

/// Model feature expectations `(1/N) Σ_d p(c | d) f_i(d)` for every model
/// category and every feature observed in `data`.
pub fn model_expectations(model: &MaxEntModel, data: &[(FeatureVector, AgeCategory)]) -> Expectations {
    let n = data.len() as f64;
    let mut out = Expectations::new();
    for (fv, _) in data {
        let probs = predict_proba(model, fv);
        for &(id, w) in fv.entries() {
            for (slot, &c) in model.categories.iter().enumerate() {
                *out.entry((c, id)).or_insert(0.0) += probs[slot] * w;
            }
        }
    }
    out.values_mut().for_each(|v| *v /= n);
    out
}

/// `Σ_d log p(label_d | d)`. Labels outside the model's categories have
/// probability zero and yield `-inf`.
pub fn log_likelihood(model: &MaxEntModel, data: &[(FeatureVector, AgeCategory)]) -> f64 {
    data.iter()
        .map(|(fv, c)| match model.slot(*c) {
            Some(slot) => {
                let scores = model.scores(fv);
                let (_, log_z) = softmax(&scores);
                scores[slot as usize] - log_z
            }
            None => f64::NEG_INFINITY,
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ConstraintsSatisfied,
    LikelihoodConverged,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub log_likelihood: f64,
    pub max_residual: f64,
}

/// Per-iteration trace of a GIS run. Record `t` describes the parameters
/// after `t` updates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
}

impl TrainingLog {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("GIS records at least one iteration")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,log_likelihood,max_residual\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.iteration, r.log_likelihood, r.max_residual));
        }
        out
    }
}

/// Trains on the categories present in `data`.
pub fn train_gis(data: &[(FeatureVector, AgeCategory)], config: &GisConfig) -> Result<MaxEntModel> {
    train_gis_logged(data, config).map(|(m, _)| m)
}

pub fn train_gis_logged(
    data: &[(FeatureVector, AgeCategory)],
    config: &GisConfig,
) -> Result<(MaxEntModel, TrainingLog)> {
    let categories: Vec<_> = data.iter().map(|(_, c)| *c).collect::<BTreeSet<_>>().into_iter().collect();
    train_gis_with_categories(data, &categories, config)
}

/// Trains over an explicit category list; every listed category must have
/// at least one document.
pub fn train_gis_with_categories(
    data: &[(FeatureVector, AgeCategory)],
    categories: &[AgeCategory],
    config: &GisConfig,
) -> Result<(MaxEntModel, TrainingLog)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::validation("cannot train a classifier on zero documents"));
    }
    let n_features = data
        .iter()
        .filter_map(|(fv, _)| fv.entries().last().map(|&(id, _)| id as usize + 1))
        .max()
        .unwrap_or(0);
    let mut model = MaxEntModel::zeroed(categories, n_features)?;
    let k = model.categories.len();
    let mut slots = Vec::with_capacity(data.len());
    let mut class_sizes = vec![0usize; k];
    for (_, c) in data {
        let slot = model
            .slot(*c)
            .ok_or_else(|| Error::validation(format!("training label {c} is not among the model categories")))?;
        class_sizes[slot as usize] += 1;
        slots.push(slot);
    }
    if let Some(empty) = class_sizes.iter().position(|&n| n == 0) {
        return Err(Error::validation(format!(
            "category {} has no training documents",
            model.categories[empty]
        )));
    }

    let n = data.len() as f64;
    let masses: Vec<f64> = data.iter().map(|(fv, _)| feature_mass(fv)).collect();
    let c_max = masses.iter().copied().fold(0.0, f64::max);
    if !(c_max > 0.0) {
        return Err(Error::validation("training documents carry no feature mass"));
    }
    model.correction_constant = c_max;

    // Instantiate observed (feature, category) pairs; `index[f][j]` points
    // at the expectation slot of `model.lambda[f][j]`.
    let mut observed: Vec<BTreeSet<u8>> = vec![BTreeSet::new(); n_features];
    for ((fv, _), &slot) in data.iter().zip(&slots) {
        for &(id, _) in fv.entries() {
            observed[id as usize].insert(slot);
        }
    }
    let mut index: Vec<Vec<u32>> = Vec::with_capacity(n_features);
    let mut n_params = 0u32;
    for (f, row) in observed.iter().enumerate() {
        model.lambda[f] = row.iter().map(|&s| (s, 0.0)).collect();
        index.push((n_params..n_params + row.len() as u32).collect());
        n_params += row.len() as u32;
    }
    let n_params = n_params as usize;

    let mut empirical = vec![0.0; n_params + k];
    for (((fv, _), &slot), &mass) in data.iter().zip(&slots).zip(&masses) {
        for &(id, w) in fv.entries() {
            let row = &model.lambda[id as usize];
            let j = row.binary_search_by_key(&slot, |&(s, _)| s).expect("pair instantiated above");
            empirical[index[id as usize][j] as usize] += w;
        }
        if config.use_correction {
            empirical[n_params + slot as usize] += c_max - mass;
        }
    }
    empirical.iter_mut().for_each(|e| *e /= n);
    let correction_active: Vec<bool> = (0..k).map(|s| empirical[n_params + s] > 0.0).collect();

    let docs: Vec<(&FeatureVector, u8, f64)> = data
        .iter()
        .zip(&slots)
        .zip(&masses)
        .map(|(((fv, _), &s), &m)| (fv, s, m))
        .collect();

    let mut records = Vec::new();
    let mut prev_ll = f64::NEG_INFINITY;
    let mut iteration = 0;
    let stop = loop {
        let (ll, expected) = gis_pass(&model, &index, &docs, n_params, k, n);
        if !ll.is_finite() {
            return Err(Error::numeric(format!("log-likelihood became non-finite at GIS iteration {iteration}")));
        }
        let mut max_residual: f64 = 0.0;
        for p in 0..n_params {
            max_residual = max_residual.max((empirical[p] - expected[p]).abs());
        }
        for s in (0..k).filter(|&s| correction_active[s]) {
            max_residual = max_residual.max((empirical[n_params + s] - expected[n_params + s]).abs());
        }
        records.push(IterationRecord {
            iteration,
            log_likelihood: ll,
            max_residual,
        });
        if max_residual < config.constraint_tolerance {
            break StopReason::ConstraintsSatisfied;
        }
        if iteration > 0 && ll - prev_ll < config.likelihood_tolerance {
            break StopReason::LikelihoodConverged;
        }
        if iteration == config.max_iterations {
            break StopReason::MaxIterations;
        }
        prev_ll = ll;

        let step = 1.0 / c_max;
        for (f, row) in model.lambda.iter_mut().enumerate() {
            for (j, (_, l)) in row.iter_mut().enumerate() {
                let p = index[f][j] as usize;
                *l += step * gis_log_ratio(empirical[p], expected[p], iteration)?;
            }
        }
        if config.use_correction {
            for s in (0..k).filter(|&s| correction_active[s]) {
                model.correction_weights[s] +=
                    step * gis_log_ratio(empirical[n_params + s], expected[n_params + s], iteration)?;
            }
        }
        iteration += 1;
    };
    Ok((model, TrainingLog { records, stop }))
}

fn gis_log_ratio(empirical: f64, expected: f64, iteration: usize) -> Result<f64> {
    let r = (empirical / expected).ln();
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::numeric(format!(
            "GIS update undefined at iteration {iteration} (empirical {empirical}, model {expected})"
        )))
    }
}

/// One sweep over the data: log-likelihood and model expectations for all
/// instantiated parameters followed by the `k` correction features.
fn gis_pass(
    model: &MaxEntModel,
    index: &[Vec<u32>],
    docs: &[(&FeatureVector, u8, f64)],
    n_params: usize,
    k: usize,
    n: f64,
) -> (f64, Vec<f64>) {
    let partials: Vec<(f64, Vec<f64>)> = docs
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut ll = 0.0;
            let mut acc = vec![0.0; n_params + k];
            for &(fv, slot, mass) in chunk {
                let scores = model.scores(fv);
                let (probs, log_z) = softmax(&scores);
                ll += scores[slot as usize] - log_z;
                for &(id, w) in fv.entries() {
                    for (j, &(s, _)) in model.lambda[id as usize].iter().enumerate() {
                        acc[index[id as usize][j] as usize] += probs[s as usize] * w;
                    }
                }
                let pad = model.correction_constant - mass;
                for s in 0..k {
                    acc[n_params + s] += probs[s] * pad;
                }
            }
            (ll, acc)
        })
        .collect();
    let mut ll = 0.0;
    let mut expected = vec![0.0; n_params + k];
    for (part_ll, acc) in partials {
        ll += part_ll;
        for (e, a) in expected.iter_mut().zip(acc) {
            *e += a;
        }
    }
    expected.iter_mut().for_each(|e| *e /= n);
    (ll, expected)
}
