//! LASSO linear regression of exact age, trained by stochastic gradient
//! descent with soft-threshold shrinkage.
//!
//! Objective: `(1/2N) Σ (y - w·x - b)² + α ‖w‖₁`. Each step takes a gradient
//! step on one example's squared loss with rate `lr/√t`, then shrinks every
//! weight toward zero by `lr/√t · α`. The shrinkage is applied lazily: a
//! running total of the shrink amount is kept and each weight catches up
//! when it is next read, which is equivalent because consecutive soft
//! thresholds compose additively.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{MAX_AGE, MIN_AGE};
use crate::error::{Error, Result};
use crate::eval;
use crate::features::FeatureVector;

pub const DEFAULT_GRID: [f64; 6] = [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625];
pub const MIN_PREDICTION: f64 = 10.0;
pub const MAX_PREDICTION: f64 = 100.0;

/// A sparse row of a design matrix, sorted by feature id.
pub trait SparseRow {
    fn entries(&self) -> &[(u32, f64)];
}

impl SparseRow for FeatureVector {
    fn entries(&self) -> &[(u32, f64)] {
        FeatureVector::entries(self)
    }
}

impl SparseRow for Vec<(u32, f64)> {
    fn entries(&self) -> &[(u32, f64)] {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub epochs: usize,
    pub learning_rates: Vec<f64>,
    pub reg_params: Vec<f64>,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            epochs: 100,
            learning_rates: DEFAULT_GRID.to_vec(),
            reg_params: DEFAULT_GRID.to_vec(),
            seed: 0,
            validation_fraction: 0.1,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::validation("SGD epochs must be at least 1"));
        }
        if self.learning_rates.is_empty() || self.reg_params.is_empty() {
            return Err(Error::validation("hyperparameter grids must be non-empty"));
        }
        if self.learning_rates.iter().chain(&self.reg_params).any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::validation("hyperparameter grid values must be positive and finite"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::validation("validation_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub reg_param: f64,
    pub learning_rate: f64,
}

impl LassoModel {
    /// Unclamped `w·x + b`; ids beyond the weight vector contribute nothing.
    pub fn raw_predict(&self, x: &(impl SparseRow + ?Sized)) -> f64 {
        let mut dot = 0.0;
        for &(id, v) in x.entries() {
            if let Some(w) = self.weights.get(id as usize) {
                dot += w * v;
            }
        }
        dot + self.intercept
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Nonzero weights in id order.
    pub fn nonzero_weights(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, &w)| (i as u32, w))
    }
}

/// `clamp(w·x + b, 10, 100)`.
pub fn predict_age(model: &LassoModel, x: &(impl SparseRow + ?Sized)) -> f64 {
    model.raw_predict(x).clamp(MIN_PREDICTION, MAX_PREDICTION)
}

/// Full training objective with unclamped predictions.
pub fn objective<R: SparseRow>(model: &LassoModel, data: &[(R, f64)]) -> f64 {
    let n = data.len() as f64;
    let sq: f64 = data.iter().map(|(x, y)| (y - model.raw_predict(x)).powi(2)).sum();
    sq / (2.0 * n) + model.reg_param * model.l1_norm()
}

/// Objective value after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdLog {
    pub objective: Vec<f64>,
}

fn check_data<R: SparseRow>(data: &[(R, f64)]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::validation("cannot train a regressor on zero documents"));
    }
    if let Some((i, (_, y))) = data
        .iter()
        .enumerate()
        .find(|(_, (_, y))| !(y.is_finite() && *y >= MIN_AGE as f64 && *y <= MAX_AGE as f64))
    {
        return Err(Error::validation(format!(
            "regression target {y} at row {i} is outside [{MIN_AGE}, {MAX_AGE}]"
        )));
    }
    Ok(())
}

pub fn train_lasso_sgd<R: SparseRow>(data: &[(R, f64)], lr: f64, alpha: f64, config: &SgdConfig) -> Result<LassoModel> {
    train_lasso_sgd_logged(data, lr, alpha, config).map(|(m, _)| m)
}

pub fn train_lasso_sgd_logged<R: SparseRow>(
    data: &[(R, f64)],
    lr: f64,
    alpha: f64,
    config: &SgdConfig,
) -> Result<(LassoModel, SgdLog)> {
    check_data(data)?;
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::validation(format!("learning rate {lr} must be positive")));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::validation(format!("regularization {alpha} must be non-negative")));
    }
    if config.epochs == 0 {
        return Err(Error::validation("SGD epochs must be at least 1"));
    }
    let n_features = data
        .iter()
        .filter_map(|(x, _)| x.entries().last().map(|&(id, _)| id as usize + 1))
        .max()
        .unwrap_or(0);
    let n = data.len() as f64;
    let mut model = LassoModel {
        weights: vec![0.0; n_features],
        intercept: data.iter().map(|(_, y)| y).sum::<f64>() / n,
        reg_param: alpha,
        learning_rate: lr,
    };
    // total shrink issued so far, and the amount each weight has absorbed
    let mut issued = 0.0f64;
    let mut absorbed = vec![0.0f64; n_features];
    let catch_up = |w: &mut f64, absorbed: &mut f64, issued: f64| {
        let pending = issued - *absorbed;
        if pending > 0.0 {
            *w = w.signum() * (w.abs() - pending).max(0.0);
        }
        *absorbed = issued;
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = SgdLog {
        objective: Vec::with_capacity(config.epochs),
    };
    let mut step = 0u64;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let rate = lr / (step as f64).sqrt();
            let (x, y) = &data[i];
            let mut pred = model.intercept;
            for &(id, v) in x.entries() {
                let j = id as usize;
                catch_up(&mut model.weights[j], &mut absorbed[j], issued);
                pred += model.weights[j] * v;
            }
            let residual = y - pred;
            for &(id, v) in x.entries() {
                model.weights[id as usize] += rate * residual * v;
            }
            model.intercept += rate * residual;
            issued += rate * alpha;
        }
        for (w, a) in model.weights.iter_mut().zip(absorbed.iter_mut()) {
            catch_up(w, a, issued);
        }
        let obj = objective(&model, data);
        if !obj.is_finite() || model.weights.iter().any(|w| !w.is_finite()) || !model.intercept.is_finite() {
            return Err(Error::numeric(format!(
                "regression loss became non-finite in epoch {epoch} (lr {lr}, alpha {alpha})"
            )));
        }
        log.objective.push(obj);
    }
    Ok((model, log))
}

/// Validation MAE of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub learning_rate: f64,
    pub reg_param: f64,
    pub validation_mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneReport {
    pub cells: Vec<GridCell>,
    pub chosen: GridCell,
}

fn cell_seed(master: u64, index: usize) -> u64 {
    // splitmix64 of (master, index)
    let mut z = master ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Grid search over `learning_rates × reg_params`, scored by MAE on a
/// held-out fraction, then a refit of the winner on all of `data`.
pub fn tune<R: SparseRow + Sync + Clone>(data: &[(R, f64)], config: &SgdConfig) -> Result<LassoModel> {
    tune_with_report(data, config).map(|(m, _)| m)
}

pub fn tune_with_report<R: SparseRow + Sync + Clone>(
    data: &[(R, f64)],
    config: &SgdConfig,
) -> Result<(LassoModel, TuneReport)> {
    config.validate()?;
    check_data(data)?;
    if data.len() < 2 {
        return Err(Error::validation("tuning needs at least two documents for a validation split"));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let n_val = ((data.len() as f64 * config.validation_fraction).round() as usize).clamp(1, data.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    let mut val_idx = val_idx.to_vec();
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    let train: Vec<(R, f64)> = train_idx.iter().map(|&i| data[i].clone()).collect();
    let val: Vec<&(R, f64)> = val_idx.iter().map(|&i| &data[i]).collect();
    let actual: Vec<f64> = val.iter().map(|(_, y)| *y).collect();

    let grid: Vec<(f64, f64)> = config
        .learning_rates
        .iter()
        .flat_map(|&lr| config.reg_params.iter().map(move |&a| (lr, a)))
        .collect();
    let cells = grid
        .par_iter()
        .enumerate()
        .map(|(i, &(lr, alpha))| {
            let cell_config = SgdConfig {
                seed: cell_seed(config.seed, i),
                ..config.clone()
            };
            let model = train_lasso_sgd(&train, lr, alpha, &cell_config)?;
            let predicted: Vec<f64> = val.iter().map(|(x, _)| predict_age(&model, x)).collect();
            Ok(GridCell {
                learning_rate: lr,
                reg_param: alpha,
                validation_mae: eval::mae(&actual, &predicted)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let better = |a: &GridCell, b: &GridCell| {
        a.validation_mae < b.validation_mae
            || (a.validation_mae == b.validation_mae
                && (a.reg_param > b.reg_param || (a.reg_param == b.reg_param && a.learning_rate < b.learning_rate)))
    };
    let mut chosen = cells[0];
    for cell in &cells[1..] {
        if better(cell, &chosen) {
            chosen = *cell;
        }
    }
    let model = train_lasso_sgd(data, chosen.learning_rate, chosen.reg_param, config)?;
    Ok((model, TuneReport { cells, chosen }))
}
