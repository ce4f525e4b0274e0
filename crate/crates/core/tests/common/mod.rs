//! Independent reference implementations used as test oracles. None of
//! these call into the library's numeric code.

#![allow(dead_code)]

use agepred::AgeCategory;

/// Dense MaxEnt instance for the likelihood-maximization oracle. Documents are
/// dense feature rows; `params[f][c]` says whether the pair carries a
/// parameter; `correction[c]` whether category `c` has a correction weight.
pub struct DenseInstance {
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub k: usize,
    pub params: Vec<Vec<bool>>,
    pub correction: Vec<bool>,
    pub c: f64,
}

impl DenseInstance {
    /// Parameters as in GIS: observed (feature, label) pairs, correction
    /// features for categories with positive empirical padding.
    pub fn new(x: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> Self {
        let nf = x[0].len();
        let mut params = vec![vec![false; k]; nf];
        for (row, &y) in x.iter().zip(&labels) {
            for (f, &v) in row.iter().enumerate() {
                if v > 0.0 {
                    params[f][y] = true;
                }
            }
        }
        let mass: Vec<f64> = x.iter().map(|r| r.iter().sum()).collect();
        let c = mass.iter().copied().fold(0.0, f64::max);
        let mut correction = vec![false; k];
        for (m, &y) in mass.iter().zip(&labels) {
            if c - m > 0.0 {
                correction[y] = true;
            }
        }
        DenseInstance {
            x,
            labels,
            k,
            params,
            correction,
            c,
        }
    }

    fn n_features(&self) -> usize {
        self.x[0].len()
    }

    /// Flattened parameter layout: pairs in (feature, class) order, then
    /// correction weights.
    fn layout(&self) -> Vec<(Option<usize>, usize)> {
        let mut out = Vec::new();
        for f in 0..self.n_features() {
            for c in 0..self.k {
                if self.params[f][c] {
                    out.push((Some(f), c));
                }
            }
        }
        for c in 0..self.k {
            if self.correction[c] {
                out.push((None, c));
            }
        }
        out
    }

    fn feature_value(&self, d: usize, slot: (Option<usize>, usize), class: usize) -> f64 {
        if slot.1 != class {
            return 0.0;
        }
        match slot.0 {
            Some(f) => self.x[d][f],
            None => self.c - self.x[d].iter().sum::<f64>(),
        }
    }

    fn log_probs(&self, theta: &[f64], layout: &[(Option<usize>, usize)], d: usize) -> Vec<f64> {
        let scores: Vec<f64> = (0..self.k)
            .map(|c| {
                layout
                    .iter()
                    .zip(theta)
                    .map(|(&slot, &t)| t * self.feature_value(d, slot, c))
                    .sum()
            })
            .collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
        scores.iter().map(|s| s - lse).collect()
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let layout = self.layout();
        (0..self.x.len()).map(|d| self.log_probs(theta, &layout, d)[self.labels[d]]).sum()
    }

    /// Gradient and negated Hessian of the log-likelihood.
    fn derivatives(&self, theta: &[f64], layout: &[(Option<usize>, usize)]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = layout.len();
        let mut g = vec![0.0; n];
        let mut h = vec![vec![0.0; n]; n];
        for d in 0..self.x.len() {
            let p: Vec<f64> = self.log_probs(theta, layout, d).iter().map(|v| v.exp()).collect();
            let f: Vec<Vec<f64>> = (0..self.k)
                .map(|c| layout.iter().map(|&slot| self.feature_value(d, slot, c)).collect())
                .collect();
            let mean: Vec<f64> = (0..n).map(|j| (0..self.k).map(|c| p[c] * f[c][j]).sum()).collect();
            for j in 0..n {
                g[j] += f[self.labels[d]][j] - mean[j];
                for l in 0..n {
                    let second: f64 = (0..self.k).map(|c| p[c] * f[c][j] * f[c][l]).sum();
                    h[j][l] += second - mean[j] * mean[l];
                }
            }
        }
        (g, h)
    }

    /// Maximizes the log-likelihood by damped Newton ascent with
    /// backtracking; returns the optimum value.
    pub fn maximize(&self) -> f64 {
        let layout = self.layout();
        let n = layout.len();
        let mut theta = vec![0.0; n];
        let mut ll = self.log_likelihood(&theta);
        for _ in 0..10_000 {
            let (g, mut h) = self.derivatives(&theta, &layout);
            let gnorm2: f64 = g.iter().map(|v| v * v).sum();
            if gnorm2.sqrt() < 1e-11 {
                break;
            }
            let trace: f64 = (0..n).map(|j| h[j][j]).sum();
            for (j, row) in h.iter_mut().enumerate() {
                row[j] += 1e-9 * trace.max(1e-12);
            }
            let mut dir = solve(h, g.clone());
            if dir.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() <= 0.0 {
                dir = g.clone();
            }
            let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
            let mut step = 1.0;
            loop {
                let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, di)| t + step * di).collect();
                let cand_ll = self.log_likelihood(&cand);
                if cand_ll >= ll + 1e-4 * step * slope {
                    theta = cand;
                    ll = cand_ll;
                    break;
                }
                step *= 0.5;
                if step < 1e-16 {
                    return ll;
                }
            }
        }
        ll
    }
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Pearson chi-squared via observed vs expected cell counts.
pub fn chi2_expected_form(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let cells = [[a as f64, b as f64], [c as f64, d as f64]];
    let n: f64 = cells.iter().flatten().sum();
    let rows = [cells[0][0] + cells[0][1], cells[1][0] + cells[1][1]];
    let cols = [cells[0][0] + cells[1][0], cells[0][1] + cells[1][1]];
    if rows.contains(&0.0) || cols.contains(&0.0) {
        return 0.0;
    }
    let mut x = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let e = rows[i] * cols[j] / n;
            x += (cells[i][j] - e).powi(2) / e;
        }
    }
    x
}

pub fn soft_threshold(w: f64, t: f64) -> f64 {
    if w > t {
        w - t
    } else if w < -t {
        w + t
    } else {
        0.0
    }
}

/// 16-row Sylvester-Hadamard matrix without its constant column, truncated
/// to 8 columns: (1/16) XᵀX = I and every column sums to zero.
pub fn hadamard_design() -> Vec<Vec<f64>> {
    (0..16usize)
        .map(|i| {
            (1..9usize)
                .map(|j| if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

pub fn mae_oracle(a: &[f64], p: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in (0..a.len()).rev() {
        total += if a[i] > p[i] { a[i] - p[i] } else { p[i] - a[i] };
    }
    total / a.len() as f64
}

/// Sample covariance over the product of sample standard deviations.
pub fn pearson_oracle(a: &[f64], p: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mp = p.iter().sum::<f64>() / n;
    let cov = a.iter().zip(p).map(|(x, y)| (x - ma) * (y - mp)).sum::<f64>() / (n - 1.0);
    let sa = (a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let sp = (p.iter().map(|y| (y - mp).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    cov / (sa * sp)
}

/// (precision, recall) of `class` by explicit TP/FP/FN tallies.
pub fn precision_recall_oracle(gold: &[AgeCategory], pred: &[AgeCategory], class: AgeCategory) -> (f64, f64) {
    let (mut tp, mut fp, mut fneg) = (0u32, 0u32, 0u32);
    for (g, p) in gold.iter().zip(pred) {
        match (*g == class, *p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fneg += 1,
            _ => {}
        }
    }
    let div = |x: u32, y: u32| if y == 0 { 0.0 } else { x as f64 / y as f64 };
    (div(tp, tp + fp), div(tp, tp + fneg))
}
