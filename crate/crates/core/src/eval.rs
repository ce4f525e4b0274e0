//! Classification and regression metrics and report rendering.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::AgeCategory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub category: AgeCategory,
    /// Gold documents of this category.
    pub count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub baseline: f64,
    pub total: usize,
    /// One entry per category, in category order.
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][predicted]`, indexed by category ordinal.
    pub confusion: [[usize; 6]; 6],
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_report(gold: &[AgeCategory], pred: &[AgeCategory]) -> Result<ClassificationReport> {
    if gold.len() != pred.len() {
        return Err(Error::validation(format!(
            "gold and predicted label counts differ ({} vs {})",
            gold.len(),
            pred.len()
        )));
    }
    if gold.is_empty() {
        return Err(Error::validation("cannot evaluate zero predictions"));
    }
    let mut confusion = [[0usize; 6]; 6];
    for (g, p) in gold.iter().zip(pred) {
        confusion[g.ordinal()][p.ordinal()] += 1;
    }
    let per_class = AgeCategory::ALL
        .iter()
        .map(|&c| {
            let k = c.ordinal();
            let tp = confusion[k][k];
            let gold_k: usize = confusion[k].iter().sum();
            let pred_k: usize = confusion.iter().map(|row| row[k]).sum();
            let precision = ratio(tp, pred_k);
            let recall = ratio(tp, gold_k);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                category: c,
                count: gold_k,
                precision,
                recall,
                f1,
            }
        })
        .collect();
    let trace: usize = (0..6).map(|k| confusion[k][k]).sum();
    Ok(ClassificationReport {
        accuracy: ratio(trace, gold.len()),
        baseline: majority_baseline(gold)?,
        total: gold.len(),
        per_class,
        confusion,
    })
}

/// Accuracy of always predicting the most frequent gold category.
pub fn majority_baseline(gold: &[AgeCategory]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::validation("majority baseline of an empty label list"));
    }
    let mut counts = [0usize; 6];
    for g in gold {
        counts[g.ordinal()] += 1;
    }
    Ok(ratio(*counts.iter().max().expect("six counts"), gold.len()))
}

fn check_pairs(actual: &[f64], predicted: &[f64], min_len: usize) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::validation(format!(
            "actual and predicted lengths differ ({} vs {})",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.len() < min_len {
        return Err(Error::validation(format!("need at least {min_len} pairs, got {}", actual.len())));
    }
    Ok(())
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pairs(actual, predicted, 1)?;
    let total: f64 = actual.iter().zip(predicted).map(|(a, p)| (a - p).abs()).sum();
    Ok(total / actual.len() as f64)
}

/// Product-moment correlation; constant input is an error.
pub fn pearson(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_pairs(actual, predicted, 2)?;
    let n = actual.len() as f64;
    let ma = actual.iter().sum::<f64>() / n;
    let mp = predicted.iter().sum::<f64>() / n;
    let (mut sap, mut saa, mut spp) = (0.0, 0.0, 0.0);
    for (a, p) in actual.iter().zip(predicted) {
        let (da, dp) = (a - ma, p - mp);
        sap += da * dp;
        saa += da * da;
        spp += dp * dp;
    }
    if saa == 0.0 || spp == 0.0 {
        return Err(Error::numeric("Pearson correlation is undefined for constant input"));
    }
    Ok((sap / (saa.sqrt() * spp.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionReport {
    pub mae: f64,
    pub pearson_r: f64,
    pub n: usize,
    #[serde(skip)]
    pub pairs: Vec<(f64, f64)>,
}

pub fn regression_report(pairs: Vec<(f64, f64)>) -> Result<RegressionReport> {
    let (actual, predicted): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    Ok(RegressionReport {
        mae: mae(&actual, &predicted)?,
        pearson_r: pearson(&actual, &predicted)?,
        n: pairs.len(),
        pairs,
    })
}

/// CSV with header `actual,predicted,error`, where error = predicted - actual.
pub fn write_scatter(out: &mut impl Write, pairs: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(out, "actual,predicted,error")?;
    for &(a, p) in pairs {
        writeln!(out, "{a},{p},{}", p - a)?;
    }
    Ok(())
}

pub fn scatter_report(pairs: &[(f64, f64)], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_scatter(&mut buf, pairs).expect("writing to memory");
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_scatter(reader: impl BufRead, path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if i == 0 {
            if line != "actual,predicted,error" {
                return Err(parse_err(format!("unexpected header {line:?}")));
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| parse_err(format!("{s:?}: {e}")));
        pairs.push((num(fields[0])?, num(fields[1])?));
    }
    Ok(pairs)
}

impl ClassificationReport {
    /// Aligned per-class table followed by accuracy and baseline.
    pub fn to_table(&self, title: &str) -> String {
        let mut s = String::new();
        writeln!(s, "{title}").unwrap();
        writeln!(s, "{:<8} {:>7} {:>9} {:>9} {:>9}", "class", "count", "precision", "recall", "f1").unwrap();
        for m in &self.per_class {
            writeln!(
                s,
                "{:<8} {:>7} {:>9.3} {:>9.3} {:>9.3}",
                m.category.label(),
                m.count,
                m.precision,
                m.recall,
                m.f1
            )
            .unwrap();
        }
        writeln!(s, "accuracy {:.3}", self.accuracy).unwrap();
        writeln!(s, "baseline {:.3}", self.baseline).unwrap();
        writeln!(s, "documents {}", self.total).unwrap();
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,count,precision,recall,f1\n");
        for m in &self.per_class {
            writeln!(s, "{},{},{},{},{}", m.category.label(), m.count, m.precision, m.recall, m.f1).unwrap();
        }
        writeln!(s, "accuracy,{},,,", self.accuracy).unwrap();
        writeln!(s, "baseline,{},,,", self.baseline).unwrap();
        s
    }

    /// Gold categories as rows, predictions as columns.
    pub fn confusion_csv(&self) -> String {
        let mut s = String::from("gold\\predicted");
        for c in AgeCategory::ALL {
            write!(s, ",{}", c.label()).unwrap();
        }
        s.push('\n');
        for g in AgeCategory::ALL {
            s.push_str(g.label());
            for p in AgeCategory::ALL {
                write!(s, ",{}", self.confusion[g.ordinal()][p.ordinal()]).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

impl RegressionReport {
    pub fn to_table(&self, title: &str) -> String {
        format!(
            "{title}\n{:<10} {:>8}\n{:<10} {:>8.3}\n{:<10} {:>8.3}\n{:<10} {:>8}\n",
            "metric", "value", "pearson_r", self.pearson_r, "mae", self.mae, "n", self.n
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use AgeCategory::*;

    #[test]
    fn perfect_predictions() {
        let gold = vec![UpTo17, From18To24, From25To34, From18To24];
        let r = classification_report(&gold, &gold).unwrap();
        assert_eq!(r.accuracy, 1.0);
        for m in r.per_class.iter().filter(|m| m.count > 0) {
            assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        }
        let absent = &r.per_class[From65.ordinal()];
        assert_eq!((absent.precision, absent.recall, absent.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_built_three_class_confusion() {
        // gold A: 3 docs (2 right, 1 -> B); gold B: 2 (1 right, 1 -> C); gold C: 1 (-> A)
        let (a, b, c) = (UpTo17, From18To24, From25To34);
        let gold = vec![a, a, a, b, b, c];
        let pred = vec![a, a, b, b, c, a];
        let r = classification_report(&gold, &pred).unwrap();
        let m = |k: AgeCategory| r.per_class[k.ordinal()];
        assert_eq!(m(a).precision, 2.0 / 3.0);
        assert_eq!(m(a).recall, 2.0 / 3.0);
        assert_eq!(m(b).precision, 0.5);
        assert_eq!(m(b).recall, 0.5);
        assert_eq!(m(c).precision, 0.0);
        assert_eq!(m(c).recall, 0.0);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.confusion[a.ordinal()][b.ordinal()], 1);
        assert_eq!(r.baseline, 0.5);
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(classification_report(&[UpTo17], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn baselines() {
        assert_eq!(majority_baseline(&[From50To64; 4]).unwrap(), 1.0);
        assert!((majority_baseline(&AgeCategory::ALL).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let mut skewed = vec![From18To24; 33];
        skewed.extend([UpTo17; 20]);
        skewed.extend([From25To34; 27]);
        skewed.extend([From35To49; 15]);
        skewed.extend([From50To64; 5]);
        assert!((majority_baseline(&skewed).unwrap() - 0.33).abs() < 1e-12);
    }

    #[test]
    fn mae_and_pearson_values() {
        assert_eq!(mae(&[10.0, 20.0], &[12.0, 18.0]).unwrap(), 2.0);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let a = [20.0, 30.0, 41.0, 55.0];
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = a.iter().map(|x| 100.0 - x).collect();
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&a, &[3.0; 4]).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn fixed_pearson_sample() {
        let a = [18.0, 25.0, 31.0, 44.0, 52.0, 23.0, 37.0, 61.0, 29.0, 48.0];
        let p = [22.0, 27.0, 30.0, 39.0, 47.0, 26.0, 35.0, 50.0, 33.0, 41.0];
        // two-pass oracle with explicit variance and covariance
        let n = 10.0;
        let (ma, mp) = (a.iter().sum::<f64>() / n, p.iter().sum::<f64>() / n);
        let cov: f64 = (0..10).map(|i| (a[i] - ma) * (p[i] - mp)).sum::<f64>() / (n - 1.0);
        let sa = ((0..10).map(|i| (a[i] - ma).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let sp = ((0..10).map(|i| (p[i] - mp).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((pearson(&a, &p).unwrap() - cov / (sa * sp)).abs() < 1e-12);
    }

    #[test]
    fn scatter_round_trip() {
        let mut buf = Vec::new();
        write_scatter(&mut buf, &[]).unwrap();
        assert_eq!(buf, b"actual,predicted,error\n");
        let mut buf = Vec::new();
        write_scatter(&mut buf, &[(30.0, 35.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "actual,predicted,error\n30,35,5\n");

        let pairs = vec![(18.0, 21.25), (64.0, 47.125), (33.0, 33.0)];
        let mut buf = Vec::new();
        write_scatter(&mut buf, &pairs).unwrap();
        let back = read_scatter(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, pairs);
    }

    fn category() -> impl Strategy<Value = AgeCategory> {
        (0usize..6).prop_map(|i| AgeCategory::from_ordinal(i).unwrap())
    }

    proptest! {
        #[test]
        fn accuracy_is_weighted_recall(pairs in proptest::collection::vec((category(), category()), 1..60)) {
            let (gold, pred): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let r = classification_report(&gold, &pred).unwrap();
            let weighted: f64 = r.per_class.iter().map(|m| m.count as f64 * m.recall).sum::<f64>() / gold.len() as f64;
            prop_assert!((weighted - r.accuracy).abs() < 1e-12);
            prop_assert_eq!(r.per_class.iter().map(|m| m.count).sum::<usize>(), gold.len());
        }

        #[test]
        fn pearson_affine_invariance(v in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..30), scale in 0.1f64..10.0, shift in -50.0f64..50.0) {
            let (a, p): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            if let Ok(r) = pearson(&a, &p) {
                let scaled: Vec<f64> = p.iter().map(|x| scale * x + shift).collect();
                let neg: Vec<f64> = p.iter().map(|x| -scale * x + shift).collect();
                prop_assert!((pearson(&a, &scaled).unwrap() - r).abs() < 1e-9);
                prop_assert!((pearson(&a, &neg).unwrap() + r).abs() < 1e-9);
            }
        }

        #[test]
        fn metrics_are_permutation_invariant(v in proptest::collection::vec((0.0f64..100.0, 0.0f64..100.0), 3..30)) {
            let (a, p): (Vec<f64>, Vec<f64>) = v.iter().copied().unzip();
            let (ra, rp): (Vec<f64>, Vec<f64>) = v.iter().rev().copied().unzip();
            prop_assert!((mae(&a, &p).unwrap() - mae(&ra, &rp).unwrap()).abs() < 1e-9);
            if let (Ok(x), Ok(y)) = (pearson(&a, &p), pearson(&ra, &rp)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
