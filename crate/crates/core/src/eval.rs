//! Cross-validation folds, F1 scores, paired t-tests and relative errors.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::rng::rng_from_seed;
use crate::{Error, Result};

/// Fold index per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub folds: Vec<usize>,
}

impl FoldAssignment {
    /// (training rows, test rows) for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.folds.len()).partition(|&r| self.folds[r] != f)
    }
}

/// Rows of each class are shuffled with `seed` and dealt round-robin to the
/// folds; the dealing position carries over from one class to the next
/// (classes in increasing label order) so fold sizes stay balanced too.
pub fn stratified_folds(labels: &[u32], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 folds, got {k}")));
    }
    let mut classes: Vec<u32> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut rng = rng_from_seed(seed);
    let mut folds = vec![0usize; labels.len()];
    let mut next = 0usize;
    for class in classes {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == class).collect();
        if rows.len() < k {
            return Err(Error::ClassTooSmall {
                class,
                count: rows.len(),
                folds: k,
            });
        }
        rows.shuffle(&mut rng);
        for r in rows {
            folds[r] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, folds })
}

/// Per-class one-vs-rest F1 scores and their unweighted (macro) mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Row {
    pub per_class: Vec<f64>,
    pub overall: f64,
}

pub fn f1_scores(predicted: &[u32], actual: &[u32], classes: &[u32]) -> Result<F1Row> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    let per_class: Vec<f64> = classes
        .iter()
        .map(|&c| {
            let tp = predicted
                .iter()
                .zip(actual)
                .filter(|&(&p, &a)| p == c && a == c)
                .count() as f64;
            let pred_pos = predicted.iter().filter(|&&p| p == c).count() as f64;
            let actual_pos = actual.iter().filter(|&&a| a == c).count() as f64;
            // 2PR / (P + R) == 2tp / (pred_pos + actual_pos)
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (pred_pos + actual_pos)
            }
        })
        .collect();
    let overall = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().sum::<f64>() / per_class.len() as f64
    };
    Ok(F1Row { per_class, overall })
}

/// Fold-by-fold F1 rows with column means and sample standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub classes: Vec<u32>,
    pub folds: Vec<F1Row>,
}

impl ScoreTable {
    pub fn new(classes: Vec<u32>) -> Self {
        ScoreTable {
            classes,
            folds: Vec::new(),
        }
    }

    /// Column `c` across folds; `c == classes.len()` is the overall column.
    pub fn column(&self, c: usize) -> Vec<f64> {
        self.folds
            .iter()
            .map(|r| {
                if c == self.classes.len() {
                    r.overall
                } else {
                    r.per_class[c]
                }
            })
            .collect()
    }

    pub fn means(&self) -> Vec<f64> {
        (0..=self.classes.len()).map(|c| mean(&self.column(c))).collect()
    }

    pub fn sds(&self) -> Vec<f64> {
        (0..=self.classes.len()).map(|c| sample_sd(&self.column(c))).collect()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub mean_diff: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub df: usize,
}

/// Two-sided paired t-test on `d = b - a`. The Student-t tail comes from
/// the regularized incomplete beta function (continued-fraction evaluation).
/// If every difference is identical the statistic is undefined: `p = 1`
/// when they are all zero and `p = 0` otherwise.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooFewFolds(n));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mean_diff = mean(&d);
    let sd = sample_sd(&d);
    let df = n - 1;
    if sd == 0.0 || d.iter().all(|&x| x == d[0]) {
        let (t, p) = if mean_diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(mean_diff), 0.0)
        };
        return Ok(TTestResult {
            mean_diff,
            t_statistic: t,
            p_value: p,
            df,
        });
    }
    let t = mean_diff / (sd / (n as f64).sqrt());
    Ok(TTestResult {
        mean_diff,
        t_statistic: t,
        p_value: two_sided_p(t, df),
        df,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn two_sided_p(t: f64, df: usize) -> f64 {
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("df >= 1");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeError {
    pub mean: f64,
    /// Rows skipped because the actual value was zero.
    pub skipped: usize,
}

pub fn mean_relative_error(predicted: &[f64], actual: &[f64]) -> Result<RelativeError> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: predicted.len(),
            right: actual.len(),
        });
    }
    let errs: Vec<f64> = predicted
        .iter()
        .zip(actual)
        .filter(|(_, &a)| a != 0.0)
        .map(|(&p, &a)| (p - a).abs() / a.abs())
        .collect();
    Ok(RelativeError {
        mean: mean(&errs),
        skipped: actual.len() - errs.len(),
    })
}

/// Number of enclosed holes in a handwritten digit.
pub fn hole_label_map(digit: u32) -> Result<u32> {
    match digit {
        1 | 2 | 3 | 5 | 7 => Ok(0),
        0 | 4 | 6 | 9 => Ok(1),
        8 => Ok(2),
        d => Err(Error::BadDigit(d)),
    }
}
