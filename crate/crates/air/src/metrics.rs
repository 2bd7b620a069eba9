//! Evaluation and diagnostics: phase accuracies, streaming area under the
//! accuracy curve, confusion matrices, per-class weight norms and per-class
//! mean squared error.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::Weights;
use crate::error::{AirError, Result};
use crate::features::LabeledFeature;

/// Evaluation summary for one run. `a_last_macro` averages per-class recalls
/// in the final phase; `a_last_micro` is plain sample accuracy there; `a_auc`
/// is present for streaming evaluations only.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub per_phase_acc: Vec<f64>,
    pub a_avg: f64,
    pub a_last_macro: f64,
    pub a_last_micro: f64,
    pub a_auc: Option<f64>,
    pub confusion: Vec<Vec<u64>>,
    pub weight_norms: Vec<f64>,
    pub per_class_mse: Vec<f64>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_labels(w: &Weights, data: &[LabeledFeature], what: &'static str) -> Result<()> {
    if data.is_empty() {
        return Err(AirError::EmptyInput(what));
    }
    for item in data {
        if (item.label as usize) >= w.num_classes() {
            return Err(AirError::InvalidParameter(format!(
                "{what}: label {} out of range for a {}-class classifier",
                item.label,
                w.num_classes()
            )));
        }
    }
    Ok(())
}

/// Accuracy of `w` on a test set. With `macro_avg` the result is the
/// unweighted mean of per-class recalls (classes absent from the test set are
/// excluded); otherwise plain sample accuracy.
pub fn phase_accuracy(w: &Weights, test: &[LabeledFeature], macro_avg: bool) -> Result<f64> {
    check_labels(w, test, "phase_accuracy")?;
    let mut correct: BTreeMap<u32, u64> = BTreeMap::new();
    let mut totals: BTreeMap<u32, u64> = BTreeMap::new();
    for item in test {
        *totals.entry(item.label).or_insert(0) += 1;
        if w.predict(&item.x)? == item.label {
            *correct.entry(item.label).or_insert(0) += 1;
        }
    }
    if macro_avg {
        let recalls: Vec<f64> = totals
            .iter()
            .map(|(label, &n)| *correct.get(label).unwrap_or(&0) as f64 / n as f64)
            .collect();
        Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
    } else {
        let hits: u64 = correct.values().sum();
        Ok(hits as f64 / test.len() as f64)
    }
}

/// Confusion matrix with true labels as rows and predictions as columns.
pub fn confusion_matrix(w: &Weights, test: &[LabeledFeature]) -> Result<Vec<Vec<u64>>> {
    check_labels(w, test, "confusion_matrix")?;
    let c = w.num_classes();
    let mut matrix = vec![vec![0u64; c]; c];
    for item in test {
        let pred = w.predict(&item.x)? as usize;
        matrix[item.label as usize][pred] += 1;
    }
    Ok(matrix)
}

/// Area under the accuracy-versus-samples-seen curve, trapezoidal and
/// normalized by the span, so a constant curve returns its constant.
pub fn streaming_auc(points: &[(u64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(AirError::InvalidParameter(
            "streaming AUC needs at least two points".into(),
        ));
    }
    for pair in points.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(AirError::InvalidParameter(
                "streaming AUC points must be strictly increasing in samples seen".into(),
            ));
        }
    }
    let mut area = 0.0;
    for pair in points.windows(2) {
        let dx = (pair[1].0 - pair[0].0) as f64;
        area += dx * 0.5 * (pair[0].1 + pair[1].1);
    }
    let span = (points[points.len() - 1].0 - points[0].0) as f64;
    Ok(area / span)
}

/// Euclidean norm of each class's weight column.
pub fn weight_norms(w: &Weights) -> Vec<f64> {
    let cols = w.num_classes();
    let rows = w.dim();
    let mut norms = vec![0.0; cols];
    for i in 0..rows {
        for (j, norm) in norms.iter_mut().enumerate() {
            let v = w.matrix().get(i, j);
            *norm += v * v;
        }
    }
    norms.into_iter().map(f64::sqrt).collect()
}

/// Per-class squared-error loss `Σ ‖x W − onehot(y)‖²`, divided by the class
/// sample count when `mean` is set. Classes absent from `data` report 0.
pub fn per_class_mse(w: &Weights, data: &[LabeledFeature], mean: bool) -> Result<Vec<f64>> {
    check_labels(w, data, "per_class_mse")?;
    let c = w.num_classes();
    let mut sums = vec![0.0; c];
    let mut counts = vec![0u64; c];
    for item in data {
        let scores = w.scores(&item.x)?;
        let mut loss = 0.0;
        for (j, &s) in scores.iter().enumerate() {
            let target = if j == item.label as usize { 1.0 } else { 0.0 };
            loss += (s - target) * (s - target);
        }
        sums[item.label as usize] += loss;
        counts[item.label as usize] += 1;
    }
    if mean {
        for (s, &n) in sums.iter_mut().zip(&counts) {
            if n > 0 {
                *s /= n as f64;
            }
        }
    }
    Ok(sums)
}

/// Mean of a sample.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than 2 values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    sample_std(xs) / (xs.len() as f64).sqrt()
}
