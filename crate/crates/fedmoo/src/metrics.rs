//! Classification evaluation (accuracy, macro-averaged F1) and
//! optimality-gap extraction from run traces.
//!
//! Macro-F1 averages the per-class F1 over *all* model classes; a class
//! with no true samples and no predictions contributes 0. Ties in the
//! argmax go to the lowest class id.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::ParamVector;
use crate::objectives::DatasetHandle;
use crate::scalarization::{CompositeObjective, ScalarError};
use crate::trainer::RunTrace;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("theta has {got} entries, model needs {expected} (= classes × features)")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub f1_macro: f64,
    pub per_class_f1: Vec<f64>,
    pub n_samples: usize,
}

/// Argmax-class predictions of the linear softmax model `θ` on `data`.
pub fn predictions(theta: &ParamVector, data: &DatasetHandle) -> Result<Vec<u8>, MetricsError> {
    let c = data.num_classes();
    let p = data.feature_dim();
    if theta.dim() != c * p {
        return Err(MetricsError::DimensionMismatch {
            expected: c * p,
            got: theta.dim(),
        });
    }
    let w = ArrayView2::from_shape((c, p), theta.as_slice()).expect("shape checked");
    let n = data.len();
    let all: Vec<u32> = (0..n as u32).collect();
    let mut preds = Vec::with_capacity(n);
    for chunk in all.chunks(1024) {
        let (x, _) = data.gather(chunk);
        let z = x.dot(&w.t());
        for row in z.rows() {
            let mut best = 0usize;
            let mut best_v = row[0];
            for (j, v) in row.iter().enumerate().skip(1) {
                if *v > best_v {
                    best_v = *v;
                    best = j;
                }
            }
            preds.push(best as u8);
        }
    }
    Ok(preds)
}

/// Accuracy and macro-F1 of `θ` on `data`.
pub fn evaluate(theta: &ParamVector, data: &DatasetHandle) -> Result<EvalReport, MetricsError> {
    let preds = predictions(theta, data)?;
    let c = data.num_classes();
    let n = data.len();
    let mut tp = vec![0usize; c];
    let mut fp = vec![0usize; c];
    let mut fneg = vec![0usize; c];
    let mut correct = 0usize;
    for (i, &pred) in preds.iter().enumerate() {
        let truth = data.label(i);
        if pred == truth {
            correct += 1;
            tp[pred as usize] += 1;
        } else {
            fp[pred as usize] += 1;
            fneg[truth as usize] += 1;
        }
    }
    let per_class_f1: Vec<f64> = (0..c)
        .map(|j| {
            let denom = 2 * tp[j] + fp[j] + fneg[j];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[j] as f64 / denom as f64
            }
        })
        .collect();
    let f1_macro = per_class_f1.iter().sum::<f64>() / c as f64;
    Ok(EvalReport {
        accuracy: correct as f64 / n as f64,
        f1_macro,
        per_class_f1,
        n_samples: n,
    })
}

/// Per-round optimality gap `F(Θᵗ) − F(θ*)` along a trace.
pub fn gap_series(
    trace: &RunTrace,
    comp: &CompositeObjective,
    theta_star: &ParamVector,
) -> Result<Vec<f64>, MetricsError> {
    let f_star = comp.f_value(theta_star)?;
    trace
        .rounds
        .iter()
        .map(|r| Ok(comp.f_value(&r.global_theta)? - f_star))
        .collect()
}
