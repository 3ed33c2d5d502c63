//! Differentiable objectives with exact gradients, valid smoothness
//! constants, and stochastic gradient oracles.
//!
//! Three kinds are supported: isotropic quadratics `½a‖θ − c‖²` (agent
//! losses with known minimizers), scaled squared norms `s‖θ‖²` (the
//! coordinator regularizer shape), and softmax cross-entropy over a
//! dataset split. All are convex; the smoothness constant returned by
//! [`ObjectiveSpec::smoothness`] is a valid Lipschitz bound on the
//! gradient in each case.
//!
//! Stochastic gradients come in two flavors. Analytic objectives add
//! zero-mean Gaussian noise with known total variance `σ²` to the exact
//! gradient, so the noise assumptions of the convergence bounds hold with
//! exactly known constants. Softmax objectives may instead subsample a
//! minibatch (uniform with replacement), in which case `σ` has to be
//! estimated rather than assumed; see [`crate::theory`].

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{CoreError, ParamVector, RngStream};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("parameter dimension mismatch: objective expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// An immutable view onto a subset of a feature matrix.
///
/// Handles share the pool through `Arc`, so partitioning a dataset into
/// per-agent train/validation splits copies index lists, not features.
#[derive(Debug, Clone)]
pub struct DatasetHandle {
    features: Arc<Array2<f64>>,
    labels: Arc<Vec<u8>>,
    indices: Vec<u32>,
    split: Split,
    num_classes: usize,
    max_row_norm_sq: f64,
}

impl DatasetHandle {
    /// Wrap a full pool; every row belongs to the handle.
    pub fn from_pool(
        features: Array2<f64>,
        labels: Vec<u8>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self, ObjectiveError> {
        let n = features.nrows();
        if n == 0 {
            return Err(ObjectiveError::InvalidDataset("empty dataset".into()));
        }
        if labels.len() != n {
            return Err(ObjectiveError::InvalidDataset(format!(
                "{} feature rows but {} labels",
                n,
                labels.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| **l as usize >= num_classes) {
            return Err(ObjectiveError::InvalidDataset(format!(
                "label {l} out of range for {num_classes} classes"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::InvalidDataset(
                "non-finite feature entry".into(),
            ));
        }
        let indices: Vec<u32> = (0..n as u32).collect();
        Self::with_indices(Arc::new(features), Arc::new(labels), indices, num_classes, split)
    }

    /// Restrict shared pool storage to an index subset.
    pub fn with_indices(
        features: Arc<Array2<f64>>,
        labels: Arc<Vec<u8>>,
        indices: Vec<u32>,
        num_classes: usize,
        split: Split,
    ) -> Result<Self, ObjectiveError> {
        if indices.is_empty() {
            return Err(ObjectiveError::InvalidDataset("empty index set".into()));
        }
        let n = features.nrows() as u32;
        if let Some(i) = indices.iter().find(|i| **i >= n) {
            return Err(ObjectiveError::InvalidDataset(format!(
                "index {i} out of bounds for pool of {n} rows"
            )));
        }
        let max_row_norm_sq = indices
            .iter()
            .map(|&i| features.row(i as usize).iter().map(|v| v * v).sum::<f64>())
            .fold(0.0_f64, f64::max);
        Ok(Self {
            features,
            labels,
            indices,
            split,
            num_classes,
            max_row_norm_sq,
        })
    }

    /// Sibling handle over different rows of the same pool.
    pub fn restrict(&self, indices: Vec<u32>, split: Split) -> Result<Self, ObjectiveError> {
        Self::with_indices(
            Arc::clone(&self.features),
            Arc::clone(&self.labels),
            indices,
            self.num_classes,
            split,
        )
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    /// Label of the `i`-th sample of this split.
    pub fn label(&self, i: usize) -> u8 {
        self.labels[self.indices[i] as usize]
    }

    /// Largest squared feature-row norm within this split.
    pub fn max_row_norm_sq(&self) -> f64 {
        self.max_row_norm_sq
    }

    /// Copy the rows at split-local positions `local` into a dense matrix.
    pub(crate) fn gather(&self, local: &[u32]) -> (Array2<f64>, Vec<u8>) {
        let p = self.feature_dim();
        let mut x = Array2::zeros((local.len(), p));
        let mut y = Vec::with_capacity(local.len());
        for (out_row, &li) in local.iter().enumerate() {
            let pool_row = self.indices[li as usize] as usize;
            x.row_mut(out_row).assign(&self.features.row(pool_row));
            y.push(self.labels[pool_row]);
        }
        (x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Zero,
    Gaussian,
}

/// Additive gradient-noise model: zero-mean, with total injected variance
/// `E‖ε‖² = σ²` (per-component variance `σ²/d`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_c: f64,
    pub sigma_s: f64,
    pub distribution: NoiseKind,
}

impl NoiseModel {
    pub fn zero() -> Self {
        Self {
            sigma_c: 0.0,
            sigma_s: 0.0,
            distribution: NoiseKind::Zero,
        }
    }

    pub fn gaussian(sigma_c: f64, sigma_s: f64) -> Self {
        Self {
            sigma_c,
            sigma_s,
            distribution: NoiseKind::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if !(self.sigma_c >= 0.0 && self.sigma_s >= 0.0)
            || !self.sigma_c.is_finite()
            || !self.sigma_s.is_finite()
        {
            return Err(ObjectiveError::InvalidNoise(
                "sigma_c and sigma_s must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.distribution, NoiseKind::Zero) || (self.sigma_c == 0.0 && self.sigma_s == 0.0)
    }
}

/// One differentiable objective together with its oracle configuration.
#[derive(Debug, Clone)]
pub enum ObjectiveSpec {
    /// `½ · curvature · ‖θ − center‖²`; smoothness = curvature.
    Quadratic { center: ParamVector, curvature: f64 },
    /// `scale · ‖θ‖²`; smoothness = 2·scale.
    ScaledSqNorm { scale: f64 },
    /// Multinomial logistic loss (mean over the split) plus `l2/2 · ‖θ‖²`.
    /// With `batch = Some(b)` the stochastic oracle subsamples `b` rows
    /// uniformly with replacement; with `None` it is the full gradient.
    SoftmaxCE {
        data: DatasetHandle,
        l2: f64,
        batch: Option<usize>,
    },
}

impl ObjectiveSpec {
    pub fn quadratic(center: &[f64], curvature: f64) -> Self {
        ObjectiveSpec::Quadratic {
            center: ParamVector::new(center.to_vec()).expect("finite center"),
            curvature,
        }
    }

    /// Expected parameter dimension, if the objective pins one.
    pub fn dim_hint(&self) -> Option<usize> {
        match self {
            ObjectiveSpec::Quadratic { center, .. } => Some(center.dim()),
            ObjectiveSpec::ScaledSqNorm { .. } => None,
            ObjectiveSpec::SoftmaxCE { data, .. } => {
                Some(data.num_classes() * data.feature_dim())
            }
        }
    }

    fn check_dim(&self, theta: &ParamVector) -> Result<(), ObjectiveError> {
        if let Some(d) = self.dim_hint() {
            if theta.dim() != d {
                return Err(ObjectiveError::DimensionMismatch {
                    expected: d,
                    got: theta.dim(),
                });
            }
        }
        Ok(())
    }

    /// Number of stochastic steps that make up one pass over the oracle's
    /// data: `⌈n/b⌉` for minibatch softmax, 1 otherwise.
    pub fn steps_per_epoch(&self) -> usize {
        match self {
            ObjectiveSpec::SoftmaxCE {
                data,
                batch: Some(b),
                ..
            } => data.len().div_ceil((*b).max(1)),
            _ => 1,
        }
    }

    pub fn value(&self, theta: &ParamVector) -> Result<f64, ObjectiveError> {
        self.check_dim(theta)?;
        let v = match self {
            ObjectiveSpec::Quadratic { center, curvature } => {
                0.5 * curvature * theta.dist_sq(center)?
            }
            ObjectiveSpec::ScaledSqNorm { scale } => scale * theta.norm_sq(),
            ObjectiveSpec::SoftmaxCE { data, l2, .. } => {
                softmax_value(data, theta)? + 0.5 * l2 * theta.norm_sq()
            }
        };
        if !v.is_finite() {
            return Err(CoreError::NonFinite {
                context: "objective value",
            }
            .into());
        }
        Ok(v)
    }

    /// Exact (full) gradient.
    pub fn grad(&self, theta: &ParamVector) -> Result<ParamVector, ObjectiveError> {
        self.check_dim(theta)?;
        match self {
            ObjectiveSpec::Quadratic { center, curvature } => {
                // a(θ − c)
                let diff = theta.sub(center)?;
                Ok(diff.scale(*curvature)?)
            }
            ObjectiveSpec::ScaledSqNorm { scale } => Ok(theta.scale(2.0 * scale)?),
            ObjectiveSpec::SoftmaxCE { data, l2, .. } => {
                let g = softmax_grad(data, theta, None)?;
                Ok(ParamVector::axpy(*l2, theta, &g)?)
            }
        }
    }

    /// Stochastic gradient: minibatch subsampling if configured, then
    /// additive Gaussian noise with total variance `sigma²` if requested.
    /// Draws are fully determined by `stream`.
    pub fn stoch_grad(
        &self,
        theta: &ParamVector,
        sigma: f64,
        kind: NoiseKind,
        stream: RngStream,
    ) -> Result<ParamVector, ObjectiveError> {
        self.check_dim(theta)?;
        let mut rng = stream.rng();
        let base = match self {
            ObjectiveSpec::SoftmaxCE {
                data,
                l2,
                batch: Some(b),
            } => {
                let n = data.len() as u32;
                let picks: Vec<u32> = (0..*b).map(|_| rng.random_range(0..n)).collect();
                let g = softmax_grad(data, theta, Some(&picks))?;
                ParamVector::axpy(*l2, theta, &g)?
            }
            _ => self.grad(theta)?,
        };
        match kind {
            NoiseKind::Zero => Ok(base),
            NoiseKind::Gaussian if sigma == 0.0 => Ok(base),
            NoiseKind::Gaussian => {
                let d = base.dim();
                let per_comp = sigma / (d as f64).sqrt();
                let noisy: Vec<f64> = base
                    .iter()
                    .map(|g| g + per_comp * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Ok(ParamVector::new(noisy)?)
            }
        }
    }

    /// A constant `L` such that `‖∇f(θ) − ∇f(θ')‖ ≤ L‖θ − θ'‖` everywhere.
    pub fn smoothness(&self) -> f64 {
        match self {
            ObjectiveSpec::Quadratic { curvature, .. } => *curvature,
            ObjectiveSpec::ScaledSqNorm { scale } => 2.0 * scale,
            ObjectiveSpec::SoftmaxCE { data, l2, .. } => data.max_row_norm_sq() / 4.0 + l2,
        }
    }
}

/// Mean cross-entropy of the softmax model over the whole split.
fn softmax_value(data: &DatasetHandle, theta: &ParamVector) -> Result<f64, ObjectiveError> {
    let c = data.num_classes();
    let p = data.feature_dim();
    let w = ArrayView2::from_shape((c, p), theta.as_slice())
        .map_err(|e| ObjectiveError::InvalidDataset(e.to_string()))?;
    let n = data.len();
    let mut loss = 0.0;
    let all: Vec<u32> = (0..n as u32).collect();
    for chunk in all.chunks(CHUNK) {
        let (x, y) = data.gather(chunk);
        let z = x.dot(&w.t()); // rows × classes
        for (row, &label) in z.axis_iter(Axis(0)).zip(&y) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            loss += lse - row[label as usize];
        }
    }
    Ok(loss / n as f64)
}

const CHUNK: usize = 1024;

/// Gradient of the mean cross-entropy, over the whole split
/// (`batch = None`) or over the given split-local rows.
fn softmax_grad(
    data: &DatasetHandle,
    theta: &ParamVector,
    batch: Option<&[u32]>,
) -> Result<ParamVector, ObjectiveError> {
    let c = data.num_classes();
    let p = data.feature_dim();
    let w = ArrayView2::from_shape((c, p), theta.as_slice())
        .map_err(|e| ObjectiveError::InvalidDataset(e.to_string()))?;
    let owned: Vec<u32>;
    let rows: &[u32] = match batch {
        Some(b) => b,
        None => {
            owned = (0..data.len() as u32).collect();
            &owned
        }
    };
    let n = rows.len();
    let mut grad = Array2::<f64>::zeros((c, p));
    for chunk in rows.chunks(CHUNK) {
        let (x, y) = data.gather(chunk);
        let mut z = x.dot(&w.t());
        for (mut row, &label) in z.axis_iter_mut(Axis(0)).zip(&y) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - m).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
            row[label as usize] -= 1.0;
        }
        grad += &z.t().dot(&x);
    }
    grad /= n as f64;
    let flat: Vec<f64> = grad.iter().copied().collect();
    Ok(ParamVector::new(flat)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::StreamLane;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    fn toy_dataset(n: usize, p_raw: usize, classes: usize, seed: u64) -> DatasetHandle {
        let mut rng = RngStream::for_data(seed, 0, StreamLane::Synth).rng();
        let mut feats = Array2::zeros((n, p_raw + 1));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = rng.random_range(0..classes as u32) as u8;
            for j in 0..p_raw {
                let centered = (j % classes) as f64 - y as f64;
                feats[[i, j]] = 0.5 * rng.random::<f64>() - 0.1 * centered;
            }
            feats[[i, p_raw]] = 1.0; // bias
            labels.push(y);
        }
        DatasetHandle::from_pool(feats, labels, classes, Split::Train).unwrap()
    }

    #[test]
    fn quadratic_value_and_grad() {
        let q = ObjectiveSpec::quadratic(&[0.0, 0.0], 1.0);
        assert_abs_diff_eq!(q.value(&pv(&[3.0, 4.0])).unwrap(), 12.5);
        let q2 = ObjectiveSpec::quadratic(&[1.0], 2.0);
        assert_eq!(q2.grad(&pv(&[0.0])).unwrap(), pv(&[-2.0]));
        assert_eq!(q2.smoothness(), 2.0);
    }

    #[test]
    fn scaled_sq_norm_matches_coordinator_shape() {
        let s = ObjectiveSpec::ScaledSqNorm { scale: 100.0 };
        assert_abs_diff_eq!(s.value(&pv(&[0.1, 0.0])).unwrap(), 1.0);
        assert_eq!(s.grad(&pv(&[0.5])).unwrap(), pv(&[100.0]));
        assert_eq!(s.smoothness(), 200.0);
    }

    #[test]
    fn softmax_uniform_logits_give_ln_k() {
        let data = toy_dataset(64, 5, 10, 7);
        let obj = ObjectiveSpec::SoftmaxCE {
            data,
            l2: 0.0,
            batch: None,
        };
        let theta = ParamVector::zeros(10 * 6);
        assert_abs_diff_eq!(
            obj.value(&theta).unwrap(),
            (10.0_f64).ln(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gradients_match_central_differences_on_all_kinds() {
        let data = toy_dataset(40, 4, 3, 11);
        let dim = 3 * 5;
        let objs = vec![
            ObjectiveSpec::quadratic(&[0.3; 15], 1.7),
            ObjectiveSpec::ScaledSqNorm { scale: 2.25 },
            ObjectiveSpec::SoftmaxCE {
                data,
                l2: 0.01,
                batch: None,
            },
        ];
        let mut rng = RngStream::for_data(3, 1, StreamLane::Probe).rng();
        let theta = ParamVector::new(
            (0..dim).map(|_| rng.random::<f64>() - 0.5).collect(),
        )
        .unwrap();
        let h = 1e-6;
        for obj in &objs {
            let g = obj.grad(&theta).unwrap();
            for j in 0..dim {
                let mut plus = theta.as_slice().to_vec();
                let mut minus = plus.clone();
                plus[j] += h;
                minus[j] -= h;
                let fd = (obj.value(&pv(&plus)).unwrap() - obj.value(&pv(&minus)).unwrap())
                    / (2.0 * h);
                let scale = fd.abs().max(g[j].abs()).max(1e-3);
                assert!(
                    (fd - g[j]).abs() / scale < 1e-6,
                    "component {j}: fd={fd}, grad={}",
                    g[j]
                );
            }
        }
    }

    #[test]
    fn convexity_along_random_segments() {
        let data = toy_dataset(30, 4, 3, 5);
        let objs = vec![
            ObjectiveSpec::quadratic(&[1.0; 15], 0.7),
            ObjectiveSpec::ScaledSqNorm { scale: 2.5 },
            ObjectiveSpec::SoftmaxCE {
                data,
                l2: 0.0,
                batch: None,
            },
        ];
        let mut rng = RngStream::for_data(9, 2, StreamLane::Probe).rng();
        for obj in &objs {
            for _ in 0..200 {
                let a = ParamVector::new((0..15).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
                    .unwrap();
                let b = ParamVector::new((0..15).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
                    .unwrap();
                let t: f64 = rng.random();
                let mid = ParamVector::axpy(t, &a, &b.scale(1.0 - t).unwrap()).unwrap();
                let lhs = obj.value(&mid).unwrap();
                let rhs = t * obj.value(&a).unwrap() + (1.0 - t) * obj.value(&b).unwrap();
                assert!(lhs <= rhs + 1e-9, "convexity violated: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn lipschitz_gradient_within_declared_smoothness() {
        let data = toy_dataset(30, 4, 3, 6);
        let objs = vec![
            ObjectiveSpec::quadratic(&[0.5; 15], 3.0),
            ObjectiveSpec::ScaledSqNorm { scale: 4.0 },
            ObjectiveSpec::SoftmaxCE {
                data,
                l2: 0.1,
                batch: None,
            },
        ];
        let mut rng = RngStream::for_data(10, 3, StreamLane::Probe).rng();
        for obj in &objs {
            let l = obj.smoothness();
            for _ in 0..1000 {
                let a = ParamVector::new((0..15).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
                    .unwrap();
                let b = ParamVector::new((0..15).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect())
                    .unwrap();
                let dg = obj.grad(&a).unwrap().sub(&obj.grad(&b).unwrap()).unwrap();
                let dx = a.sub(&b).unwrap();
                assert!(
                    dg.norm() <= l * dx.norm() * (1.0 + 1e-9),
                    "Lipschitz violated: {} > {} * {}",
                    dg.norm(),
                    l,
                    dx.norm()
                );
            }
        }
    }

    #[test]
    fn zero_noise_stoch_grad_equals_grad() {
        let q = ObjectiveSpec::quadratic(&[1.0, -2.0], 1.5);
        let theta = pv(&[0.3, 0.4]);
        let s = RngStream::for_step(0, 0, 1, 0, StreamLane::AgentNoise);
        assert_eq!(
            q.stoch_grad(&theta, 0.0, NoiseKind::Gaussian, s).unwrap(),
            q.grad(&theta).unwrap()
        );
        assert_eq!(
            q.stoch_grad(&theta, 0.5, NoiseKind::Zero, s).unwrap(),
            q.grad(&theta).unwrap()
        );
    }

    #[test]
    fn gaussian_noise_is_unbiased_with_bounded_variance() {
        let q = ObjectiveSpec::quadratic(&[0.0, 0.0, 0.0], 1.0);
        let theta = pv(&[0.5, -1.0, 2.0]);
        let g = q.grad(&theta).unwrap();
        let sigma = 0.1;
        let n = 100_000;
        let d = 3;
        let mut mean = vec![0.0; d];
        let mut sq = 0.0;
        for rep in 0..n {
            let s = RngStream::for_step(21, rep as u64, 1, 0, StreamLane::AgentNoise);
            let sg = q.stoch_grad(&theta, sigma, NoiseKind::Gaussian, s).unwrap();
            let eps = sg.sub(&g).unwrap();
            for (m, e) in mean.iter_mut().zip(eps.iter()) {
                *m += e;
            }
            sq += eps.norm_sq();
        }
        let tol = 3.0 * sigma / (n as f64).sqrt();
        for m in &mean {
            assert!((m / n as f64).abs() <= tol, "bias {} > {tol}", m / n as f64);
        }
        let mean_sq = sq / n as f64;
        assert!(mean_sq <= sigma * sigma * 1.05, "E‖ε‖² = {mean_sq}");
        assert!(mean_sq >= sigma * sigma * 0.95, "E‖ε‖² = {mean_sq}");
    }

    #[test]
    fn minibatch_oracle_is_unbiased() {
        let data = toy_dataset(200, 4, 3, 13);
        let full = ObjectiveSpec::SoftmaxCE {
            data: data.clone(),
            l2: 0.0,
            batch: None,
        };
        let mini = ObjectiveSpec::SoftmaxCE {
            data,
            l2: 0.0,
            batch: Some(16),
        };
        assert_eq!(mini.steps_per_epoch(), 13);
        assert_eq!(full.steps_per_epoch(), 1);
        let theta = ParamVector::zeros(15);
        let g = full.grad(&theta).unwrap();
        let reps = 4000;
        let mut acc = vec![0.0; 15];
        for rep in 0..reps {
            let s = RngStream::for_step(5, rep as u64, 2, 0, StreamLane::Batch);
            let sg = mini.stoch_grad(&theta, 0.0, NoiseKind::Zero, s).unwrap();
            for (a, v) in acc.iter_mut().zip(sg.iter()) {
                *a += v;
            }
        }
        for (a, gi) in acc.iter().zip(g.iter()) {
            let est = a / reps as f64;
            assert!(
                (est - gi).abs() < 0.02,
                "minibatch mean {est} vs full {gi}"
            );
        }
    }

    #[test]
    fn dataset_validation_errors() {
        let feats = Array2::zeros((3, 2));
        assert!(DatasetHandle::from_pool(feats.clone(), vec![0, 1], 10, Split::Train).is_err());
        assert!(DatasetHandle::from_pool(feats, vec![0, 1, 12], 10, Split::Train).is_err());
        let empty = Array2::zeros((0, 2));
        assert!(DatasetHandle::from_pool(empty, vec![], 10, Split::Train).is_err());
    }
}
