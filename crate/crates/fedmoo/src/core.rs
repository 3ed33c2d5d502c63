//! Foundational numeric types shared by every module: flat parameter
//! vectors, objective-value vectors, and deterministic keyed RNG streams.
//!
//! Everything here is an immutable value type; all operations check
//! dimensions and reject non-finite results so that downstream code can
//! assume well-formed numbers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("empty input: {context}")]
    Empty { context: &'static str },
}

/// A flat vector of 64-bit model parameters.
///
/// The length `d` is fixed for the lifetime of a run; all vector
/// operations require equal lengths and guarantee finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self, CoreError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "ParamVector::new",
            });
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    /// `a·x + y` elementwise.
    pub fn axpy(a: f64, x: &Self, y: &Self) -> Result<Self, CoreError> {
        if !a.is_finite() {
            return Err(CoreError::NonFinite {
                context: "axpy coefficient",
            });
        }
        if x.dim() != y.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: x.dim(),
                got: y.dim(),
            });
        }
        let values: Vec<f64> = x
            .0
            .iter()
            .zip(&y.0)
            .map(|(xi, yi)| a * xi + yi)
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite {
                context: "axpy result",
            });
        }
        Ok(Self(values))
    }

    /// Squared Euclidean norm `Σ xᵢ²`.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Squared distance `‖x − y‖²`.
    pub fn dist_sq(&self, other: &Self) -> Result<f64, CoreError> {
        if self.dim() != other.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, CoreError> {
        Self::axpy(-1.0, other, self)
    }

    pub fn scale(&self, a: f64) -> Result<Self, CoreError> {
        Self::axpy(a - 1.0, self, self)
    }

    /// Arithmetic mean of a non-empty set of equal-length vectors.
    ///
    /// Accumulates deviations from the first vector, so the mean of M
    /// copies of `x` is exactly `x` and cancellation stays proportional
    /// to the spread of the inputs, not their magnitude.
    pub fn mean_of(vectors: &[Self]) -> Result<Self, CoreError> {
        let first = vectors.first().ok_or(CoreError::Empty {
            context: "mean_of",
        })?;
        let dim = first.dim();
        let mut acc = vec![0.0; dim];
        for v in &vectors[1..] {
            if v.dim() != dim {
                return Err(CoreError::DimensionMismatch {
                    expected: dim,
                    got: v.dim(),
                });
            }
            for ((a, x), base) in acc.iter_mut().zip(&v.0).zip(&first.0) {
                *a += x - base;
            }
        }
        let inv = 1.0 / vectors.len() as f64;
        for (a, base) in acc.iter_mut().zip(&first.0) {
            *a = base + *a * inv;
        }
        Self::new(acc)
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// The tuple of objective values `(C_1, …, C_M, S_1, …, S_N)` at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub agent_values: Vec<f64>,
    pub coordinator_values: Vec<f64>,
}

impl ObjectiveVector {
    pub fn new(agent_values: Vec<f64>, coordinator_values: Vec<f64>) -> Result<Self, CoreError> {
        if agent_values
            .iter()
            .chain(&coordinator_values)
            .any(|v| !v.is_finite())
        {
            return Err(CoreError::NonFinite {
                context: "ObjectiveVector::new",
            });
        }
        Ok(Self {
            agent_values,
            coordinator_values,
        })
    }

    pub fn len(&self) -> usize {
        self.agent_values.len() + self.coordinator_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `M + N` entries, agents first.
    pub fn iter_all(&self) -> impl Iterator<Item = f64> + '_ {
        self.agent_values
            .iter()
            .chain(&self.coordinator_values)
            .copied()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.agent_values.len() == other.agent_values.len()
            && self.coordinator_values.len() == other.coordinator_values.len()
    }
}

/// Distinguishes independent noise lanes drawn within the same
/// `(round, agent, epoch)` coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamLane {
    AgentNoise,
    CoordinatorNoise,
    Batch,
    Partition,
    Synth,
    Probe,
}

impl StreamLane {
    fn id(self) -> u64 {
        match self {
            StreamLane::AgentNoise => 1,
            StreamLane::CoordinatorNoise => 2,
            StreamLane::Batch => 3,
            StreamLane::Partition => 4,
            StreamLane::Synth => 5,
            StreamLane::Probe => 6,
        }
    }
}

/// A deterministic counter-based RNG stream keyed by
/// `(seed, round, agent, epoch, lane)`.
///
/// Identical keys yield identical sample sequences on every run and under
/// any thread schedule, which is what makes agent-parallel execution
/// reproducible: the noise an agent sees depends only on its coordinates,
/// never on scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    round: u64,
    agent: u64,
    epoch: u64,
    lane: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    /// Stream for one local update at coordinates `(t, i, k)`.
    pub fn for_step(seed: u64, round: u64, agent: u64, epoch: u64, lane: StreamLane) -> Self {
        Self {
            seed,
            round,
            agent,
            epoch,
            lane: lane.id(),
        }
    }

    /// Stream for data-level operations (partitioning, synthesis), keyed
    /// by a caller-chosen tag instead of trainer coordinates.
    pub fn for_data(seed: u64, tag: u64, lane: StreamLane) -> Self {
        Self {
            seed,
            round: u64::MAX,
            agent: tag,
            epoch: 0,
            lane: lane.id(),
        }
    }

    fn key(&self) -> u64 {
        let mut state = splitmix64(self.seed);
        for v in [self.round, self.agent, self.epoch, self.lane] {
            state = splitmix64(state ^ splitmix64(v));
        }
        state
    }

    /// Instantiate the stream. Each call returns a generator positioned at
    /// the start of the same sequence.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn axpy_identity_cases() {
        assert_eq!(
            ParamVector::axpy(0.0, &pv(&[1.0, 2.0]), &pv(&[3.0, 4.0])).unwrap(),
            pv(&[3.0, 4.0])
        );
        assert_eq!(
            ParamVector::axpy(1.0, &pv(&[1.0, 1.0]), &pv(&[0.0, 0.0])).unwrap(),
            pv(&[1.0, 1.0])
        );
        assert_eq!(
            ParamVector::axpy(-0.1, &pv(&[10.0, 20.0]), &pv(&[1.0, 2.0])).unwrap(),
            pv(&[0.0, 0.0])
        );
    }

    #[test]
    fn axpy_rejects_mismatch_and_nonfinite() {
        assert!(matches!(
            ParamVector::axpy(1.0, &pv(&[1.0]), &pv(&[1.0, 2.0])),
            Err(CoreError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            ParamVector::axpy(f64::MAX, &pv(&[f64::MAX]), &pv(&[f64::MAX])),
            Err(CoreError::NonFinite { .. })
        ));
        assert!(ParamVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn norm_sq_examples() {
        assert_eq!(pv(&[0.0, 0.0, 0.0]).norm_sq(), 0.0);
        assert_eq!(pv(&[3.0, 4.0]).norm_sq(), 25.0);
        assert_eq!(pv(&[1.0, 1.0, 1.0, 1.0]).norm_sq(), 4.0);
    }

    #[test]
    fn mean_of_copies_is_exact_to_one_ulp() {
        let x = pv(&[0.1, -2.7, 3.333333333333333]);
        for m in [1usize, 3, 7, 32] {
            let copies = vec![x.clone(); m];
            let mean = ParamVector::mean_of(&copies).unwrap();
            for (a, b) in mean.iter().zip(x.iter()) {
                let ulp = f64::EPSILON * b.abs();
                assert!((a - b).abs() <= ulp, "m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn mean_of_empty_is_error() {
        assert!(matches!(
            ParamVector::mean_of(&[]),
            Err(CoreError::Empty { .. })
        ));
    }

    #[test]
    fn objective_vector_shape() {
        let a = ObjectiveVector::new(vec![1.0, 2.0], vec![3.0]).unwrap();
        let b = ObjectiveVector::new(vec![0.0, 0.0], vec![0.0]).unwrap();
        assert!(a.same_shape(&b));
        assert_eq!(a.len(), 3);
        assert_eq!(a.iter_all().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rng_streams_are_deterministic_and_distinct() {
        let s1 = RngStream::for_step(42, 3, 1, 0, StreamLane::AgentNoise);
        let s2 = RngStream::for_step(42, 3, 1, 0, StreamLane::AgentNoise);
        let draws1: Vec<u64> = (0..8).map(|_| s1.rng().random()).collect();
        let mut rng2 = s2.rng();
        let first: u64 = rng2.random();
        assert_eq!(draws1[0], first);

        // distinct coordinates give distinct sequences
        let lanes = [
            RngStream::for_step(42, 3, 1, 0, StreamLane::CoordinatorNoise),
            RngStream::for_step(42, 3, 1, 1, StreamLane::AgentNoise),
            RngStream::for_step(42, 3, 2, 0, StreamLane::AgentNoise),
            RngStream::for_step(42, 4, 1, 0, StreamLane::AgentNoise),
            RngStream::for_step(43, 3, 1, 0, StreamLane::AgentNoise),
        ];
        for other in lanes {
            let v: u64 = other.rng().random();
            assert_ne!(v, first, "{other:?} collided");
        }
    }
}
