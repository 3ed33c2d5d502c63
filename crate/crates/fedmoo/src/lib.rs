//! Decentralized multi-objective training via weighted scalarization.
//!
//! `fedmoo` simulates a federation of `M` agents minimizing local losses
//! `C_i` while a coordinator injects `N` global criteria `S_j` into every
//! local update. The vector-valued problem
//!
//! ```text
//! min ( C_1(θ), …, C_M(θ), S_1(θ), …, S_N(θ) )
//! ```
//!
//! is scalarized with a trade-off weight `λ ∈ [0, 1)`, which turns each
//! agent's effective objective into `F_i = C_i + α Σ_j S_j` with
//! `α = λ / ((1 − λ) N)`. Training alternates `τ` local stochastic steps
//! per agent with mean aggregation, and the library ships everything needed
//! to *check* the theory behind that loop, not just run it:
//!
//! - [`core`]: parameter vectors, objective-value vectors, and keyed
//!   deterministic RNG streams;
//! - [`objectives`]: quadratic / scaled-norm / softmax cross-entropy
//!   objectives with exact gradients, smoothness constants, and stochastic
//!   gradient oracles (additive Gaussian noise or minibatch subsampling);
//! - [`scalarization`]: the λ ↦ α map, dominance predicates, brute-force
//!   Pareto front oracles on grids, and weak-Pareto certificates;
//! - [`trainer`]: the federated loop with drift recording, divergence
//!   guard, and schedule-independent determinism;
//! - [`theory`]: the smoothness / noise / heterogeneity constants, the
//!   convergence-rate and client-drift bounds, and Monte-Carlo checks of
//!   those bounds against actual runs;
//! - [`data`]: IDX (MNIST container) parsing, IID and label-pair
//!   partitions, and synthetic dataset generators;
//! - [`metrics`]: accuracy / macro-F1 evaluation and optimality-gap series;
//! - [`cli`]: the config-driven experiment runner behind the `fedmoo`
//!   binary.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod core;
pub mod data;
pub mod metrics;
pub mod objectives;
pub mod scalarization;
pub mod theory;
pub mod trainer;

pub use crate::core::{ObjectiveVector, ParamVector, RngStream};
pub use crate::objectives::{DatasetHandle, NoiseModel, ObjectiveSpec};
pub use crate::scalarization::{CompositeObjective, GridSpec, ScalarizationConfig};
pub use crate::theory::{BoundConstants, BoundReport};
pub use crate::trainer::{RunTrace, TrainConfig};
