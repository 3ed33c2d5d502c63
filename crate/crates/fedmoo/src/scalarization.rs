//! Weighted-sum scalarization of the multi-objective problem, plus grid
//! oracles for the Pareto claims behind it.
//!
//! The vector problem over agents `C_1..C_M` and coordinator criteria
//! `S_1..S_N` is collapsed to
//!
//! ```text
//! ((1 − λ)/M) Σᵢ Cᵢ(θ) + (λ/N) Σⱼ Sⱼ(θ),   λ ∈ [0, 1)
//! ```
//!
//! which equals `(1 − λ)·F(θ)` for `F = (1/M) Σᵢ Fᵢ`,
//! `Fᵢ = Cᵢ + α Σⱼ Sⱼ`, `α = λ/((1 − λ)N)` — the form the trainer
//! actually descends. Minimizers coincide.
//!
//! The Pareto side is deliberately finite: dominance predicates over
//! objective vectors, a brute-force nondominated-set oracle over axis
//! aligned grids, and certificates that a point is (weakly) Pareto
//! optimal *on the grid* within an explicit tolerance. Lower is better
//! everywhere.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{CoreError, ObjectiveVector, ParamVector, RngStream};
use crate::objectives::{NoiseKind, NoiseModel, ObjectiveError, ObjectiveSpec};

/// Dimension cap for grid-based Pareto oracles.
pub const MAX_PARETO_DIM: usize = 3;
/// Point cap for any grid.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum ScalarError {
    #[error("lambda must lie in [0, 1): got {0}")]
    LambdaOutOfRange(f64),
    #[error("need at least one agent objective")]
    NoAgents,
    #[error("{0} coordinator objectives but config says {1}")]
    CoordinatorCountMismatch(usize, usize),
    #[error("{0} agent objectives but config says {1}")]
    AgentCountMismatch(usize, usize),
    #[error("coordinator objectives present require n_coord >= 1 or lambda = 0")]
    CoordinatorsWithoutWeight,
    #[error("objectives pin conflicting parameter dimensions: {0} vs {1}")]
    ConflictingDims(usize, usize),
    #[error("no objective pins a parameter dimension")]
    UnboundedDim,
    #[error("objective vectors have different shapes")]
    ShapeMismatch,
    #[error("grid spec invalid: {0}")]
    BadGrid(String),
    #[error("grid has {got} points, cap is {max}")]
    GridTooLarge { got: usize, max: usize },
    #[error("grid dimension {got} exceeds Pareto oracle cap {max}")]
    GridDimTooLarge { got: usize, max: usize },
    #[error("grid dimension {grid} does not match parameter dimension {params}")]
    GridDimMismatch { grid: usize, params: usize },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// `α = λ / ((1 − λ) · N)`: the coordinator blending coefficient.
///
/// Monotone increasing in `λ`, diverging as `λ → 1⁻`.
pub fn alpha_from_lambda(lambda: f64, n_coord: usize) -> Result<f64, ScalarError> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(ScalarError::LambdaOutOfRange(lambda));
    }
    if n_coord == 0 {
        return if lambda == 0.0 {
            Ok(0.0)
        } else {
            Err(ScalarError::CoordinatorsWithoutWeight)
        };
    }
    Ok(lambda / ((1.0 - lambda) * n_coord as f64))
}

/// The `(λ, M, N)` triple with its derived `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarizationConfig {
    pub lambda: f64,
    pub m_agents: usize,
    pub n_coord: usize,
    pub alpha: f64,
}

impl ScalarizationConfig {
    pub fn new(lambda: f64, m_agents: usize, n_coord: usize) -> Result<Self, ScalarError> {
        if m_agents == 0 {
            return Err(ScalarError::NoAgents);
        }
        let alpha = alpha_from_lambda(lambda, n_coord)?;
        Ok(Self {
            lambda,
            m_agents,
            n_coord,
            alpha,
        })
    }
}

/// The full problem instance: agent objectives, coordinator objectives,
/// and the scalarization weight tying them together.
#[derive(Debug, Clone)]
pub struct CompositeObjective {
    agents: Vec<ObjectiveSpec>,
    coordinators: Vec<ObjectiveSpec>,
    config: ScalarizationConfig,
    dim: usize,
}

impl CompositeObjective {
    pub fn new(
        agents: Vec<ObjectiveSpec>,
        coordinators: Vec<ObjectiveSpec>,
        config: ScalarizationConfig,
    ) -> Result<Self, ScalarError> {
        if agents.len() != config.m_agents {
            return Err(ScalarError::AgentCountMismatch(agents.len(), config.m_agents));
        }
        if coordinators.len() != config.n_coord {
            return Err(ScalarError::CoordinatorCountMismatch(
                coordinators.len(),
                config.n_coord,
            ));
        }
        let mut dim = None;
        for obj in agents.iter().chain(&coordinators) {
            if let Some(d) = obj.dim_hint() {
                match dim {
                    None => dim = Some(d),
                    Some(prev) if prev != d => {
                        return Err(ScalarError::ConflictingDims(prev, d))
                    }
                    _ => {}
                }
            }
        }
        let dim = dim.ok_or(ScalarError::UnboundedDim)?;
        Ok(Self {
            agents,
            coordinators,
            config,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &ScalarizationConfig {
        &self.config
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, i: usize) -> &ObjectiveSpec {
        &self.agents[i]
    }

    pub fn coordinators(&self) -> &[ObjectiveSpec] {
        &self.coordinators
    }

    /// Same instance under a different trade-off weight.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, ScalarError> {
        let config = ScalarizationConfig::new(lambda, self.config.m_agents, self.config.n_coord)?;
        Ok(Self {
            agents: self.agents.clone(),
            coordinators: self.coordinators.clone(),
            config,
            dim: self.dim,
        })
    }

    /// `Σⱼ Sⱼ(θ)`.
    pub fn coordinator_sum_value(&self, theta: &ParamVector) -> Result<f64, ScalarError> {
        let mut acc = 0.0;
        for s in &self.coordinators {
            acc += s.value(theta)?;
        }
        Ok(acc)
    }

    /// `∇ Σⱼ Sⱼ(θ)`.
    pub fn coordinator_sum_grad(&self, theta: &ParamVector) -> Result<ParamVector, ScalarError> {
        let mut acc = ParamVector::zeros(theta.dim());
        for s in &self.coordinators {
            acc = ParamVector::axpy(1.0, &s.grad(theta)?, &acc)?;
        }
        Ok(acc)
    }

    /// `Fᵢ(θ) = Cᵢ(θ) + α Σⱼ Sⱼ(θ)`.
    pub fn f_i_value(&self, i: usize, theta: &ParamVector) -> Result<f64, ScalarError> {
        Ok(self.agents[i].value(theta)? + self.config.alpha * self.coordinator_sum_value(theta)?)
    }

    pub fn f_i_grad(&self, i: usize, theta: &ParamVector) -> Result<ParamVector, ScalarError> {
        let g = self.agents[i].grad(theta)?;
        Ok(ParamVector::axpy(
            self.config.alpha,
            &self.coordinator_sum_grad(theta)?,
            &g,
        )?)
    }

    /// `F(θ) = (1/M) Σᵢ Fᵢ(θ)`.
    pub fn f_value(&self, theta: &ParamVector) -> Result<f64, ScalarError> {
        let mut acc = 0.0;
        for c in &self.agents {
            acc += c.value(theta)?;
        }
        Ok(acc / self.agents.len() as f64
            + self.config.alpha * self.coordinator_sum_value(theta)?)
    }

    pub fn f_grad(&self, theta: &ParamVector) -> Result<ParamVector, ScalarError> {
        let grads = self
            .agents
            .iter()
            .map(|c| c.grad(theta))
            .collect::<Result<Vec<_>, _>>()?;
        let mean = ParamVector::mean_of(&grads)?;
        Ok(ParamVector::axpy(
            self.config.alpha,
            &self.coordinator_sum_grad(theta)?,
            &mean,
        )?)
    }

    /// The surrogate loss `((1 − λ)/M) Σ Cᵢ + (λ/N) Σ Sⱼ`.
    ///
    /// Equals `(1 − λ) · F(θ)`; both sides are exposed so tests can check
    /// the identity.
    pub fn scalarized_value(&self, theta: &ParamVector) -> Result<f64, ScalarError> {
        let lambda = self.config.lambda;
        let mut agents = 0.0;
        for c in &self.agents {
            agents += c.value(theta)?;
        }
        let mut out = (1.0 - lambda) / self.agents.len() as f64 * agents;
        if self.config.n_coord > 0 {
            out += lambda / self.config.n_coord as f64 * self.coordinator_sum_value(theta)?;
        }
        Ok(out)
    }

    /// All `M + N` objective values at `θ`, agents first.
    pub fn objective_vector(&self, theta: &ParamVector) -> Result<ObjectiveVector, ScalarError> {
        let agent_values = self
            .agents
            .iter()
            .map(|c| c.value(theta))
            .collect::<Result<Vec<_>, _>>()?;
        let coordinator_values = self
            .coordinators
            .iter()
            .map(|s| s.value(theta))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ObjectiveVector::new(agent_values, coordinator_values)?)
    }

    /// Stochastic gradient of `Cᵢ` (the `g` line of the local update).
    pub fn agent_stoch_grad(
        &self,
        i: usize,
        theta: &ParamVector,
        noise: &NoiseModel,
        stream: RngStream,
    ) -> Result<ParamVector, ScalarError> {
        Ok(self.agents[i].stoch_grad(theta, noise.sigma_c, noise.distribution, stream)?)
    }

    /// Stochastic gradient of `Σⱼ Sⱼ` (the `h` line): the exact summed
    /// gradient perturbed by one noise draw of total variance `σ_S²`.
    pub fn coordinator_stoch_grad(
        &self,
        theta: &ParamVector,
        noise: &NoiseModel,
        stream: RngStream,
    ) -> Result<ParamVector, ScalarError> {
        let exact = self.coordinator_sum_grad(theta)?;
        match noise.distribution {
            NoiseKind::Zero => Ok(exact),
            NoiseKind::Gaussian if noise.sigma_s == 0.0 => Ok(exact),
            NoiseKind::Gaussian => {
                use rand::Rng;
                use rand_distr::StandardNormal;
                let mut rng = stream.rng();
                let per_comp = noise.sigma_s / (exact.dim() as f64).sqrt();
                let noisy: Vec<f64> = exact
                    .iter()
                    .map(|g| g + per_comp * rng.sample::<f64, _>(StandardNormal))
                    .collect();
                Ok(ParamVector::new(noisy)?)
            }
        }
    }

    /// Valid Lipschitz constant for every `∇Cᵢ` (the max over agents).
    pub fn l_c(&self) -> f64 {
        self.agents
            .iter()
            .map(|c| c.smoothness())
            .fold(0.0, f64::max)
    }

    /// Valid Lipschitz constant for `∇ Σⱼ Sⱼ` (the sum over coordinators).
    pub fn l_s(&self) -> f64 {
        self.coordinators.iter().map(|s| s.smoothness()).sum()
    }

    /// Exact minimizer of `F` for all-quadratic instances (agents
    /// `½aᵢ‖θ − cᵢ‖²`, coordinators `s‖θ‖²` or quadratic). `None` when
    /// any objective has no closed form.
    pub fn exact_minimizer(&self) -> Option<ParamVector> {
        let m = self.agents.len() as f64;
        let mut curv = 0.0;
        let mut weighted = vec![0.0; self.dim];
        for obj in &self.agents {
            match obj {
                ObjectiveSpec::Quadratic { center, curvature } => {
                    curv += curvature / m;
                    for (w, c) in weighted.iter_mut().zip(center.iter()) {
                        *w += curvature / m * c;
                    }
                }
                _ => return None,
            }
        }
        for obj in &self.coordinators {
            match obj {
                ObjectiveSpec::ScaledSqNorm { scale } => {
                    curv += self.config.alpha * 2.0 * scale;
                }
                ObjectiveSpec::Quadratic { center, curvature } => {
                    curv += self.config.alpha * curvature;
                    for (w, c) in weighted.iter_mut().zip(center.iter()) {
                        *w += self.config.alpha * curvature * c;
                    }
                }
                _ => return None,
            }
        }
        if curv <= 0.0 {
            return None;
        }
        for w in weighted.iter_mut() {
            *w /= curv;
        }
        ParamVector::new(weighted).ok()
    }
}

/// An axis-aligned uniform grid over a parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    mins: Vec<f64>,
    maxs: Vec<f64>,
    counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(mins: Vec<f64>, maxs: Vec<f64>, counts: Vec<usize>) -> Result<Self, ScalarError> {
        if mins.is_empty() || mins.len() != maxs.len() || mins.len() != counts.len() {
            return Err(ScalarError::BadGrid(
                "mins, maxs, counts must be non-empty and equal length".into(),
            ));
        }
        for ((lo, hi), n) in mins.iter().zip(&maxs).zip(&counts) {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(ScalarError::BadGrid(format!("bad axis range [{lo}, {hi}]")));
            }
            if *n == 0 {
                return Err(ScalarError::BadGrid("axis count must be >= 1".into()));
            }
        }
        let total: usize = counts.iter().try_fold(1usize, |acc, n| {
            acc.checked_mul(*n)
        }).ok_or(ScalarError::GridTooLarge { got: usize::MAX, max: MAX_GRID_POINTS })?;
        if total > MAX_GRID_POINTS {
            return Err(ScalarError::GridTooLarge {
                got: total,
                max: MAX_GRID_POINTS,
            });
        }
        Ok(Self { mins, maxs, counts })
    }

    /// 1-D grid with `count` points spanning `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, count: usize) -> Result<Self, ScalarError> {
        Self::new(vec![lo], vec![hi], vec![count])
    }

    pub fn dim(&self) -> usize {
        self.mins.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Point at flat index (row-major; the first axis varies slowest).
    pub fn point(&self, mut idx: usize) -> ParamVector {
        let d = self.dim();
        let mut coords = vec![0.0; d];
        for axis in (0..d).rev() {
            let n = self.counts[axis];
            let j = idx % n;
            idx /= n;
            coords[axis] = if n == 1 {
                self.mins[axis]
            } else {
                self.mins[axis] + (self.maxs[axis] - self.mins[axis]) * j as f64 / (n - 1) as f64
            };
        }
        ParamVector::new(coords).expect("grid points are finite")
    }

    pub fn points(&self) -> impl Iterator<Item = ParamVector> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParetoStatus {
    /// Some grid point strictly improves every objective.
    Dominated,
    /// No grid point dominates in the standard Pareto sense.
    NonDominated,
    /// No grid point strictly improves all objectives simultaneously.
    WeaklyNonDominated,
}

/// Outcome of a grid certificate; `witness` is the improving point when
/// the verdict is [`ParetoStatus::Dominated`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoVerdict {
    pub status: ParetoStatus,
    pub witness: Option<ParamVector>,
}

/// `a` dominates `b`: every component of `a` is `<=` and at least one is
/// strictly `<`. Equality is not dominance.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool, ScalarError> {
    if !a.same_shape(b) {
        return Err(ScalarError::ShapeMismatch);
    }
    let mut strict = false;
    for (x, y) in a.iter_all().zip(b.iter_all()) {
        if x > y {
            return Ok(false);
        }
        if x < y {
            strict = true;
        }
    }
    Ok(strict)
}

fn check_pareto_grid(comp: &CompositeObjective, grid: &GridSpec) -> Result<(), ScalarError> {
    if grid.dim() > MAX_PARETO_DIM {
        return Err(ScalarError::GridDimTooLarge {
            got: grid.dim(),
            max: MAX_PARETO_DIM,
        });
    }
    if grid.dim() != comp.dim() {
        return Err(ScalarError::GridDimMismatch {
            grid: grid.dim(),
            params: comp.dim(),
        });
    }
    Ok(())
}

fn evaluate_grid(
    comp: &CompositeObjective,
    grid: &GridSpec,
) -> Result<Vec<ObjectiveVector>, ScalarError> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| comp.objective_vector(&grid.point(i)))
        .collect()
}

/// All grid points whose objective vectors are not dominated by any other
/// grid point, in flat-index order.
pub fn brute_force_front(
    comp: &CompositeObjective,
    grid: &GridSpec,
) -> Result<Vec<ParamVector>, ScalarError> {
    check_pareto_grid(comp, grid)?;
    let values = evaluate_grid(comp, grid)?;
    // incremental nondominated archive over flat indices
    let mut archive: Vec<usize> = Vec::new();
    for i in 0..values.len() {
        let vi = &values[i];
        let mut dominated = false;
        for &j in &archive {
            if dominates(&values[j], vi)? {
                dominated = true;
                break;
            }
        }
        if dominated {
            continue;
        }
        let mut kept = Vec::with_capacity(archive.len() + 1);
        for &j in &archive {
            if !dominates(vi, &values[j])? {
                kept.push(j);
            }
        }
        kept.push(i);
        archive = kept;
    }
    archive.sort_unstable();
    Ok(archive.into_iter().map(|i| grid.point(i)).collect())
}

/// Certificate that no grid point strictly improves *all* objectives at
/// `theta` by more than `tol` (grid-level weak Pareto optimality).
///
/// When violated, the witness is the grid point with the largest
/// worst-objective improvement (lowest flat index on ties), i.e. the
/// most convincing counterexample rather than a marginal one.
pub fn check_weak_pareto(
    comp: &CompositeObjective,
    theta: &ParamVector,
    grid: &GridSpec,
    tol: f64,
) -> Result<ParetoVerdict, ScalarError> {
    check_pareto_grid(comp, grid)?;
    let at_theta = comp.objective_vector(theta)?;
    let mut best: Option<(f64, usize)> = None;
    for i in 0..grid.len() {
        let v = comp.objective_vector(&grid.point(i))?;
        let min_improvement = v
            .iter_all()
            .zip(at_theta.iter_all())
            .map(|(x, y)| y - x)
            .fold(f64::INFINITY, f64::min);
        if min_improvement > tol && best.map_or(true, |(b, _)| min_improvement > b) {
            best = Some((min_improvement, i));
        }
    }
    match best {
        Some((_, i)) => Ok(ParetoVerdict {
            status: ParetoStatus::Dominated,
            witness: Some(grid.point(i)),
        }),
        None => Ok(ParetoVerdict {
            status: ParetoStatus::WeaklyNonDominated,
            witness: None,
        }),
    }
}

/// Certificate against standard dominance: `Dominated` when some grid
/// point is `<= theta + tol` everywhere and `< theta − tol` somewhere,
/// `NonDominated` otherwise.
pub fn check_pareto(
    comp: &CompositeObjective,
    theta: &ParamVector,
    grid: &GridSpec,
    tol: f64,
) -> Result<ParetoVerdict, ScalarError> {
    check_pareto_grid(comp, grid)?;
    let at_theta = comp.objective_vector(theta)?;
    for i in 0..grid.len() {
        let q = grid.point(i);
        let v = comp.objective_vector(&q)?;
        let weak_all = v
            .iter_all()
            .zip(at_theta.iter_all())
            .all(|(x, y)| x <= y + tol);
        let strict_one = v
            .iter_all()
            .zip(at_theta.iter_all())
            .any(|(x, y)| x < y - tol);
        if weak_all && strict_one {
            return Ok(ParetoVerdict {
                status: ParetoStatus::Dominated,
                witness: Some(q),
            });
        }
    }
    Ok(ParetoVerdict {
        status: ParetoStatus::NonDominated,
        witness: None,
    })
}

/// Grid argmin of the scalarized surrogate (lowest flat index on ties).
pub fn scalarized_argmin(
    comp: &CompositeObjective,
    grid: &GridSpec,
) -> Result<ParamVector, ScalarError> {
    let mut best = 0usize;
    let mut best_v = f64::INFINITY;
    for i in 0..grid.len() {
        let v = comp.scalarized_value(&grid.point(i))?;
        if v < best_v {
            best_v = v;
            best = i;
        }
    }
    Ok(grid.point(best))
}
