//! The decentralized training loop: `T` rounds, each agent running `τ`
//! local passes of stochastic steps on `F_i = C_i + α Σ_j S_j` from the
//! current global parameters, followed by mean aggregation.
//!
//! Each round starts every agent from the *current* global parameters
//! and aggregation takes the arithmetic mean of the local results, which
//! keeps the averaged iterates `Θ̄^{t,k}` continuous across rounds. A
//! degenerate variant that instead resets each round to the initial
//! guess is kept behind [`RoundInit::ResetToInitial`] for comparison; it
//! cannot make progress across rounds by construction.
//!
//! Determinism: all stochastic draws are keyed by
//! `(seed, round, agent, step, lane)`, so the trace is identical whether
//! agents run sequentially or in parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{CoreError, ParamVector, RngStream, StreamLane};
use crate::objectives::{NoiseModel, ObjectiveError};
use crate::scalarization::{CompositeObjective, ScalarError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("non-finite parameters at round {round}, agent {agent}, step {epoch}")]
    NonFinite {
        round: usize,
        agent: usize,
        epoch: usize,
    },
    #[error("parameters exceeded {limit:e} at round {round}; last finite trace attached")]
    Diverged {
        round: usize,
        limit: f64,
        trace: Box<RunTrace>,
    },
    #[error("learning rate {eta} violates the stability bound 1/(4L) = {bound}")]
    LrBoundViolated { eta: f64, bound: f64 },
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Learning-rate selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    /// Constant step size.
    Fixed(f64),
    /// `η = 1/(4·L·τ·√T)` computed from the instance's smoothness
    /// constants; always satisfies `η ≤ 1/(4L)`.
    Decaying,
}

/// What each agent's local iterate is reset to at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundInit {
    /// Continue from the aggregated global parameters (the default).
    CurrentGlobal,
    /// Reset to the initial guess every round; rounds then differ only
    /// through their stochastic draws.
    ResetToInitial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Total rounds `T >= 1`.
    pub rounds: usize,
    /// Local passes per round `τ >= 1`. For analytic objectives one pass
    /// is one stochastic step; for minibatch softmax one pass is `⌈n/b⌉`
    /// steps.
    pub local_epochs: usize,
    pub lr: LrSchedule,
    pub seed: u64,
    pub parallel_agents: bool,
    pub round_init: RoundInit,
    /// Record `F(Θ̄^{t,k})` at every local step (costs one full objective
    /// evaluation per step; disable for large dataset instances).
    pub record_f_bar: bool,
    /// Reject a fixed η that exceeds the stability bound `1/(4L)`.
    pub enforce_lr_bound: bool,
    /// Abort when any parameter norm exceeds this.
    pub divergence_limit: f64,
}

impl TrainConfig {
    pub fn new(rounds: usize, local_epochs: usize, lr: LrSchedule, seed: u64) -> Self {
        Self {
            rounds,
            local_epochs,
            lr,
            seed,
            parallel_agents: false,
            round_init: RoundInit::CurrentGlobal,
            record_f_bar: true,
            enforce_lr_bound: false,
            divergence_limit: 1e12,
        }
    }

    fn validate(&self) -> Result<(), TrainError> {
        if self.rounds == 0 {
            return Err(TrainError::InvalidConfig("rounds must be >= 1".into()));
        }
        if self.local_epochs == 0 {
            return Err(TrainError::InvalidConfig(
                "local_epochs must be >= 1".into(),
            ));
        }
        if let LrSchedule::Fixed(eta) = self.lr {
            if !eta.is_finite() || eta < 0.0 {
                return Err(TrainError::InvalidConfig(format!(
                    "fixed learning rate must be finite and >= 0, got {eta}"
                )));
            }
        }
        if !(self.divergence_limit > 0.0) {
            return Err(TrainError::InvalidConfig(
                "divergence_limit must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One agent's local iterate at coordinates `(round, epoch)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// 1-based agent id.
    pub agent_id: usize,
    pub theta: ParamVector,
    pub round: usize,
    pub epoch: usize,
}

/// Per-round record: the aggregated parameters, each agent's final local
/// parameters, and the per-step diagnostics used by the bound checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub round: usize,
    /// `Θᵗ`, the mean of the agents' final local parameters.
    pub global_theta: ParamVector,
    pub agent_final_thetas: Vec<ParamVector>,
    /// `F(Θ̄^{t,k})` for `k = 1..steps`, when recording is enabled.
    pub f_bar: Option<Vec<f64>>,
    /// `max_i ‖Θ_i^{t,k} − Θ̄^{t,k}‖²` for `k = 1..steps`.
    pub drift_max: Vec<f64>,
    /// Order-fixed fold of all local iterate norms; a cheap digest for
    /// comparing the stochastic draws of two runs.
    pub traj_digest: f64,
}

/// Full record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    pub eta: f64,
    pub steps_per_round: usize,
    pub init_theta: ParamVector,
    pub rounds: Vec<RoundRecord>,
}

impl RunTrace {
    pub fn final_theta(&self) -> &ParamVector {
        &self.rounds.last().expect("trace has >= 1 round").global_theta
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Mean of `F(Θ̄^{t,k})` over every recorded `(t, k)` cell.
    pub fn mean_f_bar(&self) -> Option<f64> {
        let mut acc = 0.0;
        let mut n = 0usize;
        for r in &self.rounds {
            let f = r.f_bar.as_ref()?;
            acc += f.iter().sum::<f64>();
            n += f.len();
        }
        if n == 0 {
            None
        } else {
            Some(acc / n as f64)
        }
    }

    /// Largest recorded drift over all `(t, k)` cells.
    pub fn max_drift(&self) -> f64 {
        self.rounds
            .iter()
            .flat_map(|r| r.drift_max.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Mean aggregation `Θᵗ = (1/M) Σ Θ_i`.
pub fn aggregate(locals: &[ParamVector]) -> Result<ParamVector, TrainError> {
    Ok(ParamVector::mean_of(locals)?)
}

/// Learning rate implied by the config for this instance.
pub fn resolve_eta(comp: &CompositeObjective, cfg: &TrainConfig) -> Result<f64, TrainError> {
    match cfg.lr {
        LrSchedule::Fixed(eta) => {
            if cfg.enforce_lr_bound {
                let l = composite_smoothness(comp);
                if l > 0.0 {
                    let bound = 1.0 / (4.0 * l);
                    if eta > bound * (1.0 + 1e-12) {
                        return Err(TrainError::LrBoundViolated { eta, bound });
                    }
                }
            }
            Ok(eta)
        }
        LrSchedule::Decaying => {
            let l = composite_smoothness(comp);
            if l <= 0.0 {
                return Err(TrainError::InvalidConfig(
                    "rate schedule needs L > 0 (flat objective)".into(),
                ));
            }
            Ok(1.0 / (4.0 * l * cfg.local_epochs as f64 * (cfg.rounds as f64).sqrt()))
        }
    }
}

/// `L = L_C + α·L_S` for the instance.
pub fn composite_smoothness(comp: &CompositeObjective) -> f64 {
    comp.l_c() + comp.config().alpha * comp.l_s()
}

/// One stochastic update `θ' = θ − η (g + α h)` at the state's
/// coordinates. `g` is the agent's stochastic gradient of `C_i`, `h` the
/// stochastic gradient of `Σ_j S_j`; both draws are keyed by
/// `(seed, round, agent, epoch)` on separate lanes.
pub fn local_step(
    state: &AgentState,
    comp: &CompositeObjective,
    noise: &NoiseModel,
    eta: f64,
    seed: u64,
) -> Result<AgentState, TrainError> {
    let (t, i, k) = (state.round, state.agent_id, state.epoch);
    let g_stream = RngStream::for_step(seed, t as u64, i as u64, k as u64, StreamLane::AgentNoise);
    let g = comp.agent_stoch_grad(i - 1, &state.theta, noise, g_stream)?;
    let alpha = comp.config().alpha;
    let direction = if alpha != 0.0 && !comp.coordinators().is_empty() {
        let h_stream =
            RngStream::for_step(seed, t as u64, i as u64, k as u64, StreamLane::CoordinatorNoise);
        let h = comp.coordinator_stoch_grad(&state.theta, noise, h_stream)?;
        ParamVector::axpy(alpha, &h, &g)?
    } else {
        g
    };
    let theta = ParamVector::axpy(-eta, &direction, &state.theta).map_err(|e| match e {
        CoreError::NonFinite { .. } => TrainError::NonFinite {
            round: t,
            agent: i,
            epoch: k,
        },
        other => TrainError::Core(other),
    })?;
    Ok(AgentState {
        agent_id: state.agent_id,
        theta,
        round: t,
        epoch: k + 1,
    })
}

enum RoundFailure {
    /// A local iterate crossed the divergence guard.
    Guard,
    Step(TrainError),
}

#[allow(clippy::too_many_arguments)]
fn agent_round(
    comp: &CompositeObjective,
    noise: &NoiseModel,
    eta: f64,
    seed: u64,
    start: &ParamVector,
    agent_id: usize,
    round: usize,
    steps: usize,
    guard_limit_sq: f64,
) -> Result<Vec<ParamVector>, RoundFailure> {
    let mut state = AgentState {
        agent_id,
        theta: start.clone(),
        round,
        epoch: 0,
    };
    let mut trajectory = Vec::with_capacity(steps);
    for _ in 0..steps {
        state = local_step(&state, comp, noise, eta, seed).map_err(RoundFailure::Step)?;
        if state.theta.norm_sq() > guard_limit_sq {
            return Err(RoundFailure::Guard);
        }
        trajectory.push(state.theta.clone());
    }
    Ok(trajectory)
}

/// Execute the full training loop.
///
/// On divergence the error carries the trace of all completed rounds.
pub fn run(
    comp: &CompositeObjective,
    cfg: &TrainConfig,
    init: &ParamVector,
    noise: &NoiseModel,
) -> Result<RunTrace, TrainError> {
    cfg.validate()?;
    noise.validate()?;
    if init.dim() != comp.dim() {
        return Err(TrainError::InvalidConfig(format!(
            "init has dimension {}, instance needs {}",
            init.dim(),
            comp.dim()
        )));
    }
    let m = comp.num_agents();
    let steps_per_epoch = comp.agent(0).steps_per_epoch();
    for i in 1..m {
        if comp.agent(i).steps_per_epoch() != steps_per_epoch {
            return Err(TrainError::InvalidConfig(
                "agents disagree on steps per epoch (unequal data sizes)".into(),
            ));
        }
    }
    let steps = cfg.local_epochs * steps_per_epoch;
    let eta = resolve_eta(comp, cfg)?;

    let mut trace = RunTrace {
        seed: cfg.seed,
        eta,
        steps_per_round: steps,
        init_theta: init.clone(),
        rounds: Vec::with_capacity(cfg.rounds),
    };
    let mut global = init.clone();

    for t in 0..cfg.rounds {
        let start = match cfg.round_init {
            RoundInit::CurrentGlobal => &global,
            RoundInit::ResetToInitial => init,
        };
        let limit_sq = cfg.divergence_limit * cfg.divergence_limit;
        let run_agent = |i: usize| {
            agent_round(comp, noise, eta, cfg.seed, start, i + 1, t, steps, limit_sq)
        };
        let collected: Result<Vec<Vec<ParamVector>>, RoundFailure> = if cfg.parallel_agents {
            (0..m).into_par_iter().map(run_agent).collect()
        } else {
            (0..m).map(run_agent).collect()
        };
        let trajectories = match collected {
            Ok(t) => t,
            Err(RoundFailure::Guard) => {
                return Err(TrainError::Diverged {
                    round: t + 1,
                    limit: cfg.divergence_limit,
                    trace: Box::new(trace),
                })
            }
            Err(RoundFailure::Step(e)) => return Err(e),
        };

        let mut drift_max = Vec::with_capacity(steps);
        let mut f_bar = cfg.record_f_bar.then(|| Vec::with_capacity(steps));
        let mut digest = 0.0;
        let mut step_locals = Vec::with_capacity(m);
        let mut mean_k = start.clone();
        for k in 0..steps {
            step_locals.clear();
            for traj in &trajectories {
                step_locals.push(traj[k].clone());
            }
            mean_k = aggregate(&step_locals)?;
            let mut worst = 0.0_f64;
            for local in &step_locals {
                worst = worst.max(local.dist_sq(&mean_k)?);
                digest += local.norm_sq();
            }
            drift_max.push(worst);
            if let Some(f) = f_bar.as_mut() {
                f.push(comp.f_value(&mean_k)?);
            }
        }

        let finals: Vec<ParamVector> = trajectories
            .iter()
            .map(|traj| traj[steps - 1].clone())
            .collect();
        global = mean_k;

        if global.norm_sq() > limit_sq {
            return Err(TrainError::Diverged {
                round: t + 1,
                limit: cfg.divergence_limit,
                trace: Box::new(trace),
            });
        }

        trace.rounds.push(RoundRecord {
            round: t + 1,
            global_theta: global.clone(),
            agent_final_thetas: finals,
            f_bar,
            drift_max,
            traj_digest: digest,
        });
    }
    Ok(trace)
}
