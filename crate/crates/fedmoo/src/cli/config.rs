//! Experiment configuration: strict JSON schema, defaults, validation.
//!
//! Unknown keys are rejected everywhere; parse errors carry the JSON path
//! of the offending field. Defaults mirror the reference experiment
//! protocol (5 agents, 8000/2000 samples per agent, 50 rounds, one local
//! epoch, fixed step 0.001, coordinator `100·‖θ‖²`, the standard λ grid).

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::trainer::{LrSchedule, RoundInit, TrainConfig};

pub const DEFAULT_LAMBDA_SWEEP: [f64; 6] = [0.0, 0.25, 0.5, 0.65, 0.75, 0.87];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default = "default_lambda_sweep")]
    pub lambda_sweep: Vec<f64>,
    #[serde(default = "default_coordinator_scale")]
    pub coordinator_scale: f64,
    #[serde(default)]
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    /// Minibatch size for softmax stochastic gradients; absent = full batch.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub l2: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    /// Grid for the `pareto` subcommand (1–2D synthetic instances).
    #[serde(default)]
    pub pareto_grid: Option<GridConfig>,
    /// Replicates per λ for the `check-bounds` subcommand.
    #[serde(default = "default_bound_seeds")]
    pub bound_seeds: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Quadratic agents `½a‖θ − cᵢ‖²` with one `s‖θ‖²` coordinator.
    SyntheticQuadratic {
        centers: Vec<Vec<f64>>,
        #[serde(default = "default_curvature")]
        curvature: f64,
        #[serde(default)]
        init: Option<Vec<f64>>,
    },
    /// Synthetic digit images generated in-process through the IDX path.
    SyntheticSoftmax {
        #[serde(default = "default_n_train")]
        n_train: usize,
        #[serde(default = "default_n_test")]
        n_test: usize,
        #[serde(default = "default_m_agents")]
        m_agents: usize,
        #[serde(default = "default_train_per_agent")]
        train_per_agent: usize,
        #[serde(default = "default_val_per_agent")]
        val_per_agent: usize,
        /// Seed of the dataset generator (independent of run seeds).
        #[serde(default = "default_generator_seed")]
        generator_seed: u64,
    },
    /// Real MNIST IDX files supplied by the operator.
    MnistSoftmax {
        data_dir: String,
        #[serde(default = "default_m_agents")]
        m_agents: usize,
        #[serde(default = "default_train_per_agent")]
        train_per_agent: usize,
        #[serde(default = "default_val_per_agent")]
        val_per_agent: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    Iid,
    LabelPairs { pairs: Vec<(u8, u8)> },
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig::Iid
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerConfig {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_local_epochs")]
    pub local_epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: LrConfig,
    #[serde(default)]
    pub parallel_agents: bool,
    /// Record `F(Θ̄^{t,k})`; defaults to on for quadratic instances and
    /// off for dataset instances.
    #[serde(default)]
    pub record_f_bar: Option<bool>,
    #[serde(default)]
    pub enforce_lr_bound: bool,
    /// Restart every round from `Θ⁰` (a degenerate variant kept for
    /// comparison; it cannot progress across rounds).
    #[serde(default)]
    pub reset_rounds_to_initial: bool,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            rounds: default_rounds(),
            local_epochs: default_local_epochs(),
            lr: default_lr(),
            parallel_agents: false,
            record_f_bar: None,
            enforce_lr_bound: false,
            reset_rounds_to_initial: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrConfig {
    Fixed(f64),
    Decaying,
}

impl LrConfig {
    pub fn to_schedule(self) -> LrSchedule {
        match self {
            LrConfig::Fixed(eta) => LrSchedule::Fixed(eta),
            LrConfig::Decaying => LrSchedule::Decaying,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub sigma_c: f64,
    #[serde(default)]
    pub sigma_s: f64,
    #[serde(default = "default_distribution")]
    pub distribution: NoiseDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    Zero,
    Gaussian,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_c: 0.0,
            sigma_s: 0.0,
            distribution: NoiseDistribution::Zero,
        }
    }
}

impl NoiseConfig {
    pub fn to_model(self) -> crate::objectives::NoiseModel {
        crate::objectives::NoiseModel {
            sigma_c: self.sigma_c,
            sigma_s: self.sigma_s,
            distribution: match self.distribution {
                NoiseDistribution::Zero => crate::objectives::NoiseKind::Zero,
                NoiseDistribution::Gaussian => crate::objectives::NoiseKind::Gaussian,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub mins: Vec<f64>,
    pub maxs: Vec<f64>,
    pub counts: Vec<usize>,
}

fn default_lambda_sweep() -> Vec<f64> {
    DEFAULT_LAMBDA_SWEEP.to_vec()
}
fn default_coordinator_scale() -> f64 {
    100.0
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_output_dir() -> String {
    "out".into()
}
fn default_bound_seeds() -> usize {
    32
}
fn default_curvature() -> f64 {
    1.0
}
fn default_n_train() -> usize {
    60_000
}
fn default_n_test() -> usize {
    10_000
}
fn default_m_agents() -> usize {
    5
}
fn default_train_per_agent() -> usize {
    8_000
}
fn default_val_per_agent() -> usize {
    2_000
}
fn default_generator_seed() -> u64 {
    12_345
}
fn default_rounds() -> usize {
    50
}
fn default_local_epochs() -> usize {
    1
}
fn default_lr() -> LrConfig {
    LrConfig::Fixed(0.001)
}
fn default_distribution() -> NoiseDistribution {
    NoiseDistribution::Zero
}

impl ExperimentConfig {
    pub fn num_agents(&self) -> usize {
        match &self.instance {
            InstanceConfig::SyntheticQuadratic { centers, .. } => centers.len(),
            InstanceConfig::SyntheticSoftmax { m_agents, .. } => *m_agents,
            InstanceConfig::MnistSoftmax { m_agents, .. } => *m_agents,
        }
    }

    /// Whether bound reports apply (synthetic quadratic instances only).
    pub fn is_quadratic(&self) -> bool {
        matches!(self.instance, InstanceConfig::SyntheticQuadratic { .. })
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.trainer;
        TrainConfig {
            rounds: t.rounds,
            local_epochs: t.local_epochs,
            lr: t.lr.to_schedule(),
            seed,
            parallel_agents: t.parallel_agents,
            round_init: if t.reset_rounds_to_initial {
                RoundInit::ResetToInitial
            } else {
                RoundInit::CurrentGlobal
            },
            record_f_bar: t.record_f_bar.unwrap_or(self.is_quadratic()),
            enforce_lr_bound: t.enforce_lr_bound,
            divergence_limit: 1e12,
        }
    }
}

/// Parse and validate a config document. Errors name the offending field
/// (JSON path, line and column for syntax errors) and the violated rule.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(raw);
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Config(format!(
            "config parse error at `{}`: {}",
            e.path(),
            e.inner()
        ))
    })?;
    semantic_checks(&cfg)?;
    Ok(cfg)
}

fn semantic_checks(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.lambda_sweep.is_empty() {
        return Err(CliError::Config("lambda_sweep must be nonempty".into()));
    }
    for l in &cfg.lambda_sweep {
        if !l.is_finite() || *l < 0.0 || *l >= 1.0 {
            return Err(CliError::Config(format!(
                "lambda must be < 1 and >= 0: got {l}"
            )));
        }
    }
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("seeds must be nonempty".into()));
    }
    if !(cfg.coordinator_scale >= 0.0) || !cfg.coordinator_scale.is_finite() {
        return Err(CliError::Config(
            "coordinator_scale must be finite and >= 0".into(),
        ));
    }
    if cfg.trainer.rounds == 0 {
        return Err(CliError::Config("trainer.rounds must be >= 1".into()));
    }
    if cfg.trainer.local_epochs == 0 {
        return Err(CliError::Config("trainer.local_epochs must be >= 1".into()));
    }
    if let LrConfig::Fixed(eta) = cfg.trainer.lr {
        if !eta.is_finite() || eta < 0.0 {
            return Err(CliError::Config(format!(
                "trainer.lr.fixed must be finite and >= 0: got {eta}"
            )));
        }
    }
    if !(cfg.l2 >= 0.0) || !cfg.l2.is_finite() {
        return Err(CliError::Config("l2 must be finite and >= 0".into()));
    }
    if cfg.noise.sigma_c < 0.0 || cfg.noise.sigma_s < 0.0 {
        return Err(CliError::Config("noise sigmas must be >= 0".into()));
    }
    if cfg.bound_seeds == 0 {
        return Err(CliError::Config("bound_seeds must be >= 1".into()));
    }
    if let Some(b) = cfg.batch_size {
        if b == 0 {
            return Err(CliError::Config("batch_size must be >= 1".into()));
        }
    }
    match &cfg.instance {
        InstanceConfig::SyntheticQuadratic {
            centers, curvature, init,
        } => {
            if centers.is_empty() {
                return Err(CliError::Config("instance.centers must be nonempty".into()));
            }
            let d = centers[0].len();
            if d == 0 || centers.iter().any(|c| c.len() != d) {
                return Err(CliError::Config(
                    "instance.centers must share one nonzero dimension".into(),
                ));
            }
            if !(*curvature > 0.0) || !curvature.is_finite() {
                return Err(CliError::Config("instance.curvature must be > 0".into()));
            }
            if let Some(init) = init {
                if init.len() != d {
                    return Err(CliError::Config(format!(
                        "instance.init has dimension {}, centers have {d}",
                        init.len()
                    )));
                }
            }
        }
        InstanceConfig::SyntheticSoftmax {
            n_train,
            n_test,
            m_agents,
            train_per_agent,
            val_per_agent,
            ..
        } => {
            if *m_agents == 0 {
                return Err(CliError::Config("instance.m_agents must be >= 1".into()));
            }
            if *n_test == 0 {
                return Err(CliError::Config("instance.n_test must be >= 1".into()));
            }
            if m_agents * (train_per_agent + val_per_agent) > *n_train {
                return Err(CliError::Config(format!(
                    "instance.n_train = {} cannot cover {} agents × {} samples",
                    n_train,
                    m_agents,
                    train_per_agent + val_per_agent
                )));
            }
        }
        InstanceConfig::MnistSoftmax { m_agents, .. } => {
            if *m_agents == 0 {
                return Err(CliError::Config("instance.m_agents must be >= 1".into()));
            }
        }
    }
    if let PartitionConfig::LabelPairs { pairs } = &cfg.partition {
        if pairs.len() != cfg.num_agents() {
            return Err(CliError::Config(format!(
                "partition.pairs has {} entries for {} agents",
                pairs.len(),
                cfg.num_agents()
            )));
        }
        if cfg.is_quadratic() {
            return Err(CliError::Config(
                "label-pair partitions only apply to dataset instances".into(),
            ));
        }
    }
    if let Some(grid) = &cfg.pareto_grid {
        if grid.mins.len() != grid.maxs.len() || grid.mins.len() != grid.counts.len() {
            return Err(CliError::Config(
                "pareto_grid mins/maxs/counts must have equal lengths".into(),
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_lists_missing_field() {
        let err = validate_config("{}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("instance"), "message was: {msg}");
    }

    #[test]
    fn lambda_one_is_rejected() {
        let raw = r#"{
            "instance": {"kind": "synthetic_quadratic", "centers": [[0.0], [2.0]]},
            "lambda_sweep": [1.0]
        }"#;
        let err = validate_config(raw).unwrap_err();
        assert!(err.to_string().contains("lambda must be < 1"));
    }

    #[test]
    fn minimal_quadratic_config_is_runnable() {
        let raw = r#"{
            "instance": {"kind": "synthetic_quadratic", "centers": [[0.0], [2.0]]}
        }"#;
        let cfg = validate_config(raw).unwrap();
        assert_eq!(cfg.num_agents(), 2);
        assert_eq!(cfg.lambda_sweep, DEFAULT_LAMBDA_SWEEP.to_vec());
        assert_eq!(cfg.coordinator_scale, 100.0);
        assert_eq!(cfg.trainer.rounds, 50);
        assert!(matches!(cfg.trainer.lr, LrConfig::Fixed(eta) if eta == 0.001));
        let tc = cfg.train_config(7);
        assert!(tc.record_f_bar); // quadratic default
        assert_eq!(tc.seed, 7);
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let raw = r#"{
            "instance": {"kind": "synthetic_quadratic", "centers": [[0.0]], "bogus": 1}
        }"#;
        let err = validate_config(raw).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") || msg.contains("instance"), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_location() {
        let err = validate_config("{\n  \"instance\": ,\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line") || msg.contains("column") || msg.contains("2"), "{msg}");
    }

    #[test]
    fn pair_count_must_match_agents() {
        let raw = r#"{
            "instance": {"kind": "synthetic_softmax", "n_train": 100, "n_test": 10,
                         "m_agents": 2, "train_per_agent": 20, "val_per_agent": 5},
            "partition": {"scheme": "label_pairs", "pairs": [[0, 1]]}
        }"#;
        let err = validate_config(raw).unwrap_err();
        assert!(err.to_string().contains("pairs"));
    }
}
