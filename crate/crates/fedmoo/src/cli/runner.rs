//! Experiment orchestration: instance building, the λ × seed sweep,
//! bound checking, and the Pareto front oracle.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::artifacts::{config_hash, csv, fmt_f64, fmt_opt, write_file};
use super::config::{
    ExperimentConfig, InstanceConfig, LrConfig, PartitionConfig,
};
use super::CliError;
use crate::core::{ParamVector, RngStream, StreamLane};
use crate::data::{
    load_mnist_dir, parse_idx, partition_iid, partition_label_pairs, synth_digits_dataset, Dataset,
    DigitSynthParams,
};
use crate::metrics::{evaluate, EvalReport};
use crate::objectives::{DatasetHandle, ObjectiveSpec, Split};
use crate::scalarization::{
    brute_force_front, check_weak_pareto, scalarized_argmin, CompositeObjective, GridSpec,
    ParetoStatus, ScalarizationConfig,
};
use crate::theory::{self, BoundReport};
use crate::trainer::{self, RunTrace, TrainError};

/// Command-line overrides (flags win over config and environment).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// Parameters blew past the guard; the λ is reported, the sweep
    /// continues.
    Diverged,
    /// Training finished but test accuracy stayed at or below 0.15.
    DegenerateAccuracy,
}

impl CellStatus {
    fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Diverged => "diverged",
            CellStatus::DegenerateAccuracy => "degenerate_accuracy",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellOutcome {
    pub lambda: f64,
    pub seed: u64,
    pub status: CellStatus,
    pub test_accuracy: Option<f64>,
    pub test_f1: Option<f64>,
    pub final_gap: Option<f64>,
    pub max_drift: Option<f64>,
}

#[derive(Debug)]
pub struct SweepSummary {
    pub outcomes: Vec<CellOutcome>,
    pub config_hash: String,
    pub output_dir: PathBuf,
    pub summary_path: PathBuf,
}

enum Instance {
    Quadratic {
        centers: Vec<ParamVector>,
        curvature: f64,
        init: ParamVector,
    },
    Softmax {
        /// Per run-seed: (train handles, val handles) per agent.
        by_seed: BTreeMap<u64, (Vec<DatasetHandle>, Vec<DatasetHandle>)>,
        test: DatasetHandle,
        dim: usize,
    },
}

fn build_dataset_pools(cfg: &ExperimentConfig) -> Result<Option<(Dataset, Dataset)>, CliError> {
    match &cfg.instance {
        InstanceConfig::SyntheticQuadratic { .. } => Ok(None),
        InstanceConfig::SyntheticSoftmax {
            n_train,
            n_test,
            generator_seed,
            ..
        } => {
            let (train, test) = synth_digits_dataset(
                *n_train,
                *n_test,
                &DigitSynthParams::default(),
                *generator_seed,
            )
            .map_err(|e| CliError::Internal(format!("digit synthesis failed: {e}")))?;
            Ok(Some((train, test)))
        }
        InstanceConfig::MnistSoftmax { data_dir, .. } => {
            let dir = Path::new(data_dir);
            if !dir.is_dir() {
                return Err(CliError::io(
                    data_dir.clone(),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory missing"),
                ));
            }
            let (train, test) = load_mnist_dir(dir).map_err(|e| match e {
                crate::data::DataError::Io(io) => CliError::io(data_dir.clone(), io),
                other => CliError::Internal(format!("MNIST load failed: {other}")),
            })?;
            Ok(Some((train, test)))
        }
    }
}

fn agent_handles(
    cfg: &ExperimentConfig,
    pool: &Dataset,
    seed: u64,
) -> Result<(Vec<DatasetHandle>, Vec<DatasetHandle>), CliError> {
    let (m, train_per, val_per) = match &cfg.instance {
        InstanceConfig::SyntheticSoftmax {
            m_agents,
            train_per_agent,
            val_per_agent,
            ..
        }
        | InstanceConfig::MnistSoftmax {
            m_agents,
            train_per_agent,
            val_per_agent,
            ..
        } => (*m_agents, *train_per_agent, *val_per_agent),
        InstanceConfig::SyntheticQuadratic { .. } => {
            return Err(CliError::Internal(
                "quadratic instances have no dataset".into(),
            ))
        }
    };
    let stream = RngStream::for_data(seed, 0, StreamLane::Partition);
    let partition = match &cfg.partition {
        PartitionConfig::Iid => partition_iid(pool.len(), m, train_per, val_per, stream),
        PartitionConfig::LabelPairs { pairs } => {
            partition_label_pairs(&pool.labels, pairs, train_per, val_per, stream)
        }
    }
    .map_err(|e| CliError::Config(format!("partition failed: {e}")))?;
    let mut train = Vec::with_capacity(m);
    let mut val = Vec::with_capacity(m);
    for assign in &partition.agents {
        train.push(
            pool.handle(assign.train.clone(), Split::Train)
                .map_err(|e| CliError::Internal(e.to_string()))?,
        );
        val.push(
            pool.handle(assign.val.clone(), Split::Val)
                .map_err(|e| CliError::Internal(e.to_string()))?,
        );
    }
    Ok((train, val))
}

fn build_instance(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Instance, CliError> {
    match &cfg.instance {
        InstanceConfig::SyntheticQuadratic {
            centers,
            curvature,
            init,
        } => {
            let centers: Vec<ParamVector> = centers
                .iter()
                .map(|c| ParamVector::new(c.clone()))
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Config(format!("bad center: {e}")))?;
            let d = centers[0].dim();
            let init = match init {
                Some(v) => ParamVector::new(v.clone())
                    .map_err(|e| CliError::Config(format!("bad init: {e}")))?,
                None => ParamVector::zeros(d),
            };
            Ok(Instance::Quadratic {
                centers,
                curvature: *curvature,
                init,
            })
        }
        _ => {
            let (pool, test_pool) = build_dataset_pools(cfg)?.expect("dataset instance");
            let test = test_pool
                .full_handle(Split::Test)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            let dim = test.num_classes() * test.feature_dim();
            let mut by_seed = BTreeMap::new();
            for &seed in seeds {
                by_seed.insert(seed, agent_handles(cfg, &pool, seed)?);
            }
            Ok(Instance::Softmax { by_seed, test, dim })
        }
    }
}

fn composite_for(
    cfg: &ExperimentConfig,
    instance: &Instance,
    lambda: f64,
    seed: u64,
) -> Result<(CompositeObjective, ParamVector), CliError> {
    let coordinators = vec![ObjectiveSpec::ScaledSqNorm {
        scale: cfg.coordinator_scale,
    }];
    let build = |agents: Vec<ObjectiveSpec>, init: ParamVector| {
        let sc = ScalarizationConfig::new(lambda, agents.len(), coordinators.len())
            .map_err(|e| CliError::Config(e.to_string()))?;
        let comp = CompositeObjective::new(agents, coordinators.clone(), sc)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        Ok::<_, CliError>((comp, init))
    };
    match instance {
        Instance::Quadratic {
            centers,
            curvature,
            init,
        } => {
            let agents = centers
                .iter()
                .map(|c| ObjectiveSpec::Quadratic {
                    center: c.clone(),
                    curvature: *curvature,
                })
                .collect();
            build(agents, init.clone())
        }
        Instance::Softmax { by_seed, dim, .. } => {
            let (train, _) = by_seed.get(&seed).expect("handles built for every seed");
            let agents = train
                .iter()
                .map(|h| ObjectiveSpec::SoftmaxCE {
                    data: h.clone(),
                    l2: cfg.l2,
                    batch: cfg.batch_size,
                })
                .collect();
            build(agents, ParamVector::zeros(*dim))
        }
    }
}

#[derive(Serialize)]
struct RoundEvals<'a> {
    round: usize,
    config_hash: &'a str,
    agents: Vec<EvalReport>,
}

/// Wrapper tying any JSON artifact to the experiment that produced it.
#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, hash: &str, body: T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(&Stamped { config_hash: hash, body })
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(path, &json)
}

fn lambda_dir(out: &Path, lambda: f64, seed: u64) -> PathBuf {
    out.join(format!("lambda_{lambda}")).join(format!("seed_{seed}"))
}

fn write_trace_csv(
    path: &Path,
    trace: &RunTrace,
    gap_ctx: Option<(&CompositeObjective, &ParamVector, f64)>,
    hash: &str,
) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(trace.rounds.len());
    for r in &trace.rounds {
        let (f_value, gap) = match gap_ctx {
            Some((comp, _star, f_star)) => {
                let f = comp
                    .f_value(&r.global_theta)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                (Some(f), Some(f - f_star))
            }
            None => (None, None),
        };
        let drift = r.drift_max.iter().copied().fold(0.0, f64::max);
        rows.push(vec![
            r.round.to_string(),
            fmt_opt(f_value),
            fmt_opt(gap),
            fmt_f64(drift),
            fmt_f64(r.global_theta.norm_sq().sqrt()),
            hash.to_string(),
        ]);
    }
    write_file(
        path,
        &csv(
            &["round", "f_value", "gap", "drift_max", "theta_norm", "config_hash"],
            &rows,
        ),
    )
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    instance: &Instance,
    lambda: f64,
    seed: u64,
    out: &Path,
    hash: &str,
) -> Result<CellOutcome, CliError> {
    let (comp, init) = composite_for(cfg, instance, lambda, seed)?;
    let train_cfg = cfg.train_config(seed);
    let noise = cfg.noise.to_model();
    let cell = lambda_dir(out, lambda, seed);

    let trace = match trainer::run(&comp, &train_cfg, &init, &noise) {
        Ok(trace) => trace,
        Err(TrainError::Diverged { trace, .. }) => {
            write_trace_csv(&cell.join("trace.csv"), &trace, None, hash)?;
            let max_drift = (!trace.rounds.is_empty()).then(|| trace.max_drift());
            return Ok(CellOutcome {
                lambda,
                seed,
                status: CellStatus::Diverged,
                test_accuracy: None,
                test_f1: None,
                final_gap: None,
                max_drift,
            });
        }
        Err(e) => return Err(CliError::Internal(format!("λ={lambda} seed={seed}: {e}"))),
    };

    let mut outcome = CellOutcome {
        lambda,
        seed,
        status: CellStatus::Ok,
        test_accuracy: None,
        test_f1: None,
        final_gap: None,
        max_drift: Some(trace.max_drift()),
    };

    match instance {
        Instance::Quadratic { .. } => {
            let star = comp
                .exact_minimizer()
                .ok_or_else(|| CliError::Internal("quadratic minimizer missing".into()))?;
            let f_star = comp
                .f_value(&star)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            write_trace_csv(&cell.join("trace.csv"), &trace, Some((&comp, &star, f_star)), hash)?;
            let f_final = comp
                .f_value(trace.final_theta())
                .map_err(|e| CliError::Internal(e.to_string()))?;
            outcome.final_gap = Some(f_final - f_star);

            if matches!(cfg.trainer.lr, LrConfig::Decaying) {
                let zeta = theory::compute_zeta(&comp, std::slice::from_ref(&init))
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                let report =
                    theory::check_bounds(&comp, &train_cfg, &init, &noise, &star, zeta, 1)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                write_json(&cell.join("bound_report.json"), hash, &report)?;
            }
        }
        Instance::Softmax { by_seed, test, .. } => {
            write_trace_csv(&cell.join("trace.csv"), &trace, None, hash)?;
            let (_, val_handles) = by_seed.get(&seed).expect("handles exist");
            for r in &trace.rounds {
                let agents = val_handles
                    .iter()
                    .map(|h| evaluate(&r.global_theta, h))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                let payload = RoundEvals {
                    round: r.round,
                    config_hash: hash,
                    agents,
                };
                let json = serde_json::to_string_pretty(&payload)
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                write_file(&cell.join(format!("evals/round_{:03}.json", r.round)), &json)?;
            }
            let test_eval = evaluate(trace.final_theta(), test)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            write_json(&cell.join("test_eval.json"), hash, &test_eval)?;
            if test_eval.accuracy <= 0.15 {
                outcome.status = CellStatus::DegenerateAccuracy;
            }
            outcome.test_accuracy = Some(test_eval.accuracy);
            outcome.test_f1 = Some(test_eval.f1_macro);
        }
    }
    Ok(outcome)
}

fn resolve(cfg: &ExperimentConfig, overrides: &Overrides) -> (ExperimentConfig, PathBuf) {
    let mut cfg = cfg.clone();
    if let Some(seed) = overrides.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(out) = &overrides.out {
        cfg.output_dir = out.display().to_string();
    }
    let out = PathBuf::from(&cfg.output_dir);
    (cfg, out)
}

fn hash_and_echo_config(cfg: &ExperimentConfig, out: &Path) -> Result<String, CliError> {
    // the hash identifies the experiment, not where artifacts land
    let mut for_hash = cfg.clone();
    for_hash.output_dir = String::new();
    let canonical = serde_json::to_string_pretty(&for_hash)
        .map_err(|e| CliError::Internal(format!("config serialization: {e}")))?;
    let hash = config_hash(&canonical);
    let echoed_cfg = serde_json::to_string_pretty(cfg)
        .map_err(|e| CliError::Internal(format!("config serialization: {e}")))?;
    let echoed = format!("{{\n  \"config_hash\": \"{hash}\",\n  \"config\": {echoed_cfg}\n}}\n");
    write_file(&out.join("resolved_config.json"), &echoed)?;
    Ok(hash)
}

/// Run the full λ × seed sweep and write all artifacts.
///
/// Divergent cells are recorded in the summary (status column) and do not
/// fail the sweep. The summary has exactly `|lambda_sweep| × |seeds|`
/// rows plus a header, in sweep order, with all floats at 17 significant
/// digits; re-running with the same config is byte-identical.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    overrides: &Overrides,
) -> Result<SweepSummary, CliError> {
    let (cfg, out) = resolve(cfg, overrides);
    let hash = hash_and_echo_config(&cfg, &out)?;
    let instance = build_instance(&cfg, &cfg.seeds)?;

    let cells: Vec<(f64, u64)> = cfg
        .lambda_sweep
        .iter()
        .flat_map(|l| cfg.seeds.iter().map(move |s| (*l, *s)))
        .collect();
    let outcomes: Vec<CellOutcome> = cells
        .par_iter()
        .map(|(lambda, seed)| run_cell(&cfg, &instance, *lambda, *seed, &out, &hash))
        .collect::<Result<_, _>>()?;

    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            vec![
                fmt_f64(o.lambda),
                o.seed.to_string(),
                o.status.as_str().to_string(),
                fmt_opt(o.test_accuracy),
                fmt_opt(o.test_f1),
                fmt_opt(o.final_gap),
                fmt_opt(o.max_drift),
                hash.clone(),
            ]
        })
        .collect();
    let summary = csv(
        &[
            "lambda",
            "seed",
            "status",
            "test_accuracy",
            "test_f1",
            "final_gap",
            "max_drift",
            "config_hash",
        ],
        &rows,
    );
    let summary_path = out.join("summary.csv");
    write_file(&summary_path, &summary)?;
    Ok(SweepSummary {
        outcomes,
        config_hash: hash,
        output_dir: out,
        summary_path,
    })
}

/// Check both bounds for every λ of the sweep with `bound_seeds`
/// replicates each; write one JSON report per λ and return them.
pub fn run_check_bounds(
    cfg: &ExperimentConfig,
    overrides: &Overrides,
) -> Result<Vec<(f64, BoundReport)>, CliError> {
    let (cfg, out) = resolve(cfg, overrides);
    if !cfg.is_quadratic() {
        return Err(CliError::Config(
            "check-bounds requires a synthetic_quadratic instance".into(),
        ));
    }
    if !matches!(cfg.trainer.lr, LrConfig::Decaying) {
        return Err(CliError::Config(
            "check-bounds requires trainer.lr = \"decaying\"".into(),
        ));
    }
    let hash = hash_and_echo_config(&cfg, &out)?;
    let instance = build_instance(&cfg, &cfg.seeds)?;
    let seed = cfg.seeds[0];
    let mut reports = Vec::with_capacity(cfg.lambda_sweep.len());
    for &lambda in &cfg.lambda_sweep {
        let (comp, init) = composite_for(&cfg, &instance, lambda, seed)?;
        let star = comp
            .exact_minimizer()
            .ok_or_else(|| CliError::Internal("quadratic minimizer missing".into()))?;
        let zeta = theory::compute_zeta(&comp, std::slice::from_ref(&init))
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let train_cfg = cfg.train_config(seed);
        let report = theory::check_bounds(
            &comp,
            &train_cfg,
            &init,
            &cfg.noise.to_model(),
            &star,
            zeta,
            cfg.bound_seeds,
        )
        .map_err(|e| CliError::Internal(e.to_string()))?;
        write_json(&out.join(format!("bound_lambda_{lambda}.json")), &hash, &report)?;
        println!(
            "lambda={lambda}: rate lhs={:.3e} rhs={:.3e} {} | drift lhs={:.3e} rhs={:.3e} {} [{hash_short}]",
            report.empirical_lhs,
            report.rate_bound_rhs,
            if report.rate_satisfied { "PASS" } else { "FAIL" },
            report.drift_lhs_max_cell,
            report.drift_rhs,
            if report.drift_satisfied { "PASS" } else { "FAIL" },
            hash_short = &hash[..12],
        );
        reports.push((lambda, report));
    }
    Ok(reports)
}

#[derive(Debug, Serialize)]
pub struct ParetoOutcome {
    pub lambda: f64,
    pub argmin: Vec<f64>,
    pub status: ParetoStatus,
    pub front_size: usize,
}

/// Compute the grid front and certify each λ's scalarized argmin.
pub fn run_pareto(
    cfg: &ExperimentConfig,
    overrides: &Overrides,
) -> Result<Vec<ParetoOutcome>, CliError> {
    let (cfg, out) = resolve(cfg, overrides);
    if !cfg.is_quadratic() {
        return Err(CliError::Config(
            "pareto requires a synthetic_quadratic instance".into(),
        ));
    }
    let grid_cfg = cfg.pareto_grid.as_ref().ok_or_else(|| {
        CliError::Config("pareto requires a pareto_grid section".into())
    })?;
    if grid_cfg.mins.len() > 2 {
        return Err(CliError::Config(
            "pareto oracle supports 1–2D instances".into(),
        ));
    }
    let grid = GridSpec::new(
        grid_cfg.mins.clone(),
        grid_cfg.maxs.clone(),
        grid_cfg.counts.clone(),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    let hash = hash_and_echo_config(&cfg, &out)?;
    let instance = build_instance(&cfg, &cfg.seeds)?;

    // dominance does not depend on λ; evaluate the front once
    let (comp0, _) = composite_for(&cfg, &instance, 0.0, cfg.seeds[0])?;
    let front =
        brute_force_front(&comp0, &grid).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut rows = Vec::with_capacity(front.len());
    for p in &front {
        let values = comp0
            .objective_vector(p)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        let mut row: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
        row.extend(values.iter_all().map(fmt_f64));
        row.push(hash.clone());
        rows.push(row);
    }
    let dim = grid.dim();
    let mut header: Vec<String> = (0..dim).map(|i| format!("theta_{i}")).collect();
    header.extend((0..comp0.num_agents()).map(|i| format!("c_{}", i + 1)));
    header.extend((0..comp0.coordinators().len()).map(|j| format!("s_{}", j + 1)));
    header.push("config_hash".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_file(&out.join("front.csv"), &csv(&header_refs, &rows))?;

    let mut outcomes = Vec::with_capacity(cfg.lambda_sweep.len());
    for &lambda in &cfg.lambda_sweep {
        let (comp, _) = composite_for(&cfg, &instance, lambda, cfg.seeds[0])?;
        let argmin =
            scalarized_argmin(&comp, &grid).map_err(|e| CliError::Internal(e.to_string()))?;
        let verdict = check_weak_pareto(&comp, &argmin, &grid, 1e-9)
            .map_err(|e| CliError::Internal(e.to_string()))?;
        outcomes.push(ParetoOutcome {
            lambda,
            argmin: argmin.as_slice().to_vec(),
            status: verdict.status,
            front_size: front.len(),
        });
    }
    #[derive(Serialize)]
    struct ParetoReportFile<'a> {
        config_hash: &'a str,
        outcomes: &'a [ParetoOutcome],
    }
    let json = serde_json::to_string_pretty(&ParetoReportFile {
        config_hash: &hash,
        outcomes: &outcomes,
    })
    .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&out.join("pareto_report.json"), &json)?;
    Ok(outcomes)
}

/// Human-readable IDX header dump.
pub fn parse_idx_dump(path: &Path) -> Result<String, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    let idx = parse_idx(&bytes)
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?;
    let dims: Vec<String> = idx.dims.iter().map(|d| d.to_string()).collect();
    let preview: Vec<String> = idx
        .payload
        .iter()
        .take(16)
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(format!(
        "file: {}\nmagic: {:#010x} (type {:#04x} unsigned byte, {} dims)\ndims: {}\npayload: {} bytes\nfirst bytes: {}\n",
        path.display(),
        idx.magic(),
        idx.type_code,
        idx.dims.len(),
        dims.join(" x "),
        idx.payload.len(),
        preview.join(" ")
    ))
}
