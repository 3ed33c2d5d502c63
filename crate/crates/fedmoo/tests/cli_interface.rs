//! End-to-end behavior of the experiment runner and the binary surface:
//! artifact layout, summary shape, divergence handling, subcommand
//! outputs, exit codes.

use std::path::Path;
use std::process::Command;

use fedmoo::cli::{self, CellStatus, Overrides};
use fedmoo::scalarization::ParetoStatus;
use tempfile::TempDir;

fn quad_config(extra: &str) -> String {
    format!(
        r#"{{
            "instance": {{"kind": "synthetic_quadratic", "centers": [[0.0], [2.0]], "init": [-1.0]}},
            "lambda_sweep": [0.0, 0.5],
            "coordinator_scale": 0.5,
            "trainer": {{"rounds": 150, "local_epochs": 1, "lr": {{"fixed": 0.1}}}},
            "seeds": [0, 1]{extra}
        }}"#
    )
}

#[test]
fn sweep_artifacts_and_summary_shape() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = cli::validate_config(&quad_config("")).unwrap();
    let summary = cli::run_experiment(
        &cfg,
        &Overrides {
            seed: None,
            out: Some(out.clone()),
        },
    )
    .unwrap();

    // exactly |lambda_sweep| x |seeds| rows plus header
    let text = std::fs::read_to_string(&summary.summary_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert_eq!(
        lines[0],
        "lambda,seed,status,test_accuracy,test_f1,final_gap,max_drift,config_hash"
    );
    assert!(text.ends_with('\n'));
    assert!(!text.contains('\r'), "LF line endings only");

    // every row embeds the config hash, floats parse back exactly
    for row in &lines[1..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[7], summary.config_hash);
        let lambda: f64 = fields[0].parse().unwrap();
        assert!(lambda == 0.0 || lambda == 0.5);
        assert_eq!(fields[2], "ok");
        let gap: f64 = fields[5].parse().unwrap();
        assert!(gap.abs() < 1e-6, "converged gap, got {gap}");
    }

    // per-cell artifacts
    assert!(out.join("resolved_config.json").is_file());
    let trace = std::fs::read_to_string(out.join("lambda_0.5/seed_1/trace.csv")).unwrap();
    assert!(trace.starts_with("round,f_value,gap,drift_max,theta_norm,config_hash\n"));
    assert_eq!(trace.lines().count(), 1 + 150);

    // resolved config echoes defaults and the hash
    let echoed = std::fs::read_to_string(out.join("resolved_config.json")).unwrap();
    assert!(echoed.contains(&summary.config_hash));
    assert!(echoed.contains("\"bound_seeds\": 32"));
}

#[test]
fn divergent_lambda_is_recorded_not_fatal() {
    // λ = 0.99 gives α = 99; with curvature 1 and s = 0.5 the composite
    // curvature is 100, so η = 0.1 is far past the stability limit
    let json = r#"{
        "instance": {"kind": "synthetic_quadratic", "centers": [[0.0], [2.0]], "init": [-1.0]},
        "lambda_sweep": [0.0, 0.99],
        "coordinator_scale": 0.5,
        "trainer": {"rounds": 50, "local_epochs": 1, "lr": {"fixed": 0.1}},
        "seeds": [0]
    }"#;
    let dir = TempDir::new().unwrap();
    let cfg = cli::validate_config(json).unwrap();
    let summary = cli::run_experiment(
        &cfg,
        &Overrides {
            seed: None,
            out: Some(dir.path().join("out")),
        },
    )
    .unwrap();
    assert_eq!(summary.outcomes.len(), 2);
    assert_eq!(summary.outcomes[0].status, CellStatus::Ok);
    assert_eq!(summary.outcomes[1].status, CellStatus::Diverged);
    let text = std::fs::read_to_string(&summary.summary_path).unwrap();
    assert!(text.contains("diverged"));
}

#[test]
fn bound_reports_written_under_decaying_schedule() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = cli::validate_config(&quad_config("").replace(
        r#""lr": {"fixed": 0.1}"#,
        r#""lr": "decaying""#,
    ))
    .unwrap();
    let reports = cli::run_check_bounds(
        &cfg,
        &Overrides {
            seed: None,
            out: Some(out.clone()),
        },
    )
    .unwrap();
    assert_eq!(reports.len(), 2);
    for (lambda, report) in &reports {
        assert!(report.satisfied, "bounds violated at λ={lambda}");
        let path = out.join(format!("bound_lambda_{lambda}.json"));
        let text = std::fs::read_to_string(path).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["rounds"], 150);
        assert!(parsed["config_hash"].is_string());
        assert!(parsed["rate_satisfied"].as_bool().unwrap());
        assert!(parsed["drift_satisfied"].as_bool().unwrap());
    }

    // per-cell bound report also lands in the sweep output
    let summary = cli::run_experiment(
        &cfg,
        &Overrides {
            seed: None,
            out: Some(dir.path().join("sweep")),
        },
    )
    .unwrap();
    assert!(summary
        .output_dir
        .join("lambda_0/seed_0/bound_report.json")
        .is_file());

    // fixed-step configs are rejected for bound checking
    let fixed = cli::validate_config(&quad_config("")).unwrap();
    let err = cli::run_check_bounds(
        &fixed,
        &Overrides {
            seed: None,
            out: Some(dir.path().join("x")),
        },
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn pareto_subcommand_writes_front_and_certificates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = cli::validate_config(&quad_config(
        r#", "pareto_grid": {"mins": [-1.0], "maxs": [3.0], "counts": [2001]}"#,
    ))
    .unwrap();
    let outcomes = cli::run_pareto(
        &cfg,
        &Overrides {
            seed: None,
            out: Some(out.clone()),
        },
    )
    .unwrap();
    assert_eq!(outcomes.len(), 2);
    for o in &outcomes {
        assert_eq!(o.status, ParetoStatus::WeaklyNonDominated);
    }
    let front = std::fs::read_to_string(out.join("front.csv")).unwrap();
    assert!(front.starts_with("theta_0,c_1,c_2,s_1,config_hash\n"));
    // the two-quadratic front spans [0, 2] up to one grid step
    let xs: Vec<f64> = front
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(xs.iter().all(|x| (-0.003..=2.003).contains(x)));
    assert!(out.join("pareto_report.json").is_file());

    // without a grid section the subcommand is a config error
    let no_grid = cli::validate_config(&quad_config("")).unwrap();
    let err = cli::run_pareto(
        &no_grid,
        &Overrides {
            seed: None,
            out: Some(dir.path().join("y")),
        },
    )
    .unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn seed_override_wins() {
    let dir = TempDir::new().unwrap();
    let cfg = cli::validate_config(&quad_config("")).unwrap();
    let summary = cli::run_experiment(
        &cfg,
        &Overrides {
            seed: Some(7),
            out: Some(dir.path().join("out")),
        },
    )
    .unwrap();
    assert_eq!(summary.outcomes.len(), 2); // 2 lambdas x 1 seed
    assert!(summary.outcomes.iter().all(|o| o.seed == 7));
}

#[test]
fn parse_idx_dump_formats_header() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("labels-idx1-ubyte");
    std::fs::write(&path, [0u8, 0, 0x08, 1, 0, 0, 0, 3, 7, 2, 9]).unwrap();
    let dump = cli::parse_idx_dump(&path).unwrap();
    assert!(dump.contains("magic: 0x00000801"));
    assert!(dump.contains("dims: 3"));
    assert!(dump.contains("payload: 3 bytes"));
    assert!(dump.contains("07 02 09"));

    let missing = cli::parse_idx_dump(Path::new("/nonexistent/file")).unwrap_err();
    assert_eq!(missing.exit_code(), 3);
}

// ----- binary-level smoke tests (exit codes) -----

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedmoo"))
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();

    // config error -> 2
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{}").unwrap();
    let status = bin().arg("run").arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));

    // missing config file -> 3
    let status = bin()
        .arg("run")
        .arg(dir.path().join("missing.json"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));

    // completed sweep -> 0, even with a divergent cell
    let ok = dir.path().join("ok.json");
    std::fs::write(
        &ok,
        r#"{
            "instance": {"kind": "synthetic_quadratic", "centers": [[0.0], [2.0]], "init": [-1.0]},
            "lambda_sweep": [0.0, 0.99],
            "coordinator_scale": 0.5,
            "trainer": {"rounds": 40, "local_epochs": 1, "lr": {"fixed": 0.1}},
            "seeds": [0]
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let output = bin()
        .arg("run")
        .arg(&ok)
        .arg("--out")
        .arg(&out_dir)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("diverged"), "{stdout}");
    assert!(out_dir.join("summary.csv").is_file());

    // THREADS env var also selects the pool size (flag wins when both)
    let output = bin()
        .arg("run")
        .arg(&ok)
        .arg("--out")
        .arg(dir.path().join("out_env"))
        .env("THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));

    // parse-idx on a valid fixture -> 0
    let idx = dir.path().join("l.idx");
    std::fs::write(&idx, [0u8, 0, 0x08, 1, 0, 0, 0, 1, 5]).unwrap();
    let status = bin().arg("parse-idx").arg(&idx).status().unwrap();
    assert_eq!(status.code(), Some(0));

    // parse-idx on a corrupt file -> nonzero, not a panic
    std::fs::write(&idx, [9u8, 9, 9]).unwrap();
    let status = bin().arg("parse-idx").arg(&idx).status().unwrap();
    assert_eq!(status.code(), Some(1));
}
