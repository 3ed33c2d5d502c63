//! A reduced λ sweep on synthetic digit images: two agents, ten rounds,
//! written to `./sweep_demo/` with the same artifacts the full runner
//! produces (summary CSV, per-cell traces, per-round evaluations).
//!
//! ```bash
//! cargo run --release -p fedmoo --example lambda_sweep
//! ```

use fedmoo::cli::{self, Overrides};

fn main() {
    let json = r#"{
        "instance": {
            "kind": "synthetic_softmax",
            "n_train": 6000, "n_test": 1500,
            "m_agents": 2, "train_per_agent": 2400, "val_per_agent": 600
        },
        "partition": {"scheme": "iid"},
        "lambda_sweep": [0.0, 0.5, 0.87],
        "coordinator_scale": 100.0,
        "trainer": {"rounds": 10, "local_epochs": 1, "lr": {"fixed": 0.001}},
        "batch_size": 32,
        "seeds": [0],
        "output_dir": "sweep_demo"
    }"#;
    let cfg = cli::validate_config(json).expect("config is valid");
    let summary = cli::run_experiment(&cfg, &Overrides::default()).expect("sweep runs");
    println!("config hash {}", &summary.config_hash[..12]);
    println!("lambda  status               test acc   test F1");
    for o in &summary.outcomes {
        println!(
            "{:<6}  {:<19}  {:<9}  {}",
            o.lambda,
            format!("{:?}", o.status),
            o.test_accuracy.map(|v| format!("{v:.4}")).unwrap_or_default(),
            o.test_f1.map(|v| format!("{v:.4}")).unwrap_or_default(),
        );
    }
    println!("artifacts under {}", summary.output_dir.display());
}
