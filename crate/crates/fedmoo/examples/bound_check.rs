//! Monte-Carlo check of the convergence-rate bound and the client-drift
//! bound on a quadratic instance with known minimizer, across λ.
//!
//! ```bash
//! cargo run --release -p fedmoo --example bound_check
//! ```

use fedmoo::core::ParamVector;
use fedmoo::objectives::{NoiseModel, ObjectiveSpec};
use fedmoo::scalarization::{CompositeObjective, ScalarizationConfig};
use fedmoo::theory;
use fedmoo::trainer::{LrSchedule, TrainConfig};

fn main() {
    let init = ParamVector::new(vec![-1.0]).unwrap();
    let noise = NoiseModel::gaussian(0.1, 0.0);
    println!("lambda   eta        rate lhs    rate rhs    drift lhs   drift rhs");
    for lambda in [0.0, 0.25, 0.5, 0.75, 0.87] {
        let comp = CompositeObjective::new(
            vec![
                ObjectiveSpec::quadratic(&[0.0], 1.0),
                ObjectiveSpec::quadratic(&[2.0], 1.0),
            ],
            vec![ObjectiveSpec::ScaledSqNorm { scale: 0.5 }],
            ScalarizationConfig::new(lambda, 2, 1).unwrap(),
        )
        .unwrap();
        let mut cfg = TrainConfig::new(64, 2, LrSchedule::Decaying, 99);
        cfg.record_f_bar = true;
        let star = comp.exact_minimizer().unwrap();
        let zeta = theory::compute_zeta(&comp, std::slice::from_ref(&init)).unwrap();
        let report = theory::check_bounds(&comp, &cfg, &init, &noise, &star, zeta, 32).unwrap();
        println!(
            "{lambda:<7.2}  {:<9.3e}  {:<10.3e}  {:<10.3e}  {:<10.3e}  {:<10.3e}  {}",
            report.eta_schedule,
            report.empirical_lhs,
            report.rate_bound_rhs,
            report.drift_lhs_max_cell,
            report.drift_rhs,
            if report.satisfied { "PASS" } else { "FAIL" },
        );
    }
}
