//! Linear convergence of the noiseless loop under a fixed step 1/(4L):
//! the optimality gap contracts geometrically round over round.
//!
//! ```bash
//! cargo run --release -p fedmoo --example noiseless_convergence
//! ```

use fedmoo::core::ParamVector;
use fedmoo::metrics::gap_series;
use fedmoo::objectives::{NoiseModel, ObjectiveSpec};
use fedmoo::scalarization::{CompositeObjective, ScalarizationConfig};
use fedmoo::trainer::{self, LrSchedule, TrainConfig};

fn main() {
    let comp = CompositeObjective::new(
        vec![
            ObjectiveSpec::quadratic(&[0.0], 1.0),
            ObjectiveSpec::quadratic(&[2.0], 1.0),
        ],
        vec![],
        ScalarizationConfig::new(0.0, 2, 0).unwrap(),
    )
    .unwrap();

    let eta = 0.25; // 1/(4L) with L = 1
    let cfg = TrainConfig::new(40, 1, LrSchedule::Fixed(eta), 0);
    let init = ParamVector::new(vec![-1.0]).unwrap();
    let trace = trainer::run(&comp, &cfg, &init, &NoiseModel::zero()).unwrap();

    let star = comp.exact_minimizer().unwrap();
    let gaps = gap_series(&trace, &comp, &star).unwrap();
    println!("minimizer {:+.4}, eta {eta}", star[0]);
    println!("round   gap             ratio");
    let mut prev = f64::NAN;
    for (t, gap) in gaps.iter().enumerate() {
        let ratio = if t == 0 { f64::NAN } else { gap / prev };
        if t < 10 || t % 5 == 0 {
            println!("{:>5}   {gap:<14.6e}  {ratio:.4}", t + 1);
        }
        prev = *gap;
    }
    println!("final theta {:+.10}", trace.final_theta()[0]);
}
