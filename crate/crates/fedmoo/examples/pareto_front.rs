//! Brute-force Pareto front of a two-agent instance and weak-Pareto
//! certificates for the scalarized minimizers across λ.
//!
//! ```bash
//! cargo run --release -p fedmoo --example pareto_front
//! ```

use fedmoo::objectives::ObjectiveSpec;
use fedmoo::scalarization::{
    brute_force_front, check_weak_pareto, scalarized_argmin, CompositeObjective, GridSpec,
    ScalarizationConfig,
};

fn main() {
    // agents ½θ² and ½(θ−2)², coordinator ½θ²
    let instance = |lambda: f64| {
        CompositeObjective::new(
            vec![
                ObjectiveSpec::quadratic(&[0.0], 1.0),
                ObjectiveSpec::quadratic(&[2.0], 1.0),
            ],
            vec![ObjectiveSpec::ScaledSqNorm { scale: 0.5 }],
            ScalarizationConfig::new(lambda, 2, 1).unwrap(),
        )
        .unwrap()
    };

    let grid = GridSpec::line(-1.0, 3.0, 4001).unwrap();
    let front = brute_force_front(&instance(0.0), &grid).unwrap();
    let lo = front.first().unwrap()[0];
    let hi = front.last().unwrap()[0];
    println!(
        "front: {} grid points, spanning [{lo:.3}, {hi:.3}]",
        front.len()
    );

    for lambda in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let comp = instance(lambda);
        let argmin = scalarized_argmin(&comp, &grid).unwrap();
        let verdict = check_weak_pareto(&comp, &argmin, &grid, 1e-9).unwrap();
        println!(
            "lambda = {lambda:.2}: scalarized argmin {:+.4} (alpha = {:.4}) -> {:?}",
            argmin[0],
            comp.config().alpha,
            verdict.status
        );
    }
}
