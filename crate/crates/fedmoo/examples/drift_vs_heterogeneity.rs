//! How agent drift responds to data heterogeneity: synthetic feature
//! blobs with a separation knob, the measured gradient-gap bound ζ, and
//! the worst observed drift of a short run against the drift bound.
//!
//! ```bash
//! cargo run --release -p fedmoo --example drift_vs_heterogeneity
//! ```

use fedmoo::core::{ParamVector, RngStream, StreamLane};
use fedmoo::data::synth_blobs;
use fedmoo::objectives::{NoiseModel, ObjectiveSpec};
use fedmoo::scalarization::{CompositeObjective, ScalarizationConfig};
use fedmoo::theory;
use fedmoo::trainer::{self, LrSchedule, TrainConfig};

fn main() {
    let d = 4;
    println!("separation   zeta estimate   max drift   drift bound");
    for separation in [0.0, 2.0, 10.0] {
        let handles = synth_blobs(
            3,
            d,
            separation,
            10_000,
            RngStream::for_data(11, 0, StreamLane::Synth),
        )
        .unwrap();
        let dim = 10 * (d + 1);
        let agents: Vec<ObjectiveSpec> = handles
            .iter()
            .map(|h| ObjectiveSpec::SoftmaxCE {
                data: h.clone(),
                l2: 0.0,
                batch: None,
            })
            .collect();
        let comp = CompositeObjective::new(
            agents,
            vec![],
            ScalarizationConfig::new(0.0, 3, 0).unwrap(),
        )
        .unwrap();
        let init = ParamVector::zeros(dim);
        let zeta = theory::zeta_ball_probe(&comp, &init, 1.0, 25, 3).unwrap();

        let mut cfg = TrainConfig::new(20, 2, LrSchedule::Fixed(0.05), 1);
        cfg.record_f_bar = false;
        let trace = trainer::run(&comp, &cfg, &init, &NoiseModel::zero()).unwrap();
        let constants = theory::BoundConstants::new(
            comp.l_c(),
            0.0,
            0.0,
            0.0,
            zeta,
            0.0,
            0,
            0.0,
        )
        .unwrap();
        let bound = theory::drift_rhs(&constants, 2, 0.05);
        println!(
            "{separation:<11}  {zeta:<14.4}  {:<10.3e}  {bound:.3e}",
            trace.max_drift()
        );
    }
}
