//! Finite-sample oracles for the two Pareto propositions the
//! scalarization rests on, checked on small convex instances.
//!
//! 1. Convexity makes local Pareto optimality global: on a 1-D grid,
//!    every point that no *neighbor* dominates is also undominated by the
//!    whole grid.
//! 2. A unique minimizer of the all-positive weighted sum is Pareto
//!    optimal (not just weakly): the grid argmin passes the standard
//!    dominance certificate for λ strictly inside (0, 1).
//!
//! Note: the convex converse — every Pareto optimal point solves the
//! weighting problem for *some* weight vector — is a statement about the
//! existence of weights, not about any fixed λ, so it is not an
//! operation here; for the two-quadratic instance it is visible in the
//! `pareto_front` example, where sweeping λ over (0, 1) moves the
//! scalarized argmin across the whole front segment.

use fedmoo::core::{ParamVector, RngStream, StreamLane};
use fedmoo::objectives::ObjectiveSpec;
use fedmoo::scalarization::{
    check_pareto, dominates, scalarized_argmin, CompositeObjective, GridSpec, ParetoStatus,
    ScalarizationConfig,
};
use rand::Rng;

fn instance(lambda: f64, centers: &[f64], curvature: f64, scale: f64) -> CompositeObjective {
    let agents: Vec<ObjectiveSpec> = centers
        .iter()
        .map(|c| ObjectiveSpec::quadratic(&[*c], curvature))
        .collect();
    CompositeObjective::new(
        agents,
        vec![ObjectiveSpec::ScaledSqNorm { scale }],
        ScalarizationConfig::new(lambda, centers.len(), 1).unwrap(),
    )
    .unwrap()
}

#[test]
fn local_nondominance_implies_global_on_convex_instances() {
    let mut rng = RngStream::for_data(31_337, 0, StreamLane::Probe).rng();
    for trial in 0..8 {
        let m = 2 + trial % 2;
        let centers: Vec<f64> = (0..m).map(|_| 4.0 * rng.random::<f64>() - 2.0).collect();
        let curvature = 0.5 + rng.random::<f64>();
        let scale = 0.5 * rng.random::<f64>();
        let comp = instance(0.0, &centers, curvature, scale);
        let grid = GridSpec::line(-3.0, 3.0, 1201).unwrap();
        let values: Vec<_> = grid
            .points()
            .map(|p| comp.objective_vector(&p).unwrap())
            .collect();

        let n = values.len();
        for i in 0..n {
            let locally_nondominated = [i.wrapping_sub(1), i + 1]
                .iter()
                .filter(|&&j| j < n)
                .all(|&j| !dominates(&values[j], &values[i]).unwrap());
            if locally_nondominated {
                // proposition: convexity promotes the local certificate
                for j in 0..n {
                    assert!(
                        !dominates(&values[j], &values[i]).unwrap(),
                        "trial {trial}: locally nondominated {} dominated by {}",
                        grid.point(i)[0],
                        grid.point(j)[0]
                    );
                }
            }
        }
    }
}

#[test]
fn unique_scalarized_minimizer_is_pareto_optimal() {
    let mut rng = RngStream::for_data(99_001, 0, StreamLane::Probe).rng();
    for trial in 0..6 {
        let centers: Vec<f64> = (0..2).map(|_| 3.0 * rng.random::<f64>() - 1.5).collect();
        let comp = instance(
            0.1 + 0.8 * rng.random::<f64>(),
            &centers,
            1.0,
            0.25 + rng.random::<f64>(),
        );
        let grid = GridSpec::line(-3.0, 3.0, 4001).unwrap();
        let argmin = scalarized_argmin(&comp, &grid).unwrap();
        let verdict = check_pareto(&comp, &argmin, &grid, 1e-12).unwrap();
        assert_eq!(
            verdict.status,
            ParetoStatus::NonDominated,
            "trial {trial}: strictly weighted argmin {:?} dominated",
            argmin
        );
    }
}

#[test]
fn heterogeneity_estimate_tracks_blob_separation() {
    use fedmoo::data::synth_blobs;
    use fedmoo::theory::zeta_ball_probe;

    let build = |separation: f64| {
        let handles = synth_blobs(
            2,
            4,
            separation,
            10_000,
            RngStream::for_data(17, 0, StreamLane::Synth),
        )
        .unwrap();
        let agents: Vec<ObjectiveSpec> = handles
            .iter()
            .map(|h| ObjectiveSpec::SoftmaxCE {
                data: h.clone(),
                l2: 0.0,
                batch: None,
            })
            .collect();
        CompositeObjective::new(
            agents,
            vec![],
            ScalarizationConfig::new(0.0, 2, 0).unwrap(),
        )
        .unwrap()
    };

    let init = ParamVector::zeros(10 * 5);
    let zeta_same = zeta_ball_probe(&build(0.0), &init, 0.5, 20, 2).unwrap();
    assert!(
        zeta_same <= 0.1,
        "statistically identical agents should show tiny gradient gaps, got {zeta_same}"
    );
    let zeta_far = zeta_ball_probe(&build(10.0), &init, 0.5, 20, 2).unwrap();
    assert!(
        zeta_far > 1.0,
        "strongly separated agents should exceed 1, got {zeta_far}"
    );
    assert!(zeta_far > 10.0 * zeta_same);
}
