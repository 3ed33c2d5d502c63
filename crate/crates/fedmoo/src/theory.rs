//! The regularity constants of the convergence analysis and empirical
//! checks of its two inequalities against actual runs.
//!
//! Constants, for an instance with agent smoothness `L_C`, coordinator
//! smoothness `L_S` (of the *summed* coordinator objective), noise levels
//! `σ_C, σ_S`, heterogeneity `ζ`, and blending coefficient `α`:
//!
//! ```text
//! L = L_C + α·L_S            Σ = σ_C² + α²·N²·σ_S²
//! D = ‖Θ⁰ − Θ*‖              η = 1/(4·L·τ·√T)
//! ```
//!
//! Checked inequalities (expectations estimated over seeded replicates):
//!
//! - rate bound: `E[(1/τT) Σ_t Σ_k F(Θ̄^{t,k})] − F(Θ*)` is at most
//!   `2D²L/√T + Σ/(2LMτ√T) + 5ζ²/(8LT) + Σ/(4LτT)`;
//! - drift bound: `E‖Θ_i^{t,k} − Θ̄^{t,k}‖² ≤ 10τ²η²ζ² + 4τη²Σ` at every
//!   `(t, k)`.
//!
//! The rate bound's comparator is `F(Θ*)` with `Θ*` the exact minimizer
//! of `F`, the strongest of the two plausible comparators; the gap
//! against the final iterate `F(Θᵀ)` is also reported for reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::{ParamVector, RngStream, StreamLane};
use crate::objectives::{NoiseKind, NoiseModel, ObjectiveError, ObjectiveSpec};
use crate::scalarization::{CompositeObjective, ScalarError};
use crate::trainer::{self, RunTrace, TrainConfig, TrainError};

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("degenerate instance: L must be positive (flat objective)")]
    DegenerateSmoothness,
    #[error("probe set is empty")]
    EmptyProbe,
    #[error("contract violation: {0}")]
    ScheduleMismatch(String),
    #[error("constants invalid: {0}")]
    InvalidConstants(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// All regularity constants entering the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub l_c: f64,
    pub l_s: f64,
    pub sigma_c: f64,
    pub sigma_s: f64,
    pub zeta: f64,
    pub alpha: f64,
    /// `L = L_C + α·L_S`.
    pub l_total: f64,
    /// `Σ = σ_C² + α²·N²·σ_S²`.
    pub sigma_total: f64,
    /// `D = ‖Θ⁰ − Θ*‖`.
    pub d_init: f64,
}

impl BoundConstants {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        l_c: f64,
        l_s: f64,
        sigma_c: f64,
        sigma_s: f64,
        zeta: f64,
        alpha: f64,
        n_coord: usize,
        d_init: f64,
    ) -> Result<Self, TheoryError> {
        let parts = [l_c, l_s, sigma_c, sigma_s, zeta, alpha, d_init];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(TheoryError::InvalidConstants(
                "all constants must be finite and nonnegative".into(),
            ));
        }
        let n = n_coord as f64;
        Ok(Self {
            l_c,
            l_s,
            sigma_c,
            sigma_s,
            zeta,
            alpha,
            l_total: l_c + alpha * l_s,
            sigma_total: sigma_c * sigma_c + alpha * alpha * n * n * sigma_s * sigma_s,
            d_init,
        })
    }

    /// Constants for an instance: smoothness from the objectives, noise
    /// levels from the model, `ζ` supplied by the caller (exact for
    /// quadratic instances via [`compute_zeta`], estimated otherwise).
    pub fn for_instance(
        comp: &CompositeObjective,
        noise: &NoiseModel,
        init: &ParamVector,
        theta_star: &ParamVector,
        zeta: f64,
    ) -> Result<Self, TheoryError> {
        let d_init = init.dist_sq(theta_star).map_err(ScalarError::from)?.sqrt();
        let (sigma_c, sigma_s) = match noise.distribution {
            NoiseKind::Zero => (0.0, 0.0),
            NoiseKind::Gaussian => (noise.sigma_c, noise.sigma_s),
        };
        Self::new(
            comp.l_c(),
            comp.l_s(),
            sigma_c,
            sigma_s,
            zeta,
            comp.config().alpha,
            comp.config().n_coord,
            d_init,
        )
    }
}

/// `max_i max_θ∈probe ‖∇F_i(θ) − ∇F(θ)‖` over the probe set.
///
/// For quadratic instances with equal curvature the gradient gap is
/// constant in `θ`, so any probe returns the exact heterogeneity bound.
pub fn compute_zeta(
    comp: &CompositeObjective,
    probe: &[ParamVector],
) -> Result<f64, TheoryError> {
    if probe.is_empty() {
        return Err(TheoryError::EmptyProbe);
    }
    let mut worst = 0.0_f64;
    for theta in probe {
        let f_grad = comp.f_grad(theta)?;
        for i in 0..comp.num_agents() {
            let gap = comp.f_i_grad(i, theta)?.sub(&f_grad).map_err(ScalarError::from)?;
            worst = worst.max(gap.norm_sq());
        }
    }
    Ok(worst.sqrt())
}

/// `ζ` estimated by sampling `n` points uniformly in the ball of the
/// given radius around `center` (plus the center itself).
pub fn zeta_ball_probe(
    comp: &CompositeObjective,
    center: &ParamVector,
    radius: f64,
    n: usize,
    seed: u64,
) -> Result<f64, TheoryError> {
    use rand::Rng;
    let mut rng = RngStream::for_data(seed, 0, StreamLane::Probe).rng();
    let d = center.dim();
    let mut probe = Vec::with_capacity(n + 1);
    probe.push(center.clone());
    for _ in 0..n {
        let offsets: Vec<f64> = (0..d)
            .map(|_| radius * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let delta = ParamVector::new(offsets).expect("finite offsets");
        probe.push(
            ParamVector::axpy(1.0, &delta, center).expect("finite probe point"),
        );
    }
    compute_zeta(comp, &probe)
}

/// Right-hand side of the rate bound:
/// `2D²L/√T + Σ/(2LMτ√T) + 5ζ²/(8LT) + Σ/(4LτT)`.
pub fn rate_bound_rhs(
    k: &BoundConstants,
    t_rounds: usize,
    tau: usize,
    m_agents: usize,
) -> Result<f64, TheoryError> {
    if k.l_total <= 0.0 {
        return Err(TheoryError::DegenerateSmoothness);
    }
    let (t, tau_f, m) = (t_rounds as f64, tau as f64, m_agents as f64);
    let l = k.l_total;
    let sigma = k.sigma_total;
    Ok(2.0 * k.d_init * k.d_init * l / t.sqrt()
        + sigma / (2.0 * l * m * tau_f * t.sqrt())
        + 5.0 * k.zeta * k.zeta / (8.0 * l * t)
        + sigma / (4.0 * l * tau_f * t))
}

/// Right-hand side of the client-drift bound: `10τ²η²ζ² + 4τη²Σ`.
pub fn drift_rhs(k: &BoundConstants, tau: usize, eta: f64) -> f64 {
    let tau_f = tau as f64;
    10.0 * tau_f * tau_f * eta * eta * k.zeta * k.zeta
        + 4.0 * tau_f * eta * eta * k.sigma_total
}

/// The decaying step size `η = 1/(4·L·τ·√T)`.
pub fn decaying_eta(k: &BoundConstants, t_rounds: usize, tau: usize) -> Result<f64, TheoryError> {
    if k.l_total <= 0.0 {
        return Err(TheoryError::DegenerateSmoothness);
    }
    Ok(1.0 / (4.0 * k.l_total * tau as f64 * (t_rounds as f64).sqrt()))
}

/// Relative slack applied to every `lhs <= rhs` comparison.
pub const BOUND_SLACK: f64 = 1e-9;

/// Outcome of checking both bounds against `n_seeds` replicate runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub constants: BoundConstants,
    pub rounds: usize,
    /// Local steps per round (equals `local_epochs` for analytic oracles).
    pub tau: usize,
    pub m_agents: usize,
    pub n_seeds: usize,
    pub eta_schedule: f64,
    pub rate_bound_rhs: f64,
    /// Monte-Carlo estimate of the averaged gap against `F(Θ*)`.
    pub empirical_lhs: f64,
    /// Same gap measured against `F(Θᵀ)` of each replicate (reference).
    pub empirical_lhs_vs_final: f64,
    pub rate_satisfied: bool,
    pub rate_margin: f64,
    pub drift_rhs: f64,
    /// Worst per-`(t,k)` cell of the seed-averaged drift.
    pub drift_lhs_max_cell: f64,
    pub drift_satisfied: bool,
    pub drift_margin: f64,
    pub satisfied: bool,
}

/// Run `n_seeds` independent replicates under the decaying schedule and
/// compare the Monte-Carlo estimates against both bounds.
///
/// `theta_star` must be the exact minimizer of `F`. The config must use
/// [`trainer::LrSchedule::Decaying`] and record `F(Θ̄^{t,k})`, and the
/// stochastic oracles must be analytic (one step per epoch), otherwise a
/// contract error is returned.
pub fn check_bounds(
    comp: &CompositeObjective,
    cfg: &TrainConfig,
    init: &ParamVector,
    noise: &NoiseModel,
    theta_star: &ParamVector,
    zeta: f64,
    n_seeds: usize,
) -> Result<BoundReport, TheoryError> {
    if !matches!(cfg.lr, trainer::LrSchedule::Decaying) {
        return Err(TheoryError::ScheduleMismatch(
            "rate bound check requires the decaying schedule".into(),
        ));
    }
    if !cfg.record_f_bar {
        return Err(TheoryError::ScheduleMismatch(
            "rate bound check requires record_f_bar".into(),
        ));
    }
    if comp.agent(0).steps_per_epoch() != 1 {
        return Err(TheoryError::ScheduleMismatch(
            "bound checks require analytic stochastic oracles (one step per epoch)".into(),
        ));
    }
    if n_seeds == 0 {
        return Err(TheoryError::ScheduleMismatch("n_seeds must be >= 1".into()));
    }
    let constants = BoundConstants::for_instance(comp, noise, init, theta_star, zeta)?;
    let eta = decaying_eta(&constants, cfg.rounds, cfg.local_epochs)?;

    let traces: Vec<RunTrace> = (0..n_seeds)
        .into_par_iter()
        .map(|r| {
            let mut cfg_r = *cfg;
            cfg_r.seed = cfg.seed.wrapping_add(r as u64);
            trainer::run(comp, &cfg_r, init, noise)
        })
        .collect::<Result<_, _>>()?;

    let f_star = comp.f_value(theta_star)?;
    let mut lhs_star = 0.0;
    let mut lhs_final = 0.0;
    for trace in &traces {
        let mean_f = trace
            .mean_f_bar()
            .expect("record_f_bar was checked above");
        lhs_star += mean_f - f_star;
        lhs_final += mean_f - comp.f_value(trace.final_theta())?;
    }
    lhs_star /= n_seeds as f64;
    lhs_final /= n_seeds as f64;

    let tau = cfg.local_epochs;
    let rhs = rate_bound_rhs(&constants, cfg.rounds, tau, comp.num_agents())?;

    // seed-averaged drift per (t, k) cell, then the worst cell
    let steps = traces[0].steps_per_round;
    let mut drift_lhs_max_cell = 0.0_f64;
    for t in 0..cfg.rounds {
        for k in 0..steps {
            let mean_cell = traces
                .iter()
                .map(|tr| tr.rounds[t].drift_max[k])
                .sum::<f64>()
                / n_seeds as f64;
            drift_lhs_max_cell = drift_lhs_max_cell.max(mean_cell);
        }
    }
    let d_rhs = drift_rhs(&constants, tau, eta);

    let rate_satisfied = lhs_star <= rhs * (1.0 + BOUND_SLACK);
    let drift_satisfied = drift_lhs_max_cell <= d_rhs * (1.0 + BOUND_SLACK);
    Ok(BoundReport {
        constants,
        rounds: cfg.rounds,
        tau,
        m_agents: comp.num_agents(),
        n_seeds,
        eta_schedule: eta,
        rate_bound_rhs: rhs,
        empirical_lhs: lhs_star,
        empirical_lhs_vs_final: lhs_final,
        rate_satisfied,
        rate_margin: rhs - lhs_star,
        drift_rhs: d_rhs,
        drift_lhs_max_cell,
        drift_satisfied,
        drift_margin: d_rhs - drift_lhs_max_cell,
        satisfied: rate_satisfied && drift_satisfied,
    })
}

/// Estimated noise level of a minibatch oracle: the square root of the
/// largest mean squared gradient deviation observed across the probe
/// points (a calibration pass, not a supremum).
pub fn estimate_sigma_minibatch(
    obj: &ObjectiveSpec,
    probe: &[ParamVector],
    draws_per_point: usize,
    seed: u64,
) -> Result<f64, TheoryError> {
    if probe.is_empty() {
        return Err(TheoryError::EmptyProbe);
    }
    let mut worst = 0.0_f64;
    for (pi, theta) in probe.iter().enumerate() {
        let exact = obj.grad(theta)?;
        let mut acc = 0.0;
        for d in 0..draws_per_point {
            let stream = RngStream::for_step(
                seed,
                pi as u64,
                0,
                d as u64,
                StreamLane::Batch,
            );
            let draw = obj.stoch_grad(theta, 0.0, NoiseKind::Zero, stream)?;
            acc += draw.sub(&exact).map_err(ObjectiveError::from)?.norm_sq();
        }
        worst = worst.max(acc / draws_per_point as f64);
    }
    Ok(worst.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::ObjectiveSpec;
    use crate::scalarization::ScalarizationConfig;
    use crate::trainer::LrSchedule;
    use approx::assert_abs_diff_eq;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    fn quad_instance(lambda: f64, centers: &[f64], coord_scale: Option<f64>) -> CompositeObjective {
        let agents: Vec<ObjectiveSpec> = centers
            .iter()
            .map(|c| ObjectiveSpec::quadratic(&[*c], 1.0))
            .collect();
        let coords: Vec<ObjectiveSpec> = coord_scale
            .map(|s| vec![ObjectiveSpec::ScaledSqNorm { scale: s }])
            .unwrap_or_default();
        let cfg = ScalarizationConfig::new(lambda, agents.len(), coords.len()).unwrap();
        CompositeObjective::new(agents, coords, cfg).unwrap()
    }

    fn constants(zeta: f64, sigma: f64, d: f64, l: f64) -> BoundConstants {
        BoundConstants::new(l, 0.0, sigma, 0.0, zeta, 0.0, 0, d).unwrap()
    }

    #[test]
    fn zeta_of_homogeneous_agents_is_zero() {
        let comp = quad_instance(0.0, &[1.5, 1.5, 1.5], None);
        let probe = vec![pv(&[0.0]), pv(&[3.0]), pv(&[-7.0])];
        assert_eq!(compute_zeta(&comp, &probe).unwrap(), 0.0);
    }

    #[test]
    fn zeta_closed_forms_are_probe_invariant() {
        // centers {0, 2}: ∇F_i − ∇F = c̄ − c_i, so ζ = 1
        let comp = quad_instance(0.5, &[0.0, 2.0], Some(0.5));
        let probe_a: Vec<ParamVector> = (0..100).map(|i| pv(&[i as f64 * 0.13 - 5.0])).collect();
        let probe_b = vec![pv(&[42.0])];
        assert_abs_diff_eq!(compute_zeta(&comp, &probe_a).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(compute_zeta(&comp, &probe_b).unwrap(), 1.0, epsilon = 1e-12);

        // centers {0, 0, 3}: max_i |c_i − 1| = 2
        let comp = quad_instance(0.0, &[0.0, 0.0, 3.0], None);
        assert_abs_diff_eq!(compute_zeta(&comp, &probe_a).unwrap(), 2.0, epsilon = 1e-12);
        assert!(matches!(
            compute_zeta(&comp, &[]),
            Err(TheoryError::EmptyProbe)
        ));
    }

    #[test]
    fn rate_bound_rhs_hand_values() {
        // noiseless homogeneous: only the first term survives
        let k = constants(0.0, 0.0, 1.0, 1.0);
        assert_abs_diff_eq!(rate_bound_rhs(&k, 4, 1, 2).unwrap(), 1.0);

        // D=1, L=1, Σ=4, ζ=2, T=4, τ=1, M=2 → 1 + 0.5 + 0.625 + 0.25
        let k = constants(2.0, 2.0, 1.0, 1.0);
        assert_eq!(k.sigma_total, 4.0);
        assert_abs_diff_eq!(rate_bound_rhs(&k, 4, 1, 2).unwrap(), 2.375, epsilon = 1e-15);

        let flat = BoundConstants::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 1.0).unwrap();
        assert!(matches!(
            rate_bound_rhs(&flat, 4, 1, 2),
            Err(TheoryError::DegenerateSmoothness)
        ));
    }

    #[test]
    fn drift_rhs_hand_values() {
        assert_eq!(drift_rhs(&constants(0.0, 0.0, 1.0, 1.0), 1, 0.5), 0.0);
        assert_abs_diff_eq!(
            drift_rhs(&constants(2.0, 0.0, 1.0, 1.0), 1, 0.1),
            0.4,
            epsilon = 1e-15
        );
        let k = BoundConstants::new(1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0, 1.0).unwrap();
        assert_abs_diff_eq!(drift_rhs(&k, 2, 0.1), 0.48, epsilon = 1e-15);
    }

    #[test]
    fn eta_schedule_hand_values() {
        let k = constants(0.0, 0.0, 1.0, 1.0);
        assert_abs_diff_eq!(decaying_eta(&k, 16, 1).unwrap(), 0.0625);
        assert_abs_diff_eq!(decaying_eta(&k, 1, 1).unwrap(), 0.25);
        let k2 = constants(0.0, 0.0, 1.0, 2.0);
        assert_abs_diff_eq!(decaying_eta(&k2, 100, 5).unwrap(), 0.0025);
        // never exceeds the stability bound 1/(4L)
        for t in [1usize, 2, 10, 1000] {
            for tau in [1usize, 2, 7] {
                assert!(decaying_eta(&k, t, tau).unwrap() <= 0.25 + 1e-15);
            }
        }
    }

    #[test]
    fn constants_depend_monotonically_on_lambda() {
        let grid = [0.0, 0.25, 0.5, 0.65, 0.75, 0.87];
        let mut prev_l = f64::NEG_INFINITY;
        let mut prev_sigma = f64::NEG_INFINITY;
        let mut prev_eta = f64::INFINITY;
        for lambda in grid {
            let comp = quad_instance(lambda, &[0.0, 2.0], Some(0.5));
            let noise = NoiseModel::gaussian(0.1, 0.1);
            let k = BoundConstants::for_instance(
                &comp,
                &noise,
                &pv(&[0.0]),
                &pv(&[0.0]),
                1.0,
            )
            .unwrap();
            let eta = decaying_eta(&k, 64, 1).unwrap();
            assert!(k.l_total > prev_l, "L not increasing at λ={lambda}");
            assert!(k.sigma_total > prev_sigma, "Σ not increasing at λ={lambda}");
            assert!(eta < prev_eta, "η not decreasing at λ={lambda}");
            prev_l = k.l_total;
            prev_sigma = k.sigma_total;
            prev_eta = eta;
        }
    }

    #[test]
    fn sqrt_t_terms_dominate_for_large_t() {
        let k = constants(1.5, 2.0, 1.0, 1.0);
        let t = 10_000;
        let total = rate_bound_rhs(&k, t, 2, 3).unwrap();
        let tf = t as f64;
        let sqrt_terms = 2.0 * k.d_init * k.d_init * k.l_total / tf.sqrt()
            + k.sigma_total / (2.0 * k.l_total * 3.0 * 2.0 * tf.sqrt());
        assert!(sqrt_terms / total >= 0.95, "ratio {}", sqrt_terms / total);
    }

    #[test]
    fn check_bounds_on_noiseless_homogeneous_instance() {
        let comp = quad_instance(0.0, &[1.0, 1.0], None);
        let mut cfg = TrainConfig::new(64, 1, LrSchedule::Decaying, 11);
        cfg.record_f_bar = true;
        let star = comp.exact_minimizer().unwrap();
        let report = check_bounds(
            &comp,
            &cfg,
            &pv(&[3.0]),
            &NoiseModel::zero(),
            &star,
            0.0,
            4,
        )
        .unwrap();
        assert!(report.satisfied);
        assert!(report.empirical_lhs >= 0.0);
        assert!(report.empirical_lhs <= report.rate_bound_rhs);
        assert_eq!(report.drift_lhs_max_cell, 0.0);
    }

    #[test]
    fn check_bounds_rejects_fixed_schedule() {
        let comp = quad_instance(0.0, &[1.0, 1.0], None);
        let cfg = TrainConfig::new(8, 1, LrSchedule::Fixed(0.1), 0);
        let star = comp.exact_minimizer().unwrap();
        assert!(matches!(
            check_bounds(&comp, &cfg, &pv(&[0.0]), &NoiseModel::zero(), &star, 0.0, 2),
            Err(TheoryError::ScheduleMismatch(_))
        ));
    }

    #[test]
    fn minibatch_sigma_estimate_is_positive_and_bounded() {
        use crate::objectives::{DatasetHandle, Split};
        use ndarray::Array2;
        let mut feats = Array2::zeros((100, 3));
        let mut labels = Vec::new();
        let mut rng = RngStream::for_data(3, 9, StreamLane::Synth).rng();
        for i in 0..100 {
            use rand::Rng;
            let y = rng.random_range(0..3u8);
            feats[[i, 0]] = y as f64 + rng.random::<f64>();
            feats[[i, 1]] = rng.random::<f64>();
            feats[[i, 2]] = 1.0;
            labels.push(y);
        }
        let data = DatasetHandle::from_pool(feats, labels, 3, Split::Train).unwrap();
        let obj = ObjectiveSpec::SoftmaxCE {
            data,
            l2: 0.0,
            batch: Some(10),
        };
        let probe = vec![ParamVector::zeros(9), pv(&[0.1; 9])];
        let sigma = estimate_sigma_minibatch(&obj, &probe, 50, 7).unwrap();
        assert!(sigma > 0.0 && sigma < 10.0, "sigma = {sigma}");
    }
}
