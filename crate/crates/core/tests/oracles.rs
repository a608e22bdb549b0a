mod common;

use common::*;
use cscox_core::{
    cure_rate, estimate_p, fit, kim_loglik, loglik_left, loglik_right, score_left, score_right,
    zero_prob, BetaBox, FitConfig, FitWarning, Model, Truncation,
};

fn events_max(r: &Rows) -> f64 {
    (0..r.n())
        .filter(|&i| r.a[i] == 0)
        .map(|i| r.x[i])
        .fold(0.0, f64::max)
}

fn events_min(r: &Rows) -> f64 {
    (0..r.n())
        .filter(|&i| r.a[i] == 0)
        .map(|i| r.x[i])
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn loglik_matches_literal_transcription() {
    for seed in 0..30 {
        for model in [Model::RightCs, Model::LeftCs] {
            let rows = random_rows(seed, 5 + seed as usize % 20, 2, 0.6, model);
            let d = rows.to_dataset(model);
            let sorted = Rows::from_dataset(&d);
            let beta = [0.3 - 0.05 * seed as f64, 0.7];
            for p in [0.2, 0.65, 1.0] {
                let (got, bound) = match model {
                    Model::RightCs => {
                        let tau = events_max(&sorted);
                        (loglik_right(&d, p, &beta, tau).unwrap(), tau)
                    }
                    Model::LeftCs => {
                        let rho = events_min(&sorted);
                        (loglik_left(&d, p, &beta, rho).unwrap(), rho)
                    }
                };
                let want = literal_loglik(&sorted, model, p, &beta, bound);
                assert!(
                    (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                    "{model:?} seed {seed} p {p}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn loglik_with_interior_truncation_and_weights() {
    let rows = random_rows(91, 40, 3, 0.5, Model::RightCs);
    let d = rows.to_dataset(Model::RightCs);
    let weights: Vec<f64> = (0..d.n()).map(|i| 0.25 + (i % 7) as f64 * 0.3).collect();
    let dw = d.with_weights(weights.clone()).unwrap();
    let mut sorted = Rows::from_dataset(&d);
    sorted.w = weights;
    let tau = sorted.x[30];
    let beta = [0.4, -1.1, 0.2];
    let want = literal_loglik(&sorted, Model::RightCs, 0.4, &beta, tau);
    let got = loglik_right(&dw, 0.4, &beta, tau).unwrap();
    assert!((got - want).abs() < 1e-12 * want.abs().max(1.0));
}

#[test]
fn score_matches_finite_differences_small_n() {
    for seed in 100..110 {
        for model in [Model::RightCs, Model::LeftCs] {
            let rows = random_rows(seed, 20, 2, 0.7, model);
            let d = rows.to_dataset(model);
            let sorted = Rows::from_dataset(&d);
            let beta = [0.2, -0.4];
            let (score, bound) = match model {
                Model::RightCs => {
                    let tau = events_max(&sorted);
                    (score_right(&d, 0.7, &beta, tau).unwrap(), tau)
                }
                Model::LeftCs => {
                    let rho = events_min(&sorted);
                    (score_left(&d, 0.7, &beta, rho).unwrap(), rho)
                }
            };
            let fd = central_difference(
                |b| literal_loglik(&sorted, model, 0.7, b, bound),
                &beta,
                1e-6,
            );
            for (g, f) in score.iter().zip(&fd) {
                assert!(rel_err(*g, *f) < 1e-5, "{model:?} seed {seed}: {g} vs {f}");
            }
        }
    }
}

#[test]
fn cox_score_without_current_status_records() {
    let rows = random_rows(7, 60, 2, 1.0, Model::RightCs);
    let d = rows.to_dataset(Model::RightCs);
    let sorted = Rows::from_dataset(&d);
    let beta = [0.3, 0.1];
    let score = score_right(&d, 1.0, &beta, events_max(&sorted)).unwrap();
    let (_, grad, _) = cox_partial(&sorted, &beta);
    for (s, g) in score.iter().zip(&grad) {
        assert!((s - g / d.n() as f64).abs() < 1e-13);
    }
}

#[test]
fn classical_data_reduce_to_cox_and_breslow() {
    for seed in 200..205 {
        let rows = random_rows(seed, 150, 2, 1.0, Model::RightCs);
        let d = rows.to_dataset(Model::RightCs);
        let sorted = Rows::from_dataset(&d);
        let config = FitConfig {
            grad_tol: 1e-12,
            ..FitConfig::default()
        };
        let f = fit(&d, &config).unwrap();
        assert_eq!(f.theta_hat.p, 1.0);
        let oracle = cox_newton(&sorted, 2);
        for (b, o) in f.theta_hat.beta.iter().zip(&oracle) {
            assert!((b - o).abs() < 1e-6, "seed {seed}: {b} vs {o}");
        }
        for (t, cum) in breslow(&sorted, &oracle) {
            assert!((f.hazard.eval(t) - cum).abs() < 1e-10);
        }
    }
}

#[test]
fn zero_coefficients_give_nelson_aalen() {
    // the two-point hand example: jumps 1/2 then 1
    let d =
        cscox_core::validate([(1.0, 0, vec![3.0]), (2.0, 0, vec![-1.0])], Model::RightCs).unwrap();
    let config = FitConfig {
        beta_box: BetaBox::origin(),
        ..FitConfig::default()
    };
    let f = fit(&d, &config).unwrap();
    assert_eq!(f.hazard.increments(), &[0.5, 1.0]);
    assert_eq!(f.hazard.eval(2.0), 1.5);

    for seed in 300..305 {
        let rows = random_rows(seed, 80, 1, 1.0, Model::RightCs);
        let d = rows.to_dataset(Model::RightCs);
        let f = fit(&d, &config).unwrap();
        let events: Vec<bool> = rows.a.iter().map(|&a| a == 0).collect();
        for (t, cum) in nelson_aalen(&rows.x, &events) {
            assert!((f.hazard.eval(t) - cum).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_coefficients_product_limit_is_kaplan_meier() {
    let rows = random_rows(17, 60, 2, 1.0, Model::RightCs);
    let d = rows.to_dataset(Model::RightCs);
    let config = FitConfig {
        beta_box: BetaBox::origin(),
        ..FitConfig::default()
    };
    let f = fit(&d, &config).unwrap();
    // Kaplan-Meier written from counts
    let mut order: Vec<usize> = (0..rows.n()).collect();
    order.sort_by(|&i, &j| rows.x[i].total_cmp(&rows.x[j]));
    let mut km = 1.0;
    let mut at_risk = rows.n() as f64;
    let mut checked = 0;
    for &i in &order {
        if rows.a[i] == 0 {
            km *= 1.0 - 1.0 / at_risk;
            let curve =
                cscox_core::estimator::survival_curve(&f, &[0.0, 0.0], &[rows.x[i]]).unwrap();
            assert!((curve.values[0] - km).abs() < 1e-12);
            checked += 1;
        }
        at_risk -= 1.0;
    }
    assert!(checked > 10);
    assert!((cure_rate(&f, &[0.0, 0.0]).unwrap() - km).abs() < 1e-12);
}

#[test]
fn left_model_is_the_mirror_of_the_right_model() {
    for seed in 400..405 {
        let rows = random_rows(seed, 60, 2, 0.6, Model::RightCs);
        let right = rows.to_dataset(Model::RightCs);
        let horizon = 10.0 + rows.x.iter().copied().fold(0.0, f64::max);
        let left = right.mirrored(horizon).unwrap();
        assert_eq!(left.model(), Model::LeftCs);
        assert_eq!(estimate_p(&left), estimate_p(&right));
        let tau = events_max(&Rows::from_dataset(&right));
        let beta = [0.5, -0.3];
        let a = loglik_right(&right, 0.6, &beta, tau).unwrap();
        let b = loglik_left(&left, 0.6, &beta, horizon - tau).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs());
        let sa = score_right(&right, 0.6, &beta, tau).unwrap();
        let sb = score_left(&left, 0.6, &beta, horizon - tau).unwrap();
        for (u, v) in sa.iter().zip(&sb) {
            assert!((u - v).abs() < 1e-12);
        }

        let fr = fit(&right, &FitConfig::default()).unwrap();
        let fl = fit(&left, &FitConfig::default()).unwrap();
        assert!((fr.truncation - (horizon - fl.truncation)).abs() < 1e-12);
        for (u, v) in fr.theta_hat.beta.iter().zip(&fl.theta_hat.beta) {
            assert!((u - v).abs() < 1e-7);
        }
        // jumps of the reverse hazard sit at the mirrored event times
        for (t, inc) in fr.hazard.jumps() {
            assert!((fl.hazard.jump_at(horizon - t) - inc).abs() < 1e-6 * inc);
        }
        // the right product runs over (0, tau], the left one over (rho, inf);
        // factors are clamped at zero
        let z = [0.2, -0.1];
        let s = cure_rate(&fr, &z).unwrap();
        let risk = (fl.theta_hat.beta[0] * z[0] + fl.theta_hat.beta[1] * z[1]).exp();
        let f0 =
            zero_prob(&fl, &z).unwrap() * (1.0 - risk * fl.hazard.jump_at(fl.truncation)).max(0.0);
        assert!((s - f0).abs() < 1e-6, "{s} vs {f0}");
    }
}

#[test]
fn left_zero_coefficients_give_reverse_nelson_aalen() {
    let rows = random_rows(33, 80, 1, 1.0, Model::LeftCs);
    assert!(!rows.a.contains(&1));
    let d = rows.to_dataset(Model::LeftCs);
    let config = FitConfig {
        beta_box: BetaBox::origin(),
        ..FitConfig::default()
    };
    let f = fit(&d, &config).unwrap();
    assert_eq!(f.theta_hat.p, 1.0);
    let events: Vec<bool> = rows.a.iter().map(|&a| a == 0).collect();
    for (t, inc) in reverse_nelson_aalen(&rows.x, &events) {
        assert!((f.hazard.jump_at(t) - inc).abs() < 1e-12);
    }
}

#[test]
fn kim_likelihood_at_breslow_baseline_is_partial_likelihood_plus_compensator() {
    // no ties and no current status records: with the Breslow baseline the
    // full likelihood is the partial likelihood minus the compensator
    // sum_i exp(b'z_i) L(x_i-) over events and L(x_i) over censorings
    let rows = random_rows(55, 50, 2, 1.0, Model::RightCs);
    let d = rows.to_dataset(Model::RightCs);
    let sorted = Rows::from_dataset(&d);
    let beta = [0.4, -0.2];
    let steps = breslow(&sorted, &beta);
    let mut prev = 0.0;
    let (times, incs): (Vec<f64>, Vec<f64>) = steps
        .iter()
        .map(|&(t, c)| {
            let inc = c - prev;
            prev = c;
            (t, inc)
        })
        .unzip();
    let base = cscox_core::StepFunction::new(times, incs).unwrap();
    let (partial, _, _) = cox_partial(&sorted, &beta);
    let mut compensator = 0.0;
    for i in 0..sorted.n() {
        let r = (beta[0] * sorted.z[i][0] + beta[1] * sorted.z[i][1]).exp();
        compensator += r * if sorted.a[i] == 0 {
            base.eval_left(sorted.x[i])
        } else {
            base.eval(sorted.x[i])
        };
    }
    let got = kim_loglik(&d, &beta, &base).unwrap();
    assert!((got - (partial - compensator)).abs() < 1e-10);
}

#[test]
fn kim_likelihood_rejects_empty_current_status_window() {
    let d =
        cscox_core::validate([(0.5, 2, vec![0.0]), (1.0, 0, vec![1.0])], Model::RightCs).unwrap();
    let h = cscox_core::StepFunction::new(vec![1.0], vec![0.5]).unwrap();
    assert!(matches!(
        kim_loglik(&d, &[0.0], &h),
        Err(cscox_core::Error::DegenerateCurrentStatus(0))
    ));
}

#[test]
fn argmax_is_equivariant_under_translation_and_scaling() {
    let spec = cscox_core::ScenarioSpec::from_toml(
        r#"
        model = "right-cs"
        n = 300
        p0 = 0.6
        beta0 = [0.8, -0.4]
        baseline = "weibull(1.3, 1)"
        censoring = "exponential(0.4)"
        covariates = "uniform(-1, 1)"
        seed = 99
        "#,
    )
    .unwrap();
    let d = cscox_core::simulate(&spec).unwrap();
    let base = fit(&d, &FitConfig::default()).unwrap();
    let shifted = fit(&d.with_covariate_shift(&[3.0, -2.0]), &FitConfig::default()).unwrap();
    for (u, v) in base.theta_hat.beta.iter().zip(&shifted.theta_hat.beta) {
        assert!((u - v).abs() < 1e-6);
    }
    let scaled = fit(&d.with_covariate_scale(1, 4.0), &FitConfig::default()).unwrap();
    assert!((base.theta_hat.beta[0] - scaled.theta_hat.beta[0]).abs() < 1e-6);
    assert!((base.theta_hat.beta[1] - 4.0 * scaled.theta_hat.beta[1]).abs() < 1e-6);
    // the baseline absorbs the translation: exp(-beta'shift) scaling
    let factor = (base.theta_hat.beta[0] * 3.0 - base.theta_hat.beta[1] * 2.0).exp();
    for (t, inc) in base.hazard.jumps() {
        assert!((shifted.hazard.jump_at(t) * factor - inc).abs() < 1e-6 * inc);
    }
}

#[test]
fn single_event_dataset_fits() {
    let d = cscox_core::validate(
        [
            (0.5, 1, vec![0.1]),
            (1.0, 0, vec![0.4]),
            (1.5, 2, vec![-0.3]),
            (2.0, 1, vec![0.9]),
        ],
        Model::RightCs,
    )
    .unwrap();
    let f = fit(&d, &FitConfig::default()).unwrap();
    assert_eq!(f.hazard.len(), 1);
    assert_eq!(f.truncation, 1.0);
    assert!(f.theta_hat.beta[0].is_finite());
    assert!(f.theta_hat.p > 0.0);
}

#[test]
fn fixed_truncation_must_leave_a_risk_set() {
    let d = cscox_core::validate(
        [
            (1.0, 0, vec![0.0]),
            (2.0, 2, vec![1.0]),
            (3.0, 2, vec![0.5]),
        ],
        Model::RightCs,
    )
    .unwrap();
    let config = FitConfig {
        tau: Truncation::Fixed(1.5),
        ..FitConfig::default()
    };
    assert!(matches!(
        fit(&d, &config),
        Err(cscox_core::Error::TruncationInfeasible { .. })
    ));
}

#[test]
fn p_below_floor_is_floored() {
    let mut recs = vec![(1.0, 0, vec![0.0])];
    recs.extend((0..2000).map(|i| (0.5 + i as f64 * 1e-3, 2, vec![(i % 3) as f64])));
    recs.push((9.0, 1, vec![1.0]));
    let d = cscox_core::validate(recs, Model::RightCs).unwrap();
    let f = fit(&d, &FitConfig::default()).unwrap();
    assert_eq!(f.theta_hat.p, 1e-3);
    assert!(f
        .warnings
        .iter()
        .any(|w| matches!(w, FitWarning::PFloorApplied { .. })));
}
