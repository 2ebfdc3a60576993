use proptest::prelude::*;

use lqreg::moments::{comoment_report, compute_moments, summary_stats, MomentSet};
use lqreg::sample::BivariatePairs;
use lqreg::solver::{closed_form_check, fit_lq, fit_ls, foc_cubic, quartic_loss, ClosedFormReading};
use lqreg::synth::{generate, oracle_grid_min, GeneratorKind, GeneratorSpec};

fn kind() -> impl Strategy<Value = GeneratorKind> {
    prop::sample::select(GeneratorKind::ALL.to_vec())
}

prop_compose! {
    fn sample()(kind in kind(), n in 20usize..400, seed in any::<u64>(),
                rho in -0.8f64..0.8, sx in 0.5f64..2.0, sy in 0.5f64..2.0) -> BivariatePairs {
        generate(&GeneratorSpec::new(kind, n, seed).with_rho(rho).with_sigmas(sx, sy)).unwrap()
    }
}

fn scale(pairs: &BivariatePairs, a: f64, c: f64) -> BivariatePairs {
    let x: Vec<f64> = pairs.x.iter().map(|v| a * v).collect();
    let y: Vec<f64> = pairs.y.iter().map(|v| c * v).collect();
    BivariatePairs::centered(&x, &y).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn centering_is_idempotent(p in sample()) {
        let again = BivariatePairs::centered(&p.x, &p.y).unwrap();
        let sx: f64 = again.x.iter().sum();
        let sy: f64 = again.y.iter().sum();
        prop_assert!(sx.abs() <= 1e-12 * p.n() as f64);
        prop_assert!(sy.abs() <= 1e-12 * p.n() as f64);
        for (a, b) in again.x.iter().zip(&p.x) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn raw_sums_are_n_times_averages(p in sample()) {
        let ms = compute_moments(&p);
        let n = p.n() as f64;
        let raw22: f64 = p.x.iter().zip(&p.y).map(|(x, y)| x * x * y * y).sum();
        let raw31: f64 = p.x.iter().zip(&p.y).map(|(x, y)| x * x * x * y).sum();
        prop_assert!(rel_close(raw22, n * ms.mu22, 1e-12));
        prop_assert!(rel_close(raw31, n * ms.mu31, 1e-12) || (raw31 - n * ms.mu31).abs() <= 1e-12 * n * ms.mu40);
    }

    #[test]
    fn moment_invariants(p in sample()) {
        let ms = compute_moments(&p);
        prop_assert!(ms.mu20 >= 0.0 && ms.mu02 >= 0.0 && ms.mu40 >= 0.0 && ms.mu04 >= 0.0 && ms.mu22 >= 0.0);
        prop_assert!(ms.mu11 * ms.mu11 <= ms.mu20 * ms.mu02 * (1.0 + 1e-12));
        prop_assert!(ms.mu11 * ms.mu11 <= ms.mu22 * (1.0 + 1e-12));
        prop_assert!(ms.mu40 >= ms.mu20 * ms.mu20 * (1.0 - 1e-12));
        prop_assert!(ms.mu04 >= ms.mu02 * ms.mu02 * (1.0 - 1e-12));
    }

    #[test]
    fn swap_symmetry(p in sample()) {
        let ms = compute_moments(&p);
        let sw = compute_moments(&p.swapped());
        prop_assert!(rel_close(sw.mu21, ms.mu12, 1e-12) || (sw.mu21 - ms.mu12).abs() < 1e-14);
        prop_assert!(rel_close(sw.mu31, ms.mu13, 1e-12) || (sw.mu31 - ms.mu13).abs() < 1e-14);
        prop_assert!(rel_close(sw.mu13, ms.mu31, 1e-12) || (sw.mu13 - ms.mu31).abs() < 1e-14);
        prop_assert!(rel_close(sw.mu22, ms.mu22, 1e-12));
        prop_assert!(rel_close(sw.mu11, ms.mu11, 1e-12) || (sw.mu11 - ms.mu11).abs() < 1e-14);
    }

    #[test]
    fn scale_covariance(p in sample(), a in 0.01f64..100.0, c in 0.01f64..100.0) {
        let ms = compute_moments(&p);
        let sc = compute_moments(&scale(&p, a, c));
        prop_assert!(rel_close(sc.mu40, a.powi(4) * ms.mu40, 1e-10));
        prop_assert!(rel_close(sc.mu22, a * a * c * c * ms.mu22, 1e-10));
        prop_assert!(rel_close(sc.mu04, c.powi(4) * ms.mu04, 1e-10));
        let r0 = comoment_report(&ms).unwrap();
        let r1 = comoment_report(&sc).unwrap();
        for (u, v) in [
            (r0.rho, r1.rho),
            (r0.lambda21, r1.lambda21),
            (r0.lambda12, r1.lambda12),
            (r0.lambda31, r1.lambda31),
            (r0.lambda13, r1.lambda13),
            (r0.lambda22, r1.lambda22),
        ] {
            prop_assert!((u - v).abs() <= 1e-10);
        }
    }

    #[test]
    fn lq_scale_equivariance(p in sample(), a in prop::sample::select(vec![0.01, 0.5, 1.0, 3.0, 100.0]),
                             c in prop::sample::select(vec![0.01, 0.5, 1.0, 3.0, 100.0])) {
        let base = fit_lq(&compute_moments(&p)).unwrap().b_lq;
        let b = fit_lq(&compute_moments(&scale(&p, a, c))).unwrap().b_lq;
        let expected = c / a * base;
        prop_assert!((b - expected).abs() <= 1e-9 * expected.abs().max(1.0));
    }

    #[test]
    fn moment_scaling_leaves_roots(p in sample(), k in 1e-6f64..1e6) {
        let ms = compute_moments(&p);
        let mut scaled = ms;
        scaled.mu40 *= k;
        scaled.mu31 *= k;
        scaled.mu22 *= k;
        scaled.mu13 *= k;
        scaled.mu04 *= k;
        let f0 = fit_lq(&ms).unwrap();
        let f1 = fit_lq(&scaled).unwrap();
        prop_assert_eq!(f0.critical_points.len(), f1.critical_points.len());
        for (u, v) in f0.critical_points.iter().zip(&f1.critical_points) {
            prop_assert!((u.b - v.b).abs() <= 1e-10 * u.b.abs().max(1.0));
        }
    }

    #[test]
    fn analytic_derivative_matches_numeric(p in sample(), t in -3.0f64..3.0) {
        let ms = compute_moments(&p);
        let b = fit_ls(&ms).unwrap() + t;
        let h = 1e-5 * b.abs().max(1.0);
        let numeric = (quartic_loss(&ms, b + h) - quartic_loss(&ms, b - h)) / (2.0 * h);
        let analytic = 4.0 * foc_cubic(&ms).unwrap().eval(b);
        let scale = analytic.abs().max(quartic_loss(&ms, b) / b.abs().max(1.0));
        prop_assert!((numeric - analytic).abs() <= 1e-5 * scale,
            "numeric {numeric} analytic {analytic}");
    }

    #[test]
    fn lq_is_the_grid_minimum(p in sample()) {
        let ms = compute_moments(&p);
        let b_ls = fit_ls(&ms).unwrap();
        let s = b_ls.abs().max(1.0);
        let oracle = oracle_grid_min(&ms, b_ls, 10.0 * s, 1e-3);
        let fit = fit_lq(&ms).unwrap();
        prop_assert!((fit.b_lq - oracle).abs() <= 1e-6, "lq {} oracle {}", fit.b_lq, oracle);
        prop_assert!(fit.minimum().is_local_min() || fit.minimum().multiplicity == 3);
        prop_assert!(quartic_loss(&ms, fit.b_lq) <= quartic_loss(&ms, b_ls));
    }

    #[test]
    fn oracle_is_stable_under_refined_grid(p in sample()) {
        let ms = compute_moments(&p);
        let b_ls = fit_ls(&ms).unwrap();
        let s = b_ls.abs().max(1.0);
        let coarse = oracle_grid_min(&ms, b_ls, 10.0 * s, 1e-3);
        let fine = oracle_grid_min(&ms, b_ls, 10.0 * s, 5e-4);
        prop_assert!((coarse - fine).abs() <= 1e-8);
    }

    #[test]
    fn closed_form_agrees_on_single_root(p in sample()) {
        let ms = compute_moments(&p);
        let fit = fit_lq(&ms).unwrap();
        if fit.n_real_roots == 1 {
            let check = closed_form_check(&ms, 1e-8);
            let direct = check.consistent.expect("closed form evaluates");
            prop_assert_eq!(Some(direct), lqreg::solver::closed_form_root(&ms, ClosedFormReading::Mu40Consistent));
            prop_assert!((direct - fit.b_lq).abs() <= 1e-8 * fit.b_lq.abs().max(1.0));
        }
    }

    #[test]
    fn gaussian_population_identities(sx in 0.1f64..10.0, sy in 0.1f64..10.0, rho in -0.99f64..0.99) {
        let ms = MomentSet::gaussian(sx, sy, rho);
        let r = comoment_report(&ms).unwrap();
        let scale = (sx * sy).powi(2).max(sx.powi(4)).max(sy.powi(4));
        prop_assert!(r.kappa13.abs() <= 1e-12 * scale);
        prop_assert!(r.kappa31.abs() <= 1e-12 * scale);
        prop_assert!(r.kappa22.abs() <= 1e-12 * scale);
        prop_assert!((r.lambda22 - (1.0 + 2.0 * rho * rho)).abs() <= 1e-12);
        let fit = fit_lq(&ms).unwrap();
        prop_assert!((fit.b_lq - rho * sy / sx).abs() <= 1e-10 * (sy / sx).max(1.0));
        prop_assert!(fit.residual_foc <= 1e-12);
    }

    #[test]
    fn summary_affine_invariance(values in prop::collection::vec(-100.0f64..100.0, 5..60)) {
        prop_assume!(values.iter().any(|v| (v - values[0]).abs() > 1e-3));
        let mapped: Vec<f64> = values.iter().map(|v| 2.0 * v + 7.0).collect();
        let s0 = summary_stats(&values).unwrap();
        let s1 = summary_stats(&mapped).unwrap();
        prop_assert!((s0.skewness - s1.skewness).abs() <= 1e-10);
        prop_assert!((s0.excess_kurtosis - s1.excess_kurtosis).abs() <= 1e-10);
        prop_assert!((s0.st_dev - s0.variance.sqrt()).abs() <= 1e-12 * s0.st_dev);
    }
}
