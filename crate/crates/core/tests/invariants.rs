use carbon_forecast::disagg::{chow_lin, AnnualSeries, RhoChoice};
use carbon_forecast::eval::{
    dm_test, fluctuation_test, pt_test, qcrps, relative_rmsfe, weighted_qcrps, FluctuationOptions, Region,
    FLUCTUATION_CV_05,
};
use carbon_forecast::factors::{extract_factors, factor_contributions};
use carbon_forecast::forecast::{quantile_grid, to_levels, QuantileGrid};
use carbon_forecast::linalg::Mat;
use carbon_forecast::models::{niw_update, var_design};
use carbon_forecast::timeseries::{align_panel, log_diff, standardize};
use carbon_forecast::{MonthDate, MonthlySeries, PredictorClass};
use proptest::prelude::*;

fn jan(y: i32) -> MonthDate {
    MonthDate::new(y, 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chow_lin_aggregates_for_any_rho(
        ind in prop::collection::vec(5.0f64..50.0, 48),
        annual in prop::collection::vec(100.0f64..1000.0, 4),
        rho in -0.95f64..0.95,
        constant in any::<bool>(),
        c in 0.1f64..10.0,
    ) {
        let ind = MonthlySeries::new("ip", jan(2010), ind).unwrap();
        let a = AnnualSeries::new(2010, annual.clone()).unwrap();
        let r = chow_lin(&a, &ind, constant, RhoChoice::Fixed(rho)).unwrap();
        for (y, chunk) in r.monthly.values().chunks(12).enumerate() {
            let s: f64 = chunk.iter().sum();
            prop_assert!(((s - annual[y]) / annual[y]).abs() <= 1e-9);
        }
        let scaled = AnnualSeries::new(2010, annual.iter().map(|v| c * v).collect()).unwrap();
        let r2 = chow_lin(&scaled, &ind, constant, RhoChoice::Fixed(rho)).unwrap();
        for (u, v) in r.monthly.values().iter().zip(r2.monthly.values()) {
            prop_assert!((c * u - v).abs() <= 1e-8 * v.abs().max(1.0));
        }
    }

    #[test]
    fn standardize_is_idempotent(v in prop::collection::vec(-100.0f64..100.0, 5..60)) {
        prop_assume!(v.iter().any(|x| (x - v[0]).abs() > 1e-6));
        let s = MonthlySeries::new("x", jan(2000), v).unwrap();
        let once = standardize(&s).unwrap();
        let twice = standardize(&once.series).unwrap();
        for (a, b) in once.series.values().iter().zip(twice.series.values()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pca_reconstructs_and_decorrelates(
        raw in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 30), 4),
    ) {
        let series: Vec<(MonthlySeries, PredictorClass)> = raw
            .iter()
            .enumerate()
            .map(|(j, v)| {
                (MonthlySeries::new(format!("x{j}"), jan(2001), v.clone()).unwrap(), PredictorClass::ALL[j % 4])
            })
            .collect();
        let panel = align_panel(&series).unwrap();
        let n = panel.n_predictors();
        let model = extract_factors(&panel, n).unwrap();
        let t = panel.n_obs();
        let scores = Mat::from_fn(t, n, |i, c| model.factors[c].values()[i]);
        let recon = &scores * model.loadings.transpose();
        for i in 0..t {
            for j in 0..n {
                prop_assert!((recon[(i, j)] - panel.value(j, i)).abs() < 1e-8);
            }
        }
        let cov = scores.transpose() * &scores / (t as f64 - 1.0);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    prop_assert!(cov[(a, b)].abs() < 1e-8);
                }
            }
        }
        for which in 0..n {
            let parts = factor_contributions(&model, &panel, which).unwrap();
            for i in 0..t {
                let total: f64 = parts.values().map(|s| s.values()[i]).sum();
                prop_assert!((total - model.factors[which].values()[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn niw_posterior_ignores_row_order(
        data in prop::collection::vec(-1.0f64..1.0, 60),
        seed in any::<u64>(),
    ) {
        let y = Mat::from_row_slice(30, 2, &data);
        let (x, yy) = var_design(&y, 1).unwrap();
        let rows = x.nrows();
        let mut perm: Vec<usize> = (0..rows).collect();
        // deterministic shuffle driven by the case seed
        let mut state = seed | 1;
        for i in (1..rows).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            perm.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let xp = Mat::from_fn(rows, x.ncols(), |r, c| x[(perm[r], c)]);
        let yp = Mat::from_fn(rows, 2, |r, c| yy[(perm[r], c)]);
        let b0 = Mat::zeros(3, 2);
        let v0 = [1e-2, 4.0, 4.0];
        let s0 = Mat::identity(2, 2) * 0.1;
        let a = niw_update(&x, &yy, &b0, &v0, &s0, 4.0, 1).unwrap();
        let b = niw_update(&xp, &yp, &b0, &v0, &s0, 4.0, 1).unwrap();
        prop_assert!((a.coef_mean - b.coef_mean).abs().max() < 1e-10);
        prop_assert!((a.coef_row_cov - b.coef_row_cov).abs().max() < 1e-10);
        prop_assert!((a.sigma_scale - b.sigma_scale).abs().max() < 1e-10);
    }

    #[test]
    fn levels_and_log_diff_are_inverse(
        r0 in -3.0f64..6.0,
        path in prop::collection::vec(-0.3f64..0.3, 1..40),
    ) {
        let levels = to_levels(r0, &path).unwrap();
        let mut full = vec![r0.exp()];
        full.extend(&levels);
        let s = MonthlySeries::new("p", jan(2000), full).unwrap();
        let back = log_diff(&s).unwrap();
        for (a, b) in back.values().iter().zip(&path) {
            prop_assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
    }

    #[test]
    fn quantiles_are_monotone(draws in prop::collection::vec(-1e3f64..1e3, 1..300), j in 2usize..40) {
        let q = quantile_grid(&draws, j).unwrap();
        prop_assert_eq!(q.values.len(), j - 1);
        prop_assert!(q.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn qcrps_is_nonnegative_and_decomposes(
        mut values in prop::collection::vec(-10.0f64..10.0, 19),
        realized in -12.0f64..12.0,
    ) {
        values.sort_by(f64::total_cmp);
        let g = QuantileGrid { j: 20, values };
        let total = qcrps(&g, realized).unwrap();
        let c = weighted_qcrps(&g, realized, Region::Center).unwrap();
        let r = weighted_qcrps(&g, realized, Region::Right).unwrap();
        let l = weighted_qcrps(&g, realized, Region::Left).unwrap();
        prop_assert!(total >= 0.0 && c >= 0.0 && r >= 0.0 && l >= 0.0);
        prop_assert!((total - (l + r + 2.0 * c)).abs() <= 1e-12 * total.max(1.0));
    }

    #[test]
    fn qcrps_zero_only_at_point_mass(realized in -5.0f64..5.0, shift in 1e-6f64..1.0, at in 0usize..19) {
        let mut g = QuantileGrid { j: 20, values: vec![realized; 19] };
        prop_assert_eq!(qcrps(&g, realized).unwrap(), 0.0);
        for v in g.values.iter_mut().skip(at) {
            *v += shift;
        }
        prop_assert!(qcrps(&g, realized).unwrap() > 0.0);
    }

    #[test]
    fn self_relative_rmsfe_is_one(e in prop::collection::vec(-5.0f64..5.0, 1..50)) {
        prop_assume!(e.iter().any(|v| *v != 0.0));
        prop_assert_eq!(relative_rmsfe(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn tests_are_scale_free(
        e1 in prop::collection::vec(-3.0f64..3.0, 40),
        e2 in prop::collection::vec(-3.0f64..3.0, 40),
        c in 0.01f64..100.0,
        h in 1usize..4,
    ) {
        let d: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a * a - b * b).collect();
        let dc: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| (c * a).powi(2) - (c * b).powi(2)).collect();
        prop_assume!(d.iter().any(|v| v.abs() > 1e-6));
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-10 * a.abs().max(1.0);
        if let (Ok(a), Ok(b)) = (dm_test(&d, h), dm_test(&dc, h)) {
            prop_assert!(close(a.statistic, b.statistic));
        }
        let f = fluctuation_test(&d, 13, &FLUCTUATION_CV_05, FluctuationOptions::default()).unwrap();
        let fc = fluctuation_test(&dc, 13, &FLUCTUATION_CV_05, FluctuationOptions::default()).unwrap();
        for (a, b) in f.path.iter().zip(&fc.path) {
            prop_assert!(close(*a, *b));
        }
        let sign = |v: f64| if v > 0.0 { 1i8 } else if v < 0.0 { -1 } else { 0 };
        let fs: Vec<i8> = e1.iter().map(|v| sign(*v)).collect();
        let rs: Vec<i8> = e2.iter().map(|v| sign(*v)).collect();
        let fsc: Vec<i8> = e1.iter().map(|v| sign(c * v)).collect();
        let rsc: Vec<i8> = e2.iter().map(|v| sign(c * v)).collect();
        if let (Ok(a), Ok(b)) = (pt_test(&fs, &rs), pt_test(&fsc, &rsc)) {
            prop_assert!(close(a.statistic, b.statistic));
        }
    }
}

#[test]
fn dm_size_under_the_null() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let reps = 2000;
    let mut rejections = 0;
    for _ in 0..reps {
        let d: Vec<f64> = (0..58).map(|_| StandardNormal.sample(&mut rng)).collect();
        if dm_test(&d, 1).unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    // binomial sd at 2000 replications is about 0.005
    assert!((rate - 0.05).abs() < 0.02, "size {rate}");
}
