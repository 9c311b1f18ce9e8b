use carbon_forecast::backtest::{align_evaluation_sample, run_expanding_window, BacktestPlan, ModelSpec};
use carbon_forecast::disagg::AnnualSeries;
use carbon_forecast::forecast::ForecastRecord;
use carbon_forecast::io::DataBundle;
use carbon_forecast::models::SvRun;
use carbon_forecast::synth::{generate_bundle, SynthConfig};
use carbon_forecast::{MonthDate, MonthlySeries};

fn d(y: i32, m: u32) -> MonthDate {
    MonthDate::new(y, m).unwrap()
}

fn models(ids: &[&str]) -> Vec<ModelSpec> {
    ids.iter().map(|s| s.parse().unwrap()).collect()
}

fn bundle(seed: u64) -> DataBundle {
    generate_bundle(&SynthConfig::standard(seed)).unwrap().0
}

fn perturb_after(s: &MonthlySeries, origin: MonthDate, f: impl Fn(usize, f64) -> f64) -> MonthlySeries {
    let values = s
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| if s.date_at(i) > origin { f(i, *v) } else { *v })
        .collect();
    MonthlySeries::with_transform(s.name.clone(), s.start, values, s.transform).unwrap()
}

fn poisoned(b: &DataBundle, origin: MonthDate) -> DataBundle {
    let mut p = b.clone();
    p.price = perturb_after(&b.price, origin, |i, v| v * (1.5 + 0.1 * (i % 3) as f64));
    p.ip = perturb_after(&b.ip, origin, |_, v| v * 0.7);
    for r in &mut p.predictors {
        r.series = perturb_after(&r.series, origin, |i, v| v * 3.0 + (i as f64).sin());
    }
    for s in &mut p.sector_ip {
        *s = perturb_after(s, origin, |_, v| v * 1.4);
    }
    let years = b.emissions_annual.values().len();
    let annual = b
        .emissions_annual
        .values()
        .iter()
        .enumerate()
        .map(|(k, v)| if b.emissions_annual.start_year + (k as i32) > origin.year() { v * 2.0 } else { *v })
        .collect();
    assert_eq!(years, 11);
    p.emissions_annual = AnnualSeries::new(b.emissions_annual.start_year, annual).unwrap();
    p
}

fn without_realized(r: &[ForecastRecord]) -> Vec<ForecastRecord> {
    r.iter()
        .cloned()
        .map(|mut x| {
            x.realized = None;
            x
        })
        .collect()
}

#[test]
fn post_origin_data_cannot_reach_forecasts() {
    let b = bundle(11);
    for origin in [d(2019, 12), d(2021, 5)] {
        let mut plan = BacktestPlan::new(
            origin,
            origin,
            12,
            models(&["RW", "RWD", "ARIMA(1,1,1)", "BAR(AIC)", "BVAR(1)", "BFAVAR(1)-F2", "BFAVAR(1)-F1-SV"]),
        );
        plan.density = true;
        plan.draws = 500;
        plan.sv_run = SvRun { draws: 200, burn: 100, thin: 1 };
        plan.seed = 3;
        let clean = run_expanding_window(&b, &plan).unwrap();
        let dirty = run_expanding_window(&poisoned(&b, origin), &plan).unwrap();
        assert_eq!(without_realized(&clean), without_realized(&dirty));
        assert!(clean.iter().zip(&dirty).any(|(a, b)| a.realized != b.realized));
    }
}

#[test]
fn record_count_follows_the_counting_formula() {
    let full = bundle(5);
    let b = full.through(d(2017, 5)).unwrap();
    assert_eq!(b.price.len(), 60);
    let plan = BacktestPlan::new(d(2016, 5), d(2017, 2), 3, models(&["RW", "BAR(1)"]));
    let recs = run_expanding_window(&b, &plan).unwrap();
    assert_eq!(plan.origins().len(), 10);
    assert_eq!(recs.len(), 10 * 2 * 3);
    assert!(recs.iter().all(|r| r.realized.is_some()));

    let plan = BacktestPlan::new(d(2018, 1), d(2019, 6), 4, models(&["RW", "RWD", "BVAR(1)"]));
    assert_eq!(run_expanding_window(&full, &plan).unwrap().len(), 18 * 3 * 4);
}

#[test]
fn default_geometry_evaluation_sample() {
    let b = bundle(2);
    let mut plan = BacktestPlan::new(d(2017, 12), d(2022, 9), 12, models(&["RW", "BAR(1)"]));
    plan.align_evaluation = true;
    let recs = run_expanding_window(&b, &plan).unwrap();
    let eval = align_evaluation_sample(&recs, &plan);
    for model in ["RW", "BAR(1)"] {
        for h in 1..=12 {
            let targets: Vec<MonthDate> = eval
                .iter()
                .filter(|r| r.model == model && r.horizon == h)
                .map(|r| r.target)
                .collect();
            assert_eq!(targets.len(), 58);
            assert_eq!(targets.first().copied(), Some(d(2018, 12)));
            assert_eq!(targets.last().copied(), Some(d(2023, 9)));
        }
    }
}

#[test]
fn reruns_are_bit_identical_and_ordered() {
    let b = bundle(9);
    let mut plan = BacktestPlan::new(d(2020, 1), d(2020, 4), 6, models(&["BFAVAR(1)-F1-SV", "RW", "BVAR(1)"]));
    plan.density = true;
    plan.draws = 500;
    plan.sv_run = SvRun { draws: 150, burn: 50, thin: 1 };
    plan.seed = 17;
    let a = run_expanding_window(&b, &plan).unwrap();
    let again = run_expanding_window(&b, &plan).unwrap();
    assert_eq!(a, again);
    let order: Vec<(MonthDate, usize, usize)> = a
        .iter()
        .map(|r| (r.origin, plan.models.iter().position(|m| m.id() == r.model).unwrap(), r.horizon))
        .collect();
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(order, sorted);
    for r in &a {
        let q = r.quantiles.as_ref().unwrap();
        assert!(q.values.windows(2).all(|w| w[0] <= w[1]));
        if r.model == "RW" {
            assert_eq!(r.point, r.origin_level);
        }
    }
    plan.seed = 18;
    let other = run_expanding_window(&b, &plan).unwrap();
    assert_ne!(a, other);
}
