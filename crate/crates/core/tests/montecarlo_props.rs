use proptest::prelude::*;
use tdram_core::io::write_trials;
use tdram_core::montecarlo::{Stats, METRICS};
use tdram_core::*;

fn all_specs() -> Vec<VariationSpec> {
    Parameter::ALL
        .iter()
        .map(|&p| VariationSpec::default_for(p))
        .collect()
}

fn base() -> TrialParams {
    TrialParams::nominal(&CellParams::default(), 25.0)
}

fn small_run(parallel: bool, specs: &[VariationSpec], n: usize, seed: u64) -> McReport {
    let cfg = McConfig {
        parallel,
        ..McConfig::default()
    };
    run_mc(&cfg, specs, n, seed).unwrap()
}

#[test]
fn samples_are_truncated_at_three_sigma() {
    let specs = all_specs();
    for p in sample_trials(base(), &specs, 2000, 3) {
        for s in &specs {
            let (lo, hi) = s.bounds();
            let v = p.get(s.parameter);
            assert!(v >= lo && v <= hi, "{} = {v}", s.parameter);
        }
    }
}

#[test]
fn sample_mean_within_standard_error() {
    let spec = VariationSpec::default_for(Parameter::SupplyVoltage);
    let n = 10_000;
    let draws = sample_trials(base(), &[spec], n, 11);
    let mean = draws.iter().map(|p| p.vdd).sum::<f64>() / n as f64;
    let sigma = spec.three_sigma / 3.0;
    assert!((mean - spec.nominal).abs() < 4.0 * sigma / (n as f64).sqrt());
}

#[test]
fn zero_spread_collapses_to_nominal() {
    let specs: Vec<_> = all_specs()
        .into_iter()
        .map(|s| VariationSpec::new(s.parameter, s.nominal, 0.0))
        .collect();
    let r = small_run(true, &specs, 2, 5);
    assert_eq!(r.failures, 0);
    for t in &r.trials {
        assert_eq!(t.metrics(), Some(&r.nominal));
    }
}

#[test]
fn parallel_and_sequential_runs_are_identical() {
    let specs = all_specs();
    let a = small_run(true, &specs, 6, 42);
    let b = small_run(false, &specs, 6, 42);
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let c = small_run(true, &specs, 6, 43);
    assert_ne!(a.trials[0].params, c.trials[0].params);
}

#[test]
fn summary_is_recomputable() {
    let r = small_run(true, &all_specs(), 6, 7);
    assert_eq!(r.trials.len(), 6);
    for m in METRICS {
        let col = r.column(m);
        if col.is_empty() {
            continue;
        }
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let stored = &r.summary[m];
        assert!((stored.mean - mean).abs() <= 1e-12 * mean.abs());
        if col.len() > 1 {
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((stored.stddev - var.sqrt()).abs() <= 1e-12 * var.sqrt().max(1e-300));
        }
        let nominal = r.nominal.values()[METRICS.iter().position(|x| *x == m).unwrap()];
        let worst = col.iter().map(|v| (v - nominal).abs()).fold(0.0, f64::max);
        assert_eq!(r.worst_case_deviation[m], worst);
    }
}

#[test]
fn zero_trials_is_an_error() {
    assert!(matches!(
        run_mc(&McConfig::default(), &all_specs(), 0, 1),
        Err(SolveError::Config(_))
    ));
}

#[test]
fn trials_csv_has_one_row_per_trial() {
    let r = small_run(true, &all_specs(), 3, 9);
    let mut buf = Vec::new();
    write_trials(&r, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "trial");
    assert!(METRICS.iter().all(|m| header.contains(m)));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.split(',').count() == header.len()));
}

fn fake_report(stddevs: &[f64]) -> McReport {
    let mut r = small_run(true, &[], 1, 0);
    for (m, s) in METRICS.iter().zip(stddevs.iter().cycle()) {
        r.summary.insert(
            m.to_string(),
            Stats {
                mean: 0.0,
                stddev: *s,
                min: 0.0,
                max: 0.0,
            },
        );
    }
    r
}

#[test]
fn sensitivity_ties_keep_declaration_order() {
    let r = fake_report(&[1.0]);
    let reports: Vec<_> = Parameter::ALL.iter().map(|&p| (p, &r)).collect();
    for order in sensitivity_rank(&reports).values() {
        assert_eq!(order, &Parameter::ALL.to_vec());
    }
    let zero = fake_report(&[0.0]);
    let reports: Vec<_> = Parameter::ALL.iter().map(|&p| (p, &zero)).collect();
    for order in sensitivity_rank(&reports).values() {
        assert_eq!(order, &Parameter::ALL.to_vec());
    }
}

#[test]
fn sensitivity_orders_by_spread() {
    let small = fake_report(&[1.0]);
    let large = fake_report(&[5.0]);
    let reports = [
        (Parameter::Temperature, &small),
        (Parameter::SupplyVoltage, &large),
    ];
    for order in sensitivity_rank(&reports).values() {
        assert_eq!(order[0], Parameter::SupplyVoltage);
    }
}

proptest! {
    #[test]
    fn trial_draws_depend_only_on_seed_and_index(seed in any::<u64>(), n in 1usize..40, k in 0usize..40) {
        prop_assume!(k < n);
        let specs = all_specs();
        let all = sample_trials(base(), &specs, n, seed);
        let longer = sample_trials(base(), &specs, n + 5, seed);
        prop_assert_eq!(all[k], longer[k]);
        for s in &specs {
            let (lo, hi) = s.bounds();
            let v = all[k].get(s.parameter);
            prop_assert!(v >= lo && v <= hi);
        }
    }
}
