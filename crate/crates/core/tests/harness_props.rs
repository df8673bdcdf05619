use std::f64::consts::PI;

use proptest::prelude::*;

use liespec::harness::{
    check_li, check_scaling, emit_report, evaluate, li_constant, sweep_berger, sweep_grid, Family, SweepConfig,
    CSV_HEADER,
};
use liespec::{berger_metric, milnor_metric, DiameterParams, MetricParams, MetricRecord, ReportFormat};

fn small() -> DiameterParams {
    DiameterParams { n_directions: 500, n_probes: 4000, ..Default::default() }
}

fn small_sweep(steps: usize) -> SweepConfig {
    SweepConfig { steps, diameter: small(), ..Default::default() }
}

#[test]
fn single_round_record_has_product_three_pi_squared() {
    let report = sweep_grid(&[1.0], &small_sweep(2)).unwrap();
    assert_eq!(report.records.len(), 1);
    let want = 3.0 * PI * PI;
    assert!((report.records[0].product / want - 1.0).abs() <= 0.04);
    assert_eq!(report.sup_product, report.inf_product);
    assert!(report.all_passed());
}

#[test]
fn scaled_round_metric_passes_li_and_scaling() {
    for (params, c) in [
        (MetricParams::Milnor { a1: 3.0, a2: 3.0, a3: 3.0 }, 9.0),
        (MetricParams::Milnor { a1: 0.5, a2: 0.5, a3: 0.5 }, 0.25),
    ] {
        let rec = evaluate(params, &small()).unwrap();
        assert!(check_li(&rec));
        assert!((rec.lambda1 * c / 3.0 - 1.0).abs() < 1e-12);
    }
    for (g, c) in [(berger_metric(1.0, 4.0).unwrap(), 0.5), (milnor_metric(1.0, 1.0, 1.0).unwrap(), 1.0)] {
        let s = check_scaling(&g, c, &small()).unwrap();
        assert!(s.passed, "{s:?}");
    }
}

#[test]
fn product_is_permutation_invariant() {
    let a = [0.5, 1.2, 2.0];
    let base = evaluate(MetricParams::Milnor { a1: a[0], a2: a[1], a3: a[2] }, &small()).unwrap();
    for p in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
        let rec = evaluate(MetricParams::Milnor { a1: a[p[0]], a2: a[p[1]], a3: a[p[2]] }, &small()).unwrap();
        assert!((rec.product / base.product - 1.0).abs() <= 0.02, "{p:?}");
    }
}

#[test]
fn sweep_is_consistent_and_stable_under_refinement() {
    let coarse = sweep_berger(&small_sweep(6)).unwrap();
    let products: Vec<f64> = coarse.records.iter().map(|r| r.product).collect();
    let max = products.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = products.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!((coarse.sup_product, coarse.inf_product), (max, min));
    assert!(coarse.records.windows(2).all(|w| w[0].params.beta() < w[1].params.beta()));
    assert!(coarse.records.iter().all(|r| r.checks["li"] && r.checks["submersion"]));
    assert!(coarse.all_passed(), "{:?}", coarse.outcomes);

    let mut fine = small_sweep(6);
    fine.diameter.n_directions *= 2;
    let fine = sweep_berger(&fine).unwrap();
    assert!((fine.sup_product / coarse.sup_product - 1.0).abs() <= 0.05);
}

#[test]
fn general_milnor_family_skips_the_submersion_check() {
    let config = SweepConfig { family: Family::Milnor { a2: 1.0, a3: 1.5 }, ..small_sweep(2) };
    let report = sweep_berger(&config).unwrap();
    assert!(report.records.iter().all(|r| !r.checks.contains_key("submersion") && r.checks["li"]));
    let csv = emit_report(&report, ReportFormat::Csv);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true,")));
}

#[test]
fn sweep_rejects_degenerate_grids() {
    for (lo, hi, steps) in [(1.0, 1.0, 2), (1.0, 2.0, 1), (0.0, 2.0, 5), (2.0, 1.0, 5)] {
        let config = SweepConfig { beta_min: lo, beta_max: hi, ..small_sweep(steps) };
        assert!(sweep_berger(&config).is_err(), "{lo} {hi} {steps}");
    }
    assert!(sweep_grid(&[1.0, 1.0], &small_sweep(2)).is_err());
}

fn record() -> impl Strategy<Value = MetricRecord> {
    (0.01f64..100.0, 0.1f64..20.0, 0.1f64..10.0)
        .prop_map(|(beta, l, d)| MetricRecord::new(MetricParams::Berger { alpha: 1.0, beta }, l, d))
}

proptest! {
    #[test]
    fn li_check_is_a_threshold_on_the_product(rec in record()) {
        prop_assert_eq!(rec.product, rec.lambda1 * rec.diameter * rec.diameter);
        prop_assert_eq!(check_li(&rec), rec.product >= 0.98 * li_constant());
    }

    #[test]
    fn csv_has_one_row_per_record(recs in prop::collection::vec(record(), 0..6)) {
        let report = liespec::ConjectureReport {
            sup_product: recs.iter().map(|r| r.product).fold(f64::NEG_INFINITY, f64::max),
            inf_product: recs.iter().map(|r| r.product).fold(f64::INFINITY, f64::min),
            records: recs.clone(),
            plateau: Vec::new(),
            outcomes: Default::default(),
        };
        let csv = emit_report(&report, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        prop_assert_eq!(lines[0], CSV_HEADER);
        prop_assert_eq!(lines.len(), recs.len() + 1);
        let json = emit_report(&report, ReportFormat::Json);
        let back: Vec<MetricRecord> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, recs);
    }
}
