//! End-to-end checks of the simulation pipeline against brute-force oracles.

mod common;

use rgg_core::experiments::{
    analyze, read_records_csv, read_summary_json, run_experiment, run_trial, summary_path,
    Experiment, ExperimentConfig, CSV_HEADER,
};
use rgg_core::ProcessKind;

fn config(
    region: &str,
    n: u64,
    k: usize,
    process: ProcessKind,
    trials: u64,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        region: region.into(),
        n,
        k,
        c: 0.0,
        process,
        trials,
        master_seed: seed,
        workers: 1,
        output: None,
    }
}

#[test]
fn trial_radii_match_brute_force_scans() {
    let exp = Experiment::new(config("cube", 200, 1, ProcessKind::Binomial, 20, 11)).unwrap();
    for i in 0..20 {
        let sample = exp.trial_sample(i).unwrap();
        let rec = run_trial(&exp, i).unwrap();
        assert_eq!(rec.count, 200);
        let delta = common::degree_scan(&sample.points, 2);
        let kappa = common::k_connectivity_scan(&sample.points, 2);
        assert_eq!(rec.rho_delta, Some(delta), "trial {i}");
        assert_eq!(rec.rho_kappa, Some(kappa), "trial {i}");
        assert_eq!(rec.equal, delta == kappa);
        assert_eq!(rec.below_delta, delta <= rec.r_n);
    }
}

#[test]
fn ball_trials_match_scans() {
    let exp = Experiment::new(config("ball", 150, 2, ProcessKind::Binomial, 5, 3)).unwrap();
    for i in 0..5 {
        let sample = exp.trial_sample(i).unwrap();
        assert!(sample.points.iter().all(|p| p.norm() <= 0.621));
        let rec = run_trial(&exp, i).unwrap();
        assert_eq!(rec.rho_delta, Some(common::degree_scan(&sample.points, 3)));
        assert_eq!(
            rec.rho_kappa,
            Some(common::k_connectivity_scan(&sample.points, 3))
        );
    }
}

#[test]
fn poisson_counts_vary_around_intensity() {
    let res = run_experiment(&config("cube", 400, 1, ProcessKind::Poisson, 60, 5)).unwrap();
    let counts: Vec<usize> = res.records.iter().map(|r| r.count).collect();
    let first = counts[0];
    assert!(counts.iter().any(|&c| c != first));
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    // Standard error of the mean is sqrt(400 / 60) ≈ 2.6.
    assert!((mean - 400.0).abs() < 13.0, "mean count {mean}");
}

#[test]
fn written_results_round_trip_through_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let res = run_experiment(&config("cube", 300, 1, ProcessKind::Binomial, 40, 9)).unwrap();
    let json = res.write(&csv).unwrap();
    assert_eq!(json, summary_path(&csv));

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(lines.count(), 40);

    let rows = read_records_csv(&csv).unwrap();
    let records: Vec<_> = rows.into_iter().map(|(_, r)| r).collect();
    assert_eq!(records, res.records);

    let analysis = analyze(&csv).unwrap();
    assert!(analysis.violations.is_empty());
    assert_eq!(analysis.aggregates, res.aggregates);

    // `workers` is not serialized and reads back as its default.
    let mut summary = read_summary_json(&json).unwrap();
    summary.config.workers = res.config.workers;
    assert_eq!(summary, res.summary());
}

#[test]
fn corrupted_flag_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    run_experiment(&config("cube", 200, 1, ProcessKind::Binomial, 10, 2))
        .unwrap()
        .write(&csv)
        .unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    // Flip the `equal` column of the fourth data row.
    let row = &mut lines[4];
    let last = if row.ends_with('1') { "0" } else { "1" };
    row.replace_range(row.len() - 1.., last);
    std::fs::write(&csv, lines.join("\n") + "\n").unwrap();
    let analysis = analyze(&csv).unwrap();
    assert_eq!(analysis.violations.len(), 1);
    assert_eq!(analysis.violations[0].line, 5);
    assert_eq!(analysis.violations[0].trial, 3);
}

#[test]
fn same_seed_reproduces_and_different_seed_differs() {
    let a = run_experiment(&config("cube", 250, 1, ProcessKind::Binomial, 8, 77)).unwrap();
    let b = run_experiment(&ExperimentConfig {
        workers: 3,
        ..config("cube", 250, 1, ProcessKind::Binomial, 8, 77)
    })
    .unwrap();
    let c = run_experiment(&config("cube", 250, 1, ProcessKind::Binomial, 8, 78)).unwrap();
    assert_eq!(a.records, b.records);
    assert_ne!(a.records, c.records);
}
