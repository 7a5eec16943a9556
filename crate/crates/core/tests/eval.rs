mod common;

use ssltsc::eval::{
    run_loso, sweep_label_fraction, sweep_train_subjects, Executor, Method, Report,
};
use ssltsc::eval::harness::{select_labeled_subjects, training_subset};

use common::{quick_config, small_cohort};

#[test]
fn loso_covers_every_subject_once() {
    let ds = small_cohort(4, 1);
    let r = run_loso(&ds, Method::Cudle, &quick_config(1), None, Executor::new(1)).unwrap();
    let tested: Vec<&str> = r.folds.iter().map(|f| f.test_subject.as_str()).collect();
    assert_eq!(tested, ["S01", "S02", "S03", "S04"]);
    for f in &r.folds {
        assert_eq!(f.train_subjects.len(), 3);
        assert!(!f.train_subjects.contains(&f.test_subject));
        assert_eq!(f.labeled_subjects, f.train_subjects);
        assert_eq!(f.label_fraction, 1.0);
        assert_eq!(f.metrics.counts.total(), 15);
    }
    let mean_acc = r.folds.iter().map(|f| f.metrics.accuracy).sum::<f64>() / 4.0;
    assert!((r.mean.accuracy - mean_acc).abs() < 1e-15);
}

#[test]
fn sweep_endpoints_reproduce_full_label_loso() {
    let ds = small_cohort(4, 2);
    let cfg = quick_config(2);
    let exec = Executor::new(1);
    let labels = sweep_label_fraction(&ds, &cfg, &[1, 3], 1, exec).unwrap();
    let subjects = sweep_train_subjects(&ds, &cfg, &[1, 3], exec).unwrap();
    for method in Method::BOTH {
        let full = run_loso(&ds, method, &cfg, None, exec).unwrap();
        let row = labels.iter().find(|r| r.method == method && r.key == 3).unwrap();
        assert_eq!(row.folds, full.folds, "{method:?} label sweep");
        assert_eq!(row.mean, full.mean);
        let row = subjects.iter().find(|r| r.method == method && r.key == 3).unwrap();
        assert_eq!(row.folds, full.folds, "{method:?} subject sweep");

        let one = run_loso(&ds, method, &cfg, Some(1), exec).unwrap();
        let row = labels.iter().find(|r| r.method == method && r.key == 1).unwrap();
        assert_eq!(row.folds, one.folds);
        assert!(row.mean_label_fraction < 0.5);
    }
}

#[test]
fn parallel_execution_matches_serial() {
    let ds = small_cohort(4, 3);
    let cfg = quick_config(3);
    let serial = sweep_label_fraction(&ds, &cfg, &[1, 2, 3], 2, Executor::new(1)).unwrap();
    let parallel = sweep_label_fraction(&ds, &cfg, &[1, 2, 3], 2, Executor::new(3)).unwrap();
    assert_eq!(serial, parallel);

    let mut a = Report::new("sweep-labels", serde_json::json!({}));
    a.add_sweep(&serial);
    let mut b = Report::new("sweep-labels", serde_json::json!({}));
    b.add_sweep(&parallel);
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    assert_eq!(a.to_csv(), b.to_csv());
}

#[test]
fn report_json_round_trips_real_results() {
    let ds = small_cohort(3, 4);
    let r = run_loso(&ds, Method::Supervised, &quick_config(4), None, Executor::new(1)).unwrap();
    let mut report = Report::new("eval-loso", serde_json::json!({"seed": 4}));
    report.add_loso("supervised", 2, &r);
    let text = report.to_json().unwrap();
    let back = Report::from_json(&text).unwrap();
    assert_eq!(back, report);
    assert_eq!(back.to_json().unwrap(), text);
    assert_eq!(report.folds.len(), 3);
    assert_eq!(report.aggregates.len(), 1);
}

#[test]
fn subject_selection_is_seeded_and_nested() {
    let others: Vec<String> = (1..=19).map(|i| format!("S{i:02}")).collect();
    let a = select_labeled_subjects(&others, 5, 7, "S20", 0).unwrap();
    assert_eq!(a, select_labeled_subjects(&others, 5, 7, "S20", 0).unwrap());
    assert_eq!(a.len(), 5);
    assert_ne!(a, select_labeled_subjects(&others, 5, 7, "S20", 1).unwrap());
    let mut prev: Vec<String> = Vec::new();
    for n in 1..=19 {
        let cur = training_subset(&others, n, 7, "S20");
        assert_eq!(cur.len(), n);
        assert!(prev.iter().all(|s| cur.contains(s)));
        prev = cur;
    }
}

#[test]
fn invalid_sweep_counts_error() {
    let ds = small_cohort(3, 5);
    let cfg = quick_config(5);
    assert!(sweep_label_fraction(&ds, &cfg, &[0], 1, Executor::new(1)).is_err());
    assert!(sweep_label_fraction(&ds, &cfg, &[3], 1, Executor::new(1)).is_err());
    assert!(sweep_train_subjects(&ds, &cfg, &[3], Executor::new(1)).is_err());
}
