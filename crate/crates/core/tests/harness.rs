use std::fs;
use std::sync::Arc;

use bandit_lab::harness::{
    monte_carlo, read_trials_csv, write_aggregate_csv, write_trials_csv, Algorithm, ExperimentPlan,
    GenSpec, InstanceSource, OrderKind, TrialSummary,
};
use bandit_lab::instances::DistSpec;
use bandit_lab::Instance;

fn plan(alg: Algorithm, trials: u64, workers: usize) -> ExperimentPlan {
    let mut p = ExperimentPlan::new(
        alg,
        InstanceSource::Generator(GenSpec::Dist {
            dist: DistSpec::Uniform,
            n: 300,
        }),
    );
    p.trials = trials;
    p.master_seed = 77;
    p.order = OrderKind::Random;
    p.workers = Some(workers);
    p.params.epsilon = 0.2;
    p.params.reduction = 40000.0;
    p.params.horizon = 20_000;
    p
}

fn strip(mut s: TrialSummary) -> TrialSummary {
    for r in &mut s.rows {
        r.wall_ms = 0.0;
    }
    s
}

#[test]
fn single_deterministic_trial_succeeds() {
    let mut means = vec![0.0; 16];
    means[9] = 1.0;
    let mut p = ExperimentPlan::new(
        Algorithm::RRound,
        InstanceSource::Fixed(Arc::new(Instance::new(means).unwrap())),
    );
    p.params.epsilon = 0.5;
    let s = monte_carlo(&p).unwrap();
    assert_eq!((s.trials, s.success_count), (1, 1));
    assert_eq!(s.rows[0].returned_arm.0, 9);
}

#[test]
fn worker_count_does_not_change_results() {
    for alg in Algorithm::ALL {
        let one = strip(monte_carlo(&plan(alg, 12, 1)).unwrap());
        let many = strip(monte_carlo(&plan(alg, 12, 4)).unwrap());
        let again = strip(monte_carlo(&plan(alg, 12, 3)).unwrap());
        assert_eq!(one, many, "{alg}");
        assert_eq!(one, again, "{alg}");
        assert_eq!(one.gap_histogram.total(), one.trials);
        assert!(one.success_count <= one.trials);
    }
}

#[test]
fn csv_recount_matches_summary() {
    let dir = tempfile::tempdir().unwrap();
    let s = monte_carlo(&plan(Algorithm::KingBudget, 30, 2)).unwrap();
    let path = dir.path().join("t.csv");
    write_trials_csv(&path, &s.rows, false).unwrap();
    let back = read_trials_csv(&path).unwrap();
    assert_eq!(back.len(), 30);
    let recount = back.iter().filter(|r| r.success()).count() as u64;
    assert_eq!(recount, s.success_count);
    let rebuilt = TrialSummary::from_rows(back, Vec::new());
    assert_eq!(rebuilt.success_rate(), s.success_rate());
    assert_eq!(rebuilt.gap_histogram, s.gap_histogram);

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let rerun = monte_carlo(&plan(Algorithm::KingBudget, 30, 1)).unwrap();
    write_trials_csv(&a, &rerun.rows, false).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&path).unwrap());
    write_aggregate_csv(&a, &s).unwrap();
    write_aggregate_csv(&b, &rerun).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invalid_plans_are_rejected() {
    let mut p = plan(Algorithm::RRound, 0, 1);
    assert!(monte_carlo(&p).is_err());
    p.trials = 1;
    p.params.r = 99;
    assert!(monte_carlo(&p).is_err());
}
