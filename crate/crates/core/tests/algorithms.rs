use bandit_lab::pac::{run_aggressive_promotion, run_king_budget, run_king_no_offset, run_r_round};
use bandit_lab::regret::{
    cumulative_regret, exploration_budget, run_ucb1, run_uniform_exploration, RegretTrace,
};
use bandit_lab::schedule::{
    assadi_type_schedule, king_schedule, r_round_schedule, AssadiSchedule, ChallengeSchedule,
    KING_OFFSET_FACTOR,
};
use bandit_lab::{ArmId, Capacity, Instance, SeedSpec, StreamOrder, StreamSession};

fn three_sigma(p: f64, reps: u64) -> f64 {
    3.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

/// Fraction of `reps` duels, `s` pulls per arm each, in which arm 0 fails
/// to beat arm 1 by more than `offset`.
fn duel_loss_rate(m0: f64, m1: f64, s: u64, offset: f64, reps: u64, seed: u64) -> f64 {
    let inst = Instance::new(vec![m0, m1]).unwrap();
    let mut session = StreamSession::begin(
        &inst,
        StreamOrder::Natural,
        Capacity::Bounded(2),
        SeedSpec::new(seed, 0),
    )
    .unwrap();
    for _ in 0..2 {
        let a = session.next_arm().unwrap();
        session.admit(a).unwrap();
    }
    let mut losses = 0u64;
    for _ in 0..reps {
        let a = session.pull(ArmId(0), s).unwrap().mean();
        let b = session.pull(ArmId(1), s).unwrap().mean();
        if a <= b + offset {
            losses += 1;
        }
    }
    losses as f64 / reps as f64
}

#[test]
fn duel_wrong_order_rate_within_hoeffding_bound() {
    // θ = 0.2, K = 8: 200 samples each, bound 2e^{-4}.
    let reps = 20_000;
    let bound = 2.0 * (-4f64).exp();
    let rate = duel_loss_rate(0.6, 0.4, 200, 0.0, reps, 1);
    assert!(rate <= bound + three_sigma(bound, reps), "{rate}");
}

#[test]
fn offset_duel_loss_within_hoeffding_bound() {
    // Gap exactly half of ε, offset 0.495ε, so the margin left is 0.005ε.
    // Hoeffding for a difference of two s-sample means gives exp(-s t²).
    let eps = 0.9;
    let t = (0.5 - KING_OFFSET_FACTOR) * eps;
    let s = 150_000u64;
    let bound = (-(s as f64) * t * t).exp();
    assert!(bound < 0.05);
    let reps = 2000;
    let rate = duel_loss_rate(0.95, 0.95 - 0.5 * eps, s, KING_OFFSET_FACTOR * eps, reps, 2);
    assert!(
        rate <= bound + three_sigma(bound, reps),
        "{rate} vs {bound}"
    );
}

#[test]
fn king_budget_pulls_are_bounded_by_grants() {
    let inst = Instance::new(
        (0..500)
            .map(|i| 0.3 + 0.4 * ((i * 7919) % 500) as f64 / 500.0)
            .collect(),
    )
    .unwrap();
    let k = king_schedule(0.1, 0.1, 117.0, 40000.0).unwrap();
    for trial in 0..5 {
        let spec = SeedSpec::new(3, trial);
        let mut s = StreamSession::begin(
            &inst,
            StreamOrder::random_for(&spec),
            Capacity::Bounded(2),
            spec,
        )
        .unwrap();
        let out = run_king_budget(&mut s, &k).unwrap();
        // Every challenge level spends s_ℓ of the king's budget on two arms.
        assert!(out.total_pulls <= 2 * 499 * k.budget());
        assert_eq!(out.peak_residency, 2);
        assert_eq!(out.total_pulls, s.ledger_sum());
    }
}

#[test]
fn king_no_offset_obvious_cases() {
    let a = assadi_type_schedule(0.1, 0.1, 117.0).unwrap();
    let inst = Instance::new(vec![1.0, 0.0]).unwrap();
    let mut s = StreamSession::begin(
        &inst,
        StreamOrder::Natural,
        Capacity::Bounded(2),
        SeedSpec::new(0, 0),
    )
    .unwrap();
    assert_eq!(
        run_king_no_offset(&mut s, &a).unwrap().returned_arm,
        ArmId(0)
    );
}

#[test]
fn aggressive_memory_stays_within_levels() {
    let n = 257;
    let inst = bandit_lab::instances::assadi_counterexample(0.1, 4, 64, n).unwrap();
    let sch = AssadiSchedule::build(
        n,
        0.1,
        0.1,
        3000.0,
        bandit_lab::schedule::DEFAULT_SAMPLE_CAP,
        &[4, 64],
    )
    .unwrap();
    let log_star = bandit_lab::schedule::log_star(n as f64).unwrap() as usize;
    for trial in 0..10 {
        let mut s = StreamSession::begin(
            &inst,
            StreamOrder::Natural,
            Capacity::Bounded(sch.t + 1),
            SeedSpec::new(4, trial),
        )
        .unwrap();
        let out = run_aggressive_promotion(&mut s, &sch).unwrap();
        assert!(out.peak_residency <= log_star + 2);
    }
}

#[test]
fn r_round_single_round_guarantee_on_easy_instance() {
    // Gap 0.3 against ε = 0.2: returned arm must be the best in nearly all runs.
    let mut means = vec![0.4; 50];
    means[17] = 0.7;
    let inst = Instance::new(means).unwrap();
    let sch = r_round_schedule(50, 1, 0.2, 0.1).unwrap();
    let wins = (0..20)
        .filter(|&t| {
            let mut s = StreamSession::begin(
                &inst,
                StreamOrder::Natural,
                Capacity::Bounded(2),
                SeedSpec::new(5, t),
            )
            .unwrap();
            run_r_round(&mut s, &sch).unwrap().returned_arm == ArmId(17)
        })
        .count();
    assert_eq!(wins, 20);
}

#[test]
fn exploration_budget_closed_form() {
    assert_eq!(exploration_budget(100, 1_000_000, 1.0), 1259);
}

#[test]
fn uniform_exploration_deterministic_rewards() {
    let mut means = vec![0.0; 10];
    means[6] = 1.0;
    let inst = Instance::new(means).unwrap();
    let horizon = 100_000;
    let e = exploration_budget(10, horizon, 1.0);
    let mut s = StreamSession::begin(
        &inst,
        StreamOrder::Natural,
        Capacity::Bounded(2),
        SeedSpec::new(0, 0),
    )
    .unwrap();
    let run = run_uniform_exploration(&mut s, horizon, 1.0).unwrap();
    assert_eq!(run.outcome.returned_arm, ArmId(6));
    assert_eq!(run.regret, (9 * e) as f64);
    assert_eq!(run.trace.horizon(), horizon);
    assert_eq!(run.outcome.peak_residency, 2);
}

#[test]
fn uniform_exploration_truncates_to_horizon() {
    let inst = Instance::new(vec![0.5; 200]).unwrap();
    let mut s = StreamSession::begin(
        &inst,
        StreamOrder::Natural,
        Capacity::Bounded(2),
        SeedSpec::new(0, 0),
    )
    .unwrap();
    let run = run_uniform_exploration(&mut s, 1000, 1.0).unwrap();
    assert_eq!(run.trace.horizon(), 1000);
    assert_eq!(run.outcome.total_pulls, 1000);
    assert_eq!(run.regret, 0.0);
    let short = Instance::new(vec![0.5; 20]).unwrap();
    let mut s = StreamSession::begin(
        &short,
        StreamOrder::Natural,
        Capacity::Bounded(2),
        SeedSpec::new(0, 0),
    )
    .unwrap();
    assert!(run_uniform_exploration(&mut s, 19, 1.0).is_err());
}

#[test]
fn ucb1_degenerate_instances_have_no_regret() {
    let one = Instance::new(vec![0.3]).unwrap();
    assert_eq!(
        run_ucb1(&one, 1000, SeedSpec::new(0, 0)).unwrap().regret,
        0.0
    );
    let flat = Instance::new(vec![0.6; 5]).unwrap();
    assert_eq!(
        run_ucb1(&flat, 1000, SeedSpec::new(0, 0)).unwrap().regret,
        0.0
    );
}

#[test]
fn ucb1_regret_is_small_on_two_arms() {
    let inst = Instance::new(vec![0.9, 0.1]).unwrap();
    let horizon = 100_000;
    let mean: f64 = (0..100)
        .map(|t| {
            run_ucb1(&inst, horizon, SeedSpec::new(8, t))
                .unwrap()
                .regret
        })
        .sum::<f64>()
        / 100.0;
    assert!(mean <= 0.05 * horizon as f64, "{mean}");
    let run = run_ucb1(&inst, horizon, SeedSpec::new(8, 0)).unwrap();
    assert_eq!(run.outcome.returned_arm, ArmId(0));
    assert_eq!(run.trace.horizon(), horizon);
}

#[test]
fn regret_matches_direct_summation() {
    let inst = Instance::new(vec![0.2, 0.9, 0.6, 0.75]).unwrap();
    let mut t = RegretTrace::new();
    t.push(ArmId(2), 10);
    assert!((cumulative_regret(&t, &inst).unwrap() - 3.0).abs() < 1e-12);
    let arms = [0usize, 1, 1, 3, 2, 0, 3, 3, 1, 2, 0];
    let mut t = RegretTrace::new();
    let mut direct = 0.0;
    for &a in &arms {
        t.push(ArmId(a), 1);
        direct += 0.9 - inst.means()[a];
    }
    assert!((cumulative_regret(&t, &inst).unwrap() - direct).abs() < 1e-12);
    let curve = t.sampled_curve(&inst, 100).unwrap();
    assert!(curve
        .windows(2)
        .all(|w| w[0].cumulative_regret <= w[1].cumulative_regret));
}
