use bandit_lab::model::EmpiricalMean;
use bandit_lab::pac::{r_round_dry_run, run_aggressive_promotion, run_king_budget, run_r_round};
use bandit_lab::regret::{cumulative_regret, RegretTrace};
use bandit_lab::schedule::{
    assadi_type_schedule_reduced, king_schedule, max_rounds, r_round_schedule, AssadiSchedule,
    ChallengeSchedule, DEFAULT_SAMPLE_CAP,
};
use bandit_lab::stream::TraceEvent;
use bandit_lab::{
    epsilon_best, ArmId, Capacity, Instance, RunOutcome, SeedSpec, StreamOrder, StreamSession,
};
use proptest::prelude::*;

fn means(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, n)
}

#[derive(Debug, Clone)]
enum Op {
    Next,
    Admit(usize),
    Discard(usize),
    Pull(usize, u64),
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        Just(Op::Next),
        (0..n + 1).prop_map(Op::Admit),
        (0..n + 1).prop_map(Op::Discard),
        ((0..n + 1), 0u64..5).prop_map(|(a, c)| Op::Pull(a, c)),
    ]
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Shadow {
    Pending,
    Delivered,
    Resident,
    Gone,
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // A hand-kept shadow of every arm's state predicts which operations the
    // session accepts; the ledger must agree with the accepted pulls.
    #[test]
    fn session_matches_shadow_model(
        ms in means(1..8),
        cap in 1usize..4,
        seed in any::<u64>(),
        ops in prop::collection::vec(op(8), 0..80),
    ) {
        let n = ms.len();
        let inst = Instance::new(ms).unwrap();
        let order = StreamOrder::RandomPermutation(seed);
        let arrival = order.permutation(n);
        let mut s = StreamSession::begin(&inst, order, Capacity::Bounded(cap), SeedSpec::new(seed, 0)).unwrap();
        s.enable_trace();
        let mut shadow = vec![Shadow::Pending; n];
        let mut next = 0;
        let mut resident = 0;
        let mut peak = 0;
        let mut ledger = vec![0u64; n];
        for o in ops {
            match o {
                Op::Next => {
                    let got = s.next_arm();
                    let want = arrival.get(next).copied();
                    prop_assert_eq!(got, want);
                    if let Some(a) = want {
                        shadow[a.0] = Shadow::Delivered;
                        next += 1;
                    }
                }
                Op::Admit(a) => {
                    let ok = a < n && shadow[a] == Shadow::Delivered && resident < cap;
                    prop_assert_eq!(s.admit(ArmId(a)).is_ok(), ok);
                    if ok {
                        shadow[a] = Shadow::Resident;
                        resident += 1;
                        peak = peak.max(resident);
                    }
                }
                Op::Discard(a) => {
                    let ok = a < n && shadow[a] == Shadow::Resident;
                    prop_assert_eq!(s.discard(ArmId(a)).is_ok(), ok);
                    if ok {
                        shadow[a] = Shadow::Gone;
                        resident -= 1;
                    }
                }
                Op::Pull(a, c) => {
                    let ok = a < n && shadow[a] == Shadow::Resident && c > 0;
                    let res = s.pull(ArmId(a), c);
                    prop_assert_eq!(res.is_ok(), ok);
                    if let Ok(p) = res {
                        prop_assert!(p.sum <= c);
                        ledger[a] += c;
                    }
                }
            }
            prop_assert!(s.resident_count() <= cap);
        }
        prop_assert_eq!(s.ledger(), &ledger[..]);
        prop_assert_eq!(s.total_pulls(), s.ledger_sum());
        prop_assert_eq!(s.peak_residency(), peak);
        prop_assert_eq!(s.consumed(), next);
        let pulled: u64 = s.trace().unwrap().iter().map(|e| match e {
            TraceEvent::Pull { count, .. } => *count,
            _ => 0,
        }).sum();
        prop_assert_eq!(pulled, s.total_pulls());
    }

    #[test]
    fn r_round_pulls_replay_from_trace(
        n in 1usize..200,
        r_pick in 0usize..3,
        seed in any::<u64>(),
        random in any::<bool>(),
    ) {
        let r = 1 + r_pick % max_rounds(n);
        let sch = r_round_schedule(n, r, 0.5, 0.1).unwrap();
        let inst = Instance::new((0..n).map(|i| (i * 37 % 101) as f64 / 100.0).collect()).unwrap();
        let order = if random { StreamOrder::RandomPermutation(seed) } else { StreamOrder::Natural };
        let mut s = StreamSession::begin(&inst, order, Capacity::Bounded(r + 1), SeedSpec::new(seed, 1)).unwrap();
        s.enable_trace();
        let out = run_r_round(&mut s, &sch).unwrap();
        let mut replay = 0u64;
        for e in s.trace().unwrap() {
            match e {
                TraceEvent::Arrive(_) => replay += sch.samples(1),
                TraceEvent::Promote { level, .. } => replay += sch.samples(*level),
                _ => {}
            }
        }
        let dry = r_round_dry_run(&sch);
        prop_assert_eq!(out.total_pulls, replay);
        prop_assert_eq!(out.total_pulls, dry.total_pulls);
        prop_assert_eq!(&out.per_level_pulls, &dry.per_level_pulls);
        prop_assert!(out.total_pulls as f64 <= sch.pull_bound());
        prop_assert!(out.peak_residency <= r + 1);
        prop_assert_eq!(out.total_pulls, s.ledger_sum());
    }

    #[test]
    fn argmax_and_epsilon_best_are_shift_invariant(
        ms in means(1..30),
        shift in -0.5f64..0.5,
        eps in 0.01f64..0.5,
    ) {
        let lo = ms.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let c = shift.clamp(-lo, 1.0 - hi);
        let a = Instance::new(ms.clone()).unwrap();
        let b = Instance::new(ms.iter().map(|m| m + c).collect()).unwrap();
        // Shifting can merge near-ties through rounding; only compare clear cases.
        let best = a.best_arm();
        let runner_up = ms.iter().enumerate().filter(|&(i, _)| i != best.0).map(|(_, &m)| m).fold(f64::NEG_INFINITY, f64::max);
        if ms[best.0] - runner_up > 1e-9 {
            prop_assert_eq!(b.best_arm(), best);
        }
        for (i, m) in ms.iter().enumerate() {
            if (ms[best.0] - m - eps).abs() > 1e-9 {
                prop_assert_eq!(
                    epsilon_best(&a, ArmId(i), eps).unwrap(),
                    epsilon_best(&b, ArmId(i), eps).unwrap()
                );
            }
        }
    }

    #[test]
    fn regret_is_additive_over_concatenation(
        ms in means(1..10),
        xs in prop::collection::vec((0usize..10, 1u64..1000), 0..20),
        ys in prop::collection::vec((0usize..10, 1u64..1000), 0..20),
    ) {
        let inst = Instance::new(ms).unwrap();
        let n = inst.n();
        let build = |v: &[(usize, u64)]| {
            let mut t = RegretTrace::new();
            for &(a, c) in v {
                t.push(ArmId(a % n), c);
            }
            t
        };
        let (a, b) = (build(&xs), build(&ys));
        let joined = a.concat(&b);
        prop_assert_eq!(joined.horizon(), a.horizon() + b.horizon());
        let lhs = cumulative_regret(&joined, &inst).unwrap();
        let rhs = cumulative_regret(&a, &inst).unwrap() + cumulative_regret(&b, &inst).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        prop_assert!(lhs >= 0.0);
        prop_assert_eq!(joined.expand().len() as u64, joined.horizon());
    }

    #[test]
    fn schedules_grow_with_level(
        n in 2usize..1_000_000,
        eps in 0.01f64..0.99,
        delta in 0.001f64..0.49,
        c in 1.0f64..500.0,
        reduction in 1.0f64..1e5,
    ) {
        let monotone = |s: &[u64]| s.windows(2).all(|w| w[0] <= w[1]);
        for r in 1..=max_rounds(n) {
            let sch = r_round_schedule(n, r, eps, delta).unwrap();
            let s: Vec<u64> = (1..=r).map(|l| sch.samples(l)).collect();
            prop_assert!(monotone(&s), "r-round {:?}", s);
        }
        let k = king_schedule(eps, delta, c, reduction).unwrap();
        let s: Vec<u64> = (1..=12).map(|l| k.samples(l)).collect();
        prop_assert!(monotone(&s));
        prop_assert!(k.budget() >= k.samples(1));
        let a = assadi_type_schedule_reduced(eps, delta, c, reduction).unwrap();
        let s: Vec<u64> = (1..=12).map(|l| a.samples(l)).collect();
        prop_assert!(monotone(&s));
        let agg = AssadiSchedule::build(n, eps, delta, reduction, DEFAULT_SAMPLE_CAP, &[]).unwrap();
        let s: Vec<u64> = agg.levels.iter().map(|l| l.samples).collect();
        prop_assert!(monotone(&s));
    }

    #[test]
    fn empirical_mean_order_is_rational_order(
        a in 0u64..1000, p in 1u64..1000, b in 0u64..1000, q in 1u64..1000,
    ) {
        let (a, b) = (a.min(p), b.min(q));
        let x = EmpiricalMean::new(a, p);
        let y = EmpiricalMean::new(b, q);
        prop_assert_eq!(x.cmp(&y), (a * q).cmp(&(b * p)));
        prop_assert_eq!(x == y, a * q == b * p);
    }

    #[test]
    fn instance_text_round_trips(ms in means(1..50)) {
        let inst = Instance::new(ms).unwrap();
        let back: Instance = inst.to_text().parse().unwrap();
        prop_assert_eq!(back.means(), inst.means());
    }
}

fn strip(mut o: RunOutcome) -> RunOutcome {
    o.wall_time_ms = 0.0;
    o
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn runs_repeat_exactly(seed in any::<u64>(), trial in 0u64..1000) {
        let inst = Instance::new((0..64).map(|i| 0.2 + (i as f64 * 0.61) % 0.7).collect()).unwrap();
        let spec = SeedSpec::new(seed, trial);
        let order = StreamOrder::random_for(&spec);
        let sch = r_round_schedule(64, 2, 0.5, 0.1).unwrap();
        let king = king_schedule(0.1, 0.1, 117.0, 40000.0).unwrap();
        let agg = AssadiSchedule::build(64, 0.1, 0.1, 5000.0, DEFAULT_SAMPLE_CAP, &[4, 16]).unwrap();
        let mut outs = Vec::new();
        for _ in 0..2 {
            let mut a = StreamSession::begin(&inst, order, Capacity::Bounded(3), spec).unwrap();
            let mut b = StreamSession::begin(&inst, order, Capacity::Bounded(2), spec).unwrap();
            let mut c = StreamSession::begin(&inst, order, Capacity::Bounded(agg.t + 1), spec).unwrap();
            outs.push((
                strip(run_r_round(&mut a, &sch).unwrap()),
                strip(run_king_budget(&mut b, &king).unwrap()),
                strip(run_aggressive_promotion(&mut c, &agg).unwrap()),
                a.ledger().to_vec(),
            ));
        }
        prop_assert_eq!(&outs[0], &outs[1]);
    }
}
