use super::*;
use crate::dynamics::Interval;
use crate::estimation::radius_a;
use crate::reward_models::{LaplaceAgentParams, LogisticGlmParams};
use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn benchmark_arms() -> Vec<ArmStructure<f64>> {
    vec![
        ArmStructure {
            dynamics: DynamicsParams::scalar(0.6, -1.0, 0.5, Interval::unit()).unwrap(),
            family: RewardFamily::LogisticGlm(
                LogisticGlmParams::new(0.4, 0.6, Interval::unit()).unwrap(),
            ),
        },
        ArmStructure {
            dynamics: DynamicsParams::scalar(0.7, -1.2, 0.5, Interval::unit()).unwrap(),
            family: RewardFamily::LogisticGlm(
                LogisticGlmParams::new(0.7, 0.3, Interval::unit()).unwrap(),
            ),
        },
    ]
}

fn coarse() -> SearchConfig {
    SearchConfig {
        theta_points: 21,
        x_points: 21,
        ..Default::default()
    }
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

fn all_algorithms() -> Vec<AlgorithmConfig> {
    [
        "rogue_ucb",
        "tuned_rogue_ucb",
        "ucb1_tuned",
        "d_ucb",
        "sw_ucb",
        "exp3s",
        "random",
    ]
    .iter()
    .map(|l| AlgorithmConfig::from_label(l).unwrap())
    .collect()
}

#[test]
fn init_examples() {
    assert_eq!(select_init(1, 2), Some(0));
    assert_eq!(select_init(2, 2), Some(1));
    assert_eq!(select_init(3, 2), None);
}

#[test]
fn argmax_breaks_ties_low() {
    assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    assert_eq!(argmax(&[2.0, 2.0]), 0);
    assert_eq!(argmax(&[f64::INFINITY, f64::INFINITY]), 0);
}

#[test]
fn theoretical_rogue_after_init_reaches_global_max() {
    let arms = benchmark_arms();
    let mut p = RogueUcb::new(
        &arms,
        ConfidenceConfig::default(),
        coarse(),
        RogueVariant::Theoretical,
    )
    .unwrap();
    let mut r = rng();
    assert_eq!(p.select(&mut r).unwrap(), 0);
    p.update(0, 1.0).unwrap();
    assert_eq!(p.select(&mut r).unwrap(), 1);
    p.update(1, 0.0).unwrap();
    let a = p.select(&mut r).unwrap();
    let indicators = [vec![true, false], vec![false, true]];
    for (arm, acts) in arms.iter().zip(&indicators) {
        let mut best = f64::NEG_INFINITY;
        for th in Interval::unit().grid(201) {
            for x0 in Interval::unit().grid(201) {
                let xs = arm.dynamics.rollout_scalar(x0, acts);
                best = best.max(arm.family.mean(th, xs[2]));
            }
        }
        let idx = p.indices()[indicators.iter().position(|v| v == acts).unwrap()];
        assert!(idx >= best - 1e-9 && idx <= best + 1e-3, "{idx} vs {best}");
    }
    assert_eq!(a, 0);
}

#[test]
fn rogue_replay_is_deterministic() {
    for alg in [AlgorithmConfig::RogueUcb, AlgorithmConfig::TunedRogueUcb] {
        let mut picks = Vec::new();
        for _ in 0..2 {
            let mut p = alg
                .build(
                    &benchmark_arms(),
                    &ConfidenceConfig::default(),
                    &coarse(),
                    30,
                )
                .unwrap();
            let mut r = rng();
            let mut env = ChaCha8Rng::seed_from_u64(3);
            let mut seq = Vec::new();
            for _ in 0..30 {
                let a = p.select(&mut r).unwrap();
                p.update(a, if env.gen_bool(0.5) { 1.0 } else { 0.0 })
                    .unwrap();
                seq.push(a);
            }
            picks.push(seq);
        }
        assert_eq!(picks[0], picks[1]);
    }
}

#[test]
fn rogue_indices_dominate_fit_means() {
    let arms = benchmark_arms();
    let mut p = RogueUcb::new(
        &arms,
        ConfidenceConfig::default(),
        coarse(),
        RogueVariant::Tuned,
    )
    .unwrap();
    let mut r = rng();
    let mut states = [0.1, 0.3];
    let truths = [0.5, 0.7];
    for _ in 0..60 {
        let a = p.select(&mut r).unwrap();
        if p.fits().iter().all(Option::is_some) {
            for (arm, fit) in p.fits().iter().enumerate() {
                let fit = fit.unwrap().estimate;
                let g_fit = arms[arm]
                    .family
                    .mean(fit.theta, p.tracker(arm).current_state(fit.x0));
                assert!(p.indices()[arm] >= g_fit);
            }
        }
        let reward = arms[a].family.sample(truths[a], states[a], &mut r);
        for (k, s) in states.iter_mut().enumerate() {
            *s = arms[k].dynamics.step_scalar(*s, k == a);
        }
        p.update(a, reward).unwrap();
    }
}

#[test]
fn tuned_radius_is_below_theoretical_on_benchmark() {
    let arms = benchmark_arms();
    let cfg = ConfidenceConfig::default();
    for arm in &arms {
        let mut tracker =
            crate::estimation::ArmTracker::new(arm.dynamics.clone(), arm.family, coarse()).unwrap();
        tracker.observe(1.0).unwrap();
        let fit = tracker.fit().unwrap();
        let eta = tracker.prepare(&fit.estimate, None).eta;
        for n in 1..50usize {
            for t in 3..200usize {
                let lt = (t as f64).ln();
                let tuned = (eta / 4.0 * lt / n as f64).sqrt();
                let theory = radius_a(t, &cfg).unwrap() * (4.0 * lt / n as f64).sqrt();
                assert!(tuned < theory);
            }
        }
    }
}

#[test]
fn ucb1_tuned_examples() {
    let mut p = Ucb1Tuned::<f64>::new(2);
    let mut r = rng();
    assert_eq!(p.select(&mut r).unwrap(), 0);
    p.update(0, 1.0).unwrap();
    assert_eq!(p.select(&mut r).unwrap(), 1);
    p.update(1, 0.0).unwrap();
    assert_eq!(p.select(&mut r).unwrap(), 0);

    let mut q = Ucb1Tuned::<f64>::new(2);
    for a in [0, 1, 0, 0] {
        q.update(a, 0.5).unwrap();
    }
    assert_eq!(q.select(&mut r).unwrap(), 1);
    // mean 0.5, zero variance: V = sqrt(2 ln 4 / 3) > 1/4
    let idx = q.indices();
    assert_abs_diff_eq!(
        idx[0],
        0.5 + (4f64.ln() / 3.0 * 0.25).sqrt(),
        epsilon = 1e-14
    );
}

#[test]
fn ducb_gamma_one_is_undiscounted() {
    let mut p = DiscountedUcb::<f64>::new(2, 1.0, 0.6).unwrap();
    let trace = [(0, 1.0), (1, 0.0), (0, 0.5), (1, 1.0), (1, 0.25)];
    for &(a, r) in &trace {
        p.update(a, r).unwrap();
    }
    assert_eq!(p.counts(), &[2.0, 3.0]);
    assert_eq!(p.sums(), &[1.5, 1.25]);
}

#[test]
fn ducb_hand_trace() {
    let gamma = 0.9;
    let mut p = DiscountedUcb::<f64>::new(2, gamma, 0.6).unwrap();
    let trace = [(0, 1.0), (1, 0.0), (0, 0.5), (1, 1.0), (0, 0.25)];
    for &(a, r) in &trace {
        p.update(a, r).unwrap();
    }
    let t = trace.len();
    for arm in 0..2 {
        let mut n = 0.0;
        let mut s = 0.0;
        for (i, &(a, r)) in trace.iter().enumerate() {
            if a == arm {
                let w = gamma_pow(gamma, t - 1 - i);
                n += w;
                s += w * r;
            }
        }
        assert_abs_diff_eq!(p.counts()[arm], n, epsilon = 1e-14);
        assert_abs_diff_eq!(p.sums()[arm], s, epsilon = 1e-14);
    }
    let total = p.counts()[0] + p.counts()[1];
    let idx = p.indices();
    let expect1 = p.sums()[1] / p.counts()[1] + 2.0 * (0.6 * total.ln() / p.counts()[1]).sqrt();
    assert_abs_diff_eq!(idx[1], expect1, epsilon = 1e-14);
    assert!(DiscountedUcb::<f64>::new(2, 1.5, 0.6).is_err());
    assert!(DiscountedUcb::<f64>::new(2, 0.0, 0.6).is_err());
}

fn gamma_pow(g: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, _| acc * g)
}

#[test]
fn ducb_single_arm() {
    let mut p = DiscountedUcb::<f64>::new(1, 0.9, 0.6).unwrap();
    let mut r = rng();
    for _ in 0..5 {
        let a = p.select(&mut r).unwrap();
        assert_eq!(a, 0);
        p.update(a, 0.3).unwrap();
    }
}

#[test]
fn swucb_full_memory_is_plain_ucb() {
    let mut p = SlidingWindowUcb::<f64>::new(2, 100, 0.6).unwrap();
    let trace = [(0, 1.0), (1, 0.0), (0, 0.5), (1, 1.0), (1, 0.25)];
    for &(a, r) in &trace {
        p.update(a, r).unwrap();
    }
    let ln5 = 5f64.ln();
    let idx = p.indices();
    assert_abs_diff_eq!(idx[0], 0.75 + (0.6 * ln5 / 2.0).sqrt(), epsilon = 1e-14);
    assert_abs_diff_eq!(
        idx[1],
        1.25 / 3.0 + (0.6 * ln5 / 3.0).sqrt(),
        epsilon = 1e-14
    );
}

#[test]
fn swucb_window_of_two_trace() {
    let mut p = SlidingWindowUcb::<f64>::new(2, 2, 0.6).unwrap();
    let mut r = rng();
    p.update(0, 1.0).unwrap();
    p.update(1, 0.0).unwrap();
    // window {(0,1), (1,0)}: arm 0 mean 1, arm 1 mean 0, equal padding
    assert_eq!(p.select(&mut r).unwrap(), 0);
    p.update(0, 0.2).unwrap();
    // window {(1,0), (0,0.2)}
    let idx = p.indices();
    assert_abs_diff_eq!(idx[0], 0.2 + (0.6 * 2f64.ln()).sqrt(), epsilon = 1e-14);
    assert_abs_diff_eq!(idx[1], (0.6 * 2f64.ln()).sqrt(), epsilon = 1e-14);
    p.update(0, 0.4).unwrap();
    // arm 1 evicted: infinite index
    assert_eq!(p.indices()[1], f64::INFINITY);
    assert_eq!(p.select(&mut r).unwrap(), 1);
    p.update(1, 1.0).unwrap();
    let idx = p.indices();
    assert_abs_diff_eq!(idx[0], 0.4 + (0.6 * 2f64.ln()).sqrt(), epsilon = 1e-14);
    assert_abs_diff_eq!(idx[1], 1.0 + (0.6 * 2f64.ln()).sqrt(), epsilon = 1e-14);
    assert!(SlidingWindowUcb::<f64>::new(2, 0, 0.6).is_err());
}

#[test]
fn exp3s_distribution_properties() {
    let p = Exp3S::<f64>::new(3, 0.2, 0.01).unwrap();
    for q in p.probabilities() {
        assert_abs_diff_eq!(q, 1.0 / 3.0, epsilon = 1e-15);
    }
    let mut p = Exp3S::<f64>::new(3, 0.2, 0.01).unwrap();
    let mut r = rng();
    for _ in 0..500 {
        let a = p.select(&mut r).unwrap();
        let reward = if a == 2 { 1.0 } else { r.gen::<f64>() * 0.2 };
        p.update(a, reward).unwrap();
        let probs = p.probabilities();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(probs.iter().all(|&q| q >= 0.2 / 3.0 - 1e-15));
    }
    assert!(p.probabilities()[2] > 0.5);

    let mut u = Exp3S::<f64>::new(2, 1.0, 0.0).unwrap();
    let a = u.select(&mut r).unwrap();
    u.update(a, 1.0).unwrap();
    for q in u.probabilities() {
        assert_abs_diff_eq!(q, 0.5, epsilon = 1e-15);
    }
}

#[test]
fn exp3s_replay_is_deterministic() {
    let run = || {
        let mut p = Exp3S::<f64>::new(2, 0.3, 0.01).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(99);
        (0..10)
            .map(|i| {
                let a = p.select(&mut r).unwrap();
                p.update(a, (i % 3) as f64 / 2.0).unwrap();
                a
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn random_policy_is_uniform() {
    let mut p = RandomPolicy::new(4);
    let mut r = rng();
    let mut counts = [0usize; 4];
    for _ in 0..10_000 {
        let a = Policy::<f64>::select(&mut p, &mut r).unwrap();
        counts[a] += 1;
    }
    for c in counts {
        assert!((c as f64 / 10_000.0 - 0.25).abs() <= 0.02);
    }
    let mut one = RandomPolicy::new(1);
    assert_eq!(Policy::<f64>::select(&mut one, &mut r).unwrap(), 0);
}

#[test]
fn defaults_resolve() {
    let t = 5000;
    match AlgorithmConfig::from_label("d_ucb").unwrap().resolve(2, t) {
        AlgorithmConfig::DUcb { gamma, xi } => {
            assert_abs_diff_eq!(
                gamma.unwrap(),
                1.0 - 1.0 / (4.0 * 5000f64.sqrt()),
                epsilon = 1e-15
            );
            assert_eq!(xi, Some(0.6));
        }
        _ => unreachable!(),
    }
    match AlgorithmConfig::from_label("sw_ucb").unwrap().resolve(2, t) {
        AlgorithmConfig::SwUcb { tau, .. } => assert_eq!(tau, Some(826)),
        _ => unreachable!(),
    }
    match AlgorithmConfig::from_label("exp3s").unwrap().resolve(2, t) {
        AlgorithmConfig::Exp3s { gamma, alpha } => {
            let g = (2.0 * 10000f64.ln() / ((std::f64::consts::E - 1.0) * 5000.0)).sqrt();
            assert_abs_diff_eq!(gamma.unwrap(), g, epsilon = 1e-15);
            assert_eq!(alpha, Some(1.0 / 5000.0));
        }
        _ => unreachable!(),
    }
    assert!(AlgorithmConfig::from_label("thompson").is_err());
}

#[test]
fn config_round_trips_through_json() {
    for alg in all_algorithms() {
        let resolved = alg.resolve(2, 100);
        let text = serde_json::to_string(&resolved).unwrap();
        let back: AlgorithmConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, resolved);
    }
}

#[test]
fn agent_arms_build() {
    let arms = vec![
        ArmStructure {
            dynamics: DynamicsParams::scalar(0.8, -0.3, 0.1, Interval::unit()).unwrap(),
            family: RewardFamily::LaplaceAgent(LaplaceAgentParams::default()),
        };
        3
    ];
    let mut p = AlgorithmConfig::TunedRogueUcb
        .build(&arms, &ConfidenceConfig::default(), &coarse(), 10)
        .unwrap();
    let mut r = rng();
    for _ in 0..10 {
        let a = p.select(&mut r).unwrap();
        assert!(a < 3);
        p.update(a, 0.5).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn selectors_return_valid_arms_and_initialize(seed in 0u64..10_000, k in 1usize..4) {
        let arms: Vec<ArmStructure<f64>> = (0..k).map(|i| benchmark_arms()[i % 2].clone()).collect();
        for alg in all_algorithms() {
            let mut p = alg.build(&arms, &ConfidenceConfig::default(), &SearchConfig { theta_points: 6, x_points: 6, ..Default::default() }, 12).unwrap();
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            for step in 0..12 {
                let a = p.select(&mut r).unwrap();
                prop_assert!(a < k);
                let needs_init = !matches!(alg, AlgorithmConfig::Exp3s { .. } | AlgorithmConfig::Random);
                if needs_init && step < k {
                    prop_assert_eq!(a, step);
                }
                p.update(a, r.gen::<f64>()).unwrap();
            }
        }
    }

    #[test]
    fn argmax_shift_invariance(v in prop::collection::vec(-5.0f64..5.0, 1..8), c in -3.0f64..3.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let a = argmax(&v);
        let b = argmax(&shifted);
        prop_assert!(a == b || (v[a] - v[b]).abs() < 1e-12);
    }
}
