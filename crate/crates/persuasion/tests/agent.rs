//! Agent-layer tests: meta-MDP construction under general, advice, and
//! threat strategies; the value-iteration solver and its tie-breaking; the
//! myopic and no-signaling baselines; and the augmented advice-myopic reward.
// Indexed loops over states, parameters, and actions mirror the tabular
// structure of the model, as in the library itself.
#![allow(clippy::needless_range_loop)]

use persuasion::{
    am_rewards, build_meta_mdp, build_threat_meta_mdp, gen_random, is_ic, load_instance,
    myopic_response, nosig_value, obedient_policy, reveal_all, solve_mdp, threat_strategy,
    uninformative, ActionAdvice, MetaMDP, PersuasionMDP, RandomSpec, Signal, State, TieBreak,
};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fig1() -> PersuasionMDP {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fig1.json");
    load_instance(path).expect("bundled fixture loads")
}

fn fig1_matched_advice(mdp: &PersuasionMDP) -> ActionAdvice {
    let pi = vec![
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        vec![vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0]],
        Vec::new(),
    ];
    ActionAdvice::new(mdp, pi).expect("matched advice is well-formed")
}

fn battery_spec(seed: u64) -> RandomSpec {
    RandomSpec {
        n_states: 4 + (seed % 2) as usize,
        n_actions: 3,
        n_thetas: 2 + (seed % 2) as usize,
        n_terminals: 1,
        beta: -1.0 + 2.0 * ((seed % 5) as f64) / 4.0,
        gamma: 0.8,
        gamma_tilde: 0.8,
        seed,
    }
}

/// Sup-norm Bellman residual of a value function on a meta-MDP, treating
/// action-less meta-states as absorbing with zero reward.
fn bellman_residual(meta: &MetaMDP, values: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..meta.len() {
        let backup = if meta.actions[m].is_empty() {
            0.0
        } else {
            (0..meta.actions[m].len())
                .map(|k| {
                    let future: f64 = meta.transition[m][k]
                        .iter()
                        .map(|&(mt, p)| p * values[mt])
                        .sum();
                    meta.agent_reward[m][k] + meta.discount * future
                })
                .fold(f64::NEG_INFINITY, f64::max)
        };
        worst = worst.max((values[m] - backup).abs());
    }
    worst
}

#[test]
fn uninformative_meta_mdp_is_prior_averaged_mdp() {
    for seed in 0..5 {
        let mdp = gen_random(&battery_spec(seed)).unwrap();
        let meta = build_meta_mdp(&mdp, &uninformative(&mdp));
        assert_eq!(meta.len(), mdp.n_states());
        for m in 0..meta.len() {
            let (s, signal) = meta.meta_states[m];
            if mdp.is_terminal(s) {
                assert!(meta.actions[m].is_empty());
                continue;
            }
            assert_eq!(signal, Signal::Opaque(0));
            for (k, &a) in meta.actions[m].iter().enumerate() {
                let expected: f64 = (0..mdp.n_thetas())
                    .map(|th| mdp.prior[s][th] * mdp.agent_reward[s][th][a])
                    .sum();
                assert!((meta.agent_reward[m][k] - expected).abs() < 1e-15);
                for &(mt, p) in &meta.transition[m][k] {
                    let (t, _) = meta.meta_states[mt];
                    assert!(
                        (p - mdp.transition[s][a][t]).abs() < 1e-15,
                        "⊥ meta transition differs from P at seed {seed}"
                    );
                }
                let row_sum: f64 = meta.transition[m][k].iter().map(|&(_, p)| p).sum();
                assert!((row_sum - 1.0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn full_reveal_meta_rewards_match_fig1_table() {
    let mdp = fig1();
    let meta = build_meta_mdp(&mdp, &reveal_all(&mdp));
    // Meta-state (s0, g_{θ_a}): the posterior is a point mass on θ_a, so
    // action a earns 1 and action b earns −1.
    let m = meta.meta_index(0, Signal::Opaque(0)).unwrap();
    let ka = meta.actions[m].iter().position(|&a| a == 0).unwrap();
    let kb = meta.actions[m].iter().position(|&a| a == 1).unwrap();
    assert!((meta.agent_reward[m][ka] - 1.0).abs() < 1e-15);
    assert!((meta.agent_reward[m][kb] + 1.0).abs() < 1e-15);
}

#[test]
fn single_theta_meta_rewards_equal_raw_rewards() {
    let spec = RandomSpec {
        n_thetas: 1,
        ..battery_spec(2)
    };
    let mdp = gen_random(&spec).unwrap();
    let meta = build_meta_mdp(&mdp, &reveal_all(&mdp));
    for m in 0..meta.len() {
        let (s, _) = meta.meta_states[m];
        for (k, &a) in meta.actions[m].iter().enumerate() {
            assert_eq!(meta.agent_reward[m][k], mdp.agent_reward[s][0][a]);
        }
    }
}

#[test]
fn threat_meta_punish_states_are_closed() {
    // From any punish meta-state (s, g_0), every action only reaches other
    // punish meta-states.
    for seed in 0..5 {
        let mdp = gen_random(&battery_spec(seed)).unwrap();
        let (threat, _) = threat_strategy(&mdp).unwrap();
        let meta = build_threat_meta_mdp(&mdp, &threat);
        for m in 0..meta.len() {
            let (_, signal) = meta.meta_states[m];
            if signal != Signal::Null {
                continue;
            }
            for row in &meta.transition[m] {
                for &(mt, _) in row {
                    let (_, next_signal) = meta.meta_states[mt];
                    assert_eq!(
                        next_signal,
                        Signal::Null,
                        "punish meta-state leaked back to a signal at seed {seed}"
                    );
                }
            }
        }
    }
}

#[test]
fn threat_meta_obedient_rows_match_advice_meta() {
    // Taking the advised action at (s, g_a) moves exactly as in the plain
    // advice meta-MDP at that meta-state.
    for seed in 0..5 {
        let mdp = gen_random(&battery_spec(seed)).unwrap();
        let (threat, _) = threat_strategy(&mdp).unwrap();
        let advice_meta = build_meta_mdp(&mdp, &threat.base);
        let threat_meta = build_threat_meta_mdp(&mdp, &threat);
        for m in 0..threat_meta.len() {
            let (s, signal) = threat_meta.meta_states[m];
            let Signal::Advice(a) = signal else { continue };
            let k = threat_meta.actions[m].iter().position(|&x| x == a).unwrap();
            let ma = advice_meta.meta_index(s, signal).unwrap();
            let ka = advice_meta.actions[ma].iter().position(|&x| x == a).unwrap();
            let mut got: Vec<(usize, Signal, f64)> = threat_meta.transition[m][k]
                .iter()
                .map(|&(mt, p)| {
                    let (t, sg) = threat_meta.meta_states[mt];
                    (t, sg, p)
                })
                .collect();
            let mut want: Vec<(usize, Signal, f64)> = advice_meta.transition[ma][ka]
                .iter()
                .map(|&(mt, p)| {
                    let (t, sg) = advice_meta.meta_states[mt];
                    (t, sg, p)
                })
                .collect();
            got.sort_by_key(|x| (x.0, x.1));
            want.sort_by_key(|x| (x.0, x.1));
            assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                assert_eq!((g.0, g.1), (w.0, w.1));
                assert!((g.2 - w.2).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn threat_meta_deviation_routes_to_punishment() {
    // Figure 1: deviating to a at (s1, g_b) lands in (s0, g_0) with
    // probability 1.
    let mdp = fig1();
    let (threat, _) = threat_strategy(&mdp).unwrap();
    let meta = build_threat_meta_mdp(&mdp, &threat);
    let m = meta
        .meta_index(1, Signal::Advice(1))
        .expect("the threat advises b at s1");
    let k = meta.actions[m].iter().position(|&a| a == 0).unwrap();
    assert_eq!(meta.transition[m][k].len(), 1);
    let (mt, p) = meta.transition[m][k][0];
    assert_eq!(meta.meta_states[mt], (0, Signal::Null));
    assert!((p - 1.0).abs() < 1e-15);
}

#[test]
fn solve_mdp_geometric_series() {
    let mdp = PersuasionMDP {
        states: vec![State {
            name: "s0".into(),
            terminal: false,
        }],
        actions: vec!["a".into()],
        thetas: vec!["theta0".into()],
        available: vec![vec![0]],
        transition: vec![vec![vec![1.0]]],
        prior: vec![vec![1.0]],
        principal_reward: vec![vec![vec![0.0]]],
        agent_reward: vec![vec![vec![0.7]]],
        gamma: 0.9,
        gamma_tilde: 0.9,
        init_dist: vec![1.0],
    }
    .canonicalize()
    .unwrap();
    let meta = build_meta_mdp(&mdp, &uninformative(&mdp));
    let (values, policy) = solve_mdp(&meta, TieBreak::LowestIndex).unwrap();
    assert!(
        (values[0] - 0.7 / (1.0 - 0.9)).abs() <= 1e-8,
        "geometric series value, got {}",
        values[0]
    );
    assert_eq!(policy.action(0, Signal::Opaque(0)), Some(0));
}

#[test]
fn nosig_value_fig1() {
    let mdp = fig1();
    let (v_bar, policy) = nosig_value(&mdp).unwrap();
    assert!((v_bar[0] - 0.1).abs() <= 1e-9, "V̄(s0) = {}", v_bar[0]);
    assert!((v_bar[1] - 0.1).abs() <= 1e-9, "V̄(s1) = {}", v_bar[1]);
    assert!(v_bar[2].abs() <= 1e-9);
    // c dominates at s0, b dominates at s1.
    assert_eq!(policy.action(0, Signal::Opaque(0)), Some(2));
    assert_eq!(policy.action(1, Signal::Opaque(0)), Some(1));
}

#[test]
fn fig1_far_sighted_agent_loops_under_full_reveal() {
    let mdp = fig1();
    let meta = build_meta_mdp(&mdp, &reveal_all(&mdp));
    let (values, policy) = solve_mdp(&meta, TieBreak::LowestIndex).unwrap();
    // The loop is worth 4/3 at s0 and 2/3 at s1 — better than the 0.1 exit.
    for g in 0..2 {
        let m0 = meta.meta_index(0, Signal::Opaque(g)).unwrap();
        let m1 = meta.meta_index(1, Signal::Opaque(g)).unwrap();
        assert!((values[m0] - 4.0 / 3.0).abs() <= 1e-8);
        assert!((values[m1] - 2.0 / 3.0).abs() <= 1e-8);
        // At s1 the agent goes back to s0 rather than exiting to s2.
        assert_eq!(policy.action(1, Signal::Opaque(g)), Some(0));
    }
}

#[test]
fn nosig_value_zero_rewards_and_zero_discount() {
    let spec = battery_spec(1);
    let mut mdp = gen_random(&spec).unwrap();
    for s in 0..mdp.n_states() {
        for th in 0..mdp.n_thetas() {
            for a in 0..mdp.n_actions() {
                mdp.agent_reward[s][th][a] = 0.0;
            }
        }
    }
    let (v_bar, _) = nosig_value(&mdp).unwrap();
    assert!(v_bar.iter().all(|&v| v == 0.0));

    let mut mdp = gen_random(&spec).unwrap();
    mdp.gamma_tilde = 0.0;
    let (v_bar, _) = nosig_value(&mdp).unwrap();
    for s in 0..mdp.n_states() {
        let best = mdp
            .available(s)
            .iter()
            .map(|&a| {
                (0..mdp.n_thetas())
                    .map(|th| mdp.prior[s][th] * mdp.agent_reward[s][th][a])
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let best = if best.is_finite() { best } else { 0.0 };
        assert!(
            (v_bar[s] - best).abs() <= 1e-12,
            "γ̃ = 0 value at state {s}: {} vs one-step best {best}",
            v_bar[s]
        );
    }
}

#[test]
fn am_rewards_fig1_and_degenerate_cases() {
    let mdp = fig1();
    let plus = am_rewards(&mdp).unwrap();
    // R̃⁺(s1,·,a) = 0 + 0.5·V̄(s0) = 0.05; R̃⁺(s1,·,b) = 0.1 + 0.5·0 = 0.1.
    for th in 0..2 {
        assert!((plus[1][th][0] - 0.05).abs() <= 1e-9);
        assert!((plus[1][th][1] - 0.1).abs() <= 1e-9);
    }

    // γ̃ = 0 degenerates to the raw reward.
    let mut mdp0 = fig1();
    mdp0.gamma_tilde = 0.0;
    let plus0 = am_rewards(&mdp0).unwrap();
    assert_eq!(plus0, mdp0.agent_reward);

    // Actions with only terminal successors keep their raw reward: here
    // (s1, b) leads to the terminal s2 only, and V̄(s2) = 0.
    assert_eq!(plus[1][0][1], mdp.agent_reward[1][0][1]);
}

#[test]
fn myopic_response_fig1() {
    let mdp = fig1();
    let advice = fig1_matched_advice(&mdp);
    let response = myopic_response(&mdp, &advice);
    // θ-independent rewards at s1: picks b (0.1 > 0).
    assert_eq!(response.action(1, Signal::Advice(1)), Some(1));
    // IC advice → obedient everywhere.
    assert_eq!(response, obedient_policy(&mdp, &advice));

    // An uninformative advice (always recommend a) leaves the prior belief,
    // under which c is the myopic best at s0.
    let pi = vec![
        vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        vec![vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        Vec::new(),
    ];
    let always_a = ActionAdvice::new(&mdp, pi).unwrap();
    let response = myopic_response(&mdp, &always_a);
    assert_eq!(response.action(0, Signal::Advice(0)), Some(2));
    assert_eq!(response.action(1, Signal::Advice(0)), Some(1));
}

#[test]
fn myopic_response_obedient_iff_ic() {
    // Across 50 seeded instances the myopic response is obedient exactly when
    // the advice passes the IC check. Even seeds use the advice that
    // recommends, per θ, the reward-maximizing action — incentive compatible
    // by construction, since every summand of the IC inequality is then
    // non-negative. Odd seeds use dense random advices, which leak nothing per
    // signal beyond a reweighted prior and almost surely tempt a deviation.
    let mut disobedient = 0;
    for seed in 0..50 {
        let mdp = gen_random(&battery_spec(seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7000));
        let pi: Vec<Vec<Vec<f64>>> = (0..mdp.n_states())
            .map(|s| {
                if mdp.is_terminal(s) {
                    Vec::new()
                } else {
                    (0..mdp.n_thetas())
                        .map(|th| {
                            let mut row = vec![0.0; mdp.n_actions()];
                            if seed % 2 == 0 {
                                let best = mdp
                                    .available(s)
                                    .iter()
                                    .copied()
                                    .max_by(|&x, &y| {
                                        mdp.agent_reward[s][th][x]
                                            .total_cmp(&mdp.agent_reward[s][th][y])
                                    })
                                    .unwrap();
                                row[best] = 1.0;
                            } else {
                                for &a in mdp.available(s) {
                                    row[a] = rng.random::<f64>();
                                }
                                let sum: f64 = row.iter().sum();
                                for p in &mut row {
                                    *p /= sum;
                                }
                            }
                            row
                        })
                        .collect()
                }
            })
            .collect();
        let advice = ActionAdvice::new(&mdp, pi).unwrap();
        let (ic, violation) = is_ic(&mdp, &advice, &mdp.agent_reward);
        let obedient = myopic_response(&mdp, &advice) == obedient_policy(&mdp, &advice);
        assert_eq!(
            ic, obedient,
            "IC flag and obedience disagree at seed {seed} (violation {violation})"
        );
        if seed % 2 == 0 {
            assert!(ic, "per-θ argmax advice must be IC (seed {seed})");
        }
        disobedient += usize::from(!obedient);
    }
    // The random half must exercise the violating side of the equivalence.
    assert!(disobedient > 0);
}

#[test]
fn tie_break_prefers_advised_action() {
    // Two actions with identical rewards everywhere: the advised-first rule
    // follows the recommendation, the lowest-index rule ignores it.
    let mdp = PersuasionMDP {
        states: vec![State {
            name: "s0".into(),
            terminal: false,
        }],
        actions: vec!["a".into(), "b".into()],
        thetas: vec!["theta0".into()],
        available: vec![vec![0, 1]],
        transition: vec![vec![vec![1.0], vec![1.0]]],
        prior: vec![vec![1.0]],
        principal_reward: vec![vec![vec![0.0, 1.0]]],
        agent_reward: vec![vec![vec![0.5, 0.5]]],
        gamma: 0.5,
        gamma_tilde: 0.5,
        init_dist: vec![1.0],
    }
    .canonicalize()
    .unwrap();
    let advice = ActionAdvice::new(&mdp, vec![vec![vec![0.0, 1.0]]]).unwrap();
    let meta = build_meta_mdp(&mdp, &advice);
    let (_, advised_first) = solve_mdp(&meta, TieBreak::AdvisedFirst).unwrap();
    let (_, lowest) = solve_mdp(&meta, TieBreak::LowestIndex).unwrap();
    assert_eq!(advised_first.action(0, Signal::Advice(1)), Some(1));
    assert_eq!(lowest.action(0, Signal::Advice(1)), Some(0));
}

#[test]
fn bellman_residual_bounded_on_battery() {
    for seed in 0..15 {
        let mdp = gen_random(&battery_spec(seed)).unwrap();
        for strategy_kind in 0..3 {
            let meta = match strategy_kind {
                0 => build_meta_mdp(&mdp, &uninformative(&mdp)),
                1 => build_meta_mdp(&mdp, &reveal_all(&mdp)),
                _ => {
                    let (threat, _) = threat_strategy(&mdp).unwrap();
                    build_threat_meta_mdp(&mdp, &threat)
                }
            };
            let (values, _) = solve_mdp(&meta, TieBreak::AdvisedFirst).unwrap();
            let residual = bellman_residual(&meta, &values);
            assert!(
                residual <= 1e-8,
                "Bellman residual {residual:.3e} at seed {seed}, strategy {strategy_kind}"
            );
        }
    }
}

#[test]
fn theorem3_fs_response_obeys_threat_advice() {
    // The far-sighted best response to the threat strategy takes the advised
    // action at every meta-state reachable under it.
    for seed in 0..15 {
        let mdp = gen_random(&battery_spec(seed)).unwrap();
        let (threat, _) = threat_strategy(&mdp).unwrap();
        let meta = build_threat_meta_mdp(&mdp, &threat);
        let (_, policy) = solve_mdp(&meta, TieBreak::AdvisedFirst).unwrap();

        let mut seen = vec![false; meta.len()];
        let mut queue: Vec<usize> = (0..meta.len())
            .filter(|&m| meta.init_dist[m] > 0.0)
            .collect();
        for &m in &queue {
            seen[m] = true;
        }
        while let Some(m) = queue.pop() {
            let (s, signal) = meta.meta_states[m];
            if meta.actions[m].is_empty() {
                continue;
            }
            let chosen = policy.action(s, signal).expect("policy covers reachable metas");
            if let Some(advised) = meta.advised[m] {
                assert_eq!(
                    chosen, advised,
                    "FS best response deviates at seed {seed}, state {s}, signal {signal:?}"
                );
            }
            let k = meta.actions[m].iter().position(|&a| a == chosen).unwrap();
            for &(mt, p) in &meta.transition[m][k] {
                if p > 0.0 && !seen[mt] {
                    seen[mt] = true;
                    queue.push(mt);
                }
            }
        }
    }
}

#[test]
fn lemma1_threat_values_dominate_nosig() {
    // Under the threat meta-MDP, the optimal value at every punish meta-state
    // (s, g_0) equals the no-signaling value V̄(s), and the signal-averaged
    // value at each state dominates it.
    for seed in 0..15 {
        let mdp = gen_random(&battery_spec(seed)).unwrap();
        let (threat, _) = threat_strategy(&mdp).unwrap();
        let meta = build_threat_meta_mdp(&mdp, &threat);
        let (values, _) = solve_mdp(&meta, TieBreak::AdvisedFirst).unwrap();
        let (v_bar, _) = nosig_value(&mdp).unwrap();
        for s in 0..mdp.n_states() {
            if mdp.is_terminal(s) {
                continue;
            }
            let punish = meta.meta_index(s, Signal::Null).unwrap();
            assert!(
                (values[punish] - v_bar[s]).abs() <= 1e-8,
                "punish value differs from V̄ at seed {seed}, state {s}: {} vs {}",
                values[punish],
                v_bar[s]
            );
            let mut mixed = 0.0;
            let mut mass = 0.0;
            for &a in mdp.available(s) {
                let marginal = threat.base.signal_marginal(&mdp, s, a);
                if marginal <= 0.0 {
                    continue;
                }
                let m = meta.meta_index(s, Signal::Advice(a)).unwrap();
                mixed += marginal * values[m];
                mass += marginal;
            }
            assert!((mass - 1.0).abs() <= 1e-9);
            assert!(
                mixed >= v_bar[s] - 1e-8,
                "signal-averaged value {mixed} below V̄ {} at seed {seed}, state {s}",
                v_bar[s]
            );
        }
    }
}
