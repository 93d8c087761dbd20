//! Instance-layer tests: seeded generator determinism, the β reward blend,
//! road-navigation structure and absorption, the independent-set gadget
//! payoff identity, graph parsing, and instance file round trips.
// Indexed loops over states, parameters, and actions mirror the tabular
// structure of the model, as in the library itself.
#![allow(clippy::needless_range_loop)]

use persuasion::{
    build_meta_mdp, exact_eval, full_control, gen_indset_gadget, gen_random, gen_roadnav,
    gen_roadnav_with_layout, indset_strategy, load_instance, nosig, parse_graph, save_instance,
    solve_mdp, Graph, InstanceError, ModelError, PersuasionMDP, RandomSpec, RoadNavSpec, TieBreak,
};

fn small_random(seed: u64) -> RandomSpec {
    RandomSpec {
        n_states: 5,
        n_actions: 3,
        n_thetas: 2,
        n_terminals: 1,
        beta: 0.5,
        gamma: 0.8,
        gamma_tilde: 0.8,
        seed,
    }
}

fn roadnav_spec(seed: u64) -> RoadNavSpec {
    RoadNavSpec {
        n_nodes: 8,
        n_edges: 12,
        n_thetas: 3,
        beta: 0.5,
        gamma: 0.8,
        gamma_tilde: 0.8,
        uniform_congestion: false,
        seed,
    }
}

/// Exact principal payoff of the independent-set strategy against a
/// far-sighted best responder.
fn indset_payoff(gadget: &PersuasionMDP, set: &[usize]) -> f64 {
    let advice = indset_strategy(gadget, set).unwrap();
    let meta = build_meta_mdp(gadget, &advice);
    let (_, response) = solve_mdp(&meta, TieBreak::AdvisedFirst).unwrap();
    exact_eval(gadget, &advice, &response)
        .unwrap()
        .principal_payoff
}

#[test]
fn generators_are_deterministic() {
    let a = gen_random(&small_random(7)).unwrap();
    let b = gen_random(&small_random(7)).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );

    let (ra, la) = gen_roadnav_with_layout(&roadnav_spec(7)).unwrap();
    let (rb, lb) = gen_roadnav_with_layout(&roadnav_spec(7)).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(la, lb);
    assert_eq!(
        serde_json::to_string(&ra).unwrap(),
        serde_json::to_string(&rb).unwrap()
    );

    // Different seeds give different instances.
    let c = gen_random(&small_random(8)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn beta_blends_agent_rewards() {
    let base = RandomSpec {
        beta: 0.0,
        ..small_random(3)
    };
    let untouched = gen_random(&base).unwrap();

    // β = 1: the agent reward IS the principal reward.
    let aligned = gen_random(&RandomSpec { beta: 1.0, ..base }).unwrap();
    assert_eq!(aligned.agent_reward, aligned.principal_reward);

    // β = −1: exactly opposed.
    let opposed = gen_random(&RandomSpec { beta: -1.0, ..base }).unwrap();
    for s in 0..opposed.n_states() {
        for th in 0..opposed.n_thetas() {
            for a in 0..opposed.n_actions() {
                assert_eq!(
                    opposed.agent_reward[s][th][a],
                    -opposed.principal_reward[s][th][a]
                );
            }
        }
    }

    // Intermediate β is the elementwise blend of the β = 0 draw with the
    // principal reward — the same seed yields the same underlying draws.
    for beta in [-0.5, 0.25, 0.75] {
        let blended = gen_random(&RandomSpec { beta, ..base }).unwrap();
        assert_eq!(blended.principal_reward, untouched.principal_reward);
        assert_eq!(blended.transition, untouched.transition);
        for s in 0..blended.n_states() {
            for th in 0..blended.n_thetas() {
                for a in 0..blended.n_actions() {
                    let expected = (1.0 - beta.abs()) * untouched.agent_reward[s][th][a]
                        + beta * untouched.principal_reward[s][th][a];
                    assert_eq!(blended.agent_reward[s][th][a], expected);
                }
            }
        }
    }
}

#[test]
fn random_spec_validation() {
    assert!(matches!(
        gen_random(&RandomSpec {
            n_states: 0,
            ..small_random(0)
        }),
        Err(InstanceError::InvalidSpec(_))
    ));
    assert!(matches!(
        gen_random(&RandomSpec {
            n_terminals: 5,
            ..small_random(0)
        }),
        Err(InstanceError::InvalidSpec(_))
    ));
    assert!(matches!(
        gen_random(&RandomSpec {
            beta: 1.5,
            ..small_random(0)
        }),
        Err(InstanceError::InvalidSpec(_))
    ));
    assert!(matches!(
        gen_random(&RandomSpec {
            gamma: 1.0,
            ..small_random(0)
        }),
        Err(InstanceError::InvalidSpec(_))
    ));
}

#[test]
fn roadnav_single_edge_instance() {
    let spec = RoadNavSpec {
        n_nodes: 2,
        n_edges: 1,
        ..roadnav_spec(0)
    };
    let (mdp, layout) = gen_roadnav_with_layout(&spec).unwrap();
    assert_eq!(mdp.n_states(), 2);
    assert_eq!(layout.edges, vec![(0, 1)]);
    assert_eq!(layout.patched, 0);
    assert_eq!(mdp.available(0).len(), 1);
    assert!(mdp.is_terminal(1));
    // One path: with or without signaling, the payoff is the same.
    let fc = full_control(&mdp).unwrap().principal_payoff;
    let base = nosig(&mdp, true).unwrap().principal_payoff;
    assert!((fc - base).abs() <= 1e-9);
}

#[test]
fn roadnav_spec_validation() {
    assert!(matches!(
        gen_roadnav(&RoadNavSpec {
            n_nodes: 1,
            n_edges: 0,
            ..roadnav_spec(0)
        }),
        Err(InstanceError::InvalidSpec(_))
    ));
    // Fewer edges than a spanning tree needs.
    assert!(matches!(
        gen_roadnav(&RoadNavSpec {
            n_nodes: 8,
            n_edges: 6,
            ..roadnav_spec(0)
        }),
        Err(InstanceError::InvalidSpec(_))
    ));
    // More edges than the complete graph holds.
    assert!(matches!(
        gen_roadnav(&RoadNavSpec {
            n_nodes: 8,
            n_edges: 29,
            ..roadnav_spec(0)
        }),
        Err(InstanceError::InvalidSpec(_))
    ));
}

#[test]
fn roadnav_is_a_forward_dag_reaching_the_destination() {
    for seed in 0..10 {
        let (mdp, layout) = gen_roadnav_with_layout(&roadnav_spec(seed)).unwrap();
        let n = mdp.n_states();
        let dest = n - 1;
        assert!(mdp.is_terminal(dest));
        assert_eq!(layout.edges.len(), 12 + layout.patched);

        for (i, &(u, v)) in layout.edges.iter().enumerate() {
            assert!(u < v, "edge ({u}, {v}) must point forward");
            if i > 0 {
                assert!(layout.edges[i - 1] < (u, v), "edge list must be sorted");
            }
        }

        for s in 0..n {
            if s == dest {
                assert!(mdp.available(s).is_empty());
                continue;
            }
            assert!(!mdp.is_terminal(s), "only the destination is terminal");
            assert!(!mdp.available(s).is_empty(), "dead end at node {s}");
            for &a in mdp.available(s) {
                for (t, &p) in mdp.transition[s][a].iter().enumerate() {
                    if p > 0.0 {
                        assert!(t > s, "backward edge {s} -> {t} under action {a}");
                    }
                }
            }
        }

        // Absorption analysis: under a worst-case policy, the probability of
        // not having reached the destination vanishes after n steps.
        let mut alive = vec![1.0_f64; n];
        alive[dest] = 0.0;
        for _ in 0..n {
            let mut next = vec![0.0_f64; n];
            for s in 0..n {
                if s == dest {
                    continue;
                }
                next[s] = mdp
                    .available(s)
                    .iter()
                    .map(|&a| {
                        mdp.transition[s][a]
                            .iter()
                            .enumerate()
                            .map(|(t, &p)| p * alive[t])
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max);
            }
            alive = next;
        }
        assert!(alive.iter().all(|&p| p == 0.0), "non-absorbing at seed {seed}");
    }
}

#[test]
fn uniform_congestion_ranks_all_edges_identically() {
    let spec = RoadNavSpec {
        n_thetas: 4,
        beta: 0.0,
        uniform_congestion: true,
        ..roadnav_spec(2)
    };
    let mdp = gen_roadnav(&spec).unwrap();
    for s in 0..mdp.n_states() {
        for &a in mdp.available(s) {
            for th in 1..mdp.n_thetas() {
                assert!(
                    mdp.agent_reward[s][th - 1][a] >= mdp.agent_reward[s][th][a],
                    "congestion order broken at state {s}, action {a}, theta {th}"
                );
            }
        }
    }

    // Without the flag the per-edge congestion orders disagree somewhere.
    let plain = gen_roadnav(&RoadNavSpec {
        uniform_congestion: false,
        ..spec
    })
    .unwrap();
    let mut monotone = true;
    for s in 0..plain.n_states() {
        for &a in plain.available(s) {
            for th in 1..plain.n_thetas() {
                if plain.agent_reward[s][th - 1][a] < plain.agent_reward[s][th][a] {
                    monotone = false;
                }
            }
        }
    }
    assert!(!monotone, "unsorted congestion draws came out sorted everywhere");
}

#[test]
fn gadget_shape_and_rewards() {
    let k3 = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let (gadget, map) = gen_indset_gadget(&k3, 0.4, 0.8).unwrap();
    let n = 3;
    assert_eq!(gadget.n_states(), 3 * n + 1);
    assert_eq!(map.s, vec![0, 1, 2]);
    assert_eq!(map.s_prime, vec![3, 4, 5]);
    assert_eq!(map.s_double_prime, vec![6, 7, 8]);
    assert_eq!(map.sink, 3 * n);
    assert!(gadget.is_terminal(map.sink));
    assert_eq!(gadget.n_thetas(), 2);

    // Initial distribution: uniform over the entry states s_v.
    for v in 0..n {
        assert!((gadget.init_dist[map.s[v]] - 1.0 / n as f64).abs() <= 1e-15);
    }
    assert_eq!(gadget.init_dist[map.sink], 0.0);

    for v in 0..n {
        // Entry reward γ̃ on the single available action at s_v.
        let a = gadget.available(map.s[v])[0];
        for th in 0..2 {
            assert_eq!(gadget.agent_reward[map.s[v]][th][a], 0.4);
            assert_eq!(gadget.principal_reward[map.s[v]][th][a], 0.0);
        }
        // Matching game at s′_v: ρ(a,θa)=1, ρ(a,θb)=−1, ρ(b,θa)=−1, ρ(b,θb)=1,
        // uniform prior.
        let sp = map.s_prime[v];
        assert_eq!(gadget.prior[sp], vec![0.5, 0.5]);
        assert_eq!(gadget.agent_reward[sp][0][0], 1.0);
        assert_eq!(gadget.agent_reward[sp][1][0], -1.0);
        assert_eq!(gadget.agent_reward[sp][0][1], -1.0);
        assert_eq!(gadget.agent_reward[sp][1][1], 1.0);
        // Exit at s″_v: agent γ̃², principal 1, on action b; hop actions to
        // the neighbors' matching states.
        let sd = map.s_double_prime[v];
        for th in 0..2 {
            assert_eq!(gadget.agent_reward[sd][th][1], 0.4 * 0.4);
            assert_eq!(gadget.principal_reward[sd][th][1], 1.0);
        }
        let hops: Vec<usize> = gadget
            .available(sd)
            .iter()
            .copied()
            .filter(|&k| k != 1)
            .collect();
        assert_eq!(hops.len(), 2, "K3 vertex has two neighbors");
        for &k in &hops {
            let target = gadget.transition[sd][k]
                .iter()
                .position(|&p| p == 1.0)
                .unwrap();
            assert!(map.s_prime.contains(&target));
            assert_ne!(target, map.s_prime[v]);
        }
    }
}

#[test]
fn gadget_payoff_identity() {
    let gamma: f64 = 0.8;
    let gamma_tilde = 0.4;

    let k3 = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let (gadget, _) = gen_indset_gadget(&k3, gamma_tilde, gamma).unwrap();
    let expected = gamma.powi(2) / 3.0;
    assert!((indset_payoff(&gadget, &[0]) - expected).abs() <= 1e-9);
    assert!((indset_payoff(&gadget, &[1]) - expected).abs() <= 1e-9);
    assert!(indset_payoff(&gadget, &[]).abs() <= 1e-9);

    let p3 = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
    let (gadget, _) = gen_indset_gadget(&p3, gamma_tilde, gamma).unwrap();
    assert!((indset_payoff(&gadget, &[0, 2]) - 2.0 * gamma.powi(2) / 3.0).abs() <= 1e-9);
    assert!((indset_payoff(&gadget, &[1]) - gamma.powi(2) / 3.0).abs() <= 1e-9);

    let edgeless = Graph::new(3, []).unwrap();
    let (gadget, _) = gen_indset_gadget(&edgeless, gamma_tilde, gamma).unwrap();
    // No hop actions at all; revealing at every vertex collects γ² in total.
    for v in 0..3 {
        assert_eq!(gadget.available(6 + v), &[1][..]);
    }
    assert!((indset_payoff(&gadget, &[0, 1, 2]) - gamma.powi(2)).abs() <= 1e-9);
}

#[test]
fn indset_strategy_rejects_bad_sets() {
    let k3 = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    let (gadget, _) = gen_indset_gadget(&k3, 0.4, 0.8).unwrap();
    match indset_strategy(&gadget, &[0, 1]) {
        Err(InstanceError::NotIndependent { u, v }) => {
            let mut pair = [u, v];
            pair.sort_unstable();
            assert_eq!(pair, [0, 1]);
        }
        other => panic!("expected NotIndependent, got {other:?}"),
    }
    assert!(matches!(
        indset_strategy(&gadget, &[5]),
        Err(InstanceError::InvalidSpec(_))
    ));
    assert!(matches!(
        indset_strategy(&gadget, &[0, 0]),
        Err(InstanceError::InvalidSpec(_))
    ));
    // An arbitrary non-gadget instance is rejected outright.
    let random = gen_random(&small_random(0)).unwrap();
    assert!(matches!(
        indset_strategy(&random, &[0]),
        Err(InstanceError::InvalidSpec(_))
    ));
}

#[test]
fn gadget_discount_bounds() {
    let k3 = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
    assert!(matches!(
        gen_indset_gadget(&k3, 0.5, 0.8),
        Err(InstanceError::DiscountOutOfRange(_))
    ));
    assert!(matches!(
        gen_indset_gadget(&k3, 0.0, 0.8),
        Err(InstanceError::DiscountOutOfRange(_))
    ));
    assert!(matches!(
        gen_indset_gadget(&k3, 0.4, 1.0),
        Err(InstanceError::InvalidSpec(_))
    ));
    assert!(gen_indset_gadget(&k3, 0.49, 0.8).is_ok());
}

#[test]
fn graph_parsing() {
    let g = parse_graph("3 2\n0 1\n1 2\n").unwrap();
    assert_eq!(g.n, 3);
    assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
    assert!(g.has_edge(1, 0) && g.has_edge(1, 2) && !g.has_edge(0, 2));
    assert_eq!(g.neighbors(1), vec![0, 2]);

    // Comments and blank lines are ignored.
    let g = parse_graph("# a triangle, minus one edge\n\n3 1\n# the edge\n0 2\n").unwrap();
    assert_eq!(g.edges, vec![(0, 2)]);
}

#[test]
fn graph_parse_errors_carry_line_numbers() {
    let line_of = |text: &str| match parse_graph(text) {
        Err(InstanceError::ParseError { line, .. }) => line,
        other => panic!("expected ParseError for {text:?}, got {other:?}"),
    };
    assert_eq!(line_of(""), 1);
    assert_eq!(line_of("3"), 1); // missing edge count
    assert_eq!(line_of("3 1 9\n0 1\n"), 1); // over-long header
    assert_eq!(line_of("x 1\n0 1\n"), 1); // bad vertex count
    assert_eq!(line_of("3 1\n0 x\n"), 2); // bad endpoint
    assert_eq!(line_of("3 2\n0 1\n"), 3); // truncated edge list
    assert_eq!(line_of("2 1\n0 1\n1 0\n"), 3); // trailing content
    assert_eq!(line_of("2 1\n1 1\n"), 2); // self-loop
    assert_eq!(line_of("2 1\n0 5\n"), 2); // endpoint out of range
    assert_eq!(line_of("3 2\n0 1\n1 0\n"), 1); // duplicate undirected edge
}

#[test]
fn instance_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("instance.json");
    let mdp = gen_random(&small_random(11)).unwrap();
    save_instance(&mdp, &path).unwrap();
    let loaded = load_instance(&path).unwrap();
    assert_eq!(mdp, loaded);
}

#[test]
fn loader_rejects_bad_rows_and_garbage() {
    let dir = tempfile::tempdir().unwrap();

    // A transition row that no longer sums to 1.
    let mut mdp = gen_random(&small_random(11)).unwrap();
    let s = (0..mdp.n_states())
        .find(|&s| !mdp.is_terminal(s))
        .unwrap();
    let a = mdp.available(s)[0];
    mdp.transition[s][a] = vec![0.0; mdp.n_states()];
    mdp.transition[s][a][0] = 0.9;
    let bad_row = dir.path().join("bad-row.json");
    save_instance(&mdp, &bad_row).unwrap();
    assert!(matches!(
        load_instance(&bad_row),
        Err(InstanceError::InvariantViolation(ModelError::RowSum { .. }))
    ));

    // A syntactically broken file.
    let good = gen_random(&small_random(11)).unwrap();
    let truncated = dir.path().join("truncated.json");
    save_instance(&good, &truncated).unwrap();
    let text = std::fs::read_to_string(&truncated).unwrap();
    std::fs::write(&truncated, &text[..text.len() - 40]).unwrap();
    assert!(matches!(
        load_instance(&truncated),
        Err(InstanceError::ParseError { .. })
    ));

    // A missing file is an I/O error, not a parse error.
    assert!(matches!(
        load_instance(dir.path().join("absent.json")),
        Err(InstanceError::Io(_))
    ));
}
