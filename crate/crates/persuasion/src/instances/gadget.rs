//! The independent-set gadget: a persuasion MDP whose optimal signaling
//! payoff against a far-sighted agent encodes Maximum Independent Set.
//!
//! For an undirected graph G = (N, E) with |N| = m, the gadget has three
//! states per vertex v plus one sink:
//!
//! ```text
//!        a: R̃ = γ̃                 ρ(c,θ)                b: R̃ = γ̃², R = 1
//!   s_v ———————→ s_X      s′_v ————————→ s″_v ——————————————————→ s_X
//!    │ b: R̃ = 0    ↑        ↑   (a or b)   │  a_{v,u}: R̃ = 0, {v,u} ∈ E
//!    └────────→ s′_v        └──────────────┴─────────→ s′_u
//! ```
//!
//! At s′_v the agent's reward is ρ(action, θ) with ρ(a,θ_a) = ρ(b,θ_b) = 1
//! and ρ(a,θ_b) = ρ(b,θ_a) = −1, under the uniform prior on {θ_a, θ_b}; the
//! principal is paid only when the agent leaves some s″_v by b. The initial
//! distribution is uniform over the s_v.
//!
//! When the principal reveals θ exactly at the s′_v of an independent set N*
//! and nothing anywhere else, a far-sighted agent with γ̃ ∈ (0, 1/2) strictly
//! prefers b at s_v for v ∈ N* (expecting the revealed ρ-match worth 1 and
//! the γ̃² exit), strictly prefers a at s_v for v ∉ N*, and strictly prefers
//! the b-exit at every s″_v it reaches — every comparison is strict, so no
//! tie-breaking assumption is needed. The principal then earns γ² exactly on
//! the trajectories started in N*: payoff |N*|·γ²/m. Hopping along a_{v,u}
//! could only help the agent if some neighbor u were also revealed, which
//! independence rules out; that is where hardness comes from.

use super::{Graph, InstanceError};
use crate::model::{ActionAdvice, PersuasionMDP, State};
use serde::{Deserialize, Serialize};

/// Where each vertex's gadget states live in the generated instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetMap {
    /// Entry state s_v per vertex.
    pub s: Vec<usize>,
    /// Revelation state s′_v per vertex.
    pub s_prime: Vec<usize>,
    /// Exit state s″_v per vertex.
    pub s_double_prime: Vec<usize>,
    /// The absorbing sink s_X.
    pub sink: usize,
}

/// Build the independent-set gadget for `graph` with agent discount `γ̃` and
/// principal discount `γ`.
///
/// The correctness argument needs γ̃ ∈ (0, 1/2): within that range every
/// agent preference in the intended trajectories is strict.
pub fn gen_indset_gadget(
    graph: &Graph,
    gamma_tilde: f64,
    gamma: f64,
) -> Result<(PersuasionMDP, GadgetMap), InstanceError> {
    if !(gamma_tilde > 0.0 && gamma_tilde < 0.5) {
        return Err(InstanceError::DiscountOutOfRange(gamma_tilde));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(InstanceError::InvalidSpec(format!(
            "gamma must lie in [0, 1), got {gamma}"
        )));
    }
    let n = graph.n;
    if n == 0 {
        return Err(InstanceError::InvalidSpec(
            "gadget needs at least one vertex".to_string(),
        ));
    }

    let map = GadgetMap {
        s: (0..n).collect(),
        s_prime: (n..2 * n).collect(),
        s_double_prime: (2 * n..3 * n).collect(),
        sink: 3 * n,
    };
    let ns = 3 * n + 1;

    // Global actions: "a", "b", then one directed hop a_{v→u} per edge
    // orientation, available at s″_v and leading to s′_u.
    let mut actions = vec!["a".to_string(), "b".to_string()];
    let mut hops_at: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(u, v) in &graph.edges {
        actions.push(format!("a_{u}_{v}"));
        hops_at[u].push((actions.len() - 1, v));
        actions.push(format!("a_{v}_{u}"));
        hops_at[v].push((actions.len() - 1, u));
    }
    let na = actions.len();

    let mut available: Vec<Vec<usize>> = vec![Vec::new(); ns];
    let mut transition = vec![vec![vec![0.0; ns]; na]; ns];
    let mut principal_reward = vec![vec![vec![0.0; na]; 2]; ns];
    let mut agent_reward = vec![vec![vec![0.0; na]; 2]; ns];
    // ρ(action, θ): +1 on the matched diagonal, −1 off it.
    let rho = [[1.0, -1.0], [-1.0, 1.0]];

    for v in 0..n {
        let (sv, spv, sppv) = (map.s[v], map.s_prime[v], map.s_double_prime[v]);

        available[sv] = vec![0, 1];
        transition[sv][0][map.sink] = 1.0;
        transition[sv][1][spv] = 1.0;
        for th in 0..2 {
            agent_reward[sv][th][0] = gamma_tilde;
        }

        available[spv] = vec![0, 1];
        for c in 0..2 {
            transition[spv][c][sppv] = 1.0;
            for th in 0..2 {
                agent_reward[spv][th][c] = rho[c][th];
            }
        }

        available[sppv] = vec![1];
        transition[sppv][1][map.sink] = 1.0;
        for th in 0..2 {
            agent_reward[sppv][th][1] = gamma_tilde * gamma_tilde;
            principal_reward[sppv][th][1] = 1.0;
        }
        for &(k, u) in &hops_at[v] {
            available[sppv].push(k);
            transition[sppv][k][map.s_prime[u]] = 1.0;
        }
    }

    let mdp = PersuasionMDP {
        states: (0..ns)
            .map(|i| State {
                name: if i == map.sink {
                    "sink".to_string()
                } else if i < n {
                    format!("s{i}")
                } else if i < 2 * n {
                    format!("sp{}", i - n)
                } else {
                    format!("spp{}", i - 2 * n)
                },
                terminal: i == map.sink,
            })
            .collect(),
        actions,
        thetas: vec!["theta_a".to_string(), "theta_b".to_string()],
        available,
        transition,
        prior: vec![vec![0.5, 0.5]; ns],
        principal_reward,
        agent_reward,
        gamma,
        gamma_tilde,
        init_dist: (0..ns)
            .map(|i| if i < n { 1.0 / n as f64 } else { 0.0 })
            .collect(),
    };
    Ok((mdp.canonicalize()?, map))
}

/// The independent-set advice on a gadget instance: full revelation at s′_v
/// for every v in the chosen set (advising the ρ-matched action), and the
/// lowest-indexed available action, uninformatively, everywhere else.
///
/// The chosen set is validated against the gadget itself: vertices must be
/// in range, distinct, and pairwise non-adjacent, adjacency being read off
/// the gadget's hop actions.
pub fn indset_strategy(
    gadget: &PersuasionMDP,
    independent_set: &[usize],
) -> Result<ActionAdvice, InstanceError> {
    let ns = gadget.n_states();
    if ns < 4 || (ns - 1) % 3 != 0 || gadget.n_thetas() != 2 || !gadget.is_terminal(ns - 1) {
        return Err(InstanceError::InvalidSpec(
            "not an independent-set gadget instance".to_string(),
        ));
    }
    let n = (ns - 1) / 3;
    let mut chosen = vec![false; n];
    for &v in independent_set {
        if v >= n {
            return Err(InstanceError::InvalidSpec(format!(
                "vertex {v} out of range for {n} gadget vertices"
            )));
        }
        if chosen[v] {
            return Err(InstanceError::InvalidSpec(format!(
                "vertex {v} listed twice"
            )));
        }
        chosen[v] = true;
    }
    for &v in independent_set {
        for &k in gadget.available(2 * n + v) {
            if k == 1 {
                continue;
            }
            let target = gadget.transition[2 * n + v][k]
                .iter()
                .position(|&p| p == 1.0)
                .expect("gadget hops are deterministic");
            let u = target - n;
            if chosen[u] {
                return Err(InstanceError::NotIndependent {
                    u: v.min(u),
                    v: v.max(u),
                });
            }
        }
    }

    let na = gadget.n_actions();
    let mut pi: Vec<Vec<Vec<f64>>> = Vec::with_capacity(ns);
    for s in 0..ns {
        if gadget.is_terminal(s) {
            pi.push(Vec::new());
            continue;
        }
        let mut rows = vec![vec![0.0; na]; 2];
        if s >= n && s < 2 * n && chosen[s - n] {
            // Full revelation: advise the ρ-matched action per θ.
            rows[0][0] = 1.0;
            rows[1][1] = 1.0;
        } else {
            let fallback = *gadget
                .available(s)
                .first()
                .expect("non-terminal gadget states have actions");
            rows[0][fallback] = 1.0;
            rows[1][fallback] = 1.0;
        }
        pi.push(rows);
    }
    Ok(ActionAdvice::new(gadget, pi)?)
}
