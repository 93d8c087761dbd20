//! The agent's side of the game: the belief meta-MDP induced by a committed
//! signaling strategy, value iteration over it, and best responses.
//!
//! Once the principal commits to a Markovian strategy π, the agent faces an
//! ordinary MDP whose states are pairs (s, g) of an environment state and the
//! signal just received. Its transition kernel composes the environment with
//! next-step signal marginals, and its reward is the posterior-expected agent
//! reward:
//!
//! ```text
//! P^π((s,g), a, (s′,g′)) = P(s,a,s′) · Σ_θ μ_{s′}(θ)·π_{s′}(θ,g′)
//! R̃^π((s,g), a)         = Σ_θ Pr(θ | g, π_s) · R̃(s,θ,a)
//! ```
//!
//! Signals with zero marginal probability are pruned — they are never
//! received, and their posteriors are undefined. Terminal environment states
//! contribute a single absorbing, zero-reward meta-state.
//!
//! A one-memory threat strategy induces a slightly larger meta-MDP: next to
//! the advice meta-states (s, g_a) there is a punish meta-state (s, g_0) for
//! every state. Obeying advice keeps the agent on the advice states; any
//! deviation — and only a deviation — drops it into the punish states, where
//! the principal signals nothing forever and beliefs stay at the prior.

use crate::model::{
    posterior, ActionAdvice, PersuasionMDP, Posterior, RewardTable, Signal, SignalingRef,
    ThreatStrategy,
};
use crate::tolerances;
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from solving the agent's decision problem.
#[derive(Debug, Error)]
pub enum AgentError {
    /// Value iteration failed to reach its stopping threshold within the
    /// iteration budget.
    #[error(
        "value iteration did not converge within {budget} iterations \
         (discount {discount}, residual {residual:.3e})"
    )]
    NonConvergence {
        budget: usize,
        discount: f64,
        residual: f64,
    },
}

/// A deterministic agent policy: one action per (state, signal) pair.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AgentPolicy {
    /// Chosen global action per (state, signal).
    pub map: BTreeMap<(usize, Signal), usize>,
}

impl AgentPolicy {
    /// The action taken at state `s` upon signal `g`, if the policy covers
    /// that pair.
    pub fn action(&self, s: usize, signal: Signal) -> Option<usize> {
        self.map.get(&(s, signal)).copied()
    }

    /// Record the action for a (state, signal) pair.
    pub fn insert(&mut self, s: usize, signal: Signal, action: usize) {
        self.map.insert((s, signal), action);
    }
}

/// A value function, indexed like the structure it was solved on (meta-state
/// index for [`solve_mdp`]; environment-state index where the meta-states
/// coincide with states, as under the uninformative strategy ⊥).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction(pub Vec<f64>);

impl std::ops::Deref for ValueFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// The agent's belief MDP induced by a committed signaling strategy.
///
/// Meta-states are (state, signal) pairs with positive occurrence
/// probability, plus one absorbing (s, Null) per terminal state. Actions at a
/// meta-state are the available actions of the underlying environment state,
/// stored as global action indices.
#[derive(Debug, Clone)]
pub struct MetaMDP {
    /// The (state, signal) pair of each meta-state.
    pub meta_states: Vec<(usize, Signal)>,
    /// Belief over Θ at each meta-state: the Bayesian posterior at signal
    /// meta-states, the prior at punish meta-states, the prior at terminal
    /// meta-states (where it is never used — rewards are zero).
    pub posteriors: Vec<Posterior>,
    /// Available global actions per meta-state; empty for absorbing
    /// meta-states of terminal environment states.
    pub actions: Vec<Vec<usize>>,
    /// Sparse transition rows `transition[m][k]` for the k-th entry of
    /// `actions[m]`: pairs (next meta-state, probability).
    pub transition: Vec<Vec<Vec<(usize, f64)>>>,
    /// Expected agent reward `agent_reward[m][k]` under the meta-state's
    /// belief.
    pub agent_reward: Vec<Vec<f64>>,
    /// The advised action at recommendation meta-states, `None` elsewhere.
    pub advised: Vec<Option<usize>>,
    /// The agent's discount γ̃.
    pub discount: f64,
    /// Initial distribution over meta-states.
    pub init_dist: Vec<f64>,
    index: BTreeMap<(usize, Signal), usize>,
}

impl MetaMDP {
    /// Number of meta-states.
    pub fn len(&self) -> usize {
        self.meta_states.len()
    }

    /// Whether the meta-MDP has no meta-states (never the case for a valid
    /// persuasion MDP).
    pub fn is_empty(&self) -> bool {
        self.meta_states.is_empty()
    }

    /// Index of the meta-state for (state, signal), if present.
    pub fn meta_index(&self, s: usize, signal: Signal) -> Option<usize> {
        self.index.get(&(s, signal)).copied()
    }

    /// Largest absolute expected agent reward over all meta-state actions.
    pub fn max_abs_reward(&self) -> f64 {
        self.agent_reward
            .iter()
            .flatten()
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    fn push_meta(
        &mut self,
        s: usize,
        signal: Signal,
        belief: Posterior,
        advised: Option<usize>,
    ) -> usize {
        let m = self.meta_states.len();
        self.meta_states.push((s, signal));
        self.posteriors.push(belief);
        self.actions.push(Vec::new());
        self.transition.push(Vec::new());
        self.agent_reward.push(Vec::new());
        self.advised.push(advised);
        self.init_dist.push(0.0);
        self.index.insert((s, signal), m);
        m
    }

    fn empty(discount: f64) -> Self {
        MetaMDP {
            meta_states: Vec::new(),
            posteriors: Vec::new(),
            actions: Vec::new(),
            transition: Vec::new(),
            agent_reward: Vec::new(),
            advised: Vec::new(),
            discount,
            init_dist: Vec::new(),
            index: BTreeMap::new(),
        }
    }
}

/// Expected reward of action `a` at state `s` under a belief over Θ.
fn expected_reward(mdp: &PersuasionMDP, table: &RewardTable, belief: &[f64], s: usize, a: usize) -> f64 {
    (0..mdp.n_thetas())
        .map(|th| belief[th] * table[s][th][a])
        .sum()
}

/// Build the belief meta-MDP induced by a Markovian signaling strategy.
///
/// Meta-states are created per state in index order: for non-terminal states
/// one per positive-marginal signal (in the strategy's signal order), for
/// terminal states a single absorbing (s, Null). The initial distribution
/// spreads z_s over the first-step signal marginals.
pub fn build_meta_mdp<'a>(mdp: &PersuasionMDP, strategy: impl Into<SignalingRef<'a>>) -> MetaMDP {
    let strategy = strategy.into();
    let mut meta = MetaMDP::empty(mdp.gamma_tilde);

    // Meta-state enumeration, with per-state signal marginals kept for the
    // transition pass.
    let mut marginals: Vec<Vec<(usize, f64)>> = vec![Vec::new(); mdp.n_states()];
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            let m = meta.push_meta(s, Signal::Null, mdp.prior[s].clone(), None);
            meta.init_dist[m] = mdp.init_dist[s];
            continue;
        }
        for (signal, marginal) in strategy.signals(mdp, s) {
            if marginal <= 0.0 {
                continue;
            }
            let belief = posterior(mdp, strategy, s, signal)
                .expect("positive marginal guarantees a well-defined posterior");
            let advised = match signal {
                Signal::Advice(a) => Some(a),
                _ => None,
            };
            let m = meta.push_meta(s, signal, belief, advised);
            meta.init_dist[m] = mdp.init_dist[s] * marginal;
            marginals[s].push((m, marginal));
        }
    }

    // Transitions and rewards.
    for m in 0..meta.len() {
        let (s, _) = meta.meta_states[m];
        if mdp.is_terminal(s) {
            continue;
        }
        let belief = meta.posteriors[m].clone();
        for &a in mdp.available(s) {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (t, &p) in mdp.transition[s][a].iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                if mdp.is_terminal(t) {
                    let mt = meta.meta_index(t, Signal::Null).expect("terminal meta exists");
                    row.push((mt, p));
                } else {
                    for &(mt, marginal) in &marginals[t] {
                        row.push((mt, p * marginal));
                    }
                }
            }
            meta.actions[m].push(a);
            meta.transition[m].push(row);
            meta.agent_reward[m].push(expected_reward(mdp, &mdp.agent_reward, &belief, s, a));
        }
    }
    meta
}

/// Build the meta-MDP induced by a one-memory threat strategy.
///
/// On the obedient path the agent sits on advice meta-states (s, g_a) with
/// the base strategy's posteriors; its first deviation — playing any b other
/// than the advised action — routes all of P(s,b,·) onto punish meta-states
/// (s′, Null), where beliefs equal the prior and the dynamics are those of
/// the uninformative strategy forever after.
pub fn build_threat_meta_mdp(mdp: &PersuasionMDP, threat: &ThreatStrategy) -> MetaMDP {
    let base = &threat.base;
    let mut meta = MetaMDP::empty(mdp.gamma_tilde);

    let mut marginals: Vec<Vec<(usize, f64)>> = vec![Vec::new(); mdp.n_states()];
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            let m = meta.push_meta(s, Signal::Null, mdp.prior[s].clone(), None);
            meta.init_dist[m] = mdp.init_dist[s];
            continue;
        }
        for &a in mdp.available(s) {
            let marginal = base.signal_marginal(mdp, s, a);
            if marginal <= 0.0 {
                continue;
            }
            let belief = posterior(mdp, base, s, Signal::Advice(a))
                .expect("positive marginal guarantees a well-defined posterior");
            let m = meta.push_meta(s, Signal::Advice(a), belief, Some(a));
            meta.init_dist[m] = mdp.init_dist[s] * marginal;
            marginals[s].push((m, marginal));
        }
        // Punish meta-state, reachable only after a deviation.
        meta.push_meta(s, Signal::Null, mdp.prior[s].clone(), None);
    }

    for m in 0..meta.len() {
        let (s, signal) = meta.meta_states[m];
        if mdp.is_terminal(s) {
            continue;
        }
        let belief = meta.posteriors[m].clone();
        let advised = meta.advised[m];
        for &b in mdp.available(s) {
            let obeys = match signal {
                Signal::Advice(_) => advised == Some(b),
                // In punish mode every action continues the punish dynamics.
                _ => false,
            };
            let mut row: Vec<(usize, f64)> = Vec::new();
            for (t, &p) in mdp.transition[s][b].iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                if obeys && !mdp.is_terminal(t) {
                    for &(mt, marginal) in &marginals[t] {
                        row.push((mt, p * marginal));
                    }
                } else {
                    let mt = meta.meta_index(t, Signal::Null).expect("punish meta exists");
                    row.push((mt, p));
                }
            }
            meta.actions[m].push(b);
            meta.transition[m].push(row);
            meta.agent_reward[m].push(expected_reward(mdp, &mdp.agent_reward, &belief, s, b));
        }
    }
    meta
}

/// Tie-breaking rule for greedy policy extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// Among actions within tolerance of the best Q-value, prefer the
    /// advised action where one exists, then the lowest global index — the
    /// obedient tie-break assumed throughout.
    #[default]
    AdvisedFirst,
    /// Plain lowest global index, ignoring advice markers.
    LowestIndex,
}

/// Solve a meta-MDP for the agent's optimal value function and a greedy
/// deterministic policy, by value iteration.
///
/// Iteration stops when the sup-norm Bellman residual falls below
/// ε·(1−γ̃)/γ̃ with ε the value-iteration target, which bounds the distance
/// to the fixed point by ε (for γ̃ = 0 a single backup is exact). Greedy ties
/// within an absolute tolerance are broken by `tie_break`.
pub fn solve_mdp(
    meta: &MetaMDP,
    tie_break: TieBreak,
) -> Result<(ValueFunction, AgentPolicy), AgentError> {
    let g = meta.discount;
    let r_max = meta.max_abs_reward();
    let threshold = if g > 0.0 {
        tolerances::VALUE_ITERATION_INTERNAL * (1.0 - g) / g
    } else {
        f64::INFINITY
    };
    // Geometric-decay iteration bound for the coarser public target, with
    // wide slack for the tighter internal threshold.
    let budget = if g <= 0.0 || r_max <= 0.0 {
        1
    } else {
        let needed = (tolerances::VALUE_ITERATION * (1.0 - g) / r_max).ln() / g.ln();
        (10.0 * needed)
            .ceil()
            .clamp(1.0, tolerances::MAX_VI_ITERATIONS as f64) as usize
    };

    let n = meta.len();
    let mut v = vec![0.0_f64; n];
    let mut next = vec![0.0_f64; n];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..budget {
        residual = 0.0_f64;
        for m in 0..n {
            let best = (0..meta.actions[m].len())
                .map(|k| q_value(meta, &v, m, k))
                .fold(f64::NEG_INFINITY, f64::max);
            next[m] = if best.is_finite() { best } else { 0.0 };
            residual = residual.max((next[m] - v[m]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if residual <= threshold {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AgentError::NonConvergence {
            budget,
            discount: g,
            residual,
        });
    }

    let mut policy = AgentPolicy::default();
    for m in 0..n {
        if meta.actions[m].is_empty() {
            continue;
        }
        let q: Vec<f64> = (0..meta.actions[m].len())
            .map(|k| q_value(meta, &v, m, k))
            .collect();
        let best = q.iter().fold(f64::NEG_INFINITY, |b, &x| b.max(x));
        let advised = match tie_break {
            TieBreak::AdvisedFirst => meta.advised[m],
            TieBreak::LowestIndex => None,
        };
        let chosen = choose_greedy(&meta.actions[m], &q, best, advised);
        let (s, signal) = meta.meta_states[m];
        policy.insert(s, signal, chosen);
    }
    Ok((ValueFunction(v), policy))
}

fn q_value(meta: &MetaMDP, v: &[f64], m: usize, k: usize) -> f64 {
    meta.agent_reward[m][k]
        + meta.discount
            * meta.transition[m][k]
                .iter()
                .map(|&(mt, p)| p * v[mt])
                .sum::<f64>()
}

/// Pick among near-maximal actions: the advised one when it qualifies,
/// otherwise the lowest global action index.
fn choose_greedy(actions: &[usize], q: &[f64], best: f64, advised: Option<usize>) -> usize {
    if let Some(a) = advised {
        if let Some(k) = actions.iter().position(|&b| b == a) {
            if q[k] >= best - tolerances::TIE {
                return a;
            }
        }
    }
    actions
        .iter()
        .zip(q)
        .filter(|&(_, &qk)| qk >= best - tolerances::TIE)
        .map(|(&a, _)| a)
        .min()
        .expect("non-empty action set has a greedy choice")
}

/// The fully obedient policy for an action advice: follow every
/// recommendation that can be received (positive marginal probability).
pub fn obedient_policy(mdp: &PersuasionMDP, advice: &ActionAdvice) -> AgentPolicy {
    let mut policy = AgentPolicy::default();
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for &a in mdp.available(s) {
            if advice.signal_marginal(mdp, s, a) > 0.0 {
                policy.insert(s, Signal::Advice(a), a);
            }
        }
    }
    policy
}

/// The myopic best response to an action advice: at every positive-marginal
/// recommendation, maximize the posterior-expected one-step agent reward.
///
/// Ties within tolerance are broken in favor of the recommendation, then by
/// lowest action index, so the response is obedient exactly when the advice
/// is incentive compatible.
pub fn myopic_response(mdp: &PersuasionMDP, advice: &ActionAdvice) -> AgentPolicy {
    myopic_response_with(mdp, advice, &mdp.agent_reward)
}

/// Myopic best response under an arbitrary reward table — the agent reward R̃
/// for a truly myopic agent, the augmented reward R̃⁺ for an advice-myopic
/// one.
pub fn myopic_response_with(
    mdp: &PersuasionMDP,
    advice: &ActionAdvice,
    reward: &RewardTable,
) -> AgentPolicy {
    let mut policy = AgentPolicy::default();
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for &a in mdp.available(s) {
            if advice.signal_marginal(mdp, s, a) <= 0.0 {
                continue;
            }
            let belief = posterior(mdp, advice, s, Signal::Advice(a))
                .expect("positive marginal guarantees a well-defined posterior");
            let q: Vec<f64> = mdp
                .available(s)
                .iter()
                .map(|&b| expected_reward(mdp, reward, &belief, s, b))
                .collect();
            let best = q.iter().fold(f64::NEG_INFINITY, |b, &x| b.max(x));
            let chosen = choose_greedy(mdp.available(s), &q, best, Some(a));
            policy.insert(s, Signal::Advice(a), chosen);
        }
    }
    policy
}

/// Value and best response of the agent under the uninformative strategy ⊥.
///
/// The ⊥ meta-MDP has exactly one meta-state per environment state, so the
/// returned value function is indexed by state: it is the no-signaling value
/// V̄ used to augment rewards for the advice-myopic agent. The policy σ̄ maps
/// (s, Opaque(0)) at non-terminal states.
pub fn nosig_value(mdp: &PersuasionMDP) -> Result<(ValueFunction, AgentPolicy), AgentError> {
    let bottom = crate::model::uninformative(mdp);
    let meta = build_meta_mdp(mdp, &bottom);
    debug_assert!(
        meta.len() == mdp.n_states()
            && meta.meta_states.iter().enumerate().all(|(m, &(s, _))| m == s),
        "uninformative meta-states must coincide with environment states"
    );
    solve_mdp(&meta, TieBreak::AdvisedFirst)
}

/// The augmented reward table R̃⁺ of the advice-myopic agent, computing the
/// no-signaling value V̄ internally. See [`am_rewards_with`].
pub fn am_rewards(mdp: &PersuasionMDP) -> Result<RewardTable, AgentError> {
    let (v_bar, _) = nosig_value(mdp)?;
    Ok(am_rewards_with(mdp, &v_bar))
}

/// The augmented reward R̃⁺(s,θ,a) = R̃(s,θ,a) + γ̃·Σ_{s′} P(s,a,s′)·V̄(s′)
/// of the advice-myopic agent: immediate reward plus the discounted
/// no-signaling continuation.
///
/// `v_bar` is indexed by environment state, as returned by [`nosig_value`].
/// Entries for terminal states and unavailable actions stay zero, preserving
/// the canonical filler.
pub fn am_rewards_with(mdp: &PersuasionMDP, v_bar: &ValueFunction) -> RewardTable {
    let mut table = vec![vec![vec![0.0; mdp.n_actions()]; mdp.n_thetas()]; mdp.n_states()];
    for s in 0..mdp.n_states() {
        for &a in mdp.available(s) {
            let continuation: f64 = mdp.transition[s][a]
                .iter()
                .enumerate()
                .map(|(t, &p)| p * v_bar[t])
                .sum();
            for th in 0..mdp.n_thetas() {
                table[s][th][a] = mdp.agent_reward[s][th][a] + mdp.gamma_tilde * continuation;
            }
        }
    }
    table
}
