//! Exact and Monte Carlo evaluation of (strategy, agent-policy) pairs, and
//! the experiment sweeps built on top of them.
//!
//! A committed signaling strategy plus a deterministic agent policy induce a
//! finite Markov chain over meta-states (s, g). Exact evaluation restricts
//! the chain to the meta-states reachable from the initial distribution and
//! solves the two linear systems
//!
//! ```text
//!   (I − γ·T)·v_P = r_P        (I − γ̃·T)·v_A = r_A
//! ```
//!
//! where T is the policy-induced meta-transition matrix, r_P takes posterior
//! expectations of the principal reward at the policy's action, and r_A does
//! the same for the agent. Both discounted payoffs are then init-weighted
//! values — no truncation, no sampling noise. The same pair can instead be
//! simulated: [`rollout`] replays the full interaction loop (draw θ, draw
//! the signal, act, transition) on a seeded generator, honoring one-memory
//! threat semantics, and reports sample means with sample standard
//! deviations.

pub mod sweep;

use crate::agent::{build_meta_mdp, build_threat_meta_mdp, myopic_response, AgentPolicy};
use crate::instances::InstanceError;
use crate::model::{ActionAdvice, PersuasionMDP, Signal, StrategyRef};
use crate::solver::{self, Method, SolverError, StrategyRepr};
use crate::tolerances;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

/// Errors from evaluation and sweeps.
#[derive(Debug, Error)]
pub enum EvalError {
    /// The policy leaves a reachable meta-state without a usable action.
    #[error("policy has no available action at state {state}, signal {signal:?}")]
    PolicyIncomplete { state: usize, signal: Signal },
    /// A discounted linear system was singular. Cannot occur for discounts
    /// below 1; reported defensively.
    #[error("discounted chain system is singular")]
    SingularSystem,
    /// Rollout was asked for a degenerate horizon or sample count.
    #[error("invalid rollout parameters: {0}")]
    InvalidHorizon(String),
    /// A sweep configuration is unusable.
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    /// One instance of a sweep failed, with its grid location.
    #[error("sweep failed at grid point {index} (x = {x}), instance {instance}: {source}")]
    PointFailure {
        index: usize,
        x: f64,
        instance: usize,
        #[source]
        source: Box<EvalError>,
    },
    /// A solve invoked on behalf of the evaluation failed.
    #[error(transparent)]
    Solver(#[from] SolverError),
    /// Instance generation inside a sweep failed.
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Monte Carlo statistics attached to a rollout result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    /// Sample standard deviation of the principal's discounted return.
    pub principal_sd: f64,
    /// Sample standard deviation of the agent's discounted return.
    pub agent_sd: f64,
    /// Number of simulated trajectories.
    pub n_samples: usize,
    /// Truncation horizon actually used.
    pub horizon: usize,
}

/// An evaluation outcome: both players' discounted payoffs from the initial
/// distribution — exact, or sample means when Monte Carlo statistics are
/// attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    /// The method this evaluation speaks for, when dispatched by tag.
    pub method: Option<Method>,
    /// The principal's γ-discounted payoff (exact value or sample mean).
    pub principal_payoff: f64,
    /// The agent's γ̃-discounted payoff (exact value or sample mean).
    pub agent_payoff: f64,
    /// Monte Carlo statistics; absent for exact evaluations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<McSummary>,
}

/// Exactly evaluate a strategy/policy pair by linear solves over the
/// reachable meta-states.
pub fn exact_eval<'a>(
    mdp: &PersuasionMDP,
    strategy: impl Into<StrategyRef<'a>>,
    policy: &AgentPolicy,
) -> Result<EvalResult, EvalError> {
    let strategy = strategy.into();
    let meta = match strategy {
        StrategyRef::Threat(t) => build_threat_meta_mdp(mdp, t),
        StrategyRef::Advice(a) => build_meta_mdp(mdp, a),
        StrategyRef::General(g) => build_meta_mdp(mdp, g),
    };

    // Breadth-first restriction to the meta-states reachable from the
    // initial distribution under the policy, in deterministic discovery
    // order.
    let n_meta = meta.len();
    let mut row_of = vec![usize::MAX; n_meta];
    let mut order: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for m in 0..n_meta {
        if meta.init_dist[m] > 0.0 {
            row_of[m] = order.len();
            order.push(m);
            queue.push_back(m);
        }
    }
    let mut chosen: Vec<Option<usize>> = vec![None; n_meta];
    while let Some(m) = queue.pop_front() {
        if meta.actions[m].is_empty() {
            continue;
        }
        let (s, signal) = meta.meta_states[m];
        let k = policy
            .action(s, signal)
            .and_then(|b| meta.actions[m].iter().position(|&x| x == b))
            .ok_or(EvalError::PolicyIncomplete { state: s, signal })?;
        chosen[m] = Some(k);
        for &(mt, p) in &meta.transition[m][k] {
            if p > 0.0 && row_of[mt] == usize::MAX {
                row_of[mt] = order.len();
                order.push(mt);
                queue.push_back(mt);
            }
        }
    }

    let n_r = order.len();
    let mut t_mat = DMatrix::<f64>::zeros(n_r, n_r);
    let mut r_p = DVector::<f64>::zeros(n_r);
    let mut r_a = DVector::<f64>::zeros(n_r);
    for (i, &m) in order.iter().enumerate() {
        let Some(k) = chosen[m] else { continue };
        let (s, _) = meta.meta_states[m];
        let b = meta.actions[m][k];
        r_a[i] = meta.agent_reward[m][k];
        r_p[i] = (0..mdp.n_thetas())
            .map(|th| meta.posteriors[m][th] * mdp.principal_reward[s][th][b])
            .sum();
        for &(mt, p) in &meta.transition[m][k] {
            if p > 0.0 {
                t_mat[(i, row_of[mt])] += p;
            }
        }
    }

    let identity = DMatrix::<f64>::identity(n_r, n_r);
    let v_p = (&identity - mdp.gamma * &t_mat)
        .lu()
        .solve(&r_p)
        .ok_or(EvalError::SingularSystem)?;
    let v_a = (&identity - mdp.gamma_tilde * &t_mat)
        .lu()
        .solve(&r_a)
        .ok_or(EvalError::SingularSystem)?;

    let weight = |values: &DVector<f64>| -> f64 {
        order
            .iter()
            .enumerate()
            .map(|(i, &m)| meta.init_dist[m] * values[i])
            .sum()
    };
    Ok(EvalResult {
        method: None,
        principal_payoff: weight(&v_p),
        agent_payoff: weight(&v_a),
        monte_carlo: None,
    })
}

/// The default truncation horizon: long enough that the tail a discount can
/// still contribute is below the truncation tolerance, under the larger of
/// the two discounts.
fn default_horizon(mdp: &PersuasionMDP) -> usize {
    let g = mdp.gamma.max(mdp.gamma_tilde);
    let r_max = mdp.max_abs_reward();
    if g <= 0.0 || r_max <= 0.0 {
        return 1;
    }
    let h = (tolerances::EPS_TRUNCATION * (1.0 - g) / r_max).ln() / g.ln();
    (h.ceil() as usize).clamp(1, tolerances::MAX_HORIZON)
}

/// Draw an index from a finite distribution.
fn sample_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        cum += w;
        last = i;
        if u < cum {
            return i;
        }
    }
    last
}

/// Estimate both payoffs by seeded simulation of the interaction loop.
///
/// Each step draws, in order: the parameter θ from the prior, the signal
/// from the committed strategy, the (deterministic) policy action, and the
/// successor state. A threat strategy is simulated with one-memory
/// semantics: after the first disobeyed recommendation the signal is Null
/// forever. Trajectories are truncated at `horizon` steps (default: long
/// enough for the discounted tail to fall below the truncation tolerance)
/// and stop early in terminal states, which are absorbing and rewardless.
pub fn rollout<'a>(
    mdp: &PersuasionMDP,
    strategy: impl Into<StrategyRef<'a>>,
    policy: &AgentPolicy,
    horizon: Option<usize>,
    n_samples: usize,
    seed: u64,
) -> Result<EvalResult, EvalError> {
    let strategy = strategy.into();
    let horizon = match horizon {
        Some(0) => {
            return Err(EvalError::InvalidHorizon(
                "horizon must be at least 1".to_string(),
            ))
        }
        Some(h) => h,
        None => default_horizon(mdp),
    };
    if n_samples == 0 {
        return Err(EvalError::InvalidHorizon(
            "need at least one sample".to_string(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut p_sum, mut p_sq, mut a_sum, mut a_sq) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..n_samples {
        let mut s = sample_index(&mut rng, &mdp.init_dist);
        let mut deviated = false;
        let (mut p_ret, mut a_ret) = (0.0_f64, 0.0_f64);
        let (mut dp, mut da) = (1.0_f64, 1.0_f64);
        for _ in 0..horizon {
            if mdp.is_terminal(s) {
                break;
            }
            let th = sample_index(&mut rng, &mdp.prior[s]);
            let signal = match strategy {
                StrategyRef::General(g) => Signal::Opaque(sample_index(&mut rng, &g.pi[s][th])),
                StrategyRef::Advice(a) => Signal::Advice(sample_index(&mut rng, &a.pi[s][th])),
                StrategyRef::Threat(t) => {
                    if deviated {
                        Signal::Null
                    } else {
                        Signal::Advice(sample_index(&mut rng, &t.base.pi[s][th]))
                    }
                }
            };
            let b = policy
                .action(s, signal)
                .filter(|b| mdp.available(s).binary_search(b).is_ok())
                .ok_or(EvalError::PolicyIncomplete { state: s, signal })?;
            p_ret += dp * mdp.principal_reward[s][th][b];
            a_ret += da * mdp.agent_reward[s][th][b];
            dp *= mdp.gamma;
            da *= mdp.gamma_tilde;
            if matches!(strategy, StrategyRef::Threat(_)) {
                if let Signal::Advice(g) = signal {
                    if b != g {
                        deviated = true;
                    }
                }
            }
            s = sample_index(&mut rng, &mdp.transition[s][b]);
        }
        p_sum += p_ret;
        p_sq += p_ret * p_ret;
        a_sum += a_ret;
        a_sq += a_ret * a_ret;
    }

    let n = n_samples as f64;
    let p_mean = p_sum / n;
    let a_mean = a_sum / n;
    let sd = |sq: f64, mean: f64| -> f64 {
        if n_samples >= 2 {
            ((sq - n * mean * mean) / (n - 1.0)).max(0.0).sqrt()
        } else {
            0.0
        }
    };
    Ok(EvalResult {
        method: None,
        principal_payoff: p_mean,
        agent_payoff: a_mean,
        monte_carlo: Some(McSummary {
            principal_sd: sd(p_sq, p_mean),
            agent_sd: sd(a_sq, a_mean),
            n_samples,
            horizon,
        }),
    })
}

/// Evaluate an instance under a method tag, dispatching to the matching
/// solve-and-respond pipeline:
///
/// * the no-signaling baselines solve the agent's problem under ⊥;
/// * `myop` solves the signaling LP, computes the agent's myopic best
///   response to the recovered advice, and evaluates that pair exactly —
///   the response is obedient precisely because the advice is incentive
///   compatible, and the evaluation does not assume it;
/// * `am` and `threat` both go through the threat pipeline, whose payoff is
///   verified against the far-sighted best response to the threat;
/// * `full-control` is the direct-control upper bound.
pub fn evaluate_method(mdp: &PersuasionMDP, method: Method) -> Result<EvalResult, EvalError> {
    let (principal_payoff, agent_payoff) = match method {
        Method::NosigMyop | Method::NosigFs => {
            let report = solver::nosig(mdp, method == Method::NosigFs)?;
            (report.principal_payoff, report.agent_payoff)
        }
        Method::Myop => {
            let report = solver::opt_sig_myop(mdp, &mdp.agent_reward)?;
            let Some(StrategyRepr::Advice { pi }) = report.strategy else {
                unreachable!("opt_sig_myop always reports an advice strategy");
            };
            let advice = ActionAdvice::new(mdp, pi).map_err(SolverError::from)?;
            let response = myopic_response(mdp, &advice);
            let evaluated = exact_eval(mdp, &advice, &response)?;
            (evaluated.principal_payoff, evaluated.agent_payoff)
        }
        Method::Am | Method::Threat => {
            let (_, report) = solver::threat_strategy(mdp)?;
            (report.principal_payoff, report.agent_payoff)
        }
        Method::FullControl => {
            let report = solver::full_control(mdp)?;
            (report.principal_payoff, report.agent_payoff)
        }
    };
    Ok(EvalResult {
        method: Some(method),
        principal_payoff,
        agent_payoff,
        monte_carlo: None,
    })
}
