//! Solvers for the principal: optimal signaling against myopic and
//! advice-myopic agents, threat strategies against far-sighted agents, and
//! the no-signaling and full-control baselines.
//!
//! The workhorse is a single global linear program (see [`dual`]) whose
//! solution is the principal's optimal value function against an agent that
//! best-responds signal-by-signal — myopically under the plain agent reward
//! R̃, or under the augmented reward R̃⁺ for the advice-myopic reduction.
//! The optimal advice is recovered per state, and every solve is closed by
//! an exact evaluation of the recovered strategy: the reported payoff is the
//! LP optimum Σ_s z_s·V(s), and a disagreement between it and the exact
//! evaluation beyond tolerance is an error, never a silently wrong answer.
//!
//! Against a far-sighted agent the principal plays a one-memory threat
//! strategy: the advice-myopic optimum while the agent obeys, and no
//! information forever after the first deviation. Obedience is then an
//! optimal response, so the threat secures the advice-myopic payoff; the
//! solver verifies this by computing the agent's actual best response to the
//! threat and evaluating it exactly before reporting.

pub mod dual;
pub mod lp;

use crate::agent::{
    am_rewards_with, build_threat_meta_mdp, nosig_value, obedient_policy, solve_mdp, AgentError,
    AgentPolicy, TieBreak, ValueFunction,
};
use crate::eval::exact_eval;
use crate::model::{
    uninformative, ActionAdvice, ModelError, PersuasionMDP, RewardTable, Signal, ThreatStrategy,
};
use crate::tolerances;
use dual::DualSolution;
use lp::LpError;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

/// Errors from the solve pipelines.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A linear-program solve failed.
    #[error(transparent)]
    Lp(#[from] LpError),
    /// The recovered strategy is malformed or fails an incentive check.
    #[error(transparent)]
    Model(#[from] ModelError),
    /// The agent's decision problem could not be solved.
    #[error(transparent)]
    Agent(#[from] AgentError),
    /// The recovered strategy's exact payoff disagrees with the LP optimum.
    #[error(
        "recovered strategy earns {actual} but the optimum is {expected} \
         (beyond tolerance {tol:e})"
    )]
    RecoveryMismatch { expected: f64, actual: f64, tol: f64 },
    /// The threat strategy's exact payoff disagrees with the advice-myopic
    /// optimum it is supposed to secure.
    #[error(
        "threat strategy earns {threat} but the advice-myopic optimum is {am} \
         (beyond tolerance {tol:e})"
    )]
    CorollaryViolation { am: f64, threat: f64, tol: f64 },
    /// Exact evaluation of a solved strategy failed.
    #[error("evaluation of the solved strategy failed: {0}")]
    Eval(String),
}

/// The solution methods, as they appear on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Optimal signaling against a myopic agent.
    Myop,
    /// Optimal signaling against an advice-myopic agent.
    Am,
    /// One-memory threat strategy against a far-sighted agent.
    Threat,
    /// No signaling, myopic agent.
    NosigMyop,
    /// No signaling, far-sighted agent.
    NosigFs,
    /// The principal acts directly, observing θ (an upper bound).
    FullControl,
}

impl Method {
    /// All methods, in report order.
    pub const ALL: [Method; 6] = [
        Method::NosigMyop,
        Method::NosigFs,
        Method::Myop,
        Method::Am,
        Method::Threat,
        Method::FullControl,
    ];

    /// The kebab-case name used on the command line and in JSON.
    pub fn name(self) -> &'static str {
        match self {
            Method::Myop => "myop",
            Method::Am => "am",
            Method::Threat => "threat",
            Method::NosigMyop => "nosig-myop",
            Method::NosigFs => "nosig-fs",
            Method::FullControl => "full-control",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
                format!("unknown method {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// The strategy inside a report, tagged by representation. Methods without a
/// committed signaling strategy (the no-signaling baselines and full control)
/// report none.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyRepr {
    /// An action advice `pi[s][θ][a]`.
    Advice { pi: Vec<Vec<Vec<f64>>> },
    /// A one-memory threat strategy, by its on-path advice.
    Threat { base_pi: Vec<Vec<Vec<f64>>> },
}

/// Solve statistics.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Termination status of the main LP solve, when one ran.
    pub lp_status: Option<String>,
    /// Total interior-point iterations across all LP solves.
    pub iterations: u64,
    /// Wall-clock time of the solve in seconds.
    pub wall_time_s: f64,
    /// Full-control dictation `dictation[s][θ]`: the action the principal
    /// takes at (s, θ); empty rows for terminal states.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dictation: Option<Vec<Vec<usize>>>,
}

/// Outcome of a solve: the strategy (where the method has one), both
/// players' discounted payoffs from the initial distribution, and solve
/// statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    /// Which method produced this report.
    pub method: Method,
    /// The committed strategy; absent where the method has none.
    pub strategy: Option<StrategyRepr>,
    /// The principal's discounted payoff under γ.
    pub principal_payoff: f64,
    /// The agent's discounted payoff under γ̃.
    pub agent_payoff: f64,
    /// Solve statistics.
    pub diagnostics: Diagnostics,
}

/// Solve an instance by the given method.
pub fn solve(mdp: &PersuasionMDP, method: Method) -> Result<SolveReport, SolverError> {
    match method {
        Method::Myop => opt_sig_myop(mdp, &mdp.agent_reward),
        Method::Am => opt_sig_am(mdp),
        Method::Threat => threat_strategy(mdp).map(|(_, report)| report),
        Method::NosigMyop => nosig(mdp, false),
        Method::NosigFs => nosig(mdp, true),
        Method::FullControl => full_control(mdp),
    }
}

fn eval_err(e: crate::eval::EvalError) -> SolverError {
    SolverError::Eval(e.to_string())
}

/// Shared LP pipeline outcome: optimal advice against an agent that responds
/// myopically to the given reward table, the LP value, and the exact payoffs
/// of the recovered advice under obedience.
struct LpOutcome {
    advice: ActionAdvice,
    dual: DualSolution,
    /// The LP optimum Σ_s z_s·V(s) — the reported principal payoff.
    lp_payoff: f64,
    agent_payoff: f64,
    iterations: u64,
}

fn solve_advice(
    mdp: &PersuasionMDP,
    agent_reward: &RewardTable,
) -> Result<LpOutcome, SolverError> {
    let dual = dual::solve_dual_lp(mdp, agent_reward)?;
    let (advice, recovery_iterations) = dual::recover_advice(mdp, agent_reward, &dual.values)?;
    let lp_payoff: f64 = mdp
        .init_dist
        .iter()
        .zip(dual.values.iter())
        .map(|(z, v)| z * v)
        .sum();
    let policy = obedient_policy(mdp, &advice);
    let evaluated = exact_eval(mdp, &advice, &policy).map_err(eval_err)?;
    if (evaluated.principal_payoff - lp_payoff).abs() > tolerances::RECOVERY_MATCH {
        return Err(SolverError::RecoveryMismatch {
            expected: lp_payoff,
            actual: evaluated.principal_payoff,
            tol: tolerances::RECOVERY_MATCH,
        });
    }
    let iterations = dual.iterations + recovery_iterations;
    Ok(LpOutcome {
        advice,
        dual,
        lp_payoff,
        agent_payoff: evaluated.agent_payoff,
        iterations,
    })
}

/// Optimal Markovian signaling, as an incentive-compatible action advice,
/// against an agent that best-responds myopically to the given reward table
/// — the instance's own R̃ for a truly myopic agent, or the augmented table
/// R̃⁺ for the advice-myopic reduction.
pub fn opt_sig_myop(
    mdp: &PersuasionMDP,
    agent_reward: &RewardTable,
) -> Result<SolveReport, SolverError> {
    let start = Instant::now();
    let out = solve_advice(mdp, agent_reward)?;
    Ok(SolveReport {
        method: Method::Myop,
        strategy: Some(StrategyRepr::Advice {
            pi: out.advice.pi.clone(),
        }),
        principal_payoff: out.lp_payoff,
        agent_payoff: out.agent_payoff,
        diagnostics: Diagnostics {
            lp_status: Some(out.dual.status.clone()),
            iterations: out.iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
            dictation: None,
        },
    })
}

/// The advice-myopic pipeline, shared by [`opt_sig_am`] and
/// [`threat_strategy`]: augment the agent reward with the discounted
/// no-signaling continuation V̄, then solve as for a myopic agent.
fn am_pipeline(
    mdp: &PersuasionMDP,
) -> Result<(LpOutcome, RewardTable, ValueFunction), SolverError> {
    let (v_bar, _) = nosig_value(mdp)?;
    let r_plus = am_rewards_with(mdp, &v_bar);
    let out = solve_advice(mdp, &r_plus)?;
    Ok((out, r_plus, v_bar))
}

/// Optimal action advice against an advice-myopic agent: one that follows
/// advice while weighing the current step by the augmented reward R̃⁺.
pub fn opt_sig_am(mdp: &PersuasionMDP) -> Result<SolveReport, SolverError> {
    let start = Instant::now();
    let (out, _, _) = am_pipeline(mdp)?;
    Ok(SolveReport {
        method: Method::Am,
        strategy: Some(StrategyRepr::Advice {
            pi: out.advice.pi.clone(),
        }),
        principal_payoff: out.lp_payoff,
        agent_payoff: out.agent_payoff,
        diagnostics: Diagnostics {
            lp_status: Some(out.dual.status.clone()),
            iterations: out.iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
            dictation: None,
        },
    })
}

/// The one-memory threat strategy built on the advice-myopic optimum, with
/// its effectiveness against a far-sighted agent verified numerically: the
/// agent's optimal response to the threat is computed by value iteration on
/// the threat meta-MDP, and the resulting exact payoff must match the
/// advice-myopic optimum the threat secures.
pub fn threat_strategy(
    mdp: &PersuasionMDP,
) -> Result<(ThreatStrategy, SolveReport), SolverError> {
    let start = Instant::now();
    let (out, r_plus, _) = am_pipeline(mdp)?;
    let threat = ThreatStrategy::new(mdp, out.advice, &r_plus)?;
    let meta = build_threat_meta_mdp(mdp, &threat);
    let (_, response) = solve_mdp(&meta, TieBreak::AdvisedFirst)?;
    let evaluated = exact_eval(mdp, &threat, &response).map_err(eval_err)?;
    if (evaluated.principal_payoff - out.lp_payoff).abs() > tolerances::RECOVERY_MATCH {
        return Err(SolverError::CorollaryViolation {
            am: out.lp_payoff,
            threat: evaluated.principal_payoff,
            tol: tolerances::RECOVERY_MATCH,
        });
    }
    let report = SolveReport {
        method: Method::Threat,
        strategy: Some(StrategyRepr::Threat {
            base_pi: threat.base.pi.clone(),
        }),
        principal_payoff: out.lp_payoff,
        agent_payoff: evaluated.agent_payoff,
        diagnostics: Diagnostics {
            lp_status: Some(out.dual.status.clone()),
            iterations: out.iterations,
            wall_time_s: start.elapsed().as_secs_f64(),
            dictation: None,
        },
    };
    Ok((threat, report))
}

/// The no-signaling baseline: the principal commits to the uninformative
/// strategy ⊥ and the agent best-responds to the prior — myopically, or
/// far-sightedly by value iteration.
pub fn nosig(mdp: &PersuasionMDP, far_sighted: bool) -> Result<SolveReport, SolverError> {
    let start = Instant::now();
    let bottom = uninformative(mdp);
    let policy = if far_sighted {
        let (_, policy) = nosig_value(mdp)?;
        policy
    } else {
        myopic_prior_policy(mdp)
    };
    let evaluated = exact_eval(mdp, &bottom, &policy).map_err(eval_err)?;
    Ok(SolveReport {
        method: if far_sighted {
            Method::NosigFs
        } else {
            Method::NosigMyop
        },
        strategy: None,
        principal_payoff: evaluated.principal_payoff,
        agent_payoff: evaluated.agent_payoff,
        diagnostics: Diagnostics {
            wall_time_s: start.elapsed().as_secs_f64(),
            ..Diagnostics::default()
        },
    })
}

/// The myopic agent's best response to no information: at every state,
/// maximize the prior-expected one-step reward under the single opaque
/// signal of ⊥, breaking ties by lowest action index.
pub fn myopic_prior_policy(mdp: &PersuasionMDP) -> AgentPolicy {
    let mut policy = AgentPolicy::default();
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        let q: Vec<f64> = mdp
            .available(s)
            .iter()
            .map(|&a| prior_reward(mdp, s, a))
            .collect();
        let best = q.iter().fold(f64::NEG_INFINITY, |b, &x| b.max(x));
        let chosen = mdp
            .available(s)
            .iter()
            .zip(&q)
            .filter(|&(_, &qa)| qa >= best - tolerances::TIE)
            .map(|(&a, _)| a)
            .min()
            .expect("non-terminal states have available actions");
        policy.insert(s, Signal::Opaque(0), chosen);
    }
    policy
}

fn prior_reward(mdp: &PersuasionMDP, s: usize, a: usize) -> f64 {
    (0..mdp.n_thetas())
        .map(|th| mdp.prior[s][th] * mdp.agent_reward[s][th][a])
        .sum()
}

/// The full-control upper bound: the principal observes θ and acts itself.
///
/// Value iteration solves V(s) = E_θ max_a [R(s,θ,a) + γ·Σ P(s,a,s′)V(s′)]
/// — the expectation over θ is outside the max because the action may depend
/// on the realized parameter. The induced dictation also fixes the agent's
/// payoff, reported alongside.
pub fn full_control(mdp: &PersuasionMDP) -> Result<SolveReport, SolverError> {
    let start = Instant::now();
    let ns = mdp.n_states();
    let g = mdp.gamma;
    let r_max = mdp.max_abs_reward();
    let threshold = if g > 0.0 {
        tolerances::VALUE_ITERATION_INTERNAL * (1.0 - g) / g
    } else {
        f64::INFINITY
    };
    let budget = if g <= 0.0 || r_max <= 0.0 {
        1
    } else {
        let needed = (tolerances::VALUE_ITERATION * (1.0 - g) / r_max).ln() / g.ln();
        (10.0 * needed)
            .ceil()
            .clamp(1.0, tolerances::MAX_VI_ITERATIONS as f64) as usize
    };

    let mut v = vec![0.0_f64; ns];
    let mut next = vec![0.0_f64; ns];
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for _ in 0..budget {
        residual = 0.0;
        for s in 0..ns {
            next[s] = if mdp.is_terminal(s) {
                0.0
            } else {
                (0..mdp.n_thetas())
                    .map(|th| {
                        mdp.prior[s][th]
                            * mdp
                                .available(s)
                                .iter()
                                .map(|&a| q_principal(mdp, &v, s, th, a))
                                .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .sum()
            };
            residual = residual.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if residual <= threshold {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SolverError::Agent(AgentError::NonConvergence {
            budget,
            discount: g,
            residual,
        }));
    }

    // Dictation: the greedy action per (s, θ), lowest index on ties.
    let mut dictation: Vec<Vec<usize>> = vec![Vec::new(); ns];
    for s in 0..ns {
        if mdp.is_terminal(s) {
            continue;
        }
        for th in 0..mdp.n_thetas() {
            let q: Vec<f64> = mdp
                .available(s)
                .iter()
                .map(|&a| q_principal(mdp, &v, s, th, a))
                .collect();
            let best = q.iter().fold(f64::NEG_INFINITY, |b, &x| b.max(x));
            let chosen = mdp
                .available(s)
                .iter()
                .zip(&q)
                .filter(|&(_, &qa)| qa >= best - tolerances::TIE)
                .map(|(&a, _)| a)
                .min()
                .expect("non-empty action set");
            dictation[s].push(chosen);
        }
    }

    let principal_payoff: f64 = mdp.init_dist.iter().zip(&v).map(|(z, vs)| z * vs).sum();
    let agent_payoff = dictation_agent_payoff(mdp, &dictation)?;
    Ok(SolveReport {
        method: Method::FullControl,
        strategy: None,
        principal_payoff,
        agent_payoff,
        diagnostics: Diagnostics {
            lp_status: None,
            iterations: 0,
            wall_time_s: start.elapsed().as_secs_f64(),
            dictation: Some(dictation),
        },
    })
}

fn q_principal(mdp: &PersuasionMDP, v: &[f64], s: usize, th: usize, a: usize) -> f64 {
    mdp.principal_reward[s][th][a]
        + mdp.gamma
            * mdp.transition[s][a]
                .iter()
                .enumerate()
                .map(|(t, &p)| p * v[t])
                .sum::<f64>()
}

/// The agent's discounted payoff under a full-control dictation: the state
/// process is the Markov chain T(s,s′) = Σ_θ μ_s(θ)·P(s, d(s,θ), s′) with
/// per-state expected agent reward, evaluated by solving (I − γ̃T)·v = r.
fn dictation_agent_payoff(
    mdp: &PersuasionMDP,
    dictation: &[Vec<usize>],
) -> Result<f64, SolverError> {
    let ns = mdp.n_states();
    let mut t = nalgebra::DMatrix::<f64>::zeros(ns, ns);
    let mut r = nalgebra::DVector::<f64>::zeros(ns);
    for s in 0..ns {
        if mdp.is_terminal(s) {
            continue;
        }
        for th in 0..mdp.n_thetas() {
            let a = dictation[s][th];
            let mu = mdp.prior[s][th];
            r[s] += mu * mdp.agent_reward[s][th][a];
            for (sp, &p) in mdp.transition[s][a].iter().enumerate() {
                t[(s, sp)] += mu * p;
            }
        }
    }
    let system = nalgebra::DMatrix::<f64>::identity(ns, ns) - mdp.gamma_tilde * t;
    let v = system
        .lu()
        .solve(&r)
        .ok_or_else(|| SolverError::Eval("singular discounted chain system".to_string()))?;
    Ok(mdp.init_dist.iter().zip(v.iter()).map(|(z, vs)| z * vs).sum())
}
