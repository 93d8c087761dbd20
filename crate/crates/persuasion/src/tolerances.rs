//! Centralized numerical tolerances.
//!
//! Every threshold used by the solvers, evaluators, and validators is defined
//! here with its rationale. No other module defines its own magic numbers for
//! comparisons.
//!
//! The thresholds fall into three tiers:
//!
//! | Tier | Basis | Examples |
//! |------|-------|----------|
//! | exact input data | distributions must be given exactly | [`PROB_SUM`] |
//! | solver accuracy | what the LP / value iteration deliver | [`LP_FEASIBILITY`], [`VALUE_ITERATION`] |
//! | cross-checks | agreement between two independent computations | [`EVAL_MATCH`], [`RECOVERY_MATCH`] |

/// Probability rows (transition rows, priors, the initial distribution,
/// signaling rows) must sum to 1 within this tolerance.
///
/// Inputs are constructed by normalizing finite vectors, so the only slack
/// needed is the rounding of one summation pass: ~|row|·ε_f64 ≪ 1e-12.
pub const PROB_SUM: f64 = 1e-12;

/// Incentive-compatibility slack on the unnormalized obedience constraint
/// Σ_θ μ_s(θ)·π_s(θ,g_a)·(reward(s,θ,a) − reward(s,θ,b)) ≥ −IC.
///
/// The unnormalized form avoids dividing by near-zero signal probabilities;
/// 1e-9 absorbs LP rounding in recovered strategies while rejecting any real
/// profitable deviation on O(1) reward scales.
pub const IC: f64 = 1e-9;

/// Feasibility tolerance of the linear-programming contract: on an Optimal
/// status every constraint of the input LP holds within this bound, and the
/// objective is within it of the optimum.
pub const LP_FEASIBILITY: f64 = 1e-7;

/// Agreement required between a reported payoff and its re-evaluation by the
/// exact evaluator (SolveReport consistency, Corollary-1 equality, ordering
/// chains).
pub const EVAL_MATCH: f64 = 1e-6;

/// Agreement required between the dual-LP objective and the payoff of the
/// per-state recovered advice, and between the threat payoff and the verified
/// far-sighted response value. Looser than [`EVAL_MATCH`] because two LP
/// solves and a linear system stand between the two numbers.
pub const RECOVERY_MATCH: f64 = 1e-5;

/// Guaranteed sup-norm accuracy of value iteration: returned value functions
/// are within this distance of the optimal fixed point. The iteration budget
/// is derived from this bound.
pub const VALUE_ITERATION: f64 = 1e-9;

/// Internal stopping target of value iteration, one decade tighter than the
/// [`VALUE_ITERATION`] contract so that greedy tie detection at [`TIE`] is
/// trustworthy: Q-values computed from a 1e-10-accurate V differ from their
/// exact counterparts by well under 1e-9.
pub const VALUE_ITERATION_INTERNAL: f64 = 1e-10;

/// Two Q-values (or expected rewards) within this distance count as tied when
/// extracting a greedy policy; the advised action is preferred among ties,
/// then the lowest action index.
pub const TIE: f64 = 1e-9;

/// Bellman tightness required of the recovered dual solution: at every state,
/// V(s) matches the one-step persuasion Bellman backup of the recovered
/// advice within this bound.
pub const BELLMAN_TIGHT: f64 = 1e-6;

/// Sup-norm Bellman residual allowed for any (value, policy) pair returned by
/// the best-response solver (tested invariant; follows from
/// [`VALUE_ITERATION_INTERNAL`] with a wide margin).
pub const BELLMAN_RESIDUAL: f64 = 1e-8;

/// Blend weight floor for the dual LP objective: every state receives weight
/// max(z_s, EPS_WEIGHT/|S|) so the minimizer pins the Bellman fixed point at
/// every state, including those the initial distribution ignores. The
/// reported payoff still uses the true z.
pub const EPS_WEIGHT: f64 = 1e-6;

/// Recommendation signals whose marginal probability in a recovered advice is
/// positive but at most this threshold are pruned (column zeroed, rows
/// renormalized).
///
/// Interior-point solvers report optimal-face zeros as small positives
/// (~1e-12). Kept as-is, such a signal becomes a reachable meta-state whose
/// posterior is a ratio of noise terms, and the obedience guarantees — which
/// control only marginal-weighted deviations — say nothing useful about it.
/// Pruning shifts any payoff by at most the pruned mass times the payoff
/// scale, far inside [`RECOVERY_MATCH`].
pub const DUST_MARGINAL: f64 = 1e-9;

/// Truncation threshold of the default Monte-Carlo horizon: the horizon H is
/// the smallest integer with γ^H·R_max/(1−γ) ≤ EPS_TRUNCATION.
pub const EPS_TRUNCATION: f64 = 1e-6;

/// Hard cap on the Monte-Carlo horizon.
pub const MAX_HORIZON: usize = 100_000;

/// Hard cap on value-iteration sweeps.
pub const MAX_VI_ITERATIONS: u64 = 1_000_000;

/// Payoff identities proved exactly by the paper-level arguments (gadget
/// identity |N*|·γ²/m, revelation-transform payoff preservation) must hold to
/// this tolerance — solver accuracy only, no statistical slack.
pub const PAYOFF_IDENTITY: f64 = 1e-9;
