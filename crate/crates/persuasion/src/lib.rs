//! Dynamic Bayesian persuasion in Markov decision processes.
//!
//! A principal who privately observes an external parameter θ commits to a
//! Markovian signaling strategy in an MDP whose agent acts on posterior
//! beliefs. This crate models those instances, solves for optimal signaling
//! against myopic and advice-myopic agents by linear programming, secures
//! the same payoff against far-sighted agents with one-memory threat
//! strategies, and evaluates everything exactly or by simulation:
//!
//! * [`model`] — instances, signaling strategies, posteriors, incentive
//!   compatibility;
//! * [`agent`] — meta-MDPs over (state, signal) pairs and the agent's best
//!   responses by value iteration;
//! * [`solver`] — the LP pipelines, baselines, and the full-control bound;
//! * [`instances`] — seeded generators for random, road-navigation, and
//!   independent-set-gadget instances, plus file I/O;
//! * [`eval`] — exact and Monte Carlo evaluation, and ratio sweeps;
//! * [`tolerances`] — every numeric tolerance, centralized and justified.

// Indexed loops over states, parameters, and actions mirror the tabular
// structure of the model; iterator rewrites would obscure that shape.
#![allow(clippy::needless_range_loop)]

pub mod agent;
pub mod eval;
pub mod instances;
pub mod model;
pub mod solver;
pub mod tolerances;

pub use agent::{
    am_rewards, build_meta_mdp, build_threat_meta_mdp, myopic_response, nosig_value,
    obedient_policy, solve_mdp, AgentError, AgentPolicy, MetaMDP, TieBreak, ValueFunction,
};
pub use eval::sweep::{
    format_g6, sweep, write_dat, SweepConfig, SweepFamily, SweepParam, SweepRow,
};
pub use eval::{evaluate_method, exact_eval, rollout, EvalError, EvalResult, McSummary};
pub use instances::{
    gen_indset_gadget, gen_random, gen_roadnav, gen_roadnav_with_layout, indset_strategy,
    load_instance, parse_graph, save_instance, GadgetMap, Graph, InstanceError, RandomSpec,
    RoadNavSpec,
};
pub use model::{
    is_ic, joint_distribution, posterior, reveal_all, revelation_transform, uninformative,
    ActionAdvice, GeneralSignaling, ModelError, PersuasionMDP, Posterior, RewardTable, Signal,
    State, StrategyRef, ThreatStrategy,
};
pub use solver::{
    full_control, myopic_prior_policy, nosig, opt_sig_am, opt_sig_myop, solve, threat_strategy,
    Diagnostics, Method, SolveReport, SolverError, StrategyRepr,
};
