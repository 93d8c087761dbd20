//! Uniformly random persuasion MDPs.
//!
//! Every quantity is drawn from one seeded ChaCha8 stream in a frozen order,
//! so instances are exactly reproducible from the spec alone:
//!
//!   1. transition rows, state-major then action then successor, each row
//!      uniform on [0,1) and normalized;
//!   2. the initial distribution, drawn and normalized the same way;
//!   3. per-state priors over θ, drawn and normalized;
//!   4. principal rewards `R[s][θ][a]`, uniform on [0,1);
//!   5. agent rewards `R̃[s][θ][a]`, uniform on [0,1);
//!   6. the alignment blend R̃ ← (1−|β|)·R̃ + β·R, elementwise — β = 1 aligns
//!      the agent exactly with the principal, β = −1 opposes them exactly,
//!      β = 0 leaves the draw untouched;
//!   7. the n* terminal states, sampled uniformly without replacement.
//!
//! Terminal rows are then rewritten to the canonical filler (self-loop,
//! zero rewards, no actions).

use super::InstanceError;
use crate::model::{PersuasionMDP, State};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Spec for a uniformly random instance. The seed is part of the spec: a
/// spec value identifies one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSpec {
    /// Number of states |S|.
    pub n_states: usize,
    /// Number of global actions |A|; every non-terminal state gets all of
    /// them.
    pub n_actions: usize,
    /// Number of external parameter values |Θ|.
    pub n_thetas: usize,
    /// Number of terminal states n*, strictly less than |S|.
    pub n_terminals: usize,
    /// Alignment parameter β ∈ [−1, 1] blending the agent reward toward
    /// (+1) or against (−1) the principal's.
    pub beta: f64,
    /// Principal discount γ ∈ [0, 1).
    pub gamma: f64,
    /// Agent discount γ̃ ∈ [0, 1).
    pub gamma_tilde: f64,
    /// Seed of the generator stream.
    pub seed: u64,
}

impl Default for RandomSpec {
    /// The experiment defaults: |S| = |A| = |Θ| = 10, n* = 5, β = 0,
    /// γ = γ̃ = 0.8.
    fn default() -> Self {
        Self {
            n_states: 10,
            n_actions: 10,
            n_thetas: 10,
            n_terminals: 5,
            beta: 0.0,
            gamma: 0.8,
            gamma_tilde: 0.8,
            seed: 0,
        }
    }
}

impl RandomSpec {
    fn validate(&self) -> Result<(), InstanceError> {
        if self.n_states == 0 || self.n_actions == 0 || self.n_thetas == 0 {
            return Err(InstanceError::InvalidSpec(
                "state, action, and parameter counts must be positive".to_string(),
            ));
        }
        if self.n_terminals >= self.n_states {
            return Err(InstanceError::InvalidSpec(format!(
                "need n_terminals < n_states, got {} >= {}",
                self.n_terminals, self.n_states
            )));
        }
        if !(-1.0..=1.0).contains(&self.beta) || !self.beta.is_finite() {
            return Err(InstanceError::InvalidSpec(format!(
                "beta must lie in [-1, 1], got {}",
                self.beta
            )));
        }
        for (name, g) in [("gamma", self.gamma), ("gamma_tilde", self.gamma_tilde)] {
            if !(0.0..1.0).contains(&g) {
                return Err(InstanceError::InvalidSpec(format!(
                    "{name} must lie in [0, 1), got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Draw `n` values uniform on [0,1) and normalize them into a distribution.
/// An all-zero draw (probability zero, but cheap to guard) falls back to the
/// uniform distribution.
fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.into_iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / n as f64; n]
    }
}

/// Generate a uniformly random instance from its spec.
pub fn gen_random(spec: &RandomSpec) -> Result<PersuasionMDP, InstanceError> {
    spec.validate()?;
    let (ns, na, nt) = (spec.n_states, spec.n_actions, spec.n_thetas);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let transition: Vec<Vec<Vec<f64>>> = (0..ns)
        .map(|_| (0..na).map(|_| random_dist(&mut rng, ns)).collect())
        .collect();
    let init_dist = random_dist(&mut rng, ns);
    let prior: Vec<Vec<f64>> = (0..ns).map(|_| random_dist(&mut rng, nt)).collect();
    let principal_reward: Vec<Vec<Vec<f64>>> = (0..ns)
        .map(|_| {
            (0..nt)
                .map(|_| (0..na).map(|_| rng.random::<f64>()).collect())
                .collect()
        })
        .collect();
    let mut agent_reward: Vec<Vec<Vec<f64>>> = (0..ns)
        .map(|_| {
            (0..nt)
                .map(|_| (0..na).map(|_| rng.random::<f64>()).collect())
                .collect()
        })
        .collect();
    let keep = 1.0 - spec.beta.abs();
    for s in 0..ns {
        for th in 0..nt {
            for a in 0..na {
                agent_reward[s][th][a] =
                    keep * agent_reward[s][th][a] + spec.beta * principal_reward[s][th][a];
            }
        }
    }
    let terminal_picks = rand::seq::index::sample(&mut rng, ns, spec.n_terminals);
    let mut terminal = vec![false; ns];
    for s in terminal_picks {
        terminal[s] = true;
    }

    let mdp = PersuasionMDP {
        states: (0..ns)
            .map(|s| State {
                name: format!("s{s}"),
                terminal: terminal[s],
            })
            .collect(),
        actions: (0..na).map(|a| format!("a{a}")).collect(),
        thetas: (0..nt).map(|th| format!("theta{th}")).collect(),
        available: (0..ns).map(|_| (0..na).collect()).collect(),
        transition,
        prior,
        principal_reward,
        agent_reward,
        gamma: spec.gamma,
        gamma_tilde: spec.gamma_tilde,
        init_dist,
    };
    Ok(mdp.canonicalize()?)
}
