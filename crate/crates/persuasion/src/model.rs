//! Core data types of the persuasion MDP, Bayesian posterior computation,
//! incentive-compatibility checking, and the revelation-principle transform.
//!
//! A persuasion MDP is played between a principal who privately observes a
//! per-step external parameter θ and an agent who only sees the state. The
//! principal commits to a signaling strategy; the agent updates beliefs from
//! each signal and acts. Both players collect their own discounted rewards:
//!
//! ```text
//! posterior:  Pr(θ | g, π_s) = μ_s(θ)·π_s(θ,g) / Σ_θ′ μ_s(θ′)·π_s(θ′,g)
//! obedience:  Σ_θ μ_s(θ)·π_s(θ,g_a)·(r(s,θ,a) − r(s,θ,b)) ≥ 0   for all b
//! ```
//!
//! The obedience (incentive-compatibility) check uses the unnormalized form —
//! the posterior's denominator is eliminated — so signals with zero marginal
//! probability impose no constraint.

use crate::agent::AgentPolicy;
use crate::tolerances;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A posterior belief over the external parameters, summing to 1.
pub type Posterior = Vec<f64>;

/// A reward table indexed `[state][theta][action]`; the shape shared by the
/// principal reward R, the agent reward R̃, and the augmented reward R̃⁺.
pub type RewardTable = Vec<Vec<Vec<f64>>>;

/// Errors from model construction and belief computation.
#[derive(Debug, Error)]
pub enum ModelError {
    /// The queried signal has zero marginal probability; Bayes' rule is
    /// undefined there.
    #[error("signal has zero marginal probability at state {state}; posterior undefined")]
    ZeroProbabilitySignal { state: usize },
    /// A field has the wrong dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A probability row does not sum to 1.
    #[error("{what} at {at} sums to {sum:.17}, expected 1 within {tol:e}")]
    RowSum {
        what: &'static str,
        at: String,
        sum: f64,
        tol: f64,
    },
    /// A probability entry is negative.
    #[error("{what} at {at} is negative: {value}")]
    Negative {
        what: &'static str,
        at: String,
        value: f64,
    },
    /// A numeric entry is NaN or infinite.
    #[error("{what} at {at} is not finite")]
    NotFinite { what: &'static str, at: String },
    /// A discount factor lies outside [0, 1).
    #[error("discount {name} = {value} out of range [0, 1)")]
    DiscountRange { name: &'static str, value: f64 },
    /// A non-terminal state has an empty available-action set.
    #[error("state {state} is non-terminal but has no available actions")]
    EmptyActions { state: usize },
    /// An available-action index is out of range.
    #[error("available action {action} at state {state} out of range (|A| = {n_actions})")]
    ActionRange {
        state: usize,
        action: usize,
        n_actions: usize,
    },
    /// Terminal states and unavailable actions must carry the canonical
    /// filler: a self-loop transition row and zero rewards for both players.
    #[error(
        "non-canonical {what} for action {action} at state {state}: terminal states and \
         unavailable actions must carry self-loop transitions and zero rewards"
    )]
    NonCanonical {
        what: &'static str,
        state: usize,
        action: usize,
    },
    /// An advice row puts probability on an action outside the state's
    /// available set.
    #[error("advice at state {state} puts probability {value} on unavailable action {action}")]
    SupportViolation {
        state: usize,
        action: usize,
        value: f64,
    },
    /// A threat strategy's base advice fails the incentive-compatibility
    /// check against the augmented reward.
    #[error(
        "threat base advice is not incentive-compatible w.r.t. the augmented reward \
         (violation {violation:.3e})"
    )]
    ThreatNotIc { violation: f64 },
    /// The queried signal does not belong to the strategy's signal space.
    #[error("signal {signal:?} is not a signal of this strategy at state {state}")]
    UnknownSignal { state: usize, signal: Signal },
}

/// One state of the environment MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Display name, carried through instance files for readability.
    pub name: String,
    /// Terminal states are absorbing with zero rewards for both players.
    pub terminal: bool,
}

/// A signal identifier within a strategy's signal space.
///
/// Action advice uses signals `Advice(a)` (the recommendation g_a); general
/// signaling uses opaque labels `Opaque(i)`; `Null` is the distinguished g_0
/// of the uninformative strategy ⊥ and of a threat strategy's punish mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    /// The uninformative signal g_0.
    Null,
    /// An action-recommendation signal g_a, carrying the global action index.
    Advice(usize),
    /// An opaque signal label of a general signaling strategy.
    Opaque(usize),
}

/// The full game description: a persuasion MDP
/// ℳ = ⟨S, A, P, Θ, (μ_s), R, R̃⟩ with discounts γ (principal), γ̃ (agent)
/// and initial state distribution z.
///
/// Construct instances with [`PersuasionMDP::canonicalize`], which sorts the
/// available-action sets, rewrites terminal states and unavailable actions to
/// the canonical filler (absorbing self-loops, zero rewards), and validates
/// every invariant. All fields are public for read access; mutating a
/// canonicalized instance voids the invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersuasionMDP {
    /// States, indexed 0..|S|−1.
    pub states: Vec<State>,
    /// Global action names, indexed 0..|A|−1.
    pub actions: Vec<String>,
    /// External parameter names, indexed 0..|Θ|−1.
    pub thetas: Vec<String>,
    /// Available actions A_s per state: sorted, deduplicated, nonempty for
    /// non-terminal states, empty for terminal states.
    #[serde(rename = "available_actions")]
    pub available: Vec<Vec<usize>>,
    /// Transition probabilities `transition[s][a][s']`.
    pub transition: Vec<Vec<Vec<f64>>>,
    /// Prior μ_s over Θ per state: `prior[s][θ]`.
    pub prior: Vec<Vec<f64>>,
    /// Principal reward R(s,θ,a): `principal_reward[s][θ][a]`.
    pub principal_reward: RewardTable,
    /// Agent reward R̃(s,θ,a): `agent_reward[s][θ][a]`.
    pub agent_reward: RewardTable,
    /// Principal discount γ ∈ [0, 1).
    pub gamma: f64,
    /// Agent discount γ̃ ∈ [0, 1).
    pub gamma_tilde: f64,
    /// Initial state distribution z.
    pub init_dist: Vec<f64>,
}

impl PersuasionMDP {
    /// Number of states |S|.
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    /// Number of global actions |A|.
    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// Number of external parameters |Θ|.
    pub fn n_thetas(&self) -> usize {
        self.thetas.len()
    }

    /// Whether state `s` is terminal.
    pub fn is_terminal(&self, s: usize) -> bool {
        self.states[s].terminal
    }

    /// The available actions A_s (sorted global indices; empty iff terminal).
    pub fn available(&self, s: usize) -> &[usize] {
        &self.available[s]
    }

    /// Largest absolute reward over both players and all available
    /// state-action pairs (≥ 0; 0 only for identically-zero rewards).
    pub fn max_abs_reward(&self) -> f64 {
        let mut m: f64 = 0.0;
        for s in 0..self.n_states() {
            for &a in &self.available[s] {
                for th in 0..self.n_thetas() {
                    m = m
                        .max(self.principal_reward[s][th][a].abs())
                        .max(self.agent_reward[s][th][a].abs());
                }
            }
        }
        m
    }

    /// Canonicalize a raw description and validate every invariant.
    ///
    /// Canonicalization sorts and deduplicates each available-action set,
    /// empties it for terminal states, and rewrites the entries that carry no
    /// game content — transition rows and rewards of terminal states and of
    /// unavailable actions — to the canonical filler (self-loop row, zero
    /// rewards). Validation then rejects malformed dimensions, unnormalized
    /// distributions, negative probabilities, non-finite rewards, and
    /// out-of-range discounts.
    pub fn canonicalize(mut self) -> Result<Self, ModelError> {
        self.check_shape()?;
        let n_states = self.n_states();
        for s in 0..n_states {
            if self.states[s].terminal {
                self.available[s].clear();
            } else {
                self.available[s].sort_unstable();
                self.available[s].dedup();
                for &a in &self.available[s] {
                    if a >= self.n_actions() {
                        return Err(ModelError::ActionRange {
                            state: s,
                            action: a,
                            n_actions: self.n_actions(),
                        });
                    }
                }
            }
            let avail = self.available[s].clone();
            for a in 0..self.n_actions() {
                if avail.binary_search(&a).is_err() {
                    self.transition[s][a] = (0..n_states).map(|t| f64::from(u8::from(t == s))).collect();
                    for th in 0..self.n_thetas() {
                        self.principal_reward[s][th][a] = 0.0;
                        self.agent_reward[s][th][a] = 0.0;
                    }
                }
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Validate all invariants of an already-canonical description. Called by
    /// [`PersuasionMDP::canonicalize`] and by the instance loader; rejects
    /// non-canonical filler instead of silently rewriting it, so a file always
    /// means what it says.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.check_shape()?;
        check_discount("gamma", self.gamma)?;
        check_discount("gamma_tilde", self.gamma_tilde)?;
        let n_states = self.n_states();
        for s in 0..n_states {
            if self.is_terminal(s) {
                if !self.available[s].is_empty() {
                    return Err(ModelError::Shape(format!(
                        "terminal state {s} lists available actions"
                    )));
                }
            } else {
                if self.available[s].is_empty() {
                    return Err(ModelError::EmptyActions { state: s });
                }
                if !self.available[s].windows(2).all(|w| w[0] < w[1]) {
                    return Err(ModelError::Shape(format!(
                        "available actions of state {s} are not sorted and unique"
                    )));
                }
                if let Some(&a) = self.available[s].last() {
                    if a >= self.n_actions() {
                        return Err(ModelError::ActionRange {
                            state: s,
                            action: a,
                            n_actions: self.n_actions(),
                        });
                    }
                }
            }
            for a in 0..self.n_actions() {
                if self.available[s].binary_search(&a).is_ok() {
                    check_distribution(
                        "transition row",
                        &format!("state {s}, action {a}"),
                        &self.transition[s][a],
                    )?;
                    for th in 0..self.n_thetas() {
                        for (table, what) in [
                            (&self.principal_reward, "principal reward"),
                            (&self.agent_reward, "agent reward"),
                        ] {
                            if !table[s][th][a].is_finite() {
                                return Err(ModelError::NotFinite {
                                    what,
                                    at: format!("state {s}, theta {th}, action {a}"),
                                });
                            }
                        }
                    }
                } else {
                    let canonical_row = self.transition[s][a]
                        .iter()
                        .enumerate()
                        .all(|(t, &p)| p == f64::from(u8::from(t == s)));
                    if !canonical_row {
                        return Err(ModelError::NonCanonical {
                            what: "transition row",
                            state: s,
                            action: a,
                        });
                    }
                    for th in 0..self.n_thetas() {
                        if self.principal_reward[s][th][a] != 0.0 || self.agent_reward[s][th][a] != 0.0
                        {
                            return Err(ModelError::NonCanonical {
                                what: "reward",
                                state: s,
                                action: a,
                            });
                        }
                    }
                }
            }
            check_distribution("prior", &format!("state {s}"), &self.prior[s])?;
        }
        check_distribution("initial distribution", "init_dist", &self.init_dist)?;
        Ok(())
    }

    fn check_shape(&self) -> Result<(), ModelError> {
        let (ns, na, nt) = (self.n_states(), self.n_actions(), self.n_thetas());
        if ns == 0 || na == 0 || nt == 0 {
            return Err(ModelError::Shape(
                "states, actions, and thetas must all be nonempty".into(),
            ));
        }
        let dims_ok = self.available.len() == ns
            && self.init_dist.len() == ns
            && self.prior.len() == ns
            && self.prior.iter().all(|row| row.len() == nt)
            && self.transition.len() == ns
            && self
                .transition
                .iter()
                .all(|per_a| per_a.len() == na && per_a.iter().all(|row| row.len() == ns))
            && [&self.principal_reward, &self.agent_reward].iter().all(|table| {
                table.len() == ns
                    && table
                        .iter()
                        .all(|per_th| per_th.len() == nt && per_th.iter().all(|row| row.len() == na))
            });
        if !dims_ok {
            return Err(ModelError::Shape(format!(
                "expected available[{ns}], transition[{ns}][{na}][{ns}], prior[{ns}][{nt}], \
                 rewards[{ns}][{nt}][{na}], init_dist[{ns}]"
            )));
        }
        Ok(())
    }
}

fn check_discount(name: &'static str, value: f64) -> Result<(), ModelError> {
    if !value.is_finite() || !(0.0..1.0).contains(&value) {
        return Err(ModelError::DiscountRange { name, value });
    }
    Ok(())
}

fn check_distribution(what: &'static str, at: &str, row: &[f64]) -> Result<(), ModelError> {
    let mut sum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() {
            return Err(ModelError::NotFinite {
                what,
                at: format!("{at}, entry {i}"),
            });
        }
        if p < 0.0 {
            return Err(ModelError::Negative {
                what,
                at: format!("{at}, entry {i}"),
                value: p,
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > tolerances::PROB_SUM {
        return Err(ModelError::RowSum {
            what,
            at: at.to_string(),
            sum,
            tol: tolerances::PROB_SUM,
        });
    }
    Ok(())
}

/// A Markovian signaling strategy over action-recommendation signals: one
/// stochastic mapping π_s(θ, g_a) per non-terminal state, with support
/// restricted to the available actions A_s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionAdvice {
    /// `pi[s][θ][a]`: probability of recommending global action `a` at state
    /// `s` when the external parameter is `θ`. Empty for terminal states.
    pub pi: Vec<Vec<Vec<f64>>>,
}

impl ActionAdvice {
    /// Validate an advice table against an MDP: per-(s,θ) rows sum to 1,
    /// entries are nonnegative, and support stays within A_s.
    pub fn new(mdp: &PersuasionMDP, pi: Vec<Vec<Vec<f64>>>) -> Result<Self, ModelError> {
        if pi.len() != mdp.n_states() {
            return Err(ModelError::Shape(format!(
                "advice has {} state rows, MDP has {} states",
                pi.len(),
                mdp.n_states()
            )));
        }
        for (s, per_theta) in pi.iter().enumerate() {
            if mdp.is_terminal(s) {
                if !per_theta.is_empty() {
                    return Err(ModelError::Shape(format!(
                        "advice rows present for terminal state {s}"
                    )));
                }
                continue;
            }
            if per_theta.len() != mdp.n_thetas()
                || per_theta.iter().any(|row| row.len() != mdp.n_actions())
            {
                return Err(ModelError::Shape(format!(
                    "advice at state {s} must be [{}][{}]",
                    mdp.n_thetas(),
                    mdp.n_actions()
                )));
            }
            for (th, row) in per_theta.iter().enumerate() {
                check_distribution("advice row", &format!("state {s}, theta {th}"), row)?;
                for (a, &p) in row.iter().enumerate() {
                    if p > 0.0 && mdp.available[s].binary_search(&a).is_err() {
                        return Err(ModelError::SupportViolation {
                            state: s,
                            action: a,
                            value: p,
                        });
                    }
                }
            }
        }
        Ok(Self { pi })
    }

    /// Marginal probability of the recommendation signal g_a at state `s`:
    /// Σ_θ μ_s(θ)·π_s(θ, g_a).
    pub fn signal_marginal(&self, mdp: &PersuasionMDP, s: usize, a: usize) -> f64 {
        (0..mdp.n_thetas())
            .map(|th| mdp.prior[s][th] * self.pi[s][th][a])
            .sum()
    }
}

/// A signaling strategy over an opaque finite signal set G: one stochastic
/// mapping π_s(θ) ∈ Δ(G) per non-terminal state.
///
/// The distinguished uninformative strategy ⊥ is the single-signal instance
/// produced by [`uninformative`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralSignaling {
    /// Size of the signal set G.
    pub n_signals: usize,
    /// `pi[s][θ][g]`: probability of sending signal `g` at state `s` under
    /// parameter `θ`. Empty for terminal states.
    pub pi: Vec<Vec<Vec<f64>>>,
}

impl GeneralSignaling {
    /// Validate a signaling table: per-(s,θ) rows over G sum to 1 and are
    /// nonnegative.
    pub fn new(
        mdp: &PersuasionMDP,
        n_signals: usize,
        pi: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self, ModelError> {
        if n_signals == 0 {
            return Err(ModelError::Shape("signal set must be nonempty".into()));
        }
        if pi.len() != mdp.n_states() {
            return Err(ModelError::Shape(format!(
                "signaling has {} state rows, MDP has {} states",
                pi.len(),
                mdp.n_states()
            )));
        }
        for (s, per_theta) in pi.iter().enumerate() {
            if mdp.is_terminal(s) {
                if !per_theta.is_empty() {
                    return Err(ModelError::Shape(format!(
                        "signaling rows present for terminal state {s}"
                    )));
                }
                continue;
            }
            if per_theta.len() != mdp.n_thetas()
                || per_theta.iter().any(|row| row.len() != n_signals)
            {
                return Err(ModelError::Shape(format!(
                    "signaling at state {s} must be [{}][{n_signals}]",
                    mdp.n_thetas()
                )));
            }
            for (th, row) in per_theta.iter().enumerate() {
                check_distribution("signaling row", &format!("state {s}, theta {th}"), row)?;
            }
        }
        Ok(Self { n_signals, pi })
    }

    /// Marginal probability of signal `g` at state `s`.
    pub fn signal_marginal(&self, mdp: &PersuasionMDP, s: usize, g: usize) -> f64 {
        (0..mdp.n_thetas())
            .map(|th| mdp.prior[s][th] * self.pi[s][th][g])
            .sum()
    }
}

/// A one-memory threat strategy ϖ: play the base action advice while the
/// agent obeys, and switch permanently to the uninformative strategy ⊥ after
/// the first deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreatStrategy {
    /// The advice played on the obedient path (an OptSig-AM solution).
    pub base: ActionAdvice,
}

impl ThreatStrategy {
    /// Wrap an advice as a threat strategy, checking that it is incentive
    /// compatible with respect to the augmented reward R̃⁺ — the property
    /// that makes the threat effective against a far-sighted agent.
    pub fn new(
        mdp: &PersuasionMDP,
        base: ActionAdvice,
        augmented_reward: &RewardTable,
    ) -> Result<Self, ModelError> {
        let (ic, violation) = is_ic(mdp, &base, augmented_reward);
        if !ic {
            return Err(ModelError::ThreatNotIc { violation });
        }
        Ok(Self { base })
    }
}

/// A borrowed view of either signaling representation, for operations that
/// accept both.
#[derive(Debug, Clone, Copy)]
pub enum SignalingRef<'a> {
    /// A general signaling strategy with opaque signals.
    General(&'a GeneralSignaling),
    /// An action advice with recommendation signals.
    Advice(&'a ActionAdvice),
}

impl<'a> From<&'a GeneralSignaling> for SignalingRef<'a> {
    fn from(s: &'a GeneralSignaling) -> Self {
        SignalingRef::General(s)
    }
}

impl<'a> From<&'a ActionAdvice> for SignalingRef<'a> {
    fn from(s: &'a ActionAdvice) -> Self {
        SignalingRef::Advice(s)
    }
}

/// A borrowed view of any strategy the principal can commit to, including
/// threat strategies whose signals depend on the agent's past obedience.
#[derive(Debug, Clone, Copy)]
pub enum StrategyRef<'a> {
    /// A general signaling strategy with opaque signals.
    General(&'a GeneralSignaling),
    /// An action advice with recommendation signals.
    Advice(&'a ActionAdvice),
    /// A one-memory threat strategy.
    Threat(&'a ThreatStrategy),
}

impl<'a> From<&'a GeneralSignaling> for StrategyRef<'a> {
    fn from(s: &'a GeneralSignaling) -> Self {
        StrategyRef::General(s)
    }
}

impl<'a> From<&'a ActionAdvice> for StrategyRef<'a> {
    fn from(s: &'a ActionAdvice) -> Self {
        StrategyRef::Advice(s)
    }
}

impl<'a> From<&'a ThreatStrategy> for StrategyRef<'a> {
    fn from(s: &'a ThreatStrategy) -> Self {
        StrategyRef::Threat(s)
    }
}

impl SignalingRef<'_> {
    /// The signals this strategy can send at non-terminal state `s`, in
    /// enumeration order, with their marginal probabilities (including zero
    /// marginals).
    pub fn signals(&self, mdp: &PersuasionMDP, s: usize) -> Vec<(Signal, f64)> {
        match self {
            SignalingRef::General(gs) => (0..gs.n_signals)
                .map(|g| (Signal::Opaque(g), gs.signal_marginal(mdp, s, g)))
                .collect(),
            SignalingRef::Advice(ad) => mdp
                .available(s)
                .iter()
                .map(|&a| (Signal::Advice(a), ad.signal_marginal(mdp, s, a)))
                .collect(),
        }
    }

    /// Probability π_s(θ, g) of sending signal `g` at `(s, θ)`.
    pub fn signal_prob(&self, s: usize, theta: usize, signal: Signal) -> Option<f64> {
        match (self, signal) {
            (SignalingRef::General(gs), Signal::Opaque(g)) if g < gs.n_signals => {
                Some(gs.pi[s][theta][g])
            }
            (SignalingRef::Advice(ad), Signal::Advice(a)) if a < ad.pi[s][theta].len() => {
                Some(ad.pi[s][theta][a])
            }
            _ => None,
        }
    }
}

/// Posterior belief Pr(θ | g, π_s) after observing signal `g` at state `s`.
///
/// Errors with [`ModelError::ZeroProbabilitySignal`] when the marginal
/// Σ_θ μ_s(θ)·π_s(θ,g) is zero (Bayes' rule undefined), and with
/// [`ModelError::UnknownSignal`] when `g` is not a signal of the strategy.
pub fn posterior<'a>(
    mdp: &PersuasionMDP,
    strategy: impl Into<SignalingRef<'a>>,
    s: usize,
    signal: Signal,
) -> Result<Posterior, ModelError> {
    let strategy = strategy.into();
    let mut weights = Vec::with_capacity(mdp.n_thetas());
    for th in 0..mdp.n_thetas() {
        let p = strategy
            .signal_prob(s, th, signal)
            .ok_or(ModelError::UnknownSignal { state: s, signal })?;
        weights.push(mdp.prior[s][th] * p);
    }
    let marginal: f64 = weights.iter().sum();
    if marginal <= 0.0 {
        return Err(ModelError::ZeroProbabilitySignal { state: s });
    }
    for w in &mut weights {
        *w /= marginal;
    }
    Ok(weights)
}

/// Joint distribution φ_s^π(θ, a) = μ_s(θ)·π_s(θ, g_a) over Θ×A induced at
/// state `s` by an obedient agent, as a dense `[θ][a]` matrix.
///
/// `s` must be non-terminal (advice is undefined at terminal states).
pub fn joint_distribution(
    mdp: &PersuasionMDP,
    advice: &ActionAdvice,
    s: usize,
) -> Vec<Vec<f64>> {
    assert!(
        !mdp.is_terminal(s),
        "joint_distribution: state {s} is terminal"
    );
    (0..mdp.n_thetas())
        .map(|th| {
            (0..mdp.n_actions())
                .map(|a| mdp.prior[s][th] * advice.pi[s][th][a])
                .collect()
        })
        .collect()
}

/// Incentive-compatibility check of an action advice against a reward table
/// (the agent reward R̃ for a myopic agent, the augmented R̃⁺ for an
/// advice-myopic agent).
///
/// Returns `(flag, max_violation)`: the flag is true iff for every state,
/// every recommendation with positive signal probability, and every available
/// alternative b,
///
/// ```text
/// Σ_θ μ_s(θ)·π_s(θ,g_a)·(reward(s,θ,a) − reward(s,θ,b)) ≥ −1e-9 ,
/// ```
///
/// and `max_violation` is the largest shortfall below 0 (0 when fully IC).
/// Zero-marginal recommendations impose no constraint — their left side is
/// identically 0.
pub fn is_ic(mdp: &PersuasionMDP, advice: &ActionAdvice, reward: &RewardTable) -> (bool, f64) {
    let mut max_violation: f64 = 0.0;
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for &a in mdp.available(s) {
            let marginal = advice.signal_marginal(mdp, s, a);
            if marginal <= 0.0 {
                continue;
            }
            for &b in mdp.available(s) {
                if b == a {
                    continue;
                }
                let lhs: f64 = (0..mdp.n_thetas())
                    .map(|th| {
                        mdp.prior[s][th]
                            * advice.pi[s][th][a]
                            * (reward[s][th][a] - reward[s][th][b])
                    })
                    .sum();
                if lhs < 0.0 {
                    max_violation = max_violation.max(-lhs);
                }
            }
        }
    }
    (max_violation <= tolerances::IC, max_violation)
}

/// The fully informative strategy: |Θ| distinct signals with π_s(θ) a point
/// mass on g_θ at every non-terminal state.
pub fn reveal_all(mdp: &PersuasionMDP) -> GeneralSignaling {
    let n_thetas = mdp.n_thetas();
    let pi = (0..mdp.n_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                Vec::new()
            } else {
                (0..n_thetas)
                    .map(|th| (0..n_thetas).map(|g| f64::from(u8::from(g == th))).collect())
                    .collect()
            }
        })
        .collect();
    GeneralSignaling {
        n_signals: n_thetas,
        pi,
    }
}

/// The completely uninformative strategy ⊥: a single signal g_0 sent
/// regardless of θ.
pub fn uninformative(mdp: &PersuasionMDP) -> GeneralSignaling {
    let pi = (0..mdp.n_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                Vec::new()
            } else {
                vec![vec![1.0]; mdp.n_thetas()]
            }
        })
        .collect();
    GeneralSignaling { n_signals: 1, pi }
}

/// Revelation-principle transform: merge the signals of a general strategy by
/// the action the agent's response takes on them,
///
/// ```text
/// π*_s(θ, g_a) = Σ_{g : σ(s,g) = a} π_s(θ, g) ,
/// ```
///
/// producing a payoff-equivalent incentive-compatible action advice
/// (`response` must be a best response to `strategy`; computing it is the
/// caller's responsibility).
///
/// Signals the response does not cover can only carry mass for zero-prior θ
/// (they are unreachable); that mass is routed to the lowest-index available
/// action to keep rows stochastic.
pub fn revelation_transform(
    mdp: &PersuasionMDP,
    strategy: &GeneralSignaling,
    response: &AgentPolicy,
) -> Result<ActionAdvice, ModelError> {
    let mut pi: Vec<Vec<Vec<f64>>> = (0..mdp.n_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                Vec::new()
            } else {
                vec![vec![0.0; mdp.n_actions()]; mdp.n_thetas()]
            }
        })
        .collect();
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        let fallback = mdp.available(s)[0];
        for g in 0..strategy.n_signals {
            let action = response.action(s, Signal::Opaque(g)).unwrap_or(fallback);
            for th in 0..mdp.n_thetas() {
                pi[s][th][action] += strategy.pi[s][th][g];
            }
        }
    }
    ActionAdvice::new(mdp, pi)
}
