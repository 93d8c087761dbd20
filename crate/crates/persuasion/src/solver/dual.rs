//! The persuasion Bellman operator as one global linear program, via
//! per-state LP duality.
//!
//! For a fixed continuation value V, the principal's best incentive-
//! compatible advice at state s solves the per-state primal over
//! π(θ,a), a ∈ A_s:
//!
//! ```text
//! max  Σ_{θ,a} c(θ,a)·π(θ,a),   c(θ,a) = μ_s(θ)·(R(s,θ,a) + γ·Σ_{s′} P(s,a,s′)·V(s′))
//! s.t. Σ_θ μ_s(θ)·π(θ,a)·(R̃(s,θ,a) − R̃(s,θ,b)) ≥ 0   ∀ a, b ∈ A_s, b ≠ a
//!      Σ_a π(θ,a) = 1                                   ∀ θ
//!      π ≥ 0
//! ```
//!
//! Its dual, with multipliers I_s(a,b) ≥ 0 on the obedience rows and free
//! J_s(θ) on the normalization rows, minimizes Σ_θ J_s(θ) subject to
//!
//! ```text
//! J_s(θ) ≥ c(θ,a) + μ_s(θ)·Σ_{b≠a} I_s(a,b)·(R̃(s,θ,a) − R̃(s,θ,b))   ∀ θ, a ∈ A_s .
//! ```
//!
//! Therefore "V(s) is at least the one-step optimum under continuation V"
//! is itself a linear condition: V(s) ≥ Σ_θ J_s(θ) for some dual-feasible
//! (I_s, J_s). Stacking these rows for every non-terminal state describes
//! {V : V ≥ TV}, and minimizing a strictly positive weighting of V over it
//! pins the unique fixed point V* = TV* — the principal's optimal values —
//! in a single LP with no iteration.
//!
//! Recovery then re-solves each per-state primal at V* and reads off an
//! optimal advice. Initial-state weights are floored at a small ε so states
//! outside the support of z still get exact values.

use crate::agent::ValueFunction;
use crate::model::{ActionAdvice, PersuasionMDP, RewardTable};
use crate::solver::lp::{Cmp, LinearProgram, LpSolution, Sense};
use crate::solver::SolverError;
use crate::tolerances;

/// Result of the global dual LP: optimal values per state (0 at terminals)
/// and backend statistics.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// The principal's optimal value V*(s), indexed by state.
    pub values: ValueFunction,
    /// Weighted objective Σ_s w_s·V*(s) actually minimized.
    pub objective: f64,
    /// Backend termination status.
    pub status: String,
    /// Interior-point iterations spent.
    pub iterations: u64,
}

/// Variable layout of the global dual LP.
struct VarMap {
    /// LP variable of V(s) for non-terminal s.
    v: Vec<Option<usize>>,
    /// LP variable of I_s(a,b) keyed by the position of (a,b) in the ordered
    /// pair enumeration of A_s; `i_base[s]` is the first such variable.
    i_base: Vec<usize>,
    /// LP variable of J_s(θ): `j_base[s] + θ`.
    j_base: Vec<usize>,
    n: usize,
}

impl VarMap {
    fn new(mdp: &PersuasionMDP) -> Self {
        let ns = mdp.n_states();
        let mut map = VarMap {
            v: vec![None; ns],
            i_base: vec![usize::MAX; ns],
            j_base: vec![usize::MAX; ns],
            n: 0,
        };
        for s in 0..ns {
            if mdp.is_terminal(s) {
                continue;
            }
            map.v[s] = Some(map.n);
            map.n += 1;
        }
        for s in 0..ns {
            if mdp.is_terminal(s) {
                continue;
            }
            let k = mdp.available(s).len();
            map.i_base[s] = map.n;
            map.n += k * (k - 1);
            map.j_base[s] = map.n;
            map.n += mdp.n_thetas();
        }
        map
    }

    /// Variable of I_s(a,b) with a, b positions in A_s (pa ≠ pb).
    fn i_var(&self, mdp: &PersuasionMDP, s: usize, pa: usize, pb: usize) -> usize {
        let k = mdp.available(s).len();
        let off = pa * (k - 1) + if pb < pa { pb } else { pb - 1 };
        self.i_base[s] + off
    }
}

/// Solve the global dual LP for the principal's optimal value function
/// against an agent best-responding myopically to `agent_reward` (the plain
/// R̃, or the augmented R̃⁺ of the advice-myopic reduction).
pub fn solve_dual_lp(
    mdp: &PersuasionMDP,
    agent_reward: &RewardTable,
) -> Result<DualSolution, SolverError> {
    let map = VarMap::new(mdp);
    let mut lp = LinearProgram::new(map.n, Sense::Minimize);
    let floor = tolerances::EPS_WEIGHT / mdp.n_states() as f64;
    for s in 0..mdp.n_states() {
        let Some(v_s) = map.v[s] else { continue };
        lp.objective[v_s] = mdp.init_dist[s].max(floor);
    }
    for s in 0..mdp.n_states() {
        let Some(v_s) = map.v[s] else { continue };
        let avail = mdp.available(s);

        // V(s) ≥ Σ_θ J_s(θ)
        let mut row = vec![(v_s, 1.0)];
        for th in 0..mdp.n_thetas() {
            row.push((map.j_base[s] + th, -1.0));
        }
        lp.push(row, Cmp::Ge, 0.0);

        // J_s(θ) − μ(θ)·Σ_{b≠a} I_s(a,b)·(R̃_a − R̃_b) − γ·μ(θ)·Σ_{s′} P·V(s′)
        //   ≥ μ(θ)·R(s,θ,a)
        for th in 0..mdp.n_thetas() {
            let mu = mdp.prior[s][th];
            for (pa, &a) in avail.iter().enumerate() {
                let mut row = vec![(map.j_base[s] + th, 1.0)];
                for (pb, &b) in avail.iter().enumerate() {
                    if pb == pa {
                        continue;
                    }
                    let gap = agent_reward[s][th][a] - agent_reward[s][th][b];
                    row.push((map.i_var(mdp, s, pa, pb), -mu * gap));
                }
                for (t, &p) in mdp.transition[s][a].iter().enumerate() {
                    if p <= 0.0 {
                        continue;
                    }
                    if let Some(v_t) = map.v[t] {
                        row.push((v_t, -mdp.gamma * mu * p));
                    }
                }
                lp.push(row, Cmp::Ge, mu * mdp.principal_reward[s][th][a]);
            }
        }
        // I_s(a,b) ≥ 0
        let k = avail.len();
        for off in 0..k * (k - 1) {
            lp.lower[map.i_base[s] + off] = 0.0;
        }
    }

    let solution = crate::solver::lp::lp_solve(&lp)?;
    let mut values = vec![0.0; mdp.n_states()];
    for s in 0..mdp.n_states() {
        if let Some(v_s) = map.v[s] {
            values[s] = solution.x[v_s];
        }
    }
    Ok(DualSolution {
        values: ValueFunction(values),
        objective: solution.objective,
        status: solution.status,
        iterations: solution.iterations,
    })
}

/// Re-solve each per-state primal at the optimal values and assemble the
/// optimal incentive-compatible advice.
///
/// Interior-point optima may sit strictly inside the optimal face; rows are
/// clipped at zero and renormalized before validation, so the returned
/// advice is an exact distribution with the same payoff up to solver
/// accuracy. Recommendation signals whose marginal survives only as
/// numerical dust are pruned entirely — they would otherwise enter the
/// meta-MDP as reachable states with noise-ratio posteriors. Returns the
/// advice and the total iterations across the per-state solves.
pub fn recover_advice(
    mdp: &PersuasionMDP,
    agent_reward: &RewardTable,
    values: &ValueFunction,
) -> Result<(ActionAdvice, u64), SolverError> {
    let nt = mdp.n_thetas();
    let mut pi: Vec<Vec<Vec<f64>>> = Vec::with_capacity(mdp.n_states());
    let mut iterations = 0u64;
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            pi.push(Vec::new());
            continue;
        }
        let avail = mdp.available(s);
        let k = avail.len();
        let var = |th: usize, pa: usize| th * k + pa;

        let mut lp = LinearProgram::new(nt * k, Sense::Maximize);
        for th in 0..nt {
            let mu = mdp.prior[s][th];
            for (pa, &a) in avail.iter().enumerate() {
                let continuation: f64 = mdp.transition[s][a]
                    .iter()
                    .enumerate()
                    .map(|(t, &p)| p * values[t])
                    .sum();
                lp.objective[var(th, pa)] =
                    mu * (mdp.principal_reward[s][th][a] + mdp.gamma * continuation);
                lp.lower[var(th, pa)] = 0.0;
            }
        }
        for (pa, &a) in avail.iter().enumerate() {
            for &b in avail {
                if b == a {
                    continue;
                }
                let row: Vec<(usize, f64)> = (0..nt)
                    .map(|th| {
                        let gap = agent_reward[s][th][a] - agent_reward[s][th][b];
                        (var(th, pa), mdp.prior[s][th] * gap)
                    })
                    .collect();
                lp.push(row, Cmp::Ge, 0.0);
            }
        }
        for th in 0..nt {
            let row: Vec<(usize, f64)> = (0..k).map(|pa| (var(th, pa), 1.0)).collect();
            lp.push(row, Cmp::Eq, 1.0);
        }

        let solution: LpSolution = crate::solver::lp::lp_solve(&lp)?;
        iterations += solution.iterations;

        let mut rows = vec![vec![0.0; mdp.n_actions()]; nt];
        for th in 0..nt {
            let mut mass = 0.0;
            for pa in 0..k {
                let p = solution.x[var(th, pa)].max(0.0);
                rows[th][avail[pa]] = p;
                mass += p;
            }
            if mass <= 0.0 {
                return Err(SolverError::Lp(
                    crate::solver::lp::LpError::NumericalFailure(format!(
                        "recovered advice row has no mass at state {s}, theta {th}"
                    )),
                ));
            }
            for pa in 0..k {
                rows[th][avail[pa]] /= mass;
            }
        }

        // Prune recommendation columns whose marginal is interior-point dust:
        // they would survive as reachable meta-states with posteriors formed
        // from noise ratios, outside what the IC constraints control.
        let marginal_of = |rows: &[Vec<f64>], a: usize| -> f64 {
            (0..nt).map(|th| mdp.prior[s][th] * rows[th][a]).sum()
        };
        let dusty: Vec<usize> = avail
            .iter()
            .copied()
            .filter(|&a| {
                let m = marginal_of(&rows, a);
                m > 0.0 && m <= tolerances::DUST_MARGINAL
            })
            .collect();
        if !dusty.is_empty() {
            let kept: Vec<usize> = avail
                .iter()
                .copied()
                .filter(|&a| marginal_of(&rows, a) > tolerances::DUST_MARGINAL)
                .collect();
            if kept.is_empty() {
                return Err(SolverError::Lp(
                    crate::solver::lp::LpError::NumericalFailure(format!(
                        "recovered advice at state {s} has no signal above the dust threshold"
                    )),
                ));
            }
            for row in &mut rows {
                for &a in &dusty {
                    row[a] = 0.0;
                }
                let mass: f64 = row.iter().sum();
                if mass > 0.0 {
                    for p in row.iter_mut() {
                        *p /= mass;
                    }
                } else {
                    // The whole row rode on dust columns, which forces a
                    // vanishing prior on this θ; any distribution is payoff-
                    // irrelevant, so spread it over the kept signals.
                    for &a in &kept {
                        row[a] = 1.0 / kept.len() as f64;
                    }
                }
            }
        }
        pi.push(rows);
    }
    let advice = ActionAdvice::new(mdp, pi)?;
    Ok((advice, iterations))
}
