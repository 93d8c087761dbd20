//! Parameter sweeps: ratio-to-full-control curves over seeded instance
//! batteries.
//!
//! A sweep fixes an instance family and a base spec, varies one parameter
//! over a grid, and generates `instances_per_point` instances per grid point
//! with seeds `base_seed + point_index·10⁶ + instance_index` — reproducible,
//! and collision-free for any realistic battery size. Each instance is
//! evaluated under the four signaling methods and full control, and the row
//! reports the mean and sample standard deviation (n−1 denominator) of the
//! per-instance ratios:
//!
//! * reward instances (the random family): method / full-control, so 1 is
//!   "as good as dictating actions";
//! * cost instances (road navigation, all payoffs negative): full-control /
//!   method, keeping the ratio in (0, 1] with the same reading.
//!
//! A full-control payoff at 0 in a reward instance — or either payoff
//! non-negative in a cost instance — makes the ratio meaningless; the row is
//! then flagged degenerate and its cells are NaN rather than silently
//! clamped.

use super::{evaluate_method, EvalError};
use crate::instances::{gen_random, gen_roadnav, RandomSpec, RoadNavSpec};
use crate::solver::Method;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Ratios are declared degenerate when the denominator-side payoff is this
/// close to zero (or a cost payoff this close to non-negative): far below
/// any payoff the generators can produce except by exact cancellation, far
/// above floating-point noise.
const DEGENERATE_EPS: f64 = 1e-12;

/// The four ratio columns, in table order.
const COLUMNS: [Method; 4] = [
    Method::NosigMyop,
    Method::NosigFs,
    Method::Myop,
    Method::Am,
];

/// The parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    /// Alignment β (both families).
    Beta,
    /// Principal discount γ (both families).
    Gamma,
    /// Agent discount γ̃ (both families).
    GammaTilde,
    /// Number of states |S| (random family).
    States,
    /// Number of actions |A| (random family).
    Actions,
    /// Number of parameter values |Θ| (both families).
    Thetas,
    /// Number of terminal states n* (random family).
    Terminals,
    /// Number of nodes n (road navigation).
    Nodes,
    /// Number of edges m (road navigation).
    Edges,
}

impl SweepParam {
    /// The kebab-case name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Beta => "beta",
            SweepParam::Gamma => "gamma",
            SweepParam::GammaTilde => "gamma-tilde",
            SweepParam::States => "states",
            SweepParam::Actions => "actions",
            SweepParam::Thetas => "thetas",
            SweepParam::Terminals => "terminals",
            SweepParam::Nodes => "nodes",
            SweepParam::Edges => "edges",
        }
    }

    const ALL: [SweepParam; 9] = [
        SweepParam::Beta,
        SweepParam::Gamma,
        SweepParam::GammaTilde,
        SweepParam::States,
        SweepParam::Actions,
        SweepParam::Thetas,
        SweepParam::Terminals,
        SweepParam::Nodes,
        SweepParam::Edges,
    ];
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SweepParam::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
                format!(
                    "unknown sweep parameter {s:?}; expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// The instance family swept over, carrying the fixed parameters. The spec's
/// own seed is ignored: sweeps derive per-instance seeds from `base_seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SweepFamily {
    /// Uniformly random reward instances; ratios are method/full-control.
    Random(RandomSpec),
    /// Road-navigation cost instances; ratios are full-control/method.
    RoadNav(RoadNavSpec),
}

/// A full sweep configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// The family and its fixed parameters.
    pub family: SweepFamily,
    /// Which parameter the grid varies.
    pub param: SweepParam,
    /// The grid of swept values, one row per entry.
    pub grid: Vec<f64>,
    /// Instances per grid point; at least 2 so the sample deviation exists.
    pub instances_per_point: usize,
    /// Base of the per-instance seed derivation.
    pub base_seed: u64,
}

/// One row of a sweep: the swept value, mean ratios, and their sample
/// standard deviations for the four methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// The swept parameter value.
    pub x: f64,
    /// Mean ratios: noSigMyop, noSigFS, optSigMyop, optSigAM.
    pub means: [f64; 4],
    /// Sample standard deviations, same order.
    pub sds: [f64; 4],
    /// Whether a ratio at this point was undefined; cells are NaN then.
    pub degenerate: bool,
}

fn as_count(x: f64) -> Result<usize, EvalError> {
    if x.is_finite() && x >= 0.0 && (x - x.round()).abs() < 1e-9 {
        Ok(x.round() as usize)
    } else {
        Err(EvalError::InvalidSweep(format!(
            "grid value {x} is not a valid count"
        )))
    }
}

fn specialized(family: &SweepFamily, param: SweepParam, x: f64) -> Result<SweepFamily, EvalError> {
    let unsupported = |family: &str| {
        Err(EvalError::InvalidSweep(format!(
            "parameter {param} cannot be swept for the {family} family"
        )))
    };
    match family {
        SweepFamily::Random(base) => {
            let mut spec = base.clone();
            match param {
                SweepParam::Beta => spec.beta = x,
                SweepParam::Gamma => spec.gamma = x,
                SweepParam::GammaTilde => spec.gamma_tilde = x,
                SweepParam::States => spec.n_states = as_count(x)?,
                SweepParam::Actions => spec.n_actions = as_count(x)?,
                SweepParam::Thetas => spec.n_thetas = as_count(x)?,
                SweepParam::Terminals => spec.n_terminals = as_count(x)?,
                SweepParam::Nodes | SweepParam::Edges => return unsupported("random"),
            }
            Ok(SweepFamily::Random(spec))
        }
        SweepFamily::RoadNav(base) => {
            let mut spec = base.clone();
            match param {
                SweepParam::Beta => spec.beta = x,
                SweepParam::Gamma => spec.gamma = x,
                SweepParam::GammaTilde => spec.gamma_tilde = x,
                SweepParam::Thetas => spec.n_thetas = as_count(x)?,
                SweepParam::Nodes => spec.n_nodes = as_count(x)?,
                SweepParam::Edges => spec.n_edges = as_count(x)?,
                SweepParam::States | SweepParam::Actions | SweepParam::Terminals => {
                    return unsupported("road-navigation")
                }
            }
            Ok(SweepFamily::RoadNav(spec))
        }
    }
}

/// Principal payoffs of the four methods plus full control for one seeded
/// instance of the configured family.
fn instance_payoffs(family: &SweepFamily, seed: u64) -> Result<[f64; 5], EvalError> {
    let mdp = match family {
        SweepFamily::Random(spec) => {
            let mut spec = spec.clone();
            spec.seed = seed;
            gen_random(&spec)?
        }
        SweepFamily::RoadNav(spec) => {
            let mut spec = spec.clone();
            spec.seed = seed;
            gen_roadnav(&spec)?
        }
    };
    let mut payoffs = [0.0; 5];
    for (slot, method) in payoffs.iter_mut().zip(
        COLUMNS
            .iter()
            .copied()
            .chain(std::iter::once(Method::FullControl)),
    ) {
        *slot = evaluate_method(&mdp, method)?.principal_payoff;
    }
    Ok(payoffs)
}

/// The per-instance ratio of a method payoff to the full-control payoff,
/// or None when it is undefined for the family's sign convention.
fn ratio(cost_family: bool, method: f64, full_control: f64) -> Option<f64> {
    if cost_family {
        if full_control > -DEGENERATE_EPS || method > -DEGENERATE_EPS {
            None
        } else {
            Some(full_control / method)
        }
    } else if full_control.abs() <= DEGENERATE_EPS {
        None
    } else {
        Some(method / full_control)
    }
}

/// Run a sweep: one row per grid value, instances evaluated in parallel,
/// assembly deterministic regardless of thread schedule.
pub fn sweep(config: &SweepConfig) -> Result<Vec<SweepRow>, EvalError> {
    if config.grid.is_empty() {
        return Err(EvalError::InvalidSweep("empty grid".to_string()));
    }
    if config.instances_per_point < 2 {
        return Err(EvalError::InvalidSweep(format!(
            "need at least 2 instances per point for a sample deviation, got {}",
            config.instances_per_point
        )));
    }
    let cost_family = matches!(config.family, SweepFamily::RoadNav(_));
    let n_inst = config.instances_per_point;

    // Grid/parameter mismatches are configuration mistakes: catch them all
    // before spending any solve time.
    let families: Vec<SweepFamily> = config
        .grid
        .iter()
        .map(|&x| specialized(&config.family, config.param, x))
        .collect::<Result<_, EvalError>>()?;

    let jobs: Vec<(usize, usize)> = (0..config.grid.len())
        .flat_map(|p| (0..n_inst).map(move |i| (p, i)))
        .collect();
    let payoffs: Vec<[f64; 5]> = jobs
        .par_iter()
        .map(|&(p, i)| {
            let seed = config
                .base_seed
                .wrapping_add(p as u64 * 1_000_000)
                .wrapping_add(i as u64);
            instance_payoffs(&families[p], seed).map_err(|e| EvalError::PointFailure {
                index: p,
                x: config.grid[p],
                instance: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<_, EvalError>>()?;

    let mut rows = Vec::with_capacity(config.grid.len());
    for (p, &x) in config.grid.iter().enumerate() {
        let mut columns: [Vec<f64>; 4] = Default::default();
        let mut degenerate = false;
        for i in 0..n_inst {
            let vals = &payoffs[p * n_inst + i];
            for (c, col) in columns.iter_mut().enumerate() {
                match ratio(cost_family, vals[c], vals[4]) {
                    Some(r) => col.push(r),
                    None => degenerate = true,
                }
            }
        }
        let mut means = [f64::NAN; 4];
        let mut sds = [f64::NAN; 4];
        if !degenerate {
            for c in 0..4 {
                let n = columns[c].len() as f64;
                let mean = columns[c].iter().sum::<f64>() / n;
                let var = columns[c]
                    .iter()
                    .map(|r| (r - mean) * (r - mean))
                    .sum::<f64>()
                    / (n - 1.0);
                means[c] = mean;
                sds[c] = var.max(0.0).sqrt();
            }
        }
        rows.push(SweepRow {
            x,
            means,
            sds,
            degenerate,
        });
    }
    Ok(rows)
}

/// The exact header of the `.dat` table.
pub const DAT_HEADER: &str = "x\tnoSigMyop\tnoSigFS\toptSigMyop\toptSigAM\t\
                              StdDev_noSigMyop\tStdDev_noSigFS\tStdDev_optSigMyop\tStdDev_optSigAM";

/// Format a value with 6 significant digits, C `%.6g` style: fixed notation
/// for moderate magnitudes, exponential with a two-digit exponent otherwise,
/// trailing zeros trimmed.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if !x.is_finite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponential format has an e");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { "-" } else { "+" }, exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Write sweep rows as a tab-separated `.dat` table.
pub fn write_dat(rows: &[SweepRow], path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut out = String::from(DAT_HEADER);
    out.push('\n');
    for row in rows {
        let mut cells = Vec::with_capacity(9);
        cells.push(format_g6(row.x));
        cells.extend(row.means.iter().map(|&v| format_g6(v)));
        cells.extend(row.sds.iter().map(|&v| format_g6(v)));
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    std::fs::write(path, out)
}
