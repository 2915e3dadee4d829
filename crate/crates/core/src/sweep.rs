//! Parameter sweeps over the network-average maximum price, with a
//! matched-average convention so the three intervention problems compete
//! on equal budgets.
//!
//! At each sweep point, the average per-agent price raise allowance equals
//! `pbar_max - mean(p_a0)` for every problem: heterogeneous bounds for the
//! per-agent problem (seeded multiplicative jitter around the average,
//! renormalized), one uniform cap per component for the component-wise
//! problem, and `rho_max + budget` for redistribution.

use crate::error::{Error, Result};
use crate::game::{leontief_bundle, welfare_at, GameParams, PriceProfile};
use crate::network::Network;
use crate::rng::SplitMix64;
use crate::scenario_io::ResultRecord;
use crate::solver_componentwise::{solve_ptilde, ProblemPtilde};
use crate::solver_p::{solve_p, PolicyResult, ProblemP, SolveOpts};
use crate::solver_redistribution::{solve_pr, ProblemPR};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepProblem {
    P,
    Ptilde,
    Pr,
}

impl SweepProblem {
    pub fn label(&self) -> &'static str {
        match self {
            SweepProblem::P => "p",
            SweepProblem::Ptilde => "ptilde",
            SweepProblem::Pr => "pr",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    /// Range of the network-average maximum price, inclusive.
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    pub seed: u64,
    /// Relative spread of the per-agent jitter factors in `[0, 1)`.
    pub jitter: f64,
    pub problems: Vec<SweepProblem>,
    /// Fixed penalty caps for redistribution; defaults to the matched
    /// average split `rho = min(target, p_b0)`, `budget = remainder`.
    pub fixed_rho_max: Option<Vec<f64>>,
    pub bruteforce_limit: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            start: 1.0,
            end: 1.2,
            steps: 11,
            seed: 0,
            jitter: 0.5,
            problems: vec![SweepProblem::P, SweepProblem::Ptilde, SweepProblem::Pr],
            fixed_rho_max: None,
            bruteforce_limit: 15,
        }
    }
}

/// Mean-one multiplicative jitter factors; deterministic for a seed.
pub fn jitter_profile(n: usize, seed: u64, spread: f64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut profile: Vec<f64> = (0..n)
        .map(|_| 1.0 + spread * (2.0 * rng.next_f64() - 1.0))
        .collect();
    let mean = profile.iter().sum::<f64>() / n as f64;
    for p in &mut profile {
        *p /= mean;
    }
    profile
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Heterogeneous per-agent caps with the given average raise.
pub fn heterogeneous_p_max(p_a0: &[f64], target_raise: f64, profile: &[f64]) -> Vec<f64> {
    p_a0.iter()
        .zip(profile)
        .map(|(&a, &j)| a + target_raise.max(0.0) * j)
        .collect()
}

/// Matched-average redistribution levers: `rho + budget` equals the target
/// raise for every agent, with penalties used first (budget stays zero
/// unless the target exceeds the penalty cap).
pub fn matched_redistribution_split(p_b0: &[f64], target_raise: f64) -> (Vec<f64>, Vec<f64>) {
    let target = target_raise.max(0.0);
    let rho: Vec<f64> = p_b0.iter().map(|&b| target.min(b)).collect();
    let budget = rho.iter().map(|&r| target - r).collect();
    (rho, budget)
}

fn record(
    scenario_id: &str,
    problem: SweepProblem,
    pbar: f64,
    result: &PolicyResult,
    welfare0: f64,
    agg0: f64,
) -> ResultRecord {
    ResultRecord {
        scenario_id: scenario_id.to_string(),
        problem: problem.label().to_string(),
        pbar_max: pbar,
        welfare: result.welfare,
        welfare_gain_pct: 100.0 * (result.welfare - welfare0) / welfare0,
        agg_xb: result.agg_unsustainable,
        agg_xb_reduction_pct: if agg0 > 0.0 {
            100.0 * (agg0 - result.agg_unsustainable) / agg0
        } else {
            0.0
        },
        certificate: result.certificate.to_string(),
    }
}

/// Runs the sweep; one output row per (sweep value, problem), ordered by
/// sweep value.
pub fn run_sweep(
    g: &Network,
    params: &GameParams,
    p_a0: &[f64],
    p_b0: &[f64],
    tau_b: f64,
    scenario_id: &str,
    spec: &SweepSpec,
) -> Result<Vec<ResultRecord>> {
    let n = g.n();
    if p_a0.len() != n || p_b0.len() != n {
        return Err(Error::InvalidInput("price vector length mismatch".into()));
    }
    if !(0.0..1.0).contains(&spec.jitter) {
        return Err(Error::InvalidInput("jitter must lie in [0, 1)".into()));
    }
    let pre_prices = PriceProfile::new(p_a0.to_vec(), p_b0.to_vec())?;
    let pre_bundle = leontief_bundle(g, params, p_b0)?;
    let (welfare0, agg0, _) = welfare_at(g, &pre_bundle, &pre_prices)?;

    let profile = jitter_profile(n, spec.seed, spec.jitter);
    let comps = g.connected_components();
    let comp_p_a0: Vec<f64> = comps
        .components
        .iter()
        .map(|verts| {
            verts
                .iter()
                .map(|&v| p_a0[v])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let a0_mean = mean(p_a0);
    let opts = SolveOpts {
        bruteforce_limit: spec.bruteforce_limit,
        ..SolveOpts::default()
    };

    let mut records = Vec::new();
    for step in 0..spec.steps {
        let pbar = if spec.steps == 1 {
            spec.start
        } else {
            spec.start + (spec.end - spec.start) * step as f64 / (spec.steps - 1) as f64
        };
        let target = (pbar - a0_mean).max(0.0);
        for &problem in &spec.problems {
            let result = match problem {
                SweepProblem::P => {
                    let p = ProblemP {
                        p_a0: p_a0.to_vec(),
                        p_max: heterogeneous_p_max(p_a0, target, &profile),
                        p_b0: p_b0.to_vec(),
                        tau_b,
                    };
                    solve_p(g, params, &p, &opts)?
                }
                SweepProblem::Ptilde => {
                    let problem = ProblemPtilde {
                        p_a0: p_a0.to_vec(),
                        p_b0: p_b0.to_vec(),
                        p_max: comp_p_a0.iter().map(|&a| a + target).collect(),
                        tau_b,
                    };
                    solve_ptilde(g, params, &problem)?.0
                }
                SweepProblem::Pr => {
                    let (rho_max, budget) = match &spec.fixed_rho_max {
                        Some(rho) => (rho.clone(), vec![0.0; n]),
                        None => matched_redistribution_split(p_b0, target),
                    };
                    let p = ProblemPR {
                        p_a0: p_a0.to_vec(),
                        p_b0: p_b0.to_vec(),
                        rho_max,
                        budget,
                        tau_b,
                    };
                    solve_pr(g, params, &p)?.0
                }
            };
            records.push(record(scenario_id, problem, pbar, &result, welfare0, agg0));
        }
    }
    Ok(records)
}
