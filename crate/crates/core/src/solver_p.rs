//! Welfare maximization over sustainable prices within per-agent bounds,
//! subject to a cap on aggregate unsustainable effort.
//!
//! The feasible set is the polytope `{p : b_delta . p >= k0, p_a0 <= p <=
//! p_max}`. The objective is concave-free (a convex quadratic being
//! maximized), so optima sit at extreme points; closed-form tests resolve
//! the common cases and an extreme-point search covers the rest.

use std::fmt;

use crate::error::{Error, Result};
use crate::feasibility::{classify_regime, Regime};
use crate::game::{
    self, k_zero, leontief_bundle, welfare_at, GameParams, LeontiefBundle, PriceProfile,
};
use crate::linalg::dot;
use crate::network::Network;
use crate::rng::SplitMix64;

/// Constraint-residual tolerance used in feasibility tests and final
/// verification.
pub const CONSTRAINT_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ProblemP {
    /// Pre-intervention sustainable prices (lower bounds).
    pub p_a0: Vec<f64>,
    /// Per-agent upper bounds on sustainable prices.
    pub p_max: Vec<f64>,
    /// Unsustainable prices, held fixed.
    pub p_b0: Vec<f64>,
    /// Cap on aggregate unsustainable effort.
    pub tau_b: f64,
}

impl ProblemP {
    pub fn validate(&self) -> Result<()> {
        let n = self.p_a0.len();
        if self.p_max.len() != n || self.p_b0.len() != n {
            return Err(Error::InvalidInput("price vector length mismatch".into()));
        }
        if n == 0 {
            return Err(Error::InvalidInput("empty problem".into()));
        }
        if self.tau_b < 0.0 {
            return Err(Error::InvalidInput("tau_b must be >= 0".into()));
        }
        if self
            .p_a0
            .iter()
            .chain(&self.p_max)
            .chain(&self.p_b0)
            .any(|&v| v < 0.0 || !v.is_finite())
        {
            return Err(Error::InvalidInput(
                "prices must be finite and non-negative".into(),
            ));
        }
        if self
            .p_a0
            .iter()
            .zip(&self.p_max)
            .any(|(&lo, &hi)| hi < lo - 1e-12)
        {
            return Err(Error::InvalidInput("p_max must dominate p_a0".into()));
        }
        Ok(())
    }
}

/// Which result produced the returned policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Certificate {
    Thm4PMax,
    Thm4PA0,
    Cor1IA,
    Cor1IB,
    Cor1IC,
    Cor1II,
    PrunedSearch,
    BruteForce,
    P0Baseline,
    Thm5MaxRho,
    Prop3StatusQuo,
    GridFallback,
    Cor2IP0Star,
    Thm6Exact,
    Thm6Relaxed,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Certificate::Thm4PMax => "THM4_PMAX",
            Certificate::Thm4PA0 => "THM4_PA0",
            Certificate::Cor1IA => "COR1_IA",
            Certificate::Cor1IB => "COR1_IB",
            Certificate::Cor1IC => "COR1_IC",
            Certificate::Cor1II => "COR1_II",
            Certificate::PrunedSearch => "PRUNED_SEARCH",
            Certificate::BruteForce => "BRUTE_FORCE",
            Certificate::P0Baseline => "P0_BASELINE",
            Certificate::Thm5MaxRho => "THM5_MAXRHO",
            Certificate::Prop3StatusQuo => "PROP3_STATUS_QUO",
            Certificate::GridFallback => "GRID_FALLBACK",
            Certificate::Cor2IP0Star => "COR2_I_P0STAR",
            Certificate::Thm6Exact => "THM6_EXACT",
            Certificate::Thm6Relaxed => "THM6_RELAXED",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct PolicyResult {
    pub policy_a: Vec<f64>,
    pub policy_b: Vec<f64>,
    pub welfare: f64,
    pub agg_unsustainable: f64,
    pub certificate: Certificate,
    pub optimality_exact: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOpts {
    /// Extreme-point enumeration is exact up to this many undominated
    /// coordinates; larger problems fall back to sampled search.
    pub bruteforce_limit: usize,
    pub tol: f64,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            bruteforce_limit: 15,
            tol: CONSTRAINT_TOL,
        }
    }
}

/// Baseline problem without the tolerance constraint and without network
/// effects: each agent's price independently goes to its bound when the
/// direct gain beats the substitution loss. Welfare is reported for the
/// networkless game the baseline is defined on.
pub fn solve_p0(p: &ProblemP, params: &GameParams) -> Result<PolicyResult> {
    p.validate()?;
    let n = p.p_a0.len();
    let policy: Vec<f64> = (0..n)
        .map(|i| {
            if p.p_max[i] >= 2.0 * params.beta * p.p_b0[i] - p.p_a0[i] {
                p.p_max[i]
            } else {
                p.p_a0[i]
            }
        })
        .collect();
    let g0 = Network::empty(n)?;
    let bundle = leontief_bundle(&g0, params, &p.p_b0)?;
    let prices = PriceProfile::new(policy.clone(), p.p_b0.clone())?;
    let (welfare, agg, _) = welfare_at(&g0, &bundle, &prices)?;
    Ok(PolicyResult {
        policy_a: policy,
        policy_b: p.p_b0.clone(),
        welfare,
        agg_unsustainable: agg,
        certificate: Certificate::P0Baseline,
        optimality_exact: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Thm4Ordering {
    /// `p1` is at least as welfare-generating as `p2`.
    Ge,
    /// `p1` is strictly less welfare-generating than `p2`.
    Lt,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct Thm4Comparison {
    pub ordering: Thm4Ordering,
    pub psi_p1: Vec<f64>,
    pub psi_p2: Vec<f64>,
}

/// `|Q p - R p_b0|`: combined strength of total incentive and incentive
/// bias; pointwise larger values mean a more welfare-generating policy.
pub fn psi(bundle: &LeontiefBundle, p_a: &[f64]) -> Vec<f64> {
    let qp = bundle.q_mat.matvec(p_a);
    let rb = bundle.r_mat.matvec(&bundle.p_b0);
    qp.iter().zip(&rb).map(|(a, b)| (a - b).abs()).collect()
}

/// Orders two policies with `p2 <= p1` by welfare without solving anything:
/// `Q (p1 + p2) >= v` means `p1` wins, `< v` everywhere means `p2` wins.
///
/// Requires `p1` below the zero-effort price threshold, or failing that
/// `p1 >= p_b0` entrywise.
pub fn thm4_compare(bundle: &LeontiefBundle, p1: &[f64], p2: &[f64]) -> Result<Thm4Comparison> {
    let n = bundle.n;
    if p1.len() != n || p2.len() != n {
        return Err(Error::InvalidInput("policy length mismatch".into()));
    }
    if p2.iter().zip(p1).any(|(&lo, &hi)| lo > hi + 1e-12) {
        return Err(Error::InvalidInput(
            "welfare comparison requires p2 <= p1".into(),
        ));
    }
    let below_lim = p1
        .iter()
        .zip(&bundle.p_lim)
        .all(|(&a, &l)| a <= l + 1e-9);
    let above_pb = p1
        .iter()
        .zip(&bundle.p_b0)
        .all(|(&a, &b)| a >= b - 1e-9);
    if !below_lim && !above_pb {
        return Err(Error::InvalidInput(
            "welfare comparison requires p1 <= p_lim or p1 >= p_b0".into(),
        ));
    }
    let psi_p1 = psi(bundle, p1);
    let psi_p2 = psi(bundle, p2);
    if p1
        .iter()
        .zip(p2)
        .all(|(&a, &b)| (a - b).abs() <= 1e-15)
    {
        return Ok(Thm4Comparison {
            ordering: Thm4Ordering::Ge,
            psi_p1,
            psi_p2,
        });
    }
    let sum: Vec<f64> = p1.iter().zip(p2).map(|(a, b)| a + b).collect();
    let qsum = bundle.q_mat.matvec(&sum);
    let diff: Vec<f64> = qsum.iter().zip(&bundle.v_vec).map(|(a, v)| a - v).collect();
    let ordering = if diff.iter().all(|&d| d >= -1e-12) {
        Thm4Ordering::Ge
    } else if diff.iter().all(|&d| d < -1e-12) {
        Thm4Ordering::Lt
    } else {
        Thm4Ordering::Indeterminate
    };
    Ok(Thm4Comparison {
        ordering,
        psi_p1,
        psi_p2,
    })
}

/// Evaluates a candidate policy: welfare and aggregate unsustainable effort
/// at the constrained equilibrium (closed form when interior).
fn evaluate(g: &Network, bundle: &LeontiefBundle, p: &ProblemP, policy: &[f64]) -> Result<(f64, f64)> {
    let prices = PriceProfile::new(policy.to_vec(), p.p_b0.clone())?;
    let (welfare, agg, _) = welfare_at(g, bundle, &prices)?;
    Ok((welfare, agg))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    g: &Network,
    bundle: &LeontiefBundle,
    p: &ProblemP,
    k0: f64,
    policy: Vec<f64>,
    certificate: Certificate,
    optimality_exact: bool,
    tol: f64,
) -> Result<PolicyResult> {
    for (i, &v) in policy.iter().enumerate() {
        if v < p.p_a0[i] - tol || v > p.p_max[i] + tol {
            return Err(Error::Numerical(format!(
                "policy entry {i} leaves its bounds: {v}"
            )));
        }
    }
    if dot(&bundle.b_delta, &policy) < k0 - tol {
        return Err(Error::Numerical(
            "returned policy violates the tolerance constraint".into(),
        ));
    }
    let (welfare, agg) = evaluate(g, bundle, p, &policy)?;
    Ok(PolicyResult {
        policy_a: policy,
        policy_b: p.p_b0.clone(),
        welfare,
        agg_unsustainable: agg,
        certificate,
        optimality_exact,
    })
}

fn entrywise_ge(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(&x, &y)| x >= y - tol)
}

/// Tolerance-active extreme point: everything at its lower bound except
/// coordinate `i`, which is set so the tolerance constraint binds.
fn tolerance_active_point(p: &ProblemP, b_delta: &[f64], k0: f64, i: usize, tol: f64) -> Option<Vec<f64>> {
    if b_delta[i].abs() < 1e-12 {
        return None;
    }
    let mut point = p.p_a0.clone();
    let partial: f64 = (0..p.p_a0.len())
        .filter(|&j| j != i)
        .map(|j| b_delta[j] * point[j])
        .sum();
    let value = (k0 - partial) / b_delta[i];
    if value < p.p_a0[i] - tol || value > p.p_max[i] + tol {
        return None;
    }
    point[i] = value.clamp(p.p_a0[i], p.p_max[i]);
    Some(point)
}

#[derive(Debug, Default)]
struct Pruning {
    dominated: Vec<bool>,
    witnesses: Vec<Vec<f64>>,
}

/// Iterated extreme-point pruning: a coordinate whose probe point compares
/// decisively against `p_max` lets us discard every extreme point that has
/// that coordinate at its upper bound (the discarded points are dominated
/// by `p_max` or by the probe point, which is kept as a witness).
fn iterated_pruning(bundle: &LeontiefBundle, p: &ProblemP, k0: f64, tol: f64) -> Pruning {
    let n = bundle.n;
    let mut out = Pruning {
        dominated: vec![false; n],
        witnesses: Vec::new(),
    };
    let q_hi = bundle.q_mat.matvec(&p.p_max);
    let classify = |probe: &[f64], out: &mut Pruning, i: usize| -> bool {
        let q_probe = bundle.q_mat.matvec(probe);
        let diff: Vec<f64> = q_probe
            .iter()
            .zip(&q_hi)
            .zip(&bundle.v_vec)
            .map(|((a, b), v)| a + b - v)
            .collect();
        if diff.iter().all(|&d| d >= 0.0) {
            out.dominated[i] = true;
            true
        } else if diff.iter().all(|&d| d < 0.0) {
            out.dominated[i] = true;
            out.witnesses.push(probe.to_vec());
            true
        } else {
            false
        }
    };

    // First sweep probes tolerance-active points, later sweeps probe the
    // single-raise box points, until nothing more falls out.
    for i in 0..n {
        if let Some(probe) = tolerance_active_point(p, &bundle.b_delta, k0, i, tol) {
            classify(&probe, &mut out, i);
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            if out.dominated[i] {
                continue;
            }
            let mut probe = p.p_a0.clone();
            probe[i] = p.p_max[i];
            if dot(&bundle.b_delta, &probe) < k0 - tol {
                continue; // infeasible probe carries no information
            }
            if classify(&probe, &mut out, i) {
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    out
}

/// Visits every extreme point of the polytope, skipping those that set a
/// coordinate in `skip_upper` to its upper bound. Callback order is
/// deterministic.
pub(crate) fn for_each_vertex(
    p: &ProblemP,
    b_delta: &[f64],
    k0: f64,
    skip_upper: Option<&[bool]>,
    tol: f64,
    mut f: impl FnMut(&[f64]),
) {
    let n = p.p_a0.len();
    let allow = |i: usize| skip_upper.is_none_or(|s| !s[i]);
    let free: Vec<usize> = (0..n)
        .filter(|&i| allow(i) && p.p_max[i] > p.p_a0[i] + 1e-15)
        .collect();
    let mut point = p.p_a0.clone();
    let masks = 1usize << free.len();
    for mask in 0..masks {
        for (bit, &i) in free.iter().enumerate() {
            point[i] = if mask & (1 << bit) != 0 {
                p.p_max[i]
            } else {
                p.p_a0[i]
            };
        }
        if dot(b_delta, &point) >= k0 - tol {
            f(&point);
        }
    }
    // Tolerance-face points: one coordinate freed off its bounds.
    for j in 0..n {
        if b_delta[j].abs() < 1e-12 || p.p_max[j] <= p.p_a0[j] + 1e-15 {
            continue;
        }
        let free_j: Vec<usize> = free.iter().copied().filter(|&i| i != j).collect();
        let masks = 1usize << free_j.len();
        for mask in 0..masks {
            let mut point = p.p_a0.clone();
            for (bit, &i) in free_j.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    point[i] = p.p_max[i];
                }
            }
            let partial: f64 = (0..n)
                .filter(|&l| l != j)
                .map(|l| b_delta[l] * point[l])
                .sum();
            let value = (k0 - partial) / b_delta[j];
            if value >= p.p_a0[j] - tol && value <= p.p_max[j] + tol {
                point[j] = value.clamp(p.p_a0[j], p.p_max[j]);
                f(&point);
            }
        }
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

struct Best {
    policy: Option<Vec<f64>>,
    welfare: f64,
}

impl Best {
    fn new() -> Self {
        Best {
            policy: None,
            welfare: f64::NEG_INFINITY,
        }
    }

    fn offer(&mut self, policy: &[f64], welfare: f64) {
        let better = match &self.policy {
            None => true,
            Some(cur) => {
                welfare > self.welfare || (welfare == self.welfare && lex_less(policy, cur))
            }
        };
        if better {
            self.policy = Some(policy.to_vec());
            self.welfare = welfare;
        }
    }
}

/// Solves the bounded welfare-maximization problem.
pub fn solve_p(
    g: &Network,
    params: &GameParams,
    p: &ProblemP,
    opts: &SolveOpts,
) -> Result<PolicyResult> {
    p.validate()?;
    let n = g.n();
    if p.p_a0.len() != n {
        return Err(Error::InvalidInput(
            "problem dimension does not match the network".into(),
        ));
    }
    let tol = opts.tol;
    let s_plus = game::check_assumption2prime(params);
    if !s_plus {
        let report = classify_regime(g, params, None)?;
        match report.regime {
            Regime::SMinus => {
                return Err(Error::Infeasible(
                    "price raises increase aggregate unsustainable effort here; \
                     use the redistribution problem instead"
                        .into(),
                ))
            }
            Regime::NetworkDependent | Regime::SPlus => {
                if report.b_delta_signs.iter().any(|&s| s <= 0) {
                    return Err(Error::AssumptionViolation(
                        "network-dependent regime with non-positive centrality entries \
                         is outside this solver's scope; use the redistribution problem"
                            .into(),
                    ));
                }
            }
        }
    }
    let bundle = leontief_bundle(g, params, &p.p_b0)?;
    let k0 = k_zero(&bundle, p.tau_b);
    if dot(&bundle.b_delta, &p.p_max) < k0 - tol {
        return Err(Error::Infeasible(format!(
            "even the maximal policy violates the tolerance: b_delta . p_max = {:.6} < k0 = {:.6}",
            dot(&bundle.b_delta, &p.p_max),
            k0
        )));
    }

    // Closed-form results assume policies stay below the zero-effort price
    // threshold; past it they remain valid only when prices never fall
    // below the unsustainable prices.
    let below_lim = entrywise_ge(&bundle.p_lim, &p.p_max, -1e-9);
    let guard_ok = below_lim || entrywise_ge(&p.p_a0, &p.p_b0, 1e-9);
    let p_a0_feasible = dot(&bundle.b_delta, &p.p_a0) >= k0 - tol;

    if s_plus && guard_ok {
        if entrywise_ge(&p.p_a0, &p.p_b0, 1e-12) {
            return finish(g, &bundle, p, k0, p.p_max.clone(), Certificate::Cor1IA, true, tol);
        }
        let q_a0 = bundle.q_mat.matvec(&p.p_a0);
        let r_b0 = bundle.r_mat.matvec(&p.p_b0);
        if q_a0.iter().zip(&r_b0).all(|(&a, &b)| a > b) {
            return finish(g, &bundle, p, k0, p.p_max.clone(), Certificate::Cor1IB, true, tol);
        }
        let bonus_covers_deficit = (0..n)
            .all(|i| p.p_max[i] - p.p_b0[i] >= p.p_b0[i] - p.p_a0[i] - 1e-12);
        if bonus_covers_deficit {
            return finish(g, &bundle, p, k0, p.p_max.clone(), Certificate::Cor1IC, true, tol);
        }
        let q_ones = bundle.q_mat.row_sums();
        let threshold = r_b0
            .iter()
            .zip(&q_ones)
            .map(|(&r, &q)| r / q)
            .fold(f64::INFINITY, f64::min);
        let p_max_max = p.p_max.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if p_a0_feasible && p_max_max < threshold {
            return finish(g, &bundle, p, k0, p.p_a0.clone(), Certificate::Cor1II, true, tol);
        }
        match thm4_compare(&bundle, &p.p_max, &p.p_a0)?.ordering {
            Thm4Ordering::Ge => {
                return finish(g, &bundle, p, k0, p.p_max.clone(), Certificate::Thm4PMax, true, tol)
            }
            Thm4Ordering::Lt if p_a0_feasible => {
                return finish(g, &bundle, p, k0, p.p_a0.clone(), Certificate::Thm4PA0, true, tol)
            }
            _ => {}
        }
    }

    // Extreme-point search. Pruning is only sound where the closed-form
    // comparisons are.
    let pruning = if s_plus && guard_ok {
        iterated_pruning(&bundle, p, k0, tol)
    } else {
        Pruning {
            dominated: vec![false; n],
            witnesses: Vec::new(),
        }
    };

    let mut best = Best::new();
    let offer = |policy: &[f64], best: &mut Best| -> Result<()> {
        let (welfare, _) = evaluate(g, &bundle, p, policy)?;
        best.offer(policy, welfare);
        Ok(())
    };
    offer(&p.p_max, &mut best)?;
    if p_a0_feasible {
        offer(&p.p_a0, &mut best)?;
    }
    for w in &pruning.witnesses {
        offer(w, &mut best)?;
    }

    let undominated = pruning.dominated.iter().filter(|&&d| !d).count();
    let fully_pruned = undominated == 0;
    let exact_search = fully_pruned || undominated <= opts.bruteforce_limit;
    if exact_search {
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        for_each_vertex(p, &bundle.b_delta, k0, Some(&pruning.dominated), tol, |point| {
            candidates.push(point.to_vec());
        });
        for c in &candidates {
            offer(c, &mut best)?;
        }
    } else {
        // Sampled fallback for high dimensions: seeded, deterministic.
        let mut rng = SplitMix64::new(0x9e37_79b9_7f4a_7c15);
        for i in 0..n {
            if let Some(probe) = tolerance_active_point(p, &bundle.b_delta, k0, i, tol) {
                offer(&probe, &mut best)?;
            }
        }
        let mut point = vec![0.0; n];
        for _ in 0..4096 {
            for i in 0..n {
                point[i] = if pruning.dominated[i] || rng.next_u64() & 1 == 0 {
                    p.p_a0[i]
                } else {
                    p.p_max[i]
                };
            }
            if dot(&bundle.b_delta, &point) >= k0 - tol {
                offer(&point, &mut best)?;
            }
        }
    }

    let policy = best
        .policy
        .ok_or_else(|| Error::Infeasible("no feasible extreme point found".into()))?;
    let certificate = if fully_pruned {
        Certificate::PrunedSearch
    } else {
        Certificate::BruteForce
    };
    finish(g, &bundle, p, k0, policy, certificate, exact_search, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_path() -> Network {
        Network::from_edge_list(2, &[(0, 1)]).unwrap()
    }

    fn std_params() -> GameParams {
        GameParams::new(0.2, 0.1, 0.01).unwrap()
    }

    #[test]
    fn p0_takes_bound_when_worthwhile() {
        let p = ProblemP {
            p_a0: vec![1.0],
            p_max: vec![1.2],
            p_b0: vec![1.0],
            tau_b: f64::INFINITY,
        };
        let r = solve_p0(&p, &std_params()).unwrap();
        assert_eq!(r.policy_a, vec![1.2]);
        assert_eq!(r.certificate, Certificate::P0Baseline);
    }

    #[test]
    fn p0_stays_put_under_heavy_substitution() {
        let p = ProblemP {
            p_a0: vec![0.01],
            p_max: vec![0.5],
            p_b0: vec![1.0],
            tau_b: f64::INFINITY,
        };
        let params = GameParams::new(0.49, 0.1, 0.01).unwrap();
        let r = solve_p0(&p, &params).unwrap();
        assert_eq!(r.policy_a, vec![0.01]);
    }

    #[test]
    fn p0_degenerate_box() {
        let p = ProblemP {
            p_a0: vec![0.7, 0.7],
            p_max: vec![0.7, 0.7],
            p_b0: vec![1.0, 1.0],
            tau_b: f64::INFINITY,
        };
        let r = solve_p0(&p, &std_params()).unwrap();
        assert_eq!(r.policy_a, vec![0.7, 0.7]);
    }

    #[test]
    fn thm4_scalar_ge() {
        let g = Network::empty(1).unwrap();
        let bundle = leontief_bundle(&g, &std_params(), &[1.0]).unwrap();
        let cmp = thm4_compare(&bundle, &[1.2], &[1.0]).unwrap();
        assert_eq!(cmp.ordering, Thm4Ordering::Ge);
    }

    #[test]
    fn thm4_scalar_lt() {
        let g = Network::empty(1).unwrap();
        let params = GameParams::new(0.49, 0.1, 0.01).unwrap();
        let bundle = leontief_bundle(&g, &params, &[1.0]).unwrap();
        let cmp = thm4_compare(&bundle, &[0.02], &[0.01]).unwrap();
        assert_eq!(cmp.ordering, Thm4Ordering::Lt);
        assert!(cmp.psi_p1[0] < cmp.psi_p2[0]);
    }

    #[test]
    fn thm4_equal_policies_ge() {
        let g = Network::empty(1).unwrap();
        let params = GameParams::new(0.49, 0.1, 0.01).unwrap();
        let bundle = leontief_bundle(&g, &params, &[1.0]).unwrap();
        let cmp = thm4_compare(&bundle, &[0.01], &[0.01]).unwrap();
        assert_eq!(cmp.ordering, Thm4Ordering::Ge);
    }

    #[test]
    fn thm4_rejects_unordered_pair() {
        let g = Network::empty(2).unwrap();
        let bundle = leontief_bundle(&g, &std_params(), &[1.0, 1.0]).unwrap();
        assert!(thm4_compare(&bundle, &[1.0, 0.5], &[0.5, 1.0]).is_err());
    }

    #[test]
    fn solve_p_section6_fixture_fires_cor1_ib() {
        let g = two_path();
        let p = ProblemP {
            p_a0: vec![0.97, 0.97],
            p_max: vec![1.05, 1.05],
            p_b0: vec![1.0, 1.0],
            tau_b: 100.0,
        };
        let r = solve_p(&g, &std_params(), &p, &SolveOpts::default()).unwrap();
        assert_eq!(r.certificate, Certificate::Cor1IB);
        assert_eq!(r.policy_a, vec![1.05, 1.05]);
        assert!(r.optimality_exact);
    }

    #[test]
    fn solve_p_insufficient_budget_returns_pa0() {
        let g = Network::empty(1).unwrap();
        let params = GameParams::new(0.49, 0.1, 0.01).unwrap();
        let p = ProblemP {
            p_a0: vec![0.01],
            p_max: vec![0.02],
            p_b0: vec![1.0],
            tau_b: 100.0,
        };
        let r = solve_p(&g, &params, &p, &SolveOpts::default()).unwrap();
        assert_eq!(r.certificate, Certificate::Cor1II);
        assert_eq!(r.policy_a, vec![0.01]);
    }

    #[test]
    fn solve_p_degenerate_box() {
        let g = two_path();
        let p = ProblemP {
            p_a0: vec![0.97, 0.97],
            p_max: vec![0.97, 0.97],
            p_b0: vec![1.0, 1.0],
            tau_b: 100.0,
        };
        let r = solve_p(&g, &std_params(), &p, &SolveOpts::default()).unwrap();
        assert_eq!(r.policy_a, vec![0.97, 0.97]);
    }

    #[test]
    fn solve_p_infeasible_tolerance() {
        let g = two_path();
        let p = ProblemP {
            p_a0: vec![0.97, 0.97],
            p_max: vec![1.05, 1.05],
            p_b0: vec![1.0, 1.0],
            tau_b: 0.0,
        };
        assert!(matches!(
            solve_p(&g, &std_params(), &p, &SolveOpts::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn solve_p_s_minus_advises_redistribution() {
        let g = Network::complete(4).unwrap();
        let params = GameParams::new(0.1, 0.15, 0.05).unwrap();
        let p = ProblemP {
            p_a0: vec![1.0; 4],
            p_max: vec![1.2; 4],
            p_b0: vec![1.0; 4],
            tau_b: 100.0,
        };
        assert!(matches!(
            solve_p(&g, &params, &p, &SolveOpts::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn welfare_at_pmax_matches_closed_form() {
        let g = two_path();
        let params = std_params();
        let bundle = leontief_bundle(&g, &params, &[1.0, 1.0]).unwrap();
        let p = ProblemP {
            p_a0: vec![0.97, 0.97],
            p_max: vec![1.05, 1.05],
            p_b0: vec![1.0, 1.0],
            tau_b: 100.0,
        };
        let r = solve_p(&g, &params, &p, &SolveOpts::default()).unwrap();
        assert_abs_diff_eq!(
            r.welfare,
            game::welfare_closed_form(&bundle, &r.policy_a),
            epsilon = 1e-10
        );
    }
}
