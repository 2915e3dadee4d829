//! Independent brute-force verification engines: projected best-response
//! iteration, exhaustive vertex and subset searches, grid search, and
//! finite differences. Deliberately simple and separate from the solver
//! paths they validate.

use crate::error::{Error, Result};
use crate::game::{
    aggregate_unsustainable, interior_equilibrium, k_zero, leontief_bundle, pinned_equilibrium,
    utilities, welfare_at, EffortProfile, GameParams, LeontiefBundle, PriceProfile, NONNEG_TOL,
};
use crate::network::Network;
use crate::solver_componentwise::ComponentAggregates;
use crate::solver_p::{for_each_vertex, Certificate, PolicyResult, ProblemP, CONSTRAINT_TOL};
use crate::solver_redistribution::ProblemPR;

#[derive(Clone, Copy, Debug)]
pub struct IterationTrace {
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct BrOpts {
    pub tol: f64,
    pub cap: usize,
    /// Step fraction toward the best response each sweep (1.0 = full Jacobi
    /// update; lower it near the stability boundary).
    pub damping: f64,
}

impl Default for BrOpts {
    fn default() -> Self {
        BrOpts {
            tol: 1e-12,
            cap: 200_000,
            damping: 1.0,
        }
    }
}

/// Simultaneous projected best-response iteration from the origin. On
/// convergence the fixed point is a Nash equilibrium of the non-negative
/// game; a capped run reports `converged = false` with the last residual.
pub fn best_response_fixed_point(
    g: &Network,
    params: &GameParams,
    prices: &PriceProfile,
    opts: &BrOpts,
) -> Result<(EffortProfile, IterationTrace)> {
    let n = g.n();
    if prices.p_a.len() != n || prices.p_b.len() != n {
        return Err(Error::InvalidInput("price vector length mismatch".into()));
    }
    let (beta, delta, mu) = (params.beta, params.delta, params.mu);
    let w = opts.damping;
    let mut x_a = vec![0.0; n];
    let mut x_b = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.cap {
        let mut next_a = vec![0.0; n];
        let mut next_b = vec![0.0; n];
        for i in 0..n {
            let mut spill_a = 0.0;
            let mut spill_b = 0.0;
            for j in g.neighbors(i) {
                spill_a += delta * x_a[j] + mu * x_b[j];
                spill_b += delta * x_b[j] + mu * x_a[j];
            }
            next_a[i] = (prices.p_a[i] - beta * x_b[i] + spill_a).max(0.0);
            next_b[i] = (prices.p_b[i] - beta * x_a[i] + spill_b).max(0.0);
        }
        residual = 0.0;
        for i in 0..n {
            residual = residual.max((next_a[i] - x_a[i]).abs());
            residual = residual.max((next_b[i] - x_b[i]).abs());
            x_a[i] += w * (next_a[i] - x_a[i]);
            x_b[i] += w * (next_b[i] - x_b[i]);
        }
        if residual < opts.tol {
            return Ok((
                EffortProfile { x_a, x_b },
                IterationTrace {
                    iterations: it,
                    final_residual: residual,
                    converged: true,
                },
            ));
        }
    }
    Ok((
        EffortProfile { x_a, x_b },
        IterationTrace {
            iterations: opts.cap,
            final_residual: residual,
            converged: false,
        },
    ))
}

/// Exact optimum of the bounded welfare problem by enumerating every
/// extreme point of its feasible polytope. Exponential; capped at n = 15.
pub fn vertex_enumeration_p(
    g: &Network,
    params: &GameParams,
    p: &ProblemP,
) -> Result<PolicyResult> {
    p.validate()?;
    let n = g.n();
    if n > 15 {
        return Err(Error::InvalidInput(format!(
            "vertex enumeration capped at n = 15 (got {n})"
        )));
    }
    let bundle = leontief_bundle(g, params, &p.p_b0)?;
    let k0 = k_zero(&bundle, p.tau_b);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut err: Option<Error> = None;
    for_each_vertex(p, &bundle.b_delta, k0, None, CONSTRAINT_TOL, |point| {
        if err.is_some() {
            return;
        }
        let prices = match PriceProfile::new(point.to_vec(), p.p_b0.clone()) {
            Ok(pr) => pr,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        match welfare_at(g, &bundle, &prices) {
            Ok((welfare, _, _)) => {
                let better = match &best {
                    None => true,
                    Some((cur, w)) => {
                        welfare > *w || (welfare == *w && lex_less(point, cur))
                    }
                };
                if better {
                    best = Some((point.to_vec(), welfare));
                }
            }
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let (policy, welfare) = best.ok_or_else(|| {
        Error::Infeasible("no extreme point satisfies the tolerance constraint".into())
    })?;
    let prices = PriceProfile::new(policy.clone(), p.p_b0.clone())?;
    let (_, agg, _) = welfare_at(g, &bundle, &prices)?;
    Ok(PolicyResult {
        policy_a: policy,
        policy_b: p.p_b0.clone(),
        welfare,
        agg_unsustainable: agg,
        certificate: Certificate::BruteForce,
        optimality_exact: true,
    })
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

/// Exact optimum of the component-wise uniform problem over the extreme
/// points of its c-dimensional polytope. Returns the component-space
/// policy and its welfare.
pub fn vertex_enumeration_ptilde(agg: &ComponentAggregates) -> Result<(Vec<f64>, f64)> {
    let c = agg.count();
    if c > 20 {
        return Err(Error::InvalidInput(format!(
            "componentwise enumeration capped at 20 components (got {c})"
        )));
    }
    let lo: Vec<f64> = agg.comps.iter().map(|x| x.p_a0).collect();
    let hi: Vec<f64> = agg.comps.iter().map(|x| x.p_max).collect();
    let b: Vec<f64> = agg.comps.iter().map(|x| x.b_delta).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let offer = |policy: &[f64], best: &mut Option<(Vec<f64>, f64)>| {
        let w = agg.welfare(policy);
        let better = match best {
            None => true,
            Some((cur, bw)) => w > *bw || (w == *bw && lex_less(policy, cur)),
        };
        if better {
            *best = Some((policy.to_vec(), w));
        }
    };
    let free: Vec<usize> = (0..c).filter(|&i| hi[i] > lo[i] + 1e-15).collect();
    let mut point = lo.clone();
    for mask in 0..(1usize << free.len()) {
        for (bit, &i) in free.iter().enumerate() {
            point[i] = if mask & (1 << bit) != 0 { hi[i] } else { lo[i] };
        }
        if crate::linalg::dot(&b, &point) >= agg.k0 - CONSTRAINT_TOL {
            offer(&point, &mut best);
        }
    }
    for j in 0..c {
        if b[j].abs() < 1e-12 || hi[j] <= lo[j] + 1e-15 {
            continue;
        }
        let free_j: Vec<usize> = free.iter().copied().filter(|&i| i != j).collect();
        for mask in 0..(1usize << free_j.len()) {
            let mut point = lo.clone();
            for (bit, &i) in free_j.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    point[i] = hi[i];
                }
            }
            let partial: f64 = (0..c).filter(|&l| l != j).map(|l| b[l] * point[l]).sum();
            let value = (agg.k0 - partial) / b[j];
            if value >= lo[j] - CONSTRAINT_TOL && value <= hi[j] + CONSTRAINT_TOL {
                point[j] = value.clamp(lo[j], hi[j]);
                offer(&point, &mut best);
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no feasible component-space vertex".into()))
}

/// Exhaustive minimal pinned set: smallest subset of the agents with
/// negative unconstrained unsustainable effort whose pinned equilibrium is
/// entrywise non-negative. Subsets are visited by cardinality, then in
/// numeric mask order.
pub fn subset_minimal_s(
    g: &Network,
    params: &GameParams,
    prices: &PriceProfile,
) -> Result<Vec<usize>> {
    if g.n() > 12 {
        return Err(Error::InvalidInput(format!(
            "exhaustive subset search capped at n = 12 (got {})",
            g.n()
        )));
    }
    let bundle = leontief_bundle(g, params, &prices.p_b)?;
    subset_minimal_s_with(&bundle, prices)
}

pub fn subset_minimal_s_with(
    bundle: &LeontiefBundle,
    prices: &PriceProfile,
) -> Result<Vec<usize>> {
    let interior = interior_equilibrium(bundle, prices);
    let candidates: Vec<usize> = (0..bundle.n)
        .filter(|&i| interior.efforts.x_b[i] < -NONNEG_TOL)
        .collect();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }
    let m = candidates.len();
    let mut masks: Vec<u32> = (1..(1u32 << m)).collect();
    masks.sort_by_key(|&mask| (mask.count_ones(), mask));
    for mask in masks {
        let set: Vec<usize> = (0..m)
            .filter(|&b| mask & (1 << b) != 0)
            .map(|b| candidates[b])
            .collect();
        let eq = pinned_equilibrium(bundle, prices, &set)?;
        if eq.x_b.iter().all(|&v| v >= -NONNEG_TOL) {
            return Ok(set);
        }
    }
    Err(Error::Numerical(
        "no subset of the negative-effort candidates yields non-negative efforts".into(),
    ))
}

/// Best redistribution policy over a uniform-uptake grid: premiums scale
/// with `s`, penalties with `t`, both on `steps` points of `[0, 1]`.
/// Deterministic argmax; ties break toward lexicographically smaller
/// `(s, t)`.
pub fn grid_search_pr(
    g: &Network,
    params: &GameParams,
    p: &ProblemPR,
    steps: usize,
) -> Result<PolicyResult> {
    p.validate()?;
    if steps < 2 {
        return Err(Error::InvalidInput("grid needs at least 2 steps".into()));
    }
    let n = g.n();
    let bundle = leontief_bundle(g, params, &p.p_b0)?;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>, f64)> = None;
    for si in 0..steps {
        let s = si as f64 / (steps - 1) as f64;
        't_loop: for ti in 0..steps {
            let t = ti as f64 / (steps - 1) as f64;
            let mut p_a = vec![0.0; n];
            let mut p_b = vec![0.0; n];
            for i in 0..n {
                p_a[i] = p.p_a0[i] + s * (p.rho_max[i] + p.budget[i]);
                p_b[i] = p.p_b0[i] - t * p.rho_max[i];
                // budget cap: p_a + p_b <= p_a0 + p_b0 + budget
                if p_a[i] + p_b[i] > p.p_a0[i] + p.p_b0[i] + p.budget[i] + 1e-12 {
                    continue 't_loop;
                }
            }
            let prices = PriceProfile::new(p_a.clone(), p_b.clone())?;
            let (welfare, agg, _) = welfare_at(g, &bundle, &prices)?;
            if agg > p.tau_b + CONSTRAINT_TOL {
                continue;
            }
            if best.as_ref().is_none_or(|(w, _, _, _)| welfare > *w) {
                best = Some((welfare, p_a, p_b, agg));
            }
        }
    }
    let (welfare, p_a, p_b, agg) = best.ok_or_else(|| {
        Error::Infeasible("no grid point satisfies the tolerance constraint".into())
    })?;
    Ok(PolicyResult {
        policy_a: p_a,
        policy_b: p_b,
        welfare,
        agg_unsustainable: agg,
        certificate: Certificate::GridFallback,
        optimality_exact: false,
    })
}

/// Central finite differences of a scalar function.
pub fn finite_diff_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Aggregate unsustainable effort at the constrained equilibrium for the
/// given sustainable prices; convenience wrapper used by sweeps and tests.
pub fn aggregate_xb_at(
    g: &Network,
    params: &GameParams,
    prices: &PriceProfile,
) -> Result<f64> {
    let (eq, _) = crate::game::nonneg_equilibrium(g, params, prices, None)?;
    Ok(aggregate_unsustainable(&eq))
}

/// Per-agent utilities at the constrained equilibrium.
pub fn utilities_at(
    g: &Network,
    params: &GameParams,
    prices: &PriceProfile,
) -> Result<Vec<f64>> {
    let (eq, _) = crate::game::nonneg_equilibrium(g, params, prices, None)?;
    Ok(utilities(g, params, prices, &eq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use crate::game::nonneg_equilibrium;

    fn two_path() -> Network {
        Network::from_edge_list(2, &[(0, 1)]).unwrap()
    }

    fn std_params() -> GameParams {
        GameParams::new(0.2, 0.1, 0.01).unwrap()
    }

    #[test]
    fn br_single_agent_interior() {
        let g = Network::empty(1).unwrap();
        let prices = PriceProfile::uniform(1, 1.0, 1.0).unwrap();
        let (eq, trace) =
            best_response_fixed_point(&g, &std_params(), &prices, &BrOpts::default()).unwrap();
        assert!(trace.converged);
        assert_abs_diff_eq!(eq.x_a[0], 0.8333333333, epsilon = 1e-8);
        assert_abs_diff_eq!(eq.x_b[0], 0.8333333333, epsilon = 1e-8);
    }

    #[test]
    fn br_single_agent_projected() {
        let g = Network::empty(1).unwrap();
        let prices = PriceProfile::new(vec![6.0], vec![1.0]).unwrap();
        let (eq, trace) =
            best_response_fixed_point(&g, &std_params(), &prices, &BrOpts::default()).unwrap();
        assert!(trace.converged);
        assert_abs_diff_eq!(eq.x_a[0], 6.0, epsilon = 1e-8);
        assert_abs_diff_eq!(eq.x_b[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn br_matches_interior_equilibrium() {
        let g = two_path();
        let params = std_params();
        let prices = PriceProfile::uniform(2, 1.0, 1.0).unwrap();
        let (eq, trace) =
            best_response_fixed_point(&g, &params, &prices, &BrOpts::default()).unwrap();
        assert!(trace.converged);
        let (closed, _) = nonneg_equilibrium(&g, &params, &prices, None).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(eq.x_a[i], closed.x_a[i], epsilon = 1e-8);
            assert_abs_diff_eq!(eq.x_b[i], closed.x_b[i], epsilon = 1e-8);
        }
    }

    #[test]
    fn subset_search_mixed_case() {
        let g = two_path();
        let prices = PriceProfile::new(vec![6.0, 1.0], vec![1.0, 1.0]).unwrap();
        let s = subset_minimal_s(&g, &std_params(), &prices).unwrap();
        assert_eq!(s, vec![0]);
    }

    #[test]
    fn subset_search_interior_case() {
        let g = two_path();
        let prices = PriceProfile::uniform(2, 1.0, 1.0).unwrap();
        assert!(subset_minimal_s(&g, &std_params(), &prices)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn subset_search_above_threshold() {
        let g = two_path();
        let bundle = leontief_bundle(&g, &std_params(), &[1.0, 1.0]).unwrap();
        let p_a: Vec<f64> = bundle.p_lim.iter().map(|x| x * 1.2).collect();
        let prices = PriceProfile::new(p_a, vec![1.0, 1.0]).unwrap();
        let s = subset_minimal_s(&g, &std_params(), &prices).unwrap();
        assert_eq!(s, vec![0, 1]); // full candidate set
    }

    #[test]
    fn vertex_enumeration_degenerate_box() {
        let g = two_path();
        let p = ProblemP {
            p_a0: vec![1.0, 1.0],
            p_max: vec![1.0, 1.0],
            p_b0: vec![1.0, 1.0],
            tau_b: 100.0,
        };
        let r = vertex_enumeration_p(&g, &std_params(), &p).unwrap();
        assert_eq!(r.policy_a, vec![1.0, 1.0]);
    }

    #[test]
    fn vertex_enumeration_infeasible() {
        let g = two_path();
        let p = ProblemP {
            p_a0: vec![1.0, 1.0],
            p_max: vec![1.1, 1.1],
            p_b0: vec![1.0, 1.0],
            tau_b: 0.0,
        };
        assert!(matches!(
            vertex_enumeration_p(&g, &std_params(), &p),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn vertex_enumeration_relabeling_invariant() {
        let params = std_params();
        let g1 = Network::from_edge_list(3, &[(0, 1)]).unwrap();
        let g2 = Network::from_edge_list(3, &[(1, 2)]).unwrap();
        let p1 = ProblemP {
            p_a0: vec![0.9, 0.8, 0.7],
            p_max: vec![1.1, 1.0, 0.9],
            p_b0: vec![1.0, 1.0, 1.0],
            tau_b: 3.0,
        };
        // relabeled: vertex 0 <-> 2
        let p2 = ProblemP {
            p_a0: vec![0.7, 0.8, 0.9],
            p_max: vec![0.9, 1.0, 1.1],
            p_b0: vec![1.0, 1.0, 1.0],
            tau_b: 3.0,
        };
        let r1 = vertex_enumeration_p(&g1, &params, &p1).unwrap();
        let r2 = vertex_enumeration_p(&g2, &params, &p2).unwrap();
        assert_abs_diff_eq!(r1.welfare, r2.welfare, epsilon = 1e-10);
    }

    #[test]
    fn grid_search_no_levers_returns_status_quo() {
        let g = two_path();
        let p = ProblemPR {
            p_a0: vec![1.0, 1.0],
            p_b0: vec![1.2, 1.2],
            rho_max: vec![0.0, 0.0],
            budget: vec![0.0, 0.0],
            tau_b: 100.0,
        };
        let r = grid_search_pr(&g, &std_params(), &p, 5).unwrap();
        assert_eq!(r.policy_a, vec![1.0, 1.0]);
        assert_eq!(r.policy_b, vec![1.2, 1.2]);
    }

    #[test]
    fn dimension_caps_enforced() {
        let params = std_params();
        let g16 = Network::from_edge_list(16, &[(0, 1)]).unwrap();
        let p = ProblemP {
            p_a0: vec![1.0; 16],
            p_max: vec![1.1; 16],
            p_b0: vec![1.0; 16],
            tau_b: 100.0,
        };
        assert!(matches!(
            vertex_enumeration_p(&g16, &params, &p),
            Err(Error::InvalidInput(_))
        ));

        let g13 = Network::from_edge_list(13, &[(0, 1)]).unwrap();
        let prices = PriceProfile::uniform(13, 1.0, 1.0).unwrap();
        assert!(matches!(
            subset_minimal_s(&g13, &params, &prices),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn grid_needs_two_steps() {
        let g = two_path();
        let p = ProblemPR {
            p_a0: vec![1.0, 1.0],
            p_b0: vec![1.2, 1.2],
            rho_max: vec![0.1, 0.1],
            budget: vec![0.0, 0.0],
            tau_b: 100.0,
        };
        assert!(matches!(
            grid_search_pr(&g, &std_params(), &p, 1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn finite_diff_on_constant_and_linear() {
        let zero = finite_diff_gradient(|_| 3.5, &[1.0, 2.0], 1e-5);
        assert_abs_diff_eq!(zero[0], 0.0, epsilon = 1e-9);
        let lin = finite_diff_gradient(|x| 2.0 * x[0] - 7.0 * x[1], &[1.0, 2.0], 1e-5);
        assert_abs_diff_eq!(lin[0], 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(lin[1], -7.0, epsilon = 1e-9);
    }
}
