//! Welfare maximization under component-wise uniform pricing: one
//! sustainable price per connected component.
//!
//! The welfare separates into per-component convex parabolas coupled only
//! by the tolerance constraint, so the solver orders components by a
//! trade-off score, sweeps price raises in that order, and certifies the
//! result through the convex relaxation (chords of the parabolas) and its
//! piecewise-linear Lagrange dual.

use crate::error::{Error, Result};
use crate::game::{self, leontief_bundle, welfare_at, GameParams, PriceProfile};
use crate::network::{ComponentDecomposition, Network};
use crate::solver_p::{Certificate, PolicyResult, CONSTRAINT_TOL};

#[derive(Clone, Debug)]
pub struct ProblemPtilde {
    /// Pre-intervention sustainable prices (length n, uniform within each
    /// component up to tolerance; the component max is used otherwise).
    pub p_a0: Vec<f64>,
    /// Unsustainable prices (length n).
    pub p_b0: Vec<f64>,
    /// Per-component price caps, in component order (components are
    /// ordered by smallest contained vertex).
    pub p_max: Vec<f64>,
    pub tau_b: f64,
}

/// Per-component reduction of the welfare quadratic.
#[derive(Clone, Debug)]
pub struct CompAggregate {
    pub vertices: Vec<usize>,
    /// `1' Q_l 1`
    pub q: f64,
    /// `2 * 1' R_l p_b0_l`
    pub v: f64,
    /// Component centrality mass.
    pub b_delta: f64,
    /// `p_b0_l' Q_l p_b0_l`
    pub const_term: f64,
    pub p_a0: f64,
    pub p_max: f64,
}

#[derive(Clone, Debug)]
pub struct ComponentAggregates {
    pub comps: Vec<CompAggregate>,
    pub decomposition: ComponentDecomposition,
    pub k0: f64,
    pub warnings: Vec<String>,
}

impl ComponentAggregates {
    pub fn count(&self) -> usize {
        self.comps.len()
    }

    /// Welfare of a component-uniform policy (c values).
    pub fn welfare(&self, policy: &[f64]) -> f64 {
        0.25
            * self
                .comps
                .iter()
                .zip(policy)
                .map(|(c, &p)| c.q * p * p - c.v * p + c.const_term)
                .sum::<f64>()
    }

    pub fn expand(&self, policy: &[f64]) -> Vec<f64> {
        let n: usize = self.comps.iter().map(|c| c.vertices.len()).sum();
        let mut out = vec![0.0; n];
        for (c, &p) in self.comps.iter().zip(policy) {
            for &v in &c.vertices {
                out[v] = p;
            }
        }
        out
    }

    /// Component tolerance coupling: feasible iff
    /// `sum_l b_delta_l * p_l >= k0`.
    pub fn coupling(&self, policy: &[f64]) -> f64 {
        self.comps
            .iter()
            .zip(policy)
            .map(|(c, &p)| c.b_delta * p)
            .sum()
    }
}

/// Builds per-component aggregates from component-local matrices.
pub fn component_aggregates(
    g: &Network,
    params: &GameParams,
    problem: &ProblemPtilde,
) -> Result<ComponentAggregates> {
    let n = g.n();
    if problem.p_a0.len() != n || problem.p_b0.len() != n {
        return Err(Error::InvalidInput(
            "price vectors do not match the network size".into(),
        ));
    }
    if problem.tau_b < 0.0 {
        return Err(Error::InvalidInput("tau_b must be >= 0".into()));
    }
    let decomposition = g.connected_components();
    let c = decomposition.count();
    if problem.p_max.len() != c {
        return Err(Error::InvalidInput(format!(
            "p_max has {} entries but the network has {c} components",
            problem.p_max.len()
        )));
    }
    let mut warnings = Vec::new();
    let mut comps = Vec::with_capacity(c);
    let mut k0 = -2.0 * problem.tau_b;
    for (idx, verts) in decomposition.components.iter().enumerate() {
        let sub = g.induced_subgraph(verts)?;
        let p_b0_local: Vec<f64> = verts.iter().map(|&v| problem.p_b0[v]).collect();
        let bundle = leontief_bundle(&sub, params, &p_b0_local)?;

        let spread = |vals: &[f64]| -> f64 {
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        };
        let p_a0_local: Vec<f64> = verts.iter().map(|&v| problem.p_a0[v]).collect();
        if spread(&p_a0_local) > 1e-9 {
            warnings.push(format!(
                "component {idx}: p_a0 not uniform; using the component maximum as lower bound"
            ));
        }
        if spread(&p_b0_local) > 1e-9 {
            warnings.push(format!(
                "component {idx}: p_b0 not uniform; exact quadratic forms used"
            ));
        }
        let ones = vec![1.0; verts.len()];
        let q = crate::linalg::dot(&ones, &bundle.q_mat.matvec(&ones));
        let v = crate::linalg::dot(&ones, &bundle.v_vec);
        let b_delta: f64 = bundle.b_delta.iter().sum();
        let const_term = crate::linalg::dot(&p_b0_local, &bundle.q_mat.matvec(&p_b0_local));
        let p_a0 = p_a0_local.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let p_max = problem.p_max[idx];
        if p_max < p_a0 - 1e-12 {
            return Err(Error::InvalidInput(format!(
                "component {idx}: p_max = {p_max} is below the pre-intervention price {p_a0}"
            )));
        }
        k0 += bundle.m_sum().matvec(&p_b0_local).iter().sum::<f64>();
        comps.push(CompAggregate {
            vertices: verts.clone(),
            q,
            v,
            b_delta,
            const_term,
            p_a0,
            p_max,
        });
    }
    Ok(ComponentAggregates {
        comps,
        decomposition,
        k0,
        warnings,
    })
}

/// Per-component endpoint rule, ignoring the tolerance coupling: raise to
/// the cap exactly when the direct effect beats the substitutability
/// effect.
pub fn p0_star(agg: &ComponentAggregates) -> Vec<f64> {
    agg.comps
        .iter()
        .map(|c| {
            if c.p_max >= c.v / c.q - c.p_a0 {
                c.p_max
            } else {
                c.p_a0
            }
        })
        .collect()
}

/// Diagnostics of the convex relaxation and its dual.
#[derive(Clone, Debug)]
pub struct RelaxationResult {
    /// `order[k]` is the original component index with the k-th largest
    /// trade-off score gamma.
    pub order: Vec<usize>,
    /// Trade-off scores in ranked order (descending).
    pub gamma: Vec<f64>,
    /// Dual kink locations `kappa = -gamma` in ranked order (ascending).
    pub kappa: Vec<f64>,
    /// Rank of the first component where the substitutability effect
    /// dominates (`gamma < 0`); `None` when no such component exists.
    pub ell_prime: Option<usize>,
    /// Rank at which the sweep first satisfies the tolerance; `None` when
    /// the uncoupled optimum is already feasible.
    pub ell_star: Option<usize>,
    /// Optimal dual multiplier of the tolerance constraint.
    pub lambda_star: f64,
    /// Dual objective at `lambda_star`, mapped to welfare units; equals
    /// `upper_bound` by strong duality.
    pub dual_value: f64,
    /// Relaxation optimizer, in original component order.
    pub bar_p: Vec<f64>,
    pub exact: bool,
    /// Upper bound on the optimal welfare (tight when `exact`).
    pub upper_bound: f64,
    /// Tolerance value at which re-solving is guaranteed exact.
    pub suggested_tau_b: Option<f64>,
}

/// Chord of the per-component objective `q p^2 - v p` between the interval
/// endpoints, evaluated at `x`.
fn chord(c: &CompAggregate, x: f64) -> f64 {
    let f = |p: f64| c.q * p * p - c.v * p;
    if (c.p_max - c.p_a0).abs() < 1e-15 {
        return f(c.p_a0);
    }
    let t = (x - c.p_a0) / (c.p_max - c.p_a0);
    f(c.p_a0) + t * (f(c.p_max) - f(c.p_a0))
}

/// Conjugate of the chordized per-component objective in the rescaled
/// variable `tp = b_delta (p - v / (2q))`.
fn conjugate(c: &CompAggregate, lambda: f64) -> f64 {
    let shift = c.v / (2.0 * c.q);
    let d = -c.q / (c.b_delta * c.b_delta);
    let tp0 = c.b_delta * (c.p_a0 - shift);
    let tu = c.b_delta * (c.p_max - shift);
    (lambda * tu - d * tu * tu).max(lambda * tp0 - d * tp0 * tp0)
}

fn dual_objective(agg: &ComponentAggregates, lambda: f64) -> f64 {
    let tilde_k0 = agg.k0
        - agg
            .comps
            .iter()
            .map(|c| c.b_delta * c.v / (2.0 * c.q))
            .sum::<f64>();
    let raw: f64 = agg.comps.iter().map(|c| conjugate(c, lambda)).sum::<f64>() - lambda * tilde_k0;
    let offset: f64 = agg
        .comps
        .iter()
        .map(|c| c.const_term - c.v * c.v / (4.0 * c.q))
        .sum();
    0.25 * (raw + offset)
}

/// Solves the component-wise uniform pricing problem. Returns the chosen
/// policy plus relaxation diagnostics; `exact` distinguishes a certified
/// optimum from a relaxation-guided feasible policy with an upper bound.
pub fn solve_ptilde(
    g: &Network,
    params: &GameParams,
    problem: &ProblemPtilde,
) -> Result<(PolicyResult, RelaxationResult)> {
    if !game::check_assumption2prime(params) {
        return Err(Error::AssumptionViolation(format!(
            "component-wise solver requires mu < beta*delta (mu = {}, beta*delta = {})",
            params.mu,
            params.beta * params.delta
        )));
    }
    let agg = component_aggregates(g, params, problem)?;
    let c = agg.count();
    let tol = CONSTRAINT_TOL;

    for (idx, comp) in agg.comps.iter().enumerate() {
        if (comp.p_a0 + comp.p_max - comp.v / comp.q).abs() < 1e-12 {
            return Err(Error::Numerical(format!(
                "component {idx} is degenerate: p_a0 + p_max equals v/q; \
                 perturb p_max by ~1e-9 and re-solve"
            )));
        }
    }
    let max_policy: Vec<f64> = agg.comps.iter().map(|c| c.p_max).collect();
    if agg.coupling(&max_policy) < agg.k0 - tol {
        return Err(Error::Infeasible(format!(
            "even the maximal uniform policy violates the tolerance \
             (coupling {:.6} < k0 {:.6})",
            agg.coupling(&max_policy),
            agg.k0
        )));
    }

    let bundle = leontief_bundle(g, params, &problem.p_b0)?;
    let finish = |policy_c: Vec<f64>,
                  certificate: Certificate,
                  relax: RelaxationResult|
     -> Result<(PolicyResult, RelaxationResult)> {
        let policy_a = agg.expand(&policy_c);
        let prices = PriceProfile::new(policy_a.clone(), problem.p_b0.clone())?;
        let (welfare, agg_xb, _) = welfare_at(g, &bundle, &prices)?;
        Ok((
            PolicyResult {
                policy_a,
                policy_b: problem.p_b0.clone(),
                welfare,
                agg_unsustainable: agg_xb,
                certificate,
                optimality_exact: relax.exact,
            },
            relax,
        ))
    };

    // Trade-off scores and the gamma-descending ranking.
    let gamma_orig: Vec<f64> = agg
        .comps
        .iter()
        .map(|comp| comp.q / comp.b_delta * (comp.p_a0 + comp.p_max - comp.v / comp.q))
        .collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&a, &b| {
        gamma_orig[b]
            .partial_cmp(&gamma_orig[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let gamma: Vec<f64> = order.iter().map(|&i| gamma_orig[i]).collect();
    let kappa: Vec<f64> = gamma.iter().map(|&x| -x).collect();
    let ell_prime = gamma.iter().position(|&x| x < 0.0);

    let p0s = p0_star(&agg);
    if agg.coupling(&p0s) >= agg.k0 - tol {
        let upper = agg.welfare(&p0s);
        let relax = RelaxationResult {
            order,
            gamma,
            kappa,
            ell_prime,
            ell_star: None,
            lambda_star: 0.0,
            dual_value: dual_objective(&agg, 0.0),
            bar_p: p0s.clone(),
            exact: true,
            upper_bound: upper,
            suggested_tau_b: None,
        };
        return finish(p0s, Certificate::Cor2IP0Star, relax);
    }

    // The uncoupled optimum is infeasible, so some component with a
    // negative score must be raised; sweep them in ranked order.
    let ell_prime_idx = ell_prime.ok_or_else(|| {
        Error::Numerical("uncoupled optimum infeasible yet no component has gamma < 0".into())
    })?;
    let ranked_policy = |upto: usize| -> Vec<f64> {
        // ranked prefix 0..=upto at the cap, rest at the floor
        let mut p = vec![0.0; c];
        for (rank, &orig) in order.iter().enumerate() {
            p[orig] = if rank <= upto {
                agg.comps[orig].p_max
            } else {
                agg.comps[orig].p_a0
            };
        }
        p
    };
    let mut ell_star = None;
    for rank in ell_prime_idx..c {
        if agg.coupling(&ranked_policy(rank)) >= agg.k0 - tol {
            ell_star = Some(rank);
            break;
        }
    }
    let ell_star = ell_star.ok_or_else(|| {
        Error::Numerical("sweep found no feasible prefix despite a feasible cap policy".into())
    })?;
    let sweep_policy = ranked_policy(ell_star);
    let star_orig = order[ell_star];

    let mut bar_p = sweep_policy.clone();
    let partial: f64 = (0..c)
        .filter(|&j| j != star_orig)
        .map(|j| agg.comps[j].b_delta * sweep_policy[j])
        .sum();
    let star = &agg.comps[star_orig];
    let bar_entry = ((agg.k0 - partial) / star.b_delta).clamp(star.p_a0, star.p_max);
    bar_p[star_orig] = bar_entry;

    let lambda_star = kappa[ell_star];
    let scale = star.p_max.abs().max(1.0);
    let at_upper = (bar_entry - star.p_max).abs() <= 1e-9 * scale;
    let at_lower = (bar_entry - star.p_a0).abs() <= 1e-9 * scale;
    let upper_bound = 0.25
        * agg
            .comps
            .iter()
            .zip(&bar_p)
            .map(|(comp, &p)| chord(comp, p) + comp.const_term)
            .sum::<f64>();
    let suggested_tau_b =
        0.5 * (agg.k0 + 2.0 * problem.tau_b - agg.coupling(&sweep_policy));

    if at_upper || at_lower {
        // The relaxation optimizer sits at an interval endpoint, where the
        // chord meets the quadratic, so it solves the original problem. At
        // the upper endpoint that is the sweep policy itself; at the lower
        // endpoint the tolerance binds at the previous sweep step and
        // bar_p (coupling active exactly) is the optimizer.
        let policy = if at_upper { sweep_policy } else { bar_p };
        let relax = RelaxationResult {
            order,
            gamma,
            kappa,
            ell_prime,
            ell_star: Some(ell_star),
            lambda_star,
            dual_value: dual_objective(&agg, lambda_star),
            bar_p: policy.clone(),
            exact: true,
            upper_bound: agg.welfare(&policy),
            suggested_tau_b: None,
        };
        return finish(policy, Certificate::Thm6Exact, relax);
    }

    let relax = RelaxationResult {
        order,
        gamma,
        kappa,
        ell_prime,
        ell_star: Some(ell_star),
        lambda_star,
        dual_value: dual_objective(&agg, lambda_star),
        bar_p: bar_p.clone(),
        exact: false,
        upper_bound,
        suggested_tau_b: Some(suggested_tau_b),
    };
    finish(bar_p, Certificate::Thm6Relaxed, relax)
}
