//! Joint choice of sustainability premiums and unsustainability penalties
//! under a per-agent price-adjustment budget, including the zero-budget
//! redistribution setting.

use crate::error::{Error, Result};
use crate::game::{
    self, aggregate_unsustainable, interior_equilibrium, leontief_bundle, nonneg_equilibrium_with,
    utilities, GameParams, LeontiefBundle, PriceProfile,
};
use crate::network::Network;
use crate::oracle;
use crate::solver_p::{Certificate, PolicyResult};

#[derive(Clone, Debug)]
pub struct ProblemPR {
    pub p_a0: Vec<f64>,
    pub p_b0: Vec<f64>,
    /// Maximum per-unit penalty on unsustainable effort, per agent.
    pub rho_max: Vec<f64>,
    /// External price-adjustment budget, per agent.
    pub budget: Vec<f64>,
    pub tau_b: f64,
}

impl ProblemPR {
    pub fn validate(&self) -> Result<()> {
        let n = self.p_a0.len();
        if self.p_b0.len() != n || self.rho_max.len() != n || self.budget.len() != n {
            return Err(Error::InvalidInput("vector length mismatch".into()));
        }
        if n == 0 {
            return Err(Error::InvalidInput("empty problem".into()));
        }
        if self.tau_b < 0.0 {
            return Err(Error::InvalidInput("tau_b must be >= 0".into()));
        }
        for i in 0..n {
            if self.rho_max[i] < 0.0 || self.rho_max[i] > self.p_b0[i] {
                return Err(Error::InvalidInput(format!(
                    "rho_max[{i}] must lie in [0, p_b0[{i}]]"
                )));
            }
            if self.budget[i] < 0.0 {
                return Err(Error::InvalidInput(format!("budget[{i}] must be >= 0")));
            }
        }
        Ok(())
    }

    /// Maximum-penalty, maximum-premium policy.
    pub fn maximal_policy(&self) -> (Vec<f64>, Vec<f64>) {
        let p_a = self
            .p_a0
            .iter()
            .zip(&self.rho_max)
            .zip(&self.budget)
            .map(|((a, r), b)| a + r + b)
            .collect();
        let p_b = self
            .p_b0
            .iter()
            .zip(&self.rho_max)
            .map(|(p, r)| p - r)
            .collect();
        (p_a, p_b)
    }
}

#[derive(Clone, Debug)]
pub struct BudgetPenaltyCheck {
    /// `rho_max_i + budget_i / 2 >= p_b0_i - p_a0_i`, per agent.
    pub per_agent: Vec<bool>,
    pub all: bool,
}

/// Budget-penalty sufficiency: when it holds, the maximal policy is
/// welfare-optimal and leaves no agent worse off.
pub fn budget_penalty_check(p: &ProblemPR) -> BudgetPenaltyCheck {
    let per_agent: Vec<bool> = (0..p.p_a0.len())
        .map(|i| p.rho_max[i] + 0.5 * p.budget[i] >= p.p_b0[i] - p.p_a0[i])
        .collect();
    let all = per_agent.iter().all(|&b| b);
    BudgetPenaltyCheck { per_agent, all }
}

#[derive(Clone, Debug)]
pub struct RedistributionReport {
    pub eq13: BudgetPenaltyCheck,
    /// Post-intervention minus pre-intervention utility, per agent, at the
    /// returned policy.
    pub per_agent_utility_change: Vec<f64>,
    /// True when the returned policy is certified to leave no agent worse
    /// off (only claimed when the sufficiency condition holds).
    pub utility_non_decrease_guaranteed: bool,
    /// The maximum-penalty policy minimizes aggregate unsustainable effort
    /// over the feasible set regardless of the welfare branch taken.
    pub minimal_effort_policy: (Vec<f64>, Vec<f64>),
    pub minimal_effort_aggregate: f64,
    pub assumption3_violated: bool,
}

/// Solves the redistribution problem.
pub fn solve_pr(
    g: &Network,
    params: &GameParams,
    p: &ProblemPR,
) -> Result<(PolicyResult, RedistributionReport)> {
    p.validate()?;
    let n = g.n();
    if p.p_a0.len() != n {
        return Err(Error::InvalidInput(
            "problem dimension does not match the network".into(),
        ));
    }
    if !game::check_assumption2prime(params) {
        return Err(Error::AssumptionViolation(format!(
            "redistribution solver requires mu < beta*delta (mu = {}, beta*delta = {})",
            params.mu,
            params.beta * params.delta
        )));
    }
    let bundle = leontief_bundle(g, params, &p.p_b0)?;

    let pre_prices = PriceProfile::new(p.p_a0.clone(), p.p_b0.clone())?;
    let (pre_eq, pre_cert) = nonneg_equilibrium_with(&bundle, &pre_prices, None)?;
    let assumption3_violated = pre_eq
        .x_a
        .iter()
        .chain(pre_eq.x_b.iter())
        .any(|&v| v <= 0.0)
        || pre_cert.branch != game::EquilibriumBranch::Interior;
    let pre_utilities = utilities(g, params, &pre_prices, &pre_eq);

    let (max_a, max_b) = p.maximal_policy();
    let max_prices = PriceProfile::new(max_a.clone(), max_b.clone())?;
    let (max_eq, _) = nonneg_equilibrium_with(&bundle, &max_prices, Some(&pre_eq))?;
    let minimal_effort_aggregate = aggregate_unsustainable(&max_eq);
    if minimal_effort_aggregate > p.tau_b + 1e-8 {
        return Err(Error::Infeasible(format!(
            "aggregate unsustainable effort {minimal_effort_aggregate:.6} exceeds tau_b = {} \
             even under maximum penalties and premiums",
            p.tau_b
        )));
    }

    let eq13 = budget_penalty_check(p);
    let report_for = |policy_a: &[f64],
                      policy_b: &[f64],
                      certificate: Certificate,
                      exact: bool,
                      guaranteed: bool|
     -> Result<(PolicyResult, RedistributionReport)> {
        let prices = PriceProfile::new(policy_a.to_vec(), policy_b.to_vec())?;
        let (eq, _) = nonneg_equilibrium_with(&bundle, &prices, Some(&pre_eq))?;
        let post_utilities = utilities(g, params, &prices, &eq);
        let change: Vec<f64> = post_utilities
            .iter()
            .zip(&pre_utilities)
            .map(|(a, b)| a - b)
            .collect();
        let result = PolicyResult {
            policy_a: policy_a.to_vec(),
            policy_b: policy_b.to_vec(),
            welfare: post_utilities.iter().sum(),
            agg_unsustainable: aggregate_unsustainable(&eq),
            certificate,
            optimality_exact: exact,
        };
        let report = RedistributionReport {
            eq13: eq13.clone(),
            per_agent_utility_change: change,
            utility_non_decrease_guaranteed: guaranteed,
            minimal_effort_policy: (max_a.clone(), max_b.clone()),
            minimal_effort_aggregate,
            assumption3_violated,
        };
        Ok((result, report))
    };

    if eq13.all {
        return report_for(&max_a, &max_b, Certificate::Thm5MaxRho, true, true);
    }
    let budget_all_zero = p.budget.iter().all(|&b| b == 0.0);
    if budget_all_zero && eq13.per_agent.iter().all(|&ok| !ok) {
        return report_for(
            &p.p_a0,
            &p.p_b0,
            Certificate::Prop3StatusQuo,
            true,
            false,
        );
    }

    // Mixed region not covered by a closed form: grid search over uniform
    // uptake fractions of premiums and penalties.
    let grid = oracle::grid_search_pr(g, params, p, 21)?;
    let policy_a = grid.policy_a.clone();
    let policy_b = grid.policy_b.clone();
    report_for(&policy_a, &policy_b, Certificate::GridFallback, false, false)
}

#[derive(Clone, Debug)]
pub struct VanishPenalty {
    /// Penalty vector that drives every agent's unsustainable effort to
    /// zero when combined with the budget.
    pub rho: Vec<f64>,
    /// True when some entry is negative (the required penalty is not
    /// implementable as stated; the caller must handle it).
    pub has_negative: bool,
    /// Max |unconstrained unsustainable effort| at the induced policy.
    pub residual: f64,
}

/// Solves for the penalty vector under which unsustainable effort vanishes:
/// the post-redistribution sustainable price meets the zero-effort
/// threshold evaluated at the reduced unsustainable price. The linear
/// system is `2 M^- rho = (M^+ + M^-) p_b0 - M_delta (p_a0 + b)`.
pub fn vanish_penalty(
    bundle: &LeontiefBundle,
    p_a0: &[f64],
    budget: &[f64],
) -> Result<VanishPenalty> {
    let n = bundle.n;
    if p_a0.len() != n || budget.len() != n {
        return Err(Error::InvalidInput("vector length mismatch".into()));
    }
    let shifted: Vec<f64> = p_a0.iter().zip(budget).map(|(a, b)| a + b).collect();
    let rhs: Vec<f64> = bundle
        .m_sum()
        .matvec(&bundle.p_b0)
        .iter()
        .zip(&bundle.m_delta.matvec(&shifted))
        .map(|(s, d)| s - d)
        .collect();
    let system = bundle.m_minus.scale(2.0);
    let rho = system
        .lu()
        .map_err(|_| Error::Numerical("2 M^- is singular".into()))?
        .solve(&rhs);

    let p_a: Vec<f64> = shifted.iter().zip(&rho).map(|(s, r)| s + r).collect();
    let p_b: Vec<f64> = bundle.p_b0.iter().zip(&rho).map(|(p, r)| p - r).collect();
    let sum_b = bundle.m_sum().matvec(&p_b);
    let delta_a = bundle.m_delta.matvec(&p_a);
    let residual = sum_b
        .iter()
        .zip(&delta_a)
        .map(|(s, d)| (0.5 * (s - d)).abs())
        .fold(0.0, f64::max);
    if residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "vanish-penalty solve left unsustainable-effort residual {residual:.3e}"
        )));
    }
    let has_negative = rho.iter().any(|&r| r < 0.0);
    Ok(VanishPenalty {
        rho,
        has_negative,
        residual,
    })
}

/// A commonly quoted but incorrect closed form for the vanish penalty,
/// `rho = (M^-)^-1 (M^+ p_b0 - p_a0 - M_delta b) / 2`. It fails the
/// single-agent sanity check and does not zero unsustainable effort (see
/// [`vanish_penalty`] for the system that does); kept behind the
/// `--paper-literal` flag for side-by-side comparison.
pub fn vanish_penalty_paper_literal(
    bundle: &LeontiefBundle,
    p_a0: &[f64],
    budget: &[f64],
) -> Result<Vec<f64>> {
    let n = bundle.n;
    if p_a0.len() != n || budget.len() != n {
        return Err(Error::InvalidInput("vector length mismatch".into()));
    }
    let m_plus_b = bundle.m_plus.matvec(&bundle.p_b0);
    let m_delta_b = bundle.m_delta.matvec(budget);
    let rhs: Vec<f64> = (0..n)
        .map(|i| m_plus_b[i] - p_a0[i] - m_delta_b[i])
        .collect();
    let rho = bundle
        .m_minus
        .lu()
        .map_err(|_| Error::Numerical("M^- is singular".into()))?
        .solve(&rhs);
    Ok(rho.iter().map(|r| 0.5 * r).collect())
}

/// Interior unsustainable effort at a redistribution policy; used by tests
/// to confirm the vanish property.
pub fn interior_xb_at(
    bundle: &LeontiefBundle,
    p_a: &[f64],
    p_b: &[f64],
) -> Result<Vec<f64>> {
    let prices = PriceProfile::new(p_a.to_vec(), p_b.to_vec())?;
    Ok(interior_equilibrium(bundle, &prices).efforts.x_b)
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
    fn budget_penalty_examples() {
        let mk = |rho: f64, b: f64| ProblemPR {
            p_a0: vec![1.0],
            p_b0: vec![1.2],
            rho_max: vec![rho],
            budget: vec![b],
            tau_b: 100.0,
        };
        assert!(budget_penalty_check(&mk(0.3, 0.0)).all);
        assert!(!budget_penalty_check(&mk(0.1, 0.0)).all);
        // p_a0 >= p_b0 makes the inequality hold for any rho, b
        let p = ProblemPR {
            p_a0: vec![1.3],
            p_b0: vec![1.2],
            rho_max: vec![0.0],
            budget: vec![0.0],
            tau_b: 100.0,
        };
        assert!(budget_penalty_check(&p).all);
    }

    #[test]
    fn solve_pr_max_penalty_branch() {
        let g = two_path();
        let p = ProblemPR {
            p_a0: vec![1.0, 1.0],
            p_b0: vec![1.2, 1.2],
            rho_max: vec![0.3, 0.3],
            budget: vec![0.0, 0.0],
            tau_b: 100.0,
        };
        let (result, report) = solve_pr(&g, &std_params(), &p).unwrap();
        assert_eq!(result.certificate, Certificate::Thm5MaxRho);
        for i in 0..2 {
            assert_abs_diff_eq!(result.policy_a[i], 1.3, epsilon = 1e-12);
            assert_abs_diff_eq!(result.policy_b[i], 0.9, epsilon = 1e-12);
        }
        assert!(report.utility_non_decrease_guaranteed);
        for &d in &report.per_agent_utility_change {
            assert!(d >= -1e-9, "utility decreased by {d}");
        }
    }

    #[test]
    fn solve_pr_status_quo_branch() {
        let g = two_path();
        let p = ProblemPR {
            p_a0: vec![1.0, 1.0],
            p_b0: vec![1.2, 1.2],
            rho_max: vec![0.1, 0.1],
            budget: vec![0.0, 0.0],
            tau_b: 100.0,
        };
        let (result, _) = solve_pr(&g, &std_params(), &p).unwrap();
        assert_eq!(result.certificate, Certificate::Prop3StatusQuo);
        assert_eq!(result.policy_a, vec![1.0, 1.0]);
        assert_eq!(result.policy_b, vec![1.2, 1.2]);
    }

    #[test]
    fn solve_pr_reduces_to_p_with_zero_penalties() {
        // rho_max = 0 and budget = p_max - p_a0 with prices already in the
        // premium regime: the optimum matches raising prices to the bound.
        let g = two_path();
        let p = ProblemPR {
            p_a0: vec![1.05, 1.05],
            p_b0: vec![1.0, 1.0],
            rho_max: vec![0.0, 0.0],
            budget: vec![0.1, 0.1],
            tau_b: 100.0,
        };
        let (result, _) = solve_pr(&g, &std_params(), &p).unwrap();
        assert_eq!(result.certificate, Certificate::Thm5MaxRho);
        for i in 0..2 {
            assert_abs_diff_eq!(result.policy_a[i], 1.15, epsilon = 1e-12);
            assert_abs_diff_eq!(result.policy_b[i], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn solve_pr_infeasible_tolerance() {
        let g = two_path();
        let p = ProblemPR {
            p_a0: vec![1.0, 1.0],
            p_b0: vec![1.2, 1.2],
            rho_max: vec![0.3, 0.3],
            budget: vec![0.0, 0.0],
            tau_b: 0.0,
        };
        assert!(matches!(
            solve_pr(&g, &std_params(), &p),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn vanish_penalty_single_agent() {
        let g = Network::empty(1).unwrap();
        let bundle = leontief_bundle(&g, &std_params(), &[1.0]).unwrap();
        let v = vanish_penalty(&bundle, &[0.5], &[0.0]).unwrap();
        assert_abs_diff_eq!(v.rho[0], 0.75, epsilon = 1e-9);
        assert!(!v.has_negative);
        // p_a = 1.25 equals the zero-effort threshold at p_b = 0.25
        assert_abs_diff_eq!(0.5 + v.rho[0], 0.25 / 0.2, epsilon = 1e-9);
    }

    #[test]
    fn vanish_penalty_zero_at_threshold() {
        let g = Network::empty(1).unwrap();
        let bundle = leontief_bundle(&g, &std_params(), &[1.0]).unwrap();
        // p_a0 = p_b0 / beta is already at the threshold
        let v = vanish_penalty(&bundle, &[5.0], &[0.0]).unwrap();
        assert_abs_diff_eq!(v.rho[0], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn vanish_penalty_two_path_symmetric() {
        let bundle = leontief_bundle(&two_path(), &std_params(), &[1.0, 1.0]).unwrap();
        let v = vanish_penalty(&bundle, &[0.5, 0.5], &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v.rho[0], v.rho[1], epsilon = 1e-12);
        let p_a: Vec<f64> = v.rho.iter().map(|r| 0.5 + r).collect();
        let p_b: Vec<f64> = v.rho.iter().map(|r| 1.0 - r).collect();
        let xb = interior_xb_at(&bundle, &p_a, &p_b).unwrap();
        for &x in &xb {
            assert_abs_diff_eq!(x, 0.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn paper_literal_form_differs() {
        let g = Network::empty(1).unwrap();
        let bundle = leontief_bundle(&g, &std_params(), &[1.0]).unwrap();
        let literal = vanish_penalty_paper_literal(&bundle, &[0.5], &[0.0]).unwrap();
        let corrected = vanish_penalty(&bundle, &[0.5], &[0.0]).unwrap();
        assert!((literal[0] - corrected.rho[0]).abs() > 1e-3);
        // and the literal form does not zero unsustainable effort
        let p_a = vec![0.5 + literal[0]];
        let p_b = vec![1.0 - literal[0]];
        let xb = interior_xb_at(&bundle, &p_a, &p_b).unwrap();
        assert!(xb[0].abs() > 1e-3);
    }

    #[test]
    fn rho_bounds_validated() {
        let p = ProblemPR {
            p_a0: vec![1.0],
            p_b0: vec![1.2],
            rho_max: vec![1.3],
            budget: vec![0.0],
            tau_b: 1.0,
        };
        assert!(p.validate().is_err());
    }
}
