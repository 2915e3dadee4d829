//! Classifies whether raising sustainable prices can reduce aggregate
//! unsustainable effort, and whether the intervention problems admit any
//! unsustainability-reducing policy at all.

use crate::error::{Error, Result};
use crate::game::{self, GameParams};
use crate::network::Network;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Regime {
    /// Raising any sustainable price increases aggregate unsustainable
    /// effort: price raises alone cannot help.
    SMinus,
    /// The sign of the response depends on the network; decided by direct
    /// inspection of the centrality vector.
    NetworkDependent,
    /// Raising any sustainable price strictly reduces aggregate
    /// unsustainable effort, regardless of the network.
    SPlus,
}

#[derive(Clone, Debug)]
pub struct RegimeReport {
    pub regime: Regime,
    pub triggered_condition: String,
    /// Sign of each centrality entry (-1, 0, +1 at tolerance 1e-12).
    pub b_delta_signs: Vec<i8>,
    pub essentially_feasible_p: bool,
    pub essentially_feasible_pr: bool,
    /// Regime of each connected component, in component order; the overall
    /// label is the weakest of these.
    pub per_component: Vec<Regime>,
}

fn component_regime(params: &GameParams, d_min: usize) -> Regime {
    let GameParams { beta, delta, mu } = *params;
    if mu < beta * delta {
        return Regime::SPlus;
    }
    let mut threshold = 2.0 * beta / (1.0 + beta * beta) * delta;
    if d_min > 0 {
        threshold = threshold.max(beta / d_min as f64);
        if mu > threshold {
            return Regime::SMinus;
        }
    }
    // d_min = 0 leaves beta/d_min unbounded, so the sufficient condition
    // for SMinus is unreachable.
    Regime::NetworkDependent
}

/// Classifies the price-response regime of the network under the given
/// parameters. Requires the uniqueness condition and `mu < delta`.
///
/// `rho_max` is the scenario's per-agent penalty cap when one exists; the
/// redistribution problem admits an unsustainability-reducing policy
/// whenever any penalty is allowed. Without an explicit cap, penalties are
/// assumed available.
pub fn classify_regime(
    g: &Network,
    params: &GameParams,
    rho_max: Option<&[f64]>,
) -> Result<RegimeReport> {
    if !game::check_assumption2(params) {
        return Err(Error::AssumptionViolation(format!(
            "classification requires mu < delta (mu = {}, delta = {})",
            params.mu, params.delta
        )));
    }
    let (ok, margin) = game::check_assumption1(g, params)?;
    if !ok {
        return Err(Error::AssumptionViolation(format!(
            "network-effect margin {margin:.6} >= 1"
        )));
    }

    let comps = g.connected_components();
    let per_component: Vec<Regime> = comps
        .components
        .iter()
        .map(|verts| {
            let d_min = verts
                .iter()
                .map(|&v| g.degree(v))
                .min()
                .unwrap_or(0);
            component_regime(params, d_min)
        })
        .collect();
    let regime = per_component
        .iter()
        .copied()
        .min()
        .unwrap_or(Regime::SPlus);

    let bundle = game::leontief_bundle(g, params, &vec![1.0; g.n()])?;
    let b_delta = game::centrality(&bundle);
    let b_delta_signs: Vec<i8> = b_delta
        .iter()
        .map(|&v| {
            if v > 1e-12 {
                1
            } else if v < -1e-12 {
                -1
            } else {
                0
            }
        })
        .collect();

    let essentially_feasible_p = match regime {
        Regime::SPlus => true,
        Regime::SMinus => false,
        Regime::NetworkDependent => b_delta_signs.iter().any(|&s| s > 0),
    };
    let essentially_feasible_pr = match rho_max {
        Some(r) => r.iter().any(|&v| v > 0.0),
        None => true,
    };
    let triggered_condition = match regime {
        Regime::SPlus => "mu < beta*delta".to_string(),
        Regime::SMinus => "mu > max(2*beta*delta/(1+beta^2), beta/d_min)".to_string(),
        Regime::NetworkDependent => "sign inspection of b_delta".to_string(),
    };

    Ok(RegimeReport {
        regime,
        triggered_condition,
        b_delta_signs,
        essentially_feasible_p,
        essentially_feasible_pr,
        per_component,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_plus_on_connected_graph() {
        let g = Network::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        let params = GameParams::new(0.2, 0.1, 0.01).unwrap();
        let report = classify_regime(&g, &params, None).unwrap();
        assert_eq!(report.regime, Regime::SPlus);
        assert!(report.essentially_feasible_p);
        assert!(report.b_delta_signs.iter().all(|&s| s == 1));
    }

    #[test]
    fn s_minus_on_k4_fixture() {
        let g = Network::complete(4).unwrap();
        let params = GameParams::new(0.1, 0.15, 0.05).unwrap();
        let report = classify_regime(&g, &params, None).unwrap();
        assert_eq!(report.regime, Regime::SMinus);
        assert!(!report.essentially_feasible_p);
        assert!(report.b_delta_signs.iter().all(|&s| s == -1));
    }

    #[test]
    fn network_dependent_on_two_path() {
        let g = Network::from_edge_list(2, &[(0, 1)]).unwrap();
        let params = GameParams::new(0.2, 0.1, 0.05).unwrap();
        let report = classify_regime(&g, &params, None).unwrap();
        assert_eq!(report.regime, Regime::NetworkDependent);
    }

    #[test]
    fn assumption2_violation_rejected() {
        let g = Network::from_edge_list(2, &[(0, 1)]).unwrap();
        let params = GameParams::new(0.2, 0.1, 0.15).unwrap();
        assert!(matches!(
            classify_regime(&g, &params, None),
            Err(Error::AssumptionViolation(_))
        ));
    }

    #[test]
    fn pr_feasibility_follows_penalties() {
        let g = Network::from_edge_list(2, &[(0, 1)]).unwrap();
        let params = GameParams::new(0.2, 0.1, 0.01).unwrap();
        let yes = classify_regime(&g, &params, Some(&[0.0, 0.3])).unwrap();
        assert!(yes.essentially_feasible_pr);
        let no = classify_regime(&g, &params, Some(&[0.0, 0.0])).unwrap();
        assert!(!no.essentially_feasible_pr);
    }

    #[test]
    fn isolated_node_blocks_s_minus_shortcut() {
        // K4 triggers the degree-based test, but the isolated node keeps
        // beta/d_min unbounded on its own component.
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in (i + 1)..4 {
                edges.push((i, j));
            }
        }
        let g = Network::from_edge_list(5, &edges).unwrap();
        let params = GameParams::new(0.1, 0.15, 0.05).unwrap();
        let report = classify_regime(&g, &params, None).unwrap();
        assert_eq!(report.per_component.len(), 2);
        assert_eq!(report.per_component[0], Regime::SMinus);
        assert_eq!(report.per_component[1], Regime::NetworkDependent); // isolated
        assert_eq!(report.regime, Regime::SMinus); // weakest wins
    }

    #[test]
    fn classification_invariant_to_relabeling() {
        let params = GameParams::new(0.2, 0.1, 0.05).unwrap();
        let g1 = Network::from_edge_list(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let g2 = Network::from_edge_list(4, &[(3, 2), (2, 1), (1, 0)]).unwrap();
        let r1 = classify_regime(&g1, &params, None).unwrap();
        let r2 = classify_regime(&g2, &params, None).unwrap();
        assert_eq!(r1.regime, r2.regime);
    }
}
