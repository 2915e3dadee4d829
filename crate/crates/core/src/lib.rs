//! Coupled-activity network games on forest concession networks: Nash
//! equilibria with non-negative efforts, feasibility classification, node
//! centrality, and price-shaping intervention design.
//!
//! Agents on an undirected interaction network split effort between a
//! sustainable activity and an unsustainable one. The library computes the
//! resulting equilibria and solves three welfare-maximizing price
//! interventions subject to a cap on aggregate unsustainable effort:
//!
//! * heterogeneous sustainable-price raises within per-agent bounds
//!   ([`solver_p`]),
//! * joint premiums and penalties funded by price redistribution
//!   ([`solver_redistribution`]),
//! * component-wise uniform pricing via a convex relaxation with a
//!   tightness certificate ([`solver_componentwise`]).
//!
//! Brute-force verification engines live in [`oracle`]; scenario
//! configuration and CSV emission in [`scenario_io`] and [`sweep`].
//!
//! ```
//! use canopy_core::{solve_p, GameParams, Network, ProblemP, SolveOpts};
//!
//! let g = Network::from_edge_list(3, &[(0, 1), (1, 2)])?;
//! let params = GameParams::new(0.2, 0.1, 0.01)?;
//! let problem = ProblemP {
//!     p_a0: vec![0.97; 3],
//!     p_max: vec![1.05; 3],
//!     p_b0: vec![1.0; 3],
//!     tau_b: 10.0,
//! };
//! let result = solve_p(&g, &params, &problem, &SolveOpts::default())?;
//! assert_eq!(result.policy_a, vec![1.05; 3]);
//! assert!(result.optimality_exact);
//! # Ok::<(), canopy_core::Error>(())
//! ```

pub mod error;
pub mod feasibility;
pub mod game;
pub mod linalg;
pub mod network;
pub mod oracle;
pub mod rng;
pub mod scenario_io;
pub mod solver_componentwise;
pub mod solver_p;
pub mod solver_redistribution;
pub mod sweep;

pub use error::{Error, Result};
pub use feasibility::{classify_regime, Regime, RegimeReport};
pub use game::{
    aggregate_unsustainable, centrality, check_assumption1, check_assumption2,
    check_assumption2prime, interior_equilibrium, k_zero, leontief_bundle, nonneg_equilibrium,
    nonneg_equilibrium_with, utilities, welfare_at, welfare_closed_form, EffortProfile,
    EquilibriumBranch, EquilibriumCertificate, GameParams, LeontiefBundle, PriceProfile,
};
pub use network::{ComponentDecomposition, load_network_file, Network};
pub use solver_componentwise::{
    component_aggregates, p0_star, solve_ptilde, ComponentAggregates, ProblemPtilde,
    RelaxationResult,
};
pub use solver_p::{solve_p, solve_p0, thm4_compare, Certificate, PolicyResult, ProblemP, SolveOpts};
pub use solver_redistribution::{
    budget_penalty_check, solve_pr, vanish_penalty, ProblemPR, RedistributionReport,
};
