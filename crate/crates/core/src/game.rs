//! The coupled-activity game: model parameters, Leontief matrices, interior
//! and non-negativity-constrained Nash equilibria, utilities, and welfare.
//!
//! Each agent exerts effort in a sustainable activity (A) and an
//! unsustainable one (B). Neighbours' efforts are complements within an
//! activity (strength `delta`) and across activities (strength `mu`), while
//! an agent's own two efforts are substitutes (strength `beta`).

use crate::error::{Error, Result};
use crate::linalg::{dot, Lu, Matrix};
use crate::network::Network;

/// Entrywise non-negativity tolerance for equilibrium efforts.
pub const NONNEG_TOL: f64 = 1e-9;
/// Stationarity / complementarity residual tolerance.
pub const KKT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GameParams {
    pub beta: f64,
    pub delta: f64,
    pub mu: f64,
}

impl GameParams {
    pub fn new(beta: f64, delta: f64, mu: f64) -> Result<Self> {
        if !(0.0 < beta && beta < 1.0) {
            return Err(Error::InvalidParams(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        if delta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "delta must be > 0, got {delta}"
            )));
        }
        if mu <= 0.0 {
            return Err(Error::InvalidParams(format!("mu must be > 0, got {mu}")));
        }
        Ok(GameParams { beta, delta, mu })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriceProfile {
    pub p_a: Vec<f64>,
    pub p_b: Vec<f64>,
}

impl PriceProfile {
    pub fn new(p_a: Vec<f64>, p_b: Vec<f64>) -> Result<Self> {
        if p_a.len() != p_b.len() {
            return Err(Error::InvalidInput("price vectors differ in length".into()));
        }
        if p_a.iter().chain(p_b.iter()).any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "prices must be finite and non-negative".into(),
            ));
        }
        Ok(PriceProfile { p_a, p_b })
    }

    pub fn uniform(n: usize, p_a: f64, p_b: f64) -> Result<Self> {
        PriceProfile::new(vec![p_a; n], vec![p_b; n])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EffortProfile {
    pub x_a: Vec<f64>,
    pub x_b: Vec<f64>,
}

impl EffortProfile {
    pub fn zeros(n: usize) -> Self {
        EffortProfile {
            x_a: vec![0.0; n],
            x_b: vec![0.0; n],
        }
    }
}

/// `max{(delta+mu)/(1+beta), |delta-mu|/(1-beta)} * rho(G)`; the game has a
/// unique unconstrained equilibrium when this is below 1.
pub fn assumption1_margin(g: &Network, params: &GameParams) -> Result<f64> {
    let rho = g.spectral_radius(1e-10)?;
    let ratio = ((params.delta + params.mu) / (1.0 + params.beta))
        .max((params.delta - params.mu).abs() / (1.0 - params.beta));
    Ok(ratio * rho)
}

pub fn check_assumption1(g: &Network, params: &GameParams) -> Result<(bool, f64)> {
    let margin = assumption1_margin(g, params)?;
    Ok((margin < 1.0, margin))
}

/// Cross-activity effect weaker than intra-activity effect (`mu < delta`).
/// Boundary points count as violations.
pub fn check_assumption2(params: &GameParams) -> bool {
    params.delta - params.mu > 1e-12 * params.delta
}

/// Cross-activity effect dominated by intra-activity effect and
/// substitutability combined (`mu < beta * delta`). Boundary points count
/// as violations: the characterization degenerates there.
pub fn check_assumption2prime(params: &GameParams) -> bool {
    let bd = params.beta * params.delta;
    bd - params.mu > 1e-12 * bd
}

/// Matrices and derived vectors that every solver consumes. Immutable once
/// built; all equilibrium and welfare routines borrow it concurrently.
#[derive(Clone, Debug)]
pub struct LeontiefBundle {
    pub n: usize,
    pub params: GameParams,
    /// `((1+beta) I - (delta+mu) G)^-1`
    pub m_plus: Matrix,
    /// `((1-beta) I - (delta-mu) G)^-1`
    pub m_minus: Matrix,
    /// `m_minus - m_plus`; maps sustainable price raises to reductions in
    /// unsustainable effort.
    pub m_delta: Matrix,
    /// `(1+beta) m_plus^2 + (1-beta) m_minus^2`
    pub q_mat: Matrix,
    /// `(1-beta) m_minus^2 - (1+beta) m_plus^2`
    pub r_mat: Matrix,
    /// `2 r_mat p_b0`
    pub v_vec: Vec<f64>,
    /// Row sums of `m_delta`: per-agent centrality.
    pub b_delta: Vec<f64>,
    /// Price threshold past which unsustainable effort is driven to zero
    /// (at the bundle's `p_b0`).
    pub p_lim: Vec<f64>,
    pub p_b0: Vec<f64>,
    m_sum: Matrix,
    m_delta_lu: Lu,
    /// `(I - delta G)^-1` when it exists; used by the all-B-zero branch.
    single_activity_inv: Option<Matrix>,
    adjacency: Matrix,
}

impl LeontiefBundle {
    /// `m_plus + m_minus`
    pub fn m_sum(&self) -> &Matrix {
        &self.m_sum
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    /// Threshold vector for an arbitrary unsustainable-price vector.
    pub fn p_lim_for(&self, p_b: &[f64]) -> Vec<f64> {
        self.m_delta_lu.solve(&self.m_sum.matvec(p_b))
    }
}

/// Builds the bundle. Requires the uniqueness condition on network effects;
/// the price vector fixes `v_vec` and `p_lim`.
pub fn leontief_bundle(g: &Network, params: &GameParams, p_b0: &[f64]) -> Result<LeontiefBundle> {
    let n = g.n();
    if p_b0.len() != n {
        return Err(Error::InvalidInput(format!(
            "p_b0 has length {} but the network has {n} agents",
            p_b0.len()
        )));
    }
    let (ok, margin) = check_assumption1(g, params)?;
    if !ok {
        return Err(Error::AssumptionViolation(format!(
            "network-effect margin {margin:.6} >= 1; equilibrium matrices do not exist"
        )));
    }
    let adjacency = g.adjacency_matrix();
    let beta = params.beta;
    let (delta, mu) = (params.delta, params.mu);

    let mk = |diag: f64, off: f64| -> Result<Matrix> {
        let mut m = adjacency.scale(-off);
        for i in 0..n {
            m.set(i, i, m.get(i, i) + diag);
        }
        m.inverse()
    };
    let m_plus = mk(1.0 + beta, delta + mu)?;
    let m_minus = mk(1.0 - beta, delta - mu)?;
    let m_delta = m_minus.sub(&m_plus);
    let m_sum = m_plus.add(&m_minus);

    let q_mat = m_plus
        .matmul(&m_plus)
        .scale(1.0 + beta)
        .add(&m_minus.matmul(&m_minus).scale(1.0 - beta));
    let r_mat = m_minus
        .matmul(&m_minus)
        .scale(1.0 - beta)
        .sub(&m_plus.matmul(&m_plus).scale(1.0 + beta));
    let v_vec = r_mat.matvec(p_b0).iter().map(|x| 2.0 * x).collect();
    let b_delta = m_delta.row_sums();

    let m_delta_lu = m_delta.lu().map_err(|_| {
        Error::Numerical(
            "price-sensitivity matrix is singular; model assumptions likely violated".into(),
        )
    })?;
    let p_lim = m_delta_lu.solve(&m_sum.matvec(p_b0));

    let single_activity_inv = {
        let mut m = adjacency.scale(-delta);
        for i in 0..n {
            m.set(i, i, m.get(i, i) + 1.0);
        }
        m.inverse().ok()
    };

    Ok(LeontiefBundle {
        n,
        params: *params,
        m_plus,
        m_minus,
        m_delta,
        q_mat,
        r_mat,
        v_vec,
        b_delta,
        p_lim,
        p_b0: p_b0.to_vec(),
        m_sum,
        m_delta_lu,
        single_activity_inv,
        adjacency,
    })
}

/// Per-agent reduction in aggregate unsustainable effort per unit raise of
/// that agent's sustainable price.
pub fn centrality(bundle: &LeontiefBundle) -> &[f64] {
    &bundle.b_delta
}

#[derive(Clone, Debug)]
pub struct InteriorEquilibrium {
    pub efforts: EffortProfile,
    /// Smallest entry across both activities.
    pub min_entry: f64,
    /// True when every entry is `>= -NONNEG_TOL`.
    pub all_nonnegative: bool,
}

/// Unconstrained best-response fixed point. Entries may be negative; the
/// flag reports whether the profile is valid as a constrained equilibrium.
pub fn interior_equilibrium(bundle: &LeontiefBundle, prices: &PriceProfile) -> InteriorEquilibrium {
    let sum_a = bundle.m_sum.matvec(&prices.p_a);
    let sum_b = bundle.m_sum.matvec(&prices.p_b);
    let delta_a = bundle.m_delta.matvec(&prices.p_a);
    let delta_b = bundle.m_delta.matvec(&prices.p_b);
    let n = bundle.n;
    let mut x_a = vec![0.0; n];
    let mut x_b = vec![0.0; n];
    for i in 0..n {
        // (M+ - M-) = -m_delta
        x_a[i] = 0.5 * (sum_a[i] - delta_b[i]);
        x_b[i] = 0.5 * (sum_b[i] - delta_a[i]);
    }
    let min_entry = x_a
        .iter()
        .chain(x_b.iter())
        .cloned()
        .fold(f64::INFINITY, f64::min);
    InteriorEquilibrium {
        efforts: EffortProfile { x_a, x_b },
        min_entry,
        all_nonnegative: min_entry >= -NONNEG_TOL,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquilibriumBranch {
    Interior,
    AllBZero,
    MixedMinimalSet,
}

#[derive(Clone, Debug)]
pub struct EquilibriumCertificate {
    pub branch: EquilibriumBranch,
    /// Agents whose unsustainable effort is pinned at zero (mixed branch only).
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
    /// Set when `x_ref` was provided and is not strictly interior.
    pub assumption3_violated: bool,
}

/// Nash equilibrium of the game with non-negative efforts.
pub fn nonneg_equilibrium(
    g: &Network,
    params: &GameParams,
    prices: &PriceProfile,
    x_ref: Option<&EffortProfile>,
) -> Result<(EffortProfile, EquilibriumCertificate)> {
    let bundle = leontief_bundle(g, params, &prices.p_b)?;
    nonneg_equilibrium_with(&bundle, prices, x_ref)
}

/// Same as [`nonneg_equilibrium`] but reuses a prebuilt bundle. The bundle's
/// matrices depend only on the network and parameters, so `prices.p_b` may
/// differ from the bundle's `p_b0`.
pub fn nonneg_equilibrium_with(
    bundle: &LeontiefBundle,
    prices: &PriceProfile,
    x_ref: Option<&EffortProfile>,
) -> Result<(EffortProfile, EquilibriumCertificate)> {
    if prices.p_a.len() != bundle.n || prices.p_b.len() != bundle.n {
        return Err(Error::InvalidInput("price vector length mismatch".into()));
    }
    if !check_assumption2prime(&bundle.params) {
        return Err(Error::AssumptionViolation(format!(
            "constrained equilibrium characterization requires mu < beta*delta \
             (mu = {}, beta*delta = {})",
            bundle.params.mu,
            bundle.params.beta * bundle.params.delta
        )));
    }
    let assumption3_violated =
        x_ref.is_some_and(|r| r.x_a.iter().chain(r.x_b.iter()).any(|&v| v <= 0.0));

    let interior = interior_equilibrium(bundle, prices);
    if interior.all_nonnegative {
        let mut efforts = interior.efforts;
        clamp_tiny_negatives(&mut efforts);
        let kkt = kkt_residual(bundle, prices, &efforts);
        return Ok((
            efforts,
            EquilibriumCertificate {
                branch: EquilibriumBranch::Interior,
                active_set: Vec::new(),
                kkt_residual: kkt,
                assumption3_violated,
            },
        ));
    }

    let p_lim = bundle.p_lim_for(&prices.p_b);
    let above_everywhere = prices
        .p_a
        .iter()
        .zip(&p_lim)
        .all(|(&pa, &pl)| pa >= pl - NONNEG_TOL);
    if above_everywhere {
        let inv = bundle.single_activity_inv.as_ref().ok_or_else(|| {
            Error::Numerical("I - delta*G is singular; cannot form the zero-B equilibrium".into())
        })?;
        let x_a = inv.matvec(&prices.p_a);
        if x_a.iter().any(|&v| v < -NONNEG_TOL) {
            return Err(Error::Numerical(
                "zero-B equilibrium has negative sustainable effort".into(),
            ));
        }
        let efforts = EffortProfile {
            x_a,
            x_b: vec![0.0; bundle.n],
        };
        let kkt = kkt_residual(bundle, prices, &efforts);
        return Ok((
            efforts,
            EquilibriumCertificate {
                branch: EquilibriumBranch::AllBZero,
                active_set: Vec::new(),
                kkt_residual: kkt,
                assumption3_violated,
            },
        ));
    }

    let (efforts, active_set) = mixed_minimal_set(bundle, prices, &interior)?;
    let kkt = kkt_residual(bundle, prices, &efforts);
    if kkt > KKT_TOL {
        return Err(Error::Numerical(format!(
            "mixed equilibrium failed KKT verification (residual {kkt:.3e}, \
             active set {active_set:?})"
        )));
    }
    Ok((
        efforts,
        EquilibriumCertificate {
            branch: EquilibriumBranch::MixedMinimalSet,
            active_set,
            kkt_residual: kkt,
            assumption3_violated,
        },
    ))
}

/// Efforts when the agents in `zero_set` are pinned to zero unsustainable
/// effort: their price incentive for activity B is replaced by the value
/// that makes zero a best response, and the interior formulas are reused.
pub fn pinned_equilibrium(
    bundle: &LeontiefBundle,
    prices: &PriceProfile,
    zero_set: &[usize],
) -> Result<EffortProfile> {
    let n = bundle.n;
    let mut p_hat_b = prices.p_b.clone();
    if !zero_set.is_empty() {
        let m_sum_s = bundle.m_sum.principal_submatrix(zero_set);
        let delta_pa = bundle.m_delta.matvec(&prices.p_a);
        let sum_pb = bundle.m_sum.matvec(&prices.p_b);
        let rhs: Vec<f64> = zero_set
            .iter()
            .map(|&i| {
                let own: f64 = zero_set
                    .iter()
                    .map(|&j| bundle.m_sum.get(i, j) * prices.p_b[j])
                    .sum();
                delta_pa[i] - sum_pb[i] + own
            })
            .collect();
        let solved = m_sum_s
            .lu()
            .map_err(|_| {
                Error::Numerical("singular principal submatrix in pinned equilibrium".into())
            })?
            .solve(&rhs);
        for (k, &i) in zero_set.iter().enumerate() {
            p_hat_b[i] = solved[k];
        }
    }
    debug_assert!(zero_set.iter().all(|&i| i < n));
    let hat_prices = PriceProfile {
        p_a: prices.p_a.clone(),
        p_b: p_hat_b,
    };
    let mut eq = interior_equilibrium(bundle, &hat_prices).efforts;
    for &i in zero_set {
        eq.x_b[i] = 0.0; // exact zero by construction; remove rounding dust
    }
    Ok(eq)
}

/// Greedy growth of the pinned set: start empty, repeatedly pin the most
/// negative remaining unsustainable effort (preferring indices whose
/// unconstrained effort was already negative) until the profile is feasible.
fn mixed_minimal_set(
    bundle: &LeontiefBundle,
    prices: &PriceProfile,
    interior: &InteriorEquilibrium,
) -> Result<(EffortProfile, Vec<usize>)> {
    let n = bundle.n;
    let candidates: Vec<usize> = (0..n)
        .filter(|&i| interior.efforts.x_b[i] < -NONNEG_TOL)
        .collect();
    let mut set: Vec<usize> = Vec::new();
    let mut efforts = interior.efforts.clone();
    loop {
        let negative: Vec<usize> = (0..n)
            .filter(|&i| !set.contains(&i) && efforts.x_b[i] < -NONNEG_TOL)
            .collect();
        let most_negative = |pool: &[usize]| -> Option<usize> {
            pool.iter()
                .copied()
                .min_by(|&a, &b| efforts.x_b[a].partial_cmp(&efforts.x_b[b]).unwrap())
        };
        let preferred: Vec<usize> = negative
            .iter()
            .copied()
            .filter(|i| candidates.contains(i))
            .collect();
        let next = most_negative(&preferred).or_else(|| most_negative(&negative));
        let Some(next) = next else {
            // x_b is entrywise feasible
            if efforts.x_a.iter().any(|&v| v < -NONNEG_TOL) {
                return Err(Error::Numerical(
                    "constrained equilibrium has negative sustainable effort; \
                     inputs are outside the supported regime"
                        .into(),
                ));
            }
            clamp_tiny_negatives(&mut efforts);
            set.sort_unstable();
            return Ok((efforts, set));
        };
        if set.len() == n {
            return Err(Error::Numerical(format!(
                "no pinned set of size <= {n} yields non-negative efforts; \
                 assumption violation or numerical failure (last set {set:?})"
            )));
        }
        set.push(next);
        set.sort_unstable();
        efforts = pinned_equilibrium(bundle, prices, &set)?;
    }
}

fn clamp_tiny_negatives(efforts: &mut EffortProfile) {
    for v in efforts.x_a.iter_mut().chain(efforts.x_b.iter_mut()) {
        if *v < 0.0 && *v >= -NONNEG_TOL {
            *v = 0.0;
        }
    }
}

/// Per-agent utility at the given efforts and prices.
pub fn utilities(
    g: &Network,
    params: &GameParams,
    prices: &PriceProfile,
    efforts: &EffortProfile,
) -> Vec<f64> {
    let n = g.n();
    let (beta, delta, mu) = (params.beta, params.delta, params.mu);
    (0..n)
        .map(|i| {
            let xa = efforts.x_a[i];
            let xb = efforts.x_b[i];
            let mut u = prices.p_a[i] * xa + prices.p_b[i] * xb
                - 0.5 * xa * xa
                - 0.5 * xb * xb
                - beta * xa * xb;
            for j in g.neighbors(i) {
                u += delta * (xa * efforts.x_a[j] + xb * efforts.x_b[j]);
                u += mu * (xa * efforts.x_b[j] + xb * efforts.x_a[j]);
            }
            u
        })
        .collect()
}

/// Partial derivatives of each agent's utility in its own two efforts.
pub fn utility_gradients(
    bundle: &LeontiefBundle,
    prices: &PriceProfile,
    efforts: &EffortProfile,
) -> (Vec<f64>, Vec<f64>) {
    let (beta, delta, mu) = (
        bundle.params.beta,
        bundle.params.delta,
        bundle.params.mu,
    );
    let ga_net = bundle.adjacency.matvec(&efforts.x_a);
    let gb_net = bundle.adjacency.matvec(&efforts.x_b);
    let n = bundle.n;
    let mut grad_a = vec![0.0; n];
    let mut grad_b = vec![0.0; n];
    for i in 0..n {
        grad_a[i] =
            prices.p_a[i] - efforts.x_a[i] - beta * efforts.x_b[i] + delta * ga_net[i] + mu * gb_net[i];
        grad_b[i] =
            prices.p_b[i] - efforts.x_b[i] - beta * efforts.x_a[i] + delta * gb_net[i] + mu * ga_net[i];
    }
    (grad_a, grad_b)
}

/// Max stationarity/complementarity violation: stationarity where effort is
/// positive, gradient `<= 0` where effort sits at the boundary.
pub fn kkt_residual(
    bundle: &LeontiefBundle,
    prices: &PriceProfile,
    efforts: &EffortProfile,
) -> f64 {
    let (grad_a, grad_b) = utility_gradients(bundle, prices, efforts);
    let mut res: f64 = 0.0;
    for i in 0..bundle.n {
        for (x, g) in [(efforts.x_a[i], grad_a[i]), (efforts.x_b[i], grad_b[i])] {
            if x > NONNEG_TOL {
                res = res.max(g.abs());
            } else {
                res = res.max(g.max(0.0));
            }
        }
    }
    res
}

/// Welfare at the unconstrained equilibrium for sustainable prices `p_a`,
/// holding unsustainable prices at the bundle's `p_b0`:
/// `(p_a' Q p_a - v' p_a + p_b0' Q p_b0) / 4`.
pub fn welfare_closed_form(bundle: &LeontiefBundle, p_a: &[f64]) -> f64 {
    let qp = bundle.q_mat.matvec(p_a);
    let qb = bundle.q_mat.matvec(&bundle.p_b0);
    0.25 * (dot(p_a, &qp) - dot(&bundle.v_vec, p_a) + dot(&bundle.p_b0, &qb))
}

/// How a welfare figure was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WelfarePath {
    /// The unconstrained equilibrium is valid; closed form applies.
    Interior,
    /// Direct utility summation at the constrained equilibrium.
    Constrained(EquilibriumBranch),
    /// Prices sit outside the regime the constrained characterization
    /// covers (unconstrained sustainable effort goes negative); the value
    /// is the quadratic objective evaluated at the unconstrained profile.
    Algebraic,
}

/// Welfare and aggregate unsustainable effort at a price profile, plus the
/// path used to compute them. Interior profiles take the closed form;
/// profiles that only violate non-negativity in the unsustainable activity
/// are summed at the constrained equilibrium.
pub fn welfare_at(
    g: &Network,
    bundle: &LeontiefBundle,
    prices: &PriceProfile,
) -> Result<(f64, f64, WelfarePath)> {
    let interior = interior_equilibrium(bundle, prices);
    if interior.all_nonnegative {
        let welfare = if prices.p_b == bundle.p_b0 {
            welfare_closed_form(bundle, &prices.p_a)
        } else {
            utilities(g, &bundle.params, prices, &interior.efforts)
                .iter()
                .sum()
        };
        let agg = aggregate_unsustainable(&interior.efforts);
        return Ok((welfare, agg, WelfarePath::Interior));
    }
    if interior.efforts.x_a.iter().all(|&v| v >= -NONNEG_TOL) {
        let (efforts, cert) = nonneg_equilibrium_with(bundle, prices, None)?;
        let welfare = utilities(g, &bundle.params, prices, &efforts).iter().sum();
        return Ok((
            welfare,
            aggregate_unsustainable(&efforts),
            WelfarePath::Constrained(cert.branch),
        ));
    }
    let welfare = utilities(g, &bundle.params, prices, &interior.efforts)
        .iter()
        .sum();
    Ok((
        welfare,
        aggregate_unsustainable(&interior.efforts),
        WelfarePath::Algebraic,
    ))
}

pub fn aggregate_unsustainable(efforts: &EffortProfile) -> f64 {
    efforts.x_b.iter().sum()
}

/// Threshold separating feasible from infeasible price policies: the
/// tolerance constraint on aggregate unsustainable effort is equivalent to
/// `b_delta . p_a >= k_zero`.
pub fn k_zero(bundle: &LeontiefBundle, tau_b: f64) -> f64 {
    let sums = bundle.m_sum.matvec(&bundle.p_b0);
    sums.iter().sum::<f64>() - 2.0 * tau_b
}
