//! Shared fixtures for the integration suites: an independent dense
//! eigensolver used as the spectral-radius oracle, and seeded instance
//! generators.

#![allow(dead_code)]

use canopy_core::game::GameParams;
use canopy_core::linalg::Matrix;
use canopy_core::network::Network;
use canopy_core::rng::SplitMix64;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
/// Independent of the power-iteration path it cross-checks.
pub fn symmetric_eigenvalues(m: &Matrix) -> Vec<f64> {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off.sqrt() < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

pub fn jacobi_spectral_radius(g: &Network) -> f64 {
    symmetric_eigenvalues(&g.adjacency_matrix())
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max)
}

/// Random connected graph: a random spanning tree plus `extra` chords.
pub fn random_connected_graph(rng: &mut SplitMix64, n: usize, extra: usize) -> Network {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.below(v), v));
    }
    for _ in 0..extra {
        let i = rng.below(n);
        let j = rng.below(n);
        if i != j {
            edges.push((i.min(j), i.max(j)));
        }
    }
    Network::from_edge_list(n, &edges).expect("valid random graph")
}

/// Disjoint union of random connected components with the given sizes.
pub fn random_components(rng: &mut SplitMix64, sizes: &[usize], extra_per: usize) -> Network {
    let n: usize = sizes.iter().sum();
    let mut edges = Vec::new();
    let mut base = 0;
    for &size in sizes {
        for v in 1..size {
            edges.push((base + rng.below(v), base + v));
        }
        for _ in 0..extra_per {
            let i = base + rng.below(size);
            let j = base + rng.below(size);
            if i != j {
                edges.push((i.min(j), i.max(j)));
            }
        }
        base += size;
    }
    Network::from_edge_list(n, &edges).expect("valid component graph")
}

/// Random parameters satisfying the uniqueness condition with margin at
/// most `margin_cap`, and the domination condition `mu < beta * delta`.
pub fn random_dominated_params(
    rng: &mut SplitMix64,
    g: &Network,
    margin_cap: f64,
) -> GameParams {
    let beta = rng.range_f64(0.05, 0.6);
    let t = rng.range_f64(0.05, 0.9); // mu = t * beta * delta
    let rho = g.spectral_radius(1e-10).unwrap();
    let delta = if rho < 1e-9 {
        rng.range_f64(0.05, 0.3)
    } else {
        // pins the dominant ratio (delta - mu)/(1 - beta) * rho at `m`
        let m = rng.range_f64(0.1, margin_cap);
        m * (1.0 - beta) / (rho * (1.0 - t * beta))
    };
    let mu = t * beta * delta;
    GameParams::new(beta, delta, mu).expect("valid params")
}

pub fn random_price_vec(rng: &mut SplitMix64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.range_f64(lo, hi)).collect()
}

/// True when the unconstrained equilibrium at `(p_a, p_b)` has strictly
/// positive efforts in both activities (the pre-intervention assumption
/// the intervention results rely on).
pub fn pre_intervention_interior(
    g: &Network,
    params: &GameParams,
    p_a: &[f64],
    p_b: &[f64],
) -> bool {
    use canopy_core::game::{interior_equilibrium, leontief_bundle, PriceProfile};
    let Ok(bundle) = leontief_bundle(g, params, p_b) else {
        return false;
    };
    let Ok(prices) = PriceProfile::new(p_a.to_vec(), p_b.to_vec()) else {
        return false;
    };
    let eq = interior_equilibrium(&bundle, &prices);
    eq.efforts
        .x_a
        .iter()
        .chain(eq.efforts.x_b.iter())
        .all(|&v| v > 0.0)
}
