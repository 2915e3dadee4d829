//! Undirected simple graphs over agents: loading, validation, components,
//! degrees, and spectral radius.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Undirected simple graph with binary adjacency and zero diagonal.
/// Immutable after construction; shareable across threads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    n: usize,
    adj: Vec<bool>,
}

/// Partition of `[n]` into connected components, ordered by smallest
/// contained vertex index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentDecomposition {
    pub components: Vec<Vec<usize>>,
}

impl ComponentDecomposition {
    pub fn count(&self) -> usize {
        self.components.len()
    }
}

impl Network {
    /// Builds a network from an edge list. Duplicate edges fold into one;
    /// self-loops and out-of-range endpoints are rejected.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize)]) -> Result<Network> {
        if n == 0 {
            return Err(Error::InvalidNetwork("agent count must be >= 1".into()));
        }
        let mut adj = vec![false; n * n];
        for &(i, j) in edges {
            if i == j {
                return Err(Error::InvalidNetwork(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            adj[i * n + j] = true;
            adj[j * n + i] = true;
        }
        Ok(Network { n, adj })
    }

    pub fn empty(n: usize) -> Result<Network> {
        Network::from_edge_list(n, &[])
    }

    pub fn complete(n: usize) -> Result<Network> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        Network::from_edge_list(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).min().unwrap_or(0)
    }

    pub fn adjacency_matrix(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| {
            if self.adj[i * self.n + j] {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn connected_components(&self) -> ComponentDecomposition {
        let mut seen = vec![false; self.n];
        let mut components = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
        ComponentDecomposition { components }
    }

    /// Subgraph induced by `verts` (vertex k of the result is `verts[k]`).
    pub fn induced_subgraph(&self, verts: &[usize]) -> Result<Network> {
        let mut edges = Vec::new();
        for (a, &i) in verts.iter().enumerate() {
            for (b, &j) in verts.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    edges.push((a, b));
                }
            }
        }
        Network::from_edge_list(verts.len(), &edges)
    }

    /// Spectral radius by power iteration, seeded with the all-ones vector.
    ///
    /// The adjacency matrix is symmetric and entrywise non-negative, so the
    /// dominant eigenvector of each connected component has non-negative
    /// entries and overlaps the seed. Disconnected graphs take the maximum
    /// over per-component iterations.
    pub fn spectral_radius(&self, tol: f64) -> Result<f64> {
        if tol <= 0.0 {
            return Err(Error::InvalidInput("spectral radius tol must be > 0".into()));
        }
        let comps = self.connected_components();
        let mut rho: f64 = 0.0;
        for comp in &comps.components {
            if comp.len() == 1 {
                continue; // isolated vertex contributes eigenvalue 0
            }
            let sub = self.induced_subgraph(comp)?;
            rho = rho.max(power_iteration(&sub, tol)?);
        }
        Ok(rho)
    }
}

const POWER_ITERATION_CAP: usize = 10_000;
/// Diagonal shift separating the Perron eigenvalue from a possible
/// mirror-image eigenvalue at `-rho` (bipartite components).
const POWER_ITERATION_SHIFT: f64 = 1.0;

fn power_iteration(g: &Network, tol: f64) -> Result<f64> {
    let n = g.n();
    let shift = POWER_ITERATION_SHIFT;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda_old = f64::INFINITY;
    for _ in 0..POWER_ITERATION_CAP {
        // y = (A + shift I) x
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = shift * x[i];
            for j in g.neighbors(i) {
                acc += x[j];
            }
            y[i] = acc;
        }
        let num: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        let lambda = num / den - shift;
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (lambda - lambda_old).abs() < tol {
            return Ok(lambda);
        }
        lambda_old = lambda;
    }
    Err(Error::Numerical(format!(
        "power iteration did not converge within {POWER_ITERATION_CAP} iterations \
         (last estimate {lambda_old})"
    )))
}

#[derive(Deserialize)]
struct NetworkJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// Reads a network from JSON: `{"n": N, "edges": [[i, j], ...]}`.
pub fn read_network_json(path: impl AsRef<Path>) -> Result<Network> {
    let text = std::fs::read_to_string(path)?;
    let parsed: NetworkJson = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("network json: {e}")))?;
    Network::from_edge_list(parsed.n, &parsed.edges)
}

/// Reads an edge list CSV with header `src,dst` (0-based vertex indices).
/// `n` is the number of agents; when `None`, it is 1 + the largest index.
pub fn read_network_csv(path: impl AsRef<Path>, n: Option<usize>) -> Result<Network> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let src_col = headers.iter().position(|h| h.trim() == "src");
    let dst_col = headers.iter().position(|h| h.trim() == "dst");
    let (src_col, dst_col) = match (src_col, dst_col) {
        (Some(s), Some(d)) => (s, d),
        _ => {
            return Err(Error::Config(
                "network csv must have header columns `src` and `dst`".into(),
            ))
        }
    };
    let mut edges = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |col: usize| -> Result<usize> {
            record
                .get(col)
                .ok_or_else(|| Error::Config("short csv record".into()))?
                .trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad vertex index: {e}")))
        };
        edges.push((parse(src_col)?, parse(dst_col)?));
    }
    let n = n.unwrap_or_else(|| {
        edges
            .iter()
            .map(|&(i, j)| i.max(j) + 1)
            .max()
            .unwrap_or(1)
    });
    Network::from_edge_list(n, &edges)
}

/// Loads a network from a file, dispatching on the extension
/// (`.json` vs anything else, treated as CSV).
pub fn load_network_file(path: impl AsRef<Path>, n: Option<usize>) -> Result<Network> {
    let p = path.as_ref();
    match p.extension().and_then(|e| e.to_str()) {
        Some("json") => read_network_json(p),
        _ => read_network_csv(p, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_edge_path() {
        let g = Network::from_edge_list(2, &[(0, 1)]).unwrap();
        assert!(g.has_edge(0, 1) && g.has_edge(1, 0));
        assert_eq!(g.degree(0), 1);
    }

    #[test]
    fn empty_graph() {
        let g = Network::empty(3).unwrap();
        assert_eq!(g.edges().len(), 0);
        assert_eq!(g.min_degree(), 0);
    }

    #[test]
    fn duplicate_and_reversed_edges_fold() {
        let g = Network::from_edge_list(3, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        let h = Network::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn self_loop_rejected() {
        assert!(Network::from_edge_list(2, &[(1, 1)]).is_err());
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(Network::from_edge_list(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn zero_agents_rejected() {
        assert!(Network::from_edge_list(0, &[]).is_err());
    }

    #[test]
    fn components_path() {
        let g = Network::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        let c = g.connected_components();
        assert_eq!(c.components, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn components_singletons() {
        let g = Network::empty(3).unwrap();
        let c = g.connected_components();
        assert_eq!(c.components, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn components_mixed() {
        let g = Network::from_edge_list(5, &[(0, 1), (2, 3)]).unwrap();
        let c = g.connected_components();
        assert_eq!(c.components, vec![vec![0, 1], vec![2, 3], vec![4]]);
    }

    #[test]
    fn components_idempotent() {
        let g = Network::from_edge_list(6, &[(0, 5), (1, 4)]).unwrap();
        assert_eq!(g.connected_components(), g.connected_components());
    }

    #[test]
    fn spectral_radius_two_path() {
        let g = Network::from_edge_list(2, &[(0, 1)]).unwrap();
        assert_abs_diff_eq!(g.spectral_radius(1e-10).unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn spectral_radius_k4() {
        let g = Network::complete(4).unwrap();
        assert_abs_diff_eq!(g.spectral_radius(1e-10).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn spectral_radius_three_path() {
        let g = Network::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert_abs_diff_eq!(
            g.spectral_radius(1e-10).unwrap(),
            2.0_f64.sqrt(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn spectral_radius_disconnected_takes_max() {
        // K3 (rho = 2) plus an isolated edge (rho = 1)
        let g = Network::from_edge_list(5, &[(0, 1), (1, 2), (0, 2), (3, 4)]).unwrap();
        assert_abs_diff_eq!(g.spectral_radius(1e-10).unwrap(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn json_and_csv_files_roundtrip() {
        let dir = std::env::temp_dir().join(format!("canopy_net_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let json = dir.join("g.json");
        std::fs::write(&json, r#"{"n": 3, "edges": [[0, 1], [1, 2]]}"#).unwrap();
        let csv = dir.join("g.csv");
        std::fs::write(&csv, "src,dst\n0,1\n1,2\n").unwrap();
        let a = load_network_file(&json, None).unwrap();
        let b = load_network_file(&csv, Some(3)).unwrap();
        assert_eq!(a, b);
        // n inferred from the largest index when omitted
        let c = load_network_file(&csv, None).unwrap();
        assert_eq!(c.n(), 3);
    }

    #[test]
    fn csv_without_expected_header_rejected() {
        let dir = std::env::temp_dir().join(format!("canopy_net_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("bad.csv");
        std::fs::write(&csv, "from,to\n0,1\n").unwrap();
        assert!(read_network_csv(&csv, None).is_err());
    }

    #[test]
    fn spectral_radius_rejects_bad_tolerance() {
        let g = Network::complete(3).unwrap();
        assert!(g.spectral_radius(0.0).is_err());
        assert!(g.spectral_radius(-1.0).is_err());
    }

    #[test]
    fn min_degree_examples() {
        assert_eq!(Network::complete(4).unwrap().min_degree(), 3);
        let path = Network::from_edge_list(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.min_degree(), 1);
        assert_eq!(Network::empty(2).unwrap().min_degree(), 0);
    }
}
