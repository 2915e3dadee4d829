//! Scenario configuration (JSON), price construction from market
//! components, and result serialization (CSV).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{load_network_file, Network};

/// Fresh fruit bunches consumed per tonne of refined output; converts
/// certification costs quoted per input tonne.
pub const FFB_PER_OUTPUT_MT: f64 = 5.0;

/// Monetary components of the two unit prices. All values share one
/// currency-per-tonne scale; the library treats them as plain reals.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct PriceComponents {
    /// Conventional market price.
    pub base_price: f64,
    /// Sustainability premium as a fraction of the base price.
    pub premium_rate: f64,
    /// Certification cost per output tonne.
    #[serde(default)]
    pub cert_cost: Option<f64>,
    /// Certification cost per input tonne (fresh fruit bunches); converted
    /// with [`FFB_PER_OUTPUT_MT`]. Give exactly one of the two cost forms.
    #[serde(default)]
    pub cert_cost_ffb: Option<f64>,
    /// Operational cost of unsustainable production per tonne.
    #[serde(default)]
    pub op_cost: f64,
    /// Reputational cost of unsustainable production per tonne.
    #[serde(default)]
    pub rep_cost: f64,
}

impl PriceComponents {
    pub fn certification_cost(&self) -> Result<f64> {
        match (self.cert_cost, self.cert_cost_ffb) {
            (Some(c), None) => Ok(c),
            (None, Some(f)) => Ok(f * FFB_PER_OUTPUT_MT),
            (None, None) => Ok(0.0),
            (Some(_), Some(_)) => Err(Error::Config(
                "give either cert_cost or cert_cost_ffb, not both".into(),
            )),
        }
    }
}

/// Per-agent prices from market components:
/// sustainable = `(1 + premium_rate) * base_price - certification`,
/// unsustainable = `base_price - op_cost - rep_cost`.
pub fn price_from_components(pc: &PriceComponents) -> Result<(f64, f64)> {
    if pc.base_price < 0.0
        || pc.premium_rate < 0.0
        || pc.op_cost < 0.0
        || pc.rep_cost < 0.0
        || pc.cert_cost.is_some_and(|c| c < 0.0)
        || pc.cert_cost_ffb.is_some_and(|c| c < 0.0)
    {
        return Err(Error::Config(
            "price components must be non-negative".into(),
        ));
    }
    let cert = pc.certification_cost()?;
    let p_a = (1.0 + pc.premium_rate) * pc.base_price - cert;
    let p_b = pc.base_price - pc.op_cost - pc.rep_cost;
    if p_a < 0.0 {
        return Err(Error::Config(format!(
            "certification cost {cert} drives the sustainable price negative ({p_a})"
        )));
    }
    if p_b < 0.0 {
        return Err(Error::Config(format!(
            "op_cost + rep_cost exceed the base price (unsustainable price {p_b})"
        )));
    }
    Ok((p_a, p_b))
}

/// A scalar broadcast over all agents, or an explicit per-agent vector.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl ScalarOrVec {
    pub fn expand(&self, n: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrVec::Vector(v) if v.len() == n => Ok(v.clone()),
            ScalarOrVec::Vector(v) => Err(Error::Config(format!(
                "{field}: expected {n} entries, got {}",
                v.len()
            ))),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct NetworkSource {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub edges: Option<Vec<(usize, usize)>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ParamsConfig {
    pub beta: f64,
    pub delta: f64,
    pub mu: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ExplicitPrices {
    pub p_a0: ScalarOrVec,
    pub p_b0: ScalarOrVec,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    P,
    Pr,
    Ptilde,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    #[serde(default)]
    pub p_max: Option<ScalarOrVec>,
    #[serde(default)]
    pub rho_max: Option<ScalarOrVec>,
    #[serde(default)]
    pub budget: Option<ScalarOrVec>,
    #[serde(default)]
    pub tau_b: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct SweepConfig {
    /// Range of the network-average maximum price.
    pub start: f64,
    pub end: f64,
    pub steps: usize,
    /// Relative jitter applied to per-agent raises for the heterogeneous
    /// problem (default 0.5: factors in [0.5, 1.5]).
    #[serde(default)]
    pub jitter: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub scenario_id: Option<String>,
    pub network: NetworkSource,
    pub params: ParamsConfig,
    #[serde(default)]
    pub prices: Option<ExplicitPrices>,
    #[serde(default)]
    pub price_components: Option<PriceComponents>,
    #[serde(default)]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn load_network(&self) -> Result<Network> {
        match (&self.network.path, &self.network.edges) {
            (Some(path), None) => load_network_file(path, self.network.n),
            (None, Some(edges)) => {
                let n = self.network.n.ok_or_else(|| {
                    Error::Config("network.n is required with inline edges".into())
                })?;
                Network::from_edge_list(n, edges)
            }
            (Some(_), Some(_)) => Err(Error::Config(
                "network: give either path or inline edges, not both".into(),
            )),
            (None, None) => Err(Error::Config(
                "network: give a path or inline edges".into(),
            )),
        }
    }

    /// Pre-intervention prices for `n` agents; exactly one price source
    /// must be present.
    pub fn base_prices(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        match (&self.prices, &self.price_components) {
            (Some(explicit), None) => Ok((
                explicit.p_a0.expand(n, "prices.p_a0")?,
                explicit.p_b0.expand(n, "prices.p_b0")?,
            )),
            (None, Some(pc)) => {
                let (p_a, p_b) = price_from_components(pc)?;
                Ok((vec![p_a; n], vec![p_b; n]))
            }
            (Some(_), Some(_)) => Err(Error::Config(
                "give either prices or price_components, not both".into(),
            )),
            (None, None) => Err(Error::Config(
                "missing price source: prices or price_components".into(),
            )),
        }
    }

    pub fn game_params(&self) -> Result<crate::game::GameParams> {
        crate::game::GameParams::new(self.params.beta, self.params.delta, self.params.mu)
    }

    pub fn require_problem(&self) -> Result<&ProblemConfig> {
        self.problem
            .as_ref()
            .ok_or_else(|| Error::Config("missing problem section".into()))
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: ScenarioConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("scenario json: {e}")))?;
    Ok(config)
}

/// One row of sweep or solve output.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
pub struct ResultRecord {
    pub scenario_id: String,
    pub problem: String,
    pub pbar_max: f64,
    pub welfare: f64,
    pub welfare_gain_pct: f64,
    pub agg_xb: f64,
    pub agg_xb_reduction_pct: f64,
    pub certificate: String,
}

const RESULT_HEADER: [&str; 8] = [
    "scenario_id",
    "problem",
    "pbar_max",
    "welfare",
    "welfare_gain_pct",
    "agg_xb",
    "agg_xb_reduction_pct",
    "certificate",
];

fn write_records<W: std::io::Write>(records: &[ResultRecord], sink: W) -> Result<W> {
    // Header written explicitly so that an empty sweep still emits it.
    // Floats use shortest-roundtrip formatting: re-parsing is exact and
    // identical configs produce byte-identical files.
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(RESULT_HEADER)?;
    for r in records {
        writer.write_record(&[
            r.scenario_id.clone(),
            r.problem.clone(),
            r.pbar_max.to_string(),
            r.welfare.to_string(),
            r.welfare_gain_pct.to_string(),
            r.agg_xb.to_string(),
            r.agg_xb_reduction_pct.to_string(),
            r.certificate.clone(),
        ])?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

pub fn write_results(records: &[ResultRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    let mut file = write_records(records, file)?;
    use std::io::Write;
    file.flush()?;
    Ok(())
}

/// Serializes records to CSV in memory; the CLI writes this to stdout when
/// no output path is set.
pub fn results_to_csv(records: &[ResultRecord]) -> Result<String> {
    let bytes = write_records(records, Vec::new())?;
    String::from_utf8(bytes).map_err(|e| Error::Config(format!("csv utf8: {e}")))
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<ResultRecord>> {
    let mut reader = csv::Reader::from_path(path.as_ref())?;
    let mut out = Vec::new();
    for record in reader.deserialize() {
        out.push(record?);
    }
    Ok(out)
}
