//! Fully resolved run configurations and the parsers behind each flag.
//!
//! Every command resolves its flags into one of these records before doing
//! any work. The record is echoed into the command's output, and `replay`
//! feeds it back in unchanged.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use netsync_core::diagnostics::linspace_step;
use netsync_core::graphs::{build_random, build_regular, RandomModel, RegularKind};
use netsync_core::{CouplingMatrix, EtaConvention, Graph, LorenzParams, Matrix};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphSource {
    /// Inline spec such as `ring:6` or `er:20:0.3`.
    Spec(String),
    /// Edge-list file.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub source: GraphSource,
    pub seed: Option<u64>,
}

impl GraphConfig {
    pub fn build(&self) -> Result<Graph, CliError> {
        match &self.source {
            GraphSource::File(path) => {
                let file = File::open(path)
                    .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
                Ok(Graph::read_edge_list(BufReader::new(file))?)
            }
            GraphSource::Spec(spec) => build_graph_spec(spec, self.seed),
        }
    }
}

fn field<T: FromStr>(spec: &str, part: Option<&str>, what: &str) -> Result<T, CliError> {
    part.and_then(|p| p.trim().parse().ok())
        .ok_or_else(|| CliError::Usage(format!("graph spec {spec:?}: bad or missing {what}")))
}

/// `kind:n` for the regular families, `er:n:p`, `ws:n:k:p` or `ba:n:m`
/// for the random ones (those need a seed).
pub fn build_graph_spec(spec: &str, seed: Option<u64>) -> Result<Graph, CliError> {
    let mut parts = spec.split(':');
    let kind = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
    let n: usize = field(spec, parts.next(), "vertex count")?;
    let random = |model: RandomModel| -> Result<Graph, CliError> {
        let seed =
            seed.ok_or_else(|| CliError::Usage(format!("graph spec {spec:?} needs --seed")))?;
        Ok(build_random(model, n, seed)?)
    };
    let graph = match kind.as_str() {
        "er" => random(RandomModel::ErdosRenyi {
            p: field(spec, parts.next(), "edge probability")?,
        })?,
        "ws" => {
            let k = field(spec, parts.next(), "lattice degree")?;
            let p = field(spec, parts.next(), "rewiring probability")?;
            random(RandomModel::WattsStrogatz { k, p })?
        }
        "ba" => random(RandomModel::BarabasiAlbert {
            m: field(spec, parts.next(), "attachment count")?,
        })?,
        other => {
            let kind: RegularKind = other
                .parse()
                .map_err(|e: netsync_core::Error| CliError::Usage(e.to_string()))?;
            build_regular(kind, n)?
        }
    };
    if parts.next().is_some() {
        return Err(CliError::Usage(format!(
            "graph spec {spec:?} has trailing fields"
        )));
    }
    Ok(graph)
}

/// The regular family named by an inline spec, if any.
pub fn regular_kind(source: &GraphSource) -> Option<RegularKind> {
    match source {
        GraphSource::Spec(spec) => spec.split(':').next()?.parse().ok(),
        GraphSource::File(_) => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzConfig {
    pub sigma: f64,
    pub r: f64,
    pub b: f64,
}

impl LorenzConfig {
    pub fn params(&self) -> Result<LorenzParams, CliError> {
        Ok(LorenzParams::new(self.sigma, self.r, self.b)?)
    }
}

/// `classic` or `σ,r,b`.
pub fn parse_lorenz(s: &str) -> Result<LorenzConfig, CliError> {
    if s.trim().eq_ignore_ascii_case("classic") {
        let p = LorenzParams::classic();
        return Ok(LorenzConfig {
            sigma: p.sigma(),
            r: p.r(),
            b: p.b(),
        });
    }
    match parse_list(s, "Lorenz parameters")?.as_slice() {
        &[sigma, r, b] => {
            let cfg = LorenzConfig { sigma, r, b };
            cfg.params()?;
            Ok(cfg)
        }
        _ => Err(CliError::Usage(format!(
            "--lorenz expects `classic` or `sigma,r,b`, got {s:?}"
        ))),
    }
}

/// `identity` (3×3) or rows separated by `;`, entries by `,`.
pub fn parse_matrix_rows(s: &str, what: &str) -> Result<Vec<Vec<f64>>, CliError> {
    if s.trim().eq_ignore_ascii_case("identity") {
        return Ok((0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect());
    }
    s.split(';').map(|row| parse_list(row, what)).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix, CliError> {
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(CliError::Usage(format!(
            "matrix must be square, got {} rows",
            rows.len()
        )));
    }
    Ok(Matrix::from_rows(rows)?)
}

pub fn coupling_from_rows(rows: &[Vec<f64>]) -> Result<CouplingMatrix, CliError> {
    Ok(CouplingMatrix::new(matrix_from_rows(rows)?)?)
}

pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("{what}: cannot parse {t:?} as a number")))
        })
        .collect()
}

/// `start:stop:step` or an explicit comma list.
pub fn parse_grid(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [single] => parse_list(single, what),
        [start, stop, step] => {
            let num = |t: &str| parse_list(t, what).map(|v| v[0]);
            Ok(linspace_step(num(start)?, num(stop)?, num(step)?)?)
        }
        _ => Err(CliError::Usage(format!(
            "{what}: expected start:stop:step or a list, got {s:?}"
        ))),
    }
}

pub fn parse_pair<T: FromStr>(s: &str, what: &str) -> Result<(T, T), CliError> {
    let bad = || {
        CliError::Usage(format!(
            "{what}: expected two comma-separated values, got {s:?}"
        ))
    };
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

/// Network under study: graph, oscillator and inner coupling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub graph: GraphConfig,
    pub lorenz: LorenzConfig,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
}

/// Vertex `k` starts at `base + k·spread·(−1, 1, 0)/√2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialConfig {
    pub base: Vec<f64>,
    pub spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    pub edge: (usize, usize),
    pub shape: Vec<Vec<f64>>,
    pub omega: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumConfig {
    pub graph: GraphConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalConfig {
    pub system: SystemConfig,
    pub alpha: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub system: SystemConfig,
    pub alpha: f64,
    pub dt: f64,
    pub tmax: f64,
    pub stride: usize,
    pub initial: InitialConfig,
    pub perturbation: Option<(PerturbationConfig, f64)>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub system: SystemConfig,
    pub alphas: Vec<f64>,
    pub dt: f64,
    pub window: (f64, f64),
    pub tmax: f64,
    pub initial: InitialConfig,
    pub out: Option<PathBuf>,
    pub pgm: Option<PathBuf>,
    pub pgm_meta: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColormapConfig {
    pub sweep: SweepConfig,
    pub xis: Vec<f64>,
    pub perturbation: PerturbationConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceConfig {
    pub system: SystemConfig,
    pub alpha: f64,
    pub xi: f64,
    pub perturbation: PerturbationConfig,
    pub convention: EtaConvention,
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Spectrum(SpectrumConfig),
    Critical(CriticalConfig),
    Simulate(SimulateConfig),
    Sweep(SweepConfig),
    Colormap(ColormapConfig),
    Persistence(PersistenceConfig),
}

impl RunConfig {
    /// Accepts either a bare config or a command's full JSON output, which
    /// carries the config under `"config"`.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("config is not JSON: {e}")))?;
        let inner = value.get("config").cloned().unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }
}
