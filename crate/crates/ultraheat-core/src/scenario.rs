//! The JSON scenario file consumed by the CLI and the language bindings.
//!
//! A scenario pins everything a run needs: the embedding (prime, vertex
//! count, optional level override), numerical knobs (digit precision, working
//! resolution, quadrature subintervals), the weight expressions, the time
//! window, measure conventions, and the optional initial condition,
//! stochastic section and region. Unknown fields are rejected so typos in
//! numerics configuration fail loudly.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::boundary::{MeasureNormalization, QuotientEdgeSet, Region};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::graph::TimeGraph;
use crate::l2::{CellVector, L2Function, WaveletIndex};
use crate::padic::{Embedding, PAdicNumber};
use crate::quad::QuadratureConfig;

fn default_precision() -> i32 {
    32
}

fn default_quad_k() -> usize {
    64
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    prime: u64,
    vertices: usize,
    #[serde(default)]
    level: Option<i32>,
    #[serde(default = "default_precision")]
    padic_precision: i32,
    #[serde(default)]
    resolution: Option<i32>,
    weights: Vec<WeightEntry>,
    window: Window,
    #[serde(default = "default_quad_k")]
    quad_k: usize,
    #[serde(default)]
    measure_normalization: MeasureNormalization,
    #[serde(default)]
    quotient_edge_set: QuotientEdgeSet,
    #[serde(default)]
    initial: Option<InitialCondition>,
    #[serde(default)]
    stochastic: Option<StochasticSection>,
    #[serde(default)]
    region: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightEntry {
    i: usize,
    j: usize,
    expr: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Window {
    s: f64,
    t: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
enum InitialCondition {
    BallIndicator(usize),
    VertexValues(Vec<f64>),
    Wavelet {
        vertex: usize,
        scale: i32,
        center_digits: Vec<u32>,
        j: u32,
    },
    Cells(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StochasticSection {
    paths: usize,
    seed: u64,
    start: String,
}

/// Stochastic run parameters with the start point resolved.
#[derive(Clone, Debug)]
pub struct StochasticConfig {
    pub paths: usize,
    pub seed: u64,
    pub start: PAdicNumber,
}

/// A fully validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub embedding: Embedding,
    pub graph: TimeGraph,
    pub window: (f64, f64),
    pub resolution: i32,
    pub quad: QuadratureConfig,
    pub normalization: MeasureNormalization,
    pub edge_set: QuotientEdgeSet,
    pub initial: Option<L2Function>,
    pub stochastic: Option<StochasticConfig>,
    pub region: Option<Region>,
}

/// Resolves `vertex[:digits]` into the canonical center of that sub-ball.
pub fn parse_point(embedding: &Embedding, spec: &str) -> Result<PAdicNumber> {
    let (vertex_text, digit_text) = match spec.split_once(':') {
        Some((v, d)) => (v, d),
        None => (spec, ""),
    };
    let vertex: usize = vertex_text
        .trim()
        .parse()
        .map_err(|_| Error::Scenario(format!("point '{spec}': bad vertex index")))?;
    if vertex >= embedding.vertices() {
        return Err(Error::Scenario(format!(
            "point '{spec}': vertex out of range"
        )));
    }
    let mut offset = 0u64;
    let mut count = 0u32;
    for ch in digit_text.trim().chars() {
        let d = ch
            .to_digit(10)
            .ok_or_else(|| Error::Scenario(format!("point '{spec}': bad digit '{ch}'")))?;
        if d as u64 >= embedding.prime() {
            return Err(Error::Scenario(format!(
                "point '{spec}': digit {d} not below the prime"
            )));
        }
        offset += d as u64 * embedding.prime().pow(count);
        count += 1;
    }
    Ok(embedding.subball_center(vertex, offset))
}

pub fn parse_scenario(json: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(json)
        .map_err(|e| Error::Scenario(format!("invalid scenario document: {e}")))?;

    let embedding = Embedding::new(file.vertices, file.prime, file.level, file.padic_precision)?;
    let resolution = file.resolution.unwrap_or(embedding.level() + 3);
    if resolution <= embedding.level() {
        return Err(Error::Scenario(format!(
            "resolution {resolution} must exceed the level {}",
            embedding.level()
        )));
    }
    if embedding.precision() < resolution {
        return Err(Error::Scenario(format!(
            "padic_precision {} is below the resolution {resolution}",
            embedding.precision()
        )));
    }

    let mut weights = Vec::with_capacity(file.weights.len());
    for entry in &file.weights {
        let expr = Expr::parse(&entry.expr).map_err(|e| {
            Error::Scenario(format!(
                "weight ({},{}): cannot parse '{}': {e}",
                entry.i, entry.j, entry.expr
            ))
        })?;
        weights.push((entry.i, entry.j, expr));
    }
    let graph = TimeGraph::new(embedding, weights, (file.window.s, file.window.t))?;
    let quad = QuadratureConfig::new(file.quad_k)?;

    let initial = match &file.initial {
        None => None,
        Some(InitialCondition::BallIndicator(vertex)) => {
            Some(L2Function::ball_indicator(embedding, resolution, *vertex)?)
        }
        Some(InitialCondition::VertexValues(values)) => {
            let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            Some(L2Function::from_vertex_values(
                embedding, resolution, complex,
            )?)
        }
        Some(InitialCondition::Wavelet {
            vertex,
            scale,
            center_digits,
            j,
        }) => {
            let mut offset = 0u64;
            for (pos, &d) in center_digits.iter().enumerate() {
                if d as u64 >= embedding.prime() {
                    return Err(Error::Scenario(
                        "wavelet center digit not below the prime".into(),
                    ));
                }
                offset += d as u64 * embedding.prime().pow(pos as u32);
            }
            if center_digits.len() as i32 != scale - embedding.level() {
                return Err(Error::Scenario(format!(
                    "wavelet at scale {scale} needs {} center digits",
                    scale - embedding.level()
                )));
            }
            let index = WaveletIndex {
                vertex: *vertex,
                scale: *scale,
                offset,
                j: *j,
            };
            Some(L2Function::from_wavelet(embedding, resolution, index)?)
        }
        Some(InitialCondition::Cells(values)) => {
            let complex: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            Some(L2Function::from_cells(&CellVector::new(
                embedding, resolution, complex,
            )?))
        }
    };

    let stochastic = match &file.stochastic {
        None => None,
        Some(section) => {
            if section.paths == 0 {
                return Err(Error::Scenario("stochastic.paths must be positive".into()));
            }
            Some(StochasticConfig {
                paths: section.paths,
                seed: section.seed,
                start: parse_point(&embedding, &section.start)?,
            })
        }
    };

    let region = match &file.region {
        None => None,
        Some(specs) => Some(Region::parse(embedding, specs)?),
    };

    Ok(Scenario {
        embedding,
        graph,
        window: (file.window.s, file.window.t),
        resolution,
        quad,
        normalization: file.measure_normalization,
        edge_set: file.quotient_edge_set,
        initial,
        stochastic,
        region,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}
