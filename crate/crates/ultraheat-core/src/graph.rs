//! The time-changing weighted graph: snapshot adjacency `A(t)`, degrees
//! `gamma(t)`, the Laplacian matrix `L(t) = A(t) - diag(gamma(t))` and the
//! piecewise-constant kernel `A(x, y, t)` it induces on the embedded balls.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::Mat;
use crate::padic::{Embedding, PAdicNumber};
use crate::tolerances;

/// Symmetric, zero-diagonal, time-dependent edge weights over a fixed vertex
/// embedding. Unspecified edges default to weight zero. Weights are validated
/// to be finite and nonnegative on a sample grid of the given window at
/// construction time.
#[derive(Clone, Debug)]
pub struct TimeGraph {
    embedding: Embedding,
    weights: BTreeMap<(usize, usize), Expr>,
}

/// A frozen-time view of the graph.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    /// Symmetric adjacency matrix with zero diagonal.
    pub adjacency: Mat,
    /// Vertex degrees, the row sums of the adjacency matrix.
    pub gamma: Vec<f64>,
    /// Laplacian matrix `A - diag(gamma)`; rows sum to zero.
    pub laplacian: Mat,
}

impl TimeGraph {
    /// `weights` lists undirected edges as `(i, j, expr)` with `i < j`.
    /// The window is sampled on a 256-point grid plus both endpoints to
    /// reject weights that go negative or non-finite.
    pub fn new(
        embedding: Embedding,
        weights: Vec<(usize, usize, Expr)>,
        validation_window: (f64, f64),
    ) -> Result<Self> {
        let n = embedding.vertices();
        let mut map = BTreeMap::new();
        for (i, j, expr) in weights {
            if i == j {
                return Err(Error::Scenario(format!(
                    "weight ({i},{j}) sits on the diagonal; self-loops are not allowed"
                )));
            }
            if i >= n || j >= n {
                return Err(Error::Scenario(format!(
                    "weight ({i},{j}) references a vertex outside 0..{n}"
                )));
            }
            if i > j {
                return Err(Error::Scenario(format!(
                    "weight ({i},{j}) must be listed with i < j; symmetry is implied"
                )));
            }
            if map.insert((i, j), expr).is_some() {
                return Err(Error::Scenario(format!("duplicate weight entry ({i},{j})")));
            }
        }
        let graph = TimeGraph {
            embedding,
            weights: map,
        };
        graph.validate_window(validation_window)?;
        Ok(graph)
    }

    fn validate_window(&self, (s, t): (f64, f64)) -> Result<()> {
        if !(s.is_finite() && t.is_finite()) || s < 0.0 || t < s {
            return Err(Error::Scenario(format!("invalid time window [{s}, {t}]")));
        }
        let grid = tolerances::WEIGHT_VALIDATION_GRID;
        for k in 0..=grid + 1 {
            let tau = if k <= grid && t > s {
                s + (t - s) * k as f64 / (grid + 1) as f64
            } else {
                t
            };
            for (&(i, j), expr) in &self.weights {
                let w = expr.eval(tau)?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidWeight {
                        i,
                        j,
                        t: tau,
                        value: w,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Expr)> {
        self.weights.iter().map(|(&(i, j), e)| (i, j, e))
    }

    /// Weight of the undirected edge `{i, j}` at time `t` (0 off-support).
    pub fn weight(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        if i == j {
            return Ok(0.0);
        }
        let key = (i.min(j), i.max(j));
        match self.weights.get(&key) {
            Some(expr) => expr.eval(t),
            None => Ok(0.0),
        }
    }

    /// Degree of a single vertex at time `t`.
    pub fn degree(&self, vertex: usize, t: f64) -> Result<f64> {
        let mut total = 0.0;
        for (&(i, j), expr) in &self.weights {
            if i == vertex || j == vertex {
                total += expr.eval(t)?;
            }
        }
        Ok(total)
    }

    /// Evaluates all weights at `t`, checking signs, and assembles the
    /// snapshot matrices.
    pub fn snapshot(&self, t: f64) -> Result<Snapshot> {
        let n = self.embedding.vertices();
        let mut adjacency = Mat::zeros(n, n);
        for (&(i, j), expr) in &self.weights {
            let w = expr.eval(t)?;
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight { i, j, t, value: w });
            }
            adjacency.set(i, j, w);
            adjacency.set(j, i, w);
        }
        let gamma: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| adjacency.get(i, j)).sum())
            .collect();
        let mut laplacian = adjacency.clone();
        for i in 0..n {
            laplacian.set(i, i, adjacency.get(i, i) - gamma[i]);
        }
        Ok(Snapshot {
            t,
            adjacency,
            gamma,
            laplacian,
        })
    }

    /// The kernel `A(x, y, t) = p^N A_IJ(t)` on the ball containing each
    /// argument; zero when either point lies outside the state space.
    pub fn kernel_value(&self, x: &PAdicNumber, y: &PAdicNumber, t: f64) -> Result<f64> {
        let (i, j) = match (self.embedding.locate(x), self.embedding.locate(y)) {
            (Some(i), Some(j)) => (i, j),
            _ => return Ok(0.0),
        };
        let scale = (self.embedding.prime() as f64).powi(self.embedding.level());
        Ok(scale * self.weight(i, j, t)?)
    }

    /// Maximum Frobenius norm of `[L(t_i), L(t_j)]` over grid pairs. Zero for
    /// families that share a fixed eigenbasis.
    pub fn commutation_defect(&self, grid: &[f64]) -> Result<f64> {
        if grid.len() < 2 {
            return Err(Error::InvalidArgument(
                "commutation defect needs at least two grid points".into(),
            ));
        }
        let laplacians: Vec<Mat> = grid
            .iter()
            .map(|&tau| self.snapshot(tau).map(|s| s.laplacian))
            .collect::<Result<_>>()?;
        let mut worst = 0.0f64;
        for i in 0..laplacians.len() {
            for j in 0..i {
                let ab = laplacians[i].mul(&laplacians[j]);
                let ba = laplacians[j].mul(&laplacians[i]);
                worst = worst.max(ab.sub(&ba).frobenius_norm());
            }
        }
        Ok(worst)
    }

    /// `sum_{I,J} |A_IJ(t) - A_IJ(s)|` over ordered vertex pairs; the uniform
    /// continuity modulus that controls the operator difference.
    pub fn continuity_modulus(&self, s: f64, t: f64) -> Result<f64> {
        let mut total = 0.0;
        for (&(_, _), expr) in &self.weights {
            total += 2.0 * (expr.eval(t)? - expr.eval(s)?).abs();
        }
        Ok(total)
    }
}
