//! Regions of the state space, their vertex and edge boundaries, and the
//! constrained Rayleigh-quotient eigenvalues of the diffusion operator.
//!
//! A region is a finite list of disjoint sub-balls of vertex balls. The
//! quotient
//!
//! ```text
//!   num(f) / den(f) = lead * int over the edge set of A(x,y,t) |f(x)-f(y)|^2
//!                     ---------------------------------------------------
//!                     int_S |f(x)|^2 gamma(x)(t)
//! ```
//!
//! is evaluated by exact cell summation at a chosen resolution. Two measure
//! normalizations are supported: `unit-ball` rescales Haar measure so every
//! vertex ball has mass one (the convention behind the worked numbers in the
//! literature this follows), while `haar` keeps the literal `p^N` factors.
//! The numerator's edge set is switchable between the full region edge set
//! (internal pairs plus the edge boundary) and the edge boundary alone.
//!
//! The Dirichlet eigenvalue minimizes the quotient over cell functions
//! vanishing on the vertex boundary; the von Neumann eigenvalue instead
//! imposes a zero-mean condition against the degree measure plus a zero-flux
//! condition at every boundary cell (pairs read with the boundary point
//! outside the region and its neighbour inside). Constraints are eliminated
//! by an orthonormal null-space basis and the reduced pencil is solved with
//! the symmetric Jacobi eigensolver.

use std::collections::BTreeSet;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Snapshot, TimeGraph};
use crate::l2::L2Function;
use crate::linalg::{jacobi_eigh, Mat};
use crate::padic::{Ball, Embedding};
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum MeasureNormalization {
    #[serde(rename = "unit-ball")]
    #[default]
    UnitBall,
    #[serde(rename = "haar")]
    Haar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum QuotientEdgeSet {
    #[default]
    BoundaryOnly,
    OmegaStar,
}

/// A compact open subset of the state space: disjoint sub-balls, each inside
/// a vertex ball.
#[derive(Clone, Debug)]
pub struct Region {
    balls: Vec<Ball>,
    embedding: Embedding,
}

impl Region {
    pub fn new(embedding: Embedding, balls: Vec<Ball>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::InvalidArgument("region has no sub-balls".into()));
        }
        for ball in &balls {
            if ball.radius_exponent() < embedding.level() {
                return Err(Error::InvalidArgument(
                    "region balls must lie inside vertex balls".into(),
                ));
            }
            if embedding.locate(ball.center()).is_none() {
                return Err(Error::InvalidArgument(
                    "region ball lies outside the state space".into(),
                ));
            }
        }
        for i in 0..balls.len() {
            for j in 0..i {
                let coarser = balls[i].radius_exponent().min(balls[j].radius_exponent());
                let gap = balls[i].center().sub(balls[j].center())?;
                let disjoint = match gap.valuation() {
                    None => false,
                    Some(v) => v < coarser,
                };
                if !disjoint {
                    return Err(Error::InvalidArgument(format!(
                        "region balls {j} and {i} overlap"
                    )));
                }
            }
        }
        Ok(Region { balls, embedding })
    }

    /// Parses sub-ball specs of the form `vertex[:digits]`, where each digit
    /// character extends the vertex center by one level (`"0"` is the whole
    /// ball of vertex 0, `"1:02"` the sub-ball of vertex 1 with extra digits
    /// 0 then 2).
    pub fn parse(embedding: Embedding, specs: &[String]) -> Result<Self> {
        let p = embedding.prime();
        let mut balls = Vec::with_capacity(specs.len());
        for spec in specs {
            let (vertex_text, digit_text) = match spec.split_once(':') {
                Some((v, d)) => (v, d),
                None => (spec.as_str(), ""),
            };
            let vertex: usize = vertex_text
                .trim()
                .parse()
                .map_err(|_| Error::Scenario(format!("region entry '{spec}': bad vertex index")))?;
            if vertex >= embedding.vertices() {
                return Err(Error::Scenario(format!(
                    "region entry '{spec}': vertex out of range"
                )));
            }
            let mut offset: u64 = 0;
            let mut count = 0u32;
            for ch in digit_text.trim().chars() {
                let d = ch.to_digit(10).ok_or_else(|| {
                    Error::Scenario(format!("region entry '{spec}': bad digit '{ch}'"))
                })?;
                if d as u64 >= p {
                    return Err(Error::Scenario(format!(
                        "region entry '{spec}': digit {d} not below the prime {p}"
                    )));
                }
                offset += d as u64 * p.pow(count);
                count += 1;
            }
            let center = embedding.subball_center(vertex, offset);
            balls.push(Ball::new(center, embedding.level() + count as i32));
        }
        Region::new(embedding, balls)
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    /// Finest sub-ball scale; cell computations need at least this resolution.
    pub fn finest_scale(&self) -> i32 {
        self.balls
            .iter()
            .map(Ball::radius_exponent)
            .max()
            .expect("regions are nonempty")
    }

    /// Membership mask over the resolution-`R` cells, vertex-major order.
    pub fn cell_mask(&self, resolution: i32) -> Result<Vec<bool>> {
        if resolution < self.finest_scale() {
            return Err(Error::InvalidArgument(format!(
                "resolution {resolution} cannot express a region ball of scale {}",
                self.finest_scale()
            )));
        }
        let e = &self.embedding;
        let per_vertex = e.cells_per_vertex(resolution);
        let mut mask = vec![false; e.vertices() * per_vertex];
        for ball in &self.balls {
            let vertex = e.locate(ball.center()).expect("validated at construction");
            let rho = ball.radius_exponent();
            let mut ball_offset = 0u64;
            for pos in (e.level()..rho).rev() {
                ball_offset = ball_offset * e.prime() + ball.center().digit_at(pos) as u64;
            }
            let stride = (e.prime() as u128).pow((rho - e.level()) as u32) as u64;
            let mut k = ball_offset;
            while (k as usize) < per_vertex {
                mask[vertex * per_vertex + k as usize] = true;
                k += stride;
            }
        }
        Ok(mask)
    }

    /// Vertices whose ball meets the region.
    pub fn vertex_set(&self) -> BTreeSet<usize> {
        self.balls
            .iter()
            .map(|b| {
                self.embedding
                    .locate(b.center())
                    .expect("validated at construction")
            })
            .collect()
    }
}

/// Boundary structure of a region under the support pattern of `A(t)`.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub t: f64,
    /// Cells outside the region adjacent (through the kernel) to it,
    /// as (vertex, offset) at the queried resolution.
    pub vertex_boundary_cells: BTreeSet<(usize, u64)>,
    /// Ordered vertex pairs (I, J): ball I meets the region, ball J misses
    /// it, and the edge weight is nonzero.
    pub edge_boundary_pairs: BTreeSet<(usize, usize)>,
    /// Edge pairs internal to the region plus the edge boundary.
    pub omega_star_pairs: BTreeSet<(usize, usize)>,
}

pub fn boundary_data(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    resolution: i32,
) -> Result<BoundaryData> {
    let e = graph.embedding();
    let snapshot = graph.snapshot(t)?;
    let mask = region.cell_mask(resolution)?;
    let per_vertex = e.cells_per_vertex(resolution);
    let n = e.vertices();
    let meets: Vec<bool> = (0..n)
        .map(|v| {
            mask[v * per_vertex..(v + 1) * per_vertex]
                .iter()
                .any(|&m| m)
        })
        .collect();

    let mut edge_boundary_pairs = BTreeSet::new();
    let mut omega_star_pairs = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if snapshot.adjacency.get(i, j) == 0.0 || !meets[i] {
                continue;
            }
            if meets[j] {
                omega_star_pairs.insert((i, j));
            } else {
                edge_boundary_pairs.insert((i, j));
                omega_star_pairs.insert((i, j));
            }
        }
    }

    let mut vertex_boundary_cells = BTreeSet::new();
    for vertex in 0..n {
        let touches_region = (0..n).any(|j| meets[j] && snapshot.adjacency.get(vertex, j) != 0.0);
        if !touches_region {
            continue;
        }
        for k in 0..per_vertex as u64 {
            if !mask[vertex * per_vertex + k as usize] {
                vertex_boundary_cells.insert((vertex, k));
            }
        }
    }
    Ok(BoundaryData {
        t,
        vertex_boundary_cells,
        edge_boundary_pairs,
        omega_star_pairs,
    })
}

/// `min over region vertices of deg_boundary(I) / D_S` with
/// `D_S = sum_{I in V(S)} gamma_I` under unit-ball normalization
/// (`p^-N`-weighted under Haar). Positive infinity when `D_S = 0`.
pub fn gamma_hat(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    normalization: MeasureNormalization,
) -> Result<f64> {
    let snapshot = graph.snapshot(t)?;
    let vertices = region.vertex_set();
    let mass = match normalization {
        MeasureNormalization::UnitBall => 1.0,
        MeasureNormalization::Haar => {
            (graph.embedding().prime() as f64).powi(-graph.embedding().level())
        }
    };
    let total: f64 = vertices.iter().map(|&i| snapshot.gamma[i] * mass).sum();
    if total == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut best = f64::INFINITY;
    for &i in &vertices {
        let boundary_degree: f64 = (0..graph.embedding().vertices())
            .filter(|j| !vertices.contains(j))
            .map(|j| snapshot.adjacency.get(i, j))
            .sum();
        best = best.min(boundary_degree / total);
    }
    Ok(best)
}

/// Smallest eigenvalue of the normalized-Laplacian submatrix
/// `delta_IJ - A_IJ / sqrt(gamma_I gamma_J)` over the region's vertices.
pub fn graph_dirichlet_eigenvalue(graph: &TimeGraph, region: &Region, t: f64) -> Result<f64> {
    Ok(*graph_dirichlet_spectrum(graph, region, t)?
        .first()
        .expect("submatrix is nonempty"))
}

/// Full ascending spectrum of the same submatrix.
pub fn graph_dirichlet_spectrum(graph: &TimeGraph, region: &Region, t: f64) -> Result<Vec<f64>> {
    let snapshot = graph.snapshot(t)?;
    let vertices: Vec<usize> = region.vertex_set().into_iter().collect();
    if vertices.len() == graph.embedding().vertices() {
        return Err(Error::InvalidArgument(
            "the region meets every vertex ball; no graph boundary remains".into(),
        ));
    }
    for &i in &vertices {
        if snapshot.gamma[i] == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "vertex {i} has degree zero; the normalized Laplacian is undefined"
            )));
        }
    }
    let m = vertices.len();
    let sub = Mat::from_fn(m, m, |a, b| {
        let (i, j) = (vertices[a], vertices[b]);
        let offdiag = snapshot.adjacency.get(i, j) / (snapshot.gamma[i] * snapshot.gamma[j]).sqrt();
        if a == b {
            1.0 - offdiag
        } else {
            -offdiag
        }
    });
    let (eigenvalues, _) = jacobi_eigh(&sub)?;
    Ok(eigenvalues)
}

/// Numerator, denominator and value of the quotient at one function.
#[derive(Clone, Copy, Debug)]
pub struct RayleighValue {
    pub numerator: f64,
    pub denominator: f64,
    /// `numerator / denominator`, or positive infinity when the denominator
    /// vanishes.
    pub value: f64,
    pub zero_denominator: bool,
}

struct ModeParams {
    /// Mass of one resolution-R cell.
    cell_mass: f64,
    /// Block value of the kernel on a vertex pair, per unit weight.
    kernel_scale: f64,
    /// Leading factor in front of the numerator integral.
    lead: f64,
}

fn mode_params(
    embedding: &Embedding,
    resolution: i32,
    normalization: MeasureNormalization,
) -> ModeParams {
    let p = embedding.prime() as f64;
    match normalization {
        MeasureNormalization::UnitBall => ModeParams {
            cell_mass: p.powi(embedding.level() - resolution),
            kernel_scale: 1.0,
            lead: 1.0,
        },
        MeasureNormalization::Haar => ModeParams {
            cell_mass: p.powi(-resolution),
            kernel_scale: p.powi(embedding.level()),
            lead: p.powi(embedding.level()),
        },
    }
}

/// Evaluates the quotient at `f` by exact cell summation at the function's
/// resolution.
pub fn rayleigh_quotient(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    f: &L2Function,
    edge_set: QuotientEdgeSet,
    normalization: MeasureNormalization,
) -> Result<RayleighValue> {
    let e = graph.embedding();
    let resolution = f.resolution().max(region.finest_scale());
    let f = if f.resolution() < resolution {
        f.lift_to(resolution)
    } else {
        f.clone()
    };
    let snapshot = graph.snapshot(t)?;
    let mask = region.cell_mask(resolution)?;
    let cells = f.to_cells();
    let per_vertex = e.cells_per_vertex(resolution);
    let params = mode_params(e, resolution, normalization);

    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for vx in 0..e.vertices() {
        for kx in 0..per_vertex as u64 {
            let x_idx = vx * per_vertex + kx as usize;
            if !mask[x_idx] {
                continue;
            }
            let fx = cells.value(vx, kx);
            denominator += fx.norm_sqr() * snapshot.gamma[vx] * params.cell_mass;
            for vy in 0..e.vertices() {
                let weight = snapshot.adjacency.get(vx, vy);
                if weight == 0.0 {
                    continue;
                }
                for ky in 0..per_vertex as u64 {
                    let y_idx = vy * per_vertex + ky as usize;
                    if edge_set == QuotientEdgeSet::BoundaryOnly && mask[y_idx] {
                        continue;
                    }
                    let fy = cells.value(vy, ky);
                    numerator += params.lead
                        * params.kernel_scale
                        * weight
                        * (fx - fy).norm_sqr()
                        * params.cell_mass
                        * params.cell_mass;
                }
            }
        }
    }
    let zero = denominator <= f64::EPSILON * numerator.max(1.0);
    Ok(RayleighValue {
        numerator,
        denominator,
        value: if zero {
            f64::INFINITY
        } else {
            numerator / denominator
        },
        zero_denominator: zero,
    })
}

/// The assembled pencil over the active cells.
struct QuotientPencil {
    /// Active cells as (vertex, offset); region cells first.
    cells: Vec<(usize, u64)>,
    region_cell_count: usize,
    q: Mat,
    d: Vec<f64>,
}

fn assemble_pencil(
    snapshot: &Snapshot,
    embedding: &Embedding,
    mask: &[bool],
    boundary_cells: &BTreeSet<(usize, u64)>,
    resolution: i32,
    edge_set: QuotientEdgeSet,
    normalization: MeasureNormalization,
    dirichlet: bool,
) -> QuotientPencil {
    let per_vertex = embedding.cells_per_vertex(resolution);
    let params = mode_params(embedding, resolution, normalization);

    let mut cells: Vec<(usize, u64)> = Vec::new();
    for v in 0..embedding.vertices() {
        for k in 0..per_vertex as u64 {
            if mask[v * per_vertex + k as usize] {
                cells.push((v, k));
            }
        }
    }
    let region_cell_count = cells.len();
    if !dirichlet {
        cells.extend(boundary_cells.iter().copied());
    }
    let index_of = |v: usize, k: u64, cells: &[(usize, u64)]| -> Option<usize> {
        cells.iter().position(|&c| c == (v, k))
    };

    let m = cells.len();
    let mut q = Mat::zeros(m, m);
    let mut d = vec![0.0; m];
    for (x_pos, &(vx, _)) in cells.iter().take(region_cell_count).enumerate() {
        d[x_pos] = snapshot.gamma[vx] * params.cell_mass;
        for vy in 0..embedding.vertices() {
            let weight = snapshot.adjacency.get(vx, vy);
            if weight == 0.0 {
                continue;
            }
            for ky in 0..per_vertex as u64 {
                let y_in_region = mask[vy * per_vertex + ky as usize];
                if edge_set == QuotientEdgeSet::BoundaryOnly && y_in_region {
                    continue;
                }
                let c = params.lead
                    * params.kernel_scale
                    * weight
                    * params.cell_mass
                    * params.cell_mass;
                if dirichlet && !y_in_region {
                    // f vanishes on the boundary: only the diagonal survives.
                    q.set(x_pos, x_pos, q.get(x_pos, x_pos) + c);
                    continue;
                }
                let y_pos =
                    index_of(vy, ky, &cells).expect("qualifying cells are active by construction");
                q.set(x_pos, x_pos, q.get(x_pos, x_pos) + c);
                q.set(y_pos, y_pos, q.get(y_pos, y_pos) + c);
                q.set(x_pos, y_pos, q.get(x_pos, y_pos) - c);
                q.set(y_pos, x_pos, q.get(y_pos, x_pos) - c);
            }
        }
    }
    QuotientPencil {
        cells,
        region_cell_count,
        q,
        d,
    }
}

/// Minimum of `v^T Q v / v^T D v` over nonzero real `v` with positive
/// denominator; `None` when the denominator vanishes identically. `Q` must be
/// positive semidefinite and `D` diagonal nonnegative.
fn min_generalized_rayleigh(q: &Mat, d: &[f64]) -> Result<Option<f64>> {
    let m = d.len();
    if m == 0 {
        return Ok(None);
    }
    let d_max = d.iter().fold(0.0f64, |a, &b| a.max(b));
    if d_max <= 0.0 {
        return Ok(None);
    }
    let tol = tolerances::CONSTRAINT_RANK_TOL * d_max;
    let range: Vec<usize> = (0..m).filter(|&i| d[i] > tol).collect();
    let null: Vec<usize> = (0..m).filter(|&i| d[i] <= tol).collect();
    if range.is_empty() {
        return Ok(None);
    }
    // Minimize over the null directions first (Schur complement; valid since
    // Q is positive semidefinite).
    let qrr = Mat::from_fn(range.len(), range.len(), |a, b| q.get(range[a], range[b]));
    let reduced = if null.is_empty() {
        qrr
    } else {
        let qrn = Mat::from_fn(range.len(), null.len(), |a, b| q.get(range[a], null[b]));
        let qnn = Mat::from_fn(null.len(), null.len(), |a, b| q.get(null[a], null[b]));
        let (mu, u) = jacobi_eigh(&qnn)?;
        let mu_max = mu.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let cut = tolerances::CONSTRAINT_RANK_TOL * mu_max.max(1e-300);
        // Pseudo-inverse of Q_nn.
        let mut pinv = Mat::zeros(null.len(), null.len());
        for k in 0..null.len() {
            if mu[k].abs() > cut {
                let col = u.column(k);
                for a in 0..null.len() {
                    for b in 0..null.len() {
                        pinv.set(a, b, pinv.get(a, b) + col[a] * col[b] / mu[k]);
                    }
                }
            }
        }
        qrr.sub(&qrn.mul(&pinv).mul(&qrn.transpose()))
    };
    // Whiten by D on the range block.
    let white = Mat::from_fn(range.len(), range.len(), |a, b| {
        reduced.get(a, b) / (d[range[a]] * d[range[b]]).sqrt()
    });
    let (eigenvalues, _) = jacobi_eigh(&white)?;
    let mut smallest = eigenvalues[0];
    // The form is a sum of squares; tiny negatives are roundoff.
    if smallest < 0.0 && smallest > -1e-10 {
        smallest = 0.0;
    }
    Ok(Some(smallest))
}

/// Orthonormal basis of the null space of the constraint rows.
fn null_space_basis(constraints: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for row in constraints {
        let mut v = row.clone();
        for b in &ortho {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tolerances::CONSTRAINT_RANK_TOL * scale.max(1.0) {
            for x in v.iter_mut() {
                *x /= norm;
            }
            ortho.push(v);
        }
    }
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for i in 0..dim {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        for b in ortho.iter().chain(basis.iter()) {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tolerances::CONSTRAINT_RANK_TOL {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    basis
}

fn project_pencil(pencil_q: &Mat, pencil_d: &[f64], basis: &[Vec<f64>]) -> (Mat, Mat) {
    let dim = pencil_d.len();
    let reduced_dim = basis.len();
    let z = Mat::from_fn(dim, reduced_dim, |i, k| basis[k][i]);
    let q_reduced = z.transpose().mul(&pencil_q.mul(&z));
    // Z^T D Z is generally dense; fold D into a symmetric matrix.
    let mut dz = z.clone();
    for i in 0..dim {
        for k in 0..reduced_dim {
            dz.set(i, k, dz.get(i, k) * pencil_d[i]);
        }
    }
    let d_reduced = z.transpose().mul(&dz);
    (q_reduced, d_reduced)
}

/// Minimum of `v^T Q v / v^T D v` with symmetric PSD `D` (not necessarily
/// diagonal); `None` when the denominator vanishes on the whole space.
fn min_generalized_rayleigh_sym(q: &Mat, d: &Mat) -> Result<Option<f64>> {
    let m = q.rows();
    if m == 0 {
        return Ok(None);
    }
    let (lam, u) = jacobi_eigh(d)?;
    let lam_max = lam.iter().fold(0.0f64, |a, &b| a.max(b));
    if lam_max <= 0.0 {
        return Ok(None);
    }
    let q_rot = u.transpose().mul(&q.mul(&u));
    let d_rot: Vec<f64> = lam.iter().map(|&x| x.max(0.0)).collect();
    min_generalized_rayleigh(&q_rot, &d_rot)
}

/// First Dirichlet eigenvalue at resolution `R`: the quotient minimized over
/// cell functions vanishing on the vertex boundary.
pub fn dirichlet_eigenvalue(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    resolution: i32,
    edge_set: QuotientEdgeSet,
    normalization: MeasureNormalization,
) -> Result<f64> {
    let data = boundary_data(graph, region, t, resolution)?;
    if data.vertex_boundary_cells.is_empty() {
        return Err(Error::EmptyBoundary { t });
    }
    let snapshot = graph.snapshot(t)?;
    let mask = region.cell_mask(resolution)?;
    let pencil = assemble_pencil(
        &snapshot,
        graph.embedding(),
        &mask,
        &data.vertex_boundary_cells,
        resolution,
        edge_set,
        normalization,
        true,
    );
    match min_generalized_rayleigh(&pencil.q, &pencil.d)? {
        Some(v) => Ok(v),
        None => Err(Error::ZeroDenominator),
    }
}

/// Von Neumann eigenvalue at resolution `R`: zero mean against the degree
/// measure on the region plus zero flux at every boundary cell. Positive
/// infinity when every admissible function has vanishing denominator.
pub fn vonneumann_eigenvalue(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    resolution: i32,
    edge_set: QuotientEdgeSet,
    normalization: MeasureNormalization,
) -> Result<f64> {
    constrained_eigenvalue(graph, region, t, resolution, edge_set, normalization, false)
}

/// The von Neumann eigenvalue of the graph itself: the same quotient and
/// constraints restricted to functions constant on each vertex ball.
pub fn graph_vonneumann_eigenvalue(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    resolution: i32,
    edge_set: QuotientEdgeSet,
    normalization: MeasureNormalization,
) -> Result<f64> {
    constrained_eigenvalue(graph, region, t, resolution, edge_set, normalization, true)
}

fn constrained_eigenvalue(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    resolution: i32,
    edge_set: QuotientEdgeSet,
    normalization: MeasureNormalization,
    per_vertex_constant: bool,
) -> Result<f64> {
    let data = boundary_data(graph, region, t, resolution)?;
    if data.vertex_boundary_cells.is_empty() {
        return Err(Error::EmptyBoundary { t });
    }
    let e = graph.embedding();
    let snapshot = graph.snapshot(t)?;
    let mask = region.cell_mask(resolution)?;
    let per_vertex = e.cells_per_vertex(resolution);
    let params = mode_params(e, resolution, normalization);
    let pencil = assemble_pencil(
        &snapshot,
        e,
        &mask,
        &data.vertex_boundary_cells,
        resolution,
        edge_set,
        normalization,
        false,
    );
    let m = pencil.cells.len();
    let position = |v: usize, k: u64| -> usize {
        pencil
            .cells
            .iter()
            .position(|&c| c == (v, k))
            .expect("active cell")
    };

    // Constraint rows over the active cells.
    let mut constraints: Vec<Vec<f64>> = Vec::new();
    let mut mean = vec![0.0; m];
    for (pos, &(v, _)) in pencil
        .cells
        .iter()
        .take(pencil.region_cell_count)
        .enumerate()
    {
        mean[pos] = snapshot.gamma[v] * params.cell_mass;
    }
    constraints.push(mean);
    // Zero flux at each boundary cell x: sum over region neighbours y of
    // A(x,y,t) (f(x) - f(y)) dy = 0.
    for &(bv, bk) in &data.vertex_boundary_cells {
        let x_pos = position(bv, bk);
        let mut row = vec![0.0; m];
        for vy in 0..e.vertices() {
            let weight = snapshot.adjacency.get(bv, vy);
            if weight == 0.0 {
                continue;
            }
            for ky in 0..per_vertex as u64 {
                if !mask[vy * per_vertex + ky as usize] {
                    continue;
                }
                let c = params.kernel_scale * weight * params.cell_mass;
                row[x_pos] += c;
                row[position(vy, ky)] -= c;
            }
        }
        constraints.push(row);
    }

    if per_vertex_constant {
        // Work in the subspace of per-vertex-ball constants.
        let active_vertices: Vec<usize> = {
            let mut vs: Vec<usize> = pencil.cells.iter().map(|&(v, _)| v).collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        };
        let embed = Mat::from_fn(m, active_vertices.len(), |i, a| {
            if pencil.cells[i].0 == active_vertices[a] {
                1.0
            } else {
                0.0
            }
        });
        let q_v = embed.transpose().mul(&pencil.q.mul(&embed));
        let mut d_v = vec![0.0; active_vertices.len()];
        for (i, &(v, _)) in pencil.cells.iter().enumerate() {
            let a = active_vertices.iter().position(|&x| x == v).unwrap();
            d_v[a] += pencil.d[i];
        }
        let constraints_v: Vec<Vec<f64>> = constraints
            .iter()
            .map(|row| {
                active_vertices
                    .iter()
                    .map(|&v| {
                        row.iter()
                            .zip(&pencil.cells)
                            .filter(|(_, &(cv, _))| cv == v)
                            .map(|(x, _)| *x)
                            .sum()
                    })
                    .collect()
            })
            .collect();
        let basis = null_space_basis(&constraints_v, active_vertices.len());
        if basis.is_empty() {
            return Ok(f64::INFINITY);
        }
        let (q_red, d_red) = project_pencil(&q_v, &d_v, &basis);
        return Ok(min_generalized_rayleigh_sym(&q_red, &d_red)?.unwrap_or(f64::INFINITY));
    }

    let basis = null_space_basis(&constraints, m);
    if basis.is_empty() {
        return Ok(f64::INFINITY);
    }
    let (q_red, d_red) = project_pencil(&pencil.q, &pencil.d, &basis);
    Ok(min_generalized_rayleigh_sym(&q_red, &d_red)?.unwrap_or(f64::INFINITY))
}

/// All five quantities of the boundary-eigenvalue comparison, with the
/// inequalities evaluated and reported (never asserted).
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub t: f64,
    pub resolution: i32,
    pub dirichlet: f64,
    pub vonneumann: f64,
    pub graph_dirichlet: f64,
    pub graph_vonneumann: f64,
    pub gamma_hat: f64,
    /// `dirichlet <= min(graph_dirichlet, gamma_hat)`.
    pub dirichlet_le_min: bool,
    /// `dirichlet <= 1`.
    pub dirichlet_le_one: bool,
    /// `vonneumann <= min(graph_vonneumann, gamma_hat)`.
    pub vonneumann_le_min: bool,
    /// Strict comparison `gamma_hat < graph_dirichlet`.
    pub gamma_hat_lt_graph_dirichlet: bool,
    /// Strict comparison `vonneumann < graph_vonneumann`.
    pub vonneumann_lt_graph_vonneumann: bool,
}

const FLAG_TOL: f64 = 1e-9;

pub fn bound_report(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    resolution: i32,
    edge_set: QuotientEdgeSet,
    normalization: MeasureNormalization,
) -> Result<BoundReport> {
    let data = boundary_data(graph, region, t, resolution)?;
    if data.vertex_boundary_cells.is_empty() {
        return Err(Error::EmptyBoundary { t });
    }
    let dirichlet = dirichlet_eigenvalue(graph, region, t, resolution, edge_set, normalization)?;
    let vonneumann = vonneumann_eigenvalue(graph, region, t, resolution, edge_set, normalization)?;
    let graph_dirichlet = graph_dirichlet_eigenvalue(graph, region, t)?;
    let graph_vonneumann =
        graph_vonneumann_eigenvalue(graph, region, t, resolution, edge_set, normalization)?;
    let gamma = gamma_hat(graph, region, t, normalization)?;
    Ok(BoundReport {
        t,
        resolution,
        dirichlet,
        vonneumann,
        graph_dirichlet,
        graph_vonneumann,
        gamma_hat: gamma,
        dirichlet_le_min: dirichlet <= graph_dirichlet.min(gamma) + FLAG_TOL,
        dirichlet_le_one: dirichlet <= 1.0 + FLAG_TOL,
        vonneumann_le_min: vonneumann <= graph_vonneumann.min(gamma) + FLAG_TOL,
        gamma_hat_lt_graph_dirichlet: gamma < graph_dirichlet - FLAG_TOL,
        vonneumann_lt_graph_vonneumann: vonneumann < graph_vonneumann - FLAG_TOL,
    })
}

/// Admissibility helpers used by tests and diagnostics: the flux of `f` at a
/// boundary cell under the reversed-pair reading.
pub fn boundary_flux(
    graph: &TimeGraph,
    region: &Region,
    t: f64,
    f: &L2Function,
    cell: (usize, u64),
    normalization: MeasureNormalization,
) -> Result<Complex64> {
    let e = graph.embedding();
    let resolution = f.resolution().max(region.finest_scale());
    let f = if f.resolution() < resolution {
        f.lift_to(resolution)
    } else {
        f.clone()
    };
    let snapshot = graph.snapshot(t)?;
    let mask = region.cell_mask(resolution)?;
    let per_vertex = e.cells_per_vertex(resolution);
    let params = mode_params(e, resolution, normalization);
    let cells = f.to_cells();
    let fx = cells.value(cell.0, cell.1);
    let mut flux = Complex64::new(0.0, 0.0);
    for vy in 0..e.vertices() {
        let weight = snapshot.adjacency.get(cell.0, vy);
        if weight == 0.0 {
            continue;
        }
        for ky in 0..per_vertex as u64 {
            if !mask[vy * per_vertex + ky as usize] {
                continue;
            }
            flux += (fx - cells.value(vy, ky)) * params.kernel_scale * weight * params.cell_mass;
        }
    }
    Ok(flux)
}
