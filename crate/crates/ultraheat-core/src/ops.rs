//! The operators induced by the graph kernel on `L²(K_N)`:
//!
//! * `apply_adjacency` — the integral operator with kernel
//!   `A(x,y,t) = p^N sum A_IJ(t) Omega_I(x) Omega_J(y)`; it acts as the
//!   adjacency matrix on ball values and annihilates every wavelet.
//! * `apply_matrix_laplacian` — the same construction for the Laplacian
//!   matrix; also zero on wavelets, so it carries no more information than
//!   the matrix itself.
//! * `apply_generator` — the diffusion generator
//!   `L u = (adjacency u) - gamma * u`; ball values feel the Laplacian matrix
//!   while every wavelet in ball `I` is an eigenfunction with eigenvalue
//!   `-gamma_I(t)`.
//!
//! `mismatch_witness` evaluates the two Laplacian candidates at a point where
//! they disagree, and `spectral_frame` provides the tracked eigendecomposition
//! of `L(t)` used by the closed-form solver.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::TimeGraph;
use crate::l2::L2Function;
use crate::linalg::{jacobi_eigh, Mat};
use crate::padic::{Ball, PAdicNumber};
use crate::tolerances;

/// `u -> integral of A(x,y,t) u(y) dy`: ball values are multiplied by the
/// adjacency matrix, the wavelet part is annihilated.
pub fn apply_adjacency(graph: &TimeGraph, t: f64, f: &L2Function) -> Result<L2Function> {
    let snapshot = graph.snapshot(t)?;
    let mut out = f.ball_mean_projection();
    let values = snapshot.adjacency.matvec_complex(f.vertex_values());
    out.vertex_values_mut().copy_from_slice(&values);
    Ok(out)
}

/// The integral operator built from the Laplacian matrix. It is the matrix
/// action on ball values and zero on the wavelet complement.
pub fn apply_matrix_laplacian(graph: &TimeGraph, t: f64, f: &L2Function) -> Result<L2Function> {
    let snapshot = graph.snapshot(t)?;
    let mut out = f.ball_mean_projection();
    let values = snapshot.laplacian.matvec_complex(f.vertex_values());
    out.vertex_values_mut().copy_from_slice(&values);
    Ok(out)
}

/// The diffusion generator: Laplacian matrix on ball values, each wavelet in
/// ball `I` scaled by `-gamma_I(t)`.
pub fn apply_generator(graph: &TimeGraph, t: f64, f: &L2Function) -> Result<L2Function> {
    let snapshot = graph.snapshot(t)?;
    let mut out = f.clone();
    let values = snapshot.laplacian.matvec_complex(f.vertex_values());
    out.vertex_values_mut().copy_from_slice(&values);
    let gamma = snapshot.gamma;
    out.scale_wavelets_per_vertex(|vertex| Complex64::new(-gamma[vertex], 0.0));
    Ok(out)
}

/// Evaluates the matrix Laplacian and the generator at `x0` for the indicator
/// of the sub-ball `B_{p^-r}(a)` inside vertex ball `j0`. For a proper
/// sub-ball and `x0` outside it the two values are `(-p^(N-r) gamma_j0, 0)`;
/// at `r = N` the operators agree.
pub fn mismatch_witness(
    graph: &TimeGraph,
    t: f64,
    j0: usize,
    r: i32,
    a: &PAdicNumber,
    x0: &PAdicNumber,
) -> Result<(f64, f64)> {
    let embedding = graph.embedding();
    if r < embedding.level() {
        return Err(Error::InvalidArgument(format!(
            "sub-ball scale {r} is coarser than the embedding level"
        )));
    }
    if embedding.locate(a) != Some(j0) {
        return Err(Error::InvalidArgument(
            "sub-ball center does not lie in the stated vertex ball".into(),
        ));
    }
    if embedding.locate(x0) != Some(j0) {
        return Err(Error::InvalidArgument(
            "witness point does not lie in the stated vertex ball".into(),
        ));
    }
    let resolution = r.max(embedding.level() + 1);
    let indicator = sub_ball_indicator(graph, r, a, resolution)?;
    let matrix_value = apply_matrix_laplacian(graph, t, &indicator)?.evaluate(x0)?;
    let generator_value = apply_generator(graph, t, &indicator)?.evaluate(x0)?;
    Ok((matrix_value.re, generator_value.re))
}

/// The indicator of a sub-ball as an element of the resolution-`R` space.
pub fn sub_ball_indicator(
    graph: &TimeGraph,
    r: i32,
    a: &PAdicNumber,
    resolution: i32,
) -> Result<L2Function> {
    let embedding = graph.embedding();
    if r > resolution {
        return Err(Error::InvalidArgument(format!(
            "sub-ball scale {r} is finer than the resolution {resolution}"
        )));
    }
    let ball = Ball::new(a.clone(), r);
    let per_vertex = embedding.cells_per_vertex(resolution);
    let mut values = Vec::with_capacity(embedding.vertices() * per_vertex);
    for vertex in 0..embedding.vertices() {
        for k in 0..per_vertex as u64 {
            let center = embedding.subball_center(vertex, k);
            let inside = ball.contains(&center);
            values.push(Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0));
        }
    }
    Ok(L2Function::from_cells(&crate::l2::CellVector::new(
        *embedding, resolution, values,
    )?))
}

/// Tracked eigendecomposition of the Laplacian matrix at one time.
#[derive(Clone, Debug)]
pub struct SpectralFrame {
    pub t: f64,
    /// Eigenvalues of `L(t)`, ascending for fresh frames; tracked frames keep
    /// the slot order of their reference.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal modal matrix; column `k` is the eigenvector for slot `k`.
    pub modal: Mat,
    /// Set when two eigenvector overlaps tied within the ambiguity tolerance
    /// during continuity matching.
    pub ambiguous_matching: bool,
}

impl SpectralFrame {
    /// Smallest pairwise eigenvalue gap (infinity for a single vertex).
    pub fn min_gap(&self) -> f64 {
        let n = self.eigenvalues.len();
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in 0..i {
                gap = gap.min((self.eigenvalues[i] - self.eigenvalues[j]).abs());
            }
        }
        gap
    }
}

/// Eigendecomposition of `L(t)`. With a reference frame, eigenpairs are
/// reordered by greedy maximal column overlap with the reference and signs
/// are flipped so each matched overlap is positive; ties within
/// [`tolerances::MATCH_AMBIGUITY`] are recorded on the frame.
pub fn spectral_frame(
    graph: &TimeGraph,
    t: f64,
    reference: Option<&SpectralFrame>,
) -> Result<SpectralFrame> {
    let snapshot = graph.snapshot(t)?;
    let (eigenvalues, modal) = jacobi_eigh(&snapshot.laplacian)?;
    let n = eigenvalues.len();
    let Some(reference) = reference else {
        return Ok(SpectralFrame {
            t,
            eigenvalues,
            modal,
            ambiguous_matching: false,
        });
    };

    // Overlap of reference slot i with fresh column j.
    let overlap = reference.modal.transpose().mul(&modal);
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            candidates.push((overlap.get(i, j).abs(), i, j));
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("overlaps are finite")
            .then_with(|| (a.1, a.2).cmp(&(b.1, b.2)))
    });

    let mut slot_of_column = vec![usize::MAX; n];
    let mut slot_taken = vec![false; n];
    let mut column_taken = vec![false; n];
    let mut assigned = 0usize;
    let mut ambiguous = false;
    for (idx, &(mag, slot, column)) in candidates.iter().enumerate() {
        if slot_taken[slot] || column_taken[column] {
            continue;
        }
        // A competing assignment of essentially the same strength makes the
        // greedy choice arbitrary; record it.
        for &(other_mag, other_slot, other_column) in &candidates[idx + 1..] {
            if (mag - other_mag).abs() >= tolerances::MATCH_AMBIGUITY {
                break;
            }
            let competes = (other_slot == slot) ^ (other_column == column);
            if competes && !slot_taken[other_slot] && !column_taken[other_column] {
                ambiguous = true;
                break;
            }
        }
        slot_taken[slot] = true;
        column_taken[column] = true;
        slot_of_column[slot] = column;
        assigned += 1;
        if assigned == n {
            break;
        }
    }

    let mut perm = vec![0usize; n];
    let mut signs = vec![1.0; n];
    for slot in 0..n {
        let column = slot_of_column[slot];
        perm[slot] = column;
        if overlap.get(slot, column) < 0.0 {
            signs[slot] = -1.0;
        }
    }
    let modal = modal.permute_columns(&perm, &signs);
    let eigenvalues = perm.iter().map(|&c| eigenvalues[c]).collect();
    Ok(SpectralFrame {
        t,
        eigenvalues,
        modal,
        ambiguous_matching: ambiguous,
    })
}
