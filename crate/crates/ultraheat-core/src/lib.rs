//! Numerical library for non-autonomous diffusion on a finite graph whose
//! vertices are embedded into disjoint p-adic balls.
//!
//! The state space is `K_N`, a disjoint union of `n` balls of radius `p^-N`
//! inside the p-adic integers. Edge weights vary in time through a small
//! expression language; the resulting kernel operator, its Laplacian, the
//! heat-equation solvers (spectral closed form, frozen-coefficient Trotter
//! products, commuting-family exponential), boundary eigenvalues of regions,
//! and the associated inhomogeneous jump process all live here.
//!
//! Modules mirror the layers of the computation:
//!
//! * [`padic`] — digit-level p-adic numbers, balls, the vertex embedding;
//! * [`expr`] — the time-dependence language for edge weights;
//! * [`graph`] — time-dependent weighted graphs and their Laplacian snapshots;
//! * [`l2`] — the finite working subspace of `L²(K_N)`: ball indicators plus
//!   oscillating wavelets, and the transforms between coefficient and cell views;
//! * [`ops`] — the kernel operator, the two Laplacians, spectral frames;
//! * [`evolve`] — Cauchy-problem solvers and their diagnostics;
//! * [`boundary`] — regions, vertex/edge boundaries, constrained eigenvalues;
//! * [`stochastic`] — thinning simulation of the jump process and
//!   Monte-Carlo/analytic cross validation;
//! * [`scenario`] — the JSON scenario file shared by the CLI and bindings.

pub mod boundary;
pub mod error;
pub mod evolve;
pub mod expr;
pub mod graph;
pub mod l2;
pub mod linalg;
pub mod ops;
pub mod padic;
pub mod quad;
pub mod scenario;
pub mod stochastic;
pub mod tolerances;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits, the fixed width used by every
/// CSV emitter so that repeated runs are byte identical.
pub fn format_float(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    format!("{:.16e}", x)
}
