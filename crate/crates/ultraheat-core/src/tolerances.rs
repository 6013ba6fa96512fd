//! Central numerical thresholds. Every guard in the crate reads from here so
//! the values are greppable and tests can state which knob they exercise.

/// Off-diagonal Frobenius target of the cyclic Jacobi eigensolver, relative
/// to the input scale.
pub const JACOBI_OFFDIAG: f64 = 1e-12;

/// Maximum Jacobi sweeps before giving up; convergence is quadratic, so this
/// is never reached for the matrix sizes this crate targets.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalue gap below which the closed-form solver refuses on a
/// time-varying family: eigenvector continuity can fail at crossings.
pub const DEGENERATE_GAP: f64 = 1e-9;

/// Two eigenvector overlaps closer than this make continuity matching
/// ambiguous; a warning is recorded on the frame.
pub const MATCH_AMBIGUITY: f64 = 1e-9;

/// Commutation defect above which the commuting-family exponential refuses.
pub const COMMUTATION_TOL: f64 = 1e-9;

/// Entry-wise variation below which a weight family is treated as constant
/// in time. Constant families have trivially continuous eigenvectors, so the
/// degenerate-gap refusal does not apply to them.
pub const CONSTANT_FAMILY_TOL: f64 = 1e-14;

/// Number of interior samples (plus both endpoints) used to validate weight
/// nonnegativity over the scenario window.
pub const WEIGHT_VALIDATION_GRID: usize = 256;

/// Safety factor applied to the sampled supremum of the jump rates when
/// choosing the dominating rate for thinning.
pub const DOMINATING_RATE_MARGIN: f64 = 1.05;

/// Grid used to sample the rate supremum for the dominating rate.
pub const DOMINATING_RATE_GRID: usize = 256;

/// Singular values below this (relative) threshold are treated as zero when
/// eliminating constraints in the boundary eigenvalue solvers.
pub const CONSTRAINT_RANK_TOL: f64 = 1e-10;
