//! Numerical tolerances shared by the whole crate.

/// Frobenius reconstruction tolerance for the SVD, relative to `max(1, ‖A‖_F)`.
pub const SVD_RECONSTRUCTION: f64 = 1e-8;

/// Off-diagonal threshold for one-sided Jacobi rotations (relative to the row norms).
pub const JACOBI_ORTHOGONALITY: f64 = 1e-15;

/// Jacobi leaves rows with squared norm below this fraction of `‖A‖_F²` unrotated.
pub const JACOBI_NEGLIGIBLE_ROW: f64 = 1e-30;

/// Maximum number of one-sided Jacobi sweeps before reporting non-convergence.
pub const JACOBI_MAX_SWEEPS: usize = 80;

/// Maximum absolute asymmetry accepted by symmetric-only routines.
pub const SYMMETRY: f64 = 1e-10;

/// Power iteration: relative tolerance and iteration cap.
pub const POWER_ITERATION_REL: f64 = 1e-6;
pub const POWER_ITERATION_MAX: usize = 10_000;

/// Smallest admissible Sherman–Morrison denominator `1 + uᵀ P⁻¹ u`.
pub const SHERMAN_MORRISON_DENOMINATOR: f64 = 1e-12;

/// Smallest admissible Schur complement `ξ` in the bordered inverse extension.
pub const BORDERED_SCHUR_MIN: f64 = 1e-12;

/// A shrink value σ is nonzero when σ > SHRINK_NONZERO · max(1, ‖X‖_F² / t).
pub const SHRINK_NONZERO: f64 = 1e-10;

/// Numerical rank: singular values above RANK_RELATIVE · σ₁ count.
pub const RANK_RELATIVE: f64 = 1e-10;

/// Negative quadratic forms smaller than this in magnitude are clamped to zero.
pub const QUADRATIC_CLAMP: f64 = 1e-10;
