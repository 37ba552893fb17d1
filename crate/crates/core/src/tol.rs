//! Numerical tolerances shared by the whole crate.
//!
//! Every guard and every property-check threshold is declared here so the
//! suite's numerics can be audited in one place.

/// Reconstruction tolerance for `U·diag(d)·Vᵀ` relative to `‖M‖_F`.
pub const RECON_TOL: f64 = 1e-10;
/// Orthogonality tolerance for decomposition factors.
pub const ORTHO_TOL: f64 = 1e-12;
/// Default relative threshold of [`crate::linalg::numeric_rank`].
pub const RANK_REL_TOL: f64 = 1e-7;

/// Admissibility of a [`crate::so3::RotationMatrix`] built by the crate.
pub const ROTATION_TOL: f64 = 1e-9;
/// Looser admissibility used when validating caller-supplied rotations.
pub const ROTATION_INPUT_TOL: f64 = 1e-6;
/// Unit-norm tolerance of quaternions.
pub const UNIT_QUAT_TOL: f64 = 1e-12;

/// Below this norm the rotation-vector maps switch to their Taylor series.
pub const EXP_SERIES_THRESHOLD: f64 = 1e-4;

/// `‖x‖` below which the quaternion mapping refuses its input.
pub const QUAT_MIN_NORM: f64 = 1e-12;
/// Smallest admissible second singular value of the 6D input.
pub const SIXD_RANK_TOL: f64 = 1e-9;
/// Minimal `d₂ − d₃` accepted by Procrustes when `det(M) ≤ 0`.
pub const PROCRUSTES_GAP_TOL: f64 = 1e-9;
/// Minimal denominator of the closed-form Procrustes derivative.
pub const PROCRUSTES_DERIV_TOL: f64 = 1e-7;
/// Minimal `λ₂ − λ₁` accepted by the symmetric-matrix mapping.
pub const SYMMAT_GAP_TOL: f64 = 1e-9;
/// `|R₁₃|` distance to 1 below which Euler extraction is in gimbal lock.
pub const GIMBAL_TOL: f64 = 1e-9;

/// Number of Jacobi sweeps used when differentiating through the eigensolver.
pub const DUAL_JACOBI_SWEEPS: usize = 8;
/// Sweep cap of the converging Jacobi eigensolver.
pub const MAX_JACOBI_SWEEPS: usize = 64;
