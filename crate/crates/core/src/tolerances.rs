//! Default tolerances of the verification checks.

/// `tau_det` vs `tau_subset_sum`, relative.
pub const TAU_ORACLE_RTOL: f64 = 1e-10;
/// Exact derivatives vs finite differences, relative.
pub const FINITE_DIFFERENCE_RTOL: f64 = 1e-5;
/// KP and KdV residuals relative to the largest term.
pub const PDE_RESIDUAL_RTOL: f64 = 1e-8;
/// A structure-breaking perturbation must push the KP residual above this.
pub const NEGATIVE_CONTROL_MIN: f64 = 1e-2;
/// Reflectionless potential vs the one-soliton closed form, absolute.
pub const ONE_SOLITON_ATOL: f64 = 1e-10;
/// KdV field vs the KP reduction, absolute.
pub const REDUCTION_ATOL: f64 = 1e-10;
/// `u_1` under a trivial factor, absolute.
pub const TRIVIAL_FACTOR_ATOL: f64 = 1e-10;
/// Determinant identity chain, relative.
pub const KPS_RTOL: f64 = 1e-10;
/// Monte Carlo agreement, in standard errors.
pub const Z_MAX: f64 = 3.0;
/// Largest acceptable stderr / |target| for the determinant checks.
pub const REL_STDERR_MAX: f64 = 0.02;
/// Gaussian-average quadrature vs closed form, absolute.
pub const QUADRATURE_ATOL: f64 = 1e-8;
/// Gauss–Hermite order for the quadrature checks.
pub const QUADRATURE_ORDER: usize = 64;
