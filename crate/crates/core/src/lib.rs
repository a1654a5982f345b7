//! Logarithmic and relativistic Schrödinger operators on uniform grids.
//!
//! Two independent evaluations of `(I-Δ)^log` and `(I-Δ)^s` are provided:
//! singular-integral quadrature with modified-Bessel kernels
//! ([`operator_quad`]) and Fourier multipliers on the torus
//! ([`operator_spectral`]). On top of them sit a ground-state solver for
//! `(I-Δ)^log u + m u = u^p` ([`solver`]) and moving-plane diagnostics
//! ([`moving_planes`]).

pub mod cli;
pub mod error;
pub mod grid;
pub mod moving_planes;
pub mod operator_quad;
pub mod operator_spectral;
pub mod output;
pub mod quadrature;
pub mod solver;
pub mod special_fn;

pub use error::{Error, Result};
pub use grid::GridFunction;
pub use moving_planes::{
    antisym_min_probe, decay_bound_check, lambda0, omega, reflect_grid, symmetry_report,
    DecayProbe, ReflectionSpec, SymmetryReport,
};
pub use operator_quad::{
    apply_log_pointwise, apply_s_pointwise, dini_check, l0_norm, DiniReport, QuadOperator,
    QuadratureParams,
};
pub use operator_spectral::{
    apply_symbol_log, apply_symbol_s, inverse_shifted_symbol, taylor_residual, SpectralPlan,
};
pub use solver::{check_c2, residual, solve, EquationParams, SolveConfig};
pub use special_fn::{
    bessel_k, bessel_k_prime, c_norm, kappa, varpi_s, FractionalSpec, KernelSpec,
};
