//! Solver bank and problem samplers for the Laplace and Burgers benchmarks.

mod burgers;
mod fft;
mod gp;
mod grid;
mod laplace;

pub use burgers::{
    burgers_reference, burgers_solve, sample_burgers_ic, BurgersSampler, BurgersScheme, BURGERS_NU,
};
pub use fft::{fft_in_place, ifft_in_place};
pub use gp::{laplace_gp, perimeter_points, rbf_bilaplacian, rbf_laplacian, GpCollocation, GpSolver};
pub use grid::{mse, GridFunction, Layout, SolverResult, DIVERGENCE_BOUND};
pub use laplace::{
    laplace_fdm, laplace_spectral, laplace_spectral_modes, sample_laplace_pair, sample_laplace_params, Grading, LaplaceParams,
    LaplaceSample, LaplaceSolver, BANK_SPECTRAL_MODES,
};
