//! Spectrum and stabilization toolkit for chains of serially connected
//! strings and Euler-Bernoulli beams.
//!
//! The chain alternates string and beam edges (string first, beam last).
//! The crate covers four layers:
//!
//! * [`chain`] — validated geometry and the rational-approximation witness
//!   behind the length-irrationality hypotheses.
//! * [`spectrum`] — per-edge transfer matrices, the characteristic function
//!   f(z) = m₁₂(z) of the chain product, root scanning and refinement,
//!   asymptotic families and the generalized gap statistic.
//! * [`modes`] — eigenmode reconstruction from roots, the explicit zero
//!   eigenspace, node-trace sums and a multiplicity check.
//! * [`fem`] — conforming finite elements (linear strings, Hermite beams),
//!   implicit-midpoint time stepping with exact energy balance, the discrete
//!   spectral oracle, resolvent-norm sweeps and polynomial-decay fits.

pub mod chain;
pub mod error;
pub mod fem;
pub mod mat2;
pub mod modes;
pub mod spectrum;

pub use chain::{validate_chain, ChainGeometry, EdgeKind, RationalityReport};
pub use error::{Error, Result};
pub use fem::decay::{fit_decay_samples, fit_polynomial_decay, DecayFit};
pub use fem::oracle::{oracle_spectrum_discrete, oracle_spectrum_richardson};
pub use fem::resolvent::{
    default_beta_grid, resolvent_norm_sweep, trust_horizon, ResolventSample,
};
pub use fem::sim::{
    decay_initial_state, dissipation_rate, energy, project_out_zero_modes, simulate, simulate_raw,
    step, EnergyTrace, State, Stepper,
};
pub use fem::{discretize, DiscreteSystem, Variant};
pub use mat2::Mat2;
pub use modes::{
    build_eigenmode, multiplicity_check, node_trace_sum, node_trace_sum_p2, zero_eigenspace,
    Eigenmode, ZeroModeBasis,
};
pub use spectrum::{
    asymptotic_char_fn, asymptotic_gap_check, char_fn, classify_roots, eval_m, find_spectrum,
    generalized_gap, simple_gap, FamilyKind, SpectralRoot, SpectrumScan,
};

/// Caps the worker-thread pool used by the parallel scans and sweeps. Must
/// run before any parallel work; later calls fail harmlessly.
pub fn set_worker_threads(threads: usize) -> std::result::Result<(), String> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}
