use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("empty input: no edge lengths given")]
    EmptyInput,

    #[error("edge count must be even (strings and beams alternate), got {0}")]
    OddEdgeCount(usize),

    #[error("edge length #{index} must be strictly positive, got {value}")]
    NonPositiveLength { index: usize, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    /// The beam transfer-matrix denominator dropped below the pole threshold.
    /// Its zeros are removable only analytically; evaluation reports instead
    /// of returning NaN and the scanner re-samples around the point.
    #[error("beam transfer denominator ~{denominator:.3e} below threshold at z={z}, l={l}")]
    PoleEncountered { z: f64, l: f64, denominator: f64 },

    #[error("invalid scan range ({z_min}, {z_max})")]
    InvalidRange { z_min: f64, z_max: f64 },

    #[error("need at least {needed} roots, got {got}")]
    InsufficientRoots { needed: usize, got: usize },

    #[error("z={z} is not a root: |f(z)|={residual:.3e} exceeds {tol:.3e}")]
    NotARoot { z: f64, residual: f64, tol: f64 },

    #[error("ill-conditioned coefficient solve on edge #{edge} (cond ~ {cond:.3e})")]
    IllConditionedEdgeSolve { edge: usize, cond: f64 },

    #[error("mesh too coarse: edge #{edge} gets {elements} elements, need at least 4")]
    MeshTooCoarse { edge: usize, elements: usize },

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("eigenvalue solver failure: {0}")]
    EigSolverFailure(String),

    #[error("fit window [{lo}, {hi}] not covered by the trace")]
    WindowOutOfRange { lo: f64, hi: f64 },

    #[error("nonpositive energy inside the fit window at t={t}")]
    NonpositiveEnergy { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
