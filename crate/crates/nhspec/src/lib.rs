//! Simulation and analysis toolkit for two-band non-Hermitian lattice models
//! probed by auxiliary-level absorption spectroscopy.
//!
//! The crate is organized as a pipeline:
//!
//! * [`models`] builds Bloch Hamiltonians and their closed-form complex
//!   energies, plus the six-level open-system description of the probe.
//! * [`linalg`] supplies the small dense complex kernels (2x2 eigenvalues,
//!   matrix exponential, state evolution) everything else leans on.
//! * [`dynamics`] evolves the probe either through the effective non-Hermitian
//!   three-level Hamiltonian or through the full Lindblad master equation.
//! * [`spectroscopy`] sweeps the probe detuning into spectral lines, with an
//!   optional shot-noise / parameter-fluctuation model.
//! * [`fitting`] recovers complex energies from spectral lines by nonlinear
//!   least squares and attaches bootstrap uncertainties.
//! * [`topology`] tracks bands across the Brillouin zone and classifies the
//!   complex-energy braid (trivial arcs, unlink, unknot, Hopf link).
//!
//! All quantities are in angular-frequency units of rad/us; times are in us.

pub mod dynamics;
pub mod fitting;
pub mod linalg;
pub mod models;
pub mod spectroscopy;
pub mod topology;

/// Errors shared across the crate.
///
/// Numerical routines fail loudly rather than returning best-effort values;
/// the topology guards in particular exist so that an under-resolved k grid
/// is reported instead of silently producing a wrong invariant.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A parameter or argument is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Matrix/vector dimensions do not match the operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A computation left the range where results are trustworthy
    /// (overflow-scale norms, non-finite intermediates).
    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    /// The integrator step size violates the stability bound.
    #[error("integration step too large: {0}")]
    InvalidStep(String),

    /// The integrator produced an unphysical state (trace drift, negativity).
    #[error("integration failed: {0}")]
    IntegratorFailure(String),

    /// Band tracking found a jump too large to assign continuously; rerun
    /// the sweep with a denser k grid over the reported interval.
    #[error("band tracking ambiguous between k = {k_lo} and k = {k_hi}: {msg}; regenerate with a finer k grid")]
    GridRefinementRequired { k_lo: f64, k_hi: f64, msg: String },

    /// The winding base point lies on (or numerically on) the energy curve.
    #[error("base point lies on the energy curve (distance {min_dist:.3e}); choose a different base energy")]
    BasePointOnCurve { min_dist: f64 },

    /// Consecutive phase steps exceed the half-turn guard; the curve is
    /// under-sampled for the requested invariant.
    #[error("phase step resolution too coarse: {0}")]
    ResolutionError(String),

    /// A snapped invariant sits too far from the nearest admissible value.
    #[error("invariant residue {residue:.3e} exceeds tolerance; curve may not close or is under-resolved")]
    ResidueTooLarge { residue: f64 },

    /// Two bands approach within the degeneracy guard of the braid metric.
    #[error("bands nearly degenerate (min separation {min_sep:.3e}); braid degree undefined")]
    DegenerateBands { min_sep: f64 },

    /// The optimizer exhausted its evaluation budget without meeting the
    /// convergence criteria.
    #[error("fit did not converge: {0}")]
    NotConverged(String),

    /// Bootstrap uncertainties were requested but cannot be formed.
    #[error("uncertainty unavailable: {0}")]
    UncertaintyUnavailable(String),

    /// An internal cross-check failed; indicates a bug or inconsistent data.
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
