//! Error type shared by every module.

use alloc::string::String;

/// Failures raised by pricing, calibration and data handling.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The transform leaves its domain before the requested horizon.
    #[error("transform explodes at horizon {limit} (requested {tau})")]
    Explosion {
        /// Requested horizon.
        tau: f64,
        /// Explosion time of the offending factor.
        limit: f64,
    },
    /// Vector length does not match the factor count.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension {
        /// Expected length.
        expected: usize,
        /// Supplied length.
        got: usize,
    },
    /// Adaptive ODE step size underflowed.
    #[error("ODE step size underflow at t = {t}")]
    StepFailure {
        /// Integration time reached.
        t: f64,
    },
    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Bracketed growth term of the multi-period LIBOR identity is not positive.
    #[error("non-positive growth term {value} in term LIBOR")]
    NegativeGrowth {
        /// Value of the bracketed numerator.
        value: f64,
    },
    /// CDS mesh does not align with premium dates.
    #[error("mesh step {step} does not align with premium dates")]
    Mesh {
        /// Offending mesh step.
        step: f64,
    },
    /// Premium annuity is not positive.
    #[error("degenerate annuity {value}")]
    DegenerateAnnuity {
        /// Annuity value.
        value: f64,
    },
    /// Fourier inversion did not converge.
    #[error("Fourier quadrature failed: {0}")]
    Quadrature(String),
    /// Basis spread side inconsistent with the tenor ordering.
    #[error("basis convention: {0}")]
    Convention(String),
    /// Sequential bootstrap could not solve a knot.
    #[error("bootstrap failed at maturity {maturity}: {reason}")]
    Bootstrap {
        /// Maturity of the failing knot.
        maturity: f64,
        /// Explanation.
        reason: String,
    },
    /// Bootstrapped intensity is negative at a knot.
    #[error("negative intensity {value} at t = {t}")]
    NegativeIntensity {
        /// Knot time.
        t: f64,
        /// Intensity at the initial state.
        value: f64,
    },
    /// Panel average over no banks.
    #[error("empty panel")]
    EmptyPanel,
    /// A required quote is absent.
    #[error("missing quote: {0}")]
    MissingQuote(String),
    /// Invalid model or configuration parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
