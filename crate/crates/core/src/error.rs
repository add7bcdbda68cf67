use core::fmt;

/// Errors reported by grid construction, state synthesis, analysis and
/// trajectory integration.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid sizes must be powers of two for the radix-2 transform.
    NotPowerOfTwo(usize),
    /// The spatial domain is empty or inverted.
    EmptyDomain { x_min: f64, x_max: f64 },
    /// The grid's Nyquist wavenumber leaves too little headroom above the
    /// configured spectral band.
    InsufficientHeadroom { available: f64, required: f64 },
    /// A synthesis or run parameter is out of its validity range.
    InvalidParams(&'static str),
    /// An L2 norm check failed (unit norm expected within 1e-10).
    NotNormalized { norm_sq: f64 },
    /// The local-momentum field has no interior extremum above/below the
    /// spectral band (e.g. a plain Gaussian state).
    NoExtremum,
    /// |psi|^2 underflowed at a node; the guiding velocity is undefined there.
    NodeUnderflow { x: f64, t: f64 },
    /// Step halving hit the minimum step size without meeting the error
    /// tolerance.
    StepExhausted { x: f64, t: f64 },
    /// The time-integrated current and the cumulative-probability difference
    /// disagree beyond tolerance; the run is numerically unhealthy.
    FluxRouteMismatch { by_current: f64, by_probability: f64 },
    /// Ensemble momenta must be pairwise distinct for ordering analysis.
    DuplicateMomenta,
    /// Bisection found no sign change of the lobe slope on the bracket.
    NoSignChange { lo: f64, hi: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPowerOfTwo(n) => write!(f, "grid size {n} is not a power of two"),
            Error::EmptyDomain { x_min, x_max } => {
                write!(f, "empty spatial domain [{x_min}, {x_max})")
            }
            Error::InsufficientHeadroom {
                available,
                required,
            } => write!(
                f,
                "Nyquist wavenumber {available} below required headroom {required}"
            ),
            Error::InvalidParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::NotNormalized { norm_sq } => {
                write!(f, "state not normalized: |norm^2 - 1| = {:e}", norm_sq - 1.0)
            }
            Error::NoExtremum => write!(f, "no interior local-momentum extremum"),
            Error::NodeUnderflow { x, t } => {
                write!(f, "density underflow at node (x={x}, t={t})")
            }
            Error::StepExhausted { x, t } => {
                write!(f, "step halving exhausted near (x={x}, t={t})")
            }
            Error::FluxRouteMismatch {
                by_current,
                by_probability,
            } => write!(
                f,
                "flux routes disagree: current {by_current} vs probability {by_probability}"
            ),
            Error::DuplicateMomenta => write!(f, "ensemble momenta are not pairwise distinct"),
            Error::NoSignChange { lo, hi } => {
                write!(f, "lobe slope does not change sign on [{lo}, {hi}]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
