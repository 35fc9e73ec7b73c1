use alloc::string::String;

/// Errors raised by the design pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input out of domain: {0}")]
    InputDomain(String),

    #[error("no transmittance peak inside {lo} nm .. {hi} nm")]
    ResonanceNotFound { lo: f64, hi: f64 },

    #[error("resonance at {resonance} nm is truncated by the search window edge")]
    WindowTruncated { resonance: f64 },

    #[error("linewidth refinement did not converge within {samples} samples")]
    RefinementCap { samples: usize },

    #[error("both mirror transmissions vanish; escape split undefined")]
    DegenerateCavity,

    #[error("mirror reflectance {reflectance:.4} is too low for a penetration depth")]
    NotAMirror { reflectance: f64 },

    #[error("stack has no unique cavity spacer layer")]
    NoCavityLayer,

    #[error("mode solver failed: {0}")]
    SolverFailure(String),

    #[error("scattering fit is rank deficient: {0}")]
    RankDeficient(String),

    #[error("inconsistent loss budget: {0}")]
    InconsistentBudget(String),

    #[error("design point at d = {diameter} um failed: {source}")]
    AtDiameter {
        diameter: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::InputDomain(msg.into())
}
