use thiserror::Error;

/// Everything that can go wrong when building bases, sampling, solving, or
/// running an experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Array dimensions do not line up (matrix/vector products, index
    /// lengths, sample dimensions, ...).
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A point lies outside the support of the weight function, e.g. a
    /// Legendre evaluation at |x| > 1.
    #[error("point {value} is outside the support of the {family} weight")]
    OutOfSupport { family: &'static str, value: f64 },

    /// The requested total-degree basis has more terms than can be counted
    /// in 64 bits, let alone materialised.
    #[error("total-degree basis with dimension {dimension} and order {order} is too large to enumerate")]
    BasisTooLarge { dimension: usize, order: usize },

    /// A matrix column has zero Euclidean norm and cannot be normalised.
    #[error("column {index} has zero norm and cannot be normalised")]
    ZeroColumn { index: usize },

    /// A parameter value the caller supplied makes no sense.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Markov chain never accepted a proposal after burn-in, so the
    /// returned sample would be a single repeated point.
    #[error("proposal chain accepted nothing after burn-in ({attempts} attempts); check the proposal density")]
    ChainStalled { attempts: usize },

    /// The oscillator response blows up because the forcing frequency hits
    /// the natural frequency.
    #[error("resonant oscillator parameters: gamma - m*omega^2 = {detuning:e}")]
    Resonance { detuning: f64 },

    /// Exact projection was requested for a target that is not a polynomial,
    /// so no finite quadrature is exact.
    #[error("target is not polynomial; exact coefficients are unavailable")]
    NotPolynomial,

    /// The preconditioner design could not produce a usable matrix.
    #[error("preconditioner design failed: {0}")]
    DesignFailed(String),

    /// A file we were asked to read does not follow the expected layout.
    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
