//! Crate-wide error type.
//!
//! Construction-time validation means most numeric operations are
//! infallible once their inputs exist; the variants here cover the
//! remaining failure surfaces: shape/parameter misuse, degenerate
//! models, diverging dynamics, and harness I/O.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Alphabet construction failed (zero size, duplicate or mislabeled symbols).
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    /// Probability vector failed validation (negativity or normalization).
    #[error("invalid distribution: {0}")]
    InvalidDist(String),

    /// Joint table failed validation (negativity, total mass, or shape).
    #[error("invalid joint: {0}")]
    InvalidJoint(String),

    /// Conditional table failed validation (a row is not a distribution).
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// Two objects that must share an alphabet or dimension do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A scalar argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A context symbol has zero prior-weighted likelihood under every latent
    /// symbol, so no posterior over latents exists for it.
    #[error("context symbol {symbol} admits no posterior: zero prior-weighted likelihood under every latent symbol")]
    DegenerateContextSymbol { symbol: usize },

    /// The observed context puts mass on symbols whose zero-likelihood
    /// entries eliminate every latent the content currently supports.
    #[error("observed context symbols {symbols:?} eliminate every supported latent")]
    DegenerateObservation { symbols: Vec<usize> },

    /// The entropy bound cannot be evaluated because the free energy is infinite.
    #[error("entropy bound inapplicable: free energy is infinite")]
    BoundInapplicable,

    /// Every stored attractor assigns zero mass somewhere the probe has mass.
    #[error("no stored attractor covers the probe's support")]
    NoAttractorCoversProbe,

    /// An iterative procedure produced a non-finite loss or violated a
    /// guaranteed descent property.
    #[error("diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },

    /// A diagnostic needs more observations than the run produced.
    #[error("insufficient data: needed {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The content entropy exceeds the configured capacity budget.
    #[error("capacity budget exceeded: entropy {entropy} nats > budget {budget} nats")]
    BudgetExceeded { entropy: f64, budget: f64 },

    /// The level content and its parent share no support, so the geometric
    /// interpolation between them is undefined.
    #[error("infeasible update: level content and parent share no support")]
    InfeasibleUpdate,

    /// A composition came out empty: either no children were given or a
    /// product left no symbol with positive mass.
    #[error("composition is empty: no shared support among the composed distributions")]
    EmptyComposition,

    /// Experiment configuration is missing, malformed, or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A trace file does not conform to the schema this crate writes.
    #[error("schema mismatch in {path}: {detail}")]
    SchemaMismatch { path: String, detail: String },

    /// Filesystem failure while reading or writing harness artifacts.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
