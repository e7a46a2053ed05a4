use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("transfer function has a pole on the evaluation contour at frequency {frequency}")]
    PoleOnEvaluationContour { frequency: f64 },

    #[error("companion-matrix eigensolve did not converge")]
    RootFindingFailure,

    #[error("transfer function is improper (numerator degree {num} > denominator degree {den})")]
    ImproperTransferFunction { num: usize, den: usize },

    #[error("invalid transfer function: {0}")]
    InvalidTransferFunction(String),

    #[error("plant is not stable; poles: {poles}")]
    UnstablePlant { poles: String },

    #[error("multiplier is not suitable (margin {margin:.6e} at w = {frequency})")]
    NotSuitable { margin: f64, frequency: f64 },

    #[error("negative discriminant in gain-bound quadratic at w = {frequency}")]
    NegativeDiscriminant { frequency: f64 },

    #[error("invalid multiplier: {0}")]
    InvalidMultiplier(String),

    #[error("multiplier already lies on the period lattice; no counterexample exists")]
    NotACounterexampleCandidate,

    #[error("no admissible (p_r, n_r) index pair")]
    DegenerateIndexSet,

    #[error("linear program failed: {0}")]
    LinearProgram(String),

    #[error("nonlinearity is not monotone: {0}")]
    NonmonotoneNonlinearity(String),

    #[error("steady-state map is not unique: {0}")]
    NoUniqueSteadyState(String),

    #[error("no feasible multiplier in the search box")]
    NoFeasibleMultiplier,

    #[error("state became non-finite or exceeded the divergence guard at step {step}")]
    NonfiniteState { step: usize },

    #[error("algebraic loop cannot be resolved: {0}")]
    AlgebraicLoop(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("window too short: need {needed} samples, have {available}")]
    WindowTooShort { needed: usize, available: usize },

    #[error("trace did not settle onto a cycle of the requested period")]
    NotSettled,

    #[error("separation underflowed during Lyapunov estimation at step {step}")]
    DegenerateSeparation { step: usize },

    #[error("length {0} is not a power of two")]
    LengthNotPowerOfTwo(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
