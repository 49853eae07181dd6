use thiserror::Error;

/// Errors raised by the solvers in this crate.
#[derive(Debug, Clone, Error)]
pub enum HjError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Legendre solve did not converge (residual {residual:e})")]
    NonConvergence { residual: f64 },

    #[error("convex conjugate is unbounded at s = {s}: theta does not grow superlinearly")]
    Unbounded { s: f64 },

    #[error(
        "action minimization did not converge after {starts} starts (best residual {residual:e})"
    )]
    NoConvergence { starts: usize, residual: f64 },

    #[error("iterate left the trust region |xi - x| <= {radius} (reached {reached})")]
    BlowUp { radius: f64, reached: f64 },

    #[error("multi-start maximizers disagree by {spread:e} at t = {t}; halve the step")]
    UniquenessViolation { t: f64, spread: f64 },

    #[error("no trial time passed the convexity probe (trials: {trials:?})")]
    ProbeFailure { trials: Vec<f64> },

    #[error("difference quotients diverge near the sample point (max {max_quotient:e})")]
    DegenerateSamples { max_quotient: f64 },

    #[error("seed point is not singular (superdifferential diameter {diameter:e})")]
    NotSingularSeed { diameter: f64 },

    #[error("step failed at arc time {time}: {source}")]
    StepFailure {
        time: f64,
        #[source]
        source: Box<HjError>,
    },

    #[error(
        "weak KAM iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    WeakKamNoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error("unknown fixture id `{0}`")]
    UnknownFixture(String),

    #[error("grid load error: {0}")]
    GridLoad(String),
}

pub type Result<T> = std::result::Result<T, HjError>;
