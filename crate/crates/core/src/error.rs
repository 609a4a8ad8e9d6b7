use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: expected {}", expected.join(" or "))]
    Syntax {
        position: usize,
        expected: Vec<String>,
    },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),

    #[error("k10 vanishes at (t, r) = ({t}, {r}) while k7, k8, k9 do not")]
    K10Degenerate { t: f64, r: f64 },
    #[error("unsupported connection: {0}")]
    UnsupportedConnection(String),
    #[error("insufficient samples: needed {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("class signature changes across the grid: {0}")]
    MixedClass(String),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("lambda = F/D is not constant on the grid (spread {spread:e})")]
    LambdaNotConstant { spread: f64 },
    #[error("lambda = 1: the power law degenerates to a quadratic form")]
    LambdaEqualsOne,
    #[error("mu = F/E is not constant on the grid (spread {spread:e})")]
    MuNotConstant { spread: f64 },
    #[error("one-form is not closed: curl residual {residual:e} at (t, r) = ({t}, {r})")]
    NotClosed { residual: f64, t: f64, r: f64 },
    #[error("Delta vanishes on the grid for every admissible shift of M")]
    DeltaVanishes,
    #[error("metric transport is path dependent (discrepancy {discrepancy:e})")]
    PathDependent { discrepancy: f64 },
    #[error("not Riemann metrizable: {0}")]
    NotRiemannMetrizable(String),
    #[error("a1*a4 - a2*a3 vanishes at (t, r) = ({t}, {r})")]
    SingularQuadratic { t: f64, r: f64 },
    #[error("recovered gradient is not closed: curl residual {residual:e} at (t, r) = ({t}, {r})")]
    GradientNotClosed { residual: f64, t: f64, r: f64 },
    #[error("degenerate Hessian: |det g| = {det:e} at {witness}")]
    Degenerate { det: f64, witness: String },
    #[error("wrong class for this builder: {0}")]
    WrongClass(String),

    #[error("trajectory left the chart at s = {s}: {reason}")]
    ChartExit { s: f64, reason: String },
    #[error("step size underflow at s = {s}")]
    StepFailure { s: f64 },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
