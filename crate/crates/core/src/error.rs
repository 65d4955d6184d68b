use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("exponent must be a non-negative integer constant")]
    NonIntegerExponent,
    #[error("parameter name '{0}' is reserved")]
    ReservedParameter(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative number")]
    SqrtOfNegative,
    #[error("square root is not differentiable at zero")]
    NonDifferentiable,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{kind} at ({x}, {y})")]
pub struct EvalError {
    pub kind: DomainErrorKind,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("g must be a function of x alone")]
    GDependsOnY,
    #[error("inadmissible g: {reason} (sample x = {x})")]
    Inadmissible { reason: String, x: f64 },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("quadrature of g did not converge on [{a}, {b}]")]
    Quadrature { a: f64, b: f64 },
    #[error("value {u} lies outside the image of the working window")]
    WindowExceeded { u: f64 },
    #[error("step size underflow at t = {t}, last good state ({x}, {y})")]
    StepUnderflow { t: f64, x: f64, y: f64 },
    #[error("no return to the section within t = {t}; last state ({x}, {y})")]
    NoReturn { t: f64, x: f64, y: f64 },
    #[error("no sign change of the return-map displacement found in [{lo}, {hi}]")]
    NoCycleFound { lo: f64, hi: f64 },
    #[error("fixed-point iteration did not converge (residual {residual})")]
    NonConvergence { residual: f64 },
    #[error("level set {level} could not be traced on the grid")]
    LevelSet { level: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
