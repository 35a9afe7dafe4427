//! Shared error type for every layer of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma pole at x = {0} (zero or negative integer)")]
    Pole(f64),

    #[error("gamma overflow at x = {0}")]
    Overflow(f64),

    #[error("series did not converge within {0} terms")]
    Convergence(usize),

    #[error("syntax error at byte {offset}: {msg}")]
    Syntax { offset: usize, msg: String },

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("exponent of `{0}` must be a numeric literal")]
    NonLiteralExponent(String),

    #[error("exponent {exponent} of `{var}` is outside the derivative domain (needs > -1)")]
    ExponentDomain { var: String, exponent: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("variable `{0}` missing from evaluation point")]
    MissingVariable(String),

    #[error("operation is not defined for grade-{0} forms")]
    Grade(u8),

    #[error("total time derivative would need jet coordinates above order {0}")]
    JetOrder(u8),

    #[error("degenerate lagrangian: second velocity derivative vanishes identically")]
    DegenerateLagrangian,

    #[error("momentum relation cannot be inverted for the velocity")]
    NonInvertibleMomentum,

    #[error("momentum law has a composite left side (rate of p^{0}); no explicit form")]
    CompositeLhs(f64),

    #[error("singular momentum: |{var}| = {value:e} is below 1e-12 with a negative exponent")]
    SingularMomentum { var: String, value: f64 },

    #[error("state blew up: |{var}| > 1e12 at t = {t}")]
    Blowup { var: String, t: f64 },

    #[error("cannot compile right-hand side: {0}")]
    Compile(String),
}
