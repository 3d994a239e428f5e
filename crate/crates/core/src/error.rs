use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong in the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A Riccati–Bessel order below zero.
    NegativeOrder(i64),
    /// An index that is not a nonnegative integer where one is required.
    UnsupportedOrder(f64),
    /// An argument outside the domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// A result overflowed or became NaN.
    NonFinite { what: &'static str, at: f64 },
    /// The two index sets share an element.
    NotDisjoint(f64),
    /// An element is `<= -0.5` or not finite.
    OutOfRange(f64),
    /// An element occurs twice in the same set.
    Duplicate(f64),
    /// `|S| != |T|`.
    NonSquare { s_len: usize, t_len: usize },
    /// The coefficient system is singular or too badly conditioned to trust.
    IllConditioned {
        condition: f64,
        s: Vec<f64>,
        t: Vec<f64>,
    },
    /// The coefficient system was solved but the residual is too large.
    Residual { row: usize, residual: f64 },
    /// Invalid grid or discretization parameters.
    Grid(&'static str),
    /// Panel doubling did not reach the requested tolerance.
    NotConverged {
        what: &'static str,
        tolerance: f64,
        achieved: f64,
    },
    /// `f(lo)` and `f(hi)` have the same sign.
    NoSignChange {
        lo: f64,
        f_lo: f64,
        hi: f64,
        f_hi: f64,
    },
    /// Singular value decomposition failed.
    Decomposition,
    /// A step of a multi-step verification failed.
    Step { step: &'static str, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NegativeOrder(m) => write!(f, "negative order {m}"),
            Error::UnsupportedOrder(m) => {
                write!(f, "order {m} is not a nonnegative integer; only integer orders can be evaluated")
            }
            Error::Domain { what, value } => write!(f, "{what}: {value} is out of range"),
            Error::NonFinite { what, at } => write!(f, "{what} is not finite at {at}"),
            Error::NotDisjoint(x) => write!(f, "index sets are not disjoint: {x} appears in both"),
            Error::OutOfRange(x) => write!(f, "index {x} must be a finite number greater than -0.5"),
            Error::Duplicate(x) => write!(f, "index {x} appears more than once"),
            Error::NonSquare { s_len, t_len } => {
                write!(f, "non-square coefficient system: |S| = {s_len}, |T| = {t_len}")
            }
            Error::IllConditioned { condition, s, t } => write!(
                f,
                "coefficient system for S = {s:?}, T = {t:?} is singular or ill-conditioned (condition estimate {condition:e})"
            ),
            Error::Residual { row, residual } => {
                write!(f, "coefficient residual {residual:e} in row {row} exceeds tolerance")
            }
            Error::Grid(msg) => write!(f, "invalid grid: {msg}"),
            Error::NotConverged {
                what,
                tolerance,
                achieved,
            } => write!(
                f,
                "{what} did not converge: reached {achieved:e}, requested {tolerance:e}"
            ),
            Error::NoSignChange { lo, f_lo, hi, f_hi } => write!(
                f,
                "no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}"
            ),
            Error::Decomposition => write!(f, "singular value decomposition failed"),
            Error::Step { step, message } => write!(f, "step `{step}` failed: {message}"),
        }
    }
}

impl core::error::Error for Error {}
