//! Crate-wide error type. The variants are coarse on purpose: the CLI
//! maps them onto its exit-code contract and tests match on them.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed textual input, with a byte offset into the input.
    Parse { msg: String, pos: usize },
    /// Operands live over different pairs (ambient dimension mismatch).
    RingMismatch(String),
    /// A contact-order index left the configured window.
    WindowOverflow { index: i64, window: i64 },
    /// A series or operator window is too small for the requested
    /// computation to be exact.
    WindowMargin(String),
    /// A monomial basis class was required.
    NotMonomial(String),
    /// A graph failed validation; the message names the violated rule.
    InvalidGraph(String),
    /// A lattice point admits no `q`-power decomposition into the
    /// dictionary, which signals a bug or an out-of-dictionary input.
    Undecomposable { a: i64, b: i64 },
    /// A constraint system turned out contradictory.
    Inconsistent(String),
    /// The query is outside what the component can answer exactly; it
    /// is reported rather than approximated.
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { msg, pos } => write!(f, "parse error at byte {pos}: {msg}"),
            Error::RingMismatch(m) => write!(f, "ring mismatch: {m}"),
            Error::WindowOverflow { index, window } => {
                write!(f, "index {index} overflows window [-{window}, {window}]")
            }
            Error::WindowMargin(m) => write!(f, "insufficient window margin: {m}"),
            Error::NotMonomial(m) => write!(f, "not a monomial class: {m}"),
            Error::InvalidGraph(m) => write!(f, "invalid graph: {m}"),
            Error::Undecomposable { a, b } => {
                write!(f, "lattice point ({a}, {b}) has no dictionary decomposition")
            }
            Error::Inconsistent(m) => write!(f, "inconsistent constraints: {m}"),
            Error::Unsupported(m) => write!(f, "unsupported: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
