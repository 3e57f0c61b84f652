//! Double-spend risk engine.
//!
//! Computes the exact probability that an attacker controlling a share `q`
//! of a proof-of-work network's hashrate catches up `z` confirmations that
//! were observed to take time `t`, and regenerates the classical risk
//! tables over the `(r, q)` grid.
//!
//! The crate is organised around six modules:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`specfun`] | log-gamma, regularized incomplete gamma `Q(a,x)`, regularized incomplete beta `I_x(a,b)` |
//! | [`risk`] | the closed-form risk model: `catchup_time_free`, `catchup_timed`, `table_probability`, `min_confirmations` |
//! | [`oracle`] | independent finite-sum oracles, verification quadrature, and a Monte Carlo race simulator |
//! | [`tables`] | risk-table generation, cell formatting, fixture comparison, CSV/Markdown/LaTeX emitters |
//! | [`ingest`] | block-timestamp parsing and elapsed-confirmation-time extraction |
//! | [`cli`] | the `dsrisk` command-line front end |
//!
//! # Example
//!
//! ```
//! use dsrisk::risk::{self, Confirmations, HashrateShare};
//!
//! let q = HashrateShare::new(0.1).unwrap();
//! let z = Confirmations::new(6).unwrap();
//!
//! // Probability the attacker ever catches up six confirmations,
//! // regardless of how long they took.
//! let p = risk::catchup_time_free(z, q).unwrap();
//! assert!((p - 0.00059141216).abs() < 1e-12);
//!
//! // Conditioned on the six confirmations arriving exactly on schedule.
//! let timing = risk::timing_from(6.0 * 600.0, z, q, 600.0).unwrap();
//! let p_timed = risk::catchup_timed(z, q, timing.kappa).unwrap();
//! assert!(p_timed < p);
//! ```

pub mod cli;
pub mod ingest;
pub mod oracle;
pub mod risk;
pub mod specfun;
pub mod tables;

mod book;

pub use risk::{Confirmations, HashrateShare, Timing};

/// Errors produced by the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input outside a function's or type's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A series or continued fraction hit the iteration cap.
    #[error("{0} did not converge within the iteration cap")]
    Convergence(&'static str),
    /// A malformed input record, with its 1-based line number.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    /// Block heights skip a value.
    #[error("gap in block heights: missing height {0}")]
    HeightGap(u64),
    /// The same block height appears twice.
    #[error("duplicate block height {0}")]
    DuplicateHeight(u64),
    /// No records in the input.
    #[error("empty input: no block stamps found")]
    EmptyInput,
    /// Not enough records for the requested computation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Two structures that must line up do not.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
