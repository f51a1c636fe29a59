//! Desk-scale toolkit for suspension flows and two-sided limit shadowing.
//!
//! The crate builds computable compact metric systems (finite spaces with a
//! distance matrix, subshifts of finite type with the word metric), suspends
//! their homeomorphisms under the constant height function, and runs
//! brute-force shadowing searches against two-sided limit pseudo-orbits:
//!
//! * [`space`] — base systems, candidate enumeration, limit-set probes;
//! * [`reparam`] — the algebra of time reparametrizations, including the two
//!   gap-removal constructions;
//! * [`suspension`] — the suspension space, the Bowen-Walters metric and
//!   exact flow evaluation;
//! * [`pseudo_orbit`] — two-sided pseudo-orbits, sums sequences and the
//!   star evaluation;
//! * [`shadowing`] — shadowing verdicts for maps and flows, the lift of base
//!   shadowing to the suspension, the projection back to the base, finite
//!   shadowing and transitivity probes;
//! * [`singular`] — the singular suspension with one fixed point, its
//!   time-of-flight function and the non-shadowing demonstration;
//! * [`harness`] — reproducible experiments with serialized verdicts.
//!
//! Every search records its domain, so negative verdicts are statements
//! about the searched family, never bare claims.

pub mod harness;
pub mod pseudo_orbit;
pub mod reparam;
pub mod shadowing;
pub mod singular;
pub mod space;
pub mod suspension;

pub use pseudo_orbit::{ErrorSchedule, FlowPseudoOrbit, MapPseudoOrbit};
pub use reparam::{GapSpec, Reparam};
pub use shadowing::{ShadowStatus, ShadowVerdict};
pub use space::{FiniteSpace, Point, Space, SubshiftSpace, System, Word};
pub use suspension::{Flow, SuspensionFlow, SuspensionPoint};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("point is not in the space: {0}")]
    PointNotInSpace(String),
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("horizon must be at least 2, got {0}")]
    HorizonTooSmall(i64),
    #[error("time {t} outside the realized pseudo-orbit range [{lo}, {hi})")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("invalid pseudo-orbit: {0}")]
    InvalidPseudoOrbit(String),
    #[error("reparametrization certificate failed: {0}")]
    CertificateViolation(String),
    #[error("bisection bracket exhausted while solving {0}")]
    BracketExhausted(String),
    #[error("no alignment case holds; quarter-closeness precondition violated ({0})")]
    AlignmentFailed(String),
    #[error("time-of-flight is undefined at the singular column")]
    BetaUndefined,
    #[error("shadow search failed: {0}")]
    SearchFailed(String),
    #[error("missing connector from {from} to {to} at eps {eps}")]
    MissingConnector { from: String, to: String, eps: f64 },
    #[error("construction impossible: {0}")]
    ConstructionImpossible(String),
    #[error("replay mismatch at sample {index}: stored {stored}, recomputed {recomputed}")]
    ReplayMismatch {
        index: usize,
        stored: f64,
        recomputed: f64,
    },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
