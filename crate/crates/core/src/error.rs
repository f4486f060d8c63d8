use thiserror::Error;

use crate::closed_form::LawId;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Stability index outside the guarded interval (1 + delta, 2 - delta).
    #[error("stability index alpha = {alpha} outside guarded interval ({lo}, {hi})")]
    InvalidAlpha { alpha: f64, lo: f64, hi: f64 },

    /// Argument outside the domain of the requested operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Mellin argument outside the open strip of finiteness.
    #[error("s = {s} outside the Mellin strip ({lower}, {upper}) of {law}")]
    OutsideStrip { law: LawId, s: f64, lower: f64, upper: f64 },

    /// Series truncation criterion not met within the term budget.
    #[error("series for {what} did not converge within {max_terms} terms at x = {x}")]
    NonConvergence { what: &'static str, x: f64, max_terms: u32 },

    /// Result exceeds the floating-point range.
    #[error("overflow in {op} at argument {arg}")]
    Overflow { op: &'static str, arg: f64 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed: {msg} (err_est = {err_est}, tol = {tol})")]
    QuadratureFailure { msg: String, err_est: f64, tol: f64 },

    /// Asymptotic expansion not available for the requested combination.
    #[error("unsupported asymptote: {msg}")]
    UnsupportedAsymptote { msg: String },

    /// Law not handled by the requested operation.
    #[error("law {law} not supported by {op}")]
    UnsupportedLaw { law: LawId, op: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
