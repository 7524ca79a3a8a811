//! Crate-wide error type.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Measure construction rejected the input data.
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    /// Model construction rejected the input data.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The weighted measure |v|^2 m carries no mass, so the coupling cannot
    /// generate anything.
    #[error("coupling vanishes on the whole support: |v|^2 m has zero mass")]
    AllWeightsZero,

    /// A transform was evaluated on the real axis.
    #[error("spectral parameter must have nonzero imaginary part (got {re} + {im}i)")]
    RealSpectralParameter { re: f64, im: f64 },

    /// |a1 - z - F(z)| underflowed to the point where the perturbed
    /// transform cannot be formed.
    #[error("denominator smaller than 1e-300 while evaluating the perturbed transform at {re} + {im}i")]
    DenominatorVanishes { re: f64, im: f64 },

    /// The requested real point sits on an atom of the weighted measure;
    /// the boundary value diverges like w/eps there.
    #[error("lambda = {lambda} coincides with an atom at {atom} (weight {weight:.6e}) of the weighted measure")]
    AtomAtLambda { lambda: f64, atom: f64, weight: f64 },

    /// A vector was pushed through the singularity of X_lambda.
    #[error("X_lambda singular: lambda = {lambda} hits the atom at {atom} with v*phi != 0")]
    AtAtom { lambda: f64, atom: f64 },

    /// A pure-point certificate was requested where none holds.
    #[error("lambda = {0} does not carry a pure-point certificate")]
    NotPurePoint(f64),

    /// The model has no atoms at all.
    #[error("model has an empty atom list")]
    EmptyModel,

    /// Refinement was requested on data without a refinement parameter.
    #[error("not refinable: {0}")]
    NotRefinable(String),

    /// The dense oracle would exceed its size cap.
    #[error("oracle disabled: {atoms} atoms exceeds the dense-solve cap of {cap}")]
    OracleTooLarge { atoms: usize, cap: usize },

    /// The dense eigensolve failed its own residual audit.
    #[error("dense eigensolve failed: {0}")]
    EigensolveFailed(String),

    /// The gap-perturbation norm bound needs a positive spectral distance.
    #[error("norm bound requires d > 0 and a finite coupling norm (d = {d}, |v| = {v_norm})")]
    InvalidGap { d: f64, v_norm: f64 },

    /// An oracle self-check failed; results would be untrustworthy.
    #[error("oracle self-check failed: {0}")]
    OracleInconsistent(String),

    /// A model file was rejected; `path` names the offending field.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

impl Error {
    /// Shorthand for schema errors carrying a field path.
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}
