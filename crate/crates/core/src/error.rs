use thiserror::Error;

use crate::fock::EnsembleId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mode cutoff must be at least 2, got {0}")]
    CutoffTooSmall(u8),
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("mode `{0}` is listed more than once")]
    RepeatedMode(String),
    #[error("mode `{0}` still carries excitations and cannot be removed")]
    ModeNotEmpty(String),
    #[error("ensemble {0} is already registered")]
    DuplicateEnsemble(EnsembleId),
    #[error("ensemble {0} is not registered")]
    UnknownEnsemble(EnsembleId),
    #[error("ensemble {0} was measured and retired; it cannot be reused")]
    RetiredEnsemble(EnsembleId),
    #[error("ensemble {0} is not in the vacuum state")]
    EnsembleNotVacuum(EnsembleId),
    #[error("occupation vector has length {actual}, register has {expected} modes")]
    OccupationLength { expected: usize, actual: usize },
    #[error("occupation {occupation} exceeds cutoff {cutoff}")]
    OccupationOutOfRange { occupation: u8, cutoff: u8 },
    #[error("amplitude is not finite")]
    NonFiniteAmplitude,
    #[error("matrix is {rows}x{cols}, expected {expected}x{expected}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("matrix deviates from unitarity by {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("states live on different mode registers")]
    RegisterMismatch,
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("coefficients are not normalized: |alpha|^2 + |beta|^2 = {0}")]
    UnnormalizedCoefficients(f64),
    #[error("state has no support on the single-excitation subspace of ensembles {0} and {1}")]
    NoBellSupport(EnsembleId, EnsembleId),
    #[error("scripted Bell outcome {0} has zero probability")]
    ImpossibleOutcome(&'static str),
    #[error("scripted measurement ran out of outcomes")]
    ScriptExhausted,
    #[error("ensembles must be distinct")]
    DuplicateEnsembleArgument,
}
