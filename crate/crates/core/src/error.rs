use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("undefined roots: the zero polynomial has no finite root set")]
    UndefinedRoots,
    #[error("polynomial has no roots (degree 0)")]
    NoRoots,
    #[error("eigenvalue iteration failed to converge for degree {0} companion matrix")]
    RootFinding(usize),
    #[error("transfer function denominator is the zero polynomial")]
    ZeroDenominator,
    #[error("degenerate loop: closed-loop denominator is the zero polynomial")]
    DegenerateLoop,
    #[error("inconsistent plant pair: d_G != -s^2 d_F (max coefficient mismatch {0:e})")]
    InconsistentPlantPair(f64),
    #[error("improper transfer function has no state-space realization with scalar D")]
    Improper,
    #[error("invalid time step: dt = {dt} must be positive and smaller than t_end = {t_end}")]
    InvalidTimeStep { dt: f64, t_end: f64 },
    #[error("trajectory diverged at t = {t}")]
    Diverged { t: f64 },
    #[error("algebraic loop is ill-posed (1 + D_C D_P = 0)")]
    IllPosedLoop,
    #[error("noise response undefined for unstable channel")]
    UnstableChannel,
    #[error("transfer function is not stable")]
    Unstable,
    #[error("pair (A, B) is not controllable (rank {rank} < {n})")]
    Uncontrollable { rank: usize, n: usize },
    #[error("desired pole set is not closed under complex conjugation")]
    NotConjugateClosed,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("coefficient vector has length {got}, expected {expected} (4n+2 with n = {n})")]
    WrongLength { expected: usize, got: usize, n: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
