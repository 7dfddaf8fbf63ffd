use thiserror::Error;

/// Errors raised by the numerical layers (kinematics, dynamics, control, integration).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no active constraints in airborne mode")]
    NoActiveConstraints,

    #[error("constraint degeneracy: KKT matrix singular (condition estimate {condition:.3e})")]
    ConstraintDegeneracy { condition: f64 },

    #[error("constraint Jacobian rank deficient (rank {rank}, expected {expected})")]
    ConstraintRankDeficient { rank: usize, expected: usize },

    #[error("rank deficiency requires damping")]
    RankDeficiencyRequiresDamping,

    #[error("unreachable foot target ({x:.4}, {y:.4}); nearest reachable point ({nearest_x:.4}, {nearest_y:.4})")]
    Unreachable {
        x: f64,
        y: f64,
        nearest_x: f64,
        nearest_y: f64,
    },

    #[error("mass matrix not positive definite")]
    MassMatrixIndefinite,

    #[error("integration diverged at t = {t:.6} s")]
    IntegrationDiverged { t: f64, last_good: Box<[f64]> },

    #[error("feet not on ground: {0}")]
    FeetNotOnGround(String),

    #[error("timestamps not strictly increasing at sample {index}")]
    NonMonotoneTime { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fit did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("csv: {0}")]
    Csv(String),

    #[error("io: {0}")]
    Io(String),

    #[error("unknown {kind} '{name}' (registered: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
