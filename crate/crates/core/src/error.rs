use thiserror::Error;

use crate::crossings::ConditionReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Which clause of the wall hypotheses failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallClause {
    Support,
    Continuity,
    Positivity,
    Plateau,
    Table,
}

impl std::fmt::Display for WallClause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            WallClause::Support => "support",
            WallClause::Continuity => "continuity",
            WallClause::Positivity => "positivity",
            WallClause::Plateau => "plateau",
            WallClause::Table => "table",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientClause {
    Periodicity,
    Margin,
    Grid,
}

impl std::fmt::Display for CoefficientClause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CoefficientClause::Periodicity => "periodicity",
            CoefficientClause::Margin => "margin",
            CoefficientClause::Grid => "grid",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("wall violation ({clause}): {detail}")]
    WallViolation { clause: WallClause, detail: String },

    #[error("coefficient violation in {field} ({clause}): max violation {magnitude:.3e}")]
    CoefficientViolation {
        field: String,
        clause: CoefficientClause,
        magnitude: f64,
    },

    #[error("alpha = {0} outside the open interval (1/3, 1/2)")]
    AlphaOutOfRange(f64),

    #[error("invalid epsilon schedule: {0}")]
    EpsilonSchedule(String),

    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("wall supports of adjacent periods overlap: 2*a3*eps = {width} >= a2/2 = {half_period}")]
    Overlap { width: f64, half_period: f64 },

    #[error("quadrature self-estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Resolution { estimate: f64, tolerance: f64 },

    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} (scale {scale:.3e})")]
    NotHermitian { asymmetry: f64, scale: f64 },

    #[error("eigensolver failed to converge")]
    ConvergenceFailure,

    #[error("invalid bracket: lo = {lo} must be below hi = {hi}")]
    Bracket { lo: f64, hi: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no admissible root: {0}")]
    NoAdmissibleRoot(String),

    #[error("slope condition violated: k3^2 = {k3_sq} <= k1^2 = {k1_sq}")]
    SlopeConditionViolated { k1_sq: f64, k3_sq: f64 },

    #[error("closed form and numeric extremum disagree for {quantity}: closed {closed}, numeric {numeric}")]
    ClosedFormMismatch {
        quantity: &'static str,
        closed: f64,
        numeric: f64,
    },

    #[error("gap conditions violated: {}", .0.failures().join(", "))]
    ConditionsViolated(Box<ConditionReport>),

    #[error("no gap predicted: beta_l = {beta_l} >= beta_r = {beta_r}")]
    NoGapPredicted { beta_l: f64, beta_r: f64 },

    #[error("band identification failed at tau = ({tau1}, {tau2}): {count} eigenvalues in window [{lo}, {hi}]")]
    BandIdentification {
        tau1: f64,
        tau2: f64,
        count: usize,
        lo: f64,
        hi: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("missing file: {0}")]
    MissingFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input or configuration problems, as opposed to failures of a numerical stage.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::WallViolation { .. }
                | Error::CoefficientViolation { .. }
                | Error::AlphaOutOfRange(_)
                | Error::EpsilonSchedule(_)
                | Error::Lattice(_)
                | Error::Overlap { .. }
                | Error::ConditionsViolated(_)
                | Error::NoGapPredicted { .. }
                | Error::SlopeConditionViolated { .. }
                | Error::NoAdmissibleRoot(_)
                | Error::InvalidArgument(_)
                | Error::ConfigParse { .. }
                | Error::MissingFile(_)
                | Error::Bracket { .. }
        )
    }
}
