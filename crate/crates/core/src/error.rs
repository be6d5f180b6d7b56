use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input is empty")]
    EmptyInput,
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: negative precipitation")]
    NegativeValue { row: usize },
    #[error("row {row}: calendar gap before this month")]
    CalendarGap { row: usize },
    #[error("row {row}: duplicate month")]
    DuplicateMonth { row: usize },
    #[error("row {row}: month is earlier than the previous row")]
    OutOfOrder { row: usize },
    #[error("window {window} is longer than the series ({len} months)")]
    WindowTooLong { window: usize, len: usize },
    #[error("invalid window {0}: must be at least 1")]
    InvalidWindow(usize),
    #[error("series is degenerate (zero variance or too short)")]
    DegenerateSeries,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no wet windows to fit")]
    AllDry,
    #[error("wet values are all equal; Gamma fit is degenerate")]
    DegenerateWet,
    #[error("log-likelihood is not finite at t = {t}")]
    NonFiniteLikelihood { t: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid MCMC configuration: {0}")]
    InvalidConfig(String),
    #[error("at least two chains are required")]
    InsufficientChains,
    #[error("not enough retained draws: {0}")]
    InsufficientDraws(usize),
    #[error("posterior sample is empty")]
    EmptyPosterior,
    #[error("time index {index} out of range (valid 1..{len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("series share no common calendar months")]
    Alignment,
    #[error("value is not finite")]
    NonFinite,
    #[error("no drought events")]
    NoEvents,
}
