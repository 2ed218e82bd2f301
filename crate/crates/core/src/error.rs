use thiserror::Error;

/// Errors raised by the solvers, the expansion builders and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid piecewise function: {0}")]
    InvalidPiecewise(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("difference is not integrable on the whole line (end values differ)")]
    NonIntegrableDifference,

    #[error("flux range [{lo}, {hi}] is not on the grid 2^-{nu}")]
    RangeNotOnGrid { lo: f64, hi: f64, nu: u32 },
    #[error("value {0} is off the grid or outside the flux range")]
    ValueOffGrid(f64),
    #[error("front count {count} exceeded the cap {cap}")]
    FrontCountExplosion { count: usize, cap: usize },
    #[error("time {t} outside trajectory span [0, {t_final}]")]
    OutOfSpan { t: f64, t_final: f64 },

    #[error("state {0:?} is outside the admissible region")]
    InadmissibleState(Vec<f64>),
    #[error("no admissible samples could be drawn for model {0}")]
    NoAdmissibleSamples(String),
    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("wave strength {beta} exceeds the curve radius {radius}")]
    CurveRadiusExceeded { beta: f64, radius: f64 },
    #[error("Newton iteration did not converge ({context}); residual {residual:e}")]
    NewtonDivergence { context: &'static str, residual: f64 },
    #[error("jump size {jump} exceeds the small-amplitude radius {radius}")]
    OutsideSmallAmplitude { jump: f64, radius: f64 },
    #[error("self-similar coordinate {xi} lies outside the rarefaction fan [{lo}, {hi}]")]
    XiOutsideFan { xi: f64, lo: f64, hi: f64 },
    #[error("no rarefaction of family {0} in the fan")]
    NoSuchWave(usize),

    #[error("total variation {tv} exceeded the monitored bound {bound}")]
    TvBlowup { tv: f64, bound: f64 },
    #[error("initial total variation {tv} exceeds the small-data threshold {delta0}")]
    InitialTvTooLarge { tv: f64, delta0: f64 },
    #[error("fronts interact before h = {h} (first interaction at t = {t})")]
    InteractionWithinH { h: f64, t: f64 },

    #[error("requested time {t} beyond the evolved span {span}")]
    SpanExceeded { t: f64, span: f64 },
    #[error("correction field kind does not match the requested variant: {0}")]
    KindMismatch(String),
    #[error("profile supports are not separated at T0 = {t0} (need at least {needed})")]
    SupportsNotSeparated { t0: f64, needed: f64 },
    #[error("family supports never separate: {0}")]
    NoSeparation(String),

    #[error("window contains {0} profile jumps, expected exactly one")]
    MultipleJumpsInWindow(usize),
    #[error("slope fit needs positive values, got {0}")]
    NonPositiveValue(f64),
    #[error("not enough points for a slope fit ({0})")]
    TooFewPoints(usize),
    #[error("sweep exceeded its wall-clock budget of {0} s")]
    SweepBudgetExceeded(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
