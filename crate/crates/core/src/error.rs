use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid annulus: {0}")]
    InvalidSpec(String),

    #[error("{what} = {value} lies outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("adaptive quadrature did not reach tolerance on [{lo}, {hi}]")]
    Quadrature { lo: f64, hi: f64 },

    #[error("nonlinearity carries no oscillation sequences")]
    MissingSequences,

    #[error("infeasible growth at k = {k}: {reason}")]
    InfeasibleGrowth { k: usize, reason: String },

    #[error("no plateau height with F(eta)/eta^p > {h} in [{lo}, {hi}] for k = {k}")]
    NoPlateau { k: usize, lo: f64, hi: f64, h: f64 },

    #[error("maximizer search for F on [0, {hi}] failed")]
    MaximizerSearch { hi: f64 },

    #[error("descent stopped after {iterations} iterations with weak residual {residual:e}")]
    IterationCap { iterations: usize, residual: f64 },

    #[error("empty slope range [{lo}, {hi}]")]
    EmptyRange { lo: f64, hi: f64 },

    #[error("every shot on the slope grid diverged")]
    AllDiverged,

    #[error("mesh: {0}")]
    Mesh(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure_range(what: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value, lo, hi })
    }
}
