use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "surface tension is zero; the water-waves limit (sigma = 0) must be requested explicitly"
    )]
    ZeroSurfaceTension,

    #[error("degenerate geometry: layer depth factor drops to {min_depth:.3e} at node {node}")]
    DegenerateGeometry { min_depth: f64, node: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("iterative solver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("incompatible data: {0}")]
    IncompatibleData(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no sign change in bracket [{lo}, {hi}]: {detail}")]
    Bracket { lo: f64, hi: f64, detail: String },

    #[error("breakdown at t = {time}: {reason}")]
    Breakdown { time: f64, reason: String },

    #[error("dry state: layer height {height:.3e} at cell {cell}")]
    DryState { height: f64, cell: usize },

    #[error("hyperbolicity lost at t = {time}: indicator {indicator:.3e} at cell {cell}")]
    HyperbolicityLoss {
        time: f64,
        indicator: f64,
        cell: usize,
    },

    #[error("snapshot decode: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
