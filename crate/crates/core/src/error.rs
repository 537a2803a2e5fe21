use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex id {0}")]
    UnknownVertex(u64),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("graph file field `{field}`: {msg}")]
    GraphFormat { field: String, msg: String },
    #[error("edge {0} has infinite length; spectral operations need a finite truncation")]
    InfiniteEdge(u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("problem size {0} exceeds dense-solver limit {1}")]
    SizeLimit(usize, usize),
    #[error("LAPACK routine {routine} failed with info={info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("degenerate triangle (area {0:.3e})")]
    DegenerateTriangle(f64),
    #[error("metric not positive definite at sample (x={x}, y={y}): 1+ekry = {val}")]
    MetricNotPd { x: f64, y: f64, val: f64 },
    #[error("edge regions overlap at eps={0}; reduce eps or check the embedding angles")]
    RegionOverlap(f64),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("graph file parse error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
