use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("grid mismatch: {0}")]
    Shape(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("invalid multiplier order: {0}")]
    MultiplierOrder(String),
    #[error("unsupported approximation level {0} (only 0 and 1 are implemented)")]
    UnsupportedLevel(usize),
    #[error("transport solve diverged at t = {t:.3e}: H^rho norm {norm:.3e} exceeds {limit:.3e}")]
    Divergence { t: f64, norm: f64, limit: f64 },
    #[error("stability failure at t = {t:.3e}: relative L2 drift {drift:.3e} after {retries} step halvings")]
    Stability { t: f64, drift: f64, retries: usize },
    #[error("fixed point did not contract: {reason}; ratios {ratios:?}")]
    NonContraction { reason: String, ratios: Vec<f64> },
    #[error("time {t:.3e} outside stored range [{lo:.3e}, {hi:.3e}]")]
    Range { t: f64, lo: f64, hi: f64 },
    #[error("fit error: {0}")]
    Fit(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("snapshot format error: {0}")]
    Snapshot(String),
    #[error("missing artifacts: {0:?}")]
    MissingArtifacts(Vec<String>),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<LabError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    pub fn in_stage(self, stage: &'static str) -> Self {
        LabError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
