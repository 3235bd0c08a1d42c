use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain mismatch: set support [{set_lo}, {set_hi}] is not inside model support [{model_lo}, {model_hi}]")]
    DomainMismatch { set_lo: f64, set_hi: f64, model_lo: f64, model_hi: f64 },

    #[error("invalid domain set: {0}")]
    InvalidDomain(String),

    #[error("target measure {target} is unreachable on the {branch} branch; attainable range is [{min}, {max}]")]
    Unreachable { target: f64, branch: &'static str, min: f64, max: f64 },

    #[error("degenerate domain: |P_D - N_D| = {0:e} (positive and negative measures of the domain must differ)")]
    DegenerateDomain(f64),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
