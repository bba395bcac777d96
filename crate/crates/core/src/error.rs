use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Liouvillian is numerically defective (eigenvector condition {0:.3e})")]
    DefectiveLiouvillian(f64),
    #[error("invalid cut m = {0}: out of range or splits a conjugate eigenvalue pair")]
    InvalidCut(usize),
    #[error("argument {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },
    #[error("eigenvalue {0} fits neither the initial nor the final branch")]
    SeparationInconsistency(usize),
    #[error("window ({t2}, {t1}) violates t' >= 2 t''")]
    InvalidWindow { t2: f64, t1: f64 },
    #[error("window ({t2}, {t1}) is not metastable")]
    NotMetastable { t2: f64, t1: f64 },
    #[error("trivial dynamics: {0}")]
    TrivialDynamics(String),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("{0}")]
    Parse(String),
}
