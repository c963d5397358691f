use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    /// A numerical routine failed to reach its convergence target.
    #[error("accuracy error: {0}")]
    Accuracy(String),
    /// A test function's scaled support does not fit inside the lattice region.
    #[error("support violation: {0}")]
    Support(String),
    #[error("enumeration refused: {count} spanning trees exceed the budget of {budget}")]
    Budget { count: String, budget: u64 },
    #[error("compute error: {0}")]
    Compute(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}
