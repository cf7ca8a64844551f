use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (valid: {min}..={max})")]
    OutOfRange { index: i64, min: i64, max: i64 },

    #[error("table of length {table_len} too short for lag {lag}: need at least {required} weights")]
    Precision {
        lag: usize,
        table_len: usize,
        required: usize,
    },

    #[error("resource budget exceeded: {what} needs {required_bytes} bytes, budget is {budget_bytes} bytes")]
    Resource {
        what: String,
        required_bytes: u64,
        budget_bytes: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Default memory budget for tables and visited-site storage (bytes).
pub const DEFAULT_MEMORY_BUDGET: u64 = 2 << 30;

pub(crate) fn check_budget(what: &str, required_bytes: u64) -> Result<()> {
    if required_bytes > DEFAULT_MEMORY_BUDGET {
        return Err(Error::Resource {
            what: what.to_string(),
            required_bytes,
            budget_bytes: DEFAULT_MEMORY_BUDGET,
        });
    }
    Ok(())
}
