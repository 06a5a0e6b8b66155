use std::io;

use thiserror::Error;

/// Errors produced by the library. Each variant maps onto a CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Param(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("capacity error: {what} needs {required} bytes per worker, budget is {budget} bytes")]
    Capacity { what: String, required: u64, budget: u64 },

    #[error("index {index} out of range (defined up to {cap})")]
    OutOfRange { index: usize, cap: usize },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("fft exactness guard tripped: coefficient {index} off its rounded value by {deviation}")]
    ExactnessGuard { index: usize, deviation: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Process exit code: 2 parameter, 3 format, 4 capacity, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Param(_) | Error::OutOfRange { .. } => 2,
            Error::Format(_) => 3,
            Error::Capacity { .. } => 4,
            Error::Overflow(_) | Error::ExactnessGuard { .. } | Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
