//! Exit codes: 0 success, 2 usage or validation error, 3 runtime failure.

use std::fmt;

use edgeframe_core::Error;

pub const USAGE: u8 = 2;
pub const RUNTIME: u8 = 3;

/// Marks an error as a usage or validation problem.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return USAGE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::ShapeMismatch(_)
                | Error::ImageTooSmall { .. }
                | Error::Malformed(_)
                | Error::Unsupported(_)
                | Error::NonFinite(_) => USAGE,
                _ => RUNTIME,
            };
        }
        if cause.is::<toml::de::Error>() {
            return USAGE;
        }
    }
    RUNTIME
}
