// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;

use crate::geometry::Frame;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("expected a cloud in the {expected:?} frame, got {actual:?}")]
    FrameMismatch { expected: Frame, actual: Frame },

    #[error("background model needs at least one scan")]
    NoScans,

    #[error("particle count must be positive")]
    NoParticles,

    #[error("surveillance volume has zero extent along at least one axis")]
    DegenerateVolume,

    #[error("unknown trajectory pattern `{0}`")]
    UnknownPattern(String),

    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },

    #[error("`{first}` and `{second}` conflict: {reason}")]
    Conflict {
        first: &'static str,
        second: &'static str,
        reason: String,
    },

    #[error("logs are empty")]
    EmptyLogs,

    #[error("malformed octree data: {0}")]
    Format(&'static str),
}

impl Error {
    pub(crate) fn invalid(key: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            key,
            reason: reason.into(),
        }
    }
}
