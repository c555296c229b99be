use thiserror::Error;

/// Failures raised by the finite constructions.
///
/// Mathematical verdicts (a sheaf check failing, a non-effective gluing) are
/// reported through report values, never through this type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GlueError {
    /// Ill-typed input: mismatched endpoints, unknown labels, invalid data.
    #[error("structural error: {0}")]
    Structural(String),
    /// An enumeration would exceed the configured cap.
    #[error("resource error: {what} has size {size}, above the cap of {cap}")]
    Resource { what: String, size: u128, cap: u64 },
}

impl GlueError {
    pub fn structural(msg: impl Into<String>) -> Self {
        GlueError::Structural(msg.into())
    }
}

pub type Result<T, E = GlueError> = std::result::Result<T, E>;

/// Fails with a resource error when `size` exceeds `cap`.
pub(crate) fn check_cap(what: impl FnOnce() -> String, size: u128, cap: u64) -> Result<()> {
    if size > cap as u128 {
        Err(GlueError::Resource { what: what(), size, cap })
    } else {
        Ok(())
    }
}
