use std::path::PathBuf;

/// Harness failure, split by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: fracback_core::Error,
    },
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for bad input, 2 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core { source, .. } if source.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Attach context to core results.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T>;
}

impl<T> Context<T> for fracback_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|source| HarnessError::Core {
            context: what(),
            source,
        })
    }
}
