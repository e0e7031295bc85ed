use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] adlens_core::Error),

    #[error(transparent)]
    Crawl(#[from] adlens_crawl::CrawlError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage and configuration problems, 2 for everything the data
    /// caused.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::Core(adlens_core::Error::Config(_))
            | CliError::Crawl(adlens_crawl::CrawlError::Config(_)) => 1,
            _ => 2,
        }
    }
}
