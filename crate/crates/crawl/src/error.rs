use std::net::SocketAddr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid crawl configuration: {0}")]
    Config(String),

    #[error("cannot bind fixture server to {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },

    #[error("fixture server at {addr} failed: {message}")]
    Server { addr: SocketAddr, message: String },

    /// Transport failure or 5xx that persisted through every retry.
    #[error("request for {context} failed after {attempts} attempts: {message}")]
    Http {
        context: String,
        attempts: u32,
        message: String,
    },

    #[error("request for {context} returned HTTP {status}")]
    Status { context: String, status: u16 },

    #[error("malformed response for {context}: {message}")]
    Decode { context: String, message: String },

    #[error(transparent)]
    Data(#[from] adlens_core::Error),
}

pub type Result<T, E = CrawlError> = std::result::Result<T, E>;
