//! Collection pipeline over an HTTP API: a fixture server that replays a
//! dataset with cursor pagination, and a crawler that discovers
//! influencers through hashtags and then pulls their timelines.

pub mod client;
pub mod error;
pub mod server;

pub use client::{
    crawl_hashtags, crawl_timelines, run_pipeline, ClientConfig, CrawlConfig, HashtagCrawl,
    TimelineCrawl, MAX_SEED_HASHTAGS,
};
pub use error::{CrawlError, Result};
pub use server::{serve_fixture_api, Page, ServerHandle};
