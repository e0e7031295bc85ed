//! Read-only HTTP replay of a [`Dataset`].
//!
//! Timelines and hashtag feeds are ordered newest first (`taken_at`
//! descending, then id ascending). A cursor is the base64 of
//! `"<taken_at>:<id>"` for the last item returned, so the server keeps no
//! paging state.

use std::collections::HashMap;
use std::net::{SocketAddr, TcpListener};
use std::sync::Arc;
use std::thread::JoinHandle;

use adlens_core::ingest::{Dataset, PostRecord, ProfileRecord, Record, StoryRecord};
use adlens_core::model::{Post, Timestamp};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use crate::error::{CrawlError, Result};

pub const DEFAULT_PAGE_LIMIT: usize = 50;
pub const MAX_PAGE_LIMIT: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub next_cursor: Option<String>,
}

pub fn encode_cursor(taken_at: Timestamp, id: &str) -> String {
    URL_SAFE_NO_PAD.encode(format!("{taken_at}:{id}"))
}

pub fn decode_cursor(cursor: &str) -> Option<(Timestamp, String)> {
    let raw = String::from_utf8(URL_SAFE_NO_PAD.decode(cursor).ok()?).ok()?;
    let (t, id) = raw.split_once(':')?;
    Some((t.parse().ok()?, id.to_owned()))
}

struct Snapshot {
    posts: Vec<PostRecord>,
    keys: Vec<(Timestamp, String)>,
    by_tag: HashMap<String, Vec<usize>>,
    by_user: HashMap<String, Vec<usize>>,
    profiles: HashMap<String, ProfileRecord>,
    stories: HashMap<String, Vec<StoryRecord>>,
}

impl Snapshot {
    fn new(dataset: &Dataset) -> Self {
        let mut order: Vec<&Post> = dataset.posts.iter().collect();
        order.sort_by(|a, b| b.taken_at.cmp(&a.taken_at).then_with(|| a.id.cmp(&b.id)));
        let mut by_tag: HashMap<String, Vec<usize>> = HashMap::new();
        let mut by_user: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, post) in order.iter().enumerate() {
            for tag in &post.hashtags {
                by_tag.entry(tag.clone()).or_default().push(i);
            }
            by_user.entry(post.author.clone()).or_default().push(i);
        }
        let mut stories: HashMap<String, Vec<StoryRecord>> = HashMap::new();
        let mut sorted_stories: Vec<_> = dataset.stories.iter().collect();
        sorted_stories.sort_by(|a, b| b.taken_at.cmp(&a.taken_at).then_with(|| a.id.cmp(&b.id)));
        for s in sorted_stories {
            stories.entry(s.author.clone()).or_default().push(s.to_wire());
        }
        Snapshot {
            keys: order.iter().map(|p| (p.taken_at, p.id.clone())).collect(),
            posts: order.iter().map(|p| p.to_wire()).collect(),
            by_tag,
            by_user,
            profiles: dataset
                .profiles
                .values()
                .map(|p| (p.username.clone(), p.to_wire()))
                .collect(),
            stories,
        }
    }

    /// One page of `feed` (indices into the global newest-first order).
    fn page(&self, feed: &[usize], q: &PageQuery) -> Result<Page<PostRecord>, ApiError> {
        let limit = q.limit.unwrap_or(DEFAULT_PAGE_LIMIT);
        if limit == 0 || limit > MAX_PAGE_LIMIT {
            return Err(ApiError::BadRequest(format!(
                "limit must be in [1, {MAX_PAGE_LIMIT}]"
            )));
        }
        let start = match &q.cursor {
            None => 0,
            Some(c) => {
                let (t, id) = decode_cursor(c)
                    .ok_or_else(|| ApiError::BadRequest("malformed cursor".into()))?;
                // first item strictly after (t, id) in newest-first order
                feed.partition_point(|&i| {
                    let (kt, kid) = &self.keys[i];
                    *kt > t || (*kt == t && kid.as_str() <= id.as_str())
                })
            }
        };
        let end = (start + limit).min(feed.len());
        let items: Vec<PostRecord> = feed[start..end].iter().map(|&i| self.posts[i].clone()).collect();
        let next_cursor = (end < feed.len()).then(|| {
            let (t, id) = &self.keys[feed[end - 1]];
            encode_cursor(*t, id)
        });
        Ok(Page { items, next_cursor })
    }
}

#[derive(Debug, Deserialize)]
struct PageQuery {
    cursor: Option<String>,
    limit: Option<usize>,
}

enum ApiError {
    NotFound(String),
    BadRequest(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, error) = match self {
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
        };
        (status, Json(ErrorBody { error })).into_response()
    }
}

type Shared = Arc<Snapshot>;

async fn hashtag_media(
    State(s): State<Shared>,
    Path(tag): Path<String>,
    Query(q): Query<PageQuery>,
) -> Result<Json<Page<PostRecord>>, ApiError> {
    let tag = tag.trim_start_matches('#').to_ascii_lowercase();
    let feed = s.by_tag.get(&tag).map(Vec::as_slice).unwrap_or(&[]);
    s.page(feed, &q).map(Json)
}

async fn user_profile(
    State(s): State<Shared>,
    Path(user): Path<String>,
) -> Result<Json<ProfileRecord>, ApiError> {
    s.profiles
        .get(&user)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("unknown user {user}")))
}

async fn user_media(
    State(s): State<Shared>,
    Path(user): Path<String>,
    Query(q): Query<PageQuery>,
) -> Result<Json<Page<PostRecord>>, ApiError> {
    if !s.profiles.contains_key(&user) {
        return Err(ApiError::NotFound(format!("unknown user {user}")));
    }
    let feed = s.by_user.get(&user).map(Vec::as_slice).unwrap_or(&[]);
    s.page(feed, &q).map(Json)
}

async fn user_stories(
    State(s): State<Shared>,
    Path(user): Path<String>,
) -> Result<Json<Vec<StoryRecord>>, ApiError> {
    if !s.profiles.contains_key(&user) {
        return Err(ApiError::NotFound(format!("unknown user {user}")));
    }
    Ok(Json(s.stories.get(&user).cloned().unwrap_or_default()))
}

pub fn router(dataset: &Dataset) -> Router {
    Router::new()
        .route("/hashtag/{tag}/media", get(hashtag_media))
        .route("/user/{user}", get(user_profile))
        .route("/user/{user}/media", get(user_media))
        .route("/user/{user}/stories", get(user_stories))
        .with_state(Arc::new(Snapshot::new(dataset)))
}

/// A server running on its own thread. Dropping the handle stops it.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server exits on its own (it only does so on error).
    pub fn wait(mut self) -> Result<()> {
        self.join()
    }

    pub fn shutdown(mut self) -> Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.join()
    }

    fn join(&mut self) -> Result<()> {
        match self.thread.take().map(JoinHandle::join) {
            Some(Ok(Err(e))) => Err(CrawlError::Server {
                addr: self.addr,
                message: e.to_string(),
            }),
            Some(Err(_)) => Err(CrawlError::Server {
                addr: self.addr,
                message: "server thread panicked".into(),
            }),
            _ => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        let _ = self.join();
    }
}

/// Binds `bind` (use port 0 for an ephemeral port) and serves `dataset`
/// until the handle is shut down or dropped.
pub fn serve_fixture_api(dataset: &Dataset, bind: &str) -> Result<ServerHandle> {
    let bind_err = |source| CrawlError::Bind {
        addr: bind.to_owned(),
        source,
    };
    let listener = TcpListener::bind(bind).map_err(bind_err)?;
    listener.set_nonblocking(true).map_err(bind_err)?;
    let addr = listener.local_addr().map_err(bind_err)?;
    let app = router(dataset);
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("fixture-api".into())
        .spawn(move || -> std::io::Result<()> {
            let rt = tokio::runtime::Builder::new_multi_thread()
                .worker_threads(2)
                .enable_io()
                .build()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(listener)?;
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        })
        .map_err(bind_err)?;
    log::info!("fixture API listening on http://{addr}");
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cursor_round_trip() {
        let c = encode_cursor(1_561_939_200, "p:01");
        assert_eq!(decode_cursor(&c), Some((1_561_939_200, "p:01".to_owned())));
        assert_eq!(decode_cursor("not base64!"), None);
    }
}
