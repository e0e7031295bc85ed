//! Blocking crawler for the fixture API: hashtag discovery, then per-user
//! timelines.

use std::collections::{BTreeMap, BTreeSet};
use std::thread;
use std::time::Duration;

use adlens_core::ingest::{Dataset, PostRecord, ProfileRecord, Record, StoryRecord};
use adlens_core::model::{Post, Profile, Story};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CrawlError, Result};
use crate::server::Page;

pub const MAX_SEED_HASHTAGS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientConfig {
    pub base_url: String,
    pub timeout: Duration,
    /// Total attempts per request, the first one included.
    pub attempts: u32,
    pub backoff: Duration,
}

impl ClientConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        ClientConfig {
            base_url: base_url.into().trim_end_matches('/').to_owned(),
            timeout: Duration::from_secs(10),
            attempts: 3,
            backoff: Duration::from_millis(50),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlConfig {
    pub seed_hashtags: Vec<String>,
    pub page_size: usize,
    /// Page budget per hashtag feed. Timelines are always read in full.
    pub max_pages: usize,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            seed_hashtags: adlens_core::labeling::DEFAULT_SPONSOR_TAGS
                .iter()
                .map(|t| (*t).to_owned())
                .collect(),
            page_size: 50,
            max_pages: 1_000,
        }
    }
}

impl CrawlConfig {
    /// Lowercased, `#`-stripped, deduplicated seed tags in first-seen order.
    pub fn normalized_tags(&self) -> Result<Vec<String>> {
        let mut seen = BTreeSet::new();
        let mut tags = Vec::new();
        for raw in &self.seed_hashtags {
            let tag = raw.trim().trim_start_matches('#').to_ascii_lowercase();
            if tag.is_empty() || !tag.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(CrawlError::Config(format!("invalid hashtag {raw:?}")));
            }
            if seen.insert(tag.clone()) {
                tags.push(tag);
            }
        }
        if tags.len() > MAX_SEED_HASHTAGS {
            return Err(CrawlError::Config(format!(
                "hashtag limit {MAX_SEED_HASHTAGS} exceeded"
            )));
        }
        if self.page_size == 0 || self.max_pages == 0 {
            return Err(CrawlError::Config("page_size and max_pages must be positive".into()));
        }
        Ok(tags)
    }
}

struct Client {
    agent: ureq::Agent,
    config: ClientConfig,
}

enum Fetched<T> {
    Found(T),
    NotFound,
}

impl Client {
    fn new(config: &ClientConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Client {
            agent,
            config: config.clone(),
        }
    }

    /// GET with bounded retries on transport errors and 5xx responses.
    fn get<T: DeserializeOwned>(
        &self,
        path: &str,
        query: &[(&str, String)],
        context: &str,
    ) -> Result<Fetched<T>> {
        let url = format!("{}{}", self.config.base_url, path);
        let attempts = self.config.attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            if attempt > 1 {
                thread::sleep(self.config.backoff);
            }
            let mut req = self.agent.get(&url);
            for (k, v) in query {
                req = req.query(k, v);
            }
            match req.call() {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status == 404 {
                        return Ok(Fetched::NotFound);
                    }
                    if (500..600).contains(&status) {
                        last = format!("HTTP {status}");
                        log::warn!("{context}: {last} (attempt {attempt}/{attempts})");
                        continue;
                    }
                    if !(200..300).contains(&status) {
                        return Err(CrawlError::Status {
                            context: context.to_owned(),
                            status,
                        });
                    }
                    return resp.body_mut().read_json::<T>().map(Fetched::Found).map_err(|e| {
                        CrawlError::Decode {
                            context: context.to_owned(),
                            message: e.to_string(),
                        }
                    });
                }
                Err(e) => {
                    last = e.to_string();
                    log::warn!("{context}: {last} (attempt {attempt}/{attempts})");
                }
            }
        }
        Err(CrawlError::Http {
            context: context.to_owned(),
            attempts,
            message: last,
        })
    }

    /// Follows `next_cursor` until exhausted or `max_pages` pages were read.
    /// `None` when the feed owner does not exist.
    fn paged(
        &self,
        path: &str,
        label: &str,
        page_size: usize,
        max_pages: usize,
    ) -> Result<Option<Vec<PostRecord>>> {
        let mut items = Vec::new();
        let mut cursor: Option<String> = None;
        for _ in 0..max_pages {
            let mut query = vec![("limit", page_size.to_string())];
            if let Some(c) = &cursor {
                query.push(("cursor", c.clone()));
            }
            let context = format!("{label} cursor={}", cursor.as_deref().unwrap_or("-"));
            let page: Page<PostRecord> = match self.get(path, &query, &context)? {
                Fetched::Found(p) => p,
                Fetched::NotFound => return Ok(None),
            };
            items.extend(page.items);
            match page.next_cursor {
                Some(c) => cursor = Some(c),
                None => break,
            }
        }
        Ok(Some(items))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HashtagCrawl {
    /// Deduplicated by id, sorted by id.
    pub posts: Vec<Post>,
    /// Distinct authors of those posts, sorted.
    pub usernames: Vec<String>,
}

pub fn crawl_hashtags(client: &ClientConfig, crawl: &CrawlConfig) -> Result<HashtagCrawl> {
    let tags = crawl.normalized_tags()?;
    let http = Client::new(client);
    let mut posts: BTreeMap<String, Post> = BTreeMap::new();
    for tag in &tags {
        let records = http
            .paged(
                &format!("/hashtag/{tag}/media"),
                &format!("hashtag #{tag}"),
                crawl.page_size,
                crawl.max_pages,
            )?
            .unwrap_or_default();
        log::debug!("#{tag}: {} posts", records.len());
        for r in records {
            if !posts.contains_key(&r.id) {
                let post = Post::from_wire(r)?;
                posts.insert(post.id.clone(), post);
            }
        }
    }
    let usernames: BTreeSet<String> = posts.values().map(|p| p.author.clone()).collect();
    Ok(HashtagCrawl {
        posts: posts.into_values().collect(),
        usernames: usernames.into_iter().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimelineCrawl {
    /// Canonical order (posts and stories sorted by id).
    pub dataset: Dataset,
    /// Requested users the server did not know.
    pub skipped: Vec<String>,
}

pub fn crawl_timelines(
    client: &ClientConfig,
    usernames: &[String],
    page_size: usize,
) -> Result<TimelineCrawl> {
    if page_size == 0 {
        return Err(CrawlError::Config("page_size must be positive".into()));
    }
    let http = Client::new(client);
    let mut profiles: Vec<Profile> = Vec::new();
    let mut posts: BTreeMap<String, Post> = BTreeMap::new();
    let mut stories: BTreeMap<String, Story> = BTreeMap::new();
    let mut skipped = Vec::new();
    let unique: BTreeSet<&String> = usernames.iter().collect();
    for user in unique {
        let profile: ProfileRecord =
            match http.get(&format!("/user/{user}"), &[], &format!("profile {user}"))? {
                Fetched::Found(p) => p,
                Fetched::NotFound => {
                    log::info!("skipping unknown user {user}");
                    skipped.push(user.clone());
                    continue;
                }
            };
        let Some(timeline) =
            http.paged(&format!("/user/{user}/media"), &format!("timeline {user}"), page_size, usize::MAX)?
        else {
            skipped.push(user.clone());
            continue;
        };
        let user_stories: Vec<StoryRecord> = match http.get(
            &format!("/user/{user}/stories"),
            &[],
            &format!("stories {user}"),
        )? {
            Fetched::Found(s) => s,
            Fetched::NotFound => {
                skipped.push(user.clone());
                continue;
            }
        };
        profiles.push(Profile::from_wire(profile)?);
        for r in timeline {
            let post = Post::from_wire(r)?;
            posts.insert(post.id.clone(), post);
        }
        for r in user_stories {
            let story = Story::from_wire(r)?;
            stories.insert(story.id.clone(), story);
        }
    }
    let dataset = Dataset::new(
        profiles,
        posts.into_values().collect(),
        stories.into_values().collect(),
    )?;
    Ok(TimelineCrawl { dataset, skipped })
}

/// Hashtag discovery followed by a timeline crawl of every discovered
/// author.
pub fn run_pipeline(crawl: &CrawlConfig, client: &ClientConfig) -> Result<TimelineCrawl> {
    let found = crawl_hashtags(client, crawl)?;
    log::info!(
        "hashtag phase: {} posts by {} accounts",
        found.posts.len(),
        found.usernames.len()
    );
    crawl_timelines(client, &found.usernames, crawl.page_size)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashtag_limit() {
        let mut crawl = CrawlConfig {
            seed_hashtags: (0..31).map(|i| format!("tag{i}")).collect(),
            ..Default::default()
        };
        let err = crawl.normalized_tags().unwrap_err().to_string();
        assert!(err.contains("hashtag limit 30 exceeded"), "{err}");
        crawl.seed_hashtags.truncate(30);
        assert_eq!(crawl.normalized_tags().unwrap().len(), 30);
    }

    #[test]
    fn tags_are_normalized_and_deduplicated() {
        let crawl = CrawlConfig {
            seed_hashtags: vec!["#Ad".into(), "ad".into(), "sponsored".into()],
            ..Default::default()
        };
        assert_eq!(crawl.normalized_tags().unwrap(), vec!["ad", "sponsored"]);
    }
}
