//! JSONL persistence and the [`Dataset`] container.
//!
//! Three files make up a dataset directory: `profiles.jsonl`, `posts.jsonl`
//! and `stories.jsonl`. Hashtags and mentions are not stored; they are
//! derived from the caption on load. Writing then reading a file is a fixed
//! point.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CommentRef, Post, Profile, Story, Timestamp};

pub const PROFILES_FILE: &str = "profiles.jsonl";
pub const POSTS_FILE: &str = "posts.jsonl";
pub const STORIES_FILE: &str = "stories.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Profiles,
    Posts,
    Stories,
}

/// On-disk (and on-wire) form of a [`Profile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRecord {
    pub username: String,
    pub follower_count: i64,
    pub followee_count: i64,
    pub media_count: i64,
    pub is_verified: bool,
    #[serde(default)]
    pub biography: String,
    #[serde(default)]
    pub external_url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommentRecord {
    pub username: String,
    pub taken_at: Timestamp,
}

/// On-disk (and on-wire) form of a [`Post`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostRecord {
    pub id: String,
    pub username: String,
    pub taken_at: Timestamp,
    pub caption: String,
    pub like_count: i64,
    #[serde(default)]
    pub tagged_users: Vec<String>,
    #[serde(default)]
    pub comments: Vec<CommentRecord>,
}

/// On-disk (and on-wire) form of a [`Story`]. `expires_at` is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoryRecord {
    pub id: String,
    pub username: String,
    pub taken_at: Timestamp,
    pub paid_partnership: bool,
    #[serde(default)]
    pub advertiser_category: Option<String>,
}

fn non_negative(field: &'static str, value: i64) -> Result<u64> {
    u64::try_from(value).map_err(|_| Error::invariant(field, format!("{field} must be ≥ 0")))
}

/// Conversion between a wire record and its validated domain value.
pub trait Record: Sized {
    type Wire: Serialize + DeserializeOwned;
    const KIND: &'static str;

    fn from_wire(wire: Self::Wire) -> Result<Self>;
    fn to_wire(&self) -> Self::Wire;
    fn key(&self) -> &str;
}

impl Record for Profile {
    type Wire = ProfileRecord;
    const KIND: &'static str = "profile";

    fn from_wire(r: ProfileRecord) -> Result<Self> {
        let profile = Profile {
            username: r.username,
            follower_count: non_negative("follower_count", r.follower_count)?,
            followee_count: non_negative("followee_count", r.followee_count)?,
            media_count: non_negative("media_count", r.media_count)?,
            is_verified: r.is_verified,
            biography: r.biography,
            external_url: r.external_url,
        };
        profile.validate()?;
        Ok(profile)
    }

    fn to_wire(&self) -> ProfileRecord {
        ProfileRecord {
            username: self.username.clone(),
            follower_count: self.follower_count as i64,
            followee_count: self.followee_count as i64,
            media_count: self.media_count as i64,
            is_verified: self.is_verified,
            biography: self.biography.clone(),
            external_url: self.external_url.clone(),
        }
    }

    fn key(&self) -> &str {
        &self.username
    }
}

impl Record for Post {
    type Wire = PostRecord;
    const KIND: &'static str = "post";

    fn from_wire(r: PostRecord) -> Result<Self> {
        let like_count = non_negative("like_count", r.like_count)?;
        let comments = r
            .comments
            .into_iter()
            .map(|c| CommentRef {
                commenter: c.username,
                taken_at: c.taken_at,
            })
            .collect();
        Post::new(r.id, r.username, r.taken_at, r.caption, like_count, r.tagged_users, comments)
    }

    fn to_wire(&self) -> PostRecord {
        PostRecord {
            id: self.id.clone(),
            username: self.author.clone(),
            taken_at: self.taken_at,
            caption: self.caption.clone(),
            like_count: self.like_count as i64,
            tagged_users: self.tagged_users.clone(),
            comments: self
                .comments
                .iter()
                .map(|c| CommentRecord {
                    username: c.commenter.clone(),
                    taken_at: c.taken_at,
                })
                .collect(),
        }
    }

    fn key(&self) -> &str {
        &self.id
    }
}

impl Record for Story {
    type Wire = StoryRecord;
    const KIND: &'static str = "story";

    fn from_wire(r: StoryRecord) -> Result<Self> {
        Story::new(r.id, r.username, r.taken_at, r.paid_partnership, r.advertiser_category)
    }

    fn to_wire(&self) -> StoryRecord {
        StoryRecord {
            id: self.id.clone(),
            username: self.author.clone(),
            taken_at: self.taken_at,
            paid_partnership: self.paid_partnership,
            advertiser_category: self.advertiser_category.clone(),
        }
    }

    fn key(&self) -> &str {
        &self.id
    }
}

/// Parses JSONL text. Blank lines are skipped; line numbers in errors are
/// 1-based and count blank lines.
pub fn parse_jsonl<R: Record>(text: &str) -> Result<Vec<R>> {
    parse_lines(text.lines().map(|l| Ok(l.to_owned())))
}

fn parse_lines<R: Record>(lines: impl Iterator<Item = Result<String>>) -> Result<Vec<R>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let number = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let wire: R::Wire = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: number,
            message: e.to_string(),
        })?;
        let record = R::from_wire(wire).map_err(|e| e.at_line(number))?;
        if !seen.insert(record.key().to_owned()) {
            return Err(Error::DuplicateId {
                kind: R::KIND,
                id: record.key().to_owned(),
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_jsonl<R: Record>(path: impl AsRef<Path>) -> Result<Vec<R>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    parse_lines(
        reader
            .lines()
            .map(|l| l.map_err(|e| Error::io(path, e))),
    )
}

pub fn write_jsonl<'a, R: Record + 'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a R>,
) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, &record.to_wire())?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Profiles, posts and stories of a set of accounts.
///
/// Every post and story author has a profile; post ids and story ids are
/// unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub profiles: BTreeMap<String, Profile>,
    pub posts: Vec<Post>,
    pub stories: Vec<Story>,
}

impl Dataset {
    pub fn new(profiles: Vec<Profile>, posts: Vec<Post>, stories: Vec<Story>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for profile in profiles {
            let key = profile.username.clone();
            if map.insert(key.clone(), profile).is_some() {
                return Err(Error::DuplicateId {
                    kind: "profile",
                    id: key,
                });
            }
        }
        let dataset = Dataset {
            profiles: map,
            posts,
            stories,
        };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for post in &self.posts {
            if !ids.insert(post.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "post",
                    id: post.id.clone(),
                });
            }
            if !self.profiles.contains_key(&post.author) {
                return Err(Error::invariant(
                    "username",
                    format!("post {} has unknown author {}", post.id, post.author),
                ));
            }
        }
        ids.clear();
        for story in &self.stories {
            if !ids.insert(story.id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "story",
                    id: story.id.clone(),
                });
            }
            if !self.profiles.contains_key(&story.author) {
                return Err(Error::invariant(
                    "username",
                    format!("story {} has unknown author {}", story.id, story.author),
                ));
            }
        }
        Ok(())
    }

    /// Sorts posts and stories by id so equal datasets compare equal
    /// regardless of the order items were collected in.
    pub fn canonicalize(&mut self) {
        self.posts.sort_by(|a, b| a.id.cmp(&b.id));
        self.stories.sort_by(|a, b| a.id.cmp(&b.id));
    }

    pub fn profile(&self, username: &str) -> Option<&Profile> {
        self.profiles.get(username)
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty() && self.posts.is_empty() && self.stories.is_empty()
    }

    /// Loads a dataset directory. `stories.jsonl` may be absent.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let profiles = read_jsonl(dir.join(PROFILES_FILE))?;
        let posts = read_jsonl(dir.join(POSTS_FILE))?;
        let stories_path = dir.join(STORIES_FILE);
        let stories = if stories_path.exists() {
            read_jsonl(stories_path)?
        } else {
            Vec::new()
        };
        Dataset::new(profiles, posts, stories)
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(dir.join(PROFILES_FILE), self.profiles.values())?;
        write_jsonl(dir.join(POSTS_FILE), &self.posts)?;
        write_jsonl(dir.join(STORIES_FILE), &self.stories)
    }
}
