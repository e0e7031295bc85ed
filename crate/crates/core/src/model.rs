//! Domain types shared by every stage, and the caption parsers that derive
//! hashtags and mentions.
//!
//! Timestamps are Unix seconds (UTC). Values are validated on construction
//! and are treated as immutable afterwards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unix timestamp in seconds, UTC.
pub type Timestamp = i64;

/// Lifetime of a story before it is removed by the platform.
pub const STORY_LIFETIME_SECS: i64 = 24 * 60 * 60;

/// The controlled set of advertiser categories a paid-partnership story may
/// carry.
pub const ADVERTISER_CATEGORIES: [&str; 20] = [
    "Health/Beauty",
    "Product/Service",
    "Clothing (Brand)",
    "Food & Beverage",
    "Retail Company",
    "Shopping & Retail",
    "Personal Blog",
    "Entertainment",
    "App Page",
    "Jewelry/Watches",
    "Travel Company",
    "Fitness Trainer",
    "Restaurant",
    "Cosmetics Store",
    "Games/Toys",
    "Media/News Company",
    "Electronics",
    "Home Decor",
    "Magazine",
    "Sportswear Store",
];

pub fn is_advertiser_category(name: &str) -> bool {
    ADVERTISER_CATEGORIES.contains(&name)
}

fn validate_username(field: &'static str, name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::invariant(field, format!("{field} must be non-empty")));
    }
    if name.chars().any(char::is_whitespace) {
        return Err(Error::invariant(
            field,
            format!("{field} must not contain whitespace: {name:?}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    pub username: String,
    pub follower_count: u64,
    pub followee_count: u64,
    pub media_count: u64,
    pub is_verified: bool,
    pub biography: String,
    pub external_url: Option<String>,
}

impl Profile {
    pub fn validate(&self) -> Result<()> {
        validate_username("username", &self.username)
    }

    pub fn tier(&self) -> Tier {
        Tier::from_followers(self.follower_count)
    }
}

/// A single comment on a post. Only the commenter's identity and the time
/// are kept, never the comment text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommentRef {
    pub commenter: String,
    pub taken_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SponsorLabel {
    Sponsored,
    NonSponsored,
    Unlabeled,
}

impl SponsorLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SponsorLabel::Sponsored => "sponsored",
            SponsorLabel::NonSponsored => "non_sponsored",
            SponsorLabel::Unlabeled => "unlabeled",
        }
    }

    pub fn is_sponsored(self) -> bool {
        self == SponsorLabel::Sponsored
    }
}

impl fmt::Display for SponsorLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub author: String,
    pub taken_at: Timestamp,
    pub caption: String,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub tagged_users: Vec<String>,
    pub like_count: u64,
    pub comments: Vec<CommentRef>,
    pub sponsor_label: SponsorLabel,
}

impl Post {
    /// Builds a post, deriving hashtags and mentions from the caption. The
    /// label starts out as [`SponsorLabel::Unlabeled`].
    pub fn new(
        id: impl Into<String>,
        author: impl Into<String>,
        taken_at: Timestamp,
        caption: impl Into<String>,
        like_count: u64,
        tagged_users: Vec<String>,
        comments: Vec<CommentRef>,
    ) -> Result<Self> {
        let caption = caption.into();
        let post = Post {
            id: id.into(),
            author: author.into(),
            taken_at,
            hashtags: extract_hashtags(&caption),
            mentions: extract_mentions(&caption),
            caption,
            tagged_users,
            like_count,
            comments,
            sponsor_label: SponsorLabel::Unlabeled,
        };
        post.validate()?;
        Ok(post)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invariant("id", "id must be non-empty"));
        }
        validate_username("username", &self.author)?;
        for tagged in &self.tagged_users {
            validate_username("tagged_users", tagged)?;
        }
        for comment in &self.comments {
            validate_username("comments.username", &comment.commenter)?;
            if comment.taken_at < self.taken_at {
                return Err(Error::invariant(
                    "comments.taken_at",
                    format!(
                        "comment by {} at {} precedes post {} taken at {}",
                        comment.commenter, comment.taken_at, self.id, self.taken_at
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn comment_count(&self) -> usize {
        self.comments.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Story {
    pub id: String,
    pub author: String,
    pub taken_at: Timestamp,
    pub paid_partnership: bool,
    pub advertiser_category: Option<String>,
    pub expires_at: Timestamp,
}

impl Story {
    pub fn new(
        id: impl Into<String>,
        author: impl Into<String>,
        taken_at: Timestamp,
        paid_partnership: bool,
        advertiser_category: Option<String>,
    ) -> Result<Self> {
        let story = Story {
            id: id.into(),
            author: author.into(),
            taken_at,
            paid_partnership,
            advertiser_category,
            expires_at: taken_at + STORY_LIFETIME_SECS,
        };
        story.validate()?;
        Ok(story)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invariant("id", "id must be non-empty"));
        }
        validate_username("username", &self.author)?;
        if self.expires_at != self.taken_at + STORY_LIFETIME_SECS {
            return Err(Error::invariant(
                "expires_at",
                "expires_at must be exactly 24 hours after taken_at",
            ));
        }
        if let Some(category) = &self.advertiser_category {
            if !self.paid_partnership {
                return Err(Error::invariant(
                    "advertiser_category",
                    "advertiser_category requires paid_partnership",
                ));
            }
            if !is_advertiser_category(category) {
                return Err(Error::invariant(
                    "advertiser_category",
                    format!("unknown advertiser_category {category:?}"),
                ));
            }
        }
        Ok(())
    }
}

/// Influencer tier by follower count. Ordered `Nano < Micro < Macro < Mega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Nano,
    Micro,
    Macro,
    Mega,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::Nano, Tier::Micro, Tier::Macro, Tier::Mega];

    /// Mega: >= 1M. Macro: [100K, 1M). Micro: (10K, 100K). Nano: <= 10K.
    ///
    /// Exactly 10,000 followers falls into Nano so that the four bands cover
    /// every count.
    pub fn from_followers(followers: u64) -> Tier {
        match followers {
            f if f >= 1_000_000 => Tier::Mega,
            f if f >= 100_000 => Tier::Macro,
            f if f > 10_000 => Tier::Micro,
            _ => Tier::Nano,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Nano => "nano",
            Tier::Micro => "micro",
            Tier::Macro => "macro",
            Tier::Mega => "mega",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nano" => Ok(Tier::Nano),
            "micro" => Ok(Tier::Micro),
            "macro" => Ok(Tier::Macro),
            "mega" => Ok(Tier::Mega),
            other => Err(Error::Config(format!("unknown tier {other:?}"))),
        }
    }
}

fn is_hashtag_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_mention_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '.'
}

/// Collects `sigil` followed by the maximal run of `accept` characters,
/// lowercased and deduplicated in first-appearance order.
fn extract_tokens(text: &str, sigil: char, accept: fn(char) -> bool) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some((_, c)) = chars.next() {
        if c != sigil {
            continue;
        }
        let mut token = String::new();
        while let Some(&(_, next)) = chars.peek() {
            if !accept(next) {
                break;
            }
            token.push(next.to_ascii_lowercase());
            chars.next();
        }
        if !token.is_empty() && !out.contains(&token) {
            out.push(token);
        }
    }
    out
}

/// Hashtags in `caption`: `#` followed by one or more of `[A-Za-z0-9_]`,
/// lowercased with the `#` stripped.
///
/// ```
/// use adlens_core::model::extract_hashtags;
/// assert_eq!(extract_hashtags("Loving it! #Ad #fashion #ad"), ["ad", "fashion"]);
/// ```
pub fn extract_hashtags(caption: &str) -> Vec<String> {
    extract_tokens(caption, '#', is_hashtag_char)
}

/// Mentions in `caption`: `@` followed by one or more of `[A-Za-z0-9._]`.
/// A mid-word `@` (as in an e-mail address) still yields a mention.
pub fn extract_mentions(caption: &str) -> Vec<String> {
    extract_tokens(caption, '@', is_mention_char)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashtags_basic() {
        assert_eq!(
            extract_hashtags("Loving it! #Ad #fashion #ad"),
            vec!["ad", "fashion"]
        );
        assert!(extract_hashtags("").is_empty());
        assert_eq!(extract_hashtags("price #50%off #spon"), vec!["50", "spon"]);
        assert!(extract_hashtags("# #! ##").is_empty());
        assert_eq!(extract_hashtags("##ad"), vec!["ad"]);
    }

    #[test]
    fn mentions_basic() {
        assert_eq!(extract_mentions("thanks to @BrandCo for this"), vec!["brandco"]);
        assert_eq!(extract_mentions("email me at name@host.com"), vec!["host.com"]);
        assert_eq!(extract_mentions("@a @a @b"), vec!["a", "b"]);
    }

    #[test]
    fn tier_bands() {
        assert_eq!(Tier::from_followers(5_800_000), Tier::Mega);
        assert_eq!(Tier::from_followers(1_000_000), Tier::Mega);
        assert_eq!(Tier::from_followers(999_999), Tier::Macro);
        assert_eq!(Tier::from_followers(100_000), Tier::Macro);
        assert_eq!(Tier::from_followers(99_999), Tier::Micro);
        assert_eq!(Tier::from_followers(10_001), Tier::Micro);
        assert_eq!(Tier::from_followers(10_000), Tier::Nano);
        assert_eq!(Tier::from_followers(0), Tier::Nano);
        assert!(Tier::Mega > Tier::Macro && Tier::Macro > Tier::Micro && Tier::Micro > Tier::Nano);
    }

    #[test]
    fn story_expiry_and_category() {
        let s = Story::new("s1", "alice", 100, true, Some("Health/Beauty".into())).unwrap();
        assert_eq!(s.expires_at, 100 + 86_400);
        assert!(Story::new("s2", "alice", 100, false, Some("Health/Beauty".into())).is_err());
        assert!(Story::new("s3", "alice", 100, true, Some("Spaceships".into())).is_err());
        assert!(Story::new("s4", "alice", 100, true, None).is_ok());
    }

    #[test]
    fn post_rejects_early_comment() {
        let c = CommentRef {
            commenter: "bob".into(),
            taken_at: 99,
        };
        let err = Post::new("p1", "alice", 100, "", 0, vec![], vec![c]).unwrap_err();
        assert!(err.to_string().contains("p1"));
    }

    #[test]
    fn username_whitespace_rejected() {
        let p = Profile {
            username: "a b".into(),
            follower_count: 0,
            followee_count: 0,
            media_count: 0,
            is_verified: false,
            biography: String::new(),
            external_url: None,
        };
        assert!(p.validate().is_err());
    }
}
