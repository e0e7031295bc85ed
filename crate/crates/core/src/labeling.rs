//! Rule-based sponsorship labels, tier assignment, and the account sample
//! drawn for manual validation.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::{Post, Profile, SponsorLabel, Story, Tier};

/// Disclosure hashtags that mark a post as sponsored.
pub const DEFAULT_SPONSOR_TAGS: [&str; 7] = [
    "ad",
    "advert",
    "sponsored",
    "advertising",
    "giveaway",
    "spon",
    "sponsor",
];

/// Accounts above this follower count are always part of the validation
/// sample.
pub const ALWAYS_CHECKED_ABOVE: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct SponsorHashtagSet {
    tags: BTreeSet<String>,
}

impl SponsorHashtagSet {
    /// Tags are lowercased; a leading `#` is rejected rather than stripped.
    pub fn new<I, S>(tags: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for tag in tags {
            let tag = tag.as_ref().trim();
            if tag.is_empty() || tag.starts_with('#') {
                return Err(Error::Config(format!("invalid sponsor hashtag {tag:?}")));
            }
            set.insert(tag.to_lowercase());
        }
        if set.is_empty() {
            return Err(Error::Config("sponsor hashtag set must be non-empty".into()));
        }
        Ok(SponsorHashtagSet { tags: set })
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.tags.contains(tag)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.tags.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

impl Default for SponsorHashtagSet {
    fn default() -> Self {
        SponsorHashtagSet::new(DEFAULT_SPONSOR_TAGS).expect("default tags are valid")
    }
}

impl TryFrom<Vec<String>> for SponsorHashtagSet {
    type Error = Error;

    fn try_from(tags: Vec<String>) -> Result<Self> {
        SponsorHashtagSet::new(tags)
    }
}

impl From<SponsorHashtagSet> for Vec<String> {
    fn from(set: SponsorHashtagSet) -> Self {
        set.tags.into_iter().collect()
    }
}

/// Sponsored iff one of the post's hashtags is an exact (whole-tag) member
/// of `tags`. Hashtags are already lowercase, so casing in the caption does
/// not matter.
pub fn label_post(post: &Post, tags: &SponsorHashtagSet) -> SponsorLabel {
    if post.hashtags.iter().any(|h| tags.contains(h)) {
        SponsorLabel::Sponsored
    } else {
        SponsorLabel::NonSponsored
    }
}

/// Stories rely solely on the paid-partnership flag.
pub fn label_story(story: &Story) -> SponsorLabel {
    if story.paid_partnership {
        SponsorLabel::Sponsored
    } else {
        SponsorLabel::NonSponsored
    }
}

pub fn assign_tier(profile: &Profile) -> Tier {
    Tier::from_followers(profile.follower_count)
}

/// Sets `sponsor_label` on every post of the dataset.
pub fn label_dataset(dataset: &mut Dataset, tags: &SponsorHashtagSet) {
    for post in &mut dataset.posts {
        post.sponsor_label = label_post(post, tags);
    }
}

/// Draws the accounts to be checked by hand: every account above 10K
/// followers, plus `⌈fraction · M⌉` of the M remaining accounts chosen
/// uniformly without replacement. The result keeps input order.
pub fn draw_validation_sample<'a>(
    accounts: &'a [Profile],
    fraction: f64,
    seed: u64,
) -> Result<Vec<&'a Profile>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!(
            "validation fraction must be in (0, 1], got {fraction}"
        )));
    }
    let small: Vec<usize> = accounts
        .iter()
        .enumerate()
        .filter(|(_, p)| p.follower_count <= ALWAYS_CHECKED_ABOVE)
        .map(|(i, _)| i)
        .collect();
    let take = ((fraction * small.len() as f64).ceil() as usize).min(small.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; accounts.len()];
    for pick in index::sample(&mut rng, small.len(), take) {
        chosen[small[pick]] = true;
    }
    Ok(accounts
        .iter()
        .enumerate()
        .filter(|(i, p)| chosen[*i] || p.follower_count > ALWAYS_CHECKED_ABOVE)
        .map(|(_, p)| p)
        .collect())
}
