//! Per-post feature extraction: a token sequence for the text channel and
//! eleven numeric post/publisher features.

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::labeling::SponsorHashtagSet;
use crate::model::{Post, Profile};
use crate::textprep::{encode_sequence, normalize_text, Stopwords, Vocabulary, SEPARATOR};

pub const NUMERIC_WIDTH: usize = 11;

/// Column names of the numeric channel, in their frozen order.
pub const NUMERIC_FEATURES: [&str; NUMERIC_WIDTH] = [
    "like_count",
    "comment_count",
    "caption_length_chars",
    "hashtag_count",
    "mention_count",
    "tagged_user_count",
    "follower_count",
    "followee_count",
    "biography_length_chars",
    "is_verified",
    "external_url_exists",
];

pub type Numeric = [f64; NUMERIC_WIDTH];

#[derive(Debug, Clone)]
pub struct FeatureOptions {
    pub stopwords: Stopwords,
    /// When set, these hashtags (and the words they normalize to) are
    /// removed from every text field before tokens and counts are taken.
    pub scrub: Option<SponsorHashtagSet>,
    pub include_biography: bool,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            stopwords: Stopwords::english(),
            scrub: Some(SponsorHashtagSet::default()),
            include_biography: true,
        }
    }
}

impl FeatureOptions {
    pub fn without_scrub(mut self) -> Self {
        self.scrub = None;
        self
    }

    /// Every token a scrubbed text sequence must never contain.
    pub fn scrubbed_tokens(&self) -> Vec<String> {
        let Some(tags) = &self.scrub else {
            return Vec::new();
        };
        let mut out: Vec<String> = Vec::new();
        for tag in tags.iter() {
            let mut forms = vec![tag.to_owned()];
            forms.extend(normalize_text(tag, &Stopwords::empty()));
            for form in forms {
                if !out.contains(&form) {
                    out.push(form);
                }
            }
        }
        out
    }
}

/// Removes `#tag` occurrences whose tag is in `tags` (case-insensitive,
/// whole tag only).
pub fn scrub_caption(caption: &str, tags: &SponsorHashtagSet) -> String {
    let mut out = String::with_capacity(caption.len());
    let mut rest = caption;
    while let Some(pos) = rest.find('#') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        let end = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        let tag = &after[..end];
        if tag.is_empty() || !tags.contains(&tag.to_ascii_lowercase()) {
            out.push('#');
            out.push_str(tag);
        }
        rest = &after[end..];
    }
    out.push_str(rest);
    out
}

fn char_len(text: &str) -> f64 {
    text.nfc().count() as f64
}

fn check_author(post: &Post, profile: &Profile) -> Result<()> {
    if post.author != profile.username {
        return Err(Error::Data(format!(
            "post {} is by {}, not {}",
            post.id, post.author, profile.username
        )));
    }
    Ok(())
}

/// Pre-vocabulary features of one post. Vocabulary fitting and numeric
/// standardization happen later, on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawFeatures {
    pub tokens: Vec<String>,
    pub numeric: Numeric,
}

/// Tokens of caption, hashtags and (optionally) biography, joined by
/// [`SEPARATOR`]. Never looks at `post.sponsor_label`.
pub fn text_tokens(post: &Post, profile: &Profile, opts: &FeatureOptions) -> Result<Vec<String>> {
    check_author(post, profile)?;
    let banned = opts.scrubbed_tokens();
    let keep = |t: &String| !banned.contains(t);

    let caption = match &opts.scrub {
        Some(tags) => scrub_caption(&post.caption, tags),
        None => post.caption.clone(),
    };
    let mut tokens: Vec<String> = normalize_text(&caption, &opts.stopwords)
        .into_iter()
        .filter(keep)
        .collect();
    tokens.push(SEPARATOR.to_owned());
    tokens.extend(post.hashtags.iter().filter(|h| keep(h)).cloned());
    if opts.include_biography {
        tokens.push(SEPARATOR.to_owned());
        tokens.extend(
            normalize_text(&profile.biography, &opts.stopwords)
                .into_iter()
                .filter(keep),
        );
    }
    Ok(tokens)
}

pub fn numeric_features(post: &Post, profile: &Profile, opts: &FeatureOptions) -> Result<Numeric> {
    check_author(post, profile)?;
    let (caption_len, hashtag_count) = match &opts.scrub {
        Some(tags) => (
            char_len(&scrub_caption(&post.caption, tags)),
            post.hashtags.iter().filter(|h| !tags.contains(h)).count(),
        ),
        None => (char_len(&post.caption), post.hashtags.len()),
    };
    Ok([
        post.like_count as f64,
        post.comments.len() as f64,
        caption_len,
        hashtag_count as f64,
        post.mentions.len() as f64,
        post.tagged_users.len() as f64,
        profile.follower_count as f64,
        profile.followee_count as f64,
        char_len(&profile.biography),
        f64::from(u8::from(profile.is_verified)),
        f64::from(u8::from(profile.external_url.is_some())),
    ])
}

pub fn raw_features(post: &Post, profile: &Profile, opts: &FeatureOptions) -> Result<RawFeatures> {
    Ok(RawFeatures {
        tokens: text_tokens(post, profile, opts)?,
        numeric: numeric_features(post, profile, opts)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub text_sequence: Vec<u32>,
    pub numeric: Numeric,
}

impl FeatureVector {
    pub fn encode(raw: &RawFeatures, vocab: &Vocabulary, max_len: usize) -> Self {
        FeatureVector {
            text_sequence: encode_sequence(&raw.tokens, vocab, max_len),
            numeric: raw.numeric,
        }
    }
}

/// Encoded features with raw (unstandardized) numeric values.
pub fn extract_features(
    post: &Post,
    profile: &Profile,
    vocab: &Vocabulary,
    max_len: usize,
    opts: &FeatureOptions,
) -> Result<FeatureVector> {
    Ok(FeatureVector::encode(&raw_features(post, profile, opts)?, vocab, max_len))
}

/// Per-column z-score parameters fitted on a training split. Constant
/// columns keep a unit scale so they map to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Numeric,
    pub std: Numeric,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a Numeric>) -> Self {
        let rows: Vec<&Numeric> = rows.into_iter().collect();
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0; NUMERIC_WIDTH];
        for row in &rows {
            for (m, v) in mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = [0.0; NUMERIC_WIDTH];
        for row in &rows {
            for ((s, v), m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.map(|s| {
            let sd = (s / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        });
        Standardizer { mean, std }
    }

    pub fn identity() -> Self {
        Standardizer {
            mean: [0.0; NUMERIC_WIDTH],
            std: [1.0; NUMERIC_WIDTH],
        }
    }

    pub fn transform(&self, row: &Numeric) -> Numeric {
        let mut out = *row;
        for ((v, m), s) in out.iter_mut().zip(self.mean.iter()).zip(self.std.iter()) {
            *v = (*v - m) / s;
        }
        out
    }
}
