//! Keyword detectors for the textual cues that accompany paid promotions,
//! and a report comparing their rates on sponsored and non-sponsored
//! posts.
//!
//! Post-level signals are measured per post; biography signals per
//! account, where an account "promotes" if it has at least one sponsored
//! post.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::labeling::SponsorHashtagSet;
use crate::model::{Post, Profile, SponsorLabel};

const GRATITUDE: [&str; 6] = ["thank", "thanks", "follow", "top choice", "get yours", "grateful"];
const CALL_TO_ACTION: [&str; 9] = [
    "link in bio",
    "discount code",
    "use code",
    "download",
    "watch my story",
    "comment below",
    "shop now",
    "swipe up",
    "% off",
];
const BIO_SPONSOR: [&str; 6] = ["collab", "business", "partnership", "pr ", "inquiries", "email"];
const BIO_CTA: [&str; 5] = ["shop", "follow", "subscribe", "check out", "click"];
const VIDEO_HOSTS: [&str; 4] = ["youtube.", "youtu.be", "vimeo.", "tiktok."];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Post,
    Biography,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    Mention,
    Gratitude,
    CallToAction,
    /// A hashtag that is not a disclosure tag.
    OtherHashtag,
    TaggedUser,
    BioSponsorInfo,
    BioHashtagOrMention,
    BioCallToAction,
    BioExternalUrl,
    BioVideoLink,
}

impl Signal {
    pub const POST: [Signal; 5] = [
        Signal::Mention,
        Signal::Gratitude,
        Signal::CallToAction,
        Signal::OtherHashtag,
        Signal::TaggedUser,
    ];
    pub const BIOGRAPHY: [Signal; 5] = [
        Signal::BioSponsorInfo,
        Signal::BioHashtagOrMention,
        Signal::BioCallToAction,
        Signal::BioExternalUrl,
        Signal::BioVideoLink,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Signal::Mention => "mention",
            Signal::Gratitude => "gratitude",
            Signal::CallToAction => "call_to_action",
            Signal::OtherHashtag => "other_hashtag",
            Signal::TaggedUser => "tagged_user",
            Signal::BioSponsorInfo => "bio_sponsor_info",
            Signal::BioHashtagOrMention => "bio_hashtag_or_mention",
            Signal::BioCallToAction => "bio_call_to_action",
            Signal::BioExternalUrl => "bio_external_url",
            Signal::BioVideoLink => "bio_video_link",
        }
    }

    pub fn scope(self) -> Scope {
        if Signal::POST.contains(&self) {
            Scope::Post
        } else {
            Scope::Biography
        }
    }
}

fn contains_any(text: &str, needles: &[&str]) -> bool {
    needles.iter().any(|n| text.contains(n))
}

/// Whether a post shows a post-scope signal. Biography signals are false.
pub fn post_has(signal: Signal, post: &Post, tags: &SponsorHashtagSet) -> bool {
    let caption = post.caption.to_lowercase();
    match signal {
        Signal::Mention => !post.mentions.is_empty(),
        Signal::Gratitude => contains_any(&caption, &GRATITUDE),
        Signal::CallToAction => contains_any(&caption, &CALL_TO_ACTION),
        Signal::OtherHashtag => post.hashtags.iter().any(|h| !tags.contains(h)),
        Signal::TaggedUser => !post.tagged_users.is_empty(),
        _ => false,
    }
}

/// Whether a profile shows a biography signal. Post signals are false.
pub fn profile_has(signal: Signal, profile: &Profile) -> bool {
    let bio = profile.biography.to_lowercase();
    match signal {
        Signal::BioSponsorInfo => contains_any(&bio, &BIO_SPONSOR),
        Signal::BioHashtagOrMention => bio.contains('#') || bio.contains('@'),
        Signal::BioCallToAction => contains_any(&bio, &BIO_CTA),
        Signal::BioExternalUrl => profile.external_url.is_some(),
        Signal::BioVideoLink => {
            contains_any(&bio, &VIDEO_HOSTS)
                || profile
                    .external_url
                    .as_deref()
                    .is_some_and(|u| contains_any(&u.to_lowercase(), &VIDEO_HOSTS))
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub signal: Signal,
    pub scope: Scope,
    /// Sponsored posts, or promoting accounts, showing the signal.
    pub sponsored_hits: usize,
    pub sponsored_total: usize,
    pub sponsored_rate: Option<f64>,
    pub other_hits: usize,
    pub other_total: usize,
    pub other_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalReport {
    pub rows: Vec<SignalRow>,
}

fn rate(hits: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Signal rates on a labeled dataset.
pub fn signal_report(dataset: &Dataset, tags: &SponsorHashtagSet) -> Result<SignalReport> {
    let mut promoters = BTreeSet::new();
    for post in &dataset.posts {
        match post.sponsor_label {
            SponsorLabel::Sponsored => {
                promoters.insert(post.author.as_str());
            }
            SponsorLabel::NonSponsored => {}
            SponsorLabel::Unlabeled => {
                return Err(Error::Data(format!("post {} is unlabeled", post.id)));
            }
        }
    }
    let mut rows = Vec::new();
    for signal in Signal::POST {
        let (mut sh, mut st, mut oh, mut ot) = (0, 0, 0, 0);
        for post in &dataset.posts {
            let hit = usize::from(post_has(signal, post, tags));
            if post.sponsor_label.is_sponsored() {
                sh += hit;
                st += 1;
            } else {
                oh += hit;
                ot += 1;
            }
        }
        rows.push(row(signal, sh, st, oh, ot));
    }
    for signal in Signal::BIOGRAPHY {
        let (mut sh, mut st, mut oh, mut ot) = (0, 0, 0, 0);
        for profile in dataset.profiles.values() {
            let hit = usize::from(profile_has(signal, profile));
            if promoters.contains(profile.username.as_str()) {
                sh += hit;
                st += 1;
            } else {
                oh += hit;
                ot += 1;
            }
        }
        rows.push(row(signal, sh, st, oh, ot));
    }
    Ok(SignalReport { rows })
}

fn row(signal: Signal, sh: usize, st: usize, oh: usize, ot: usize) -> SignalRow {
    SignalRow {
        signal,
        scope: signal.scope(),
        sponsored_hits: sh,
        sponsored_total: st,
        sponsored_rate: rate(sh, st),
        other_hits: oh,
        other_total: ot,
        other_rate: rate(oh, ot),
    }
}

impl SignalReport {
    pub fn row(&self, signal: Signal) -> Option<&SignalRow> {
        self.rows.iter().find(|r| r.signal == signal)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "signal,scope,sponsored_hits,sponsored_total,sponsored_rate,other_hits,other_total,other_rate\n",
        );
        let fmt = |r: Option<f64>| r.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let scope = match r.scope {
                Scope::Post => "post",
                Scope::Biography => "biography",
            };
            let _ = writeln!(
                s,
                "{},{scope},{},{},{},{},{},{}",
                r.signal.name(),
                r.sponsored_hits,
                r.sponsored_total,
                fmt(r.sponsored_rate),
                r.other_hits,
                r.other_total,
                fmt(r.other_rate)
            );
        }
        s
    }

    /// Aligned text table with rates as percentages.
    pub fn to_table(&self) -> String {
        let pct = |r: Option<f64>| r.map(|v| format!("{:.1}%", v * 100.0)).unwrap_or_else(|| "-".into());
        let mut s = format!("{:<24}{:>12}{:>12}\n", "Signal", "Sponsored", "Other");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<24}{:>12}{:>12}",
                r.signal.name(),
                pct(r.sponsored_rate),
                pct(r.other_rate)
            );
        }
        s
    }
}
