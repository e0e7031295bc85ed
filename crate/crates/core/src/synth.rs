//! Synthetic corpora with planted sponsorship signals and a ground-truth
//! manifest, so the whole pipeline can be exercised without real data.
//!
//! Generation is single-threaded and driven by one ChaCha stream, so equal
//! configs produce byte-identical output.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::seq::{index, IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::labeling::DEFAULT_SPONSOR_TAGS;
use crate::model::{CommentRef, Post, Profile, Story, Tier, Timestamp, ADVERTISER_CATEGORIES};

/// 2019-07-01T00:00:00Z
pub const WINDOW_START: Timestamp = 1_561_939_200;
/// 2019-09-01T00:00:00Z
pub const WINDOW_END: Timestamp = 1_567_296_000;

const NEUTRAL_CAPTIONS: &str = include_str!("../data/neutral_captions.txt");

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerTier<T> {
    pub nano: T,
    pub micro: T,
    #[serde(rename = "macro")]
    pub macro_: T,
    pub mega: T,
}

impl<T: Copy> PerTier<T> {
    pub const fn new(nano: T, micro: T, macro_: T, mega: T) -> Self {
        PerTier {
            nano,
            micro,
            macro_,
            mega,
        }
    }

    pub fn get(&self, tier: Tier) -> T {
        match tier {
            Tier::Nano => self.nano,
            Tier::Micro => self.micro,
            Tier::Macro => self.macro_,
            Tier::Mega => self.mega,
        }
    }
}

/// How often each textual signal appears in a sponsored caption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalRates {
    pub product_raw_text: f64,
    pub mention: f64,
    pub gratitude: f64,
    pub call_to_action: f64,
    pub product_hashtag: f64,
}

impl Default for SignalRates {
    fn default() -> Self {
        SignalRates {
            product_raw_text: 0.94,
            mention: 0.91,
            gratitude: 0.78,
            call_to_action: 0.53,
            product_hashtag: 0.97,
        }
    }
}

/// How often each signal appears in the biography of a promoting account.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BioRates {
    pub sponsor_info: f64,
    pub hashtag_or_mention: f64,
    pub call_to_action: f64,
    pub external_url: f64,
    pub video_link: f64,
}

impl Default for BioRates {
    fn default() -> Self {
        BioRates {
            sponsor_info: 0.63,
            hashtag_or_mention: 0.54,
            call_to_action: 0.34,
            external_url: 0.21,
            video_link: 0.11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngagementModel {
    /// Mean comments on a non-sponsored post.
    pub comment_rate: PerTier<f64>,
    pub sponsored_comment_multiplier: f64,
    /// Mean likes on a non-sponsored post, as a fraction of followers.
    pub like_rate: PerTier<f64>,
    pub sponsored_like_multiplier: f64,
    /// Share of an influencer's commenters who comment more than once.
    pub repeat_commenter_fraction: PerTier<f64>,
    /// Median comment latency on non-sponsored posts, in minutes.
    /// Latencies are exponential.
    pub latency_median_minutes: PerTier<f64>,
    pub sponsored_latency_multiplier: f64,
}

impl Default for EngagementModel {
    fn default() -> Self {
        EngagementModel {
            comment_rate: PerTier::new(6.0, 10.0, 20.0, 40.0),
            sponsored_comment_multiplier: 0.5,
            like_rate: PerTier::new(0.05, 0.03, 0.02, 0.012),
            sponsored_like_multiplier: 0.8,
            repeat_commenter_fraction: PerTier::new(0.30, 0.25, 0.20, 0.15),
            latency_median_minutes: PerTier::new(120.0, 180.0, 240.0, 300.0),
            sponsored_latency_multiplier: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoryModel {
    /// Unpaid stories per account, inclusive range.
    pub unpaid_per_account: [usize; 2],
    /// Probability that an account runs paid-partnership stories.
    pub promoter_rate: PerTier<f64>,
    /// Probability that a promoter promotes a single category.
    pub single_category_rate: PerTier<f64>,
    /// Upper bound on categories for multi-category promoters.
    pub max_categories: usize,
}

impl Default for StoryModel {
    fn default() -> Self {
        StoryModel {
            unpaid_per_account: [0, 6],
            promoter_rate: PerTier::new(0.0, 0.5, 0.6, 0.7),
            single_category_rate: PerTier::new(0.7, 0.7, 0.58, 0.5),
            max_categories: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub accounts: PerTier<usize>,
    /// Total posts, spread over accounts in proportion to a weight drawn
    /// from `posts_per_account`. When absent each account simply draws its
    /// post count from that range.
    pub post_count: Option<usize>,
    pub posts_per_account: [usize; 2],
    /// Share of posts that are truly sponsored, hidden ones included.
    pub sponsored_fraction: f64,
    /// Share of posts that are sponsored but carry no disclosure hashtag.
    pub hidden_fraction: f64,
    pub signals: SignalRates,
    pub bio: BioRates,
    pub engagement: EngagementModel,
    pub stories: StoryModel,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            accounts: PerTier::new(40, 30, 20, 10),
            post_count: Some(2_000),
            posts_per_account: [5, 40],
            sponsored_fraction: 0.2,
            hidden_fraction: 0.0,
            signals: SignalRates::default(),
            bio: BioRates::default(),
            engagement: EngagementModel::default(),
            stories: StoryModel::default(),
            seed: 0,
        }
    }
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be in [0, 1], got {v}")))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite and ≥ 0, got {v}")))
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        check_rate("sponsored_fraction", self.sponsored_fraction)?;
        check_rate("hidden_fraction", self.hidden_fraction)?;
        if self.hidden_fraction > self.sponsored_fraction {
            return Err(Error::Config(format!(
                "infeasible config: hidden_fraction {} exceeds sponsored_fraction {}",
                self.hidden_fraction, self.sponsored_fraction
            )));
        }
        let s = &self.signals;
        check_rate("signals.product_raw_text", s.product_raw_text)?;
        check_rate("signals.mention", s.mention)?;
        check_rate("signals.gratitude", s.gratitude)?;
        check_rate("signals.call_to_action", s.call_to_action)?;
        check_rate("signals.product_hashtag", s.product_hashtag)?;
        let b = &self.bio;
        check_rate("bio.sponsor_info", b.sponsor_info)?;
        check_rate("bio.hashtag_or_mention", b.hashtag_or_mention)?;
        check_rate("bio.call_to_action", b.call_to_action)?;
        check_rate("bio.external_url", b.external_url)?;
        check_rate("bio.video_link", b.video_link)?;
        let e = &self.engagement;
        for tier in Tier::ALL {
            check_positive("engagement.comment_rate", e.comment_rate.get(tier))?;
            check_positive("engagement.like_rate", e.like_rate.get(tier))?;
            check_rate(
                "engagement.repeat_commenter_fraction",
                e.repeat_commenter_fraction.get(tier),
            )?;
            if !(e.latency_median_minutes.get(tier) > 0.0) {
                return Err(Error::Config("engagement.latency_median_minutes must be > 0".into()));
            }
            check_rate("stories.promoter_rate", self.stories.promoter_rate.get(tier))?;
            check_rate(
                "stories.single_category_rate",
                self.stories.single_category_rate.get(tier),
            )?;
        }
        check_positive("engagement.sponsored_comment_multiplier", e.sponsored_comment_multiplier)?;
        check_positive("engagement.sponsored_like_multiplier", e.sponsored_like_multiplier)?;
        if !(e.sponsored_latency_multiplier > 0.0) {
            return Err(Error::Config("engagement.sponsored_latency_multiplier must be > 0".into()));
        }
        let [lo, hi] = self.posts_per_account;
        if lo > hi {
            return Err(Error::Config("posts_per_account range is reversed".into()));
        }
        let [lo, hi] = self.stories.unpaid_per_account;
        if lo > hi {
            return Err(Error::Config("stories.unpaid_per_account range is reversed".into()));
        }
        if self.stories.max_categories < 2 || self.stories.max_categories > ADVERTISER_CATEGORIES.len() {
            return Err(Error::Config(format!(
                "stories.max_categories must be in [2, {}]",
                ADVERTISER_CATEGORIES.len()
            )));
        }
        let accounts: usize = Tier::ALL.iter().map(|&t| self.accounts.get(t)).sum();
        if accounts == 0 && self.post_count.unwrap_or(0) > 0 {
            return Err(Error::Config("posts requested but no accounts configured".into()));
        }
        if self.post_count.is_some() && self.posts_per_account[1] == 0 && accounts > 0 {
            return Err(Error::Config("posts_per_account upper bound must be ≥ 1".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SynthConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("synth config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueStatus {
    Sponsored,
    Hidden,
    Organic,
}

impl TrueStatus {
    pub fn is_paid(self) -> bool {
        self != TrueStatus::Organic
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub post_id: String,
    pub true_status: TrueStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    /// Posts are unlabeled; run the labeler to recover declared ones.
    pub dataset: Dataset,
    /// One entry per post, in post-id order.
    pub manifest: Vec<ManifestEntry>,
}

impl SynthCorpus {
    pub fn ids_with(&self, status: TrueStatus) -> Vec<&str> {
        self.manifest
            .iter()
            .filter(|m| m.true_status == status)
            .map(|m| m.post_id.as_str())
            .collect()
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.dataset.write_dir(dir)?;
        write_manifest(dir.join(MANIFEST_FILE), &self.manifest)
    }
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for e in entries {
        serde_json::to_writer(&mut out, e)?;
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

struct Brand {
    handle: &'static str,
    display: &'static str,
    product: &'static str,
    tag: &'static str,
}

const BRANDS: [Brand; 24] = [
    Brand { handle: "glowlab", display: "GlowLab", product: "vitamin C serum", tag: "skincare" },
    Brand { handle: "urbanthread", display: "UrbanThread", product: "denim jacket", tag: "outfit" },
    Brand { handle: "fitfuel", display: "FitFuel", product: "protein bars", tag: "fitfood" },
    Brand { handle: "brewhaus", display: "BrewHaus", product: "cold brew", tag: "coffeetime" },
    Brand { handle: "sonicwave", display: "SonicWave", product: "wireless earbuds", tag: "headphones" },
    Brand { handle: "petpals", display: "PetPals", product: "dog treats", tag: "doglife" },
    Brand { handle: "lumiere.cosmetics", display: "Lumiere", product: "matte lipstick", tag: "makeup" },
    Brand { handle: "stridesport", display: "StrideSport", product: "running shoes", tag: "sneakers" },
    Brand { handle: "nomadgear", display: "NomadGear", product: "travel backpack", tag: "travelgear" },
    Brand { handle: "greenbowl", display: "GreenBowl", product: "meal kit", tag: "healthyeating" },
    Brand { handle: "timecraft", display: "TimeCraft", product: "minimalist watch", tag: "watch" },
    Brand { handle: "casaluxe", display: "CasaLuxe", product: "scented candle", tag: "homedecor" },
    Brand { handle: "pixelplay", display: "PixelPlay", product: "gaming mouse", tag: "gamingsetup" },
    Brand { handle: "purebloom", display: "PureBloom", product: "hair oil", tag: "haircare" },
    Brand { handle: "zenyoga", display: "ZenYoga", product: "yoga mat", tag: "yogalife" },
    Brand { handle: "snapcam", display: "SnapCam", product: "action camera", tag: "photography" },
    Brand { handle: "tinytots", display: "TinyTots", product: "baby carrier", tag: "momlife" },
    Brand { handle: "vitaboost", display: "VitaBoost", product: "daily vitamins", tag: "wellness" },
    Brand { handle: "silkroute", display: "SilkRoute", product: "silk scarf", tag: "fashion" },
    Brand { handle: "bakebox", display: "BakeBox", product: "cookie kit", tag: "baking" },
    Brand { handle: "aquapure", display: "AquaPure", product: "water bottle", tag: "hydration" },
    Brand { handle: "rideon", display: "RideOn", product: "electric scooter", tag: "citylife" },
    Brand { handle: "sunkiss", display: "SunKiss", product: "sunscreen", tag: "summerskin" },
    Brand { handle: "readmore", display: "ReadMore", product: "e-reader", tag: "booklover" },
];

/// Openers that name the product; `{b}` is the brand, `{p}` the product.
const RAW_LEADS: [&str; 8] = [
    "Obsessed with the new {b} {p}",
    "My {b} {p} just arrived",
    "Trying out the {b} {p} today",
    "Can't stop using my {b} {p}",
    "New favourite in my routine: {b} {p}",
    "Loving every bit of this {b} {p}",
    "Finally got my hands on the {b} {p}",
    "Day 3 with the {b} {p} and I'm hooked",
];

const PLAIN_LEADS: [&str; 6] = [
    "Obsessed with this one",
    "Look what just arrived",
    "New favourite in my routine",
    "Trying something new today",
    "Finally got my hands on it",
    "Loving every bit of this",
];

/// (with the brand handle, without it)
const GRATITUDE: [(&str, &str); 6] = [
    ("thank you {m} for the gift", "thank you so much for the gift"),
    ("many thanks to {m}", "many thanks to the whole team"),
    ("big thanks to {m} for sending this over", "big thanks for sending this over"),
    ("go and follow {m}", "go and follow them for more"),
    ("my top choice is {m}", "my top choice this season"),
    ("get yours from this page {m}", "get yours from this page"),
];

const MENTION_ONLY: [&str; 4] = ["featuring {m}", "styled with {m}", "wearing {m}", "all by {m}"];

const CALLS_TO_ACTION: [&str; 7] = [
    "link in bio",
    "use discount code {c} for 20% off",
    "download it now",
    "watch my story for more",
    "comment below to win one",
    "shop now via the link in bio",
    "swipe up in my stories",
];

const LIFESTYLE_TAGS: [&str; 20] = [
    "sunset", "travel", "foodie", "weekend", "mood", "love", "instagood", "photooftheday",
    "family", "adventure", "happy", "summer", "nature", "friends", "selfie", "throwback",
    "goodvibes", "cityscape", "beach", "blessed",
];

const EMOJI: [&str; 6] = ["✨", "💛", "🌿", "🔥", "☀️", "😍"];

const FRIENDS: [&str; 10] = [
    "anna.k", "mike_travels", "sofia.lens", "jon_doe", "lily.eats", "tom.b", "zara_m",
    "leo.runs", "nina_art", "sam.cooks",
];

const ADJECTIVES: [&str; 12] = [
    "sunny", "urban", "wild", "lazy", "happy", "cosy", "little", "golden", "daily", "salty",
    "green", "bold",
];
const NOUNS: [&str; 12] = [
    "fox", "wanderer", "kitchen", "style", "runner", "lens", "nomad", "baker", "studio", "coast",
    "diaries", "closet",
];

const BIO_BASES: [&str; 12] = [
    "Travel lover and coffee addict",
    "Mom of two, living my best life",
    "Fitness coach sharing daily workouts",
    "Food, fashion and everything in between",
    "Photographer based in Lisbon",
    "Just a girl who loves sunsets",
    "Gamer and tech enthusiast",
    "Plant mum and home decor fan",
    "Runner, reader, dreamer",
    "Baking my way through life",
    "Skincare nerd and beauty junkie",
    "Dog dad exploring the world",
];
const BIO_SPONSOR: [&str; 4] = [
    "For collaborations email me",
    "Business inquiries via DM",
    "PR and collabs: mail in contact",
    "Open for brand partnerships",
];
const BIO_CTA: [&str; 4] = [
    "Shop my looks below",
    "Follow for daily tips",
    "Subscribe to my channel",
    "Check out my latest favourites",
];

/// Category weights for paid stories: earlier categories are more popular.
fn category_weights() -> Vec<f64> {
    (0..ADVERTISER_CATEGORIES.len()).map(|i| 1.0 / (1.0 + i as f64 * 0.35)).collect()
}

fn follower_band(tier: Tier) -> (u64, u64) {
    match tier {
        Tier::Nano => (200, 10_000),
        Tier::Micro => (10_001, 99_999),
        Tier::Macro => (100_000, 999_999),
        Tier::Mega => (1_000_000, 20_000_000),
    }
}

fn verified_rate(tier: Tier) -> f64 {
    match tier {
        Tier::Mega => 0.82,
        Tier::Macro => 0.22,
        Tier::Micro => 0.04,
        Tier::Nano => 0.005,
    }
}

fn poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite rates.
    Poisson::new(lambda).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

fn sponsor_tag_variant(rng: &mut ChaCha8Rng, tag: &str) -> String {
    match rng.random_range(0..10) {
        0..=6 => tag.to_owned(),
        7 | 8 => {
            let mut c = tag.chars();
            let first = c.next().map(|f| f.to_ascii_uppercase()).unwrap_or_default();
            std::iter::once(first).chain(c).collect()
        }
        _ => tag.to_ascii_uppercase(),
    }
}

struct Account {
    username: String,
    tier: Tier,
    followers: u64,
}

struct PostDraft {
    account: usize,
    taken_at: Timestamp,
    status: TrueStatus,
}

fn sponsored_caption(
    rng: &mut ChaCha8Rng,
    sig: &SignalRates,
    declared: bool,
) -> (String, Vec<String>) {
    let brand = &BRANDS[rng.random_range(0..BRANDS.len())];
    let handle = format!("@{}", brand.handle);
    let mention = rng.random_bool(sig.mention);
    let mut parts: Vec<String> = Vec::new();

    let lead = if rng.random_bool(sig.product_raw_text) {
        RAW_LEADS
            .choose(rng)
            .unwrap()
            .replace("{b}", brand.display)
            .replace("{p}", brand.product)
    } else {
        PLAIN_LEADS.choose(rng).unwrap().to_string()
    };
    parts.push(lead);
    if rng.random_bool(sig.gratitude) {
        let (with, without) = GRATITUDE.choose(rng).unwrap();
        parts.push(if mention { with.replace("{m}", &handle) } else { (*without).to_owned() });
    } else if mention {
        parts.push(MENTION_ONLY.choose(rng).unwrap().replace("{m}", &handle));
    }
    if rng.random_bool(sig.call_to_action) {
        let code = format!("{}{}", brand.handle.replace('.', "").to_ascii_uppercase(), rng.random_range(10..40));
        parts.push(CALLS_TO_ACTION.choose(rng).unwrap().replace("{c}", &code));
    }
    let mut caption = parts.join(". ");
    if rng.random_bool(0.3) {
        caption.push(' ');
        caption.push_str(EMOJI.choose(rng).unwrap());
    }

    let mut tags: Vec<String> = Vec::new();
    if rng.random_bool(sig.product_hashtag) {
        let variants = [
            brand.tag.to_owned(),
            format!("best{}", brand.tag),
            format!("{}goals", brand.tag),
            format!("my{}", brand.tag),
            brand.handle.replace('.', ""),
        ];
        let n = rng.random_range(1..=3);
        for i in index::sample(rng, variants.len(), n) {
            tags.push(variants[i].clone());
        }
    }
    for _ in 0..rng.random_range(0..=2) {
        tags.push(LIFESTYLE_TAGS.choose(rng).unwrap().to_string());
    }
    let mut leading = None;
    if declared {
        let n = if rng.random_bool(0.7) { 1 } else { 2 };
        for i in index::sample(rng, DEFAULT_SPONSOR_TAGS.len(), n) {
            let tag = sponsor_tag_variant(rng, DEFAULT_SPONSOR_TAGS[i]);
            if leading.is_none() && rng.random_bool(0.3) {
                leading = Some(tag);
            } else {
                tags.push(tag);
            }
        }
    }
    tags.shuffle(rng);
    if let Some(tag) = leading {
        caption = format!("#{tag} {caption}");
    }
    if !tags.is_empty() {
        caption.push_str("\n");
        caption.push_str(&tags.iter().map(|t| format!("#{t}")).collect::<Vec<_>>().join(" "));
    }

    let tag_brand = if mention { 0.7 } else { 0.2 };
    let tagged = if rng.random_bool(tag_brand) {
        vec![brand.handle.to_owned()]
    } else {
        Vec::new()
    };
    (caption, tagged)
}

fn organic_caption(rng: &mut ChaCha8Rng, pool: &[&str]) -> (String, Vec<String>) {
    let mut caption = pool.choose(rng).unwrap().to_string();
    let mut tagged = Vec::new();
    if rng.random_bool(0.15) {
        let friend = FRIENDS.choose(rng).unwrap();
        caption.push_str(&format!(" with @{friend}"));
        if rng.random_bool(0.5) {
            tagged.push((*friend).to_owned());
        }
    }
    if rng.random_bool(0.3) {
        caption.push(' ');
        caption.push_str(EMOJI.choose(rng).unwrap());
    }
    let mut tags: Vec<String> = Vec::new();
    if rng.random_bool(0.7) {
        let n = rng.random_range(1..=4);
        for i in index::sample(rng, LIFESTYLE_TAGS.len(), n) {
            tags.push(LIFESTYLE_TAGS[i].to_owned());
        }
    }
    if rng.random_bool(0.1) {
        tags.push(BRANDS.choose(rng).unwrap().tag.to_owned());
    }
    if !tags.is_empty() {
        caption.push('\n');
        caption.push_str(&tags.iter().map(|t| format!("#{t}")).collect::<Vec<_>>().join(" "));
    }
    (caption, tagged)
}

fn biography(
    rng: &mut ChaCha8Rng,
    rates: &BioRates,
    username: &str,
    promoter: bool,
) -> (String, Option<String>) {
    let mut parts = vec![BIO_BASES.choose(rng).unwrap().to_string()];
    let mut url = None;
    if promoter {
        if rng.random_bool(rates.sponsor_info) {
            parts.push(BIO_SPONSOR.choose(rng).unwrap().to_string());
        }
        if rng.random_bool(rates.hashtag_or_mention) {
            let brand = BRANDS.choose(rng).unwrap();
            parts.push(if rng.random_bool(0.5) {
                format!("@{} ambassador", brand.handle)
            } else {
                format!("#{}partner", brand.handle.replace('.', ""))
            });
        }
        if rng.random_bool(rates.call_to_action) {
            parts.push(BIO_CTA.choose(rng).unwrap().to_string());
        }
        if rng.random_bool(rates.video_link) {
            parts.push(format!("youtube.com/c/{username}"));
        }
        if rng.random_bool(rates.external_url) {
            url = Some(format!("https://linktr.ee/{username}"));
        }
    } else if rng.random_bool(0.05) {
        url = Some(format!("https://{username}.blog"));
    }
    (parts.join(" | "), url)
}

/// Splits `total` over `weights` by largest remainder (ties to the earlier
/// entry).
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut shares: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(total * weights[i] % sum), i));
    let left = total - shares.iter().sum::<usize>();
    for &i in order.iter().take(left) {
        shares[i] += 1;
    }
    shares
}

pub fn generate_corpus(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pool: Vec<&str> = NEUTRAL_CAPTIONS.lines().filter(|l| !l.trim().is_empty()).collect();

    let mut accounts = Vec::new();
    for tier in Tier::ALL {
        let (lo, hi) = follower_band(tier);
        let (llo, lhi) = ((lo as f64).ln(), (hi as f64).ln());
        for _ in 0..config.accounts.get(tier) {
            let n = accounts.len();
            let followers = (rng.random_range(llo..=lhi).exp().round() as u64).clamp(lo, hi);
            accounts.push(Account {
                username: format!(
                    "{}{}{}",
                    ADJECTIVES.choose(&mut rng).unwrap(),
                    NOUNS.choose(&mut rng).unwrap(),
                    n + 1
                ),
                tier,
                followers,
            });
        }
    }

    let [lo, hi] = config.posts_per_account;
    let draws: Vec<usize> = accounts.iter().map(|_| rng.random_range(lo..=hi)).collect();
    let per_account = match config.post_count {
        Some(total) => apportion(total, &draws.iter().map(|&d| d.max(1)).collect::<Vec<_>>()),
        None => draws,
    };

    let mut drafts: Vec<PostDraft> = Vec::new();
    for (a, &n) in per_account.iter().enumerate() {
        let mut times: Vec<Timestamp> =
            (0..n).map(|_| rng.random_range(WINDOW_START..WINDOW_END)).collect();
        times.sort_unstable();
        drafts.extend(times.into_iter().map(|taken_at| PostDraft {
            account: a,
            taken_at,
            status: TrueStatus::Organic,
        }));
    }

    // Every account gets a declared post first (while the budget lasts) so
    // the hashtag crawl can discover it; the rest is uniform.
    let total = drafts.len();
    let sponsored = ((config.sponsored_fraction * total as f64).round() as usize).min(total);
    let hidden = ((config.hidden_fraction * total as f64).round() as usize).min(sponsored);
    let declared = sponsored - hidden;
    let mut first_of: Vec<Vec<usize>> = vec![Vec::new(); accounts.len()];
    for (i, d) in drafts.iter().enumerate() {
        first_of[d.account].push(i);
    }
    let mut with_posts: Vec<usize> = (0..accounts.len()).filter(|&a| !first_of[a].is_empty()).collect();
    with_posts.shuffle(&mut rng);
    let mut is_sponsored = vec![false; total];
    let guaranteed = declared.min(with_posts.len());
    for &a in &with_posts[..guaranteed] {
        let pick = *first_of[a].choose(&mut rng).unwrap();
        is_sponsored[pick] = true;
        drafts[pick].status = TrueStatus::Sponsored;
    }
    let rest: Vec<usize> = (0..total).filter(|&i| !is_sponsored[i]).collect();
    let extra: Vec<usize> = index::sample(&mut rng, rest.len(), sponsored - guaranteed)
        .into_iter()
        .map(|j| rest[j])
        .collect();
    let hidden_picks = index::sample(&mut rng, extra.len(), hidden);
    for &i in &extra {
        drafts[i].status = TrueStatus::Sponsored;
    }
    for j in hidden_picks {
        drafts[extra[j]].status = TrueStatus::Hidden;
    }

    let eng = &config.engagement;
    let mut posts = Vec::with_capacity(total);
    let mut manifest = Vec::with_capacity(total);
    let mut promoter = vec![false; accounts.len()];
    let mut comments: Vec<Vec<CommentRef>> = vec![Vec::new(); total];
    let width = total.max(1).to_string().len().max(6);
    let mut post_index = 0;
    for (a, account) in accounts.iter().enumerate() {
        let idx = &first_of[a];
        if idx.is_empty() {
            continue;
        }
        let tier = account.tier;
        let rate = |i: usize| {
            let base = eng.comment_rate.get(tier);
            if drafts[i].status.is_paid() {
                base * eng.sponsored_comment_multiplier
            } else {
                base
            }
        };
        let weights: Vec<f64> = idx.iter().map(|&i| rate(i)).collect();
        let expected: f64 = weights.iter().sum();
        let repeat = eng.repeat_commenter_fraction.get(tier);
        let per_user = (1.0 - repeat) + repeat * 3.0;
        let users = poisson(&mut rng, expected / per_user);
        if users > 0 && expected > 0.0 {
            let pick = WeightedIndex::new(&weights)
                .map_err(|e| Error::Config(format!("comment weights: {e}")))?;
            for u in 0..users {
                let name = format!("fan{}_{}", a + 1, u + 1);
                let count = if rng.random_bool(repeat) { rng.random_range(2..=4) } else { 1 };
                for _ in 0..count {
                    let i = idx[pick.sample(&mut rng)];
                    let mut median = eng.latency_median_minutes.get(tier);
                    if drafts[i].status.is_paid() {
                        median *= eng.sponsored_latency_multiplier;
                    }
                    let exp = Exp::new(std::f64::consts::LN_2 / median)
                        .map_err(|e| Error::Config(format!("latency: {e}")))?;
                    let minutes: f64 = exp.sample(&mut rng);
                    comments[i].push(CommentRef {
                        commenter: name.clone(),
                        taken_at: drafts[i].taken_at + (minutes * 60.0).round() as Timestamp,
                    });
                }
            }
        }

        for &i in idx {
            let d = &drafts[i];
            let (caption, tagged) = match d.status {
                TrueStatus::Organic => organic_caption(&mut rng, &pool),
                TrueStatus::Sponsored => sponsored_caption(&mut rng, &config.signals, true),
                TrueStatus::Hidden => sponsored_caption(&mut rng, &config.signals, false),
            };
            if d.status.is_paid() {
                promoter[a] = true;
            }
            let mut like_rate = eng.like_rate.get(tier);
            if d.status.is_paid() {
                like_rate *= eng.sponsored_like_multiplier;
            }
            let likes = poisson(&mut rng, like_rate * account.followers as f64);
            let mut cs = std::mem::take(&mut comments[i]);
            cs.sort_by(|x, y| x.taken_at.cmp(&y.taken_at).then_with(|| x.commenter.cmp(&y.commenter)));
            post_index += 1;
            let id = format!("p{post_index:0width$}");
            manifest.push(ManifestEntry {
                post_id: id.clone(),
                true_status: d.status,
            });
            posts.push(Post::new(id, &account.username, d.taken_at, caption, likes, tagged, cs)?);
        }
    }

    let st = &config.stories;
    let weights = category_weights();
    let mut stories = Vec::new();
    let mut story_index = 0;
    let mut story_id = |stories: &mut Vec<Story>, author: &str, paid: bool, cat: Option<&str>, rng: &mut ChaCha8Rng| -> Result<()> {
        story_index += 1;
        let taken_at = rng.random_range(WINDOW_START..WINDOW_END);
        stories.push(Story::new(
            format!("s{story_index:06}"),
            author,
            taken_at,
            paid,
            cat.map(str::to_owned),
        )?);
        Ok(())
    };
    for (a, account) in accounts.iter().enumerate() {
        let [lo, hi] = st.unpaid_per_account;
        for _ in 0..rng.random_range(lo..=hi) {
            story_id(&mut stories, &account.username, false, None, &mut rng)?;
        }
        if !rng.random_bool(st.promoter_rate.get(account.tier)) {
            continue;
        }
        promoter[a] = true;
        let k = if rng.random_bool(st.single_category_rate.get(account.tier)) {
            1
        } else {
            rng.random_range(2..=st.max_categories)
        };
        let chosen: Vec<usize> = index::sample_weighted(&mut rng, ADVERTISER_CATEGORIES.len(), |i| weights[i], k)
            .map_err(|e| Error::Config(format!("category weights: {e}")))?
            .into_iter()
            .collect();
        for &c in &chosen {
            for _ in 0..rng.random_range(1..=3) {
                story_id(&mut stories, &account.username, true, Some(ADVERTISER_CATEGORIES[c]), &mut rng)?;
            }
        }
    }

    let mut profiles = Vec::with_capacity(accounts.len());
    for (a, account) in accounts.iter().enumerate() {
        let (biography, external_url) =
            biography(&mut rng, &config.bio, &account.username, promoter[a]);
        profiles.push(Profile {
            username: account.username.clone(),
            follower_count: account.followers,
            followee_count: rng.random_range(80..=3_000),
            media_count: per_account[a] as u64 + rng.random_range(20..=1_500),
            is_verified: rng.random_bool(verified_rate(account.tier)),
            biography,
            external_url,
        });
    }

    let dataset = Dataset::new(profiles, posts, stories)?;
    Ok(SynthCorpus { dataset, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{label_post, SponsorHashtagSet};

    fn small() -> SynthConfig {
        SynthConfig {
            accounts: PerTier::new(6, 4, 3, 2),
            post_count: Some(300),
            hidden_fraction: 0.05,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn exact_status_counts() {
        let corpus = generate_corpus(&SynthConfig {
            post_count: Some(1_000),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(corpus.dataset.posts.len(), 1_000);
        let paid = corpus.manifest.iter().filter(|m| m.true_status.is_paid()).count();
        assert_eq!(paid, 200);
    }

    #[test]
    fn infeasible_hidden_fraction() {
        let cfg = SynthConfig {
            sponsored_fraction: 0.1,
            hidden_fraction: 0.2,
            ..Default::default()
        };
        let err = generate_corpus(&cfg).unwrap_err().to_string();
        assert!(err.contains("infeasible"), "{err}");
    }

    #[test]
    fn labeler_recovers_declared_posts() {
        let corpus = generate_corpus(&small()).unwrap();
        let tags = SponsorHashtagSet::default();
        for (post, m) in corpus.dataset.posts.iter().zip(&corpus.manifest) {
            assert_eq!(post.id, m.post_id);
            assert_eq!(
                label_post(post, &tags).is_sponsored(),
                m.true_status == TrueStatus::Sponsored,
                "{}: {:?}",
                post.caption,
                m.true_status
            );
        }
    }

    #[test]
    fn tiers_match_request() {
        let corpus = generate_corpus(&small()).unwrap();
        let mut per = [0usize; 4];
        for p in corpus.dataset.profiles.values() {
            per[p.tier() as usize] += 1;
        }
        assert_eq!(per, [6, 4, 3, 2]);
    }

    #[test]
    fn deterministic_output() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        generate_corpus(&small()).unwrap().write_dir(a.path()).unwrap();
        generate_corpus(&small()).unwrap().write_dir(b.path()).unwrap();
        for f in ["profiles.jsonl", "posts.jsonl", "stories.jsonl", MANIFEST_FILE] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let back = Dataset::load_dir(a.path()).unwrap();
        assert_eq!(back.posts.len(), 300);
        assert_eq!(read_manifest(a.path().join(MANIFEST_FILE)).unwrap().len(), 300);
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let cfg = SynthConfig::from_json(r#"{"post_count": 50, "seed": 9}"#).unwrap();
        assert_eq!(cfg.post_count, Some(50));
        assert_eq!(cfg.signals.gratitude, 0.78);
        assert!(SynthConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(SynthConfig::from_json(r#"{"sponsored_fraction": 1.5}"#).is_err());
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(10, &[1, 1, 1]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0, 5]), vec![0, 7]);
    }
}
