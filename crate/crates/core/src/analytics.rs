//! Engagement statistics over a labeled dataset, with CSV export for
//! plotting. Every distribution is emitted sorted so results do not depend
//! on the order posts were loaded in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::model::{Post, Profile, SponsorLabel, Tier};

/// Empirical CDF over the distinct values: `F(x) = #{v ≤ x} / N`.
pub fn cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite sample value {bad}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    Ok(out)
}

/// Median of an ascending-sorted slice; `None` when empty.
pub fn median_sorted(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub tier: Tier,
    pub label: SponsorLabel,
}

impl GroupKey {
    pub fn name(&self) -> String {
        format!("{}/{}", self.tier, self.label)
    }
}

fn author<'a>(dataset: &'a Dataset, username: &str, item: &str) -> Result<&'a Profile> {
    dataset
        .profile(username)
        .ok_or_else(|| Error::Data(format!("{item} has unknown author {username}")))
}

fn post_group<'a>(dataset: &'a Dataset, post: &Post) -> Result<(GroupKey, &'a Profile)> {
    if post.sponsor_label == SponsorLabel::Unlabeled {
        return Err(Error::Data(format!("post {} is unlabeled", post.id)));
    }
    let profile = author(dataset, &post.author, &format!("post {}", post.id))?;
    Ok((
        GroupKey {
            tier: profile.tier(),
            label: post.sponsor_label,
        },
        profile,
    ))
}

/// Per-post engagement of one (tier, label) group. Each distribution is
/// sorted ascending. Normalized values divide by the author's follower
/// count and leave out authors with no followers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementSummary {
    pub group: GroupKey,
    pub post_count: usize,
    pub comments: Vec<f64>,
    pub likes: Vec<f64>,
    pub comments_normalized: Vec<f64>,
    pub likes_normalized: Vec<f64>,
}

impl EngagementSummary {
    pub fn median_comments(&self) -> Option<f64> {
        median_sorted(&self.comments)
    }

    pub fn median_likes(&self) -> Option<f64> {
        median_sorted(&self.likes)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngagementDiagnostics {
    /// Authors left out of normalized statistics for having zero followers.
    pub zero_follower_authors: Vec<String>,
    pub posts_without_normalization: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngagementReport {
    pub groups: Vec<EngagementSummary>,
    pub diagnostics: EngagementDiagnostics,
}

impl EngagementReport {
    pub fn group(&self, tier: Tier, label: SponsorLabel) -> Option<&EngagementSummary> {
        self.groups.iter().find(|g| g.group == GroupKey { tier, label })
    }
}

pub fn engagement_summary(dataset: &Dataset) -> Result<EngagementReport> {
    #[derive(Default)]
    struct Acc {
        n: usize,
        c: Vec<f64>,
        l: Vec<f64>,
        cn: Vec<f64>,
        ln: Vec<f64>,
    }
    let mut groups: BTreeMap<GroupKey, Acc> = BTreeMap::new();
    let mut zero = BTreeSet::new();
    let mut skipped = 0;
    for post in &dataset.posts {
        let (key, profile) = post_group(dataset, post)?;
        let acc = groups.entry(key).or_default();
        let comments = post.comments.len() as f64;
        let likes = post.like_count as f64;
        acc.n += 1;
        acc.c.push(comments);
        acc.l.push(likes);
        if profile.follower_count == 0 {
            zero.insert(profile.username.clone());
            skipped += 1;
        } else {
            let followers = profile.follower_count as f64;
            acc.cn.push(comments / followers);
            acc.ln.push(likes / followers);
        }
    }
    Ok(EngagementReport {
        groups: groups
            .into_iter()
            .map(|(group, a)| EngagementSummary {
                group,
                post_count: a.n,
                comments: sorted(a.c),
                likes: sorted(a.l),
                comments_normalized: sorted(a.cn),
                likes_normalized: sorted(a.ln),
            })
            .collect(),
        diagnostics: EngagementDiagnostics {
            zero_follower_authors: zero.into_iter().collect(),
            posts_without_normalization: skipped,
        },
    })
}

/// Minutes between a post and each of its comments, per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyGroup {
    pub group: GroupKey,
    pub latencies_minutes: Vec<f64>,
    pub median_minutes: Option<f64>,
}

pub fn comment_latency_stats(dataset: &Dataset) -> Result<Vec<LatencyGroup>> {
    let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
    for post in &dataset.posts {
        let (key, _) = post_group(dataset, post)?;
        let acc = groups.entry(key).or_default();
        for c in &post.comments {
            if c.taken_at < post.taken_at {
                return Err(Error::Data(format!(
                    "post {}: comment by {} precedes the post",
                    post.id, c.commenter
                )));
            }
            acc.push((c.taken_at - post.taken_at) as f64 / 60.0);
        }
    }
    Ok(groups
        .into_iter()
        .map(|(group, v)| {
            let v = sorted(v);
            LatencyGroup {
                group,
                median_minutes: median_sorted(&v),
                latencies_minutes: v,
            }
        })
        .collect())
}

/// Comments per distinct commenter on one influencer's posts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatStats {
    pub influencer: String,
    pub tier: Tier,
    pub counts: BTreeMap<String, usize>,
    /// Share of distinct commenters with more than one comment; `None` when
    /// nobody commented.
    pub repeat_fraction: Option<f64>,
}

impl RepeatStats {
    pub fn repeaters(&self) -> usize {
        self.counts.values().filter(|&&c| c > 1).count()
    }
}

pub fn repeat_commenter_stats(dataset: &Dataset) -> Result<Vec<RepeatStats>> {
    let mut per: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
    for post in &dataset.posts {
        author(dataset, &post.author, &format!("post {}", post.id))?;
        let counts = per.entry(post.author.as_str()).or_default();
        for c in &post.comments {
            *counts.entry(c.commenter.clone()).or_default() += 1;
        }
    }
    Ok(per
        .into_iter()
        .map(|(name, counts)| {
            let repeaters = counts.values().filter(|&&c| c > 1).count();
            RepeatStats {
                influencer: name.to_owned(),
                tier: dataset.profiles[name].tier(),
                repeat_fraction: (!counts.is_empty())
                    .then(|| repeaters as f64 / counts.len() as f64),
                counts,
            }
        })
        .collect())
}

/// Repeat fraction over all commenters of all influencers in `tier`.
pub fn pooled_repeat_fraction(stats: &[RepeatStats], tier: Tier) -> Option<f64> {
    let (mut users, mut repeat) = (0usize, 0usize);
    for s in stats.iter().filter(|s| s.tier == tier) {
        users += s.counts.len();
        repeat += s.repeaters();
    }
    (users > 0).then(|| repeat as f64 / users as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountShare {
    pub username: String,
    pub tier: Tier,
    pub sponsored: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareStats {
    pub per_account: Vec<AccountShare>,
    pub sponsored: usize,
    pub total: usize,
    /// 0.0 when there are no items at all.
    pub global_fraction: f64,
    /// Accounts with no items of this kind.
    pub excluded_accounts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareReport {
    pub posts: ShareStats,
    pub stories: ShareStats,
}

fn share_stats<'a>(
    dataset: &Dataset,
    items: impl Iterator<Item = (&'a str, bool)>,
) -> Result<ShareStats> {
    let mut per: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (name, sponsored) in items {
        author(dataset, name, "item")?;
        let e = per.entry(name).or_default();
        e.0 += usize::from(sponsored);
        e.1 += 1;
    }
    let excluded_accounts = dataset
        .profiles
        .keys()
        .filter(|k| !per.contains_key(k.as_str()))
        .cloned()
        .collect();
    let sponsored: usize = per.values().map(|e| e.0).sum();
    let total: usize = per.values().map(|e| e.1).sum();
    Ok(ShareStats {
        per_account: per
            .into_iter()
            .map(|(name, (s, t))| AccountShare {
                username: name.to_owned(),
                tier: dataset.profiles[name].tier(),
                sponsored: s,
                total: t,
                fraction: s as f64 / t as f64,
            })
            .collect(),
        sponsored,
        total,
        global_fraction: if total == 0 { 0.0 } else { sponsored as f64 / total as f64 },
        excluded_accounts,
    })
}

/// Sponsored fraction per account and overall, for posts (by label) and
/// stories (by paid-partnership flag).
pub fn sponsored_share(dataset: &Dataset) -> Result<ShareReport> {
    if let Some(p) = dataset.posts.iter().find(|p| p.sponsor_label == SponsorLabel::Unlabeled) {
        return Err(Error::Data(format!("post {} is unlabeled", p.id)));
    }
    Ok(ShareReport {
        posts: share_stats(
            dataset,
            dataset.posts.iter().map(|p| (p.author.as_str(), p.sponsor_label.is_sponsored())),
        )?,
        stories: share_stats(
            dataset,
            dataset.stories.iter().map(|s| (s.author.as_str(), s.paid_partnership)),
        )?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCount {
    pub category: String,
    /// Distinct promoting accounts, all tiers.
    pub accounts: usize,
    pub per_tier: BTreeMap<Tier, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountProducts {
    pub username: String,
    pub tier: Tier,
    pub categories: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    /// Most promoted first, then by name.
    pub categories: Vec<CategoryCount>,
    pub per_account: Vec<AccountProducts>,
}

impl CategoryReport {
    /// Share of a tier's promoting accounts that promote exactly one
    /// category.
    pub fn single_category_fraction(&self, tier: Tier) -> Option<f64> {
        let of_tier: Vec<_> = self.per_account.iter().filter(|a| a.tier == tier).collect();
        (!of_tier.is_empty()).then(|| {
            of_tier.iter().filter(|a| a.categories == 1).count() as f64 / of_tier.len() as f64
        })
    }
}

/// Counts accounts per advertiser category from paid-partnership stories
/// that name a category.
pub fn product_category_counts(dataset: &Dataset) -> Result<CategoryReport> {
    let mut by_account: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for story in &dataset.stories {
        author(dataset, &story.author, &format!("story {}", story.id))?;
        if let (true, Some(category)) = (story.paid_partnership, &story.advertiser_category) {
            by_account.entry(story.author.as_str()).or_default().insert(category);
        }
    }
    let mut counts: BTreeMap<&str, CategoryCount> = BTreeMap::new();
    let mut per_account = Vec::with_capacity(by_account.len());
    for (name, cats) in &by_account {
        let tier = dataset.profiles[*name].tier();
        for cat in cats {
            let entry = counts.entry(cat).or_insert_with(|| CategoryCount {
                category: (*cat).to_owned(),
                accounts: 0,
                per_tier: BTreeMap::new(),
            });
            entry.accounts += 1;
            *entry.per_tier.entry(tier).or_default() += 1;
        }
        per_account.push(AccountProducts {
            username: (*name).to_owned(),
            tier,
            categories: cats.len(),
        });
    }
    let mut categories: Vec<CategoryCount> = counts.into_values().collect();
    categories.sort_by(|a, b| b.accounts.cmp(&a.accounts).then_with(|| a.category.cmp(&b.category)));
    Ok(CategoryReport {
        categories,
        per_account,
    })
}

pub const CDF_FOLLOWERS_CSV: &str = "cdf_followers.csv";
pub const COMMENTS_ABS_CSV: &str = "comments_abs.csv";
pub const COMMENTS_NORM_CSV: &str = "comments_norm.csv";
pub const LATENCY_CSV: &str = "latency.csv";
pub const REPEATERS_CSV: &str = "repeaters.csv";
pub const SHARE_CSV: &str = "share.csv";
pub const CATEGORIES_CSV: &str = "categories.csv";

/// Everything the CSV export needs, computed once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub engagement: EngagementReport,
    pub latency: Vec<LatencyGroup>,
    pub repeaters: Vec<RepeatStats>,
    pub share: ShareReport,
    pub categories: CategoryReport,
}

pub fn analyze(dataset: &Dataset) -> Result<AnalyticsReport> {
    Ok(AnalyticsReport {
        engagement: engagement_summary(dataset)?,
        latency: comment_latency_stats(dataset)?,
        repeaters: repeat_commenter_stats(dataset)?,
        share: sponsored_share(dataset)?,
        categories: product_category_counts(dataset)?,
    })
}

fn push_cdf(out: &mut String, prefix: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Ok(());
    }
    for (x, f) in cdf(values)? {
        let _ = writeln!(out, "{prefix},{x},{f}");
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

/// Writes the seven CSV tables into `dir`.
pub fn write_csv_reports(dataset: &Dataset, report: &AnalyticsReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut s = String::from("group,x,F\n");
    let followers: Vec<f64> = dataset.profiles.values().map(|p| p.follower_count as f64).collect();
    let followees: Vec<f64> = dataset.profiles.values().map(|p| p.followee_count as f64).collect();
    push_cdf(&mut s, "followers", &followers)?;
    push_cdf(&mut s, "followees", &followees)?;
    write_file(dir, CDF_FOLLOWERS_CSV, &s)?;

    let mut abs = String::from("group,metric,x,F\n");
    let mut norm = String::from("group,metric,x,F\n");
    for g in &report.engagement.groups {
        let name = g.group.name();
        push_cdf(&mut abs, &format!("{name},comments"), &g.comments)?;
        push_cdf(&mut abs, &format!("{name},likes"), &g.likes)?;
        push_cdf(&mut norm, &format!("{name},comments_per_follower"), &g.comments_normalized)?;
        push_cdf(&mut norm, &format!("{name},likes_per_follower"), &g.likes_normalized)?;
    }
    write_file(dir, COMMENTS_ABS_CSV, &abs)?;
    write_file(dir, COMMENTS_NORM_CSV, &norm)?;

    let mut lat = String::from("group,latency_minutes,F\n");
    for g in &report.latency {
        push_cdf(&mut lat, &g.group.name(), &g.latencies_minutes)?;
    }
    write_file(dir, LATENCY_CSV, &lat)?;

    let mut rep = String::from("influencer,tier,commenters,repeaters,repeat_fraction\n");
    for r in &report.repeaters {
        let frac = r.repeat_fraction.map(|f| f.to_string()).unwrap_or_default();
        let _ = writeln!(
            rep,
            "{},{},{},{},{}",
            r.influencer,
            r.tier,
            r.counts.len(),
            r.repeaters(),
            frac
        );
    }
    write_file(dir, REPEATERS_CSV, &rep)?;

    let mut share = String::from("kind,account,tier,sponsored,total,fraction\n");
    for (kind, stats) in [("posts", &report.share.posts), ("stories", &report.share.stories)] {
        for a in &stats.per_account {
            let _ = writeln!(
                share,
                "{kind},{},{},{},{},{}",
                a.username, a.tier, a.sponsored, a.total, a.fraction
            );
        }
        let _ = writeln!(
            share,
            "{kind},*,*,{},{},{}",
            stats.sponsored, stats.total, stats.global_fraction
        );
    }
    write_file(dir, SHARE_CSV, &share)?;

    let mut cats = String::from("category,tier,accounts\n");
    for c in &report.categories.categories {
        let _ = writeln!(cats, "{},*,{}", csv_field(&c.category), c.accounts);
        for (tier, n) in &c.per_tier {
            let _ = writeln!(cats, "{},{tier},{n}", csv_field(&c.category));
        }
    }
    write_file(dir, CATEGORIES_CSV, &cats)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CommentRef, Story};

    fn profile(name: &str, followers: u64) -> Profile {
        Profile {
            username: name.into(),
            follower_count: followers,
            followee_count: 10,
            media_count: 1,
            is_verified: false,
            biography: String::new(),
            external_url: None,
        }
    }

    fn post(id: &str, author: &str, comments: &[(&str, i64)], label: SponsorLabel) -> Post {
        let comments = comments
            .iter()
            .map(|(u, t)| CommentRef {
                commenter: (*u).into(),
                taken_at: *t,
            })
            .collect();
        let mut p = Post::new(id, author, 0, "x", 7, vec![], comments).unwrap();
        p.sponsor_label = label;
        p
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(
            cdf(&[1.0, 2.0, 2.0, 5.0]).unwrap(),
            vec![(1.0, 0.25), (2.0, 0.75), (5.0, 1.0)]
        );
        assert_eq!(cdf(&[7.0]).unwrap(), vec![(7.0, 1.0)]);
        assert!(matches!(cdf(&[]), Err(Error::EmptySample)));
        assert_eq!(Error::EmptySample.to_string(), "empty sample");
        assert!(cdf(&[f64::NAN]).is_err());
    }

    #[test]
    fn normalized_comments_and_zero_followers() {
        let comments: Vec<(String, i64)> = (0..50).map(|i| (format!("u{i}"), 10)).collect();
        let refs: Vec<(&str, i64)> = comments.iter().map(|(u, t)| (u.as_str(), *t)).collect();
        let ds = Dataset::new(
            vec![profile("a", 1000), profile("z", 0)],
            vec![
                post("p1", "a", &refs, SponsorLabel::NonSponsored),
                post("p2", "z", &[], SponsorLabel::NonSponsored),
            ],
            vec![],
        )
        .unwrap();
        let r = engagement_summary(&ds).unwrap();
        assert_eq!(r.groups.len(), 1);
        let g = r.group(Tier::Nano, SponsorLabel::NonSponsored).unwrap();
        assert_eq!(g.post_count, 2);
        assert_eq!(g.comments_normalized, vec![0.05]);
        assert_eq!(r.diagnostics.zero_follower_authors, vec!["z".to_owned()]);
    }

    #[test]
    fn latency_examples() {
        let ds = Dataset::new(
            vec![profile("a", 10)],
            vec![
                post("p1", "a", &[("b", 60), ("c", 120)], SponsorLabel::Sponsored),
                post("p2", "a", &[], SponsorLabel::NonSponsored),
            ],
            vec![],
        )
        .unwrap();
        let lat = comment_latency_stats(&ds).unwrap();
        assert_eq!(lat.len(), 2);
        assert_eq!(lat[0].group.label, SponsorLabel::Sponsored);
        assert_eq!(lat[0].latencies_minutes, vec![1.0, 2.0]);
        assert_eq!(lat[0].median_minutes, Some(1.5));
        assert_eq!(lat[1].median_minutes, None);
    }

    #[test]
    fn latency_ordering_violation_names_post() {
        let mut ds = Dataset::new(
            vec![profile("a", 10)],
            vec![post("p9", "a", &[("b", 5)], SponsorLabel::Sponsored)],
            vec![],
        )
        .unwrap();
        ds.posts[0].taken_at = 100;
        let err = comment_latency_stats(&ds).unwrap_err().to_string();
        assert!(err.contains("p9"), "{err}");
    }

    #[test]
    fn repeaters() {
        let ds = Dataset::new(
            vec![profile("a", 10), profile("b", 10)],
            vec![
                post("p1", "a", &[("x", 1), ("x", 2)], SponsorLabel::Sponsored),
                post("p2", "a", &[("y", 3)], SponsorLabel::NonSponsored),
                post("p3", "b", &[("x", 1), ("y", 1)], SponsorLabel::NonSponsored),
            ],
            vec![],
        )
        .unwrap();
        let s = repeat_commenter_stats(&ds).unwrap();
        assert_eq!(s[0].counts, BTreeMap::from([("x".into(), 2), ("y".into(), 1)]));
        assert_eq!(s[0].repeat_fraction, Some(0.5));
        assert_eq!(s[1].repeat_fraction, Some(0.0));
        assert_eq!(pooled_repeat_fraction(&s, Tier::Nano), Some(0.25));
    }

    #[test]
    fn share_and_exclusions() {
        let mut posts = Vec::new();
        for i in 0..10 {
            let label = if i < 2 { SponsorLabel::Sponsored } else { SponsorLabel::NonSponsored };
            posts.push(post(&format!("p{i}"), "a", &[], label));
        }
        let ds = Dataset::new(vec![profile("a", 10), profile("idle", 10)], posts, vec![]).unwrap();
        let r = sponsored_share(&ds).unwrap();
        assert_eq!(r.posts.per_account[0].fraction, 0.2);
        assert_eq!(r.posts.global_fraction, 0.2);
        assert_eq!(r.posts.excluded_accounts, vec!["idle".to_owned()]);
        assert_eq!(r.stories.global_fraction, 0.0);
    }

    #[test]
    fn categories() {
        let stories = (0..3)
            .map(|i| Story::new(format!("s{i}"), "a", 0, true, Some("Health/Beauty".into())).unwrap())
            .collect();
        let ds = Dataset::new(vec![profile("a", 10)], vec![], stories).unwrap();
        let r = product_category_counts(&ds).unwrap();
        assert_eq!(r.categories.len(), 1);
        assert_eq!(r.categories[0].accounts, 1);
        assert_eq!(r.per_account[0].categories, 1);

        let ds = Dataset::new(
            vec![profile("a", 10)],
            vec![],
            vec![Story::new("s", "a", 0, false, None).unwrap()],
        )
        .unwrap();
        assert_eq!(product_category_counts(&ds).unwrap(), CategoryReport::default());
    }

    #[test]
    fn csv_export_writes_all_tables() {
        let ds = Dataset::new(
            vec![profile("a", 10)],
            vec![post("p1", "a", &[("b", 60)], SponsorLabel::Sponsored)],
            vec![Story::new("s", "a", 0, true, Some("Food & Beverage".into())).unwrap()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_csv_reports(&ds, &analyze(&ds).unwrap(), dir.path()).unwrap();
        for name in [
            CDF_FOLLOWERS_CSV,
            COMMENTS_ABS_CSV,
            COMMENTS_NORM_CSV,
            LATENCY_CSV,
            REPEATERS_CSV,
            SHARE_CSV,
            CATEGORIES_CSV,
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let lat = fs::read_to_string(dir.path().join(LATENCY_CSV)).unwrap();
        assert_eq!(lat, "group,latency_minutes,F\nnano/sponsored,1,1\n");
    }
}
