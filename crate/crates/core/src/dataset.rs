//! Labeled example sets: construction from a labeled [`Dataset`], random
//! under-sampling, stratified train/test splits and k-fold partitions.
//!
//! All operations are pure functions of their input and seed.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{raw_features, FeatureOptions, RawFeatures};
use crate::ingest::Dataset;
use crate::model::{SponsorLabel, Tier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub post_id: String,
    pub author: String,
    pub tier: Tier,
    /// 1 = sponsored, 0 = non-sponsored.
    pub label: u8,
    #[serde(flatten)]
    pub features: RawFeatures,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub examples: Vec<Example>,
    /// Seed of the last stochastic step that produced this set.
    pub seed: Option<u64>,
}

impl LabeledSet {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let mut ids = HashSet::new();
        for ex in &examples {
            if ex.label > 1 {
                return Err(Error::invariant("label", format!("label must be 0 or 1, got {}", ex.label)));
            }
            if !ids.insert(ex.post_id.as_str()) {
                return Err(Error::DuplicateId {
                    kind: "example",
                    id: ex.post_id.clone(),
                });
            }
        }
        Ok(LabeledSet { examples, seed: None })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// (non-sponsored, sponsored) counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.examples.iter().filter(|e| e.label == 1).count();
        (self.examples.len() - pos, pos)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.examples.iter().map(|e| e.label).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.post_id.as_str()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
            seed: self.seed,
        }
    }

    /// Keeps the examples whose id is in `ids`, in this set's order.
    pub fn select_ids<S: AsRef<str>>(&self, ids: &[S]) -> LabeledSet {
        let wanted: HashSet<&str> = ids.iter().map(AsRef::as_ref).collect();
        LabeledSet {
            examples: self
                .examples
                .iter()
                .filter(|e| wanted.contains(e.post_id.as_str()))
                .cloned()
                .collect(),
            seed: self.seed,
        }
    }
}

/// One example per line, in set order.
pub fn write_examples(path: impl AsRef<Path>, set: &LabeledSet) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for ex in &set.examples {
        serde_json::to_writer(&mut out, ex)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_examples(path: impl AsRef<Path>) -> Result<LabeledSet> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut examples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: Example = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        examples.push(ex);
    }
    LabeledSet::new(examples)
}

/// Turns every labeled post into an [`Example`]. Unlabeled posts are an
/// error: run the labeler first.
pub fn build_labeled_set(dataset: &Dataset, opts: &FeatureOptions) -> Result<LabeledSet> {
    let mut examples = Vec::with_capacity(dataset.posts.len());
    for post in &dataset.posts {
        let label = match post.sponsor_label {
            SponsorLabel::Sponsored => 1,
            SponsorLabel::NonSponsored => 0,
            SponsorLabel::Unlabeled => {
                return Err(Error::Data(format!("post {} is unlabeled", post.id)));
            }
        };
        let profile = dataset
            .profile(&post.author)
            .ok_or_else(|| Error::Data(format!("no profile for {}", post.author)))?;
        examples.push(Example {
            post_id: post.id.clone(),
            author: post.author.clone(),
            tier: profile.tier(),
            label,
            features: raw_features(post, profile, opts)?,
        });
    }
    LabeledSet::new(examples)
}

/// Splits `total` into integer shares proportional to `weights` (largest
/// remainder; ties go to the earlier entry).
fn apportion(total: usize, weights: &[usize]) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut shares: Vec<usize> = weights.iter().map(|w| total * w / sum).collect();
    let mut left = total - shares.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (Reverse(total * weights[i] % sum), i));
    for i in order {
        if left == 0 {
            break;
        }
        if shares[i] < weights[i] {
            shares[i] += 1;
            left -= 1;
        }
    }
    shares
}

/// Random under-sampling of the non-sponsored class down to the size of
/// the sponsored class.
///
/// Removals are split across tiers in proportion to each tier's
/// non-sponsored count (remainders go to Nano first, then Micro, Macro,
/// Mega). Inside a tier, each removal takes a random example from the
/// author who currently has the most non-sponsored examples left, ties
/// broken by username. Retained examples keep their input order.
pub fn undersample_balance(set: &LabeledSet, seed: u64) -> Result<LabeledSet> {
    let (neg, pos) = set.class_counts();
    if pos == 0 {
        return Err(Error::Data("nothing to balance".into()));
    }
    if pos > neg {
        return Err(Error::Data(format!(
            "sponsored class ({pos}) is larger than non-sponsored ({neg}); expected sponsored minority"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut removed = vec![false; set.len()];

    // tier -> author -> indices of non-sponsored examples
    let mut by_tier: BTreeMap<Tier, BTreeMap<&str, Vec<usize>>> = BTreeMap::new();
    for (i, ex) in set.examples.iter().enumerate() {
        if ex.label == 0 {
            by_tier
                .entry(ex.tier)
                .or_default()
                .entry(ex.author.as_str())
                .or_default()
                .push(i);
        }
    }
    let tiers: Vec<Tier> = Tier::ALL.into_iter().filter(|t| by_tier.contains_key(t)).collect();
    let weights: Vec<usize> = tiers
        .iter()
        .map(|t| by_tier[t].values().map(Vec::len).sum())
        .collect();
    let quotas = apportion(neg - pos, &weights);

    for (tier, quota) in tiers.iter().zip(quotas) {
        let authors = by_tier.get_mut(tier).expect("tier present");
        for indices in authors.values_mut() {
            indices.shuffle(&mut rng);
        }
        let mut heap: BinaryHeap<(usize, Reverse<&str>)> = authors
            .iter()
            .map(|(name, idx)| (idx.len(), Reverse(*name)))
            .collect();
        for _ in 0..quota {
            let (count, Reverse(name)) = heap.pop().expect("quota never exceeds tier size");
            let idx = authors.get_mut(name).expect("author present").pop().expect("count > 0");
            removed[idx] = true;
            if count > 1 {
                heap.push((count - 1, Reverse(name)));
            }
        }
    }

    let examples = set
        .examples
        .iter()
        .zip(&removed)
        .filter(|(_, r)| !**r)
        .map(|(e, _)| e.clone())
        .collect();
    Ok(LabeledSet {
        examples,
        seed: Some(seed),
    })
}

fn class_indices(set: &LabeledSet) -> [Vec<usize>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (i, ex) in set.examples.iter().enumerate() {
        out[ex.label as usize].push(i);
    }
    out
}

/// Stratified split. Each class contributes `round(n_c · test_fraction)`
/// examples to the test side, clamped so both sides keep at least one of
/// each class. Both sides keep input order.
pub fn split_train_test(
    set: &LabeledSet,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledSet, LabeledSet)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let mut classes = class_indices(set);
    if classes.iter().any(|c| c.len() < 2) {
        return Err(Error::Data(
            "split needs at least 2 examples of each class".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; set.len()];
    for members in &mut classes {
        members.shuffle(&mut rng);
        let n = members.len();
        let take = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        for &i in &members[..take] {
            in_test[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (ex, t) in set.examples.iter().zip(in_test) {
        if t {
            test.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    Ok((
        LabeledSet {
            examples: train,
            seed: Some(seed),
        },
        LabeledSet {
            examples: test,
            seed: Some(seed),
        },
    ))
}

/// Stratified k-fold partition, returned as index lists into `set`.
///
/// Each class is shuffled, the classes are concatenated, and examples are
/// dealt round-robin, so fold sizes differ by at most one and each class is
/// spread evenly.
pub fn kfold_partition(set: &LabeledSet, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    if k > set.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the number of examples ({})",
            set.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut slot = 0;
    for mut members in class_indices(set) {
        members.shuffle(&mut rng);
        for i in members {
            folds[slot % k].push(i);
            slot += 1;
        }
    }
    Ok(folds)
}
