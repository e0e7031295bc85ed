//! Classification metrics, k-fold cross-validation, and the audit of posts
//! that carry no disclosure but look sponsored.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifiers::Classifier;
use crate::dataset::{kfold_partition, Example, LabeledSet};
use crate::error::{Error, Result};
use crate::model::Tier;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    /// Counts predictions, treating the sponsored class (label 1) as
    /// positive.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, u8)>) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (predicted, label) in pairs {
            match (predicted, label == 1) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, true) => cm.fn_ += 1,
                (false, false) => cm.tn += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Metrics of the sponsored (positive) class. A metric whose denominator
/// is zero is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::Data("no evaluated examples".into()));
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Metrics {
        accuracy: (cm.tp + cm.tn) as f64 / n as f64,
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
}

pub fn evaluate<C: Classifier + ?Sized>(
    classifier: &C,
    set: &LabeledSet,
    threshold: f64,
) -> Result<Evaluation> {
    let mut pairs = Vec::with_capacity(set.len());
    for ex in &set.examples {
        pairs.push((classifier.predict_proba(&ex.features)? >= threshold, ex.label));
    }
    let confusion = ConfusionMatrix::from_pairs(pairs);
    Ok(Evaluation {
        threshold,
        confusion,
        metrics: compute_metrics(&confusion)?,
    })
}

/// Mean and sample standard deviation over the folds where a metric is
/// defined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub defined_in: usize,
}

impl Summary {
    fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return Summary {
                mean: None,
                std: None,
                defined_in: 0,
            };
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.len() > 1)
            .then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
        Summary {
            mean: Some(mean),
            std,
            defined_in: v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub held_out: Vec<String>,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub accuracy: Summary,
    pub precision: Summary,
    pub recall: Summary,
    pub f1: Summary,
}

/// Trains on k−1 folds and evaluates on the held-out fold, for each of the
/// folds produced by [`kfold_partition`] with the same seed. `train` must
/// fit everything it needs (vocabulary, scaling) from the set it is given.
pub fn cross_validate<F, C>(
    train: F,
    set: &LabeledSet,
    k: usize,
    seed: u64,
    threshold: f64,
) -> Result<CrossValidation>
where
    F: Fn(&LabeledSet) -> Result<C>,
    C: Classifier,
{
    let folds = kfold_partition(set, k, seed)?;
    let mut results = Vec::with_capacity(k);
    for (fold, held_out) in folds.iter().enumerate() {
        let train_idx: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != fold)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train_set = set.subset(&train_idx);
        let (neg, pos) = train_set.class_counts();
        if neg == 0 || pos == 0 {
            return Err(Error::Data(format!(
                "fold {fold}: training portion lacks one of the two classes"
            )));
        }
        let test_set = set.subset(held_out);
        let model = train(&train_set)?;
        results.push(FoldResult {
            fold,
            held_out: test_set.ids().into_iter().map(str::to_owned).collect(),
            evaluation: evaluate(&model, &test_set, threshold)?,
        });
    }
    let metric = |pick: fn(&Metrics) -> Option<f64>| {
        Summary::of(results.iter().map(|r| pick(&r.evaluation.metrics)))
    };
    Ok(CrossValidation {
        k,
        seed,
        accuracy: metric(|m| Some(m.accuracy)),
        precision: metric(|m| m.precision),
        recall: metric(|m| m.recall),
        f1: metric(|m| m.f1),
        folds: results,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierAudit {
    pub tier: Tier,
    pub total: usize,
    pub flagged: usize,
    pub flagged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenAuditReport {
    pub threshold: f64,
    pub tiers: Vec<TierAudit>,
    pub total: usize,
    pub flagged: usize,
    pub flagged_fraction: f64,
    pub flagged_ids: Vec<String>,
}

impl HiddenAuditReport {
    /// Fraction of `planted` ids that were flagged; `None` when nothing was
    /// planted.
    pub fn recall_against<S: AsRef<str>>(&self, planted: &[S]) -> Option<f64> {
        if planted.is_empty() {
            return None;
        }
        let flagged: HashSet<&str> = self.flagged_ids.iter().map(String::as_str).collect();
        let hits = planted.iter().filter(|p| flagged.contains(p.as_ref())).count();
        Some(hits as f64 / planted.len() as f64)
    }
}

/// Scores posts that the rule-based labeler marked non-sponsored and flags
/// every one whose probability reaches `threshold`.
pub fn detect_hidden<C: Classifier + ?Sized>(
    classifier: &C,
    undeclared: &[Example],
    threshold: f64,
) -> Result<HiddenAuditReport> {
    let mut per_tier: BTreeMap<Tier, (usize, usize)> = BTreeMap::new();
    let mut flagged_ids = Vec::new();
    for ex in undeclared {
        let entry = per_tier.entry(ex.tier).or_default();
        entry.0 += 1;
        if classifier.predict_proba(&ex.features)? >= threshold {
            entry.1 += 1;
            flagged_ids.push(ex.post_id.clone());
        }
    }
    let tiers: Vec<TierAudit> = per_tier
        .into_iter()
        .map(|(tier, (total, flagged))| TierAudit {
            tier,
            total,
            flagged,
            flagged_fraction: flagged as f64 / total as f64,
        })
        .collect();
    let total = undeclared.len();
    let flagged = flagged_ids.len();
    Ok(HiddenAuditReport {
        threshold,
        tiers,
        total,
        flagged,
        flagged_fraction: if total == 0 { 0.0 } else { flagged as f64 / total as f64 },
        flagged_ids,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.2}"))
}

/// Aligned text table with one row per classifier: Accuracy, Precision,
/// Recall, F1.
pub fn format_metrics_table(rows: &[(&str, Metrics)]) -> String {
    let width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(0).max("Classifier".len());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>8}  {:>9}  {:>6}  {:>4}",
        "Classifier", "Accuracy", "Precision", "Recall", "F1"
    );
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>8}  {:>9}  {:>6}  {:>4}",
            name,
            cell(Some(m.accuracy)),
            cell(m.precision),
            cell(m.recall),
            cell(m.f1)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_hand_example() {
        let m = compute_metrics(&ConfusionMatrix { tp: 3, fp: 1, fn_: 2, tn: 4 }).unwrap();
        assert!((m.accuracy - 0.7).abs() < 1e-12);
        assert!((m.precision.unwrap() - 0.75).abs() < 1e-12);
        assert!((m.recall.unwrap() - 0.6).abs() < 1e-12);
        assert!((m.f1.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_perfect_and_degenerate() {
        let m = compute_metrics(&ConfusionMatrix { tp: 5, fp: 0, fn_: 0, tn: 5 }).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, Some(1.0), Some(1.0), Some(1.0)));

        let m = compute_metrics(&ConfusionMatrix { tp: 0, fp: 0, fn_: 3, tn: 2 }).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.recall, Some(0.0));
        assert_eq!(m.f1, None);
        assert!((m.accuracy - 0.4).abs() < 1e-12);

        assert!(compute_metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn confusion_json_uses_fn_key() {
        let json = serde_json::to_string(&ConfusionMatrix { tp: 1, fp: 2, fn_: 3, tn: 4 }).unwrap();
        assert_eq!(json, r#"{"tp":1,"fp":2,"fn":3,"tn":4}"#);
    }

    #[test]
    fn table_layout() {
        let m = Metrics {
            accuracy: 0.89,
            precision: Some(0.88),
            recall: Some(0.87),
            f1: None,
        };
        let table = format_metrics_table(&[("Contextual LSTM", m)]);
        let lines: Vec<&str> = table.lines().collect();
        assert!(lines[0].starts_with("Classifier"));
        assert!(lines[1].ends_with("0.87     -"));
    }
}
