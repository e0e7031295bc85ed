use adlens_core::classifiers::{
    train_contextual, train_forest, Classifier, ContextualConfig, ContextualModel, ForestParams,
    ModelConfig, ModelDims, SponsorClassifier, TrainConfig, TrainingRow,
};
use adlens_core::dataset::{split_train_test, Example, LabeledSet};
use adlens_core::eval::{cross_validate, detect_hidden, evaluate};
use adlens_core::features::{RawFeatures, NUMERIC_WIDTH};
use adlens_core::model::Tier;
use adlens_core::Result;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn example(i: usize, label: u8, tokens: Vec<String>, numeric: [f64; NUMERIC_WIDTH]) -> Example {
    Example {
        post_id: format!("p{i:05}"),
        author: format!("user{}", i % 37),
        tier: Tier::ALL[i % 4],
        label,
        features: RawFeatures { tokens, numeric },
    }
}

/// Half positive; positives carry the token "promo", every example carries
/// a few shared filler tokens.
fn token_separable(n: usize, seed: u64) -> LabeledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let filler = ["sun", "beach", "coffee", "today", "love", "style", "morning"];
    let examples = (0..n)
        .map(|i| {
            let label = u8::from(i % 2 == 0);
            let mut tokens: Vec<String> = (0..rng.random_range(3..8))
                .map(|_| filler[rng.random_range(0..filler.len())].to_owned())
                .collect();
            if label == 1 {
                let at = rng.random_range(0..=tokens.len());
                tokens.insert(at, "promo".into());
            }
            let mut numeric = [0.0; NUMERIC_WIDTH];
            numeric.iter_mut().for_each(|v| *v = rng.random_range(0.0..100.0));
            example(i, label, tokens, numeric)
        })
        .collect();
    LabeledSet::new(examples).unwrap()
}

/// Label decided by the first numeric feature alone.
fn numeric_separable(n: usize, seed: u64) -> LabeledSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let examples = (0..n)
        .map(|i| {
            let label = u8::from(i % 2 == 0);
            let mut numeric = [0.0; NUMERIC_WIDTH];
            numeric.iter_mut().for_each(|v| *v = rng.random_range(0.0..10.0));
            numeric[0] = if label == 1 { rng.random_range(60.0..90.0) } else { rng.random_range(0.0..40.0) };
            example(i, label, vec!["x".into()], numeric)
        })
        .collect();
    LabeledSet::new(examples).unwrap()
}

fn toy_points(seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    while x.len() < 200 {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let margin = a + 2.0 * b - 0.3;
        if margin.abs() < 0.05 {
            continue;
        }
        x.push(vec![a, b]);
        y.push(u8::from(margin > 0.0));
    }
    (x, y)
}

#[test]
fn forest_fits_separable_toy_set() {
    let (x, y) = toy_points(5);
    let model = train_forest(&x, &y, &ForestParams { seed: 9, ..ForestParams::default() }).unwrap();
    let correct = x
        .iter()
        .zip(&y)
        .filter(|(row, &label)| u8::from(model.predict_proba(row).unwrap() >= 0.5) == label)
        .count();
    assert_eq!(correct, 200);
}

#[test]
fn forest_is_deterministic_under_seed() {
    let (x, y) = toy_points(6);
    let params = ForestParams { seed: 3, tree_count: 20, ..ForestParams::default() };
    let a = train_forest(&x, &y, &params).unwrap();
    let b = train_forest(&x, &y, &params).unwrap();
    assert_eq!(a, b);
    let c = train_forest(&x, &y, &ForestParams { seed: 4, ..params }).unwrap();
    assert_ne!(a.trees, c.trees);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn forest_probability_is_bounded(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        use std::sync::OnceLock;
        static MODEL: OnceLock<adlens_core::classifiers::ForestModel> = OnceLock::new();
        let model = MODEL.get_or_init(|| {
            let (x, y) = toy_points(7);
            train_forest(&x, &y, &ForestParams { tree_count: 25, ..ForestParams::default() }).unwrap()
        });
        let p = model.predict_proba(&[a, b]).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn contextual_learns_a_predictive_token() {
    let set = token_separable(500, 11);
    let config = ModelConfig::Contextual(ContextualConfig {
        // The default ±0.08 init sits on a long plateau when text is the
        // only signal; a wider init leaves it within a few epochs.
        train: TrainConfig { epochs: 20, seed: 12, init_scale: 0.2, ..TrainConfig::default() },
        ..ContextualConfig::default()
    });
    let (model, trace) = SponsorClassifier::fit(&config, &set).unwrap();
    let acc = evaluate(&model, &set, 0.5).unwrap().metrics.accuracy;
    assert!(acc >= 0.99, "training accuracy {acc}");
    let epochs = trace.unwrap().epochs;
    assert_eq!(epochs.len(), 20);
    assert!(epochs.last() < epochs.first());
}

fn tiny_dims() -> ModelDims {
    ModelDims { vocab_size: 8, embed_dim: 3, hidden: 4, dense1: 5, dense2: 3, numeric: 2 }
}

fn tiny_rows() -> (Vec<Vec<u32>>, Vec<Vec<f64>>, Vec<u8>) {
    let seqs = vec![vec![0, 2, 3], vec![0, 0, 4], vec![5, 6, 2], vec![0, 7, 7]];
    let nums = vec![vec![0.1, -0.3], vec![1.0, 0.0], vec![-0.5, 0.5], vec![0.2, 0.2]];
    (seqs, nums, vec![1, 0, 1, 0])
}

#[test]
fn zero_learning_rate_leaves_parameters_alone() {
    let (seqs, nums, labels) = tiny_rows();
    let rows: Vec<TrainingRow<'_>> = (0..4)
        .map(|i| TrainingRow { sequence: &seqs[i], numeric: &nums[i], label: labels[i] })
        .collect();
    let config = TrainConfig { epochs: 3, batch_size: 2, learning_rate: 0.0, seed: 5, ..TrainConfig::default() };
    let (model, trace) = train_contextual(&rows, tiny_dims(), &config).unwrap();
    assert_eq!(model, ContextualModel::init(tiny_dims(), config.init_scale, config.seed));
    assert!(trace.epochs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn contextual_training_is_bit_identical() {
    let (seqs, nums, labels) = tiny_rows();
    let rows: Vec<TrainingRow<'_>> = (0..4)
        .map(|i| TrainingRow { sequence: &seqs[i], numeric: &nums[i], label: labels[i] })
        .collect();
    let config = TrainConfig { epochs: 4, batch_size: 3, seed: 8, ..TrainConfig::default() };
    let (a, ta) = train_contextual(&rows, tiny_dims(), &config).unwrap();
    let (b, tb) = train_contextual(&rows, tiny_dims(), &config).unwrap();
    assert!(a.params.iter().zip(&b.params).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(ta, tb);
}

#[test]
fn unused_vocabulary_row_has_zero_gradient() {
    let dims = tiny_dims();
    let model = ContextualModel::init(dims, 0.3, 2);
    let seq = [0u32, 2, 3, 2];
    let numeric = [0.4, -0.2];
    let mut grad = vec![0.0; model.params.len()];
    model.accumulate_gradient(&seq, &numeric, 1, 1.0, &mut grad).unwrap();
    // Embedding rows come first; token 6 never occurs.
    let row = 6 * dims.embed_dim..7 * dims.embed_dim;
    let eps = 1e-5;
    for k in row {
        assert_eq!(grad[k], 0.0);
        let mut probe = model.clone();
        probe.params[k] += eps;
        let plus = probe.loss(&seq, &numeric, 1).unwrap();
        probe.params[k] -= 2.0 * eps;
        let minus = probe.loss(&seq, &numeric, 1).unwrap();
        assert!(((plus - minus) / (2.0 * eps)).abs() <= 1e-10);
    }
}

struct Constant(f64);

impl Classifier for Constant {
    fn predict_proba(&self, _: &RawFeatures) -> Result<f64> {
        Ok(self.0)
    }
}

#[test]
fn constant_trainer_scores_chance() {
    let set = numeric_separable(100, 1);
    let cv = cross_validate(|_| Ok(Constant(0.9)), &set, 10, 2, 0.5).unwrap();
    assert_eq!(cv.folds.len(), 10);
    for f in &cv.folds {
        let acc = f.evaluation.metrics.accuracy;
        assert!((acc - 0.5).abs() <= 0.1, "fold {} accuracy {acc}", f.fold);
    }
}

#[test]
fn leave_one_out_uses_single_example_folds() {
    let set = numeric_separable(10, 3);
    let cv = cross_validate(|_| Ok(Constant(0.2)), &set, 10, 4, 0.5).unwrap();
    assert_eq!(cv.folds.len(), 10);
    assert!(cv.folds.iter().all(|f| f.held_out.len() == 1));
    let mut ids: Vec<&String> = cv.folds.iter().flat_map(|f| &f.held_out).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 10);
}

#[test]
fn separable_set_cross_validates_well() {
    let set = numeric_separable(300, 5);
    let config = ModelConfig::Forest(adlens_core::classifiers::ForestConfig {
        params: ForestParams { tree_count: 30, ..ForestParams::default() },
        ..Default::default()
    });
    let cv = cross_validate(
        |s| SponsorClassifier::fit(&config, s).map(|(m, _)| m),
        &set,
        10,
        6,
        0.5,
    )
    .unwrap();
    let mean = cv.accuracy.mean.unwrap();
    assert!(mean >= 0.95, "mean accuracy {mean}");
}

#[test]
fn unreachable_threshold_flags_nothing() {
    let set = numeric_separable(40, 7);
    let report = detect_hidden(&Constant(1.0), &set.examples, 1.01).unwrap();
    assert_eq!(report.flagged, 0);
    assert!(report.tiers.iter().all(|t| t.flagged == 0 && t.flagged <= t.total));
    assert_eq!(report.total, 40);
}

#[test]
fn large_balanced_split_sizes() {
    let set = numeric_separable(14_000, 8);
    let (train, test) = split_train_test(&set, 0.2, 9).unwrap();
    assert_eq!((train.len(), test.len()), (11_200, 2_800));
    assert_eq!(test.class_counts(), (1_400, 1_400));
    assert_eq!(train.class_counts(), (5_600, 5_600));
}
