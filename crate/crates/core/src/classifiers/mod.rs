//! The two sponsored-post classifiers and the glue that fits them on a
//! [`LabeledSet`].
//!
//! A fitted [`SponsorClassifier`] carries everything needed to score a raw
//! example: the vocabulary and numeric standardizer for the recurrent
//! model, the hashing width for the forest. Both are fitted on the training
//! set only.

pub mod contextual;
pub mod forest;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledSet;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, RawFeatures, Standardizer, NUMERIC_WIDTH};
use crate::textprep::Vocabulary;

pub use contextual::{
    gradient_check, train_contextual, ContextualModel, LossTrace, ModelDims, TrainConfig,
    TrainingRow,
};
pub use forest::{train_forest, ForestModel, ForestParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Anything that scores a raw example with a sponsorship probability.
pub trait Classifier {
    fn predict_proba(&self, features: &RawFeatures) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    Contextual,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest" => Ok(ModelKind::Forest),
            "contextual" => Ok(ModelKind::Contextual),
            other => Err(Error::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        hash ^= u64::from(*b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

/// Numeric features followed by `bins` token-presence bits.
pub fn forest_row(features: &RawFeatures, bins: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(NUMERIC_WIDTH + bins);
    row.extend_from_slice(&features.numeric);
    row.resize(NUMERIC_WIDTH + bins, 0.0);
    if bins > 0 {
        for token in &features.tokens {
            let bin = (fnv1a(token.as_bytes()) % bins as u64) as usize;
            row[NUMERIC_WIDTH + bin] = 1.0;
        }
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub params: ForestParams,
    pub hash_bins: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            params: ForestParams::default(),
            hash_bins: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextualConfig {
    pub vocab_size: usize,
    pub max_len: usize,
    pub embed_dim: usize,
    pub train: TrainConfig,
}

impl Default for ContextualConfig {
    fn default() -> Self {
        ContextualConfig {
            vocab_size: 5_000,
            max_len: 60,
            embed_dim: 32,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    Forest(ForestConfig),
    Contextual(ContextualConfig),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Forest => ModelConfig::Forest(ForestConfig::default()),
            ModelKind::Contextual => ModelConfig::Contextual(ContextualConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Forest(_) => ModelKind::Forest,
            ModelConfig::Contextual(_) => ModelKind::Contextual,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelConfig::Forest(c) => c.params.seed = seed,
            ModelConfig::Contextual(c) => c.train.seed = seed,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SponsorClassifier {
    Forest {
        hash_bins: usize,
        forest: ForestModel,
    },
    Contextual {
        max_len: usize,
        vocabulary: Vocabulary,
        standardizer: Standardizer,
        network: ContextualModel,
    },
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: ModelConfig,
    classifier: SponsorClassifier,
}

impl SponsorClassifier {
    /// Fits the configured model. The loss trace is only produced by the
    /// recurrent model.
    pub fn fit(config: &ModelConfig, train: &LabeledSet) -> Result<(Self, Option<LossTrace>)> {
        if train.is_empty() {
            return Err(Error::Data("training set is empty".into()));
        }
        match config {
            ModelConfig::Forest(cfg) => {
                let x: Vec<Vec<f64>> = train
                    .examples
                    .iter()
                    .map(|e| forest_row(&e.features, cfg.hash_bins))
                    .collect();
                let forest = train_forest(&x, &train.labels(), &cfg.params)?;
                Ok((
                    SponsorClassifier::Forest {
                        hash_bins: cfg.hash_bins,
                        forest,
                    },
                    None,
                ))
            }
            ModelConfig::Contextual(cfg) => {
                let docs: Vec<&[String]> =
                    train.examples.iter().map(|e| e.features.tokens.as_slice()).collect();
                let vocabulary = Vocabulary::build(&docs, cfg.vocab_size)?;
                let standardizer =
                    Standardizer::fit(train.examples.iter().map(|e| &e.features.numeric));
                let encoded: Vec<FeatureVector> = train
                    .examples
                    .iter()
                    .map(|e| {
                        let mut fv = FeatureVector::encode(&e.features, &vocabulary, cfg.max_len);
                        fv.numeric = standardizer.transform(&fv.numeric);
                        fv
                    })
                    .collect();
                let rows: Vec<TrainingRow<'_>> = encoded
                    .iter()
                    .zip(&train.examples)
                    .map(|(fv, e)| TrainingRow {
                        sequence: &fv.text_sequence,
                        numeric: &fv.numeric,
                        label: e.label,
                    })
                    .collect();
                let dims = ModelDims::standard(vocabulary.len(), cfg.embed_dim, NUMERIC_WIDTH);
                let (network, trace) = train_contextual(&rows, dims, &cfg.train)?;
                Ok((
                    SponsorClassifier::Contextual {
                        max_len: cfg.max_len,
                        vocabulary,
                        standardizer,
                        network,
                    },
                    Some(trace),
                ))
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            SponsorClassifier::Forest { .. } => ModelKind::Forest,
            SponsorClassifier::Contextual { .. } => ModelKind::Contextual,
        }
    }

    pub fn save(&self, config: &ModelConfig, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: config.clone(),
            classifier: self.clone(),
        };
        let json = serde_json::to_string(&file)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, ModelConfig)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }
        Ok((file.classifier, file.config))
    }
}

impl Classifier for SponsorClassifier {
    fn predict_proba(&self, features: &RawFeatures) -> Result<f64> {
        match self {
            SponsorClassifier::Forest { hash_bins, forest } => {
                forest.predict_proba(&forest_row(features, *hash_bins))
            }
            SponsorClassifier::Contextual {
                max_len,
                vocabulary,
                standardizer,
                network,
            } => {
                let fv = FeatureVector::encode(features, vocabulary, *max_len);
                network.forward(&fv.text_sequence, &standardizer.transform(&fv.numeric))
            }
        }
    }
}

impl<C: Classifier + ?Sized> Classifier for Box<C> {
    fn predict_proba(&self, features: &RawFeatures) -> Result<f64> {
        (**self).predict_proba(features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forest_row_layout() {
        let raw = RawFeatures {
            tokens: vec!["a".into(), "b".into(), "a".into()],
            numeric: [1.0; 11],
        };
        let row = forest_row(&raw, 16);
        assert_eq!(row.len(), 27);
        assert_eq!(&row[..11], &[1.0; 11]);
        let bits: f64 = row[11..].iter().sum();
        assert!(bits == 1.0 || bits == 2.0);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
    }
}
