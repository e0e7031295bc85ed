use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use adlens_core::ingest::Dataset;
use adlens_core::labeling::{label_dataset, SponsorHashtagSet};
use adlens_core::model::SponsorLabel;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const LABELS_JSONL: &str = "labels.jsonl";
pub const LABELS_CSV: &str = "labels.csv";

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(adlens_core::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// A JSON configuration file. Any failure to read or parse it is a usage
/// error.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Post,
    Story,
}

impl ItemKind {
    fn as_str(self) -> &'static str {
        match self {
            ItemKind::Post => "post",
            ItemKind::Story => "story",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelLine {
    pub kind: ItemKind,
    pub id: String,
    pub label: SponsorLabel,
}

pub fn labels_to_csv(lines: &[LabelLine]) -> String {
    let mut s = String::from("kind,id,label\n");
    for l in lines {
        s.push_str(&format!("{},{},{}\n", l.kind.as_str(), l.id, l.label.as_str()));
    }
    s
}

pub fn labels_to_jsonl(lines: &[LabelLine]) -> Result<String> {
    let mut s = String::new();
    for l in lines {
        s.push_str(&serde_json::to_string(l).map_err(adlens_core::Error::from)?);
        s.push('\n');
    }
    Ok(s)
}

fn parse_label(s: &str) -> Option<SponsorLabel> {
    match s {
        "sponsored" => Some(SponsorLabel::Sponsored),
        "non_sponsored" => Some(SponsorLabel::NonSponsored),
        "unlabeled" => Some(SponsorLabel::Unlabeled),
        _ => None,
    }
}

/// Post labels from a `labels.jsonl` or `labels.csv` file, keyed by id.
/// Story lines are ignored: story labels follow from the paid-partnership
/// flag.
pub fn read_post_labels(path: &Path) -> Result<HashMap<String, SponsorLabel>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |n: usize, why: String| CliError::Data(format!("{}:{n}: {why}", path.display()));
    let mut out = HashMap::new();
    let csv = path.extension().is_some_and(|e| e == "csv");
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() || (csv && n == 1) {
            continue;
        }
        let entry = if csv {
            let mut f = line.split(',');
            let (kind, id, label) = (f.next(), f.next(), f.next());
            match (kind, id, label.and_then(parse_label)) {
                (Some("post"), Some(id), Some(l)) => Some((id.to_owned(), l)),
                (Some("story"), Some(_), Some(_)) => None,
                _ => return Err(bad(n, format!("malformed label row {line:?}"))),
            }
        } else {
            let l: LabelLine = serde_json::from_str(line).map_err(|e| bad(n, e.to_string()))?;
            (l.kind == ItemKind::Post).then_some((l.id, l.label))
        };
        if let Some((id, label)) = entry {
            if out.insert(id.clone(), label).is_some() {
                return Err(bad(n, format!("duplicate label for post {id}")));
            }
        }
    }
    Ok(out)
}

/// The labels file to use for `input`: the explicit one, else
/// `labels.jsonl` or `labels.csv` inside the input directory.
pub fn find_labels(input: &Path, explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_owned());
    }
    [LABELS_JSONL, LABELS_CSV]
        .iter()
        .map(|name| input.join(name))
        .find(|p| p.exists())
}

/// Loads a dataset directory and labels its posts, from a labels file when
/// one is found and with the rule-based labeler otherwise.
pub fn load_labeled(
    input: &Path,
    labels: Option<&Path>,
    tags: &SponsorHashtagSet,
) -> Result<(Dataset, Option<PathBuf>)> {
    let mut dataset = Dataset::load_dir(input)?;
    let path = find_labels(input, labels);
    match &path {
        Some(p) => {
            let map = read_post_labels(p)?;
            for post in &mut dataset.posts {
                post.sponsor_label = *map.get(&post.id).ok_or_else(|| {
                    CliError::Data(format!("{}: no label for post {}", p.display(), post.id))
                })?;
            }
            log::info!("labels read from {}", p.display());
        }
        None => label_dataset(&mut dataset, tags),
    }
    Ok((dataset, path))
}
