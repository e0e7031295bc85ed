use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use adlens_core::analytics::analyze;
use adlens_core::classifiers::{ModelConfig, ModelKind, SponsorClassifier};
use adlens_core::dataset::{
    build_labeled_set, read_examples, split_train_test, undersample_balance, write_examples,
    LabeledSet,
};
use adlens_core::eval::{cross_validate, detect_hidden, evaluate, format_metrics_table};
use adlens_core::features::{FeatureOptions, FeatureVector, NUMERIC_FEATURES};
use adlens_core::ingest::Dataset;
use adlens_core::labeling::{draw_validation_sample, label_story, SponsorHashtagSet};
use adlens_core::model::{SponsorLabel, Tier};
use adlens_core::signals::signal_report;
use adlens_core::synth::{generate_corpus, read_manifest, SynthConfig, TrueStatus, MANIFEST_FILE};
use adlens_core::textprep::Vocabulary;
use adlens_crawl::{run_pipeline, serve_fixture_api, ClientConfig, CrawlConfig};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::error::{CliError, Result};
use crate::io::*;
use crate::manifest::RunLog;

pub const EXAMPLES_FILE: &str = "examples.jsonl";
pub const MODEL_FILE: &str = "model.json";

fn tag_set(tags: &TagArgs) -> Result<SponsorHashtagSet> {
    match &tags.tags {
        None => Ok(SponsorHashtagSet::default()),
        Some(t) => Ok(SponsorHashtagSet::new(t.iter().map(|s| s.trim().trim_start_matches('#')))?),
    }
}

fn tag_list(tags: &SponsorHashtagSet) -> Vec<&str> {
    tags.iter().collect()
}

fn check_threshold(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("threshold must be finite, got {t}")))
    }
}

fn feature_options(tags: SponsorHashtagSet, no_scrub: bool, no_bio: bool) -> FeatureOptions {
    FeatureOptions {
        scrub: (!no_scrub).then_some(tags),
        include_biography: !no_bio,
        ..FeatureOptions::default()
    }
}

pub fn synth(a: &SynthArgs, log: &mut RunLog) -> Result<PathBuf> {
    let mut cfg = match &a.config {
        Some(p) => {
            log.input(p);
            read_config::<SynthConfig>(p)?
        }
        None => SynthConfig::default(),
    };
    if let Some(n) = a.posts {
        cfg.post_count = Some(n);
    }
    if let Some(f) = a.sponsored_fraction {
        cfg.sponsored_fraction = f;
    }
    if let Some(f) = a.hidden_fraction {
        cfg.hidden_fraction = f;
    }
    cfg.seed = log.seed_for("synth");
    cfg.validate()?;
    log.config = serde_json::to_value(&cfg).map_err(adlens_core::Error::from)?;

    let corpus = generate_corpus(&cfg)?;
    create_dir(&a.out)?;
    corpus.write_dir(&a.out)?;
    for name in ["profiles.jsonl", "posts.jsonl", "stories.jsonl", MANIFEST_FILE] {
        log.output(&a.out.join(name));
    }
    println!(
        "{} profiles, {} posts ({} sponsored, {} hidden), {} stories -> {}",
        corpus.dataset.profiles.len(),
        corpus.dataset.posts.len(),
        corpus.ids_with(TrueStatus::Sponsored).len(),
        corpus.ids_with(TrueStatus::Hidden).len(),
        corpus.dataset.stories.len(),
        a.out.display()
    );
    Ok(a.out.clone())
}

/// Runs until the process is stopped. Prints the listening URL first so a
/// caller can pick up an ephemeral port.
pub fn serve(a: &ServeArgs) -> Result<()> {
    let dataset = Dataset::load_dir(&a.input)?;
    let handle = serve_fixture_api(&dataset, &a.bind)?;
    println!("listening on {}", handle.base_url());
    let _ = std::io::stdout().flush();
    handle.wait()?;
    Ok(())
}

pub fn crawl(a: &CrawlArgs, log: &mut RunLog) -> Result<PathBuf> {
    let mut cfg = match &a.config {
        Some(p) => {
            log.input(p);
            read_config::<CrawlConfig>(p)?
        }
        None => CrawlConfig::default(),
    };
    if let Some(t) = &a.tags {
        cfg.seed_hashtags = t.clone();
    }
    if let Some(n) = a.page_size {
        cfg.page_size = n;
    }
    if let Some(n) = a.max_pages {
        cfg.max_pages = n;
    }
    cfg.normalized_tags()?;
    log.config = json!({ "crawl": &cfg, "url": &a.url });

    let out = run_pipeline(&cfg, &ClientConfig::new(a.url.clone()))?;
    create_dir(&a.out)?;
    out.dataset.write_dir(&a.out)?;
    let skipped = a.out.join("skipped.json");
    write_json(&skipped, &out.skipped)?;
    for name in ["profiles.jsonl", "posts.jsonl", "stories.jsonl"] {
        log.output(&a.out.join(name));
    }
    log.output(&skipped);
    println!(
        "{} profiles, {} posts, {} stories ({} users skipped) -> {}",
        out.dataset.profiles.len(),
        out.dataset.posts.len(),
        out.dataset.stories.len(),
        out.skipped.len(),
        a.out.display()
    );
    Ok(a.out.clone())
}

pub fn label(a: &LabelArgs, log: &mut RunLog) -> Result<PathBuf> {
    let tags = tag_set(&a.tags)?;
    let dataset = Dataset::load_dir(&a.input)?;
    log.input(&a.input);
    let seed = log.seed_for("validation");
    log.config = json!({
        "tags": tag_list(&tags),
        "validation_fraction": a.validation_fraction,
        "format": format!("{:?}", a.format).to_lowercase(),
    });

    let mut lines = Vec::with_capacity(dataset.posts.len() + dataset.stories.len());
    let mut counts: BTreeMap<(&str, SponsorLabel), usize> = BTreeMap::new();
    for post in &dataset.posts {
        let label = adlens_core::labeling::label_post(post, &tags);
        *counts.entry(("posts", label)).or_default() += 1;
        lines.push(LabelLine { kind: ItemKind::Post, id: post.id.clone(), label });
    }
    for story in &dataset.stories {
        let label = label_story(story);
        *counts.entry(("stories", label)).or_default() += 1;
        lines.push(LabelLine { kind: ItemKind::Story, id: story.id.clone(), label });
    }
    let accounts: Vec<_> = dataset.profiles.values().cloned().collect();
    let sample: Vec<&str> = if accounts.is_empty() {
        Vec::new()
    } else {
        draw_validation_sample(&accounts, a.validation_fraction, seed)?
            .into_iter()
            .map(|p| p.username.as_str())
            .collect()
    };

    create_dir(&a.out)?;
    let labels_path = match a.format {
        Format::Jsonl => {
            let p = a.out.join(LABELS_JSONL);
            write_text(&p, &labels_to_jsonl(&lines)?)?;
            p
        }
        Format::Csv => {
            let p = a.out.join(LABELS_CSV);
            write_text(&p, &labels_to_csv(&lines))?;
            p
        }
    };
    let sample_path = a.out.join("validation_sample.json");
    write_json(&sample_path, &json!({ "seed": seed, "fraction": a.validation_fraction, "accounts": sample }))?;
    log.output(&labels_path);
    log.output(&sample_path);
    for ((kind, label), n) in &counts {
        println!("{kind:<8} {:<14} {n}", label.as_str());
    }
    println!("validation sample: {} of {} accounts", sample.len(), accounts.len());
    Ok(a.out.clone())
}

#[derive(Serialize)]
struct TierLine<'a> {
    username: &'a str,
    follower_count: u64,
    tier: Tier,
}

pub fn tier(a: &TierArgs, log: &mut RunLog) -> Result<PathBuf> {
    let dataset = Dataset::load_dir(&a.input)?;
    log.input(&a.input);
    log.config = json!({ "format": format!("{:?}", a.format).to_lowercase() });
    let rows: Vec<TierLine<'_>> = dataset
        .profiles
        .values()
        .map(|p| TierLine {
            username: &p.username,
            follower_count: p.follower_count,
            tier: adlens_core::labeling::assign_tier(p),
        })
        .collect();
    create_dir(&a.out)?;
    let path = match a.format {
        Format::Jsonl => {
            let p = a.out.join("tiers.jsonl");
            let mut s = String::new();
            for r in &rows {
                s.push_str(&serde_json::to_string(r).map_err(adlens_core::Error::from)?);
                s.push('\n');
            }
            write_text(&p, &s)?;
            p
        }
        Format::Csv => {
            let p = a.out.join("tiers.csv");
            let mut s = String::from("username,follower_count,tier\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{}", r.username, r.follower_count, r.tier);
            }
            write_text(&p, &s)?;
            p
        }
    };
    log.output(&path);
    for t in Tier::ALL {
        println!("{:<6} {}", t.as_str(), rows.iter().filter(|r| r.tier == t).count());
    }
    Ok(a.out.clone())
}

fn labeled_input(data: &LabeledInput, log: &mut RunLog) -> Result<(Dataset, SponsorHashtagSet)> {
    let tags = tag_set(&data.tags)?;
    let (dataset, labels) = load_labeled(&data.input, data.labels.as_deref(), &tags)?;
    log.input(&data.input);
    if let Some(p) = labels {
        log.input(&p);
    }
    Ok((dataset, tags))
}

pub fn analyze_cmd(a: &AnalyzeArgs, log: &mut RunLog) -> Result<PathBuf> {
    let (dataset, tags) = labeled_input(&a.data, log)?;
    log.config = json!({ "tags": tag_list(&tags), "format": format!("{:?}", a.format).to_lowercase() });
    let report = analyze(&dataset)?;
    create_dir(&a.out)?;
    match a.format {
        Format::Csv => {
            write_csv_reports(&dataset, &report, &a.out)?;
            use adlens_core::analytics::*;
            for name in [
                CDF_FOLLOWERS_CSV,
                COMMENTS_ABS_CSV,
                COMMENTS_NORM_CSV,
                LATENCY_CSV,
                REPEATERS_CSV,
                SHARE_CSV,
                CATEGORIES_CSV,
            ] {
                log.output(&a.out.join(name));
            }
        }
        Format::Jsonl => {
            let p = a.out.join("analytics.json");
            write_json(&p, &report)?;
            log.output(&p);
        }
    }
    println!("{:<20} {:>6} {:>16} {:>14}", "group", "posts", "median comments", "median likes");
    for g in &report.engagement.groups {
        let m = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.1}"));
        println!(
            "{:<20} {:>6} {:>16} {:>14}",
            g.group.name(),
            g.post_count,
            m(g.median_comments()),
            m(g.median_likes())
        );
    }
    Ok(a.out.clone())
}

pub fn featurize(a: &FeaturizeArgs, log: &mut RunLog) -> Result<PathBuf> {
    let (dataset, tags) = labeled_input(&a.data, log)?;
    log.config = json!({
        "tags": tag_list(&tags),
        "scrub": !a.no_scrub,
        "biography": !a.no_bio,
        "format": format!("{:?}", a.format).to_lowercase(),
        "vocab_size": a.vocab_size,
        "max_len": a.max_len,
    });
    let opts = feature_options(tags, a.no_scrub, a.no_bio);
    let set = build_labeled_set(&dataset, &opts)?;
    create_dir(&a.out)?;
    let path = a.out.join(EXAMPLES_FILE);
    write_examples(&path, &set)?;
    log.output(&path);

    if a.format == Format::Csv {
        let mut numeric = String::from("post_id,label,tier");
        for name in NUMERIC_FEATURES {
            numeric.push(',');
            numeric.push_str(name);
        }
        numeric.push('\n');
        for ex in &set.examples {
            let _ = write!(numeric, "{},{},{}", ex.post_id, ex.label, ex.tier);
            for v in ex.features.numeric {
                let _ = write!(numeric, ",{v}");
            }
            numeric.push('\n');
        }
        let docs: Vec<&[String]> = set.examples.iter().map(|e| e.features.tokens.as_slice()).collect();
        let vocab = Vocabulary::build(&docs, a.vocab_size)?;
        let mut seqs = String::new();
        for ex in &set.examples {
            let fv = FeatureVector::encode(&ex.features, &vocab, a.max_len);
            let line = json!({ "post_id": ex.post_id, "label": ex.label, "text_sequence": fv.text_sequence });
            seqs.push_str(&line.to_string());
            seqs.push('\n');
        }
        for (name, body) in [
            ("numeric.csv", numeric),
            ("sequences.jsonl", seqs),
            ("vocab.json", serde_json::to_string_pretty(&vocab).map_err(adlens_core::Error::from)? + "\n"),
        ] {
            let p = a.out.join(name);
            write_text(&p, &body)?;
            log.output(&p);
        }
    }
    let (neg, pos) = set.class_counts();
    println!("{} examples ({pos} sponsored, {neg} non-sponsored) -> {}", set.len(), path.display());
    Ok(a.out.clone())
}

pub fn split(a: &SplitArgs, log: &mut RunLog) -> Result<PathBuf> {
    let set = read_examples(&a.input)?;
    log.input(&a.input);
    log.config = json!({ "test_fraction": a.test_fraction, "balance": !a.no_balance });
    create_dir(&a.out)?;
    let base = if a.no_balance {
        set
    } else {
        let seed = log.seed_for("balance");
        let balanced = undersample_balance(&set, seed)?;
        let p = a.out.join("balanced.jsonl");
        write_examples(&p, &balanced)?;
        log.output(&p);
        println!("balanced {} -> {} examples", set.len(), balanced.len());
        balanced
    };
    let seed = log.seed_for("split");
    let (train, test) = split_train_test(&base, a.test_fraction, seed)?;
    for (name, s) in [("train.jsonl", &train), ("test.jsonl", &test)] {
        let p = a.out.join(name);
        write_examples(&p, s)?;
        log.output(&p);
    }
    let manifest = a.out.join("split.json");
    write_json(&manifest, &json!({ "seed": seed, "train": train.ids(), "test": test.ids() }))?;
    log.output(&manifest);
    println!("train {} / test {}", train.len(), test.len());
    Ok(a.out.clone())
}

pub fn train(a: &TrainArgs, log: &mut RunLog) -> Result<PathBuf> {
    let kind = ModelKind::from(a.model);
    let mut cfg = match &a.config {
        Some(p) => {
            log.input(p);
            let cfg: ModelConfig = read_config(p)?;
            if cfg.kind() != kind {
                return Err(CliError::Usage(format!(
                    "config {} describes a {:?} model, not {:?}",
                    p.display(),
                    cfg.kind(),
                    kind
                )));
            }
            cfg
        }
        None => ModelConfig::default_for(kind),
    };
    if let Some(epochs) = a.epochs {
        match &mut cfg {
            ModelConfig::Contextual(c) => c.train.epochs = epochs,
            ModelConfig::Forest(_) => {
                return Err(CliError::Usage("--epochs only applies to --model contextual".into()))
            }
        }
    }
    let cfg = cfg.with_seed(log.seed_for("train"));
    log.config = serde_json::to_value(&cfg).map_err(adlens_core::Error::from)?;

    let set = read_examples(&a.input)?;
    log.input(&a.input);
    let (model, trace) = SponsorClassifier::fit(&cfg, &set)?;
    create_dir(&a.out)?;
    let path = a.out.join(MODEL_FILE);
    model.save(&cfg, &path)?;
    log.output(&path);
    if let Some(trace) = trace {
        let p = a.out.join("loss.csv");
        write_text(&p, &trace.to_csv())?;
        log.output(&p);
    }
    println!("{:?} model fitted on {} examples -> {}", kind, set.len(), path.display());
    Ok(a.out.clone())
}

fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Forest => "Random forest",
        ModelKind::Contextual => "Contextual LSTM",
    }
}

pub fn eval(a: &EvalArgs, log: &mut RunLog) -> Result<PathBuf> {
    check_threshold(a.threshold)?;
    let (model, cfg) = SponsorClassifier::load(&a.model_file)?;
    log.input(&a.model_file);
    let test = read_examples(&a.input)?;
    log.input(&a.input);
    let mut config = json!({ "threshold": a.threshold, "folds": a.folds });
    let heldout = evaluate(&model, &test, a.threshold)?;

    let cv = match a.folds {
        None => None,
        Some(k) => {
            let cv_path = a.cv_input.as_ref().unwrap_or(&a.input);
            let cv_set = read_examples(cv_path)?;
            if a.cv_input.is_some() {
                log.input(cv_path);
            }
            let fold_seed = log.seed_for("cv");
            let fold_cfg = cfg.clone().with_seed(log.seed_for("cv-train"));
            config["model"] = serde_json::to_value(&fold_cfg).map_err(adlens_core::Error::from)?;
            let fit = |s: &LabeledSet| SponsorClassifier::fit(&fold_cfg, s).map(|(m, _)| m);
            Some(cross_validate(fit, &cv_set, k, fold_seed, a.threshold)?)
        }
    };
    log.config = config;

    create_dir(&a.out)?;
    let path = a.out.join("metrics.json");
    write_json(&path, &json!({ "model": cfg.kind(), "heldout": heldout, "cross_validation": cv }))?;
    log.output(&path);

    let name = kind_name(model.kind());
    let mut rows = vec![(format!("{name} (test split)"), heldout.metrics)];
    if let Some(cv) = &cv {
        // The table shows fold means; undefined means print as "-".
        let mean = adlens_core::eval::Metrics {
            accuracy: cv.accuracy.mean.unwrap_or(f64::NAN),
            precision: cv.precision.mean,
            recall: cv.recall.mean,
            f1: cv.f1.mean,
        };
        rows.push((format!("{name} ({}-fold CV)", cv.k), mean));
    }
    let borrowed: Vec<(&str, _)> = rows.iter().map(|(n, m)| (n.as_str(), *m)).collect();
    let table = format_metrics_table(&borrowed);
    let txt = a.out.join("metrics.txt");
    write_text(&txt, &table)?;
    log.output(&txt);
    print!("{table}");
    Ok(a.out.clone())
}

pub fn detect(a: &DetectArgs, log: &mut RunLog) -> Result<PathBuf> {
    check_threshold(a.threshold)?;
    let (model, _) = SponsorClassifier::load(&a.model_file)?;
    log.input(&a.model_file);
    let (dataset, tags) = labeled_input(&a.data, log)?;
    log.config = json!({
        "threshold": a.threshold,
        "tags": tag_list(&tags),
        "scrub": !a.no_scrub,
        "biography": !a.no_bio,
    });
    let opts = feature_options(tags, a.no_scrub, a.no_bio);
    let all = build_labeled_set(&dataset, &opts)?;
    let undeclared: Vec<_> = all.examples.into_iter().filter(|e| e.label == 0).collect();
    let report = detect_hidden(&model, &undeclared, a.threshold)?;

    let manifest_path = a
        .manifest
        .clone()
        .or_else(|| Some(a.data.input.join(MANIFEST_FILE)).filter(|p| p.exists()));
    let recall = match &manifest_path {
        Some(p) => {
            log.input(p);
            let planted: Vec<String> = read_manifest(p)?
                .into_iter()
                .filter(|e| e.true_status == TrueStatus::Hidden)
                .map(|e| e.post_id)
                .collect();
            report.recall_against(&planted)
        }
        None => None,
    };

    create_dir(&a.out)?;
    let path = a.out.join("hidden_audit.json");
    write_json(&path, &json!({ "report": report, "recall_against_manifest": recall }))?;
    log.output(&path);
    println!("{:<6} {:>7} {:>8} {:>9}", "tier", "total", "flagged", "fraction");
    for t in &report.tiers {
        println!("{:<6} {:>7} {:>8} {:>9.3}", t.tier.as_str(), t.total, t.flagged, t.flagged_fraction);
    }
    println!("{:<6} {:>7} {:>8} {:>9.3}", "all", report.total, report.flagged, report.flagged_fraction);
    if let Some(r) = recall {
        println!("recall against planted hidden posts: {r:.3}");
    }
    Ok(a.out.clone())
}

pub fn report(a: &ReportArgs, log: &mut RunLog) -> Result<PathBuf> {
    let (dataset, tags) = labeled_input(&a.data, log)?;
    log.config = json!({ "tags": tag_list(&tags), "format": format!("{:?}", a.format).to_lowercase() });
    let report = signal_report(&dataset, &tags)?;
    create_dir(&a.out)?;
    let path = match a.format {
        Format::Csv => {
            let p = a.out.join("signals.csv");
            write_text(&p, &report.to_csv())?;
            p
        }
        Format::Jsonl => {
            let p = a.out.join("signals.json");
            write_json(&p, &report)?;
            p
        }
    };
    log.output(&path);
    print!("{}", report.to_table());
    Ok(a.out.clone())
}
