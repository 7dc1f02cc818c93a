//! Subcommand implementations. Every command loads one config, writes its
//! reports under the output directory, and finishes with a run manifest.

pub mod steps;
pub mod train;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use credscore_core::insight::correlate_metrics;
use credscore_core::verify::CredibilityRank;

use crate::workspace::{summarize, ClassificationRecord, OutcomeRecord, Workspace};
use steps::{
    build_rankings, correlations_csv, load_social, rankings_csv, run_classification,
    run_explanations, run_verification, ClassifiedRun,
};

pub use train::cmd_train;

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let contents = std::fs::read_to_string(path).with_context(|| {
        format!(
            "reading {}; run the earlier pipeline stage first",
            path.display()
        )
    })?;
    contents
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            serde_json::from_str(line)
                .with_context(|| format!("{}: line {}", path.display(), i + 1))
        })
        .collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let contents = std::fs::read_to_string(path).with_context(|| {
        format!(
            "reading {}; run the earlier pipeline stage first",
            path.display()
        )
    })?;
    serde_json::from_str(&contents).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Serialize)]
struct IngestSummary {
    posts: usize,
    labeled: usize,
    advisors: usize,
    drop: usize,
    rise: usize,
    other: usize,
    dictionary_aliases: usize,
    tickers_mentioned: usize,
}

/// Validate and normalize the inputs: posts re-emitted with extracted
/// cashtags/hashtags plus a corpus summary.
pub fn cmd_ingest(ws: &Workspace) -> Result<()> {
    use credscore_core::corpus::Category;

    let records = ws.load_posts()?;
    let advisors: BTreeSet<&str> = records.iter().map(|r| r.post.advisor_id.as_str()).collect();
    let count = |category: Category| {
        records
            .iter()
            .filter(|r| r.label == Some(category))
            .count()
    };
    let mut tickers: BTreeSet<String> = BTreeSet::new();
    for record in &records {
        let clean = ws.pipeline.clean(&record.post, &ws.dictionary);
        tickers.extend(clean.tickers);
    }

    let summary = IngestSummary {
        posts: records.len(),
        labeled: records.iter().filter(|r| r.label.is_some()).count(),
        advisors: advisors.len(),
        drop: count(Category::ShortTermDrop),
        rise: count(Category::ShortTermRise),
        other: count(Category::Other),
        dictionary_aliases: ws.dictionary.len(),
        tickers_mentioned: tickers.len(),
    };

    ws.write_jsonl("ingested_posts.jsonl", &records)?;
    ws.write_json("ingest_summary.json", &summary)?;

    let mut manifest = ws.manifest("ingest");
    manifest.record_input("posts", &ws.posts_path())?;
    manifest.record_output("ingested_posts.jsonl");
    manifest.record_output("ingest_summary.json");
    manifest.write(&ws.out_dir)?;
    Ok(())
}

fn write_classifications(ws: &Workspace, run: &ClassifiedRun) -> Result<()> {
    let records: Vec<&ClassificationRecord> =
        run.classifications.iter().map(|(r, _)| r).collect();
    ws.write_jsonl("classifications.jsonl", &records)?;
    ws.write_json("summary.json", &summarize(&run.classifications))?;
    Ok(())
}

pub fn cmd_classify(ws: &Workspace) -> Result<()> {
    let run = run_classification(ws)?;
    write_classifications(ws, &run)?;

    let mut manifest = ws.manifest("classify");
    manifest.record_input("posts", &ws.posts_path())?;
    manifest.record_input("model", &ws.artifacts_dir().join("model.json"))?;
    manifest.record_output("classifications.jsonl");
    manifest.record_output("summary.json");
    manifest.write(&ws.out_dir)?;
    Ok(())
}

pub fn cmd_verify(ws: &Workspace) -> Result<()> {
    let classifications: Vec<ClassificationRecord> =
        read_jsonl(&ws.out_dir.join("classifications.jsonl"))?;
    // the verification step keys off the record only
    let paired: Vec<(ClassificationRecord, credscore_core::classify::HybridOutcome)> =
        classifications
            .into_iter()
            .map(|record| {
                let outcome = credscore_core::classify::HybridOutcome {
                    category: record.category,
                    source: record.source,
                    matched_terms: record.matched_terms.clone(),
                    class_scores: record.class_scores.clone(),
                };
                (record, outcome)
            })
            .collect();
    let outcomes = run_verification(ws, &paired)?;
    ws.write_jsonl("outcomes.jsonl", &outcomes)?;

    let mut manifest = ws.manifest("verify");
    manifest.record_input("classifications", &ws.out_dir.join("classifications.jsonl"))?;
    manifest.record_output("outcomes.jsonl");
    manifest.write(&ws.out_dir)?;
    Ok(())
}

pub fn cmd_rank(ws: &Workspace) -> Result<()> {
    let classifications: Vec<ClassificationRecord> =
        read_jsonl(&ws.out_dir.join("classifications.jsonl"))?;
    let outcomes: Vec<OutcomeRecord> = read_jsonl(&ws.out_dir.join("outcomes.jsonl"))?;
    let advisors: Vec<String> = classifications
        .iter()
        .map(|c| c.advisor_id.clone())
        .collect();
    let rankings = build_rankings(&advisors, &outcomes);
    ws.write_json("rankings.json", &rankings)?;
    ws.write_text("rankings.csv", &rankings_csv(&rankings))?;

    let mut manifest = ws.manifest("rank");
    manifest.record_input("outcomes", &ws.out_dir.join("outcomes.jsonl"))?;
    manifest.record_output("rankings.json");
    manifest.record_output("rankings.csv");
    manifest.write(&ws.out_dir)?;
    Ok(())
}

pub fn cmd_correlate(ws: &Workspace) -> Result<()> {
    let rankings: Vec<CredibilityRank> = read_json(&ws.out_dir.join("rankings.json"))?;
    let social = load_social(ws)?;
    let table = correlate_metrics(&rankings, &social, ws.config().correlation_method);
    ws.write_json("correlations.json", &table)?;
    ws.write_text("correlations.csv", &correlations_csv(&table))?;

    let mut manifest = ws.manifest("correlate");
    manifest.record_input("rankings", &ws.out_dir.join("rankings.json"))?;
    manifest.record_output("correlations.json");
    manifest.record_output("correlations.csv");
    manifest.write(&ws.out_dir)?;
    Ok(())
}

pub fn cmd_explain(ws: &Workspace, only_post: Option<&str>) -> Result<()> {
    let run = run_classification(ws)?;
    let explanations = run_explanations(ws, &run)?;

    if let Some(post_id) = only_post {
        let explanation = explanations
            .iter()
            .find(|e| e.post_id == post_id)
            .with_context(|| format!("no post with id {post_id}"))?;
        println!("{}", explanation.text);
        return Ok(());
    }

    ws.write_jsonl("explanations.jsonl", &explanations)?;
    let mut manifest = ws.manifest("explain");
    manifest.record_input("posts", &ws.posts_path())?;
    manifest.record_input("model", &ws.artifacts_dir().join("model.json"))?;
    manifest.record_output("explanations.jsonl");
    manifest.write(&ws.out_dir)?;
    Ok(())
}

/// Collect whatever reports the output directory already holds into one
/// document.
pub fn cmd_report(ws: &Workspace) -> Result<()> {
    let mut report = serde_json::Map::new();
    let mut found = false;
    for name in [
        "ingest_summary.json",
        "train_summary.json",
        "eval_report.json",
        "summary.json",
        "rankings.json",
        "correlations.json",
    ] {
        let path = ws.out_dir.join(name);
        if path.exists() {
            let value: serde_json::Value = read_json(&path)?;
            report.insert(name.trim_end_matches(".json").to_string(), value);
            found = true;
        }
    }
    if !found {
        bail!(
            "no reports found under {}; run the pipeline stages first",
            ws.out_dir.display()
        );
    }
    ws.write_json("report.json", &serde_json::Value::Object(report))?;

    let mut manifest = ws.manifest("report");
    manifest.record_output("report.json");
    manifest.write(&ws.out_dir)?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct AssessTimings {
    classify_seconds: f64,
    verify_seconds: f64,
    explain_seconds: f64,
    predict_ms_per_post: f64,
}

/// The full downstream pipeline in one pass: classify, verify, rank,
/// correlate, explain.
pub fn cmd_assess(ws: &Workspace) -> Result<()> {
    use credscore_core::classify::Classifier;

    let classify_start = Instant::now();
    let run = run_classification(ws)?;
    let classify_seconds = classify_start.elapsed().as_secs_f64();
    write_classifications(ws, &run)?;

    let verify_start = Instant::now();
    let outcomes = run_verification(ws, &run.classifications)?;
    let verify_seconds = verify_start.elapsed().as_secs_f64();
    ws.write_jsonl("outcomes.jsonl", &outcomes)?;

    let advisors: Vec<String> = run
        .classifications
        .iter()
        .map(|(r, _)| r.advisor_id.clone())
        .collect();
    let rankings = build_rankings(&advisors, &outcomes);
    ws.write_json("rankings.json", &rankings)?;
    ws.write_text("rankings.csv", &rankings_csv(&rankings))?;

    let social = load_social(ws)?;
    let table = correlate_metrics(&rankings, &social, ws.config().correlation_method);
    ws.write_json("correlations.json", &table)?;
    ws.write_text("correlations.csv", &correlations_csv(&table))?;

    let explain_start = Instant::now();
    let explanations = run_explanations(ws, &run)?;
    let explain_seconds = explain_start.elapsed().as_secs_f64();
    ws.write_jsonl("explanations.jsonl", &explanations)?;

    // raw model latency, measured apart from the deterministic reports
    let predict_start = Instant::now();
    for fp in &run.featurized {
        run.artifacts.model.predict(&fp.dense)?;
    }
    let predict_ms_per_post =
        predict_start.elapsed().as_secs_f64() * 1000.0 / run.featurized.len().max(1) as f64;
    ws.write_json(
        "timings.json",
        &AssessTimings {
            classify_seconds,
            verify_seconds,
            explain_seconds,
            predict_ms_per_post,
        },
    )?;

    let mut manifest = ws.manifest("assess");
    manifest.record_input("posts", &ws.posts_path())?;
    manifest.record_input("model", &ws.artifacts_dir().join("model.json"))?;
    manifest.record_input("lexicons", &ws.artifacts_dir().join("lexicons.json"))?;
    manifest.record_input(
        "vocabularies",
        &ws.artifacts_dir().join("vocabularies.json"),
    )?;
    if let Some(social_path) = &ws.config().paths.social_metrics {
        manifest.record_input("social_metrics", &ws.loaded.resolve(social_path))?;
    }
    for output in [
        "classifications.jsonl",
        "summary.json",
        "outcomes.jsonl",
        "rankings.json",
        "rankings.csv",
        "correlations.json",
        "correlations.csv",
        "explanations.jsonl",
    ] {
        manifest.record_output(output);
    }
    manifest.write(&ws.out_dir)?;

    log::info!(
        "assessed {} posts for {} advisors",
        run.classifications.len(),
        rankings.len()
    );
    Ok(())
}
