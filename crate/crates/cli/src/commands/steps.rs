//! Pipeline steps shared by the per-stage commands and `assess`.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use chrono::Duration;

use credscore_core::corpus::{load_social_metrics, Category, SocialMetrics};
use credscore_core::explain::{explain_post, Explanation};
use credscore_core::insight::CorrelationTable;
use credscore_core::verify::{
    assess_advisor, verify_forecast, CredibilityRank, ForecastOutcome, IndeterminateReason,
};

use crate::workspace::{
    classify_all, featurize, ClassificationRecord, FeaturizedPost, OutcomeRecord, TrainArtifacts,
    Workspace,
};

pub struct ClassifiedRun {
    pub artifacts: TrainArtifacts,
    pub featurized: Vec<FeaturizedPost>,
    pub classifications: Vec<(ClassificationRecord, credscore_core::classify::HybridOutcome)>,
}

/// Load artifacts and posts, featurize, and hybrid-classify everything.
pub fn run_classification(ws: &Workspace) -> Result<ClassifiedRun> {
    let artifacts = TrainArtifacts::load(&ws.artifacts_dir())?;
    let records = ws.load_posts()?;
    let layout = artifacts.layout();
    let featurized = featurize(ws, &records, &artifacts.vocabularies, &layout);
    let classifications = classify_all(&featurized, &artifacts)?;
    Ok(ClassifiedRun {
        artifacts,
        featurized,
        classifications,
    })
}

/// Verify every drop/rise classification against the price provider, one
/// outcome per (post, ticker). Posts without tickers and tickers without
/// price data yield indeterminate outcomes; the run continues.
pub fn run_verification(
    ws: &Workspace,
    classifications: &[(ClassificationRecord, credscore_core::classify::HybridOutcome)],
) -> Result<Vec<OutcomeRecord>> {
    let provider = ws.provider()?;
    let settings = ws.config().verification.build()?;
    let mut outcomes = Vec::new();
    for (record, _) in classifications {
        if record.category == Category::Other {
            continue;
        }
        if record.tickers.is_empty() {
            outcomes.push(OutcomeRecord {
                advisor_id: record.advisor_id.clone(),
                outcome: ForecastOutcome::indeterminate(
                    &record.post_id,
                    "",
                    record.category,
                    IndeterminateReason::NoTicker,
                ),
            });
            continue;
        }
        let from = record.publish_date - Duration::days(30);
        let to = record.publish_date
            + Duration::days(i64::from(ws.config().verification.window_weeks) * 7 + 7);
        for ticker in &record.tickers {
            let outcome = match provider.get_series(ticker, from, to) {
                Ok(series) => verify_forecast(
                    &record.post_id,
                    record.category,
                    &series,
                    record.publish_date,
                    &settings,
                ),
                Err(err) => {
                    log::warn!("{}: {ticker}: {err}; marking indeterminate", record.post_id);
                    ForecastOutcome::indeterminate(
                        &record.post_id,
                        ticker,
                        record.category,
                        IndeterminateReason::NoPriceData,
                    )
                }
            };
            outcomes.push(OutcomeRecord {
                advisor_id: record.advisor_id.clone(),
                outcome,
            });
        }
    }
    Ok(outcomes)
}

/// Per-advisor ranks over the advisor universe (advisors with no verified
/// forecasts still appear, with absent qualities). Sorted by advisor id.
pub fn build_rankings(advisors: &[String], outcomes: &[OutcomeRecord]) -> Vec<CredibilityRank> {
    let mut universe: Vec<String> = advisors.to_vec();
    universe.extend(outcomes.iter().map(|o| o.advisor_id.clone()));
    universe.sort();
    universe.dedup();

    universe
        .into_iter()
        .map(|advisor_id| {
            let theirs: Vec<ForecastOutcome> = outcomes
                .iter()
                .filter(|o| o.advisor_id == advisor_id)
                .map(|o| o.outcome.clone())
                .collect();
            assess_advisor(&advisor_id, &theirs)
        })
        .collect()
}

pub fn load_social(ws: &Workspace) -> Result<Vec<SocialMetrics>> {
    let path = ws
        .config()
        .paths
        .social_metrics
        .as_ref()
        .context("paths.social_metrics is required for correlations")?;
    Ok(load_social_metrics(ws.loaded.resolve(path))?)
}

/// Explain every classified post, in input order.
pub fn run_explanations(ws: &Workspace, run: &ClassifiedRun) -> Result<Vec<Explanation>> {
    let layout = run.artifacts.layout();
    let mut explanations = Vec::with_capacity(run.classifications.len());
    for (fp, (record, outcome)) in run.featurized.iter().zip(&run.classifications) {
        let explanation = explain_post(
            &record.post_id,
            &fp.record.post.text,
            outcome,
            &fp.dense,
            &run.artifacts.model,
            &layout,
            &run.artifacts.term_freqs,
            &ws.template,
            &ws.config().explainer,
            ws.seed,
        )?;
        explanations.push(explanation);
    }
    Ok(explanations)
}

fn fmt_quality(q: Option<f64>) -> String {
    q.map_or(String::new(), |v| format!("{:.2}", v * 100.0))
}

/// Rankings table as CSV, qualities in percent, absent qualities as empty
/// cells.
pub fn rankings_csv(ranks: &[CredibilityRank]) -> String {
    let mut body = String::from(
        "advisor_id,drop_quality_pct,rise_quality_pct,global_quality_pct,\
         drop_successes,drop_verified,rise_successes,rise_verified,indeterminate\n",
    );
    for rank in ranks {
        body.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            rank.advisor_id,
            fmt_quality(rank.drop_quality),
            fmt_quality(rank.rise_quality),
            fmt_quality(rank.global_quality),
            rank.drop_successes,
            rank.drop_verified,
            rank.rise_successes,
            rank.rise_verified,
            rank.indeterminate,
        ));
    }
    body
}

/// Correlation table as CSV, one row per social metric, `NA` for undefined
/// cells.
pub fn correlations_csv(table: &CorrelationTable) -> String {
    let cell = |c: &credscore_core::insight::CorrelationCell| {
        c.r.map_or("NA".to_string(), |r| format!("{r:.3}"))
    };
    let mut body = String::from("metric,drop,rise,global\n");
    for row in &table.rows {
        body.push_str(&format!(
            "{},{},{},{}\n",
            row.metric,
            cell(&row.drop),
            cell(&row.rise),
            cell(&row.global)
        ));
    }
    body
}

/// Per-class evaluation metrics as CSV (percent).
pub fn eval_csv(report: &credscore_core::classify::EvalReport) -> String {
    let mut body = String::from("class,precision_pct,recall_pct,f1_pct,undefined\n");
    for (name, metrics) in [("drop", &report.drop), ("rise", &report.rise)] {
        let undefined = [
            metrics.precision.undefined.then_some("precision"),
            metrics.recall.undefined.then_some("recall"),
            metrics.f1.undefined.then_some("f1"),
        ]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join(";");
        body.push_str(&format!(
            "{},{:.2},{:.2},{:.2},{}\n",
            name, metrics.precision.value, metrics.recall.value, metrics.f1.value, undefined
        ));
    }
    body
}

/// Lemma frequency table for char-gram → word mapping.
pub fn term_frequencies(featurized: &[FeaturizedPost]) -> BTreeMap<String, u64> {
    let mut freqs = BTreeMap::new();
    for fp in featurized {
        for token in &fp.clean.tokens {
            *freqs.entry(token.clone()).or_insert(0) += 1;
        }
    }
    freqs
}
