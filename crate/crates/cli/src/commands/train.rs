//! Training: lexicon induction, stratified cross-validated evaluation of the
//! hybrid classifier, optional hyperparameter grid search, and persistence
//! of the final artifacts.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use credscore_core::classify::{
    evaluate, grid_search, hybrid_classify, stratified_kfold, train, Algorithm,
    ClassificationSource, Classifier, HyperValue, ModelSpec,
};
use credscore_core::corpus::{require_labels, Category};
use credscore_core::features::{build_feature_vector, FeatureLayout, VocabularySet};
use credscore_core::lexicon::induce_lexicons;
use credscore_core::preprocess::CleanPost;

use crate::commands::steps::{eval_csv, term_frequencies};
use crate::workspace::{featurize, TrainArtifacts, Workspace};

#[derive(Debug, Serialize)]
struct TrainSummary {
    algorithm: Algorithm,
    spec: ModelSpec,
    folds: usize,
    posts: usize,
    feature_count: usize,
    vocab_sizes: VocabSizes,
    lexicon_terms: usize,
    /// Fraction of CV test posts decided by the lexicon stage.
    cv_lexicon_coverage: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid_score: Option<f64>,
}

#[derive(Debug, Serialize)]
struct VocabSizes {
    char: usize,
    word: usize,
    char_wb: usize,
}

/// Wall times live in their own file so the metric report stays byte-stable
/// across reruns.
#[derive(Debug, Serialize)]
struct TrainTimings {
    fit_seconds: f64,
    predict_seconds_per_post: f64,
    cv_seconds: f64,
}

fn parse_grid_file(path: &Path) -> Result<(Algorithm, Vec<(String, Vec<HyperValue>)>)> {
    #[derive(serde::Deserialize)]
    struct GridFile {
        algorithm: Algorithm,
        grid: serde_json::Map<String, serde_json::Value>,
    }
    let contents = std::fs::read_to_string(path)
        .with_context(|| format!("reading grid {}", path.display()))?;
    let parsed: GridFile = serde_json::from_str(&contents)
        .with_context(|| format!("parsing grid {}", path.display()))?;
    let mut axes = Vec::new();
    for (name, values) in parsed.grid {
        let values: Vec<HyperValue> =
            serde_json::from_value(values).with_context(|| format!("grid axis {name}"))?;
        axes.push((name, values));
    }
    if axes.is_empty() {
        bail!("grid file lists no axes");
    }
    Ok((parsed.algorithm, axes))
}

/// Config classifier spec: tuned defaults for the algorithm, overridden by
/// any explicitly configured hyperparameters.
fn configured_spec(ws: &Workspace) -> ModelSpec {
    let mut spec = ModelSpec::tuned(ws.config().classifier.algorithm);
    for (name, value) in &ws.config().classifier.hyperparameters {
        spec.hyperparameters.insert(name.clone(), value.clone());
    }
    spec
}

pub fn cmd_train(ws: &Workspace, grid_path: Option<&Path>) -> Result<()> {
    let records = ws.load_posts()?;
    let labeled = require_labels(&records)?;
    let labels: Vec<Category> = labeled.iter().map(|l| l.label).collect();
    let cleaned: Vec<CleanPost> = labeled
        .iter()
        .map(|l| ws.pipeline.clean(&l.post, &ws.dictionary))
        .collect();
    let config = ws.config();

    // Optional grid search over a full-corpus design matrix (the headline CV
    // below refits vocabularies per fold).
    let mut grid_score = None;
    let spec = match grid_path {
        Some(path) => {
            let (algorithm, axes) = parse_grid_file(path)?;
            let docs: Vec<&str> = cleaned.iter().map(|c| c.clean_text.as_str()).collect();
            let vocabs = VocabularySet::fit(
                &docs,
                &config.vectorizers.char,
                &config.vectorizers.word,
                &config.vectorizers.char_wb,
            )?;
            let layout = FeatureLayout::from_vocabularies(&vocabs);
            let dense: Vec<Vec<f64>> = labeled
                .iter()
                .zip(&cleaned)
                .map(|(l, c)| layout.dense(&build_feature_vector(&ws.extractor, &l.post.text, c, &vocabs)))
                .collect();
            let (best, score) =
                grid_search(algorithm, &axes, &dense, &labels, config.folds, ws.seed)?;
            log::info!("grid search selected {best:?} with macro-F1 {score:.4}");
            grid_score = Some(score);
            best
        }
        None => configured_spec(ws),
    };

    // Hybrid cross-validation: lexica and vocabularies are induced on each
    // training split only.
    let cv_start = Instant::now();
    let folds = stratified_kfold(&labels, config.folds, ws.seed)?;
    let mut predictions: Vec<Option<Category>> = vec![None; labeled.len()];
    let mut lexicon_hits = 0usize;
    for fold in &folds {
        let test: BTreeSet<usize> = fold.iter().copied().collect();
        let train_idx: Vec<usize> = (0..labeled.len()).filter(|i| !test.contains(i)).collect();

        let token_corpus: Vec<(Vec<String>, Category)> = train_idx
            .iter()
            .map(|&i| (cleaned[i].tokens.clone(), labels[i]))
            .collect();
        let fold_lexicons = induce_lexicons(&token_corpus, config.lexicon_fraction)?;

        let train_docs: Vec<&str> = train_idx
            .iter()
            .map(|&i| cleaned[i].clean_text.as_str())
            .collect();
        let fold_vocabs = VocabularySet::fit(
            &train_docs,
            &config.vectorizers.char,
            &config.vectorizers.word,
            &config.vectorizers.char_wb,
        )?;
        let fold_layout = FeatureLayout::from_vocabularies(&fold_vocabs);
        let featurize_one = |i: usize| {
            fold_layout.dense(&build_feature_vector(
                &ws.extractor,
                &labeled[i].post.text,
                &cleaned[i],
                &fold_vocabs,
            ))
        };

        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| featurize_one(i)).collect();
        let train_y: Vec<Category> = train_idx.iter().map(|&i| labels[i]).collect();
        let model = train(&spec, &train_x, &train_y, ws.seed)?;

        for &i in fold {
            let outcome = hybrid_classify(
                &cleaned[i].tokens,
                &featurize_one(i),
                &fold_lexicons,
                &model,
            )?;
            if outcome.source == ClassificationSource::Lexicon {
                lexicon_hits += 1;
            }
            predictions[i] = Some(outcome.category);
        }
    }
    let cv_seconds = cv_start.elapsed().as_secs_f64();
    let predictions: Vec<Category> = predictions.into_iter().map(Option::unwrap).collect();
    let report = evaluate(&predictions, &labels)?;

    // Final artifacts over the full corpus.
    let lexicons = {
        let token_corpus: Vec<(Vec<String>, Category)> = cleaned
            .iter()
            .zip(&labels)
            .map(|(c, l)| (c.tokens.clone(), *l))
            .collect();
        induce_lexicons(&token_corpus, config.lexicon_fraction)?
    };
    let docs: Vec<&str> = cleaned.iter().map(|c| c.clean_text.as_str()).collect();
    let vocabularies = VocabularySet::fit(
        &docs,
        &config.vectorizers.char,
        &config.vectorizers.word,
        &config.vectorizers.char_wb,
    )?;
    let layout = FeatureLayout::from_vocabularies(&vocabularies);
    let dense: Vec<Vec<f64>> = labeled
        .iter()
        .zip(&cleaned)
        .map(|(l, c)| layout.dense(&build_feature_vector(&ws.extractor, &l.post.text, c, &vocabularies)))
        .collect();

    let fit_start = Instant::now();
    let model = train(&spec, &dense, &labels, ws.seed)?;
    let fit_seconds = fit_start.elapsed().as_secs_f64();

    let predict_start = Instant::now();
    for row in &dense {
        model.predict(row)?;
    }
    let predict_seconds_per_post = predict_start.elapsed().as_secs_f64() / dense.len() as f64;

    let featurized = featurize(ws, &records, &vocabularies, &layout);
    let artifacts = TrainArtifacts {
        model,
        lexicons,
        vocabularies,
        term_freqs: term_frequencies(&featurized),
    };
    artifacts.save(&ws.artifacts_dir())?;

    let summary = TrainSummary {
        algorithm: spec.algorithm,
        spec: spec.clone(),
        folds: config.folds,
        posts: labeled.len(),
        feature_count: layout.len(),
        vocab_sizes: VocabSizes {
            char: artifacts.vocabularies.char_grams.len(),
            word: artifacts.vocabularies.word_grams.len(),
            char_wb: artifacts.vocabularies.char_wb_grams.len(),
        },
        lexicon_terms: artifacts.lexicons.total_terms(),
        cv_lexicon_coverage: lexicon_hits as f64 / labeled.len() as f64,
        grid_score,
    };

    ws.write_json("eval_report.json", &report)?;
    ws.write_text("eval_report.csv", &eval_csv(&report))?;
    ws.write_json("train_summary.json", &summary)?;
    ws.write_json(
        "timings.json",
        &TrainTimings {
            fit_seconds,
            predict_seconds_per_post,
            cv_seconds,
        },
    )?;

    let mut manifest = ws.manifest("train");
    manifest.record_input("posts", &ws.posts_path())?;
    for output in [
        "eval_report.json",
        "eval_report.csv",
        "train_summary.json",
    ] {
        manifest.record_output(output);
    }
    manifest.write(&ws.out_dir)?;

    log::info!(
        "trained {} on {} posts; CV lexicon coverage {:.1}%",
        spec.algorithm,
        labeled.len(),
        summary.cv_lexicon_coverage * 100.0
    );
    Ok(())
}
