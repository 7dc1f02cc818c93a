//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its runtime. Tolerances and time budgets are pinned in
//! the assertions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use chrono::{Duration as CDuration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use credscore_core::classify::{
    hybrid_classify, stratified_kfold, train, Algorithm, ClassificationSource, Classifier,
    HyperValue, ModelSpec,
};
use credscore_core::corpus::{Category, PriceBar, PriceSeries};
use credscore_core::explain::{
    chargram_to_word, fit_surrogate, perturb, render, top_features, ExplanationTemplate,
};
use credscore_core::features::{
    count_signed_quantities, fit_vectorizer, flesch_reading_ease, mcalpine_eflaw,
    reading_time_ms, vectorize, VectorizerConfig, VectorizerMode,
};
use credscore_core::insight::{correlate_metrics, pearson, CorrelationMethod};
use credscore_core::lexicon::{induce_lexicons, LexiconTerm};
use credscore_core::verify::{
    assess_advisor, trading_window, verify_forecast, ForecastOutcome, ForecastStatus,
    VerificationConfig,
};

fn assert_close(actual: f64, expected: f64, what: &str) {
    let tolerance = 1e-9 * expected.abs().max(1.0);
    assert!(
        (actual - expected).abs() <= tolerance,
        "{what}: {actual} vs {expected}"
    );
}

fn pass(criterion: u32, name: &str, started: Instant, budget_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        elapsed < budget_s,
        "criterion {criterion} took {elapsed:.2}s, budget {budget_s}s"
    );
    println!("[acceptance] criterion {criterion} ({name}): PASS ({elapsed:.2}s)");
}

// --- criterion 1: formula fidelity --------------------------------------

struct FormulaRow {
    text: &'static str,
    words: u32,
    sentences: u32,
    syllables: u32,
    miniwords: u32,
    chars: u32,
    quantities: (u32, u32, u32, u32),
}

/// Hand-counted fixture rows: word, sentence, vowel-group syllable,
/// miniword, and character tallies were derived manually from each text.
const FORMULA_ROWS: [FormulaRow; 20] = [
    FormulaRow { text: "go", words: 1, sentences: 1, syllables: 1, miniwords: 1, chars: 2, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "mercado", words: 1, sentences: 1, syllables: 3, miniwords: 0, chars: 7, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "el mercado sube.", words: 3, sentences: 1, syllables: 6, miniwords: 1, chars: 16, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "hoy sube. ayer baja.", words: 4, sentences: 2, syllables: 7, miniwords: 1, chars: 20, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "uno dos tres cuatro cinco.", words: 5, sentences: 1, syllables: 8, miniwords: 2, chars: 26, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "sube 3% hoy", words: 3, sentences: 1, syllables: 3, miniwords: 2, chars: 11, quantities: (0, 0, 1, 0) },
    FormulaRow { text: "cae -2% ahora", words: 3, sentences: 1, syllables: 4, miniwords: 2, chars: 13, quantities: (0, 0, 0, 1) },
    FormulaRow { text: "vale 14,73€ ya", words: 3, sentences: 1, syllables: 3, miniwords: 1, chars: 14, quantities: (1, 0, 0, 0) },
    // the "." inside "-1.5$" is a sentence splitter under the [.!?] rule
    FormulaRow { text: "pierde -1.5$ neto", words: 3, sentences: 2, syllables: 4, miniwords: 0, chars: 17, quantities: (0, 1, 0, 0) },
    FormulaRow { text: "gana 5% pierde -3% y 2,10€ mas", words: 7, sentences: 1, syllables: 5, miniwords: 4, chars: 30, quantities: (1, 0, 1, 1) },
    FormulaRow { text: "que dia tan bueno", words: 4, sentences: 1, syllables: 5, miniwords: 3, chars: 17, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "analisis tecnico del dia.", words: 4, sentences: 1, syllables: 9, miniwords: 1, chars: 25, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "a e i o u", words: 5, sentences: 1, syllables: 5, miniwords: 5, chars: 9, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "xyz", words: 1, sentences: 1, syllables: 0, miniwords: 1, chars: 3, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "Esto es una prueba. Fin.", words: 5, sentences: 2, syllables: 8, miniwords: 2, chars: 24, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "no", words: 1, sentences: 1, syllables: 1, miniwords: 1, chars: 2, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "12% -12% 12€ -12€", words: 4, sentences: 1, syllables: 0, miniwords: 2, chars: 17, quantities: (1, 1, 1, 1) },
    FormulaRow { text: "hola! que tal? bien.", words: 4, sentences: 3, syllables: 5, miniwords: 1, chars: 20, quantities: (0, 0, 0, 0) },
    FormulaRow { text: "precio objetivo 4,50€ y stop 4,20€ ya", words: 7, sentences: 1, syllables: 8, miniwords: 2, chars: 37, quantities: (2, 0, 0, 0) },
    FormulaRow { text: "Último test rápido", words: 3, sentences: 1, syllables: 7, miniwords: 0, chars: 18, quantities: (0, 0, 0, 0) },
];

#[test]
fn criterion_01_formula_fidelity() {
    let started = Instant::now();
    for row in &FORMULA_ROWS {
        let words = f64::from(row.words);
        let sentences = f64::from(row.sentences);
        let expected_fre =
            206.835 - 1.015 * (words / sentences) - 84.6 * (f64::from(row.syllables) / words);
        let expected_mer = (words + f64::from(row.miniwords)) / sentences;
        let expected_rt = f64::from(row.chars) * 14.69;

        assert_close(
            flesch_reading_ease(row.text).unwrap(),
            expected_fre,
            &format!("FRE of {:?}", row.text),
        );
        assert_close(
            mcalpine_eflaw(row.text).unwrap(),
            expected_mer,
            &format!("MER of {:?}", row.text),
        );
        assert_close(
            reading_time_ms(row.text),
            expected_rt,
            &format!("reading time of {:?}", row.text),
        );
        let q = count_signed_quantities(row.text);
        assert_eq!(
            (q.pos_num, q.neg_num, q.pos_per, q.neg_per),
            row.quantities,
            "quantities of {:?}",
            row.text
        );
    }
    pass(1, "formula fidelity", started, 1.0);
}

// --- criterion 2: vectorizer df contract ---------------------------------

/// Independent gram extraction for the recount oracle.
fn oracle_grams(mode: VectorizerMode, (lo, hi): (usize, usize), text: &str) -> Vec<String> {
    let mut grams = Vec::new();
    match mode {
        VectorizerMode::Word => {
            let tokens: Vec<&str> = text.split_whitespace().collect();
            for n in lo..=hi {
                if n >= 1 && n <= tokens.len() {
                    for start in 0..=tokens.len() - n {
                        grams.push(tokens[start..start + n].join(" "));
                    }
                }
            }
        }
        VectorizerMode::Char => {
            let chars: Vec<char> = text
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ")
                .chars()
                .collect();
            for n in lo..=hi {
                if n >= 1 && n <= chars.len() {
                    for start in 0..=chars.len() - n {
                        grams.push(chars[start..start + n].iter().collect());
                    }
                }
            }
        }
        VectorizerMode::CharWb => {
            for word in text.split_whitespace() {
                let padded: Vec<char> = format!(" {word} ").chars().collect();
                for n in lo..=hi {
                    if padded.len() > n {
                        for start in 0..=padded.len() - n {
                            grams.push(padded[start..start + n].iter().collect());
                        }
                    } else {
                        grams.push(padded.iter().collect());
                        break;
                    }
                }
            }
        }
    }
    grams
}

#[test]
fn criterion_02_vectorizer_df_contract() {
    let started = Instant::now();
    let pool = [
        "alza", "baja", "mercado", "nivel", "zona", "rango", "sube", "cae", "volumen", "cierre",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_201);
    for case in 0..1000 {
        let n_docs = rng.gen_range(2..=8);
        let docs: Vec<String> = (0..n_docs)
            .map(|_| {
                let len = rng.gen_range(1..=6);
                (0..len)
                    .map(|_| pool[rng.gen_range(0..pool.len())])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let (mode, ngram_range) = match rng.gen_range(0..4) {
            0 => (VectorizerMode::Word, (1, 1)),
            1 => (VectorizerMode::Word, (1, 2)),
            2 => (VectorizerMode::Char, (3, 4)),
            _ => (VectorizerMode::CharWb, (3, 5)),
        };
        let min_df: f64 = rng.gen_range(0.01..0.4);
        let max_df = (min_df + rng.gen_range(0.2..0.6)).min(1.0);
        let config = VectorizerConfig {
            mode,
            ngram_range,
            min_df,
            max_df,
            max_features: None,
        };
        let Ok(vocab) = fit_vectorizer(&docs, &config) else {
            continue; // nothing inside bounds for this draw
        };

        let n = docs.len() as f64;
        let mut oracle_df = vec![0u32; vocab.len()];
        let mut oracle_counts: Vec<BTreeMap<u32, u32>> = Vec::with_capacity(docs.len());
        for doc in &docs {
            let mut per_doc: BTreeMap<u32, u32> = BTreeMap::new();
            for gram in oracle_grams(mode, ngram_range, doc) {
                if let Some(&index) = vocab.terms.get(&gram) {
                    *per_doc.entry(index).or_insert(0) += 1;
                }
            }
            for &index in per_doc.keys() {
                oracle_df[index as usize] += 1;
            }
            oracle_counts.push(per_doc);
        }

        for (term, &index) in &vocab.terms {
            let fraction = f64::from(oracle_df[index as usize]) / n;
            assert!(
                fraction >= min_df && fraction <= max_df,
                "case {case}: term {term:?} df {fraction} outside [{min_df}, {max_df}]"
            );
        }
        assert_eq!(oracle_df, vocab.doc_freq, "case {case}: df mismatch");
        for (doc, expected) in docs.iter().zip(&oracle_counts) {
            let counts = vectorize(doc, &vocab);
            assert_eq!(&counts.0, expected, "case {case}: counts mismatch");
        }
    }
    pass(2, "vectorizer df contract", started, 10.0);
}

// --- criterion 3: lexicon induction oracle --------------------------------

/// Brute-force unique-term induction, written independently of the
/// implementation: nested scans build per-term category membership, then
/// each category ranks its unique terms by total frequency.
fn oracle_lexicons(
    corpus: &[(Vec<String>, Category)],
    fraction: f64,
) -> BTreeMap<Category, Vec<LexiconTerm>> {
    let mut vocabulary: Vec<&str> = corpus
        .iter()
        .flat_map(|(tokens, _)| tokens.iter().map(String::as_str))
        .collect();
    vocabulary.sort_unstable();
    vocabulary.dedup();

    let mut out = BTreeMap::new();
    for category in Category::ALL {
        let mut candidates: Vec<(String, u64)> = Vec::new();
        for &term in &vocabulary {
            let in_this = corpus
                .iter()
                .any(|(tokens, c)| *c == category && tokens.iter().any(|t| t == term));
            let in_other = corpus
                .iter()
                .any(|(tokens, c)| *c != category && tokens.iter().any(|t| t == term));
            if in_this && !in_other {
                let freq = corpus
                    .iter()
                    .flat_map(|(tokens, _)| tokens.iter())
                    .filter(|t| *t == term)
                    .count() as u64;
                candidates.push((term.to_string(), freq));
            }
        }
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let keep = if candidates.is_empty() {
            0
        } else {
            (fraction * candidates.len() as f64).ceil() as usize
        };
        candidates.truncate(keep.max(usize::from(!candidates.is_empty())));
        out.insert(
            category,
            candidates
                .into_iter()
                .map(|(term, freq)| LexiconTerm { term, freq })
                .collect(),
        );
    }
    out
}

#[test]
fn criterion_03_lexicon_induction_oracle() {
    let started = Instant::now();
    let pool = [
        "alza", "baja", "plano", "fuerte", "nivel", "zona", "canal", "rotura", "apoyo", "techo",
        "giro", "rebote",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(33_003);
    for case in 0..500 {
        let n_posts = rng.gen_range(3..=50);
        let corpus: Vec<(Vec<String>, Category)> = (0..n_posts)
            .map(|_| {
                let len = rng.gen_range(1..=6);
                let tokens: Vec<String> = (0..len)
                    .map(|_| pool[rng.gen_range(0..pool.len())].to_string())
                    .collect();
                let category = Category::ALL[rng.gen_range(0..3)];
                (tokens, category)
            })
            .collect();
        let fraction = [0.1, 0.25, 0.5, 1.0][rng.gen_range(0..4)];

        let lexicons = induce_lexicons(&corpus, fraction).unwrap();
        let expected = oracle_lexicons(&corpus, fraction);
        for category in Category::ALL {
            assert_eq!(
                lexicons.terms(category),
                expected[&category].as_slice(),
                "case {case}: {category} lexicon mismatch"
            );
        }
        for a in Category::ALL {
            for b in Category::ALL {
                if a < b {
                    let sa = lexicons.term_set(a);
                    let sb = lexicons.term_set(b);
                    assert!(
                        sa.intersection(&sb).next().is_none(),
                        "case {case}: {a} and {b} lexica overlap"
                    );
                }
            }
        }
    }
    pass(3, "lexicon induction oracle", started, 10.0);
}

// --- criterion 4: classifier correctness -----------------------------------

#[test]
fn criterion_04_classifier_correctness() {
    let started = Instant::now();

    // Hand Bayes: two classes, alpha 1, counts give likelihoods
    // (1/2, 1/4, 1/4) and (1/9, 4/9, 4/9); probe [1,0,1] yields posterior
    // 81/113 for the first class.
    let x = vec![
        vec![2.0, 0.0, 1.0],
        vec![1.0, 1.0, 0.0],
        vec![0.0, 2.0, 1.0],
        vec![0.0, 1.0, 2.0],
    ];
    let y = vec![
        Category::ShortTermDrop,
        Category::ShortTermDrop,
        Category::ShortTermRise,
        Category::ShortTermRise,
    ];
    let spec = ModelSpec::new(Algorithm::Mnb)
        .with("alpha", HyperValue::Float(1.0))
        .with("fit_prior", HyperValue::Bool(true));
    let model = train(&spec, &x, &y, 0).unwrap();
    let scores = model.class_scores(&[1.0, 0.0, 1.0]).unwrap();
    assert_close(scores[0], 81.0 / 113.0, "MNB posterior drop");
    assert_close(scores[1], 32.0 / 113.0, "MNB posterior rise");

    // RF prediction = mode of per-tree votes on 100 probes
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut forest_x = Vec::new();
    let mut forest_y = Vec::new();
    for i in 0..60 {
        let base = match i % 3 {
            0 => [1.0, 0.0, 0.0],
            1 => [0.0, 1.0, 0.0],
            _ => [0.0, 0.0, 1.0],
        };
        let row: Vec<f64> = base
            .iter()
            .map(|v| v * 3.0 + rng.gen_range(-0.4..0.4))
            .collect();
        forest_x.push(row);
        forest_y.push(Category::ALL[i % 3]);
    }
    let rf_spec = ModelSpec::tuned(Algorithm::Rf).with("n_estimators", HyperValue::Int(31));
    let rf = train(&rf_spec, &forest_x, &forest_y, 2024).unwrap();
    let forest = rf.forest().expect("rf params");
    for _ in 0..100 {
        let probe: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..4.0)).collect();
        let votes = forest.tree_predictions(&probe);
        let mut counts = [0usize; 3];
        for v in &votes {
            counts[*v] += 1;
        }
        let mode = (0..3).max_by_key(|&c| (counts[c], std::cmp::Reverse(c))).unwrap();
        let (predicted, _) = rf.predict(&probe).unwrap();
        assert_eq!(predicted, rf.classes()[mode], "vote mode mismatch");
    }

    // stratified folds: class counts within one sample of exact proportion
    let mut labels = Vec::new();
    labels.extend(std::iter::repeat(Category::ShortTermDrop).take(47));
    labels.extend(std::iter::repeat(Category::ShortTermRise).take(33));
    labels.extend(std::iter::repeat(Category::Other).take(21));
    let folds = stratified_kfold(&labels, 10, 5).unwrap();
    let mut seen = vec![false; labels.len()];
    for fold in &folds {
        for &i in fold {
            assert!(!seen[i], "folds overlap");
            seen[i] = true;
        }
        for (class, total) in [
            (Category::ShortTermDrop, 47.0_f64),
            (Category::ShortTermRise, 33.0),
            (Category::Other, 21.0),
        ] {
            let in_fold = fold.iter().filter(|&&i| labels[i] == class).count() as f64;
            let exact = total / 10.0;
            assert!(
                (in_fold - exact).abs() <= 1.0,
                "{class}: {in_fold} vs exact {exact}"
            );
        }
    }
    assert!(seen.iter().all(|&s| s), "folds must cover all indices");

    // seed-fixed reruns are byte-identical
    let again = train(&rf_spec, &forest_x, &forest_y, 2024).unwrap();
    assert_eq!(rf.to_json().unwrap(), again.to_json().unwrap());

    pass(4, "classifier correctness", started, 60.0);
}

// --- criterion 5: hybrid coverage ------------------------------------------

#[test]
fn criterion_05_hybrid_coverage() {
    let started = Instant::now();

    // 100 posts, anchors planted in exactly 60: filler words rotate through
    // every category so only the anchors are category-unique.
    let fillers = [
        "mercado", "precio", "zona", "nivel", "sesion", "volumen", "rango", "cierre", "apertura",
        "banda",
    ];
    let plan: [(Category, usize, usize, &str); 3] = [
        (Category::ShortTermDrop, 30, 18, "plantcaida"),
        (Category::ShortTermRise, 35, 21, "plantsubida"),
        (Category::Other, 35, 21, "plantneutro"),
    ];
    let mut corpus: Vec<(Vec<String>, Category)> = Vec::new();
    let mut planted_flags = Vec::new();
    let mut cursor = 0usize;
    for (category, count, planted, anchor) in plan {
        for i in 0..count {
            let mut tokens: Vec<String> = (0..3)
                .map(|j| fillers[(cursor + j) % fillers.len()].to_string())
                .collect();
            cursor += 3;
            let is_planted = i < planted;
            if is_planted {
                tokens.push(anchor.to_string());
            }
            corpus.push((tokens, category));
            planted_flags.push(is_planted);
        }
    }
    assert_eq!(corpus.len(), 100);
    assert_eq!(planted_flags.iter().filter(|p| **p).count(), 60);

    let lexicons = induce_lexicons(&corpus, 0.10).unwrap();
    for (category, anchor) in [
        (Category::ShortTermDrop, "plantcaida"),
        (Category::ShortTermRise, "plantsubida"),
        (Category::Other, "plantneutro"),
    ] {
        assert_eq!(
            lexicons
                .terms(category)
                .iter()
                .map(|t| t.term.as_str())
                .collect::<Vec<_>>(),
            vec![anchor]
        );
    }

    // word-count features + a small model for the fallback posts
    let docs: Vec<String> = corpus.iter().map(|(t, _)| t.join(" ")).collect();
    let vocab = fit_vectorizer(
        &docs,
        &VectorizerConfig {
            mode: VectorizerMode::Word,
            ngram_range: (1, 1),
            min_df: 0.01,
            max_df: 1.0,
            max_features: None,
        },
    )
    .unwrap();
    let dense: Vec<Vec<f64>> = docs
        .iter()
        .map(|d| {
            let mut row = vec![0.0; vocab.len()];
            for (i, c) in vectorize(d, &vocab).iter() {
                row[i as usize] = f64::from(c);
            }
            row
        })
        .collect();
    let labels: Vec<Category> = corpus.iter().map(|(_, c)| *c).collect();
    let model = train(
        &ModelSpec::new(Algorithm::Mnb).with("alpha", HyperValue::Float(1.0)),
        &dense,
        &labels,
        9,
    )
    .unwrap();

    let mut lexicon_classified = 0usize;
    for (((tokens, category), row), planted) in
        corpus.iter().zip(&dense).zip(&planted_flags)
    {
        let outcome = hybrid_classify(tokens, row, &lexicons, &model).unwrap();
        if outcome.source == ClassificationSource::Lexicon {
            lexicon_classified += 1;
            assert_eq!(outcome.category, *category);
            assert!(planted, "unplanted post hit the lexicon stage");
        } else {
            assert!(!planted, "planted post missed the lexicon stage");
        }
    }
    assert_eq!(lexicon_classified, 60, "coverage must be exactly 60%");

    pass(5, "hybrid coverage", started, 5.0);
}

// --- criterion 6: verification oracle --------------------------------------

fn random_series(rng: &mut ChaCha8Rng, baseline: f64) -> PriceSeries {
    let publish: NaiveDate = "2023-03-10".parse().unwrap();
    let mut bars = vec![PriceBar {
        date: publish,
        open: baseline,
        high: baseline,
        low: baseline,
        close: baseline,
    }];
    let horizon = rng.gen_range(5..=32);
    for offset in 1..=horizon {
        if rng.gen_bool(0.2) {
            continue; // data gap
        }
        // cent prices within (0.55b, 1.45b): mirrored bars stay positive
        let cents = |r: &mut ChaCha8Rng| -> f64 {
            f64::from(r.gen_range(5500u32..=14500)) / 10000.0 * baseline
        };
        let a = cents(rng);
        let b = cents(rng);
        let (low, high) = if a <= b { (a, b) } else { (b, a) };
        let mid = (low + high) / 2.0;
        bars.push(PriceBar {
            date: publish + CDuration::days(offset),
            open: mid,
            high,
            low,
            close: mid,
        });
    }
    PriceSeries::new("TCK", bars).unwrap()
}

fn mirrored(series: &PriceSeries, baseline: f64) -> PriceSeries {
    let bars: Vec<PriceBar> = series
        .bars
        .iter()
        .map(|b| PriceBar {
            date: b.date,
            open: 2.0 * baseline - b.open,
            high: 2.0 * baseline - b.low,
            low: 2.0 * baseline - b.high,
            close: 2.0 * baseline - b.close,
        })
        .collect();
    PriceSeries::new(series.ticker.clone(), bars).unwrap()
}

#[test]
fn criterion_06_verification_oracle() {
    let started = Instant::now();
    let publish: NaiveDate = "2023-03-10".parse().unwrap();
    let baseline = 100.0;
    let config = VerificationConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(66_007);

    for case in 0..1000 {
        let series = random_series(&mut rng, baseline);
        for category in [Category::ShortTermDrop, Category::ShortTermRise] {
            let outcome = verify_forecast("p", category, &series, publish, &config);

            // brute-force day scan
            let mut expected: Option<NaiveDate> = None;
            for date in trading_window(publish, &config) {
                if let Some(bar) = series.bars.iter().find(|b| b.date == date) {
                    let hit = match category {
                        Category::ShortTermDrop => bar.low <= baseline * 0.97,
                        _ => bar.high >= baseline * 1.03,
                    };
                    if hit {
                        expected = Some(date);
                        break;
                    }
                }
            }
            assert_eq!(outcome.trigger_date, expected, "case {case} {category}");
            let expected_status = if expected.is_some() {
                ForecastStatus::Success
            } else {
                ForecastStatus::Failure
            };
            assert_eq!(outcome.status, expected_status, "case {case} {category}");
        }

        // mirror symmetry: reflecting prices around the baseline swaps the
        // two forecast directions
        let flipped = mirrored(&series, baseline);
        let drop = verify_forecast("p", Category::ShortTermDrop, &series, publish, &config);
        let rise_mirror =
            verify_forecast("p", Category::ShortTermRise, &flipped, publish, &config);
        assert_eq!(drop.status, rise_mirror.status, "case {case} mirror");
        assert_eq!(drop.trigger_date, rise_mirror.trigger_date);

        // threshold monotonicity: lowering the threshold never demotes a
        // success
        let mut prior_success = false;
        for threshold in [0.08, 0.05, 0.03, 0.01] {
            let config = VerificationConfig {
                threshold_fraction: threshold,
                ..VerificationConfig::default()
            };
            let status =
                verify_forecast("p", Category::ShortTermDrop, &series, publish, &config).status;
            if prior_success {
                assert_eq!(status, ForecastStatus::Success, "case {case} monotonicity");
            }
            prior_success = status == ForecastStatus::Success;
        }
    }

    // worked cases: a 4% dip succeeds, a 2.9% peak falls short
    let dip = PriceSeries::new(
        "TCK",
        vec![
            PriceBar { date: publish, open: 100.0, high: 100.0, low: 100.0, close: 100.0 },
            PriceBar {
                date: "2023-03-14".parse().unwrap(),
                open: 98.0,
                high: 99.0,
                low: 96.0,
                close: 98.0,
            },
        ],
    )
    .unwrap();
    let outcome = verify_forecast("p", Category::ShortTermDrop, &dip, publish, &config);
    assert_eq!(outcome.status, ForecastStatus::Success);
    assert_eq!(outcome.trigger_date, Some("2023-03-14".parse().unwrap()));

    let peak = PriceSeries::new(
        "TCK",
        vec![
            PriceBar { date: publish, open: 100.0, high: 100.0, low: 100.0, close: 100.0 },
            PriceBar {
                date: "2023-03-14".parse().unwrap(),
                open: 101.0,
                high: 102.9,
                low: 100.5,
                close: 102.0,
            },
        ],
    )
    .unwrap();
    let outcome = verify_forecast("p", Category::ShortTermRise, &peak, publish, &config);
    assert_eq!(outcome.status, ForecastStatus::Failure);

    pass(6, "verification oracle", started, 10.0);
}

// --- criterion 7: ranking arithmetic ----------------------------------------

#[test]
fn criterion_07_ranking_arithmetic() {
    let started = Instant::now();

    let outcome = |category: Category, status: ForecastStatus| ForecastOutcome {
        post_id: "p".into(),
        ticker: "T".into(),
        category,
        baseline_date: None,
        baseline_close: None,
        trigger_date: None,
        status,
        reason: None,
    };

    // hand ratio: 3 successes over 4 verified drops
    let outcomes = vec![
        outcome(Category::ShortTermDrop, ForecastStatus::Success),
        outcome(Category::ShortTermDrop, ForecastStatus::Success),
        outcome(Category::ShortTermDrop, ForecastStatus::Success),
        outcome(Category::ShortTermDrop, ForecastStatus::Failure),
    ];
    let rank = assess_advisor("a", &outcomes);
    assert_eq!(rank.drop_quality, Some(0.75));
    assert_eq!(rank.rise_quality, None);
    assert_eq!(rank.global_quality, Some(0.75));

    let mut rng = ChaCha8Rng::seed_from_u64(77_001);
    for case in 0..500 {
        let n = rng.gen_range(1..40);
        let outcomes: Vec<ForecastOutcome> = (0..n)
            .map(|_| {
                let category = if rng.gen_bool(0.5) {
                    Category::ShortTermDrop
                } else {
                    Category::ShortTermRise
                };
                let status = match rng.gen_range(0..3) {
                    0 => ForecastStatus::Success,
                    1 => ForecastStatus::Failure,
                    _ => ForecastStatus::Indeterminate,
                };
                outcome(category, status)
            })
            .collect();
        let rank = assess_advisor("a", &outcomes);

        // exact ratios recomputed by direct counting
        let count = |cat: Category, success: Option<bool>| {
            outcomes
                .iter()
                .filter(|o| {
                    o.category == cat
                        && match success {
                            Some(true) => o.status == ForecastStatus::Success,
                            Some(false) => o.status == ForecastStatus::Failure,
                            None => o.status != ForecastStatus::Indeterminate,
                        }
                })
                .count()
        };
        let dv = count(Category::ShortTermDrop, None);
        let ds = count(Category::ShortTermDrop, Some(true));
        let rv = count(Category::ShortTermRise, None);
        let rs = count(Category::ShortTermRise, Some(true));
        assert_eq!(rank.drop_quality, (dv > 0).then(|| ds as f64 / dv as f64));
        assert_eq!(rank.rise_quality, (rv > 0).then(|| rs as f64 / rv as f64));
        assert_eq!(
            rank.global_quality,
            (dv + rv > 0).then(|| (ds + rs) as f64 / (dv + rv) as f64)
        );

        // global lies between the defined category qualities
        if let Some(global) = rank.global_quality {
            let defined: Vec<f64> = [rank.drop_quality, rank.rise_quality]
                .into_iter()
                .flatten()
                .collect();
            let lo = defined.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(
                global >= lo - 1e-12 && global <= hi + 1e-12,
                "case {case}: global {global} outside [{lo}, {hi}]"
            );
        }
    }
    pass(7, "ranking arithmetic", started, 5.0);
}

// --- criterion 8: correlation ------------------------------------------------

#[test]
fn criterion_08_correlation() {
    let started = Instant::now();

    let xs = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    let linear: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
    let anti: Vec<f64> = xs.iter().map(|x| -x).collect();
    assert!((pearson(&xs, &linear).unwrap() - 1.0).abs() <= 1e-12);
    assert!((pearson(&xs, &anti).unwrap() + 1.0).abs() <= 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(88_011);
    for case in 0..1000 {
        let n = rng.gen_range(3..30);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let Ok(base) = pearson(&xs, &ys) else { continue };
        let scale = rng.gen_range(0.1..5.0);
        let shift = rng.gen_range(-20.0..20.0);
        let transformed: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
        let r = pearson(&transformed, &ys).unwrap();
        assert!((r - base).abs() < 1e-9, "case {case}: {r} vs {base}");
    }

    // report shape: 7 metric rows by 3 quality columns, high correlation for
    // metrics built proportional to quality
    let ranks: Vec<credscore_core::verify::CredibilityRank> = (0..4)
        .map(|i| {
            let q = 0.2 + 0.2 * f64::from(i);
            credscore_core::verify::CredibilityRank {
                advisor_id: format!("a{i}"),
                drop_quality: Some(q),
                rise_quality: Some(q / 2.0),
                global_quality: Some(q * 0.8),
                drop_successes: 0,
                drop_verified: 1,
                rise_successes: 0,
                rise_verified: 1,
                indeterminate: 0,
            }
        })
        .collect();
    let metrics: Vec<credscore_core::corpus::SocialMetrics> = (0..4)
        .map(|i| {
            let q = 0.2 + 0.2 * f64::from(i);
            credscore_core::corpus::SocialMetrics {
                advisor_id: format!("a{i}"),
                followers: 1000.0 * q,
                retweets_avg: 10.0 * q,
                retweets_max: 100.0 * q,
                likes_avg: 4.0 * q,
                likes_max: 40.0 * q,
                replies_avg: 1.0 * q,
                replies_max: 8.0 * q,
            }
        })
        .collect();
    let table = correlate_metrics(&ranks, &metrics, CorrelationMethod::Pearson);
    assert_eq!(table.rows.len(), 7);
    let expected_rows = [
        "followers",
        "retweets_avg",
        "retweets_max",
        "likes_avg",
        "likes_max",
        "replies_avg",
        "replies_max",
    ];
    for (row, expected) in table.rows.iter().zip(expected_rows) {
        assert_eq!(row.metric, expected);
        assert!((row.global.r.unwrap() - 1.0).abs() < 1e-9);
        assert!(row.drop.r.is_some() && row.rise.r.is_some());
    }

    pass(8, "correlation", started, 5.0);
}

// --- criterion 9: explainer faithfulness --------------------------------------

#[test]
fn criterion_09_explainer_faithfulness() {
    let started = Instant::now();

    // planted linear black boxes: the surrogate's |weight| ranking must
    // recover the true |coefficient| ranking
    let mut rng = ChaCha8Rng::seed_from_u64(99_021);
    let mut matches = 0usize;
    for case in 0..100 {
        let active = rng.gen_range(3..=8);
        let x = vec![1.0; active];
        let mut coefficients: Vec<f64> = (0..active)
            .map(|i| {
                let magnitude = 1.0 + 0.5 * i as f64;
                if rng.gen_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            })
            .collect();
        // shuffle magnitudes across positions
        for i in (1..coefficients.len()).rev() {
            coefficients.swap(i, rng.gen_range(0..=i));
        }
        let set = perturb(&x, 400, 1000 + case).unwrap();
        let score = |sample: &[f64]| -> f64 {
            sample
                .iter()
                .zip(&coefficients)
                .map(|(v, c)| if *v != 0.0 { *c } else { 0.0 })
                .sum::<f64>()
                + 0.25
        };
        let attributions = fit_surrogate(score, &set, None, 1e-3, |i| format!("f{i}"));
        let surrogate_order: Vec<usize> = top_features(&attributions, active)
            .attributions
            .iter()
            .map(|a| a.feature_index)
            .collect();
        let mut truth_order: Vec<usize> = (0..active).collect();
        truth_order.sort_by(|&a, &b| coefficients[b].abs().total_cmp(&coefficients[a].abs()));
        if surrogate_order == truth_order {
            matches += 1;
        }
    }
    assert!(matches >= 95, "ranking recovered in only {matches}/100 cases");

    // chargram mapping equals a brute-force substring scan
    let words = [
        ("alcista", 12u64),
        ("bajista", 7),
        ("mercado", 20),
        ("mercader", 20),
        ("soporte", 3),
        ("resistencia", 9),
        ("canal", 5),
        ("rotura", 2),
    ];
    let freqs: BTreeMap<String, u64> = words
        .iter()
        .map(|(w, f)| (w.to_string(), *f))
        .collect();
    let mut probes: Vec<String> = Vec::new();
    for (word, _) in &words {
        let chars: Vec<char> = word.chars().collect();
        for n in 3..=4 {
            for window in chars.windows(n) {
                probes.push(window.iter().collect());
            }
        }
    }
    probes.push("zzz".into());
    probes.push(" mer".into());
    probes.push("ista".into());
    for probe in &probes {
        let expected = {
            let needle = probe.trim();
            let mut containing: Vec<(&str, u64)> = words
                .iter()
                .filter(|(w, _)| w.contains(needle))
                .map(|(w, f)| (*w, *f))
                .collect();
            containing.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            containing
                .first()
                .map(|(w, _)| w.to_string())
                .unwrap_or_else(|| probe.clone())
        };
        assert_eq!(
            chargram_to_word(probe, &freqs),
            expected,
            "probe {probe:?}"
        );
    }

    // reference render, byte-exact
    let text = render(
        &ExplanationTemplate::default(),
        "#SANTANDER Bullish divergence monitoring 4.54 euros at close",
        Category::ShortTermRise,
        &["bullish".to_string(), "divergence".to_string()],
        &["Pos. num.".to_string()],
    );
    assert_eq!(
        text,
        "The classification of the post \"#SANTANDER Bullish divergence monitoring 4.54 euros \
         at close\" as short-term rise can be explained by the presence of these terms: \
         ['bullish', 'divergence']. Additionally, the process considered the following \
         features: ['Pos. num.']."
    );

    pass(9, "explainer faithfulness", started, 30.0);
}

// --- criterion 10: end-to-end determinism --------------------------------------

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), &target).unwrap();
        }
    }
}

fn run_cli(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_credscore"))
        .args(args)
        .status()
        .expect("spawn credscore");
    assert!(status.success(), "credscore {args:?} failed: {status}");
}

#[test]
fn criterion_10_end_to_end_determinism() {
    let started = Instant::now();

    let fixture = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo");
    let tmp = tempfile::tempdir().unwrap();
    let demo = tmp.path().join("demo");
    copy_dir(&fixture, &demo);
    let config = demo.join("config.json");
    let config_str = config.to_str().unwrap();

    run_cli(&["train", "--config", config_str]);

    let out_a = tmp.path().join("out_a");
    let out_b = tmp.path().join("out_b");
    let assess_started = Instant::now();
    run_cli(&["assess", "--config", config_str, "--out", out_a.to_str().unwrap()]);
    let assess_seconds = assess_started.elapsed().as_secs_f64();
    assert!(assess_seconds < 30.0, "assess took {assess_seconds:.1}s");
    run_cli(&["assess", "--config", config_str, "--out", out_b.to_str().unwrap()]);

    let mut compared = 0usize;
    for entry in std::fs::read_dir(&out_a).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().to_string_lossy().into_owned();
        if name == "timings.json" {
            continue; // wall-clock sidecar, excluded from the determinism contract
        }
        let a = std::fs::read(entry.path()).unwrap();
        let b = std::fs::read(out_b.join(&name))
            .unwrap_or_else(|_| panic!("{name} missing from second run"));
        assert_eq!(a, b, "{name} differs between identical runs");
        compared += 1;
    }
    assert!(compared >= 8, "expected a full report bundle, saw {compared} files");

    // per-post model latency from the run's own timing sidecar
    let timings: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_a.join("timings.json")).unwrap())
            .unwrap();
    let predict_ms = timings["predict_ms_per_post"].as_f64().unwrap();
    assert!(
        predict_ms < 50.0,
        "per-post prediction latency {predict_ms:.3} ms exceeds 50 ms"
    );

    pass(10, "end-to-end determinism", started, 30.0);
}
