//! Data model and ingestion: posts, labels, price bars, ticker dictionaries,
//! and advisor social metrics.
//!
//! Posts travel as JSON lines (one record per line). Price series are CSV with
//! a `date,open,high,low,close` header. Ticker dictionaries are two-column
//! `alias,ticker` CSV files merged with last-file-wins precedence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Forecast category. The variant order (drop < rise < other) is frozen and
/// used for every deterministic tie-break in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "drop")]
    ShortTermDrop,
    #[serde(rename = "rise")]
    ShortTermRise,
    #[serde(rename = "other")]
    Other,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::ShortTermDrop,
        Category::ShortTermRise,
        Category::Other,
    ];

    /// Index in the frozen class order.
    pub fn index(self) -> usize {
        match self {
            Category::ShortTermDrop => 0,
            Category::ShortTermRise => 1,
            Category::Other => 2,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Category::ShortTermDrop => "short-term drop",
            Category::ShortTermRise => "short-term rise",
            Category::Other => "other",
        };
        f.write_str(name)
    }
}

/// One social-media message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub advisor_id: String,
    pub published_at: DateTime<FixedOffset>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cashtags: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hashtags: Vec<String>,
}

impl Post {
    /// Calendar date of publication in the post's own UTC offset. The
    /// verification rule operates on trading days, so the local date of the
    /// posting venue is the reference.
    pub fn publish_date(&self) -> NaiveDate {
        self.published_at.date_naive()
    }
}

/// A post as ingested: the label is optional so prediction-only corpora load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    #[serde(flatten)]
    pub post: Post,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Category>,
}

/// A post paired with its expert annotation; required for training.
#[derive(Debug, Clone)]
pub struct LabeledPost {
    pub post: Post,
    pub label: Category,
}

/// Demand a label on every record, or report the first offending post id.
pub fn require_labels(records: &[PostRecord]) -> Result<Vec<LabeledPost>> {
    records
        .iter()
        .map(|r| match r.label {
            Some(label) => Ok(LabeledPost {
                post: r.post.clone(),
                label,
            }),
            None => Err(Error::Invalid(format!(
                "post {} has no label; training requires labeled posts",
                r.post.id
            ))),
        })
        .collect()
}

/// Daily OHLC bar. Prices are strictly positive and the low/high bracket the
/// open and close.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl PriceBar {
    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.open > 0.0 && self.high > 0.0 && self.low > 0.0 && self.close > 0.0) {
            return Err("prices must be strictly positive".into());
        }
        if self.low > self.high {
            return Err("low>high".into());
        }
        if self.low > self.open.min(self.close) {
            return Err("low above open/close".into());
        }
        if self.high < self.open.max(self.close) {
            return Err("high below open/close".into());
        }
        Ok(())
    }
}

/// Date-ordered daily bars for one ticker. Dates strictly increase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    pub bars: Vec<PriceBar>,
}

impl PriceSeries {
    /// Build a series from unsorted bars, sorting by date and rejecting
    /// duplicate dates.
    pub fn new(ticker: impl Into<String>, mut bars: Vec<PriceBar>) -> Result<Self> {
        bars.sort_by_key(|b| b.date);
        for pair in bars.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(Error::Invalid(format!(
                    "duplicate price date {}",
                    pair[0].date
                )));
            }
        }
        Ok(PriceSeries {
            ticker: ticker.into(),
            bars,
        })
    }

    /// Close of the last bar dated on or before `date`, with its date.
    pub fn close_on_or_before(&self, date: NaiveDate) -> Option<(NaiveDate, f64)> {
        self.bars
            .iter()
            .take_while(|b| b.date <= date)
            .last()
            .map(|b| (b.date, b.close))
    }

    /// Bars restricted to the inclusive date range.
    pub fn slice(&self, from: NaiveDate, to: NaiveDate) -> Vec<PriceBar> {
        self.bars
            .iter()
            .copied()
            .filter(|b| b.date >= from && b.date <= to)
            .collect()
    }
}

/// Alias → canonical ticker map; lookups are case-insensitive and canonical
/// tickers are uppercase.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TickerDictionary {
    aliases: BTreeMap<String, String>,
}

impl TickerDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alias: &str, ticker: &str) {
        self.aliases
            .insert(alias.trim().to_lowercase(), ticker.trim().to_uppercase());
    }

    pub fn resolve(&self, alias: &str) -> Option<&str> {
        self.aliases
            .get(&alias.trim().to_lowercase())
            .map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.aliases.is_empty()
    }

    pub fn len(&self) -> usize {
        self.aliases.len()
    }

    /// Aliases in sorted order, each with its canonical ticker.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.aliases.iter().map(|(a, t)| (a.as_str(), t.as_str()))
    }

    /// Canonical tickers known to the dictionary.
    pub fn tickers(&self) -> BTreeSet<String> {
        self.aliases.values().cloned().collect()
    }
}

/// Advisor account statistics. Values are stored verbatim: real exports
/// contain rows where the reported average exceeds the reported maximum, so
/// no avg<=max check is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialMetrics {
    pub advisor_id: String,
    pub followers: f64,
    pub retweets_avg: f64,
    pub retweets_max: f64,
    pub likes_avg: f64,
    pub likes_max: f64,
    pub replies_avg: f64,
    pub replies_max: f64,
}

impl SocialMetrics {
    /// Metric value by report row name.
    pub fn get(&self, metric: &str) -> Option<f64> {
        Some(match metric {
            "followers" => self.followers,
            "retweets_avg" => self.retweets_avg,
            "retweets_max" => self.retweets_max,
            "likes_avg" => self.likes_avg,
            "likes_max" => self.likes_max,
            "replies_avg" => self.replies_avg,
            "replies_max" => self.replies_max,
            _ => return None,
        })
    }
}

/// Row order of the social-metric correlation report.
pub const SOCIAL_METRIC_NAMES: [&str; 7] = [
    "followers",
    "retweets_avg",
    "retweets_max",
    "likes_avg",
    "likes_max",
    "replies_avg",
    "replies_max",
];

/// Load a JSON-lines post file. Every line must parse; errors carry the
/// 1-based line number. Post ids must be unique across the file.
pub fn load_posts(path: impl AsRef<Path>) -> Result<Vec<PostRecord>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&shown, e))?;
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(&shown, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PostRecord = serde_json::from_str(&line)
            .map_err(|e| Error::malformed(&shown, lineno, friendly_json_error(&e, &line)))?;
        if record.post.text.trim().is_empty() {
            return Err(Error::malformed(&shown, lineno, "empty text"));
        }
        if !seen.insert(record.post.id.clone()) {
            return Err(Error::malformed(
                &shown,
                lineno,
                format!("duplicate id {}", record.post.id),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

/// Rewrite a post collection as JSON lines. Loading the result yields
/// identical records.
pub fn save_posts(path: impl AsRef<Path>, records: &[PostRecord]) -> Result<()> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut file = File::create(path).map_err(|e| Error::io(&shown, e))?;
    for record in records {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Invalid(format!("serialize post {}: {e}", record.post.id)))?;
        writeln!(file, "{line}").map_err(|e| Error::io(&shown, e))?;
    }
    Ok(())
}

fn friendly_json_error(err: &serde_json::Error, line: &str) -> String {
    // serde reports a missing struct field as "missing field `text`"; strip
    // the backticks so messages read "missing text".
    let msg = err.to_string();
    if let Some(rest) = msg.strip_prefix("missing field `") {
        if let Some(field) = rest.split('`').next() {
            return format!("missing {field}");
        }
    }
    let _ = line;
    msg.split(" at line ").next().unwrap_or(&msg).to_string()
}

/// Load one ticker's daily bars from `date,open,high,low,close` CSV. Rows may
/// arrive out of order; the result is sorted ascending. Duplicate dates and
/// bars violating the OHLC invariants are rejected with their 1-based data-row
/// number.
pub fn load_price_csv(path: impl AsRef<Path>, ticker: &str) -> Result<PriceSeries> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Invalid(format!("{shown}: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Invalid(format!("{shown}: {e}")))?
        .clone();
    let expected = ["date", "open", "high", "low", "close"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::Invalid(format!(
            "{shown}: expected header date,open,high,low,close, got {}",
            got.join(",")
        )));
    }

    let mut bars = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let rowno = idx + 1;
        let row = row.map_err(|e| Error::malformed(&shown, rowno, e.to_string()))?;
        let date: NaiveDate = row[0]
            .parse()
            .map_err(|_| Error::malformed(&shown, rowno, format!("bad date {:?}", &row[0])))?;
        let mut nums = [0f64; 4];
        for (slot, field) in nums.iter_mut().zip(row.iter().skip(1)) {
            *slot = field
                .parse()
                .map_err(|_| Error::malformed(&shown, rowno, format!("bad price {field:?}")))?;
        }
        let bar = PriceBar {
            date,
            open: nums[0],
            high: nums[1],
            low: nums[2],
            close: nums[3],
        };
        bar.validate()
            .map_err(|msg| Error::malformed(&shown, rowno, format!("row {rowno}: {msg}")))?;
        bars.push(bar);
    }
    PriceSeries::new(ticker, bars)
}

/// Merge alias→ticker CSV files into one dictionary. Later files override
/// earlier files on alias collision. An empty path list is an error.
pub fn load_ticker_dictionary(paths: &[impl AsRef<Path>]) -> Result<TickerDictionary> {
    if paths.is_empty() {
        return Err(Error::Invalid(
            "no ticker dictionary files provided".into(),
        ));
    }
    let mut dict = TickerDictionary::new();
    for path in paths {
        let path = path.as_ref();
        let shown = path.display().to_string();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Invalid(format!("{shown}: {e}")))?;
        for (idx, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::malformed(&shown, idx + 1, e.to_string()))?;
            if row.len() < 2 || row[0].is_empty() || row[1].is_empty() {
                return Err(Error::malformed(
                    &shown,
                    idx + 1,
                    "expected alias,ticker",
                ));
            }
            dict.insert(&row[0], &row[1]);
        }
    }
    if dict.is_empty() {
        return Err(Error::Invalid("ticker dictionary is empty".into()));
    }
    Ok(dict)
}

/// Load advisor social metrics from CSV with header
/// `advisor_id,followers,retweets_avg,retweets_max,likes_avg,likes_max,replies_avg,replies_max`.
pub fn load_social_metrics(path: impl AsRef<Path>) -> Result<Vec<SocialMetrics>> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Invalid(format!("{shown}: {e}")))?;
    let mut out = Vec::new();
    for (idx, row) in reader.deserialize::<SocialMetrics>().enumerate() {
        let metrics = row.map_err(|e| Error::malformed(&shown, idx + 1, e.to_string()))?;
        let all = [
            metrics.followers,
            metrics.retweets_avg,
            metrics.retweets_max,
            metrics.likes_avg,
            metrics.likes_max,
            metrics.replies_avg,
            metrics.replies_max,
        ];
        if all.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::malformed(
                &shown,
                idx + 1,
                format!("negative or non-finite metric for {}", metrics.advisor_id),
            ));
        }
        out.push(metrics);
    }
    Ok(out)
}
