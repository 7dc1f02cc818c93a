//! Forecast verification against market data and per-advisor credibility
//! ranking.
//!
//! A drop (rise) forecast succeeds when some bar low (high) inside the
//! verification window reaches the threshold below (above) the baseline
//! close. The window spans the work weeks after publication: 5 weekday slots
//! per week, strictly after the publish date, with calendar holidays removed
//! (holidays shrink the window rather than extending it). Posts published on
//! non-trading days take the last prior trading close as baseline.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::corpus::{load_price_csv, Category, PriceBar, PriceSeries};
use crate::error::{Error, Result};

/// Which dates the exchange trades on.
pub trait TradingCalendar: Send + Sync {
    fn is_trading_day(&self, date: NaiveDate) -> bool;
}

/// Monday–Friday, no holidays.
#[derive(Debug, Clone, Default)]
pub struct WeekdayCalendar;

pub fn is_weekday(date: NaiveDate) -> bool {
    !matches!(date.weekday(), Weekday::Sat | Weekday::Sun)
}

impl TradingCalendar for WeekdayCalendar {
    fn is_trading_day(&self, date: NaiveDate) -> bool {
        is_weekday(date)
    }
}

/// Weekdays minus an explicit holiday set.
#[derive(Debug, Clone, Default)]
pub struct HolidayCalendar {
    pub holidays: BTreeSet<NaiveDate>,
}

impl TradingCalendar for HolidayCalendar {
    fn is_trading_day(&self, date: NaiveDate) -> bool {
        is_weekday(date) && !self.holidays.contains(&date)
    }
}

/// Serializable calendar description for config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CalendarSpec {
    Weekday,
    Holidays { holidays: Vec<NaiveDate> },
}

impl Default for CalendarSpec {
    fn default() -> Self {
        CalendarSpec::Weekday
    }
}

impl CalendarSpec {
    pub fn build(&self) -> Arc<dyn TradingCalendar> {
        match self {
            CalendarSpec::Weekday => Arc::new(WeekdayCalendar),
            CalendarSpec::Holidays { holidays } => Arc::new(HolidayCalendar {
                holidays: holidays.iter().copied().collect(),
            }),
        }
    }
}

/// Verification rule parameters.
#[derive(Clone)]
pub struct VerificationConfig {
    /// Relative move that confirms a forecast (0.03 = 3%).
    pub threshold_fraction: f64,
    /// Work weeks in the verification window.
    pub window_weeks: u32,
    pub calendar: Arc<dyn TradingCalendar>,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        VerificationConfig {
            threshold_fraction: 0.03,
            window_weeks: 3,
            calendar: Arc::new(WeekdayCalendar),
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_fraction > 0.0) {
            return Err(Error::Config("threshold_fraction must be positive".into()));
        }
        if self.window_weeks == 0 {
            return Err(Error::Config("window_weeks must be at least 1".into()));
        }
        Ok(())
    }
}

/// Trading dates strictly after `publish_date` covering `window_weeks` work
/// weeks: 5 weekday slots per week, with non-trading weekdays (holidays)
/// dropped from the result.
pub fn trading_window(publish_date: NaiveDate, config: &VerificationConfig) -> Vec<NaiveDate> {
    let slots = config.window_weeks as usize * 5;
    let mut dates = Vec::with_capacity(slots);
    let mut date = publish_date;
    let mut seen_slots = 0;
    while seen_slots < slots {
        date += Duration::days(1);
        if !is_weekday(date) {
            continue;
        }
        seen_slots += 1;
        if config.calendar.is_trading_day(date) {
            dates.push(date);
        }
    }
    dates
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForecastStatus {
    Success,
    Failure,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndeterminateReason {
    /// No bar on or before the publish date.
    NoBaseline,
    /// No bars inside the verification window.
    NoWindowData,
    /// The post was classified `other`; only drop/rise forecasts verify.
    NotAForecast,
    /// The post mentions no resolvable ticker.
    NoTicker,
    /// The price provider had no series for the ticker.
    NoPriceData,
}

/// Result of checking one (post, ticker) forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastOutcome {
    pub post_id: String,
    pub ticker: String,
    pub category: Category,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_close: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_date: Option<NaiveDate>,
    pub status: ForecastStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<IndeterminateReason>,
}

impl ForecastOutcome {
    pub fn indeterminate(
        post_id: &str,
        ticker: &str,
        category: Category,
        reason: IndeterminateReason,
    ) -> Self {
        ForecastOutcome {
            post_id: post_id.to_string(),
            ticker: ticker.to_string(),
            category,
            baseline_date: None,
            baseline_close: None,
            trigger_date: None,
            status: ForecastStatus::Indeterminate,
            reason: Some(reason),
        }
    }
}

/// Verify one forecast against a price series.
///
/// Baseline: close on the publish date, or the last prior trading day's
/// close. Drop succeeds when a window bar low falls to
/// `baseline * (1 - threshold)` or below; rise succeeds when a bar high
/// reaches `baseline * (1 + threshold)` or above. The trigger date is the
/// first bar achieving it.
pub fn verify_forecast(
    post_id: &str,
    category: Category,
    series: &PriceSeries,
    publish_date: NaiveDate,
    config: &VerificationConfig,
) -> ForecastOutcome {
    let ticker = series.ticker.as_str();
    if category == Category::Other {
        return ForecastOutcome::indeterminate(
            post_id,
            ticker,
            category,
            IndeterminateReason::NotAForecast,
        );
    }
    let Some((baseline_date, baseline_close)) = series.close_on_or_before(publish_date) else {
        return ForecastOutcome::indeterminate(
            post_id,
            ticker,
            category,
            IndeterminateReason::NoBaseline,
        );
    };

    let window: BTreeSet<NaiveDate> = trading_window(publish_date, config).into_iter().collect();
    let bars: Vec<&PriceBar> = series
        .bars
        .iter()
        .filter(|b| window.contains(&b.date))
        .collect();
    if bars.is_empty() {
        let mut outcome = ForecastOutcome::indeterminate(
            post_id,
            ticker,
            category,
            IndeterminateReason::NoWindowData,
        );
        outcome.baseline_date = Some(baseline_date);
        outcome.baseline_close = Some(baseline_close);
        return outcome;
    }

    let trigger = match category {
        Category::ShortTermDrop => {
            let target = baseline_close * (1.0 - config.threshold_fraction);
            bars.iter().find(|b| b.low <= target)
        }
        Category::ShortTermRise => {
            let target = baseline_close * (1.0 + config.threshold_fraction);
            bars.iter().find(|b| b.high >= target)
        }
        Category::Other => unreachable!(),
    };

    ForecastOutcome {
        post_id: post_id.to_string(),
        ticker: ticker.to_string(),
        category,
        baseline_date: Some(baseline_date),
        baseline_close: Some(baseline_close),
        trigger_date: trigger.map(|b| b.date),
        status: if trigger.is_some() {
            ForecastStatus::Success
        } else {
            ForecastStatus::Failure
        },
        reason: None,
    }
}

/// Continuous per-advisor success ratios. Qualities are absent when the
/// category has no verified (success or failure) outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibilityRank {
    pub advisor_id: String,
    pub drop_quality: Option<f64>,
    pub rise_quality: Option<f64>,
    pub global_quality: Option<f64>,
    pub drop_successes: usize,
    pub drop_verified: usize,
    pub rise_successes: usize,
    pub rise_verified: usize,
    pub indeterminate: usize,
}

/// Fold one advisor's outcomes into a credibility rank. Indeterminate
/// outcomes never enter a denominator.
pub fn assess_advisor(advisor_id: &str, outcomes: &[ForecastOutcome]) -> CredibilityRank {
    let mut drop_successes = 0usize;
    let mut drop_verified = 0usize;
    let mut rise_successes = 0usize;
    let mut rise_verified = 0usize;
    let mut indeterminate = 0usize;
    for outcome in outcomes {
        match outcome.status {
            ForecastStatus::Indeterminate => indeterminate += 1,
            status => {
                let success = status == ForecastStatus::Success;
                match outcome.category {
                    Category::ShortTermDrop => {
                        drop_verified += 1;
                        drop_successes += usize::from(success);
                    }
                    Category::ShortTermRise => {
                        rise_verified += 1;
                        rise_successes += usize::from(success);
                    }
                    Category::Other => indeterminate += 1,
                }
            }
        }
    }
    let ratio = |successes: usize, verified: usize| {
        (verified > 0).then(|| successes as f64 / verified as f64)
    };
    CredibilityRank {
        advisor_id: advisor_id.to_string(),
        drop_quality: ratio(drop_successes, drop_verified),
        rise_quality: ratio(rise_successes, rise_verified),
        global_quality: ratio(
            drop_successes + rise_successes,
            drop_verified + rise_verified,
        ),
        drop_successes,
        drop_verified,
        rise_successes,
        rise_verified,
        indeterminate,
    }
}

/// Read-only source of daily bars.
pub trait PriceProvider {
    fn get_series(&self, ticker: &str, from: NaiveDate, to: NaiveDate) -> Result<PriceSeries>;
}

/// Directory of `<TICKER>.csv` files.
#[derive(Debug, Clone)]
pub struct LocalCsvStore {
    pub dir: PathBuf,
}

impl LocalCsvStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        LocalCsvStore { dir: dir.into() }
    }
}

impl PriceProvider for LocalCsvStore {
    fn get_series(&self, ticker: &str, from: NaiveDate, to: NaiveDate) -> Result<PriceSeries> {
        let path = self.dir.join(format!("{}.csv", ticker.to_uppercase()));
        if !path.exists() {
            return Err(Error::Provider(format!(
                "no local series for {ticker} at {}",
                path.display()
            )));
        }
        let series = load_price_csv(&path, ticker)?;
        let bars = series.slice(from, to);
        Ok(PriceSeries {
            ticker: series.ticker,
            bars,
        })
    }
}

/// HTTP provider: `GET {base}/{ticker}?from=YYYY-MM-DD&to=YYYY-MM-DD`
/// returning `[{"date":..,"open":..,"high":..,"low":..,"close":..}]`.
pub struct HttpPriceProvider {
    base_url: String,
    client: reqwest::blocking::Client,
}

impl HttpPriceProvider {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpPriceProvider {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl PriceProvider for HttpPriceProvider {
    fn get_series(&self, ticker: &str, from: NaiveDate, to: NaiveDate) -> Result<PriceSeries> {
        let url = format!(
            "{}/{}?from={}&to={}",
            self.base_url,
            ticker.to_uppercase(),
            from,
            to
        );
        let response = self
            .client
            .get(&url)
            .send()
            .and_then(reqwest::blocking::Response::error_for_status)
            .map_err(|e| Error::Provider(format!("GET {url}: {e}")))?;
        let bars: Vec<PriceBar> = response
            .json()
            .map_err(|e| Error::Provider(format!("GET {url}: bad payload: {e}")))?;
        let series = PriceSeries::new(ticker, bars)?;
        let bars = series.slice(from, to);
        Ok(PriceSeries {
            ticker: series.ticker,
            bars,
        })
    }
}
