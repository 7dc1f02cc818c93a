//! Correlation of credibility ranks with advisor social metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{SocialMetrics, SOCIAL_METRIC_NAMES};
use crate::verify::CredibilityRank;

/// Correlation coefficient choice. Pearson is the default; Spearman is
/// available for rank-based robustness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    Spearman,
}

/// One table cell: either a coefficient or an explicit undefined marker
/// (zero variance or fewer than two usable pairs). Undefined cells are never
/// silently zeroed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub undefined_reason: Option<String>,
}

impl CorrelationCell {
    fn value(r: f64) -> Self {
        CorrelationCell {
            r: Some(r),
            undefined_reason: None,
        }
    }

    fn undefined(reason: &str) -> Self {
        CorrelationCell {
            r: None,
            undefined_reason: Some(reason.to_string()),
        }
    }
}

/// One social metric correlated against the drop, rise, and global quality
/// columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub metric: String,
    pub drop: CorrelationCell,
    pub rise: CorrelationCell,
    pub global: CorrelationCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub method: CorrelationMethod,
    pub rows: Vec<CorrelationRow>,
}

/// Product-moment correlation. `Err` carries the reason the coefficient is
/// undefined (length mismatch, fewer than two points, or zero variance).
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, String> {
    if xs.len() != ys.len() {
        return Err("length mismatch".into());
    }
    if xs.len() < 2 {
        return Err("fewer than two points".into());
    }
    let n = xs.len() as f64;
    let mean_x: f64 = xs.iter().sum::<f64>() / n;
    let mean_y: f64 = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err("zero variance".into());
    }
    Ok(cov / (var_x * var_y).sqrt())
}

/// Spearman rank correlation: Pearson over average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, String> {
    if xs.len() != ys.len() {
        return Err("length mismatch".into());
    }
    pearson(&ranks(xs), &ranks(ys))
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // average rank over the tie run, 1-based
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

fn correlate(method: CorrelationMethod, xs: &[f64], ys: &[f64]) -> CorrelationCell {
    let result = match method {
        CorrelationMethod::Pearson => pearson(xs, ys),
        CorrelationMethod::Spearman => spearman(xs, ys),
    };
    match result {
        Ok(r) => CorrelationCell::value(r),
        Err(reason) => CorrelationCell::undefined(&reason),
    }
}

/// Correlate every social metric against the three quality columns.
/// Advisors missing a quality (or missing metrics) are excluded pairwise per
/// column. Input order does not matter: advisors are aligned by id.
pub fn correlate_metrics(
    ranks: &[CredibilityRank],
    metrics: &[SocialMetrics],
    method: CorrelationMethod,
) -> CorrelationTable {
    let by_advisor: BTreeMap<&str, &SocialMetrics> = metrics
        .iter()
        .map(|m| (m.advisor_id.as_str(), m))
        .collect();
    let mut sorted_ranks: Vec<&CredibilityRank> = ranks.iter().collect();
    sorted_ranks.sort_by(|a, b| a.advisor_id.cmp(&b.advisor_id));

    let mut rows = Vec::with_capacity(SOCIAL_METRIC_NAMES.len());
    for metric_name in SOCIAL_METRIC_NAMES {
        let column = |quality: &dyn Fn(&CredibilityRank) -> Option<f64>| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for rank in &sorted_ranks {
                let (Some(metric), Some(q)) = (
                    by_advisor
                        .get(rank.advisor_id.as_str())
                        .and_then(|m| m.get(metric_name)),
                    quality(rank),
                ) else {
                    continue;
                };
                xs.push(metric);
                ys.push(q);
            }
            correlate(method, &xs, &ys)
        };
        rows.push(CorrelationRow {
            metric: metric_name.to_string(),
            drop: column(&|r| r.drop_quality),
            rise: column(&|r| r.rise_quality),
            global: column(&|r| r.global_quality),
        });
    }
    CorrelationTable { method, rows }
}
