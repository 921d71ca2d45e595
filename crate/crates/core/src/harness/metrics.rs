//! Per-episode latency metrics, run summaries and their CSV forms.

use std::path::Path;

use crate::env::DeliveredFrame;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: usize,
    /// Mean per-step reward of each UE.
    pub ue_rewards: Vec<f64>,
    pub mean_reward: f64,
    pub mean_latency_ms: f64,
    pub median_latency_ms: f64,
    pub p95_latency_ms: f64,
    /// Mean over UEs of the fraction of frames meeting the threshold.
    pub success_prob: f64,
    /// Fraction of each UE's frames that exceeded the threshold.
    pub violation: Vec<f64>,
}

/// Accumulates one episode's rewards and frame latencies.
#[derive(Debug, Clone)]
pub struct EpisodeRecorder {
    reward_sums: Vec<f64>,
    steps: usize,
    latencies: Vec<Vec<f64>>,
}

impl EpisodeRecorder {
    pub fn new(n_ues: usize) -> Self {
        Self {
            reward_sums: vec![0.0; n_ues],
            steps: 0,
            latencies: vec![Vec::new(); n_ues],
        }
    }

    pub fn record_rewards(&mut self, rewards: &[f64]) {
        for (sum, r) in self.reward_sums.iter_mut().zip(rewards) {
            *sum += r;
        }
        self.steps += 1;
    }

    pub fn record_frames(&mut self, frames: &[DeliveredFrame]) {
        for f in frames {
            self.latencies[f.ue_id].push(f.latency_ms);
        }
    }

    pub fn finish(self, episode: usize, threshold_ms: f64) -> EpisodeMetrics {
        let steps = self.steps.max(1) as f64;
        let ue_rewards: Vec<f64> = self.reward_sums.iter().map(|s| s / steps).collect();
        let violation: Vec<f64> = self
            .latencies
            .iter()
            .map(|l| {
                if l.is_empty() {
                    0.0
                } else {
                    l.iter().filter(|&&x| x > threshold_ms).count() as f64 / l.len() as f64
                }
            })
            .collect();
        let mut all: Vec<f64> = self.latencies.into_iter().flatten().collect();
        all.sort_by(f64::total_cmp);
        EpisodeMetrics {
            episode,
            mean_reward: mean(&ue_rewards),
            ue_rewards,
            mean_latency_ms: mean(&all),
            median_latency_ms: median_sorted(&all),
            p95_latency_ms: nearest_rank_sorted(&all, 95.0),
            success_prob: 1.0 - mean(&violation),
            violation,
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn median_sorted(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    }
}

fn nearest_rank_sorted(sorted: &[f64], percentile: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (percentile / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Nearest-rank percentile: the smallest value with at least `percentile`
/// percent of the data at or below it.
pub fn nearest_rank(values: &[f64], percentile: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    nearest_rank_sorted(&sorted, percentile)
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    median_sorted(&sorted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub mean_latency_ms: f64,
    /// Median of the per-episode median latencies.
    pub median_latency_ms: f64,
    pub success_prob: f64,
    /// 95th percentile of all (episode, UE) violation fractions.
    pub p95_violation: f64,
}

pub fn summarize(series: &[EpisodeMetrics]) -> Result<Summary> {
    if series.is_empty() {
        return Err(Error::InsufficientData("cannot summarize an empty metrics series".into()));
    }
    let pick = |f: fn(&EpisodeMetrics) -> f64| series.iter().map(f).collect::<Vec<_>>();
    let violations: Vec<f64> = series.iter().flat_map(|m| m.violation.iter().copied()).collect();
    Ok(Summary {
        episodes: series.len(),
        mean_reward: mean(&pick(|m| m.mean_reward)),
        mean_latency_ms: mean(&pick(|m| m.mean_latency_ms)),
        median_latency_ms: median(&pick(|m| m.median_latency_ms)),
        success_prob: mean(&pick(|m| m.success_prob)),
        p95_violation: nearest_rank(&violations, 95.0),
    })
}

pub fn metrics_header(n_ues: usize) -> Vec<String> {
    let mut header: Vec<String> = [
        "episode",
        "mean_reward",
        "mean_latency_ms",
        "median_latency_ms",
        "p95_latency_ms",
        "success_prob",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..n_ues).map(|i| format!("viol_ue{i}")));
    header
}

pub fn write_metrics_csv(path: &Path, n_ues: usize, series: &[EpisodeMetrics]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(metrics_header(n_ues))?;
    for m in series {
        let mut row = vec![
            m.episode.to_string(),
            m.mean_reward.to_string(),
            m.mean_latency_ms.to_string(),
            m.median_latency_ms.to_string(),
            m.p95_latency_ms.to_string(),
            m.success_prob.to_string(),
        ];
        row.extend(m.violation.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_field(record: &csv::StringRecord, i: usize, line: usize) -> Result<f64> {
    let raw = record.get(i).ok_or_else(|| Error::ConfigParse {
        line,
        reason: format!("missing column {i}"),
    })?;
    raw.parse().map_err(|_| Error::ConfigParse {
        line,
        reason: format!("not a number: {raw:?}"),
    })
}

/// Reads a file written by [`write_metrics_csv`]. Per-UE rewards are not
/// stored and come back empty.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<EpisodeMetrics>> {
    let mut r = csv::Reader::from_path(path)?;
    let n_ues = r.headers()?.len().saturating_sub(6);
    let mut series = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let field = |i| parse_field(&record, i, line);
        series.push(EpisodeMetrics {
            episode: field(0)? as usize,
            ue_rewards: Vec::new(),
            mean_reward: field(1)?,
            mean_latency_ms: field(2)?,
            median_latency_ms: field(3)?,
            p95_latency_ms: field(4)?,
            success_prob: field(5)?,
            violation: (0..n_ues).map(|u| field(6 + u)).collect::<Result<_>>()?,
        });
    }
    Ok(series)
}

pub fn write_summary_csv(path: &Path, summary: &Summary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "episodes",
        "mean_reward",
        "mean_latency_ms",
        "median_latency_ms",
        "success_prob",
        "p95_violation",
    ])?;
    w.write_record([
        summary.episodes.to_string(),
        summary.mean_reward.to_string(),
        summary.mean_latency_ms.to_string(),
        summary.median_latency_ms.to_string(),
        summary.success_prob.to_string(),
        summary.p95_violation.to_string(),
    ])?;
    w.flush().map_err(|e| Error::io(path, e))
}
