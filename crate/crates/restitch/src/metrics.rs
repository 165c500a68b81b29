//! Per-session QoS statistics and the parameterised QoE score.
//!
//! The score follows the common linear-combination template: a weighted
//! maximum score minus weighted temporal and visual impairments, plus an
//! optional interaction term for impairments that overlap in time. Weights
//! and the impairment mappings are study parameters, not constants of this
//! crate; the defaults below are documented placeholders for pipeline
//! plumbing, not calibrated values.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::log_io::{Separator, VideoLog};

/// Session-level QoS statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct QoSSummary {
    /// Unweighted mean of per-segment rep levels, in Mbps.
    pub avg_bitrate_mbps: f64,
    /// Number of adjacent segment pairs with differing rep level.
    pub switch_count: u64,
    /// Number of segments with a positive stall duration.
    pub stall_count: u64,
    /// Sum of stall durations, in seconds.
    pub total_stall_duration_s: f64,
}

/// Compute the four session statistics from a log.
pub fn qos_summary(log: &VideoLog) -> QoSSummary {
    let records = log.records();
    let sum_kbps: u64 = records.iter().map(|r| r.rep_level as u64).sum();
    let avg_bitrate_mbps = sum_kbps as f64 / records.len() as f64 / 1000.0;
    let switch_count = records
        .windows(2)
        .filter(|w| w[0].rep_level != w[1].rep_level)
        .count() as u64;
    let stall_count = records.iter().filter(|r| r.stall_duration > 0).count() as u64;
    let total_stall_ms: u64 = records.iter().map(|r| r.stall_duration).sum();
    QoSSummary {
        avg_bitrate_mbps,
        switch_count,
        stall_count,
        total_stall_duration_s: total_stall_ms as f64 / 1000.0,
    }
}

/// Interaction term f(I_t, I_v) compensating for simultaneous impairments.
pub type Interaction = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Weight set for the QoE template score.
#[derive(Clone)]
pub struct QoEParams {
    /// Weight of the maximum score term.
    pub w_o: f64,
    /// Maximum (initial) score.
    pub qoe_m: f64,
    /// Weight of the temporal impairment.
    pub w_t: f64,
    /// Weight of the visual impairment.
    pub w_v: f64,
    interaction: Interaction,
}

impl QoEParams {
    /// Parameters with the zero interaction term.
    pub fn new(w_o: f64, qoe_m: f64, w_t: f64, w_v: f64) -> Result<Self> {
        for (name, v) in [("w_o", w_o), ("qoe_m", qoe_m), ("w_t", w_t), ("w_v", w_v)] {
            if !v.is_finite() {
                return Err(Error::MetricDomain(format!("{name} must be finite, got {v}")));
            }
        }
        Ok(QoEParams {
            w_o,
            qoe_m,
            w_t,
            w_v,
            interaction: Arc::new(|_, _| 0.0),
        })
    }

    pub fn with_interaction(mut self, f: Interaction) -> Self {
        self.interaction = f;
        self
    }

    pub fn interaction(&self, temporal: f64, visual: f64) -> f64 {
        (self.interaction)(temporal, visual)
    }
}

impl std::fmt::Debug for QoEParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QoEParams")
            .field("w_o", &self.w_o)
            .field("qoe_m", &self.qoe_m)
            .field("w_t", &self.w_t)
            .field("w_v", &self.w_v)
            .finish_non_exhaustive()
    }
}

/// Temporal and visual impairment factors feeding the score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentInputs {
    pub temporal: f64,
    pub visual: f64,
}

impl ImpairmentInputs {
    pub fn new(temporal: f64, visual: f64) -> Result<Self> {
        if temporal < 0.0 || visual < 0.0 {
            return Err(Error::MetricDomain(format!(
                "impairment factors must be non-negative, got temporal={temporal} visual={visual}"
            )));
        }
        Ok(ImpairmentInputs { temporal, visual })
    }

    /// Default, non-normative mapping from session statistics:
    /// temporal = stall seconds + 1·stall count, visual = switch count.
    /// Study designers are expected to substitute their own calibration.
    pub fn from_summary(summary: &QoSSummary) -> Self {
        ImpairmentInputs {
            temporal: summary.total_stall_duration_s + summary.stall_count as f64,
            visual: summary.switch_count as f64,
        }
    }
}

/// Evaluate the template score:
/// `w_o·qoe_m − (w_t·I_t + w_v·I_v) + f(I_t, I_v)`.
pub fn qoe_score(params: &QoEParams, inputs: &ImpairmentInputs) -> Result<f64> {
    let score = params.w_o * params.qoe_m
        - (params.w_t * inputs.temporal + params.w_v * inputs.visual)
        + params.interaction(inputs.temporal, inputs.visual);
    if !score.is_finite() {
        return Err(Error::NonFinite(format!("qoe score evaluated to {score}")));
    }
    Ok(score)
}

/// Impairment impact of a rating on the 100-point scale: `100 − rating`.
pub fn impairment_from_score(rating: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&rating) {
        return Err(Error::MetricDomain(format!(
            "rating must be within [0, 100], got {rating}"
        )));
    }
    Ok(100.0 - rating)
}

/// One report row: a named session with its statistics and optional score.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub name: String,
    /// Grouping key for batch aggregation (e.g. a network technology).
    pub group: String,
    pub summary: QoSSummary,
    pub qoe: Option<f64>,
}

impl ReportEntry {
    pub fn new(name: impl Into<String>, group: impl Into<String>, summary: QoSSummary) -> Self {
        ReportEntry {
            name: name.into(),
            group: group.into(),
            summary,
            qoe: None,
        }
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.3}")
}

/// Write one delimiter-separated record per session: the four statistics plus
/// the optional score.
pub fn write_report(entries: &[ReportEntry], path: &Path, separator: Separator) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .delimiter(separator.as_byte())
        .from_writer(file);
    let io_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    w.write_record([
        "Log",
        "Bitrate_Mbps",
        "Num_Switches",
        "Num_Stalls",
        "Stall_Dur_s",
        "QoE",
    ])
    .map_err(io_err)?;
    for e in entries {
        w.write_record([
            e.name.clone(),
            fmt_float(e.summary.avg_bitrate_mbps),
            e.summary.switch_count.to_string(),
            e.summary.stall_count.to_string(),
            fmt_float(e.summary.total_stall_duration_s),
            e.qoe.map(fmt_float).unwrap_or_default(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Per-group means of the four statistics, in first-seen group order.
pub fn aggregate_by_group(entries: &[ReportEntry]) -> Vec<(String, QoSSummary)> {
    let mut order: Vec<String> = Vec::new();
    for e in entries {
        if !order.contains(&e.group) {
            order.push(e.group.clone());
        }
    }
    order
        .into_iter()
        .map(|group| {
            let members: Vec<&ReportEntry> =
                entries.iter().filter(|e| e.group == group).collect();
            let n = members.len() as f64;
            let mean = QoSSummary {
                avg_bitrate_mbps: members.iter().map(|e| e.summary.avg_bitrate_mbps).sum::<f64>()
                    / n,
                switch_count: (members.iter().map(|e| e.summary.switch_count).sum::<u64>() as f64
                    / n)
                    .round() as u64,
                stall_count: (members.iter().map(|e| e.summary.stall_count).sum::<u64>() as f64
                    / n)
                    .round() as u64,
                total_stall_duration_s: members
                    .iter()
                    .map(|e| e.summary.total_stall_duration_s)
                    .sum::<f64>()
                    / n,
            };
            (group, mean)
        })
        .collect()
}

/// Per-group means without integer rounding, for aggregate reporting in the
/// style of published per-technology tables.
pub fn aggregate_means(entries: &[ReportEntry]) -> Vec<(String, [f64; 4])> {
    let mut order: Vec<String> = Vec::new();
    for e in entries {
        if !order.contains(&e.group) {
            order.push(e.group.clone());
        }
    }
    order
        .into_iter()
        .map(|group| {
            let members: Vec<&ReportEntry> =
                entries.iter().filter(|e| e.group == group).collect();
            let n = members.len() as f64;
            let means = [
                members.iter().map(|e| e.summary.avg_bitrate_mbps).sum::<f64>() / n,
                members.iter().map(|e| e.summary.switch_count as f64).sum::<f64>() / n,
                members.iter().map(|e| e.summary.stall_count as f64).sum::<f64>() / n,
                members
                    .iter()
                    .map(|e| e.summary.total_stall_duration_s)
                    .sum::<f64>()
                    / n,
            ];
            (group, means)
        })
        .collect()
}
