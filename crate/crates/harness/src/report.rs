//! Ablation table in text and CSV form.
//!
//! The CSV holds every number at full precision and the text table is a pure
//! function of it, so `report` can regenerate the table from the CSV alone.
//! Wall-clock latency is kept out of both (it differs run to run) and goes to
//! a separate file.

use std::fmt::Write as _;

use outfit_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::ablation::AblationConfig;
use crate::run::{ConfigRun, Latency};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub config: AblationConfig,
    pub anchors: usize,
    pub unfillable_anchors: usize,
    pub outfits: usize,
    pub mean_score: f64,
    pub violation_rate: f64,
    pub mean_distinct_colors: f64,
    pub mean_slot_diversity: f64,
}

impl From<&ConfigRun> for ReportRow {
    fn from(run: &ConfigRun) -> Self {
        let m = &run.metrics;
        ReportRow {
            config: run.config,
            anchors: m.anchors,
            unfillable_anchors: m.unfillable_anchors,
            outfits: m.outfits,
            mean_score: m.mean_score,
            violation_rate: m.violation_rate,
            mean_distinct_colors: m.mean_distinct_colors,
            mean_slot_diversity: m.mean_slot_diversity,
        }
    }
}

fn delta(row: &ReportRow, full: Option<&ReportRow>) -> String {
    match full {
        _ if row.config == AblationConfig::Full => "—".to_string(),
        Some(f) => format!("{:+.3}", row.mean_score - f.mean_score),
        None => "n/a".to_string(),
    }
}

/// Fixed-width table, one row per configuration in the given order.
pub fn render_table(rows: &[ReportRow]) -> String {
    let full = rows.iter().find(|r| r.config == AblationConfig::Full);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<34} {:>7} {:>7} {:>7} {:>7} {:>6} {:>8}",
        "Configuration", "Score", "Δ", "Viol.%", "Colors", "Slots", "Outfits"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<34} {:>7.3} {:>7} {:>7.1} {:>7.2} {:>6.2} {:>8}",
            r.config.label(),
            r.mean_score,
            delta(r, full),
            r.violation_rate * 100.0,
            r.mean_distinct_colors,
            r.mean_slot_diversity,
            r.outfits,
        );
    }
    out
}

pub fn to_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn from_csv(text: &str) -> Result<Vec<ReportRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| Error::Config(format!("csv: {e}"))))
        .collect()
}

pub fn render_latency(runs: &[(AblationConfig, Latency)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:>10} {:>10}", "config", "mean_ms", "p95_ms");
    for (c, l) in runs {
        let _ = writeln!(out, "{:<14} {:>10.3} {:>10.3}", c.as_str(), l.mean_ms, l.p95_ms);
    }
    out
}
