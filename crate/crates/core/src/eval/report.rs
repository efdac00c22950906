use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunConfig;
use crate::episode::EpisodeSpec;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

pub const CSV_HEADER: &str = "condition,mean_accuracy,ci95";
pub const INTERVAL_CONVENTION: &str = "95% normal approximation: 1.96 * sample sd / sqrt(episodes)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl ReportFormat {
    pub fn from_path(path: &Path) -> ReportFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        }
    }
}

/// Audit record of what an episode looked like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeAudit {
    pub spec: EpisodeSpec,
    pub noise: NoiseSpec,
    pub class_map: Vec<usize>,
    pub corrupted_indices: Vec<usize>,
    pub pair_map: Option<Vec<usize>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDiagnostics {
    pub iterations_used: usize,
    pub converged: bool,
    pub final_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episode_index: usize,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub baseline_accuracy: Option<f64>,
    /// Queries resolved by the nearest-prototype fallback instead of a single activation.
    pub fallback_count: usize,
    pub prototypes: ClusterDiagnostics,
    pub episode: EpisodeAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub condition: String,
    pub episodes: usize,
    pub mean_accuracy: f64,
    /// Half-width; absent with a single episode.
    pub ci95: Option<f64>,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    pub baseline_mean_accuracy: Option<f64>,
    pub baseline_ci95: Option<f64>,
    pub fallback_total: usize,
    pub interval: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: RunConfig,
    pub engine_version: String,
    pub episodes: Vec<EpisodeResult>,
    pub summary: Summary,
    /// Not covered by the determinism guarantee.
    pub wall_clock_seconds: f64,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// JSON with the wall-clock field zeroed; identical for identical configs.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_clock_seconds = 0.0;
        copy.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let fmt_ci = |ci: Option<f64>| ci.map(|v| v.to_string()).unwrap_or_default();
        let s = &self.summary;
        out.push_str(&format!("{},{},{}\n", s.condition, s.mean_accuracy, fmt_ci(s.ci95)));
        if let Some(b) = s.baseline_mean_accuracy {
            out.push_str(&format!(
                "{}/nearest-mean,{},{}\n",
                s.condition,
                b,
                fmt_ci(s.baseline_ci95)
            ));
        }
        out
    }

    /// One-line human summary, e.g. `40%sym  99.11 ± 0.01`.
    pub fn summary_line(&self) -> String {
        let s = &self.summary;
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        let ci = |c: Option<f64>| c.map(pct).unwrap_or_else(|| "n/a".into());
        let mut line = format!("{:<12} {} ± {}", s.condition, pct(s.mean_accuracy), ci(s.ci95));
        if let Some(b) = s.baseline_mean_accuracy {
            line.push_str(&format!(
                "\n{:<12} {} ± {}",
                "nearest-mean",
                pct(b),
                ci(s.baseline_ci95)
            ));
        }
        line
    }
}

pub fn write_report(report: &EvalReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.summary_csv(),
    };
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
