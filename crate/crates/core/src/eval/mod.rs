//! Episodic benchmark: sample → corrupt → cluster → classify → score.
//!
//! Episode `i` is seeded with `derive_episode_seed(master_seed, i)`, so the
//! report does not depend on how episodes are scheduled across threads.

mod report;
mod stats;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::episode::{derive_episode_seed, sample_episode, Episode, EpisodeSpec};
use crate::error::{Error, Result};
use crate::field::{predict, FieldConfig, Termination};
use crate::noise::{apply_noise, NoiseKind, NoiseSpec, OutlierPool};
use crate::prototype::{l2_normalize, run_clustering, squared_distance, ClusterConfig};

pub use report::{
    write_report, ClusterDiagnostics, EpisodeAudit, EpisodeResult, EvalReport, ReportFormat,
    Summary, CSV_HEADER, INTERVAL_CONVENTION,
};
pub use stats::{confidence_interval, mean, Z_95};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolSource {
    /// Items of every class outside the episode.
    HeldoutClasses,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub episode: EpisodeSpec,
    pub noise: NoiseSpec,
    pub cluster: ClusterConfig,
    pub field: FieldConfig,
    pub episodes: usize,
    pub master_seed: u64,
    pub baseline_enabled: bool,
    pub outlier_pool_source: PoolSource,
}

impl RunConfig {
    /// 5-way 5-shot, 15 queries, 600 noiseless episodes with default clustering and field.
    pub fn new(episode: EpisodeSpec, noise: NoiseSpec) -> Self {
        RunConfig {
            episode,
            noise,
            cluster: ClusterConfig::default(),
            field: FieldConfig::default(),
            episodes: 600,
            master_seed: 0,
            baseline_enabled: false,
            outlier_pool_source: if noise.kind == NoiseKind::Outlier {
                PoolSource::HeldoutClasses
            } else {
                PoolSource::None
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.episode.validate()?;
        self.noise.check_quota(self.episode.k_shot)?;
        self.cluster.validate()?;
        self.field.validate()?;
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be positive".into()));
        }
        if self.noise.kind == NoiseKind::Outlier
            && self.outlier_pool_source != PoolSource::HeldoutClasses
        {
            return Err(Error::Config(
                "outlier noise needs outlier_pool_source = heldout_classes".into(),
            ));
        }
        Ok(())
    }

    pub fn validate_against(&self, set: &EmbeddingSet) -> Result<()> {
        self.validate()?;
        if self.noise.kind == NoiseKind::Outlier && set.n_classes() <= self.episode.n_way {
            return Err(Error::Config(format!(
                "outlier noise needs more than {} classes in the data set, found {}",
                self.episode.n_way,
                set.n_classes()
            )));
        }
        Ok(())
    }
}

/// Accuracy of plain given-label class means with nearest-mean classification.
///
/// Ties go to the lower class index.
pub fn nearest_mean_baseline(episode: &Episode) -> f64 {
    let n_way = episode.n_way();
    let dim = episode.support.first().map_or(0, |s| s.features.len());
    let mut sums = vec![vec![0.0; dim]; n_way];
    let mut counts = vec![0usize; n_way];
    for item in &episode.support {
        counts[item.given_label] += 1;
        for (s, x) in sums[item.given_label].iter_mut().zip(&item.features) {
            *s += x;
        }
    }
    let means: Vec<Option<Vec<f64>>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| (n > 0).then(|| s.into_iter().map(|v| v / n as f64).collect()))
        .collect();

    if episode.query.is_empty() {
        return 0.0;
    }
    let correct = episode
        .query
        .iter()
        .filter(|q| {
            let mut best = None;
            let mut best_d = f64::INFINITY;
            for (c, m) in means.iter().enumerate() {
                if let Some(m) = m {
                    let d = squared_distance(&q.features, m);
                    if d < best_d {
                        best_d = d;
                        best = Some(c);
                    }
                }
            }
            best == Some(q.label)
        })
        .count();
    correct as f64 / episode.query.len() as f64
}

/// Build episode `index` of a run, noise included.
pub fn build_episode(set: &EmbeddingSet, config: &RunConfig, index: usize) -> Result<Episode> {
    let seed = derive_episode_seed(config.master_seed, index as u64);
    let clean = sample_episode(set, &config.episode, seed)?;
    let pool = match (config.noise.kind, config.outlier_pool_source) {
        (NoiseKind::Outlier, PoolSource::HeldoutClasses) => {
            Some(OutlierPool::excluding(set, &clean.class_map))
        }
        _ => None,
    };
    apply_noise(&clean, &config.noise, pool.as_ref(), derive_episode_seed(seed, 1))
}

/// Run a single episode end to end.
pub fn run_episode(set: &EmbeddingSet, config: &RunConfig, index: usize) -> Result<EpisodeResult> {
    let episode = build_episode(set, config, index)?;
    let protos = run_clustering(&episode.support, episode.n_way(), &config.cluster)?;

    let mut correct = 0;
    let mut fallback_count = 0;
    for q in &episode.query {
        let x = if config.cluster.normalize_inputs {
            l2_normalize(&q.features)
        } else {
            q.features.clone()
        };
        let result = predict(&x, &protos, &config.field)?;
        if result.terminated == Termination::FallbackNearest {
            fallback_count += 1;
        }
        if result.predicted == q.label {
            correct += 1;
        }
    }
    let total = episode.query.len();

    Ok(EpisodeResult {
        episode_index: index,
        accuracy: correct as f64 / total as f64,
        correct,
        total,
        baseline_accuracy: config
            .baseline_enabled
            .then(|| nearest_mean_baseline(&episode)),
        fallback_count,
        prototypes: ClusterDiagnostics {
            iterations_used: protos.iterations_used,
            converged: protos.converged,
            final_shift: protos.final_shift,
        },
        episode: EpisodeAudit {
            spec: episode.spec,
            noise: episode.noise,
            corrupted_indices: episode.corrupted_indices(),
            class_map: episode.class_map,
            pair_map: episode.pair_map,
            seed: episode.seed,
        },
    })
}

/// Evaluate on rayon's global pool.
pub fn run_evaluation(set: &EmbeddingSet, config: &RunConfig) -> Result<EvalReport> {
    let started = Instant::now();
    config.validate_against(set)?;
    let results: Vec<Result<EpisodeResult>> = (0..config.episodes)
        .into_par_iter()
        .map(|i| run_episode(set, config, i))
        .collect();
    assemble(config, results, started)
}

/// Evaluate on a dedicated pool of `workers` threads.
pub fn run_evaluation_with_workers(
    set: &EmbeddingSet,
    config: &RunConfig,
    workers: usize,
) -> Result<EvalReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_evaluation(set, config))
}

fn assemble(
    config: &RunConfig,
    results: Vec<Result<EpisodeResult>>,
    started: Instant,
) -> Result<EvalReport> {
    let mut episodes = Vec::with_capacity(results.len());
    for (episode, r) in results.into_iter().enumerate() {
        episodes.push(r.map_err(|e| Error::Episode {
            episode,
            source: Box::new(e),
        })?);
    }

    let acc: Vec<f64> = episodes.iter().map(|e| e.accuracy).collect();
    let mean_accuracy = mean(&acc)?;
    let ci95 = confidence_interval(&acc).ok().map(|(_, h)| h);
    let baseline: Option<Vec<f64>> = episodes.iter().map(|e| e.baseline_accuracy).collect();
    let (baseline_mean_accuracy, baseline_ci95) = match &baseline {
        Some(b) if !b.is_empty() => (
            Some(mean(b)?),
            confidence_interval(b).ok().map(|(_, h)| h),
        ),
        _ => (None, None),
    };

    let summary = Summary {
        condition: config.noise.condition_label(),
        episodes: episodes.len(),
        mean_accuracy,
        ci95,
        min_accuracy: acc.iter().copied().fold(f64::INFINITY, f64::min),
        max_accuracy: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        baseline_mean_accuracy,
        baseline_ci95,
        fallback_total: episodes.iter().map(|e| e.fallback_count).sum(),
        interval: INTERVAL_CONVENTION.to_string(),
    };

    Ok(EvalReport {
        config: config.clone(),
        engine_version: ENGINE_VERSION.to_string(),
        episodes,
        summary,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episode::{QueryItem, SupportItem, TrueLabel};

    fn toy_episode(support: &[(f64, usize)], query: &[(f64, usize)]) -> Episode {
        Episode {
            spec: EpisodeSpec {
                n_way: 2,
                k_shot: 1,
                n_query: 1,
            },
            noise: NoiseSpec::none(),
            class_map: vec![0, 1],
            support: support
                .iter()
                .map(|&(x, c)| SupportItem {
                    features: vec![x],
                    given_label: c,
                    true_label: TrueLabel::Class(c),
                    corrupted: false,
                })
                .collect(),
            query: query
                .iter()
                .map(|&(x, c)| QueryItem {
                    features: vec![x],
                    label: c,
                })
                .collect(),
            pair_map: None,
            seed: 0,
        }
    }

    #[test]
    fn baseline_separable() {
        let ep = toy_episode(&[(0.0, 0), (10.0, 1)], &[(1.0, 0), (9.0, 1)]);
        assert_eq!(nearest_mean_baseline(&ep), 1.0);
    }

    #[test]
    fn baseline_tie_goes_to_lower_index() {
        let ep = toy_episode(&[(0.0, 0), (10.0, 1)], &[(5.0, 0), (5.0, 1)]);
        assert_eq!(nearest_mean_baseline(&ep), 0.5);
    }

    #[test]
    fn outlier_config_checks() {
        let mut config = RunConfig::new(
            EpisodeSpec::new(5, 5, 15).unwrap(),
            NoiseSpec::new(NoiseKind::Outlier, 0.4).unwrap(),
        );
        assert!(config.validate().is_ok());
        config.outlier_pool_source = PoolSource::None;
        assert!(config.validate().is_err());
    }
}
