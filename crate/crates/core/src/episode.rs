//! N-way K-shot episode construction.

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Steele, Lea & Flood).
pub fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The `episode_index`-th output of a SplitMix64 stream seeded with `master_seed`.
///
/// Equivalently: the generator state after `episode_index + 1` increments,
/// passed through the finalizer. `(0, 0)` is the first value of the reference
/// stream seeded with zero, `0xE220A8397B1DCDAF`.
pub fn derive_episode_seed(master_seed: u64, episode_index: u64) -> u64 {
    let state = master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(episode_index.wrapping_add(1)));
    splitmix64_mix(state)
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeSpec {
    pub n_way: usize,
    pub k_shot: usize,
    /// Queries per class.
    pub n_query: usize,
}

impl EpisodeSpec {
    pub fn new(n_way: usize, k_shot: usize, n_query: usize) -> Result<Self> {
        let spec = EpisodeSpec {
            n_way,
            k_shot,
            n_query,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::Config(format!("n_way must be at least 2, got {}", self.n_way)));
        }
        if self.k_shot == 0 || self.n_query == 0 {
            return Err(Error::Config("k_shot and n_query must be positive".into()));
        }
        Ok(())
    }

    pub fn items_per_class(&self) -> usize {
        self.k_shot + self.n_query
    }
}

/// Ground truth of a support item: a task class, or a sample from outside the task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueLabel {
    Class(usize),
    Outlier,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportItem {
    pub features: Vec<f64>,
    /// Label the classifier sees, a task-class index.
    pub given_label: usize,
    pub true_label: TrueLabel,
    pub corrupted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryItem {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub spec: EpisodeSpec,
    pub noise: NoiseSpec,
    /// Source class id of each task class.
    pub class_map: Vec<usize>,
    /// Class-major: items `c*K .. (c+1)*K` were drawn from task class `c`.
    pub support: Vec<SupportItem>,
    pub query: Vec<QueryItem>,
    /// Fixed mislabel target per class, present for pair noise only.
    pub pair_map: Option<Vec<usize>>,
    pub seed: u64,
}

impl Episode {
    pub fn n_way(&self) -> usize {
        self.spec.n_way
    }

    pub fn corrupted_indices(&self) -> Vec<usize> {
        self.support
            .iter()
            .enumerate()
            .filter(|(_, s)| s.corrupted)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn support_features(&self) -> Vec<Vec<f64>> {
        self.support.iter().map(|s| s.features.clone()).collect()
    }
}

/// Draw an N-way K-shot episode without label noise.
///
/// Classes are drawn without replacement among those holding at least
/// `k_shot + n_query` items; items are drawn without replacement within each
/// class, the first `k_shot` forming the support set.
pub fn sample_episode(set: &EmbeddingSet, spec: &EpisodeSpec, seed: u64) -> Result<Episode> {
    spec.validate()?;
    let need = spec.items_per_class();
    let by_class = set.indices_by_class();
    let eligible: Vec<usize> = (0..by_class.len())
        .filter(|&c| by_class[c].len() >= need)
        .collect();
    if eligible.len() < spec.n_way {
        return Err(Error::Capacity(format!(
            "{}-way {}-shot with {} queries needs {} classes holding at least {} items, set has {}",
            spec.n_way,
            spec.k_shot,
            spec.n_query,
            spec.n_way,
            need,
            eligible.len()
        )));
    }

    let mut rng = rng_from_seed(seed);
    let class_map: Vec<usize> = index::sample(&mut rng, eligible.len(), spec.n_way)
        .into_iter()
        .map(|i| eligible[i])
        .collect();

    let mut support = Vec::with_capacity(spec.n_way * spec.k_shot);
    let mut query = Vec::with_capacity(spec.n_way * spec.n_query);
    for (task_class, &source) in class_map.iter().enumerate() {
        let members = &by_class[source];
        let picks = index::sample(&mut rng, members.len(), need);
        for (j, pick) in picks.into_iter().enumerate() {
            let features = set.items()[members[pick]].features.to_f64();
            if j < spec.k_shot {
                support.push(SupportItem {
                    features,
                    given_label: task_class,
                    true_label: TrueLabel::Class(task_class),
                    corrupted: false,
                });
            } else {
                query.push(QueryItem {
                    features,
                    label: task_class,
                });
            }
        }
    }

    Ok(Episode {
        spec: *spec,
        noise: NoiseSpec::none(),
        class_map,
        support,
        query,
        pair_map: None,
        seed,
    })
}
