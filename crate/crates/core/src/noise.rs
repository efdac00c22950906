//! Support-set label noise: symmetric swap, paired swap and outliers.
//!
//! Corruption is applied per class: every task class gets exactly
//! `round(rate × K)` corrupted support items (half away from zero), so the
//! clean items of each class stay in the majority.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::episode::{rng_from_seed, Episode, TrueLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Symmetric,
    Pair,
    Outlier,
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::None => "none",
            NoiseKind::Symmetric => "sym",
            NoiseKind::Pair => "pair",
            NoiseKind::Outlier => "outlier",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    /// Fraction of the support set to corrupt, in `[0, 1)`.
    pub rate: f64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec {
            kind: NoiseKind::None,
            rate: 0.0,
        }
    }

    pub fn new(kind: NoiseKind, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("noise rate must be in [0, 1), got {rate}")));
        }
        Ok(NoiseSpec { kind, rate })
    }

    /// Corrupted support items per class for a `k_shot`-shot task.
    pub fn corrupted_per_class(&self, k_shot: usize) -> usize {
        if self.kind == NoiseKind::None {
            return 0;
        }
        (self.rate * k_shot as f64).round() as usize
    }

    pub fn check_quota(&self, k_shot: usize) -> Result<()> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::Invariant(format!(
                "noise rate must be in [0, 1), got {}",
                self.rate
            )));
        }
        let q = self.corrupted_per_class(k_shot);
        if q >= k_shot {
            return Err(Error::Invariant(format!(
                "rate {} corrupts {q} of {k_shot} support items per class; clean items must remain",
                self.rate
            )));
        }
        Ok(())
    }

    /// Table-style label, e.g. `0%`, `40%sym`, `60%outlier`.
    pub fn condition_label(&self) -> String {
        let pct = (self.rate * 100.0).round() as i64;
        match self.kind {
            NoiseKind::None => "0%".to_string(),
            _ if pct == 0 => "0%".to_string(),
            kind => format!("{pct}%{kind}"),
        }
    }
}

/// Feature vectors drawn from classes outside an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierPool {
    pub items: Vec<Vec<f64>>,
    pub class_ids: Vec<usize>,
}

impl OutlierPool {
    /// Every item of every class not listed in `class_map`.
    pub fn excluding(set: &EmbeddingSet, class_map: &[usize]) -> Self {
        let mut items = Vec::new();
        let mut class_ids = Vec::new();
        for item in set.items() {
            let c = item.class_id as usize;
            if !class_map.contains(&c) {
                items.push(item.features.to_f64());
                class_ids.push(c);
            }
        }
        OutlierPool { items, class_ids }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Corrupt the support set of a clean episode. Queries are never touched.
pub fn apply_noise(
    episode: &Episode,
    noise: &NoiseSpec,
    pool: Option<&OutlierPool>,
    seed: u64,
) -> Result<Episode> {
    if episode.noise.kind != NoiseKind::None {
        return Err(Error::Invariant(format!(
            "episode already carries {} noise",
            episode.noise.kind
        )));
    }
    let n_way = episode.n_way();
    let k_shot = episode.spec.k_shot;
    noise.check_quota(k_shot)?;
    if episode.support.len() != n_way * k_shot {
        return Err(Error::Invariant(format!(
            "support has {} items, expected {}",
            episode.support.len(),
            n_way * k_shot
        )));
    }

    let per_class = noise.corrupted_per_class(k_shot);
    let mut out = episode.clone();
    out.noise = *noise;
    let mut rng = rng_from_seed(seed);

    if noise.kind == NoiseKind::Pair {
        out.pair_map = Some(
            (0..n_way)
                .map(|c| other_class(&mut rng, n_way, c))
                .collect(),
        );
    }
    if noise.kind == NoiseKind::None || per_class == 0 {
        return Ok(out);
    }

    if let Some(pos) = out
        .support
        .iter()
        .position(|s| s.true_label != TrueLabel::Class(s.given_label))
    {
        return Err(Error::Invariant(format!("support item {pos} is already corrupted")));
    }

    let mut victims = Vec::with_capacity(n_way * per_class);
    for c in 0..n_way {
        let mut picks: Vec<usize> = index::sample(&mut rng, k_shot, per_class).into_vec();
        picks.sort_unstable();
        victims.extend(picks.into_iter().map(|j| c * k_shot + j));
    }

    match noise.kind {
        NoiseKind::None => unreachable!(),
        NoiseKind::Symmetric => {
            for &i in &victims {
                let item = &mut out.support[i];
                item.given_label = other_class(&mut rng, n_way, item.given_label);
                item.corrupted = true;
            }
        }
        NoiseKind::Pair => {
            let map = out.pair_map.as_ref().expect("drawn above");
            for &i in &victims {
                let item = &mut out.support[i];
                item.given_label = map[item.given_label];
                item.corrupted = true;
            }
        }
        NoiseKind::Outlier => {
            let pool = pool.ok_or_else(|| {
                Error::Capacity("outlier noise requires an outlier pool".into())
            })?;
            if pool.class_ids.iter().any(|c| episode.class_map.contains(c)) {
                return Err(Error::Invariant(
                    "outlier pool overlaps the episode's classes".into(),
                ));
            }
            if pool.len() < victims.len() {
                return Err(Error::Capacity(format!(
                    "outlier pool holds {} items, {} needed",
                    pool.len(),
                    victims.len()
                )));
            }
            let draws = index::sample(&mut rng, pool.len(), victims.len());
            for (&i, p) in victims.iter().zip(draws) {
                let item = &mut out.support[i];
                if pool.items[p].len() != item.features.len() {
                    return Err(Error::Invariant("outlier pool dimension mismatch".into()));
                }
                item.features = pool.items[p].clone();
                item.true_label = TrueLabel::Outlier;
                item.corrupted = true;
            }
        }
    }
    Ok(out)
}

/// Uniform draw from `{0..n} \ {c}`.
fn other_class<R: Rng>(rng: &mut R, n: usize, c: usize) -> usize {
    let r = rng.random_range(0..n - 1);
    if r >= c {
        r + 1
    } else {
        r
    }
}
