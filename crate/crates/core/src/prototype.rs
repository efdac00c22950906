//! Class representatives from a (possibly noisy) support set.
//!
//! Centers start at the per-class mean of the given labels and are then
//! refined by k-means over *all* support features, ignoring labels. Soft mode
//! weights each point by a softmax of negative squared distances; hard mode
//! assigns each point to its nearest center.

use serde::{Deserialize, Serialize};

use crate::episode::SupportItem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterMode {
    Soft,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub mode: ClusterMode,
    /// Stop once the summed L2 center shift falls below this.
    pub epsilon: f64,
    pub max_iters: usize,
    /// Distance scale of the soft weights; 1 is the plain `e^{-d}` form.
    pub temperature: f64,
    /// L2-normalize features before clustering (queries must then be normalized too).
    pub normalize_inputs: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            mode: ClusterMode::Soft,
            epsilon: 1e-4,
            max_iters: 100,
            temperature: 1.0,
            normalize_inputs: false,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    /// One center per task class, in task-class order.
    pub centers: Vec<Vec<f64>>,
    pub iterations_used: usize,
    pub converged: bool,
    pub final_shift: f64,
}

impl PrototypeSet {
    /// Wrap centers that did not come out of clustering (e.g. plain class means).
    pub fn from_centers(centers: Vec<Vec<f64>>) -> Self {
        PrototypeSet {
            centers,
            iterations_used: 0,
            converged: true,
            final_shift: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// Row-major `points × clusters` assignment weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged weight rows");
        WeightMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.data[i * self.cols + c]
    }

    pub fn column_sum(&self, c: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, c)).sum()
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Scale to unit L2 norm; the zero vector is returned unchanged.
pub fn l2_normalize(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

/// Mean of the features carrying each given label.
pub fn init_centers(support: &[SupportItem], n_way: usize) -> Result<Vec<Vec<f64>>> {
    let dim = support.first().map_or(0, |s| s.features.len());
    let mut sums = vec![vec![0.0; dim]; n_way];
    let mut counts = vec![0usize; n_way];
    for item in support {
        if item.given_label >= n_way {
            return Err(Error::Invariant(format!(
                "given label {} outside {n_way} task classes",
                item.given_label
            )));
        }
        counts[item.given_label] += 1;
        for (s, x) in sums[item.given_label].iter_mut().zip(&item.features) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .enumerate()
        .map(|(class, (sum, n))| {
            if n == 0 {
                Err(Error::DegenerateClass { class })
            } else {
                Ok(sum.into_iter().map(|s| s / n as f64).collect())
            }
        })
        .collect()
}

/// Softmax of `-‖x_i − μ_c‖² / τ` over clusters, with the row maximum subtracted.
pub fn soft_assign(features: &[Vec<f64>], centers: &[Vec<f64>], temperature: f64) -> WeightMatrix {
    let m = centers.len();
    let mut data = Vec::with_capacity(features.len() * m);
    let mut logits = vec![0.0; m];
    for x in features {
        for (l, c) in logits.iter_mut().zip(centers) {
            *l = -squared_distance(x, c) / temperature;
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = data.len();
        data.extend(logits.iter().map(|l| (l - max).exp()));
        let row = &mut data[start..];
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= total);
    }
    WeightMatrix {
        rows: features.len(),
        cols: m,
        data,
    }
}

/// One-hot weights at the nearest center, lowest index on ties.
pub fn hard_assign(features: &[Vec<f64>], centers: &[Vec<f64>]) -> WeightMatrix {
    let m = centers.len();
    let mut data = vec![0.0; features.len() * m];
    for (i, x) in features.iter().enumerate() {
        data[i * m + nearest(x, centers)] = 1.0;
    }
    WeightMatrix {
        rows: features.len(),
        cols: m,
        data,
    }
}

/// Index of the center closest to `x`, lowest index on ties.
pub fn nearest(x: &[f64], centers: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_distance(x, center);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn weighted_means(features: &[Vec<f64>], weights: &WeightMatrix) -> Vec<Option<Vec<f64>>> {
    let dim = features.first().map_or(0, Vec::len);
    (0..weights.cols())
        .map(|c| {
            let mut acc = vec![0.0; dim];
            let mut total = 0.0;
            for (i, x) in features.iter().enumerate() {
                let w = weights.get(i, c);
                if w == 0.0 {
                    continue;
                }
                total += w;
                for (a, v) in acc.iter_mut().zip(x) {
                    *a += w * v;
                }
            }
            (total > 0.0).then(|| acc.into_iter().map(|a| a / total).collect())
        })
        .collect()
}

/// Weight-normalized mean per cluster.
pub fn update_centers(features: &[Vec<f64>], weights: &WeightMatrix) -> Result<Vec<Vec<f64>>> {
    weighted_means(features, weights)
        .into_iter()
        .enumerate()
        .map(|(cluster, c)| c.ok_or(Error::DegenerateCluster { cluster }))
        .collect()
}

pub fn run_clustering(
    support: &[SupportItem],
    n_way: usize,
    config: &ClusterConfig,
) -> Result<PrototypeSet> {
    run_clustering_with(support, n_way, config, |_, _| {})
}

/// As [`run_clustering`], calling `observe(k, centers)` with the initial
/// centers (`k = 0`) and after every update.
pub fn run_clustering_with<F>(
    support: &[SupportItem],
    n_way: usize,
    config: &ClusterConfig,
    mut observe: F,
) -> Result<PrototypeSet>
where
    F: FnMut(usize, &[Vec<f64>]),
{
    config.validate()?;
    if n_way < 2 {
        return Err(Error::Config(format!("need at least 2 clusters, got {n_way}")));
    }
    let features: Vec<Vec<f64>> = support
        .iter()
        .map(|s| {
            if config.normalize_inputs {
                l2_normalize(&s.features)
            } else {
                s.features.clone()
            }
        })
        .collect();
    let labeled: Vec<SupportItem> = support
        .iter()
        .zip(&features)
        .map(|(s, f)| SupportItem {
            features: f.clone(),
            ..s.clone()
        })
        .collect();

    let mut centers = init_centers(&labeled, n_way)?;
    observe(0, &centers);

    let mut shift = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=config.max_iters {
        let weights = match config.mode {
            ClusterMode::Soft => soft_assign(&features, &centers, config.temperature),
            ClusterMode::Hard => hard_assign(&features, &centers),
        };
        // an empty cluster keeps its previous center
        let next: Vec<Vec<f64>> = weighted_means(&features, &weights)
            .into_iter()
            .zip(&centers)
            .map(|(new, old)| new.unwrap_or_else(|| old.clone()))
            .collect();
        shift = next
            .iter()
            .zip(&centers)
            .map(|(a, b)| euclidean_distance(a, b))
            .sum();
        centers = next;
        iterations = k;
        observe(k, &centers);
        if shift < config.epsilon {
            converged = true;
            break;
        }
    }

    Ok(PrototypeSet {
        centers,
        iterations_used: iterations,
        converged,
        final_shift: shift,
    })
}
