use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{EmbeddingSet, FeatureVector, LabeledEmbedding};
use crate::error::{Error, Result};

/// Parameters of the Gaussian-blob generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Class means are drawn uniformly on the sphere of this radius.
    pub center_radius: f64,
    /// Isotropic within-class standard deviation. Zero collapses every class onto its center.
    pub within_std: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.per_class == 0 || self.dim == 0 {
            return Err(Error::Config(
                "n_classes, per_class and dim must be positive".into(),
            ));
        }
        if !(self.center_radius.is_finite() && self.center_radius > 0.0) {
            return Err(Error::Config(format!(
                "center_radius must be positive, got {}",
                self.center_radius
            )));
        }
        if !(self.within_std.is_finite() && self.within_std >= 0.0) {
            return Err(Error::Config(format!(
                "within_std must be non-negative, got {}",
                self.within_std
            )));
        }
        Ok(())
    }
}

/// A generated set together with the class means it was drawn around.
#[derive(Debug, Clone)]
pub struct SyntheticSet {
    pub set: EmbeddingSet,
    pub centers: Vec<Vec<f64>>,
}

pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<EmbeddingSet> {
    generate_synthetic_with_centers(spec, seed).map(|s| s.set)
}

pub fn generate_synthetic_with_centers(spec: &SynthSpec, seed: u64) -> Result<SyntheticSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let centers: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| random_on_sphere(&mut rng, spec.dim, spec.center_radius))
        .collect();

    let mut items = Vec::with_capacity(spec.n_classes * spec.per_class);
    for (class_id, center) in centers.iter().enumerate() {
        for _ in 0..spec.per_class {
            let values = center
                .iter()
                .map(|&c| {
                    let z: f64 = rng.sample(StandardNormal);
                    (c + spec.within_std * z) as f32
                })
                .collect();
            items.push(LabeledEmbedding {
                features: FeatureVector::new(values)?,
                class_id: class_id as u32,
            });
        }
    }

    let width = (spec.n_classes - 1).to_string().len();
    let class_names = (0..spec.n_classes)
        .map(|c| format!("class{c:0width$}"))
        .collect();
    let set = EmbeddingSet::new(spec.dim, class_names, items)?;
    Ok(SyntheticSet { set, centers })
}

fn random_on_sphere(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| radius * x / norm).collect();
        }
    }
}
