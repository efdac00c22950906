//! Two-field classifier over class prototypes.
//!
//! Each class neuron sees the query through a difference-of-Gaussians
//! receptive field centered on its prototype,
//!
//! ```text
//! φσ(ρ) = A·exp(−ρ²/2σ²) − B·exp(−ρ²/2(3σ)²)
//! u_c  = act(φσ(ρ_c) − h_u),   act(v) = 1 − e^{−v} for v ≥ 0, else 0
//! ```
//!
//! and the receptive-field scale σ is searched until exactly one neuron fires.
//! Since φσ(ρ) = φ1(ρ/σ) and φ1 is decreasing on its positive lobe, neuron
//! `c` fires iff `ρ_c < σ·r_h`, where `r_h` solves `φ1(r_h) = h_u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prototype::{euclidean_distance, PrototypeSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum Sigma0Policy {
    /// Mean distance from the query to the prototypes (1 if that is zero).
    MeanDistance,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleMode {
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Excitatory amplitude.
    pub a: f64,
    /// Inhibitory amplitude.
    pub b: f64,
    /// Resting level.
    pub h_u: f64,
    /// Scale tuning ratio.
    pub lambda: f64,
    pub sigma0: Sigma0Policy,
    pub max_adapt_iters: usize,
    pub scale_mode: ScaleMode,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            a: 1.5,
            b: 0.5,
            h_u: 0.5,
            lambda: 0.5,
            sigma0: Sigma0Policy::MeanDistance,
            max_adapt_iters: 100,
            scale_mode: ScaleMode::Adaptive,
        }
    }
}

impl FieldConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.a > self.b && self.a.is_finite()) {
            return Err(Error::Config(format!(
                "need A > B > 0, got A = {}, B = {}",
                self.a, self.b
            )));
        }
        if !(self.h_u > 0.0 && self.h_u < self.a - self.b) {
            return Err(Error::Config(format!(
                "resting level must lie in (0, A − B) = (0, {}), got {}",
                self.a - self.b,
                self.h_u
            )));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Config(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if self.max_adapt_iters == 0 {
            return Err(Error::Config("max_adapt_iters must be at least 1".into()));
        }
        if let Sigma0Policy::Fixed(s) = self.sigma0 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma0 must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Receptive-field profile as a function of the distance `rho`.
pub fn dog_profile(rho: f64, sigma: f64, a: f64, b: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let t = rho / sigma;
    let t2 = t * t;
    Ok(a * (-0.5 * t2).exp() - b * (-t2 / 18.0).exp())
}

pub fn dog_kernel(x: &[f64], center: &[f64], sigma: f64, a: f64, b: f64) -> Result<f64> {
    dog_profile(euclidean_distance(x, center), sigma, a, b)
}

/// `1 − e^{−v}` for positive input, else 0. Strictly positive for every `v > 0`.
pub fn activation(v: f64) -> f64 {
    if v > 0.0 {
        -(-v).exp_m1()
    } else {
        0.0
    }
}

/// Zero of the unit-scale profile: `(3/2)·sqrt(ln(A/B))`.
pub fn zero_crossing(a: f64, b: f64) -> f64 {
    1.5 * (a / b).ln().sqrt()
}

/// Distance at which the unit-scale profile attains its minimum: `(3/2)·sqrt(ln(9A/B))`.
pub fn trough_radius(a: f64, b: f64) -> f64 {
    1.5 * (9.0 * a / b).ln().sqrt()
}

/// Unit-scale firing radius `r_h`, the root of `φ1(r) = h_u` on `(0, zero_crossing)`.
pub fn activation_radius(config: &FieldConfig) -> Result<f64> {
    config.validate()?;
    let f = |r: f64| dog_profile(r, 1.0, config.a, config.b).map(|v| v - config.h_u);
    let (mut lo, mut hi) = (0.0, zero_crossing(config.a, config.b));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationState {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub n_active: usize,
}

impl ActivationState {
    fn from_distances(distances: &[f64], sigma: f64, config: &FieldConfig) -> Result<Self> {
        let u = distances
            .iter()
            .map(|&rho| Ok(activation(dog_profile(rho, sigma, config.a, config.b)? - config.h_u)))
            .collect::<Result<Vec<_>>>()?;
        let n_active = u.iter().filter(|&&v| v > 0.0).count();
        Ok(ActivationState { sigma, u, n_active })
    }

    pub fn active_classes(&self) -> Vec<usize> {
        (0..self.u.len()).filter(|&c| self.u[c] > 0.0).collect()
    }
}

pub fn field_response(
    x: &[f64],
    protos: &PrototypeSet,
    sigma: f64,
    config: &FieldConfig,
) -> Result<ActivationState> {
    if protos.is_empty() {
        return Err(Error::Config("no prototypes".into()));
    }
    ActivationState::from_distances(&distances(x, protos), sigma, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SingleActivation,
    FallbackNearest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub predicted: usize,
    pub sigma_final: Option<f64>,
    pub terminated: Termination,
    /// Every `(σ, n_active)` evaluated, in order.
    pub trace: Vec<(f64, usize)>,
}

fn distances(x: &[f64], protos: &PrototypeSet) -> Vec<f64> {
    protos
        .centers
        .iter()
        .map(|c| euclidean_distance(x, c))
        .collect()
}

/// Lowest index attaining the minimum distance.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn initial_sigma(distances: &[f64], policy: Sigma0Policy) -> f64 {
    match policy {
        Sigma0Policy::Fixed(s) => s,
        Sigma0Policy::MeanDistance => {
            let mean = distances.iter().sum::<f64>() / distances.len() as f64;
            if mean > 0.0 && mean.is_finite() {
                mean
            } else {
                1.0
            }
        }
    }
}

fn check_prototypes(protos: &PrototypeSet, config: &FieldConfig) -> Result<()> {
    config.validate()?;
    if protos.len() < 2 {
        return Err(Error::Config(format!(
            "classification needs at least 2 prototypes, got {}",
            protos.len()
        )));
    }
    Ok(())
}

/// Search the receptive-field scale until exactly one class neuron fires.
///
/// Too many active neurons shrink σ towards the lower bound; none active
/// grows σ by `1/λ` until an upper bound exists, then moves it towards that
/// bound. If `max_adapt_iters` scales are tried without isolating a single
/// neuron (distance ties), the nearest prototype is returned.
pub fn adapt_scale(x: &[f64], protos: &PrototypeSet, config: &FieldConfig) -> Result<PredictionResult> {
    check_prototypes(protos, config)?;
    let rho = distances(x, protos);
    let lambda = config.lambda;

    let mut sigma = initial_sigma(&rho, config.sigma0);
    let mut sigma_min = 0.0;
    let mut sigma_max = 0.0;
    let mut trace = Vec::new();

    for _ in 0..config.max_adapt_iters {
        let state = ActivationState::from_distances(&rho, sigma, config)?;
        trace.push((sigma, state.n_active));
        match state.n_active {
            1 => {
                return Ok(PredictionResult {
                    predicted: state.active_classes()[0],
                    sigma_final: Some(sigma),
                    terminated: Termination::SingleActivation,
                    trace,
                })
            }
            0 if sigma_max == 0.0 => sigma /= lambda,
            0 => {
                sigma_min = sigma;
                sigma = sigma_max - lambda * (sigma_max - sigma_min);
            }
            _ => {
                sigma_max = sigma;
                sigma = sigma_max - lambda * (sigma_max - sigma_min);
            }
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            break;
        }
    }

    Ok(PredictionResult {
        predicted: argmin(&rho),
        sigma_final: None,
        terminated: Termination::FallbackNearest,
        trace,
    })
}

/// Classify `x` under the configured scale mode.
///
/// Fixed mode evaluates the field once at σ₀ and takes the strongest neuron;
/// if none fires, the class with the largest raw kernel value wins.
pub fn predict(x: &[f64], protos: &PrototypeSet, config: &FieldConfig) -> Result<PredictionResult> {
    match config.scale_mode {
        ScaleMode::Adaptive => adapt_scale(x, protos, config),
        ScaleMode::Fixed => {
            check_prototypes(protos, config)?;
            let rho = distances(x, protos);
            let sigma = initial_sigma(&rho, config.sigma0);
            let state = ActivationState::from_distances(&rho, sigma, config)?;
            let trace = vec![(sigma, state.n_active)];
            if state.n_active > 0 {
                return Ok(PredictionResult {
                    predicted: argmax(&state.u),
                    sigma_final: Some(sigma),
                    terminated: Termination::SingleActivation,
                    trace,
                });
            }
            let raw = rho
                .iter()
                .map(|&r| dog_profile(r, sigma, config.a, config.b))
                .collect::<Result<Vec<_>>>()?;
            Ok(PredictionResult {
                predicted: argmax(&raw),
                sigma_final: Some(sigma),
                terminated: Termination::FallbackNearest,
                trace,
            })
        }
    }
}
