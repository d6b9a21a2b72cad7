//! Monte Carlo trajectory ensembles and sample-based entropy rates.
//!
//! Each trajectory combines a frozen quantum draw with classical noise:
//!
//! `x(t_n) = x0 + (p / m) t_n + W(t_n)`
//!
//! with `x0 ~ N(0, dx0^2)` and `p ~ N(0, dp^2)` drawn once per particle
//! and `W` a Wiener path with increments `N(0, 2 D dt)`. The time
//! marginals are then exactly Gaussian with the variance breakdown from
//! [`crate::entropy::variance_total`]; schemes mask the quantum or
//! classical terms to isolate the components. Increments are exact
//! Gaussian draws, so there is no discretization error to tolerate.
//!
//! All randomness is keyed by `(seed, particle, step, channel)` through
//! [`crate::streams`], which makes regeneration bit-identical regardless
//! of how the particle loop is scheduled.

use crate::entropy::{gaussian_entropy, variance_total, EntropyError, RateCurvePoint, RateMethod};
use crate::streams;
use crate::units::DerivedScales;
use rayon::prelude::*;
use serde::Serialize;
use std::str::FromStr;
use thiserror::Error;

const CH_INITIAL: u64 = 0;
const CH_MOMENTUM: u64 = 1;
const CH_WIENER: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("dt must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("need at least 2 particles, got {0}")]
    TooFewParticles(usize),
    #[error("need at least 1 step, got {0}")]
    TooFewStepsToSample(usize),
    #[error("rate estimation needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("neighbor order must be in 1..=20, got {0}")]
    InvalidNeighborOrder(usize),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

/// Which variance terms a generated ensemble carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Quantum draw plus Wiener path.
    Full,
    /// Frozen `x0 + (p/m) t` only.
    QuantumOnly,
    /// Wiener path only.
    ClassicalOnly,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Full => "full",
            Scheme::QuantumOnly => "quantum_only",
            Scheme::ClassicalOnly => "classical_only",
        }
    }

    fn has_quantum(self) -> bool {
        self != Scheme::ClassicalOnly
    }

    fn has_classical(self) -> bool {
        self != Scheme::QuantumOnly
    }

    /// The marginal variance this scheme should show at time `t`.
    pub fn analytic_variance(self, scales: &DerivedScales, t: f64) -> Result<f64, EntropyError> {
        let b = variance_total(scales, t)?;
        Ok(match self {
            Scheme::Full => b.total,
            Scheme::QuantumOnly => b.quantum_static + b.quantum_drift,
            Scheme::ClassicalOnly => b.classical,
        })
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "full" => Ok(Scheme::Full),
            "quantum_only" => Ok(Scheme::QuantumOnly),
            "classical_only" => Ok(Scheme::ClassicalOnly),
            other => Err(format!(
                "unknown scheme '{other}' (expected full, quantum_only, or classical_only)"
            )),
        }
    }
}

/// Sampled positions, one row per particle, columns for steps `0..=n_steps`.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    scales: DerivedScales,
    dt: f64,
    n_steps: usize,
    n_particles: usize,
    seed: u64,
    scheme: Scheme,
    positions: Vec<f64>,
}

impl TrajectoryEnsemble {
    pub fn scales(&self) -> &DerivedScales {
        &self.scales
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn position(&self, particle: usize, step: usize) -> f64 {
        self.positions[particle * (self.n_steps + 1) + step]
    }

    /// All particle positions at one step.
    pub fn column(&self, step: usize) -> Vec<f64> {
        (0..self.n_particles)
            .map(|p| self.position(p, step))
            .collect()
    }

    /// Time of a step column.
    pub fn time_at(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    fn column_mean_variance(&self, step: usize) -> (f64, f64) {
        let n = self.n_particles as f64;
        let mut sum = 0.0;
        for p in 0..self.n_particles {
            sum += self.position(p, step);
        }
        let mean = sum / n;
        let mut sumsq = 0.0;
        for p in 0..self.n_particles {
            let d = self.position(p, step) - mean;
            sumsq += d * d;
        }
        (mean, sumsq / (n - 1.0))
    }
}

/// Generate an ensemble. Identical arguments give a bit-identical result
/// whatever the worker count.
pub fn sample_trajectories(
    scales: &DerivedScales,
    dt: f64,
    n_steps: usize,
    n_particles: usize,
    seed: u64,
    scheme: Scheme,
) -> Result<TrajectoryEnsemble, EnsembleError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EnsembleError::NonPositiveDt(dt));
    }
    if n_steps < 1 {
        return Err(EnsembleError::TooFewStepsToSample(n_steps));
    }
    if n_particles < 2 {
        return Err(EnsembleError::TooFewParticles(n_particles));
    }

    let row_len = n_steps + 1;
    let mut positions = vec![0.0f64; n_particles * row_len];
    let wiener_sigma = (2.0 * scales.diffusion_const * dt).sqrt();
    let velocity_factor = 1.0 / scales.mass;
    let (quantum, classical) = (scheme.has_quantum(), scheme.has_classical());
    let scales = *scales;

    positions
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(particle, row)| {
            let i = particle as u64;
            let x0 = scales.dx0 * streams::standard_normal(seed, i, 0, CH_INITIAL);
            let p = scales.dp * streams::standard_normal(seed, i, 0, CH_MOMENTUM);
            row[0] = if quantum { x0 } else { 0.0 };
            let mut wiener = 0.0;
            for (step, slot) in row.iter_mut().enumerate().skip(1) {
                if classical {
                    wiener +=
                        wiener_sigma * streams::standard_normal(seed, i, step as u64, CH_WIENER);
                }
                let t = step as f64 * dt;
                let mut x = 0.0;
                if quantum {
                    x += x0 + p * velocity_factor * t;
                }
                if classical {
                    x += wiener;
                }
                *slot = x;
            }
        });

    Ok(TrajectoryEnsemble {
        scales,
        dt,
        n_steps,
        n_particles,
        seed,
        scheme,
        positions,
    })
}

/// Per-step sample statistics against the scheme's analytic variance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub t: f64,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of the variance under Gaussian theory:
    /// `variance * sqrt(2 / (n - 1))`.
    pub std_error: f64,
    pub variance_analytic: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    pub rows: Vec<StepStats>,
}

pub fn ensemble_stats(ensemble: &TrajectoryEnsemble) -> EnsembleStats {
    let se_factor = (2.0 / (ensemble.n_particles as f64 - 1.0)).sqrt();
    let rows = (0..=ensemble.n_steps())
        .map(|step| {
            let (mean, variance) = ensemble.column_mean_variance(step);
            let t = ensemble.time_at(step);
            let variance_analytic = ensemble
                .scheme()
                .analytic_variance(ensemble.scales(), t)
                .expect("step times are non-negative");
            StepStats {
                step,
                t,
                mean,
                variance,
                std_error: variance * se_factor,
                variance_analytic,
            }
        })
        .collect();
    EnsembleStats { rows }
}

/// Digamma at positive integer argument: the harmonic sum below 64, the
/// asymptotic series (error < 1e-16 there) above.
fn digamma_integer(m: usize) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if m < 64 {
        let mut h = 0.0;
        for j in 1..m {
            h += 1.0 / j as f64;
        }
        h - EULER_GAMMA
    } else {
        let x = m as f64;
        x.ln() - 0.5 / x - 1.0 / (12.0 * x * x) + 1.0 / (120.0 * x.powi(4))
            - 1.0 / (252.0 * x.powi(6))
    }
}

/// Distance from `sorted[i]` to its k-th nearest neighbor, found by
/// merging the monotone distance runs on each side.
fn kth_neighbor_distance(sorted: &[f64], i: usize, k: usize) -> f64 {
    let mut left = i;
    let mut right = i + 1;
    let mut dist = 0.0;
    for _ in 0..k {
        let dl = if left > 0 {
            sorted[i] - sorted[left - 1]
        } else {
            f64::INFINITY
        };
        let dr = if right < sorted.len() {
            sorted[right] - sorted[i]
        } else {
            f64::INFINITY
        };
        if dl <= dr {
            dist = dl;
            left -= 1;
        } else {
            dist = dr;
            right += 1;
        }
    }
    dist
}

/// Nonparametric differential entropy of one-dimensional samples, in
/// nats, from order-`k` nearest-neighbor distances:
///
/// `h = psi(N) - psi(k) + (1/N) sum_i ln(2 r_i)`
///
/// where `r_i` is the distance from sample `i` to its k-th nearest
/// neighbor and `psi` is the digamma function (Kozachenko-Leonenko).
/// The construction is exactly shift-invariant and shifts by `ln c`
/// under scaling by `c`. Duplicate samples give `r_i = 0` and the
/// estimate diverges to negative infinity, faithfully reporting a
/// degenerate empirical distribution.
pub fn entropy_nn(samples: &[f64], k: usize) -> Result<f64, EnsembleError> {
    const MIN_SAMPLES: usize = 100;
    if samples.len() < MIN_SAMPLES {
        return Err(EnsembleError::TooFewSamples {
            got: samples.len(),
            min: MIN_SAMPLES,
        });
    }
    if !(1..=20).contains(&k) {
        return Err(EnsembleError::InvalidNeighborOrder(k));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    let sum_log: f64 = (0..n)
        .map(|i| (2.0 * kth_neighbor_distance(&sorted, i, k)).ln())
        .sum();
    Ok(digamma_integer(n) - digamma_integer(k) + sum_log / n as f64)
}

/// Which entropy estimator drives [`rate_from_ensemble`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyEstimator {
    /// Fit the sample variance, evaluate the Gaussian closed form.
    PluginGaussian,
    /// Kozachenko-Leonenko with order-`k` neighbors.
    NearestNeighbor { k: usize },
}

impl EntropyEstimator {
    pub fn label(self) -> &'static str {
        match self {
            EntropyEstimator::PluginGaussian => "plugin_gaussian",
            EntropyEstimator::NearestNeighbor { .. } => "nearest_neighbor",
        }
    }
}

/// Estimate per-step entropies and turn successive differences into a
/// rate curve: point `n` is `[h(n+1) - h(n)] / dt`.
pub fn rate_from_ensemble(
    ensemble: &TrajectoryEnsemble,
    estimator: EntropyEstimator,
) -> Result<Vec<RateCurvePoint>, EnsembleError> {
    if ensemble.n_steps() < 2 {
        return Err(EnsembleError::TooFewSteps(ensemble.n_steps()));
    }
    let entropies: Vec<f64> = (0..=ensemble.n_steps())
        .map(|step| match estimator {
            EntropyEstimator::PluginGaussian => {
                let (_, variance) = ensemble.column_mean_variance(step);
                Ok(gaussian_entropy(variance)?)
            }
            EntropyEstimator::NearestNeighbor { k } => entropy_nn(&ensemble.column(step), k),
        })
        .collect::<Result<_, EnsembleError>>()?;
    Ok((0..ensemble.n_steps())
        .map(|step| RateCurvePoint {
            n: step as u64,
            dt: ensemble.dt(),
            rate: (entropies[step + 1] - entropies[step]) / ensemble.dt(),
            method: RateMethod::ConditionalIncrement,
        })
        .collect())
}
