//! Time-varying Gaussian process over the discrete arm space.
//!
//! The covariance between observations `(t, n)` and `(t', n')` is the
//! product of a temporal forgetting factor `(1 - λ)^{|t - t'| / 2}` and a
//! squared-exponential similarity over arms. Because the Gram matrix depends
//! only on `(round, arm)` pairs, its Cholesky factor is grown one row per
//! observation and reused across rounds even though the observation values
//! are recomputed every round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub length_scale: f64,
    /// Forgetting rate λ in `[0, 1)`.
    pub forgetting: f64,
    pub noise_variance: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { length_scale: 0.2, forgetting: 0.001, noise_variance: 0.01 }
    }
}

impl KernelParams {
    pub fn new(length_scale: f64, forgetting: f64, noise_variance: f64) -> Result<Self> {
        let p = Self { length_scale, forgetting, noise_variance };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(Error::InvalidConfig(format!("length_scale must be > 0, got {}", self.length_scale)));
        }
        if !(0.0..1.0).contains(&self.forgetting) {
            return Err(Error::InvalidConfig(format!("forgetting must be in [0, 1), got {}", self.forgetting)));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise_variance must be >= 0, got {}", self.noise_variance)));
        }
        Ok(())
    }
}

pub fn kernel(params: &KernelParams, t: u32, n: u32, t2: u32, n2: u32) -> f64 {
    let dt = f64::from(t.abs_diff(t2));
    let dn = f64::from(n) - f64::from(n2);
    let temporal = (1.0 - params.forgetting).powf(dt / 2.0);
    let spatial = (-(dn * dn) / (2.0 * params.length_scale * params.length_scale)).exp();
    temporal * spatial
}

/// Exploration weight schedule `sqrt(β_t) = max(0, coefficient * ln(scale * t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub coefficient: f64,
    pub scale: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self { coefficient: 0.8, scale: 0.4 }
    }
}

impl BetaSchedule {
    /// Square root of β_t, clamped at zero where the logarithm is negative.
    pub fn sqrt_beta(&self, t: u32) -> f64 {
        (self.coefficient * (self.scale * f64::from(t)).ln()).max(0.0)
    }
}

/// Square root of β_t under the default schedule.
pub fn beta(t: u32) -> f64 {
    BetaSchedule::default().sqrt_beta(t)
}

/// Lower-triangular Cholesky factor stored row by row, grown by appending.
#[derive(Debug, Clone, Default, PartialEq)]
struct CholeskyFactor {
    rows: Vec<Vec<f64>>,
}

impl CholeskyFactor {
    fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Solves `L x = b`.
    fn forward(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(b.len());
        for (i, row) in self.rows.iter().enumerate() {
            let s: f64 = row[..i].iter().zip(&x).map(|(l, xj)| l * xj).sum();
            x.push((b[i] - s) / row[i]);
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    fn backward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.rows[i][i];
            let xi = x[i];
            for (xj, l) in x[..i].iter_mut().zip(&self.rows[i][..i]) {
                *xj -= l * xi;
            }
        }
        x
    }

    /// Extends the factor of `A` to that of `[[A, c], [cᵀ, d]]`.
    fn append(&mut self, cross: &[f64], diag: f64) -> Result<()> {
        let mut row = self.forward(cross);
        let pivot = diag - row.iter().map(|v| v * v).sum::<f64>();
        if !(pivot > 1e-12 * diag) {
            return Err(Error::SingularKernel);
        }
        row.push(pivot.sqrt());
        self.rows.push(row);
        Ok(())
    }
}

/// Observed `(round, arm)` locations together with the factor of
/// `K_t + σ²I`. Observation values are supplied at query time.
#[derive(Debug, Clone, PartialEq)]
pub struct GpState {
    params: KernelParams,
    prior_mean: f64,
    observations: Vec<(u32, u32)>,
    factor: CholeskyFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    pub arms: Vec<u32>,
    pub mean: Vec<f64>,
    pub stddev: Vec<f64>,
}

impl GpState {
    pub fn new(params: KernelParams) -> Self {
        Self::with_prior_mean(params, 0.0)
    }

    pub fn with_prior_mean(params: KernelParams, prior_mean: f64) -> Self {
        Self { params, prior_mean, observations: Vec::new(), factor: CholeskyFactor::default() }
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn observations(&self) -> &[(u32, u32)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn last_round(&self) -> Option<u32> {
        self.observations.last().map(|&(t, _)| t)
    }

    /// Adds an observation location. Rounds must strictly increase.
    pub fn push(&mut self, round: u32, arm: u32) -> Result<()> {
        if self.last_round().is_some_and(|last| round <= last) {
            return Err(Error::RoundAlreadyRecorded(round));
        }
        let cross: Vec<f64> = self
            .observations
            .iter()
            .map(|&(t, n)| kernel(&self.params, t, n, round, arm))
            .collect();
        self.factor.append(&cross, 1.0 + self.params.noise_variance)?;
        self.observations.push((round, arm));
        Ok(())
    }

    /// Posterior mean and standard deviation at `targets`, queried at
    /// `query_round`, given one value per stored observation.
    pub fn posterior(&self, targets: &[u32], query_round: u32, values: &[f64]) -> Result<Posterior> {
        if values.len() != self.observations.len() {
            return Err(Error::ValueCountMismatch { expected: self.observations.len(), got: values.len() });
        }
        let centered: Vec<f64> = values.iter().map(|v| v - self.prior_mean).collect();
        let alpha = self.factor.backward(&self.factor.forward(&centered));

        let mut mean = Vec::with_capacity(targets.len());
        let mut stddev = Vec::with_capacity(targets.len());
        for &arm in targets {
            let k: Vec<f64> = self
                .observations
                .iter()
                .map(|&(t, n)| kernel(&self.params, t, n, query_round, arm))
                .collect();
            let v = self.factor.forward(&k);
            mean.push(self.prior_mean + k.iter().zip(&alpha).map(|(a, b)| a * b).sum::<f64>());
            let var = 1.0 - v.iter().map(|x| x * x).sum::<f64>();
            stddev.push(var.max(0.0).sqrt());
        }
        Ok(Posterior { arms: targets.to_vec(), mean, stddev })
    }
}

/// Arm maximising `mean + sqrt_beta * stddev`; ties go to the smallest arm.
pub fn ucb_select(posterior: &Posterior, sqrt_beta: f64) -> u32 {
    let mut best: Option<(u32, f64)> = None;
    for ((&arm, &mu), &sd) in posterior.arms.iter().zip(&posterior.mean).zip(&posterior.stddev) {
        let score = mu + sqrt_beta * sd;
        match best {
            Some((b_arm, b_score)) if score < b_score || (score == b_score && arm > b_arm) => {}
            _ => best = Some((arm, score)),
        }
    }
    best.expect("posterior over at least one arm").0
}
