use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DataError, Dims, MatrixSequence, Observation};
use crate::activation::Activation;
use crate::linalg::{dot, DenseMatrix};
use crate::scalar::Scalar;

/// Parameters of the drifting low-rank generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub nodes: usize,
    pub slots: usize,
    pub rank: usize,
    pub density: f64,
    /// Std-dev of the per-slot latent random-walk step.
    pub drift_scale: f64,
    /// Std-dev of additive observation noise.
    pub noise_sigma: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            nodes: 50,
            slots: 30,
            rank: 4,
            density: 0.02,
            drift_scale: 0.05,
            noise_sigma: 0.05,
            alpha: 0.01,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let bad = |m: &str| Err(DataError::InvalidConfig(m.to_owned()));
        if self.nodes == 0 || self.slots == 0 {
            return bad("nodes and slots must be at least 1");
        }
        if self.rank == 0 {
            return bad("rank must be at least 1");
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad("density must lie in (0, 1]");
        }
        if !(self.drift_scale >= 0.0 && self.drift_scale.is_finite()) {
            return bad("drift_scale must be finite and non-negative");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and non-negative");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.nodes, self.slots)
    }
}

/// Temporal factors `N_(1..T)` (each `M×f`) plus the shared target factors `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSet<S> {
    pub temporal: Vec<DenseMatrix<S>>,
    pub consistent: DenseMatrix<S>,
}

impl<S: Scalar> FactorSet<S> {
    /// `⟨n_(t),i, q_j⟩` with 1-based indices.
    pub fn entry(&self, t: usize, i: usize, j: usize) -> S {
        dot(self.temporal[t - 1].row(i - 1), self.consistent.row(j - 1))
    }
}

/// Uniform on `(0, 0.1]`.
pub(crate) fn small_positive<R: Rng>(rng: &mut R) -> f64 {
    0.1 * (1.0 - rng.random::<f64>())
}

/// Draws a drifting low-rank sequence and returns it with its generating
/// factors.
///
/// Draw order is fixed: `N_(1)`, `Q`, the drift of each later slot, then one
/// keep/noise pair per potential entry in `(t, i, j)` order.
pub fn generate_synthetic<S: Scalar>(
    cfg: &SyntheticConfig,
) -> Result<(MatrixSequence<S>, FactorSet<S>), DataError> {
    cfg.validate()?;
    let (m, slots, f) = (cfg.nodes, cfg.slots, cfg.rank);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let act = Activation::leaky_relu(cfg.alpha);

    let mut first = vec![0.0; m * f];
    first.iter_mut().for_each(|v| *v = small_positive(&mut rng));
    let mut q = vec![0.0; m * f];
    q.iter_mut().for_each(|v| *v = small_positive(&mut rng));

    let mut temporal: Vec<Vec<f64>> = Vec::with_capacity(slots);
    temporal.push(first);
    for _ in 1..slots {
        let prev = temporal.last().unwrap();
        let next = prev
            .iter()
            .map(|&v| {
                let step: f64 = rng.sample(StandardNormal);
                act.value(v + cfg.drift_scale * step)
            })
            .collect();
        temporal.push(next);
    }

    let mut obs = Vec::new();
    for (t, nt) in temporal.iter().enumerate() {
        for i in 0..m {
            let ni = &nt[i * f..(i + 1) * f];
            for j in 0..m {
                if rng.random::<f64>() < cfg.density {
                    let noise: f64 = rng.sample(StandardNormal);
                    let w = dot(ni, &q[j * f..(j + 1) * f]) + cfg.noise_sigma * noise;
                    obs.push(Observation::new(t + 1, i + 1, j + 1, S::lit(w)));
                }
            }
        }
    }

    let to_matrix = |v: Vec<f64>| {
        DenseMatrix::from_vec(m, f, v.into_iter().map(S::lit).collect()).expect("shape")
    };
    let factors = FactorSet {
        temporal: temporal.into_iter().map(to_matrix).collect(),
        consistent: to_matrix(q),
    };
    Ok((MatrixSequence::new(cfg.dims(), obs)?, factors))
}
