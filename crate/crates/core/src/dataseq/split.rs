use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, MatrixSequence};
use crate::scalar::Scalar;

/// Train/validation/test fractions plus the shuffle seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_frac: f64, val_frac: f64, test_frac: f64, seed: u64) -> Self {
        Self {
            train_frac,
            val_frac,
            test_frac,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !f.is_finite() || *f < 0.0 || *f > 1.0) {
            return Err(DataError::InvalidSplit(format!(
                "fractions must lie in [0, 1], got {fr:?}"
            )));
        }
        let sum: f64 = fr.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(DataError::InvalidSplit(format!(
                "fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for `k` entries: floor for the first two,
    /// remainder to test.
    pub fn sizes(&self, k: usize) -> (usize, usize, usize) {
        // the nudge keeps e.g. 0.3·100 = 30.000000000000004 and 0.7·10 =
        // 6.999999999999999 on the intended integer
        let take = |f: f64| ((f * k as f64) + 1e-9).floor() as usize;
        let train = take(self.train_frac).min(k);
        let val = take(self.val_frac).min(k - train);
        (train, val, k - train - val)
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::new(0.3, 0.1, 0.6, 0)
    }
}

/// Partitions the observations with a seeded shuffle.
pub fn split<S: Scalar>(
    seq: &MatrixSequence<S>,
    spec: &SplitSpec,
) -> Result<(MatrixSequence<S>, MatrixSequence<S>, MatrixSequence<S>), DataError> {
    spec.validate()?;
    if seq.is_empty() {
        return Err(DataError::EmptySequence);
    }
    let mut order: Vec<usize> = (0..seq.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let (n_train, n_val, _) = spec.sizes(seq.len());
    let pick = |idx: &[usize]| {
        let obs = idx.iter().map(|&k| seq.entries()[k]).collect();
        MatrixSequence::new(seq.dims(), obs)
    };
    let train = pick(&order[..n_train])?;
    let val = pick(&order[n_train..n_train + n_val])?;
    let test = pick(&order[n_train + n_val..])?;
    Ok((train, val, test))
}
