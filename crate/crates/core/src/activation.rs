use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Elementwise LeakyReLU `f(x) = x` for `x > 0`, `α·x` otherwise.
///
/// `f′(0)` is taken as `α`. `α = 1` is the identity map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation<S> {
    slope: S,
}

impl<S: Scalar> Activation<S> {
    pub fn leaky_relu(slope: S) -> Self {
        assert!(
            slope > S::zero() && slope.is_finite(),
            "activation slope must be positive and finite"
        );
        Self { slope }
    }

    pub fn identity() -> Self {
        Self { slope: S::one() }
    }

    pub fn slope(&self) -> S {
        self.slope
    }

    pub fn is_identity(&self) -> bool {
        self.slope == S::one()
    }

    #[inline]
    pub fn value(&self, x: S) -> S {
        if x > S::zero() {
            x
        } else {
            self.slope * x
        }
    }

    #[inline]
    pub fn derivative(&self, x: S) -> S {
        if x > S::zero() {
            S::one()
        } else {
            self.slope
        }
    }

    /// `(f(x), f′(x))` elementwise.
    pub fn eval(&self, x: &[S]) -> (Vec<S>, Vec<S>) {
        x.iter().map(|&v| (self.value(v), self.derivative(v))).unzip()
    }
}
