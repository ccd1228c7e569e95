//! Completion of dynamic weighted directed graphs stored as incomplete
//! matrix sequences.
//!
//! Each node's outgoing latent factors are tracked through time with an
//! extended Kalman filter, while the target-side factors are shared by all
//! slots and re-fitted by alternating least squares. The numeric core is
//! generic over [`Scalar`] (`f32` or `f64`); the aliases below fix it to
//! `f64`, which is what the command-line tool uses.

pub mod activation;
pub mod als;
pub mod cli;
pub mod dataseq;
pub mod ekf;
pub mod linalg;
pub mod report;
pub mod scalar;
pub mod trainer;

pub use scalar::Scalar;

pub type Matrix = linalg::DenseMatrix<f64>;
pub type Sequence = dataseq::MatrixSequence<f64>;
pub type Observation = dataseq::Observation<f64>;
pub type Factors = dataseq::FactorSet<f64>;
pub type State = ekf::StateEstimate<f64>;
pub type Noise = ekf::NoiseConfig<f64>;
pub type Temporal = ekf::TemporalFactors<f64>;
pub type Consistent = als::ConsistentFactors<f64>;
pub type Hyper = trainer::HyperParams<f64>;
pub type Model = trainer::TrainedModel<f64>;
