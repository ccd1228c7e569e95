//! Per-node extended Kalman filtering of the temporal latent factors.
//!
//! Each node `i` carries a latent state `n_(t),i` that evolves as
//! `n_t = f(n_{t-1}) + w` and emits its observed out-edges at slot `t` as
//! `y = Q_sel·f(n_t) + r`, where `f` is the elementwise LeakyReLU and
//! `Q_sel` holds the rows of `Q` for the targets it touched. Nodes are
//! independent given `Q`, so the filter runs them in parallel; every node
//! writes only its own rows, which keeps results identical for any thread
//! count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::activation::Activation;
use crate::dataseq::MatrixSequence;
use crate::linalg::{cholesky, solve_spd, symmetrize, DenseMatrix, LinalgError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum EkfError {
    #[error("state became non-finite")]
    NonFiniteState,
    #[error("expected a {expected:?} estimate, got {got:?}")]
    WrongFlavor { expected: Flavor, got: Flavor },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("slot {t}, node {i}: {source}")]
    At {
        t: usize,
        i: usize,
        #[source]
        source: Box<EkfError>,
    },
}

impl EkfError {
    fn at(self, t: usize, i: usize) -> Self {
        EkfError::At {
            t,
            i,
            source: Box::new(self),
        }
    }
}

/// Isotropic noise levels: `W = w_var·I`, `R = r_var·I`, `P₀ = p0·I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig<S> {
    pub w_var: S,
    pub r_var: S,
    pub p0: S,
}

impl<S: Scalar> Default for NoiseConfig<S> {
    fn default() -> Self {
        Self {
            w_var: S::lit(0.01),
            r_var: S::lit(0.1),
            p0: S::one(),
        }
    }
}

impl<S: Scalar> NoiseConfig<S> {
    pub fn validate(&self) -> Result<(), String> {
        let ok = |v: S| v.is_finite() && v >= S::zero();
        if !ok(self.w_var) || !ok(self.r_var) {
            return Err("noise variances must be finite and non-negative".into());
        }
        if !(self.p0.is_finite() && self.p0 > S::zero()) {
            return Err("initial covariance scale must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Flavor {
    Prior,
    Posterior,
}

/// Mean and covariance of one node's latent state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate<S> {
    pub mean: Vec<S>,
    pub cov: DenseMatrix<S>,
    pub flavor: Flavor,
}

impl<S: Scalar> StateEstimate<S> {
    pub fn posterior(mean: Vec<S>, cov: DenseMatrix<S>) -> Self {
        Self {
            mean,
            cov,
            flavor: Flavor::Posterior,
        }
    }

    pub fn prior(mean: Vec<S>, cov: DenseMatrix<S>) -> Self {
        Self {
            mean,
            cov,
            flavor: Flavor::Prior,
        }
    }

    pub fn rank(&self) -> usize {
        self.mean.len()
    }

    fn expect(&self, flavor: Flavor) -> Result<(), EkfError> {
        if self.flavor != flavor {
            return Err(EkfError::WrongFlavor {
                expected: flavor,
                got: self.flavor,
            });
        }
        if self.cov.rows() != self.mean.len() || !self.cov.is_square() {
            return Err(EkfError::DimensionMismatch(format!(
                "mean of length {} with {}x{} covariance",
                self.mean.len(),
                self.cov.rows(),
                self.cov.cols()
            )));
        }
        Ok(())
    }

    fn is_finite(&self) -> bool {
        self.mean.iter().all(|v| v.is_finite()) && self.cov.is_finite()
    }
}

/// Affine expansion `S(n) ≈ B·n + C` of the transition at the posterior mean.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionLinearization<S> {
    pub jacobian: DenseMatrix<S>,
    pub offset: Vec<S>,
}

/// Affine expansion `O(n) ≈ D·n + H` of the observation map at the prior mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationLinearization<S> {
    /// `O(n̂⁻) = Q_sel·f(n̂⁻)`.
    pub predicted: Vec<S>,
    pub jacobian: DenseMatrix<S>,
    pub offset: Vec<S>,
    pub q_rows: DenseMatrix<S>,
}

/// Time-propagates a posterior through the LeakyReLU transition.
pub fn predict<S: Scalar>(
    post: &StateEstimate<S>,
    act: &Activation<S>,
    noise: &NoiseConfig<S>,
) -> Result<(StateEstimate<S>, TransitionLinearization<S>), EkfError> {
    post.expect(Flavor::Posterior)?;
    if !post.is_finite() {
        return Err(EkfError::NonFiniteState);
    }
    let (fx, dfx) = act.eval(&post.mean);
    let f = post.rank();

    // B is diagonal, so B·P·Bᵀ is an elementwise rescale
    let mut cov = DenseMatrix::zeros(f, f);
    for r in 0..f {
        for c in 0..f {
            cov[(r, c)] = dfx[r] * post.cov[(r, c)] * dfx[c];
        }
    }
    cov.add_to_diagonal(noise.w_var);
    let cov = symmetrize(&cov)?;

    let offset = fx
        .iter()
        .zip(&dfx)
        .zip(&post.mean)
        .map(|((&v, &d), &x)| v - d * x)
        .collect();
    let prior = StateEstimate::prior(fx, cov);
    if !prior.is_finite() {
        return Err(EkfError::NonFiniteState);
    }
    Ok((
        prior,
        TransitionLinearization {
            jacobian: DenseMatrix::from_diagonal(&dfx),
            offset,
        },
    ))
}

/// Linearizes `O(n) = Q_sel·f(n)` at the prior mean.
pub fn linearize_observation<S: Scalar>(
    prior: &StateEstimate<S>,
    q_rows: &DenseMatrix<S>,
    act: &Activation<S>,
) -> Result<ObservationLinearization<S>, EkfError> {
    prior.expect(Flavor::Prior)?;
    if q_rows.cols() != prior.rank() {
        return Err(EkfError::DimensionMismatch(format!(
            "q_rows has {} columns, state rank is {}",
            q_rows.cols(),
            prior.rank()
        )));
    }
    let (fx, dfx) = act.eval(&prior.mean);
    let predicted = q_rows.matvec(&fx)?;
    let mut jacobian = q_rows.clone();
    for a in 0..jacobian.rows() {
        for (v, &d) in jacobian.row_mut(a).iter_mut().zip(&dfx) {
            *v *= d;
        }
    }
    let dn = jacobian.matvec(&prior.mean)?;
    let offset = predicted.iter().zip(&dn).map(|(&o, &d)| o - d).collect();
    Ok(ObservationLinearization {
        predicted,
        jacobian,
        offset,
        q_rows: q_rows.clone(),
    })
}

/// Feedback update with all of a node's observations at one slot jointly.
pub fn update<S: Scalar>(
    prior: &StateEstimate<S>,
    y: &[S],
    lin: &ObservationLinearization<S>,
    noise: &NoiseConfig<S>,
) -> Result<StateEstimate<S>, EkfError> {
    prior.expect(Flavor::Prior)?;
    let m = y.len();
    if m == 0 {
        return Ok(StateEstimate::posterior(prior.mean.clone(), prior.cov.clone()));
    }
    let d = &lin.jacobian;
    if d.rows() != m || lin.predicted.len() != m || d.cols() != prior.rank() {
        return Err(EkfError::DimensionMismatch(format!(
            "{m} observations against a {}x{} observation Jacobian",
            d.rows(),
            d.cols()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EkfError::NonFiniteState);
    }

    let dp = d.matmul(&prior.cov)?; // D·P⁻, m×f
    let mut innovation_cov = dp.matmul(&d.transpose())?;
    innovation_cov.add_to_diagonal(noise.r_var);
    let innovation_cov = symmetrize(&innovation_cov)?;

    // K = P⁻Dᵀ·S⁻¹, so Kᵀ = S⁻¹·(D·P⁻) with both factors symmetric
    let gain = solve_spd(&innovation_cov, &dp)?.transpose(); // f×m

    let innovation: Vec<S> = y.iter().zip(&lin.predicted).map(|(&a, &b)| a - b).collect();
    let correction = gain.matvec(&innovation)?;
    let mean: Vec<S> = prior
        .mean
        .iter()
        .zip(&correction)
        .map(|(&a, &b)| a + b)
        .collect();
    let cov = symmetrize(&prior.cov.sub(&gain.matmul(&dp)?)?)?;
    let post = StateEstimate::posterior(mean, cov);
    if !post.is_finite() {
        return Err(EkfError::NonFiniteState);
    }
    Ok(post)
}

/// Shift used by the positive-semidefinite check in [`CovarianceAudit`].
pub const PSD_SHIFT: f64 = 1e-9;

/// Running health summary of every covariance the filter produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CovarianceAudit {
    pub checked: usize,
    pub max_asymmetry: f64,
    pub psd_failures: usize,
}

impl CovarianceAudit {
    pub fn inspect<S: Scalar>(&mut self, cov: &DenseMatrix<S>) {
        self.checked += 1;
        self.max_asymmetry = self.max_asymmetry.max(cov.max_asymmetry().as_f64());
        let mut shifted = symmetrize(cov).expect("square covariance");
        shifted.add_to_diagonal(S::lit(PSD_SHIFT));
        if cholesky(&shifted).is_err() {
            self.psd_failures += 1;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.checked += other.checked;
        self.max_asymmetry = self.max_asymmetry.max(other.max_asymmetry);
        self.psd_failures += other.psd_failures;
    }

    pub fn is_healthy(&self, asymmetry_tol: f64) -> bool {
        self.psd_failures == 0 && self.max_asymmetry <= asymmetry_tol
    }
}

/// The temporal factors `N_(1..T)`, plus each node's covariance after the
/// final slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Deserialize<'de>"))]
pub struct TemporalFactors<S> {
    slots: Vec<DenseMatrix<S>>,
    #[serde(skip)]
    final_covariances: Vec<DenseMatrix<S>>,
}

impl<S: Scalar> TemporalFactors<S> {
    pub fn from_slots(slots: Vec<DenseMatrix<S>>) -> Self {
        Self {
            slots,
            final_covariances: Vec::new(),
        }
    }

    /// The same `M×f` matrix at every one of `slots` slots.
    pub fn constant(matrix: DenseMatrix<S>, slots: usize) -> Self {
        Self::from_slots(vec![matrix; slots])
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn rank(&self) -> usize {
        self.slots.first().map_or(0, DenseMatrix::cols)
    }

    pub fn num_nodes(&self) -> usize {
        self.slots.first().map_or(0, DenseMatrix::rows)
    }

    /// `N_(t)`, 1-based.
    pub fn slot(&self, t: usize) -> &DenseMatrix<S> {
        &self.slots[t - 1]
    }

    /// `n_(t),i`, 1-based.
    pub fn node(&self, t: usize, i: usize) -> &[S] {
        self.slots[t - 1].row(i - 1)
    }

    pub fn slots(&self) -> &[DenseMatrix<S>] {
        &self.slots
    }

    pub fn final_covariances(&self) -> &[DenseMatrix<S>] {
        &self.final_covariances
    }

    pub fn is_finite(&self) -> bool {
        self.slots.iter().all(DenseMatrix::is_finite)
    }
}

struct NodeTrack<S> {
    means: Vec<Vec<S>>,
    final_cov: DenseMatrix<S>,
    audit: CovarianceAudit,
}

fn track_node<S: Scalar>(
    train: &MatrixSequence<S>,
    q: &DenseMatrix<S>,
    act: &Activation<S>,
    noise: &NoiseConfig<S>,
    init: &[S],
    node: usize,
    audit: bool,
) -> Result<NodeTrack<S>, EkfError> {
    let f = init.len();
    let slots = train.dims().slots;
    let mut report = CovarianceAudit::default();
    let mut cov0 = DenseMatrix::identity(f);
    cov0 = cov0.scaled(noise.p0);
    let mut state = StateEstimate::posterior(init.to_vec(), cov0);
    let mut means = Vec::with_capacity(slots);

    for t in 1..=slots {
        let (prior, _) = predict(&state, act, noise).map_err(|e| e.at(t, node))?;
        if audit {
            report.inspect(&prior.cov);
        }
        let obs = train.node_slot_entries(t, node);
        state = if obs.is_empty() {
            StateEstimate::posterior(prior.mean, prior.cov)
        } else {
            let rows: Vec<&[S]> = obs.iter().map(|o| q.row(o.j - 1)).collect();
            let q_rows = DenseMatrix::from_rows(&rows);
            let y: Vec<S> = obs.iter().map(|o| o.w).collect();
            let lin = linearize_observation(&prior, &q_rows, act).map_err(|e| e.at(t, node))?;
            update(&prior, &y, &lin, noise).map_err(|e| e.at(t, node))?
        };
        if audit {
            report.inspect(&state.cov);
        }
        means.push(state.mean.clone());
    }
    Ok(NodeTrack {
        means,
        final_cov: state.cov,
        audit: report,
    })
}

/// Runs the filter over every node and slot with `Q` held fixed.
///
/// `q` and `init_means` are both `M×f`; every node restarts from its row of
/// `init_means` with covariance `p0·I`.
pub fn run_n_procedure<S: Scalar>(
    train: &MatrixSequence<S>,
    q: &DenseMatrix<S>,
    act: &Activation<S>,
    noise: &NoiseConfig<S>,
    init_means: &DenseMatrix<S>,
) -> Result<TemporalFactors<S>, EkfError> {
    run(train, q, act, noise, init_means, false).map(|(n, _)| n)
}

/// [`run_n_procedure`] that also checks every prior and posterior covariance.
pub fn run_n_procedure_audited<S: Scalar>(
    train: &MatrixSequence<S>,
    q: &DenseMatrix<S>,
    act: &Activation<S>,
    noise: &NoiseConfig<S>,
    init_means: &DenseMatrix<S>,
) -> Result<(TemporalFactors<S>, CovarianceAudit), EkfError> {
    run(train, q, act, noise, init_means, true)
}

fn run<S: Scalar>(
    train: &MatrixSequence<S>,
    q: &DenseMatrix<S>,
    act: &Activation<S>,
    noise: &NoiseConfig<S>,
    init_means: &DenseMatrix<S>,
    audit: bool,
) -> Result<(TemporalFactors<S>, CovarianceAudit), EkfError> {
    let dims = train.dims();
    let f = q.cols();
    if q.rows() != dims.nodes || init_means.rows() != dims.nodes || init_means.cols() != f {
        return Err(EkfError::DimensionMismatch(format!(
            "Q is {}x{}, initial means {}x{}, graph has {} nodes",
            q.rows(),
            q.cols(),
            init_means.rows(),
            init_means.cols(),
            dims.nodes
        )));
    }
    if !q.is_finite() {
        return Err(EkfError::NonFiniteState);
    }

    let tracks: Vec<NodeTrack<S>> = (1..=dims.nodes)
        .into_par_iter()
        .map(|i| track_node(train, q, act, noise, init_means.row(i - 1), i, audit))
        .collect::<Result<_, _>>()?;

    let mut slots = vec![DenseMatrix::zeros(dims.nodes, f); dims.slots];
    let mut final_covariances = Vec::with_capacity(dims.nodes);
    let mut report = CovarianceAudit::default();
    for (i, track) in tracks.into_iter().enumerate() {
        for (t, mean) in track.means.iter().enumerate() {
            slots[t].row_mut(i).copy_from_slice(mean);
        }
        final_covariances.push(track.final_cov);
        report.merge(&track.audit);
    }
    Ok((
        TemporalFactors {
            slots,
            final_covariances,
        },
        report,
    ))
}
