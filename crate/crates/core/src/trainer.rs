//! The alternating training loop, prediction, and error metrics.
//!
//! One iteration filters the temporal factors with `Q` fixed, then re-solves
//! `Q` column by column with the fresh temporal factors fixed. Training stops
//! when the monitored RMSE moves by less than the error threshold or the
//! iteration cap is hit, and returns the snapshot with the lowest monitored
//! RMSE.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::als::{self, AlsError, ConsistentFactors, StackedDesign};
use crate::dataseq::synth::small_positive;
use crate::dataseq::{Dims, MatrixSequence};
use crate::ekf::{self, Activation, CovarianceAudit, EkfError, NoiseConfig, TemporalFactors};
use crate::linalg::{dot, DenseMatrix};
use crate::scalar::Scalar;

/// Seed used whenever the caller does not pick one.
pub const DEFAULT_SEED: u64 = 42;
/// Default regularization grid.
pub const LAMBDA_GRID: [f64; 3] = [0.001, 0.01, 0.1];

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid hyper-parameters: {0}")]
    InvalidHyper(String),
    #[error("index (t={t}, i={i}, j={j}) outside the model")]
    IndexOutOfRange { t: usize, i: usize, j: usize },
    #[error("iteration {iteration}, temporal step: {source}")]
    Ekf {
        iteration: usize,
        #[source]
        source: EkfError,
    },
    #[error("iteration {iteration}, consistent step: {source}")]
    Als {
        iteration: usize,
        #[source]
        source: AlsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams<S> {
    pub rank: usize,
    pub lambda: S,
    pub alpha: S,
    pub noise: NoiseConfig<S>,
    pub max_iters: usize,
    pub err_threshold: S,
    pub seed: u64,
}

impl<S: Scalar> Default for HyperParams<S> {
    fn default() -> Self {
        Self {
            rank: 20,
            lambda: S::lit(0.01),
            alpha: S::lit(0.01),
            noise: NoiseConfig::default(),
            max_iters: 500,
            err_threshold: S::lit(1e-5),
            seed: DEFAULT_SEED,
        }
    }
}

impl<S: Scalar> HyperParams<S> {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::InvalidHyper(m));
        if self.rank == 0 {
            return bad("rank must be at least 1".into());
        }
        if !(self.lambda > S::zero() && self.lambda.is_finite()) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.alpha > S::zero() && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.err_threshold > S::zero()) {
            return bad("err_threshold must be positive".into());
        }
        self.noise.validate().map_err(TrainError::InvalidHyper)
    }

    pub fn activation(&self) -> Activation<S> {
        Activation::leaky_relu(self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Eklf,
    StaticBaseline,
}

/// One row of the training history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub train_rmse: f64,
    pub val_rmse: Option<f64>,
    /// Training objective with the new temporal factors and the old `Q`.
    pub objective_before_q: f64,
    /// Training objective after the `Q` re-solve.
    pub objective_after_q: f64,
    pub elapsed_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<CovarianceAudit>,
}

impl IterationRecord {
    /// Validation RMSE when a validation set exists, training RMSE otherwise.
    pub fn monitored(&self) -> f64 {
        self.val_rmse.unwrap_or(self.train_rmse)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel<S> {
    pub kind: ModelKind,
    pub dims: Dims,
    pub hyper: HyperParams<S>,
    pub n: TemporalFactors<S>,
    pub q: ConsistentFactors<S>,
    pub history: Vec<IterationRecord>,
    pub best_iteration: usize,
    pub iterations_run: usize,
    pub elapsed_seconds: f64,
}

impl<S: Scalar> TrainedModel<S> {
    /// `⟨n_(t),i, q_j⟩`, 1-based.
    pub fn predict_entry(&self, t: usize, i: usize, j: usize) -> Result<S, TrainError> {
        let d = self.dims;
        if t == 0 || t > d.slots || i == 0 || i > d.nodes || j == 0 || j > d.nodes {
            return Err(TrainError::IndexOutOfRange { t, i, j });
        }
        Ok(dot(self.n.node(t, i), self.q.row(j)))
    }

    /// Dense `N_(t)·Qᵀ`.
    pub fn predict_slot(&self, t: usize) -> Result<DenseMatrix<S>, TrainError> {
        if t == 0 || t > self.dims.slots {
            return Err(TrainError::IndexOutOfRange { t, i: 1, j: 1 });
        }
        self.n
            .slot(t)
            .matmul(&self.q.matrix().transpose())
            .map_err(|e| TrainError::DimensionMismatch(e.to_string()))
    }

    /// Zeroes every wall-clock field so repeated runs serialize identically.
    pub fn clear_timings(&mut self) {
        self.elapsed_seconds = 0.0;
        for h in &mut self.history {
            h.elapsed_seconds = 0.0;
        }
    }

    pub fn best_record(&self) -> Option<&IterationRecord> {
        self.history.get(self.best_iteration.checked_sub(1)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    pub mae: f64,
    pub count: usize,
    pub elapsed_seconds: f64,
    pub iterations_run: usize,
}

/// Extra instrumentation for [`train_with_options`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    /// Check every filter covariance and record the summary per iteration.
    pub audit_covariance: bool,
}

/// `Σ λ(y − ⟨n_(t),i, q_j⟩)² + ‖n_(t),i‖² + ‖q_j‖²` over observed entries.
pub fn objective<S: Scalar>(
    seq: &MatrixSequence<S>,
    n: &TemporalFactors<S>,
    q: &ConsistentFactors<S>,
    lambda: S,
) -> Result<S, TrainError> {
    check_factors(seq.dims(), n, q)?;
    Ok(seq
        .entries()
        .iter()
        .map(|o| {
            let ni = n.node(o.t, o.i);
            let qj = q.row(o.j);
            let r = o.w - dot(ni, qj);
            lambda * r * r + dot(ni, ni) + dot(qj, qj)
        })
        .sum())
}

fn check_factors<S: Scalar>(
    dims: Dims,
    n: &TemporalFactors<S>,
    q: &ConsistentFactors<S>,
) -> Result<(), TrainError> {
    if n.num_slots() != dims.slots
        || n.num_nodes() != dims.nodes
        || q.num_nodes() != dims.nodes
        || n.rank() != q.rank()
    {
        return Err(TrainError::DimensionMismatch(format!(
            "factors ({} slots of {}x{}, Q {}x{}) do not fit {}",
            n.num_slots(),
            n.num_nodes(),
            n.rank(),
            q.num_nodes(),
            q.rank(),
            dims
        )));
    }
    Ok(())
}

/// `(rmse, mae)` of `⟨n, q⟩` against the observed weights.
fn residual_metrics<S: Scalar>(
    seq: &MatrixSequence<S>,
    n: &TemporalFactors<S>,
    q: &ConsistentFactors<S>,
) -> (f64, f64) {
    let k = seq.len();
    if k == 0 {
        return (0.0, 0.0);
    }
    let (sq, abs) = seq.entries().iter().fold((0.0f64, 0.0f64), |(sq, abs), o| {
        let r = (o.w - dot(n.node(o.t, o.i), q.row(o.j))).as_f64();
        (sq + r * r, abs + r.abs())
    });
    ((sq / k as f64).sqrt(), abs / k as f64)
}

fn check_splits<S: Scalar>(
    train: &MatrixSequence<S>,
    val: &MatrixSequence<S>,
    hyper: &HyperParams<S>,
) -> Result<(), TrainError> {
    hyper.validate()?;
    if train.is_empty() {
        return Err(TrainError::EmptyTrainSet);
    }
    if train.dims() != val.dims() {
        return Err(TrainError::DimensionMismatch(format!(
            "train is {}, validation is {}",
            train.dims(),
            val.dims()
        )));
    }
    Ok(())
}

/// Initial `Q` and initial node means, both `M×f` uniform on `(0, 0.1]`.
fn initial_factors<S: Scalar>(dims: Dims, rank: usize, seed: u64) -> (DenseMatrix<S>, DenseMatrix<S>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        let v = (0..dims.nodes * rank)
            .map(|_| S::lit(small_positive(&mut rng)))
            .collect();
        DenseMatrix::from_vec(dims.nodes, rank, v).expect("shape")
    };
    let q = draw();
    let init = draw();
    (q, init)
}

/// Tracks the best snapshot and the stopping rule shared by both trainers.
struct Progress<S> {
    history: Vec<IterationRecord>,
    best: Option<(usize, f64, TemporalFactors<S>, ConsistentFactors<S>)>,
}

impl<S: Scalar> Progress<S> {
    fn new() -> Self {
        Self {
            history: Vec::new(),
            best: None,
        }
    }

    /// Records an iteration; returns true when training should stop.
    fn push(
        &mut self,
        rec: IterationRecord,
        n: &TemporalFactors<S>,
        q: &ConsistentFactors<S>,
        threshold: f64,
    ) -> bool {
        let score = rec.monitored();
        let improved = match &self.best {
            None => true,
            Some((_, best, _, _)) => score < *best,
        };
        if improved {
            self.best = Some((rec.iteration, score, n.clone(), q.clone()));
        }
        let converged = self
            .history
            .last()
            .is_some_and(|prev| (score - prev.monitored()).abs() < threshold);
        self.history.push(rec);
        converged
    }

    fn finish(
        self,
        kind: ModelKind,
        dims: Dims,
        hyper: HyperParams<S>,
        started: Instant,
    ) -> TrainedModel<S> {
        let (best_iteration, _, n, q) = self.best.expect("at least one iteration");
        TrainedModel {
            kind,
            dims,
            hyper,
            n,
            q,
            iterations_run: self.history.len(),
            history: self.history,
            best_iteration,
            elapsed_seconds: started.elapsed().as_secs_f64(),
        }
    }
}

pub fn train<S: Scalar>(
    train: &MatrixSequence<S>,
    val: &MatrixSequence<S>,
    hyper: &HyperParams<S>,
) -> Result<TrainedModel<S>, TrainError> {
    train_with_options(train, val, hyper, &TrainOptions::default())
}

pub fn train_with_options<S: Scalar>(
    train: &MatrixSequence<S>,
    val: &MatrixSequence<S>,
    hyper: &HyperParams<S>,
    opts: &TrainOptions,
) -> Result<TrainedModel<S>, TrainError> {
    check_splits(train, val, hyper)?;
    let started = Instant::now();
    let dims = train.dims();
    let act = hyper.activation();
    let (q0, init) = initial_factors::<S>(dims, hyper.rank, hyper.seed);
    let mut q = ConsistentFactors::new(q0);
    let mut progress = Progress::new();

    for iteration in 1..=hyper.max_iters {
        let (n, audit) = if opts.audit_covariance {
            let (n, a) =
                ekf::run_n_procedure_audited(train, q.matrix(), &act, &hyper.noise, &init)
                    .map_err(|source| TrainError::Ekf { iteration, source })?;
            (n, Some(a))
        } else {
            let n = ekf::run_n_procedure(train, q.matrix(), &act, &hyper.noise, &init)
                .map_err(|source| TrainError::Ekf { iteration, source })?;
            (n, None)
        };
        let before = objective(train, &n, &q, hyper.lambda)?;
        q = als::run_q_procedure(train, &n, hyper.lambda, &q)
            .map_err(|source| TrainError::Als { iteration, source })?;
        let after = objective(train, &n, &q, hyper.lambda)?;

        let rec = IterationRecord {
            iteration,
            train_rmse: residual_metrics(train, &n, &q).0,
            val_rmse: (!val.is_empty()).then(|| residual_metrics(val, &n, &q).0),
            objective_before_q: before.as_f64(),
            objective_after_q: after.as_f64(),
            elapsed_seconds: started.elapsed().as_secs_f64(),
            covariance: audit,
        };
        if progress.push(rec, &n, &q, hyper.err_threshold.as_f64()) {
            break;
        }
    }
    Ok(progress.finish(ModelKind::Eklf, dims, *hyper, started))
}

/// Static pooled baseline: one node-factor matrix shared by all slots, both
/// sides fitted by the same per-row ridge solve used for `Q`.
pub fn train_static_baseline<S: Scalar>(
    train: &MatrixSequence<S>,
    val: &MatrixSequence<S>,
    hyper: &HyperParams<S>,
) -> Result<TrainedModel<S>, TrainError> {
    check_splits(train, val, hyper)?;
    let started = Instant::now();
    let dims = train.dims();
    let (q0, u0) = initial_factors::<S>(dims, hyper.rank, hyper.seed);
    let mut q = ConsistentFactors::new(q0);
    let mut u = u0;
    let mut progress = Progress::new();

    for iteration in 1..=hyper.max_iters {
        let als_err = |source| TrainError::Als { iteration, source };
        u = solve_source_side(train, &q, hyper.lambda, &u).map_err(als_err)?;
        let n = TemporalFactors::constant(u.clone(), dims.slots);
        let before = objective(train, &n, &q, hyper.lambda)?;
        q = als::run_q_procedure(train, &n, hyper.lambda, &q).map_err(als_err)?;
        let after = objective(train, &n, &q, hyper.lambda)?;

        let rec = IterationRecord {
            iteration,
            train_rmse: residual_metrics(train, &n, &q).0,
            val_rmse: (!val.is_empty()).then(|| residual_metrics(val, &n, &q).0),
            objective_before_q: before.as_f64(),
            objective_after_q: after.as_f64(),
            elapsed_seconds: started.elapsed().as_secs_f64(),
            covariance: None,
        };
        if progress.push(rec, &n, &q, hyper.err_threshold.as_f64()) {
            break;
        }
    }
    Ok(progress.finish(ModelKind::StaticBaseline, dims, *hyper, started))
}

/// Ridge-solves each source node's pooled row against `Q`; nodes without
/// observations keep their previous row.
fn solve_source_side<S: Scalar>(
    train: &MatrixSequence<S>,
    q: &ConsistentFactors<S>,
    lambda: S,
    prev: &DenseMatrix<S>,
) -> Result<DenseMatrix<S>, AlsError> {
    use rayon::prelude::*;
    let f = q.rank();
    let rows: Vec<Vec<S>> = (1..=train.dims().nodes)
        .into_par_iter()
        .map(|i| {
            let mut design = Vec::new();
            let mut targets = Vec::new();
            for o in train.source_entries(i) {
                design.extend_from_slice(q.row(o.j));
                targets.push(o.w);
            }
            if targets.is_empty() {
                return Ok(prev.row(i - 1).to_vec());
            }
            let d = StackedDesign::new(DenseMatrix::from_vec(targets.len(), f, design)?, targets)?;
            als::solve_qj(&d, lambda)
        })
        .collect::<Result<_, _>>()?;
    let mut out = DenseMatrix::zeros(prev.rows(), f);
    for (i, r) in rows.iter().enumerate() {
        out.row_mut(i).copy_from_slice(r);
    }
    Ok(out)
}

/// RMSE and MAE of the model on held-out entries.
pub fn evaluate<S: Scalar>(
    model: &TrainedModel<S>,
    test: &MatrixSequence<S>,
) -> Result<EvalReport, TrainError> {
    if test.is_empty() {
        return Err(TrainError::EmptyTestSet);
    }
    if test.dims() != model.dims {
        return Err(TrainError::DimensionMismatch(format!(
            "model is {}, test set is {}",
            model.dims,
            test.dims()
        )));
    }
    let (rmse, mae) = residual_metrics(test, &model.n, &model.q);
    Ok(EvalReport {
        rmse,
        mae,
        count: test.len(),
        elapsed_seconds: model.elapsed_seconds,
        iterations_run: model.iterations_run,
    })
}

/// Trains once per `λ` and keeps the model with the lowest monitored RMSE.
pub fn grid_search_lambda<S: Scalar>(
    train_set: &MatrixSequence<S>,
    val: &MatrixSequence<S>,
    hyper: &HyperParams<S>,
    grid: &[S],
) -> Result<TrainedModel<S>, TrainError> {
    let mut best: Option<(f64, TrainedModel<S>)> = None;
    for &lambda in grid {
        let model = train(train_set, val, &HyperParams { lambda, ..*hyper })?;
        let score = model.best_record().map_or(f64::INFINITY, IterationRecord::monitored);
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, model));
        }
    }
    best.map(|(_, m)| m)
        .ok_or_else(|| TrainError::InvalidHyper("empty lambda grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataseq::{generate_synthetic, split, Observation, SplitSpec, SyntheticConfig};

    fn one_entry() -> MatrixSequence<f64> {
        MatrixSequence::new(Dims::new(2, 1), vec![Observation::new(1, 1, 2, 2.0)]).unwrap()
    }

    #[test]
    fn objective_single_entry() {
        let n = TemporalFactors::from_slots(vec![DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]])]);
        let q = ConsistentFactors::new(DenseMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]));
        assert_eq!(objective(&one_entry(), &n, &q, 1.0).unwrap(), 4.0);
        let empty = MatrixSequence::empty(Dims::new(2, 1));
        assert_eq!(objective(&empty, &n, &q, 1.0).unwrap(), 0.0);

        let zero_seq =
            MatrixSequence::new(Dims::new(2, 1), vec![Observation::new(1, 1, 2, 0.0)]).unwrap();
        let zn = TemporalFactors::from_slots(vec![DenseMatrix::zeros(2, 2)]);
        let zq = ConsistentFactors::new(DenseMatrix::zeros(2, 2));
        assert_eq!(objective(&zero_seq, &zn, &zq, 1.0).unwrap(), 0.0);

        let bad_q = ConsistentFactors::new(DenseMatrix::zeros(3, 2));
        assert!(objective(&one_entry(), &n, &bad_q, 1.0).is_err());
    }

    fn toy_model(n_rows: [[f64; 2]; 2], q_rows: [[f64; 2]; 2]) -> TrainedModel<f64> {
        TrainedModel {
            kind: ModelKind::Eklf,
            dims: Dims::new(2, 1),
            hyper: HyperParams {
                rank: 2,
                ..Default::default()
            },
            n: TemporalFactors::from_slots(vec![DenseMatrix::from_rows(&n_rows)]),
            q: ConsistentFactors::new(DenseMatrix::from_rows(&q_rows)),
            history: Vec::new(),
            best_iteration: 0,
            iterations_run: 0,
            elapsed_seconds: 0.0,
        }
    }

    #[test]
    fn predict_entry_is_inner_product() {
        let m = toy_model([[1.0, 2.0], [0.5, 0.5]], [[3.0, 4.0], [0.0, 0.0]]);
        assert_eq!(m.predict_entry(1, 1, 1).unwrap(), 11.0);
        assert_eq!(m.predict_entry(1, 1, 2).unwrap(), 0.0);
        assert!(m.predict_entry(2, 1, 1).is_err());
        assert!(m.predict_entry(1, 0, 1).is_err());
        let full = m.predict_slot(1).unwrap();
        for i in 1..=2 {
            for j in 1..=2 {
                assert_eq!(full[(i - 1, j - 1)], m.predict_entry(1, i, j).unwrap());
            }
        }
    }

    #[test]
    fn evaluate_metrics() {
        let m = toy_model([[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]);
        let test = MatrixSequence::new(
            Dims::new(2, 1),
            vec![Observation::new(1, 1, 1, 3.0), Observation::new(1, 2, 2, 4.0)],
        )
        .unwrap();
        let r = evaluate(&m, &test).unwrap();
        assert_eq!(r.mae, 3.5);
        assert!((r.rmse - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(r.rmse >= r.mae);
        assert_eq!(r.count, 2);

        let m = toy_model([[1.0, 0.0], [0.0, 1.0]], [[3.0, 0.0], [0.0, 4.0]]);
        let r = evaluate(&m, &test).unwrap();
        assert_eq!((r.rmse, r.mae), (0.0, 0.0));

        assert!(matches!(
            evaluate(&m, &MatrixSequence::empty(Dims::new(2, 1))),
            Err(TrainError::EmptyTestSet)
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let hyper = HyperParams::<f64>::default();
        let empty = MatrixSequence::empty(Dims::new(2, 1));
        assert!(matches!(train(&empty, &empty, &hyper), Err(TrainError::EmptyTrainSet)));
        let bad = HyperParams { lambda: 0.0, ..hyper };
        assert!(matches!(
            train(&one_entry(), &empty, &bad),
            Err(TrainError::InvalidHyper(_))
        ));
        let other = MatrixSequence::empty(Dims::new(3, 1));
        assert!(matches!(
            train(&one_entry(), &other, &hyper),
            Err(TrainError::DimensionMismatch(_))
        ));
    }

    fn small_problem(seed: u64) -> (MatrixSequence<f64>, MatrixSequence<f64>, MatrixSequence<f64>) {
        let cfg = SyntheticConfig {
            nodes: 12,
            slots: 5,
            rank: 2,
            density: 0.3,
            seed,
            ..Default::default()
        };
        let (seq, _) = generate_synthetic(&cfg).unwrap();
        split(&seq, &SplitSpec::new(0.6, 0.2, 0.2, seed)).unwrap()
    }

    #[test]
    fn training_is_deterministic_and_keeps_best() {
        let (tr, va, _) = small_problem(3);
        let hyper = HyperParams {
            rank: 2,
            max_iters: 30,
            ..Default::default()
        };
        let mut a = train(&tr, &va, &hyper).unwrap();
        let mut b = train(&tr, &va, &hyper).unwrap();
        a.clear_timings();
        b.clear_timings();
        assert_eq!(a, b);
        assert!(a.iterations_run <= 30);
        let min = a.history.iter().map(IterationRecord::monitored).fold(f64::INFINITY, f64::min);
        assert_eq!(a.best_record().unwrap().monitored(), min);
        for h in &a.history {
            assert!(h.objective_after_q <= h.objective_before_q * (1.0 + 1e-12));
        }
    }

    #[test]
    fn baseline_runs_and_is_static() {
        let (tr, va, te) = small_problem(5);
        let hyper = HyperParams {
            rank: 2,
            max_iters: 30,
            ..Default::default()
        };
        let m = train_static_baseline(&tr, &va, &hyper).unwrap();
        assert_eq!(m.kind, ModelKind::StaticBaseline);
        for t in 2..=m.dims.slots {
            assert_eq!(m.n.slot(t), m.n.slot(1));
        }
        let r = evaluate(&m, &te).unwrap();
        assert!(r.rmse.is_finite() && r.rmse >= r.mae);
        let mut again = train_static_baseline(&tr, &va, &hyper).unwrap();
        let mut m = m;
        m.clear_timings();
        again.clear_timings();
        assert_eq!(m, again);
    }

    #[test]
    fn grid_search_picks_lowest_validation() {
        let (tr, va, _) = small_problem(8);
        let hyper = HyperParams {
            rank: 2,
            max_iters: 10,
            ..Default::default()
        };
        let grid = LAMBDA_GRID.to_vec();
        let best = grid_search_lambda(&tr, &va, &hyper, &grid).unwrap();
        for &l in &grid {
            let m = train(&tr, &va, &HyperParams { lambda: l, ..hyper }).unwrap();
            assert!(best.best_record().unwrap().monitored() <= m.best_record().unwrap().monitored());
        }
    }
}
