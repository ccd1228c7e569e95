//! Closed-form column solves for the time-consistent target factors `Q`.
//!
//! For a target column `j`, every observation `(t, i, j, w)` contributes the
//! row `n_(t),i` to a stacked design `Ñ` and `w` to the stacked target `ỹ`.
//! With the per-entry penalty the partial loss is
//! `Σ λ(w − ⟨n, q_j⟩)² + ‖q_j‖²`, minimized by
//! `(ÑᵀÑ + (m/λ)·I)·q_j = Ñᵀỹ` where `m` is the number of stacked rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataseq::{Axis, DataError, MatrixSequence};
use crate::ekf::TemporalFactors;
use crate::linalg::{dot, solve_spd_vec, DenseMatrix, LinalgError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum AlsError {
    #[error("column has no observations; the ridge solve is undefined")]
    EmptyDesign,
    #[error("regularization coefficient must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("column {j}: {source}")]
    AtColumn {
        j: usize,
        #[source]
        source: Box<AlsError>,
    },
}

/// Row-stacked latent rows and observed weights for one column.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDesign<S> {
    pub design: DenseMatrix<S>,
    pub targets: Vec<S>,
}

impl<S: Scalar> StackedDesign<S> {
    pub fn new(design: DenseMatrix<S>, targets: Vec<S>) -> Result<Self, AlsError> {
        if design.rows() != targets.len() {
            return Err(AlsError::DimensionMismatch(format!(
                "{} design rows, {} targets",
                design.rows(),
                targets.len()
            )));
        }
        Ok(Self { design, targets })
    }

    pub fn empty(rank: usize) -> Self {
        Self {
            design: DenseMatrix::zeros(0, rank),
            targets: Vec::new(),
        }
    }

    /// `|Y_Λ(j)|`.
    #[inline]
    pub fn count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.design.cols()
    }

    /// `Ñᵀỹ`.
    pub fn moment(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.rank()];
        for (a, &y) in self.targets.iter().enumerate() {
            for (o, &v) in out.iter_mut().zip(self.design.row(a)) {
                *o += v * y;
            }
        }
        out
    }

    /// `ÑᵀÑ`.
    pub fn gram(&self) -> DenseMatrix<S> {
        let f = self.rank();
        let mut g = DenseMatrix::zeros(f, f);
        for a in 0..self.count() {
            let row = self.design.row(a);
            for r in 0..f {
                for c in r..f {
                    g[(r, c)] += row[r] * row[c];
                }
            }
        }
        for r in 0..f {
            for c in 0..r {
                g[(r, c)] = g[(c, r)];
            }
        }
        g
    }
}

/// Time-consistent target factors: row `j` is `q_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConsistentFactors<S> {
    q: DenseMatrix<S>,
}

impl<S: Scalar> ConsistentFactors<S> {
    pub fn new(q: DenseMatrix<S>) -> Self {
        Self { q }
    }

    pub fn matrix(&self) -> &DenseMatrix<S> {
        &self.q
    }

    pub fn into_matrix(self) -> DenseMatrix<S> {
        self.q
    }

    /// `q_j`, 1-based.
    pub fn row(&self, j: usize) -> &[S] {
        self.q.row(j - 1)
    }

    pub fn num_nodes(&self) -> usize {
        self.q.rows()
    }

    pub fn rank(&self) -> usize {
        self.q.cols()
    }
}

/// Stacks `n_(t),i` and `w` for every observation of column `j`, in
/// `(t, i)` order.
pub fn build_stacked_design<S: Scalar>(
    train: &MatrixSequence<S>,
    n: &TemporalFactors<S>,
    j: usize,
) -> Result<StackedDesign<S>, AlsError> {
    train.dims().check(Axis::Target, j)?;
    let f = n.rank();
    let entries = train.column_entries(j);
    let mut design = Vec::with_capacity(entries.len() * f);
    let mut targets = Vec::with_capacity(entries.len());
    for o in entries {
        design.extend_from_slice(n.node(o.t, o.i));
        targets.push(o.w);
    }
    let m = targets.len();
    StackedDesign::new(DenseMatrix::from_vec(m, f, design)?, targets)
}

fn check_lambda<S: Scalar>(lambda: S) -> Result<(), AlsError> {
    if !(lambda > S::zero() && lambda.is_finite()) {
        return Err(AlsError::NonPositiveLambda(lambda.as_f64()));
    }
    Ok(())
}

/// Ridge solve `(ÑᵀÑ + (m/λ)·I)·q = Ñᵀỹ`.
pub fn solve_qj<S: Scalar>(d: &StackedDesign<S>, lambda: S) -> Result<Vec<S>, AlsError> {
    check_lambda(lambda)?;
    if d.count() == 0 {
        return Err(AlsError::EmptyDesign);
    }
    let mut lhs = d.gram();
    lhs.add_to_diagonal(S::count(d.count()) / lambda);
    Ok(solve_spd_vec(&lhs, &d.moment())?)
}

/// Gradient of the column's partial loss at `q_j`:
/// `−2λ·Ñᵀỹ + 2λ·ÑᵀÑ·q_j + 2m·q_j`.
pub fn partial_loss_gradient<S: Scalar>(
    d: &StackedDesign<S>,
    qj: &[S],
    lambda: S,
) -> Result<Vec<S>, AlsError> {
    if qj.len() != d.rank() {
        return Err(AlsError::DimensionMismatch(format!(
            "q_j of length {} against rank {}",
            qj.len(),
            d.rank()
        )));
    }
    let two = S::lit(2.0);
    let moment = d.moment();
    let gq = d.gram().matvec(qj)?;
    let m = S::count(d.count());
    Ok(moment
        .iter()
        .zip(&gq)
        .zip(qj)
        .map(|((&mo, &g), &q)| -two * lambda * mo + two * lambda * g + two * m * q)
        .collect())
}

/// The column's partial loss `Σ λ(w − ⟨n, q⟩)² + ‖q‖²` summed over its rows.
pub fn partial_loss<S: Scalar>(d: &StackedDesign<S>, qj: &[S], lambda: S) -> S {
    let qq = dot(qj, qj);
    (0..d.count())
        .map(|a| {
            let r = d.targets[a] - dot(d.design.row(a), qj);
            lambda * r * r + qq
        })
        .sum()
}

/// Re-solves every observed column; unobserved columns keep `q_prev`.
pub fn run_q_procedure<S: Scalar>(
    train: &MatrixSequence<S>,
    n: &TemporalFactors<S>,
    lambda: S,
    q_prev: &ConsistentFactors<S>,
) -> Result<ConsistentFactors<S>, AlsError> {
    check_lambda(lambda)?;
    let dims = train.dims();
    if q_prev.num_nodes() != dims.nodes || q_prev.rank() != n.rank() {
        return Err(AlsError::DimensionMismatch(format!(
            "previous Q is {}x{}, expected {}x{}",
            q_prev.num_nodes(),
            q_prev.rank(),
            dims.nodes,
            n.rank()
        )));
    }
    let rows: Vec<Vec<S>> = (1..=dims.nodes)
        .into_par_iter()
        .map(|j| {
            let wrap = |e: AlsError| AlsError::AtColumn {
                j,
                source: Box::new(e),
            };
            let d = build_stacked_design(train, n, j).map_err(wrap)?;
            if d.count() == 0 {
                Ok(q_prev.row(j).to_vec())
            } else {
                solve_qj(&d, lambda).map_err(wrap)
            }
        })
        .collect::<Result<_, _>>()?;

    let mut q = DenseMatrix::zeros(dims.nodes, n.rank());
    for (j, row) in rows.iter().enumerate() {
        q.row_mut(j).copy_from_slice(row);
    }
    Ok(ConsistentFactors::new(q))
}
