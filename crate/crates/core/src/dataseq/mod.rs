//! Incomplete matrix sequences: the sparse set of observed edge weights
//! `(t, i, j, w)` of a dynamic weighted directed graph.
//!
//! All public indices are 1-based, matching the text format on disk.

mod io;
mod split;
pub(crate) mod synth;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use io::{parse_sequence, parse_sequence_reader, serialize_sequence};
pub use split::{split, SplitSpec};
pub use synth::{generate_synthetic, FactorSet, SyntheticConfig};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: malformed observation ({reason})")]
    MalformedLine { line: usize, reason: String },
    #[error("{}{axis} index {value} out of range 1..={max}", line_prefix(.line))]
    IndexOutOfRange {
        axis: Axis,
        value: usize,
        max: usize,
        line: Option<usize>,
    },
    #[error("duplicate observation for (t={t}, i={i}, j={j})")]
    DuplicateKey { t: usize, i: usize, j: usize },
    #[error("{}non-finite weight", line_prefix(.line))]
    NonFiniteWeight { line: Option<usize> },
    #[error("sequence has no observations")]
    EmptySequence,
    #[error("dimensions missing: supply a `dims M T` header or explicit dims")]
    MissingDims,
    #[error("dimension conflict: header says {header}, caller says {given}")]
    DimsConflict { header: Dims, given: Dims },
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_prefix(line: &Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Slot,
    Source,
    Target,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Axis::Slot => "slot",
            Axis::Source => "source node",
            Axis::Target => "target node",
        })
    }
}

/// Node count `M` and slot count `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub nodes: usize,
    pub slots: usize,
}

impl Dims {
    pub fn new(nodes: usize, slots: usize) -> Self {
        Self { nodes, slots }
    }

    /// `M·M·T`, the number of potential entries.
    pub fn capacity(&self) -> u128 {
        self.nodes as u128 * self.nodes as u128 * self.slots as u128
    }

    pub fn check(&self, axis: Axis, value: usize) -> Result<(), DataError> {
        let max = match axis {
            Axis::Slot => self.slots,
            Axis::Source | Axis::Target => self.nodes,
        };
        if value == 0 || value > max {
            return Err(DataError::IndexOutOfRange {
                axis,
                value,
                max,
                line: None,
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M={} T={}", self.nodes, self.slots)
    }
}

/// One observed edge weight `y_(t),i,j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation<S> {
    pub t: usize,
    pub i: usize,
    pub j: usize,
    pub w: S,
}

impl<S> Observation<S> {
    pub fn new(t: usize, i: usize, j: usize, w: S) -> Self {
        Self { t, i, j, w }
    }

    #[inline]
    fn key(&self) -> (usize, usize, usize) {
        (self.t, self.i, self.j)
    }
}

/// Immutable sparse matrix sequence, stored sorted by `(t, i, j)` with a
/// secondary column index sorted by `(j, t, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSequence<S> {
    dims: Dims,
    entries: Vec<Observation<S>>,
    col_order: Vec<usize>,
    col_offsets: Vec<usize>,
}

impl<S: Scalar> MatrixSequence<S> {
    /// Validates and indexes a set of observations. Order of `entries` does
    /// not matter.
    pub fn new(dims: Dims, mut entries: Vec<Observation<S>>) -> Result<Self, DataError> {
        for e in &entries {
            dims.check(Axis::Slot, e.t)?;
            dims.check(Axis::Source, e.i)?;
            dims.check(Axis::Target, e.j)?;
            if !e.w.is_finite() {
                return Err(DataError::NonFiniteWeight { line: None });
            }
        }
        entries.sort_by_key(Observation::key);
        if let Some(w) = entries.windows(2).find(|w| w[0].key() == w[1].key()) {
            let (t, i, j) = w[0].key();
            return Err(DataError::DuplicateKey { t, i, j });
        }

        let mut col_order: Vec<usize> = (0..entries.len()).collect();
        col_order.sort_by_key(|&k| {
            let e = &entries[k];
            (e.j, e.t, e.i)
        });
        let mut col_offsets = vec![0usize; dims.nodes + 1];
        for e in &entries {
            col_offsets[e.j] += 1;
        }
        for j in 1..=dims.nodes {
            col_offsets[j] += col_offsets[j - 1];
        }

        Ok(Self {
            dims,
            entries,
            col_order,
            col_offsets,
        })
    }

    pub fn empty(dims: Dims) -> Self {
        Self::new(dims, Vec::new()).expect("empty sequence is valid")
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in `(t, i, j)` order.
    #[inline]
    pub fn entries(&self) -> &[Observation<S>] {
        &self.entries
    }

    /// Contiguous block of entries for source node `i` at slot `t`, sorted
    /// by `j`. Indices are not range-checked here.
    pub fn node_slot_entries(&self, t: usize, i: usize) -> &[Observation<S>] {
        let lo = self
            .entries
            .partition_point(|e| (e.t, e.i).cmp(&(t, i)) == Ordering::Less);
        let hi = self
            .entries
            .partition_point(|e| (e.t, e.i).cmp(&(t, i)) != Ordering::Greater);
        &self.entries[lo..hi]
    }

    /// Every entry whose source is `i`, across all slots.
    pub fn source_entries(&self, i: usize) -> impl Iterator<Item = &Observation<S>> + '_ {
        (1..=self.dims.slots).flat_map(move |t| self.node_slot_entries(t, i).iter())
    }

    /// Entries with target `j` in `(t, i)` order. Indices are not
    /// range-checked here.
    pub fn column_entries(&self, j: usize) -> impl ExactSizeIterator<Item = &Observation<S>> + '_ {
        let range = if j >= 1 && j <= self.dims.nodes {
            self.col_offsets[j - 1]..self.col_offsets[j]
        } else {
            0..0
        };
        self.col_order[range].iter().map(move |&k| &self.entries[k])
    }

    /// `y_(t),i` as `(j, w)` pairs sorted by `j`.
    pub fn observations_of_node_at(&self, t: usize, i: usize) -> Result<Vec<(usize, S)>, DataError> {
        self.dims.check(Axis::Slot, t)?;
        self.dims.check(Axis::Source, i)?;
        Ok(self
            .node_slot_entries(t, i)
            .iter()
            .map(|e| (e.j, e.w))
            .collect())
    }

    /// All observations targeting column `j`, as `(t, i, w)` sorted by `(t, i)`.
    pub fn observations_of_column(&self, j: usize) -> Result<Vec<(usize, usize, S)>, DataError> {
        self.dims.check(Axis::Target, j)?;
        Ok(self.column_entries(j).map(|e| (e.t, e.i, e.w)).collect())
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats::new(self.dims, self.len())
    }

    /// Same entries viewed under larger (or equal) dims.
    pub fn with_dims(&self, dims: Dims) -> Result<Self, DataError> {
        Self::new(dims, self.entries.clone())
    }
}

/// Table-style dataset summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub nodes: usize,
    pub slots: usize,
    pub known: usize,
    pub density: f64,
}

impl DatasetStats {
    pub fn new(dims: Dims, known: usize) -> Self {
        let cap = dims.capacity();
        let density = if cap == 0 {
            0.0
        } else {
            known as f64 / cap as f64
        };
        Self {
            nodes: dims.nodes,
            slots: dims.slots,
            known,
            density,
        }
    }

    pub fn density_percent(&self) -> f64 {
        self.density * 100.0
    }
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "nodes {}  slots {}  known {}  density {:.4}%",
            self.nodes,
            self.slots,
            self.known,
            self.density_percent()
        )
    }
}
