use std::fmt::Write as _;
use std::io::BufRead;

use super::{Axis, DataError, Dims, MatrixSequence, Observation};
use crate::scalar::Scalar;

/// Parses the `t i j w` text format.
///
/// Fields may be separated by tabs, commas or spaces. Lines starting with
/// `#` and blank lines are skipped. An optional `dims M T` line declares the
/// dimensions; if `dims` is also given the two must agree.
pub fn parse_sequence<S: Scalar>(
    text: &str,
    dims: Option<Dims>,
) -> Result<MatrixSequence<S>, DataError> {
    parse_lines(text.lines().map(|l| Ok(l.to_owned())), dims)
}

pub fn parse_sequence_reader<S: Scalar, R: BufRead>(
    reader: R,
    dims: Option<Dims>,
) -> Result<MatrixSequence<S>, DataError> {
    parse_lines(reader.lines(), dims)
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split(['\t', ',', ' '])
        .map(str::trim)
        .filter(|f| !f.is_empty())
}

fn parse_lines<S: Scalar, I>(lines: I, dims: Option<Dims>) -> Result<MatrixSequence<S>, DataError>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut header: Option<Dims> = None;
    let mut raw: Vec<(usize, Observation<S>)> = Vec::new();

    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = fields(trimmed).collect();
        let malformed = |reason: &str| DataError::MalformedLine {
            line: lineno,
            reason: reason.to_owned(),
        };

        if parts[0] == "dims" {
            if parts.len() != 3 {
                return Err(malformed("expected `dims M T`"));
            }
            let m = parts[1].parse().map_err(|_| malformed("bad node count"))?;
            let t = parts[2].parse().map_err(|_| malformed("bad slot count"))?;
            header = Some(Dims::new(m, t));
            continue;
        }

        if parts.len() != 4 {
            return Err(malformed(&format!("expected 4 fields, found {}", parts.len())));
        }
        let idx = |k: usize, name: &str| -> Result<usize, DataError> {
            parts[k]
                .parse::<usize>()
                .map_err(|_| malformed(&format!("{name} is not a non-negative integer")))
        };
        let t = idx(0, "t")?;
        let i = idx(1, "i")?;
        let j = idx(2, "j")?;
        let w: S = parts[3].parse().map_err(|_| malformed("weight is not a number"))?;
        if !w.is_finite() {
            return Err(DataError::NonFiniteWeight { line: Some(lineno) });
        }
        raw.push((lineno, Observation::new(t, i, j, w)));
    }

    let dims = match (header, dims) {
        (Some(h), Some(g)) if h != g => {
            return Err(DataError::DimsConflict {
                header: h,
                given: g,
            })
        }
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => return Err(DataError::MissingDims),
    };

    for (lineno, o) in &raw {
        for (axis, v) in [(Axis::Slot, o.t), (Axis::Source, o.i), (Axis::Target, o.j)] {
            if let Err(DataError::IndexOutOfRange { axis, value, max, .. }) = dims.check(axis, v) {
                return Err(DataError::IndexOutOfRange {
                    axis,
                    value,
                    max,
                    line: Some(*lineno),
                });
            }
        }
    }

    MatrixSequence::new(dims, raw.into_iter().map(|(_, o)| o).collect())
}

/// Renders a sequence with a `dims M T` header, one tab-separated
/// observation per line in `(t, i, j)` order. Weights use the shortest
/// representation that parses back to the same value.
pub fn serialize_sequence<S: Scalar>(seq: &MatrixSequence<S>) -> String {
    let d = seq.dims();
    let mut out = String::with_capacity(16 + seq.len() * 24);
    writeln!(out, "dims {} {}", d.nodes, d.slots).unwrap();
    for o in seq.entries() {
        writeln!(out, "{}\t{}\t{}\t{}", o.t, o.i, o.j, o.w).unwrap();
    }
    out
}
