//! Statistics for correlated wrong answers on multiple-choice evaluations.
//!
//! Given a model × question response matrix ([`EvalTable`]), this crate
//! measures how often two test-takers pick the *same* wrong option compared
//! with the uniform null, turns the pairwise z-scores into a dissimilarity
//! matrix, and builds an agglomerative taxonomy from it. It also analyses
//! universal errors (questions every model misses) against a balls-and-bins
//! baseline, aggregates repeated-sampling trial logs, and generates synthetic
//! tables with planted cluster structure.
//!
//! The crate is `no_std` and only needs `alloc`. Parsing, file formats and
//! the command-line interface live in the companion `errcorr` crate.
#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cluster;
mod error;
pub mod pairstats;
pub mod rng;
pub mod sampling;
pub mod synth;
pub mod table;
pub mod universal;

pub use error::Error;
pub use table::{Cell, EvalTable, Question, ResponseRecord, Selection, ValidationReport};

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Position of the unordered pair `(i, j)`, `i != j`, in a row-major upper
/// triangle of an `n × n` matrix without its diagonal.
pub(crate) fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(j < n && i != j);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Median of a slice, averaging the two middle values for even lengths.
/// Returns `None` for an empty slice.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    })
}
