//! File formats, report generation and the `errcorr` command-line tool.
//!
//! The analysis itself lives in [`errcorr_core`]; this crate reads and
//! writes the interchange formats (JSONL/CSV responses, trial logs, z-matrix
//! CSV, Newick, JSON summaries, SVG heatmaps) and wires the pieces into
//! subcommands.

pub mod cli;
mod error;
pub mod formats;
pub mod report;
pub mod svg;

pub use error::{Error, Result};

/// Fixed four-decimal rendering used by every text output. Negative zero is
/// printed as zero.
pub fn fmt4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}
