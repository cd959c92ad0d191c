//! Trial logs: `{"problem","k","permutation","selected_position"}` per line.

use std::io::{BufRead, BufReader, Read, Write};

use errcorr_core::sampling::TrialRecord;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    problem: String,
    k: u32,
    permutation: Vec<u32>,
    selected_position: u32,
}

pub fn parse_trials<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| Error::malformed(line_no, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let l: Line =
            serde_json::from_str(&line).map_err(|e| Error::malformed(line_no, e.to_string()))?;
        if l.permutation.len() != l.k as usize {
            return Err(Error::malformed(
                line_no,
                format!("permutation has {} entries but k = {}", l.permutation.len(), l.k),
            ));
        }
        let record = TrialRecord::new(l.problem, l.permutation, l.selected_position)
            .map_err(|source| Error::Record { line: line_no, source })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_trials<W: Write>(trials: &[TrialRecord], mut out: W) -> Result<()> {
    for t in trials {
        let line = Line {
            problem: t.problem.clone(),
            k: t.k,
            permutation: t.permutation.clone(),
            selected_position: t.selected_position,
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// `index,count` rows; the first header names the view.
pub fn histogram_csv(view: &str, counts: &[u64]) -> String {
    let mut s = format!("{view},count\n");
    for (i, c) in counts.iter().enumerate() {
        s.push_str(&format!("{i},{c}\n"));
    }
    s
}
