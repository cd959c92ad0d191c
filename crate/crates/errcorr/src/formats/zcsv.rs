//! z-matrix CSV and its pair-count sidecar.
//!
//! The matrix has model ids along the first row and column, z at four
//! decimals, an empty diagonal and `NA` for pairs without a score.

use std::io::Read;

use errcorr_core::pairstats::{AbsentReason, PairEntry, ZMatrix, ZScores};

use crate::formats::responses::into_io;
use crate::{fmt4, Error, Result};

pub const NA: &str = "NA";

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn zmatrix_csv(zm: &ZMatrix) -> Result<String> {
    let n = zm.models().len();
    let mut w = writer();
    let mut header = vec![String::new()];
    header.extend(zm.models().iter().cloned());
    w.write_record(&header).map_err(into_io)?;
    for i in 0..n {
        let mut row = vec![zm.models()[i].clone()];
        for j in 0..n {
            row.push(match zm.get(i, j) {
                None => String::new(),
                Some(e) => e.z().map_or_else(|| NA.to_string(), fmt4),
            });
        }
        w.write_record(&row).map_err(into_io)?;
    }
    finish(w)
}

fn status(entry: &PairEntry) -> &'static str {
    match entry {
        PairEntry::Present(_) => "ok",
        PairEntry::Absent { reason, .. } => match reason {
            AbsentReason::BelowMinCommon => "below_min_common",
            AbsentReason::NoCommonErrors => "no_common_errors",
            AbsentReason::DegenerateVariance => "degenerate_variance",
        },
    }
}

pub fn counts_csv(zm: &ZMatrix) -> Result<String> {
    let mut w = writer();
    w.write_record(["model_a", "model_b", "n_common_errors", "n_matches", "mu", "sigma2", "z", "status"])
        .map_err(into_io)?;
    for (i, j, e) in zm.pairs() {
        let s = e.stats();
        w.write_record([
            zm.models()[i].clone(),
            zm.models()[j].clone(),
            e.n_common_errors().to_string(),
            e.n_matches().to_string(),
            s.map_or_else(|| NA.to_string(), |s| fmt4(s.mu)),
            s.map_or_else(|| NA.to_string(), |s| fmt4(s.sigma2)),
            s.map_or_else(|| NA.to_string(), |s| fmt4(s.z)),
            status(e).to_string(),
        ])
        .map_err(into_io)?;
    }
    finish(w)
}

/// Reads a z-matrix CSV back into scores.
pub fn read_zscores<R: Read>(input: R) -> Result<ZScores> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| Error::malformed(1, e.to_string()))?,
        None => return Err(Error::malformed(1, "empty z-matrix file")),
    };
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    let mut square = Vec::with_capacity(n);
    for (i, row) in rows.enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::malformed(line, e.to_string()))?;
        if row.len() != n + 1 {
            return Err(Error::malformed(line, format!("expected {} fields, found {}", n + 1, row.len())));
        }
        if i >= n || row[0] != labels[i] {
            return Err(Error::malformed(line, "row labels must repeat the header in order"));
        }
        let mut values = Vec::with_capacity(n);
        for (j, cell) in row.iter().skip(1).enumerate() {
            values.push(match cell {
                "" if i == j => None,
                "" => return Err(Error::malformed(line, "empty off-diagonal cell")),
                NA => None,
                s => Some(s.parse::<f64>().map_err(|_| {
                    Error::malformed(line, format!("`{s}` is not a number"))
                })?),
            });
        }
        square.push(values);
    }
    if square.len() != n {
        return Err(Error::malformed(square.len() as u64 + 2, "missing rows"));
    }
    Ok(ZScores::from_square(labels, &square)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use errcorr_core::pairstats::z_matrix;
    use errcorr_core::{EvalTable, ResponseRecord};

    fn table() -> EvalTable {
        let mut r = Vec::new();
        for q in 0..4 {
            let q = format!("q{q}");
            r.push(ResponseRecord::new("a", q.clone(), 10, Some(1), 0));
            r.push(ResponseRecord::new("b", q.clone(), 10, Some(1), 0));
            r.push(ResponseRecord::new("c", q, 10, Some(0), 0));
        }
        EvalTable::from_records(r).unwrap()
    }

    #[test]
    fn matrix_layout() {
        let zm = z_matrix(&table(), 1).unwrap();
        let csv = zmatrix_csv(&zm).unwrap();
        assert_eq!(csv, ",a,b,c\na,,5.6569,NA\nb,5.6569,,NA\nc,NA,NA,\n");
        let z = read_zscores(csv.as_bytes()).unwrap();
        assert_eq!(z.get(0, 1), Some(5.6569));
        assert_eq!(z.get(0, 2), None);
    }

    #[test]
    fn counts_layout() {
        let zm = z_matrix(&table(), 1).unwrap();
        let csv = counts_csv(&zm).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "model_a,model_b,n_common_errors,n_matches,mu,sigma2,z,status");
        assert_eq!(lines[1], "a,b,4,4,0.4444,0.3951,5.6569,ok");
        assert_eq!(lines[2], "a,c,0,0,NA,NA,NA,below_min_common");
    }

    #[test]
    fn rejects_bad_matrices() {
        for bad in [
            "",
            ",a,b\na,,1\n",
            ",a,b\na,,1\nb,2,\n",
            ",a,b\nb,,1\na,1,\n",
            ",a,b\na,,x\nb,x,\n",
            ",a,b\na,,\nb,,\n",
        ] {
            assert!(read_zscores(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }
}
