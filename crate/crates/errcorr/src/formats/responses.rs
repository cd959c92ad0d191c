//! Response tables as JSONL or CSV.
//!
//! JSONL has one object per line with exactly the keys `model`, `question`,
//! `k`, `selected`, `correct`; `selected` is `null` for an abstention. CSV
//! uses the same names as a header row, in that order, with an empty
//! `selected` cell for an abstention.

use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use errcorr_core::table::TableBuilder;
use errcorr_core::{EvalTable, ResponseRecord, Selection};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CSV_HEADER: [&str; 5] = ["model", "question", "k", "selected", "correct"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// `.csv` means CSV; anything else is read as JSONL.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Usage(format!("unknown format `{other}` (expected jsonl or csv)"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Line {
    model: String,
    question: String,
    k: u32,
    // present but nullable
    #[serde(deserialize_with = "Option::deserialize")]
    selected: Option<u32>,
    correct: u32,
}

pub fn parse_responses<R: Read>(input: R, format: Format) -> Result<EvalTable> {
    match format {
        Format::Jsonl => parse_jsonl(input),
        Format::Csv => parse_csv(input),
    }
}

fn push(builder: &mut TableBuilder, line: u64, record: ResponseRecord) -> Result<()> {
    builder
        .push(record)
        .map_err(|source| Error::Record { line, source })
}

fn parse_jsonl<R: Read>(input: R) -> Result<EvalTable> {
    let mut builder = TableBuilder::new();
    let mut reader = BufReader::new(input);
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let text = std::str::from_utf8(&buf)
            .map_err(|_| Error::malformed(line_no, "not valid UTF-8"))?;
        if text.trim().is_empty() {
            continue;
        }
        let l: Line = serde_json::from_str(text)
            .map_err(|e| Error::malformed(line_no, e.to_string()))?;
        push(
            &mut builder,
            line_no,
            ResponseRecord::new(l.model, l.question, l.k, l.selected, l.correct),
        )?;
    }
    Ok(builder.finish())
}

fn parse_csv<R: Read>(input: R) -> Result<EvalTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut builder = TableBuilder::new();
    let mut records = reader.records();
    match records.next() {
        None => return Ok(builder.finish()),
        Some(header) => {
            let header = header.map_err(|e| csv_error(1, e))?;
            if header.iter().ne(CSV_HEADER) {
                return Err(Error::malformed(
                    1,
                    format!("header must be `{}`", CSV_HEADER.join(",")),
                ));
            }
        }
    }
    for row in records {
        let row = row.map_err(|e| csv_error(0, e))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 5 {
            return Err(Error::malformed(line, format!("expected 5 fields, found {}", row.len())));
        }
        let int = |i: usize| -> Result<u32> {
            row[i].parse().map_err(|_| {
                Error::malformed(line, format!("`{}` is not a valid {}", &row[i], CSV_HEADER[i]))
            })
        };
        let selected = if row[3].is_empty() { None } else { Some(int(3)?) };
        push(
            &mut builder,
            line,
            ResponseRecord::new(&row[0], &row[1], int(2)?, selected, int(4)?),
        )?;
    }
    Ok(builder.finish())
}

fn csv_error(fallback_line: u64, e: csv::Error) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::malformed(line, e.to_string())
}

/// Writes the table's records in insertion order.
pub fn write_responses<W: Write>(table: &EvalTable, format: Format, out: W) -> Result<()> {
    match format {
        Format::Jsonl => {
            let mut out = out;
            for r in table.records() {
                let line = Line {
                    model: r.model,
                    question: r.question,
                    k: r.k,
                    selected: r.selected.chosen(),
                    correct: r.correct,
                };
                serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(CSV_HEADER).map_err(into_io)?;
            for r in table.records() {
                let selected = match r.selected {
                    Selection::Chosen(o) => o.to_string(),
                    Selection::Abstain => String::new(),
                };
                w.write_record([
                    r.model.as_str(),
                    r.question.as_str(),
                    &r.k.to_string(),
                    &selected,
                    &r.correct.to_string(),
                ])
                .map_err(into_io)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

pub(crate) fn into_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn to_bytes(table: &EvalTable, format: Format) -> Vec<u8> {
    let mut buf = Vec::new();
    write_responses(table, format, &mut buf).expect("writing to memory cannot fail");
    buf
}
