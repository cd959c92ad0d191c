//! Dendrogram, partition and universal-error outputs.

use errcorr_core::cluster::{merges_json, to_newick, Dendrogram};
use errcorr_core::universal::UniversalErrorRecord;

use crate::fmt4;
use crate::formats::json::{array, quote, JsonObject};

/// `{"leaves": [...], "merges": [{left, right, height, count}, ...]}`.
/// Leaves are numbered `0..n` in the listed order; merge `s` forms node
/// `n + s`.
pub fn dendrogram_json(dend: &Dendrogram) -> String {
    let leaves = array(dend.leaves().iter().map(|l| quote(l)));
    JsonObject::new()
        .raw("leaves", leaves)
        .raw("merges", merges_json(dend))
        .render("")
        + "\n"
}

pub fn newick_file(dend: &Dendrogram) -> String {
    to_newick(dend) + "\n"
}

/// `model,cluster` rows in leaf order of the input; clusters are numbered
/// by their first member.
pub fn partition_csv(dend: &Dendrogram, clusters: &[Vec<usize>]) -> String {
    let mut assignment = vec![0usize; dend.n_leaves()];
    for (c, members) in clusters.iter().enumerate() {
        for &m in members {
            assignment[m] = c;
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["model", "cluster"]).expect("in-memory write");
    for (label, c) in dend.leaves().iter().zip(assignment) {
        w.write_record([label.as_str(), &c.to_string()]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn cdf_csv(steps: &[(f64, f64)]) -> String {
    let mut s = String::from("x,F\n");
    for &(x, f) in steps {
        s.push_str(&format!("{},{}\n", fmt4(x), fmt4(f)));
    }
    s
}

pub fn universal_questions_csv(records: &[UniversalErrorRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["question", "k", "n_wrong", "modal_answer", "modal_count", "fraction"])
        .expect("in-memory write");
    for r in records {
        w.write_record([
            r.question.clone(),
            r.k.to_string(),
            r.n_wrong.to_string(),
            r.modal_answer.to_string(),
            r.modal_count.to_string(),
            fmt4(r.fraction),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Summary of a universal-error run.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalSummary {
    pub n_questions: usize,
    pub min_wrong: usize,
    /// Balls (models) and bins (wrong options) used for the baseline.
    pub models: Option<u32>,
    pub bins: Option<u32>,
    pub expected_baseline: Option<f64>,
    pub min_fraction: Option<f64>,
    pub max_fraction: Option<f64>,
    pub simulated: Option<SimulatedBaseline>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatedBaseline {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

impl UniversalSummary {
    pub fn to_json(&self) -> String {
        let opt_int = |v: Option<u32>| v.map_or("null".to_string(), |v| v.to_string());
        let mut o = JsonObject::new()
            .int("n_questions", self.n_questions as u64)
            .opt_num("expected_baseline", self.expected_baseline)
            .opt_num("min_fraction", self.min_fraction)
            .opt_num("max_fraction", self.max_fraction)
            .int("min_wrong", self.min_wrong as u64)
            .raw("models", opt_int(self.models))
            .raw("bins", opt_int(self.bins));
        if let Some(s) = &self.simulated {
            o = o.obj(
                "simulated_baseline",
                JsonObject::new()
                    .num("mean", s.mean)
                    .num("std_error", s.std_error)
                    .int("trials", s.trials)
                    .int("seed", s.seed),
            );
        }
        o.render("") + "\n"
    }
}
