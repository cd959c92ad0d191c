//! Synthetic response tables with planted cluster structure.
//!
//! Every model answers correctly with its accuracy. Otherwise, with the
//! strength `rho` of its cluster it picks that cluster's attractor for the
//! question (one wrong option drawn per cluster and question), and failing
//! that a uniformly random wrong option. With `rho = 0` wrong answers are
//! independent and uniform, which is exactly the null behind the pairwise
//! z-score.

use alloc::format;
use alloc::vec::Vec;

use crate::rng::{self, Generator};
use crate::table::{EvalTable, ResponseRecord, TableBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub n_models: usize,
    /// Probability that a wrong answer is the cluster's attractor.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptionCount {
    Constant(u32),
    PerQuestion(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Accuracy {
    Constant(f64),
    /// One entry per model, in cluster order.
    PerModel(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub clusters: Vec<ClusterSpec>,
    pub n_questions: usize,
    pub k: OptionCount,
    pub accuracy: Accuracy,
    pub seed: u64,
}

impl SynthConfig {
    pub fn n_models(&self) -> usize {
        self.clusters.iter().map(|c| c.n_models).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters.is_empty() || self.clusters.iter().any(|c| c.n_models == 0) {
            return Err(Error::InvalidConfig("every cluster needs at least one model"));
        }
        if self.clusters.iter().any(|c| !(0.0..=1.0).contains(&c.rho)) {
            return Err(Error::InvalidConfig("rho must lie in [0, 1]"));
        }
        if self.n_questions == 0 {
            return Err(Error::InvalidConfig("n_questions must be at least 1"));
        }
        match &self.k {
            OptionCount::Constant(k) if *k < 2 => return Err(Error::InvalidConfig("k must be at least 2")),
            OptionCount::PerQuestion(ks) if ks.len() != self.n_questions => {
                return Err(Error::InvalidConfig("need one k per question"))
            }
            OptionCount::PerQuestion(ks) if ks.iter().any(|&k| k < 2) => {
                return Err(Error::InvalidConfig("k must be at least 2"))
            }
            _ => {}
        }
        let accs: &[f64] = match &self.accuracy {
            Accuracy::Constant(a) => core::slice::from_ref(a),
            Accuracy::PerModel(a) if a.len() != self.n_models() => {
                return Err(Error::InvalidConfig("need one accuracy per model"))
            }
            Accuracy::PerModel(a) => a,
        };
        if accs.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig("accuracy must lie in [0, 1]"));
        }
        Ok(())
    }

    fn k(&self, q: usize) -> u32 {
        match &self.k {
            OptionCount::Constant(k) => *k,
            OptionCount::PerQuestion(ks) => ks[q],
        }
    }

    fn accuracy(&self, model: usize) -> f64 {
        match &self.accuracy {
            Accuracy::Constant(a) => *a,
            Accuracy::PerModel(a) => a[model],
        }
    }
}

/// Uniform wrong option of a `k`-option question.
fn wrong_option(rng: &mut Generator, k: u32, correct: u32) -> u32 {
    let w = rng::below(rng, k - 1);
    if w >= correct {
        w + 1
    } else {
        w
    }
}

/// Model id for model `index` of cluster `cluster`.
pub fn model_name(cluster: usize, index: usize) -> alloc::string::String {
    format!("c{cluster}m{index}")
}

/// Generates a table and the planted partition of model indices (one group
/// per cluster, in order).
pub fn generate_table(config: &SynthConfig) -> Result<(EvalTable, Vec<Vec<usize>>)> {
    config.validate()?;
    let mut rng = rng::generator(config.seed);
    let mut names = Vec::new();
    let mut partition = Vec::new();
    let mut cluster_of = Vec::new();
    for (c, spec) in config.clusters.iter().enumerate() {
        partition.push((names.len()..names.len() + spec.n_models).collect());
        for i in 0..spec.n_models {
            names.push(model_name(c, i));
            cluster_of.push(c);
        }
    }

    let mut builder = TableBuilder::new();
    let mut attractors = alloc::vec![0u32; config.clusters.len()];
    for q in 0..config.n_questions {
        let k = config.k(q);
        let correct = rng::below(&mut rng, k);
        for a in attractors.iter_mut() {
            *a = wrong_option(&mut rng, k, correct);
        }
        let qid = format!("q{q}");
        for (m, name) in names.iter().enumerate() {
            let c = cluster_of[m];
            let selected = if rng::unit(&mut rng) < config.accuracy(m) {
                correct
            } else if rng::unit(&mut rng) < config.clusters[c].rho {
                attractors[c]
            } else {
                wrong_option(&mut rng, k, correct)
            };
            builder.push(ResponseRecord::new(name.clone(), qid.clone(), k, Some(selected), correct))?;
        }
    }
    Ok((builder.finish(), partition))
}
