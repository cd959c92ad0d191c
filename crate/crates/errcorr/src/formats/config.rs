//! Synthetic-table configuration as JSON.
//!
//! ```json
//! {"clusters": [{"n_models": 4, "rho": 0.8}], "n_questions": 2000,
//!  "k": 10, "accuracy": 0.3, "seed": 1}
//! ```
//! `k` may also be a per-question list and `accuracy` a per-model list.

use errcorr_core::synth::{Accuracy, ClusterSpec, OptionCount, SynthConfig};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClusterJson {
    n_models: usize,
    rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigJson {
    clusters: Vec<ClusterJson>,
    n_questions: usize,
    k: OneOrMany<u32>,
    accuracy: OneOrMany<f64>,
    #[serde(default)]
    seed: u64,
}

pub fn parse_config(text: &str) -> Result<SynthConfig> {
    let c: ConfigJson = serde_json::from_str(text).map_err(|e| Error::Malformed {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    let config = SynthConfig {
        clusters: c
            .clusters
            .into_iter()
            .map(|c| ClusterSpec { n_models: c.n_models, rho: c.rho })
            .collect(),
        n_questions: c.n_questions,
        k: match c.k {
            OneOrMany::One(k) => OptionCount::Constant(k),
            OneOrMany::Many(ks) => OptionCount::PerQuestion(ks),
        },
        accuracy: match c.accuracy {
            OneOrMany::One(a) => Accuracy::Constant(a),
            OneOrMany::Many(a) => Accuracy::PerModel(a),
        },
        seed: c.seed,
    };
    config.validate()?;
    Ok(config)
}

pub fn config_json(config: &SynthConfig) -> String {
    let c = ConfigJson {
        clusters: config
            .clusters
            .iter()
            .map(|c| ClusterJson { n_models: c.n_models, rho: c.rho })
            .collect(),
        n_questions: config.n_questions,
        k: match &config.k {
            OptionCount::Constant(k) => OneOrMany::One(*k),
            OptionCount::PerQuestion(ks) => OneOrMany::Many(ks.clone()),
        },
        accuracy: match &config.accuracy {
            Accuracy::Constant(a) => OneOrMany::One(*a),
            Accuracy::PerModel(a) => OneOrMany::Many(a.clone()),
        },
        seed: config.seed,
    };
    serde_json::to_string_pretty(&c).expect("config serializes")
}
