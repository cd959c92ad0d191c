//! Analysis stages shared by the subcommands, and the full report bundle.
//!
//! A bundle is built entirely in memory and then written out, so a failure
//! in a late stage leaves no partial output behind. Clustering always runs
//! on the z-scores as written to the z-matrix CSV (four decimals), so that
//! `errcorr cluster` on the bundle's `zmatrix.csv` reproduces the bundle's
//! dendrogram exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use errcorr_core::cluster::{agglomerate, cut_clusters, leaf_order, z_to_distance, Dendrogram, Linkage};
use errcorr_core::pairstats::{z_matrix, ZMatrix, ZScores};
use errcorr_core::universal::{
    empirical_cdf, expected_max_fraction, simulate_max_fraction, universal_questions,
    UniversalErrorRecord,
};
use errcorr_core::EvalTable;
use sha2::{Digest, Sha256};

use crate::formats::json::{array, quote, JsonObject};
use crate::formats::outputs::{
    cdf_csv, dendrogram_json, newick_file, partition_csv, SimulatedBaseline, UniversalSummary,
};
use crate::formats::{parse_responses, zcsv, Format};
use crate::svg::heatmap_svg;
use crate::{fmt4, Error, Result};

pub const TOOL: &str = "errcorr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterParams {
    pub linkage: Linkage,
    pub z_floor: f64,
    pub cut: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ClusterOutput {
    pub dendrogram: Dendrogram,
    pub partition: Option<Vec<Vec<usize>>>,
    pub order: Vec<usize>,
}

pub fn cluster_stage(z: &ZScores, params: &ClusterParams) -> Result<ClusterOutput> {
    if let Some(k) = params.cut {
        if k == 0 || k > z.labels().len() {
            return Err(errcorr_core::Error::InvalidK(k as u64).into());
        }
    }
    let dm = z_to_distance(z, params.z_floor)?;
    let dendrogram = agglomerate(&dm, params.linkage)?;
    let partition = params.cut.map(|k| cut_clusters(&dendrogram, k)).transpose()?;
    let order = leaf_order(&dendrogram);
    Ok(ClusterOutput {
        dendrogram,
        partition,
        order,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct UniversalParams {
    /// Defaults to every model in the table.
    pub min_wrong: Option<usize>,
    /// Balls for the baseline; defaults to the number of models.
    pub models: Option<u32>,
    /// Bins for the baseline; defaults to `k - 1` for the most common `k`.
    pub bins: Option<u32>,
    pub simulate: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct UniversalOutput {
    pub records: Vec<UniversalErrorRecord>,
    pub cdf: Vec<(f64, f64)>,
    pub summary: UniversalSummary,
}

/// Most common value, smallest on ties.
fn mode(values: impl Iterator<Item = u32>) -> Option<u32> {
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    let best = counts.values().copied().max()?;
    counts.into_iter().find(|&(_, c)| c == best).map(|(v, _)| v)
}

pub fn universal_stage(table: &EvalTable, params: &UniversalParams) -> Result<UniversalOutput> {
    let min_wrong = params.min_wrong.unwrap_or(table.n_models()).max(1);
    let records = universal_questions(table, min_wrong)?;
    let fractions: Vec<f64> = records.iter().map(|r| r.fraction).collect();
    let cdf = if fractions.is_empty() {
        Vec::new()
    } else {
        empirical_cdf(&fractions)?
    };

    let models = params
        .models
        .or_else(|| u32::try_from(table.n_models()).ok().filter(|&n| n > 0));
    let bins = params.bins.or_else(|| {
        let k = mode(records.iter().map(|r| r.k))
            .or_else(|| mode(table.questions().iter().map(|q| q.k)))?;
        Some(k - 1)
    });
    let expected_baseline = match (models, bins) {
        (Some(n), Some(m)) => Some(expected_max_fraction(n.into(), m.into())?),
        _ => None,
    };
    let simulated = match (params.simulate, models, bins) {
        (Some(trials), Some(n), Some(m)) => {
            let e = simulate_max_fraction(n, m, trials, params.seed)?;
            Some(SimulatedBaseline {
                mean: e.mean,
                std_error: e.std_error,
                trials,
                seed: params.seed,
            })
        }
        (Some(_), _, _) => {
            return Err(Error::Usage(
                "cannot simulate without a model count and a bin count".into(),
            ))
        }
        _ => None,
    };
    let summary = UniversalSummary {
        n_questions: records.len(),
        min_wrong,
        models,
        bins,
        expected_baseline,
        min_fraction: fractions.iter().copied().min_by(f64::total_cmp),
        max_fraction: fractions.iter().copied().max_by(f64::total_cmp),
        simulated,
    };
    Ok(UniversalOutput {
        records,
        cdf,
        summary,
    })
}

/// Human-readable summary lines for a z-matrix.
pub fn zmatrix_summary_lines(zm: &ZMatrix) -> Vec<String> {
    let s = zm.summary();
    let na = || "NA".to_string();
    vec![
        format!("pairs: {} ({} with z, {} NA)", s.n_pairs, s.n_present, s.n_pairs - s.n_present),
        format!("min z: {}", s.min_z.map_or_else(na, fmt4)),
        format!("median z: {}", s.median_z.map_or_else(na, fmt4)),
        format!(
            "min common errors: {}",
            s.min_common_errors.map_or_else(na, |v| v.to_string())
        ),
        format!(
            "median common errors: {}",
            s.median_common_errors.map_or_else(na, |v| format!("{v:.1}"))
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportParams {
    pub min_common: usize,
    pub cluster: ClusterParams,
    pub universal: UniversalParams,
}

impl Default for ReportParams {
    fn default() -> Self {
        ReportParams {
            min_common: 1,
            cluster: ClusterParams {
                linkage: Linkage::Ward,
                z_floor: errcorr_core::cluster::DEFAULT_Z_FLOOR,
                cut: None,
            },
            universal: UniversalParams::default(),
        }
    }
}

/// Named file contents, in write order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportBundle {
    pub artifacts: Vec<(String, Vec<u8>)>,
}

impl ReportBundle {
    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.artifacts
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b.as_slice())
    }

    pub fn write_to(&self, outdir: &Path) -> Result<()> {
        fs::create_dir_all(outdir).map_err(|source| Error::Write {
            path: outdir.to_path_buf(),
            source,
        })?;
        for (name, bytes) in &self.artifacts {
            let path = outdir.join(name);
            fs::write(&path, bytes).map_err(|source| Error::Write { path, source })?;
        }
        Ok(())
    }
}

/// Runs the whole pipeline: z-matrix, clustering, heatmap, universal errors
/// and a manifest describing how to reproduce every file.
pub fn build_report(
    input_name: &str,
    input: &[u8],
    format: Format,
    params: &ReportParams,
) -> Result<ReportBundle> {
    let table = parse_responses(input, format)?;
    let zm = z_matrix(&table, params.min_common)?;
    let z_csv = zcsv::zmatrix_csv(&zm)?;
    let counts_csv = zcsv::counts_csv(&zm)?;
    let z = zcsv::read_zscores(z_csv.as_bytes())
        .map_err(|e| Error::Internal(format!("z-matrix CSV does not read back: {e}")))?;
    let clustered = cluster_stage(&z, &params.cluster)?;
    let svg = heatmap_svg(&z, &clustered.order);
    let universal = universal_stage(&table, &params.universal)?;

    let mut artifacts: Vec<(String, Vec<u8>)> = vec![
        ("zmatrix.csv".into(), z_csv.into_bytes()),
        ("pair_counts.csv".into(), counts_csv.into_bytes()),
        ("dendrogram.nwk".into(), newick_file(&clustered.dendrogram).into_bytes()),
        ("dendrogram.json".into(), dendrogram_json(&clustered.dendrogram).into_bytes()),
    ];
    if let Some(p) = &clustered.partition {
        artifacts.push((
            "partition.csv".into(),
            partition_csv(&clustered.dendrogram, p).into_bytes(),
        ));
    }
    artifacts.push(("heatmap.svg".into(), svg.into_bytes()));
    artifacts.push(("cdf.csv".into(), cdf_csv(&universal.cdf).into_bytes()));
    artifacts.push((
        "universal_summary.json".into(),
        universal.summary.to_json().into_bytes(),
    ));

    let manifest = manifest_json(input_name, input, format, params, &artifacts);
    artifacts.push((MANIFEST.into(), manifest.into_bytes()));
    Ok(ReportBundle { artifacts })
}

fn manifest_json(
    input_name: &str,
    input: &[u8],
    format: Format,
    params: &ReportParams,
    artifacts: &[(String, Vec<u8>)],
) -> String {
    let opt = |v: Option<u64>| v.map_or("null".to_string(), |v| v.to_string());
    let u = &params.universal;
    let parameters = JsonObject::new()
        .int("min_common", params.min_common as u64)
        .str("linkage", params.cluster.linkage.name())
        .num("z_floor", params.cluster.z_floor)
        .raw("cut", opt(params.cluster.cut.map(|c| c as u64)))
        .raw("min_wrong", opt(u.min_wrong.map(|c| c as u64)))
        .raw("models", opt(u.models.map(u64::from)))
        .raw("bins", opt(u.bins.map(u64::from)))
        .raw("simulate", opt(u.simulate));
    let files = array(artifacts.iter().map(|(name, bytes)| {
        format!(
            "{{\"name\": {}, \"sha256\": {}, \"bytes\": {}}}",
            quote(name),
            quote(&sha256_hex(bytes)),
            bytes.len()
        )
    }));
    JsonObject::new()
        .str("tool", TOOL)
        .str("version", VERSION)
        .str("command", "report")
        .obj(
            "input",
            JsonObject::new()
                .str("file", input_name)
                .str("format", match format {
                    Format::Jsonl => "jsonl",
                    Format::Csv => "csv",
                })
                .str("sha256", &sha256_hex(input))
                .int("bytes", input.len() as u64),
        )
        .obj("parameters", parameters)
        .int("seed", u.seed)
        .raw("artifacts", files)
        .render("")
        + "\n"
}

/// Checks every artifact listed in `outdir/manifest.json` against its
/// recorded hash and size. Returns the number of files checked.
pub fn verify_manifest(outdir: &Path) -> Result<usize> {
    let path = outdir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|source| Error::Read { path, source })?;
    let manifest: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::malformed(e.line() as u64, e.to_string()))?;
    let files = manifest["artifacts"]
        .as_array()
        .ok_or_else(|| Error::malformed(0, "manifest has no artifact list"))?;
    for f in files {
        let name = f["name"].as_str().unwrap_or_default();
        let path = outdir.join(name);
        let bytes = fs::read(&path).map_err(|source| Error::Read { path, source })?;
        if f["sha256"].as_str() != Some(sha256_hex(&bytes).as_str())
            || f["bytes"].as_u64() != Some(bytes.len() as u64)
        {
            return Err(Error::Usage(format!("{name} does not match the manifest")));
        }
    }
    Ok(files.len())
}
