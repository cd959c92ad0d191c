//! Subcommands of the `errcorr` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use errcorr_core::cluster::{Linkage, DEFAULT_Z_FLOOR};
use errcorr_core::pairstats::z_matrix;
use errcorr_core::sampling::{answer_histogram, position_histogram, tv_from_uniform};
use errcorr_core::synth::generate_table;
use errcorr_core::EvalTable;

use crate::formats::outputs::{cdf_csv, dendrogram_json, newick_file, partition_csv, universal_questions_csv};
use crate::formats::{config, parse_responses, responses, trials, zcsv, Format};
use crate::report::{
    build_report, cluster_stage, universal_stage, zmatrix_summary_lines, ClusterParams,
    ReportParams, UniversalParams,
};
use crate::{fmt4, Error, Result};

#[derive(Debug, Parser)]
#[command(name = "errcorr", version, about = "Correlated-error analysis for multiple-choice evaluations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a response file and summarise it.
    Validate(ValidateArgs),
    /// Pairwise common-error z-scores.
    Zmatrix(ZmatrixArgs),
    /// Hierarchical clustering of a z-matrix CSV.
    Cluster(ClusterArgs),
    /// Questions every model gets wrong, and how much the wrong answers agree.
    Universal(UniversalArgs),
    /// Answer or position histogram for one problem of a trial log.
    Histo(HistoArgs),
    /// Generate a synthetic response table.
    Synth(SynthArgs),
    /// Full pipeline into a directory of reproducible artifacts.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => Format::Jsonl,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LinkageArg {
    Ward,
    Upgma,
    Single,
    Complete,
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Ward => Linkage::Ward,
            LinkageArg::Upgma => Linkage::Upgma,
            LinkageArg::Single => Linkage::Single,
            LinkageArg::Complete => Linkage::Complete,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum View {
    Answer,
    Position,
}

#[derive(Debug, Args)]
pub struct TableInput {
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to csv for `.csv` files and jsonl otherwise.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

impl TableInput {
    fn format(&self) -> Format {
        self.format.map_or_else(|| Format::from_path(&self.input), Into::into)
    }

    fn load(&self) -> Result<EvalTable> {
        parse_responses(read(&self.input)?.as_slice(), self.format())
    }
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub table: TableInput,
}

#[derive(Debug, Args)]
pub struct ZmatrixArgs {
    #[command(flatten)]
    pub table: TableInput,
    /// z-matrix CSV; pair counts go to `<stem>.counts.csv` beside it.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub min_common: usize,
}

#[derive(Debug, Args)]
pub struct ClusterOpts {
    #[arg(long, value_enum, default_value = "ward")]
    pub linkage: LinkageArg,
    #[arg(long, default_value_t = DEFAULT_Z_FLOOR)]
    pub z_floor: f64,
    /// Also write the partition into this many clusters.
    #[arg(long)]
    pub cut: Option<usize>,
}

impl ClusterOpts {
    fn params(&self) -> ClusterParams {
        ClusterParams {
            linkage: self.linkage.into(),
            z_floor: self.z_floor,
            cut: self.cut,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// z-matrix CSV as written by `zmatrix`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub outdir: PathBuf,
    #[command(flatten)]
    pub opts: ClusterOpts,
}

#[derive(Debug, Args)]
pub struct UniversalOpts {
    /// Minimum number of wrong answers; defaults to every model.
    #[arg(long)]
    pub min_wrong: Option<usize>,
    /// Balls in the baseline; defaults to the number of models.
    #[arg(long)]
    pub models: Option<u32>,
    /// Bins in the baseline; defaults to k - 1 for the most common k.
    #[arg(long)]
    pub bins: Option<u32>,
    /// Also estimate the baseline with this many Monte Carlo trials.
    #[arg(long)]
    pub simulate: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl UniversalOpts {
    fn params(&self) -> UniversalParams {
        UniversalParams {
            min_wrong: self.min_wrong,
            models: self.models,
            bins: self.bins,
            simulate: self.simulate,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct UniversalArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[arg(long)]
    pub outdir: PathBuf,
    #[command(flatten)]
    pub opts: UniversalOpts,
}

#[derive(Debug, Args)]
pub struct HistoArgs {
    /// Trial log (JSONL).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub problem: String,
    #[arg(long = "by", value_enum, default_value = "answer")]
    pub view: View,
    /// Histogram CSV; printed to standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[arg(long)]
    pub outdir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub min_common: usize,
    #[command(flatten)]
    pub cluster: ClusterOpts,
    #[command(flatten)]
    pub universal: UniversalOpts,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| Error::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Sidecar path for pair counts: `z.csv` → `z.counts.csv`.
pub fn counts_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map_or_else(|| "zmatrix".into(), |s| s.to_string_lossy().into_owned());
    output.with_file_name(format!("{stem}.counts.csv"))
}

/// Runs one subcommand, writing its report to `out` and warnings to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Validate(a) => validate(a, out),
        Command::Zmatrix(a) => zmatrix(a, out, err),
        Command::Cluster(a) => cluster(a, out),
        Command::Universal(a) => universal(a, out),
        Command::Histo(a) => histo(a, out, err),
        Command::Synth(a) => synth(a, out),
        Command::Report(a) => report(a, out),
    }
}

fn validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let r = a.table.load()?.validate();
    writeln!(out, "models: {}", r.models.len())?;
    for m in &r.models {
        writeln!(out, "  {m}")?;
    }
    writeln!(out, "questions: {}", r.n_questions)?;
    let hist: Vec<String> = r.k_histogram.iter().map(|(k, n)| format!("k={k}: {n}")).collect();
    writeln!(out, "questions by k: {}", if hist.is_empty() { "-".into() } else { hist.join(", ") })?;
    writeln!(out, "answered: {}", r.answered_count)?;
    writeln!(out, "abstain: {}", r.abstain_count)?;
    writeln!(out, "missing: {}", r.missing_count)?;
    Ok(())
}

fn zmatrix(a: &ZmatrixArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let table = a.table.load()?;
    let zm = z_matrix(&table, a.min_common)?;
    write(&a.output, zcsv::zmatrix_csv(&zm)?)?;
    write(&counts_path(&a.output), zcsv::counts_csv(&zm)?)?;
    let s = zm.summary();
    if s.n_present < s.n_pairs {
        writeln!(err, "warning: {} of {} pairs have no z-score (NA)", s.n_pairs - s.n_present, s.n_pairs)?;
    }
    for line in zmatrix_summary_lines(&zm) {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn cluster(a: &ClusterArgs, out: &mut dyn Write) -> Result<()> {
    let z = zcsv::read_zscores(read(&a.input)?.as_slice())?;
    let c = cluster_stage(&z, &a.opts.params())?;
    write(&a.outdir.join("dendrogram.nwk"), newick_file(&c.dendrogram))?;
    write(&a.outdir.join("dendrogram.json"), dendrogram_json(&c.dendrogram))?;
    if let Some(p) = &c.partition {
        write(&a.outdir.join("partition.csv"), partition_csv(&c.dendrogram, p))?;
    }
    write!(out, "{}", newick_file(&c.dendrogram))?;
    Ok(())
}

fn universal(a: &UniversalArgs, out: &mut dyn Write) -> Result<()> {
    let table = a.table.load()?;
    let u = universal_stage(&table, &a.opts.params())?;
    let summary = u.summary.to_json();
    write(&a.outdir.join("cdf.csv"), cdf_csv(&u.cdf))?;
    write(&a.outdir.join("universal_summary.json"), &summary)?;
    write(&a.outdir.join("universal_questions.csv"), universal_questions_csv(&u.records))?;
    write!(out, "{summary}")?;
    Ok(())
}

fn histo(a: &HistoArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let log = trials::parse_trials(read(&a.input)?.as_slice())?;
    let (name, counts) = match a.view {
        View::Answer => ("option", answer_histogram(&log, &a.problem)?),
        View::Position => ("position", position_histogram(&log, &a.problem)?),
    };
    if counts.is_empty() {
        return Err(Error::Usage(format!("no trials for problem `{}`", a.problem)));
    }
    let tv = tv_from_uniform(&counts)?;
    let csv = trials::histogram_csv(name, &counts);
    let tv_line = format!("tv_from_uniform: {}", fmt4(tv));
    match &a.output {
        Some(path) => {
            write(path, csv)?;
            writeln!(out, "{tv_line}")?;
        }
        None => {
            write!(out, "{csv}")?;
            writeln!(err, "{tv_line}")?;
        }
    }
    Ok(())
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let text = String::from_utf8(read(&a.config)?)
        .map_err(|_| Error::malformed(0, "config is not valid UTF-8"))?;
    let mut config = config::parse_config(&text)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let (table, _) = generate_table(&config)?;
    let format = a.format.map_or_else(|| Format::from_path(&a.output), Into::into);
    write(&a.output, responses::to_bytes(&table, format))?;
    writeln!(
        out,
        "wrote {} records ({} models x {} questions, seed {})",
        table.n_records(),
        table.n_models(),
        table.n_questions(),
        config.seed
    )?;
    Ok(())
}

fn report(a: &ReportArgs, out: &mut dyn Write) -> Result<()> {
    let input = read(&a.table.input)?;
    let name = a
        .table
        .input
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    let params = ReportParams {
        min_common: a.min_common,
        cluster: a.cluster.params(),
        universal: a.universal.params(),
    };
    let bundle = build_report(&name, &input, a.table.format(), &params)?;
    bundle.write_to(&a.outdir)?;
    for (name, bytes) in &bundle.artifacts {
        writeln!(out, "{:>8}  {}", bytes.len(), a.outdir.join(name).display())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_naming() {
        assert_eq!(counts_path(Path::new("out/z.csv")), PathBuf::from("out/z.counts.csv"));
        assert_eq!(counts_path(Path::new("z")), PathBuf::from("z.counts.csv"));
    }

    #[test]
    fn parses_documented_flags() {
        let cli = Cli::try_parse_from([
            "errcorr", "report", "--input", "t.jsonl", "--outdir", "o", "--format", "jsonl",
            "--min-common", "3", "--linkage", "upgma", "--z-floor", "0.2", "--cut", "4",
            "--min-wrong", "5", "--models", "37", "--bins", "9", "--simulate", "100", "--seed", "7",
        ])
        .unwrap();
        let Command::Report(r) = cli.command else { panic!() };
        assert_eq!(r.min_common, 3);
        assert_eq!(r.cluster.params().linkage, Linkage::Upgma);
        assert_eq!(r.universal.params().bins, Some(9));
        let cli = Cli::try_parse_from([
            "errcorr", "histo", "--input", "t.jsonl", "--problem", "p", "--by", "position",
        ])
        .unwrap();
        assert!(matches!(cli.command, Command::Histo(HistoArgs { view: View::Position, .. })));
        assert!(Cli::try_parse_from(["errcorr", "cluster", "--input", "z.csv", "--outdir", "o", "--linkage", "centroid"]).is_err());
    }
}
