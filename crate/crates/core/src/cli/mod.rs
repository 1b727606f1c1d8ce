//! The `dissector` command line.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::heuristics::Heuristic;
use crate::search::SearchParams;

pub const JOBS_ENV: &str = "DISSECTOR_JOBS";

#[derive(Parser, Debug)]
#[command(name = "dissector", version, about = "Compositional explanations of neurons over clustered activation ranges")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = JOBS_ENV)]
    pub jobs: Option<usize>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    /// Only errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    /// key=value file of default flags for the subcommand; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a seeded synthetic bundle.
    GenSynthetic(GenArgs),
    /// Emit per-neuron activation intervals as JSON lines.
    Cluster(ClusterArgs),
    /// Explain every cluster range of the selected neurons.
    Explain(ExplainArgs),
    /// Run all four heuristics on the same jobs and tabulate visited states.
    CompareHeuristics(CompareArgs),
    /// Quality metrics for a results file.
    Metrics(MetricsArgs),
    /// Labels found on random activations.
    Defaults(DefaultsArgs),
    /// Tag results as unspecialized, weakly specialized or specialized.
    Classify(ClassifyArgs),
    /// Explanations and category shares over top and bottom quantile ranges.
    SweepThresholds(SweepThresholdsArgs),
    /// Average qualities for several cluster counts.
    SweepClusters(SweepClustersArgs),
    /// Load a bundle with full meta verification.
    Verify(VerifyArgs),
}

fn parse_heuristic(s: &str) -> std::result::Result<Heuristic, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BundleArgs {
    /// Bundle directory (catalog.tsv, masks.bin, acts.bin).
    #[arg(long)]
    pub bundle: PathBuf,
    /// Recompute and check mask meta on load.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SearchArgs {
    #[arg(long, default_value = "mmesh", value_parser = parse_heuristic)]
    pub heuristic: Heuristic,
    #[arg(long, default_value_t = 10)]
    pub b_first: usize,
    #[arg(long, default_value_t = 5)]
    pub b_rest: usize,
    #[arg(long, default_value_t = 3)]
    pub max_len: usize,
}

impl SearchArgs {
    pub fn params(&self) -> Result<SearchParams> {
        let p = SearchParams {
            heuristic: self.heuristic,
            b_first: self.b_first,
            b_rest: self.b_rest,
            max_len: self.max_len,
            audit: false,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SelectArgs {
    /// Neurons: `all`, or a list such as `0-9,12`.
    #[arg(long, default_value = "all")]
    pub neurons: String,
    #[arg(long, default_value_t = 5)]
    pub n_cls: usize,
    /// Single range [top 0.005 quantile, inf) instead of clusters.
    #[arg(long)]
    pub coex: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GenArgs {
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Neuron 0 gets two activation bands aligned with two planted concepts.
    #[arg(long)]
    pub planted: bool,
    #[arg(long, default_value_t = 4)]
    pub neurons: usize,
    #[arg(long, default_value_t = 16)]
    pub height: usize,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 15)]
    pub min_concepts: usize,
    #[arg(long, default_value_t = 25)]
    pub max_concepts: usize,
    #[arg(long, default_value_t = 30)]
    pub min_samples: usize,
    #[arg(long, default_value_t = 60)]
    pub max_samples: usize,
    /// Signed activations instead of rectified ones.
    #[arg(long)]
    pub signed: bool,
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Results file (JSON lines).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Also write the records as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub csv: Option<PathBuf>,
    /// Include wall times (outputs are then no longer reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[arg(long, default_value_t = 10)]
    pub b_first: usize,
    #[arg(long, default_value_t = 5)]
    pub b_rest: usize,
    #[arg(long, default_value_t = 3)]
    pub max_len: usize,
    /// Visited-state table (CSV).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    /// Results file written by `explain`.
    #[arg(long)]
    pub results: PathBuf,
    /// Directory of activations on label-masked inputs (index.tsv + files).
    #[arg(long)]
    pub masked_acts: Option<PathBuf>,
    /// Per-sample accuracy, one number per line.
    #[arg(long)]
    pub accuracy: Option<PathBuf>,
    /// Report ImRoU with this weight (1 if given without a value).
    #[arg(long, num_args = 0..=1, default_missing_value = "1")]
    pub imrou: Option<f64>,
    /// Also report the unnormalized label-masking difference.
    #[arg(long)]
    pub abs_lab_mask: bool,
    /// Per-record qualities (CSV).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Per-cluster means (CSV).
    #[arg(long)]
    #[serde(skip)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DefaultsArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 5)]
    pub n_cls: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random units to explain.
    #[arg(long, default_value_t = crate::analysis::DEFAULT_RANDOM_UNITS)]
    pub units: usize,
    /// Use the bundle's own neurons (an untrained network's export).
    #[arg(long)]
    pub from_export: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub results: PathBuf,
    /// File written by `defaults`.
    #[arg(long)]
    pub defaults: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
    /// Per-cluster tag fractions (CSV).
    #[arg(long)]
    #[serde(skip)]
    pub table: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepThresholdsArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[arg(long, default_value = "all")]
    pub neurons: String,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SweepClustersArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,
    #[arg(long, default_value = "all")]
    pub neurons: String,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
    pub k_list: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub bundle: PathBuf,
}

/// Parses `all` or comma-separated ids and inclusive ranges (`0-3,7`).
pub fn parse_neurons(spec: &str, n_neurons: usize) -> Result<Vec<usize>> {
    let bad = |msg: String| Error::Config(format!("--neurons {spec:?}: {msg}"));
    if spec.trim() == "all" {
        return Ok((0..n_neurons).collect());
    }
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (part, part),
        };
        let lo: usize = lo.parse().map_err(|_| bad(format!("bad index {lo:?}")))?;
        let hi: usize = hi.parse().map_err(|_| bad(format!("bad index {hi:?}")))?;
        if lo > hi {
            return Err(bad(format!("empty range {part}")));
        }
        if hi >= n_neurons {
            return Err(bad(format!("neuron {hi} out of range ({n_neurons} neurons)")));
        }
        out.extend(lo..=hi);
    }
    out.sort_unstable();
    out.dedup();
    if out.is_empty() {
        return Err(bad("no neurons selected".into()));
    }
    Ok(out)
}

const SUBCOMMANDS: [&str; 10] = [
    "gen-synthetic",
    "cluster",
    "explain",
    "compare-heuristics",
    "metrics",
    "defaults",
    "classify",
    "sweep-thresholds",
    "sweep-clusters",
    "verify",
];

/// `key = value` lines as flags. `true`/`false` values toggle switches;
/// blank lines and `#` comments are ignored.
pub fn config_args(text: &str, origin: &Path) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("{} line {}: expected key = value", origin.display(), i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::Config(format!("{} line {}: bad key {:?}", origin.display(), i + 1, k.trim())));
        }
        match v.trim() {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Splices `--config FILE` contents in right after the subcommand name, so
/// explicit flags that follow take precedence.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            let v = it.next().ok_or_else(|| Error::Config("--config needs a file".into()))?;
            path = Some(PathBuf::from(v));
        } else if let Some(v) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(v));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let extra = config_args(&text, &path)?;
    let pos = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .map_or(rest.len(), |p| p + 1);
    rest.splice(pos..pos, extra);
    Ok(rest)
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        "error"
    } else {
        match cli.verbose {
            0 => "warn",
            1 => "info",
            _ => "debug",
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    init_logging(&cli);
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neuron_lists() {
        assert_eq!(parse_neurons("all", 3).unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_neurons("4, 0-2,2", 5).unwrap(), vec![0, 1, 2, 4]);
        for bad in ["5", "3-1", "x", ""] {
            assert!(parse_neurons(bad, 5).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_lines_become_flags() {
        let args = config_args("# c\nn_cls = 3\ncoex = true\nverify = false\n", Path::new("c")).unwrap();
        assert_eq!(args, ["--n-cls", "3", "--coex"].map(OsString::from));
        assert!(config_args("oops\n", Path::new("c")).is_err());
    }

    #[test]
    fn config_is_spliced_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "n-cls = 2\nseed = 4\n").unwrap();
        let args = expand_config(
            ["dissector", "-v", "--config", p.to_str().unwrap(), "cluster", "--seed", "9"]
                .map(OsString::from)
                .to_vec(),
        )
        .unwrap();
        let s: Vec<_> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
        assert_eq!(s, ["dissector", "-v", "cluster", "--n-cls", "2", "--seed", "4", "--seed", "9"]);
        let cli = Cli::try_parse_from(
            args.into_iter()
                .chain(["--bundle", "b", "--out", "o"].map(OsString::from)),
        )
        .unwrap();
        match cli.command {
            Command::Cluster(c) => assert_eq!((c.select.n_cls, c.select.seed), (2, 9)),
            other => panic!("{other:?}"),
        }
    }
}
