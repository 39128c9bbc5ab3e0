//! Command-line front end: `collect`, `features`, `analyze` and `stats`.
//!
//! Every flag of a subcommand can also come from a flat `key = value`
//! file given with `--config`; keys are the long flag names without the
//! dashes. Flags on the command line win over the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use phishcollect_core::analyze::{compare_matrices, correlation_with_label};
use phishcollect_core::Label;

use crate::collect::{
    summary_path, CaptureSource, Collector, OverwritePolicy, RunSummary, EXIT_CONFIG, EXIT_OK, EXIT_TOTAL_FAILURE,
};
use crate::featurize::{extract_feature_vector, matrix_csv, read_matrix, FileProvider, IntelligenceProvider, OfflineProvider};
use crate::fetch::{FetchPolicy, Fetcher, RequestLog, DEFAULT_USER_AGENT};
use crate::ingest::{self, Feed, PHISHTANK_DETAIL_BASE};
use crate::report;
use crate::snapshot::{CdpProvider, ProviderPool, ScreenshotProvider, StubProvider, ViewportSpec};
use crate::store;

const SUBCOMMANDS: [&str; 4] = ["collect", "features", "analyze", "stats"];

#[derive(Debug, Parser)]
#[command(name = "phishcollect", version, about = "Archive landing pages with all their resources and rank phishing features")]
pub struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch and archive every input URL with its resources.
    #[command(args_override_self = true)]
    Collect(CollectArgs),
    /// Write the feature matrix of an archive.
    #[command(args_override_self = true)]
    Features(FeaturesArgs),
    /// Rank features by correlation with the class label.
    #[command(args_override_self = true)]
    Analyze(AnalyzeArgs),
    /// Count resources per class and kind in an archive.
    #[command(args_override_self = true)]
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderKind {
    /// Solid gray images; no browser needed.
    Stub,
    /// Headless Chromium over its remote-debugging endpoint.
    Cdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelArg {
    Phishing,
    Legitimate,
}

impl From<LabelArg> for Label {
    fn from(l: LabelArg) -> Label {
        match l {
            LabelArg::Phishing => Label::Phishing,
            LabelArg::Legitimate => Label::Legitimate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverwriteArg {
    Skip,
    Overwrite,
    Fail,
}

impl From<OverwriteArg> for OverwritePolicy {
    fn from(o: OverwriteArg) -> OverwritePolicy {
        match o {
            OverwriteArg::Skip => OverwritePolicy::Skip,
            OverwriteArg::Overwrite => OverwritePolicy::Overwrite,
            OverwriteArg::Fail => OverwritePolicy::Fail,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CollectArgs {
    /// Flat key = value file with defaults for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV feed, or a directory of saved PhishTank detail pages.
    #[arg(long, required_unless_present = "id_range")]
    pub input: Option<PathBuf>,
    /// PhishTank ids to fetch detail pages for, e.g. 8220100-8220112.
    #[arg(long, conflicts_with = "input")]
    pub id_range: Option<String>,
    #[arg(long, default_value = PHISHTANK_DETAIL_BASE)]
    pub phishtank_base: String,
    /// Label for CSV rows without a label column.
    #[arg(long, value_enum, default_value = "phishing")]
    pub label: LabelArg,
    /// Archive root directory; created if missing.
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..))]
    pub workers: u32,
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub screenshots: bool,
    #[arg(long, value_enum, default_value = "cdp")]
    pub screenshot_provider: ProviderKind,
    #[arg(long, default_value = "http://127.0.0.1:9222")]
    pub cdp_endpoint: String,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    pub screenshot_sessions: u32,
    /// Screenshot the live URL instead of the archived HTML file.
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub capture_live: bool,
    #[arg(long, default_value_t = 1366, value_parser = clap::value_parser!(u32).range(1..))]
    pub viewport_width: u32,
    #[arg(long, default_value_t = 768, value_parser = clap::value_parser!(u32).range(1..))]
    pub viewport_height: u32,
    #[arg(long, default_value_t = 2000)]
    pub settle_ms: u64,
    #[arg(long, default_value_t = 30)]
    pub render_timeout_secs: u64,
    /// Accept invalid TLS certificates.
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub insecure: bool,
    #[arg(long, value_enum, default_value = "skip")]
    pub overwrite: OverwriteArg,
    #[arg(long, default_value_t = 10_000)]
    pub connect_timeout_ms: u64,
    #[arg(long, default_value_t = 60_000)]
    pub timeout_ms: u64,
    #[arg(long, default_value_t = 10)]
    pub max_redirects: u32,
    #[arg(long, default_value_t = 25 * 1024 * 1024)]
    pub max_body_bytes: u64,
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    #[arg(long, default_value_t = 500)]
    pub per_host_delay_ms: u64,
    #[arg(long, default_value = DEFAULT_USER_AGENT)]
    pub user_agent: String,
    /// Ignore proxy environment variables.
    #[arg(long, num_args = 0..=1, default_value = "false", default_missing_value = "true")]
    pub no_env_proxy: bool,
    /// Exit with 3 when the failed share of samples exceeds this. The
    /// default only fails runs that archived nothing.
    #[arg(long, default_value_t = 1.0)]
    pub failure_threshold: f64,
}

impl CollectArgs {
    pub fn policy(&self) -> FetchPolicy {
        FetchPolicy {
            connect_timeout: Duration::from_millis(self.connect_timeout_ms),
            total_timeout: Duration::from_millis(self.timeout_ms),
            max_redirects: self.max_redirects,
            max_body_bytes: self.max_body_bytes,
            retries: self.retries,
            per_host_delay: Duration::from_millis(self.per_host_delay_ms),
            user_agent: self.user_agent.clone(),
            insecure: self.insecure,
            env_proxy: !self.no_env_proxy,
        }
    }

    pub fn viewport(&self) -> ViewportSpec {
        ViewportSpec {
            width: self.viewport_width,
            height: self.viewport_height,
            settle_delay: Duration::from_millis(self.settle_ms),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub root: PathBuf,
    /// Feature matrix CSV to write.
    #[arg(long)]
    pub output: PathBuf,
    /// JSON object of intelligence reports keyed by sample id or host.
    #[arg(long)]
    pub intel: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Feature matrix (CSV or ARFF).
    #[arg(long)]
    pub input: PathBuf,
    /// Second matrix to compare against.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub top_k: u32,
    /// Directory for the report files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub compare_name: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub root: PathBuf,
    /// CSV output; defaults to `<root>.stats.csv` beside the root.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Test and embedding hooks.
#[derive(Default)]
pub struct Hooks {
    pub request_log: Option<Arc<RequestLog>>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, configuration or input; exit code 2.
    #[error("{0:#}")]
    Config(anyhow::Error),
    /// The command could not do its work; exit code 1.
    #[error("{0:#}")]
    Failed(anyhow::Error),
}

fn config_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Config(e.into())
}

fn failed(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Failed(e.into())
}

/// Parses a flat `key = value` file into `--key=value` arguments. Keys may
/// use `_` for `-`. Blank lines and `#` comments are ignored.
pub fn config_args(text: &str) -> anyhow::Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key = value", i + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(anyhow!("config line {}: invalid key", i + 1));
        }
        let value = value.trim().trim_matches('"');
        out.push(format!("--{key}={value}"));
    }
    Ok(out)
}

/// Inserts the arguments from a `--config` file right after the
/// subcommand, so later command-line flags override them.
pub fn expand_config(argv: Vec<String>) -> anyhow::Result<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = argv.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let extra = config_args(&text)?;
    let at = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map_or(argv.len(), |i| i + 1);
    let mut out = argv;
    out.splice(at..at, extra);
    Ok(out)
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Runs the command line and returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    run_with(argv, &Hooks::default())
}

pub fn run_with(argv: Vec<String>, hooks: &Hooks) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    let result = match &cli.command {
        Command::Collect(a) => cmd_collect(a, hooks).map(|(summary, code)| {
            print!("{}", summary.render());
            code
        }),
        Command::Features(a) => cmd_features(a).map(|_| EXIT_OK),
        Command::Analyze(a) => cmd_analyze(a).map(|_| EXIT_OK),
        Command::Stats(a) => cmd_stats(a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Config(e)) => {
            eprintln!("error: {e:#}");
            EXIT_CONFIG
        }
        Err(CliError::Failed(e)) => {
            eprintln!("error: {e:#}");
            EXIT_TOTAL_FAILURE
        }
    }
}

fn load_input(args: &CollectArgs, fetcher: &Fetcher) -> Result<Feed, CliError> {
    if let Some(range) = &args.id_range {
        let ids = ingest::parse_id_range(range).ok_or_else(|| config_err(anyhow!("bad id range `{range}`")))?;
        return ingest::load_phishtank_range(fetcher, &args.phishtank_base, ids).map_err(config_err);
    }
    let input = args.input.as_ref().ok_or_else(|| config_err(anyhow!("no --input given")))?;
    if input.is_dir() {
        ingest::load_phishtank_dir(input).map_err(CliError::Config)
    } else {
        let bytes = fs::read(input)
            .with_context(|| format!("reading {}", input.display()))
            .map_err(CliError::Config)?;
        ingest::load_csv_feed(&bytes, args.label.into()).map_err(config_err)
    }
}

/// Runs a collection; returns the summary and the exit code it implies.
/// The summary is also written beside the archive root.
pub fn cmd_collect(args: &CollectArgs, hooks: &Hooks) -> Result<(RunSummary, i32), CliError> {
    if !(0.0..=1.0).contains(&args.failure_threshold) {
        return Err(config_err(anyhow!("--failure-threshold must be within [0, 1]")));
    }
    let mut fetcher = Fetcher::new(args.policy()).map_err(CliError::Config)?;
    if let Some(log) = &hooks.request_log {
        fetcher = fetcher.with_log(log.clone());
    }
    let feed = load_input(args, &fetcher)?;
    fs::create_dir_all(&args.root)
        .with_context(|| format!("creating {}", args.root.display()))
        .map_err(CliError::Config)?;

    let pool = args.screenshots.then(|| {
        let sessions: Vec<Box<dyn ScreenshotProvider>> = (0..args.screenshot_sessions)
            .map(|_| -> Box<dyn ScreenshotProvider> {
                match args.screenshot_provider {
                    ProviderKind::Stub => Box::new(StubProvider::Solid([0x80, 0x80, 0x80])),
                    ProviderKind::Cdp => Box::new(CdpProvider::new(
                        &args.cdp_endpoint,
                        Duration::from_secs(args.render_timeout_secs),
                    )),
                }
            })
            .collect();
        ProviderPool::new(sessions)
    });
    let collector = Collector {
        fetcher: &fetcher,
        screenshots: pool.as_ref(),
        viewport: args.viewport(),
        capture: if args.capture_live {
            CaptureSource::LiveUrl
        } else {
            CaptureSource::LocalFile
        },
        root: args.root.clone(),
        workers: args.workers as usize,
        overwrite: args.overwrite.into(),
    };
    let mut summary = collector.run(feed.records);
    summary.input_skipped = feed.skipped as u64;
    let path = summary_path(&args.root);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, json + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(failed)?;
    let code = summary.exit_code(args.failure_threshold);
    Ok((summary, code))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeaturesOutcome {
    pub rows: usize,
    /// `(sample directory name, reason)`.
    pub skipped: Vec<(String, String)>,
}

pub fn cmd_features(args: &FeaturesArgs) -> Result<FeaturesOutcome, CliError> {
    let provider: Box<dyn IntelligenceProvider> = match &args.intel {
        Some(p) => Box::new(FileProvider::load(p).map_err(CliError::Config)?),
        None => Box::new(OfflineProvider),
    };
    let dirs = store::sample_dirs(&args.root).map_err(config_err)?;
    let mut vectors = Vec::new();
    let mut skipped = Vec::new();
    for dir in dirs {
        let name = dir.path().file_name().unwrap_or_default().to_string_lossy().into_owned();
        let report = match store::read_manifest(&dir) {
            Ok(m) => provider.report(&m.record),
            Err(e) => {
                skipped.push((name, e.to_string()));
                continue;
            }
        };
        match extract_feature_vector(&dir, &report) {
            Ok(v) => vectors.push(v),
            Err(e) => skipped.push((name, e.to_string())),
        }
    }
    for (name, reason) in &skipped {
        eprintln!("skipped {name}: {reason}");
    }
    write_file(&args.output, &matrix_csv(&vectors))?;
    Ok(FeaturesOutcome {
        rows: vectors.len(),
        skipped,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))
            .map_err(failed)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(failed)
}

fn dataset_name(path: &Path, explicit: &Option<String>) -> String {
    explicit
        .clone()
        .unwrap_or_else(|| path.file_stem().unwrap_or_default().to_string_lossy().into_owned())
}

/// Writes `correlation.csv` and `correlation.json` to the output directory,
/// plus `comparison.csv` and `comparison.json` when a second matrix is
/// given. Prints the tables.
pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let k = args.top_k as usize;
    let a = read_matrix(&args.input).map_err(CliError::Config)?;
    let report = correlation_with_label(&a).map_err(failed)?;
    let name = dataset_name(&args.input, &args.name);
    let out = &args.out_dir;
    write_file(&out.join("correlation.csv"), &report::report_csv(&report, k))?;
    let series = report::report_series(&name, &report, k);
    write_file(
        &out.join("correlation.json"),
        &(serde_json::to_string_pretty(&series).expect("series serializes") + "\n"),
    )?;
    print!("{}", report::report_table(&report, k));

    if let Some(second) = &args.compare {
        let b = read_matrix(second).map_err(CliError::Config)?;
        let comparison = compare_matrices(&a, &b).map_err(failed)?;
        let other = dataset_name(second, &args.compare_name);
        let names = [name.as_str(), other.as_str()];
        write_file(&out.join("comparison.csv"), &report::comparison_csv(&comparison))?;
        let series = report::comparison_series(names, &report, &comparison);
        write_file(
            &out.join("comparison.json"),
            &(serde_json::to_string_pretty(&series).expect("series serializes") + "\n"),
        )?;
        println!();
        print!("{}", report::comparison_table(names, &comparison));
    }
    Ok(())
}

pub fn stats_path(root: &Path) -> PathBuf {
    let name = root
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "archive".into());
    root.with_file_name(format!("{name}.stats.csv"))
}

pub fn cmd_stats(args: &StatsArgs) -> Result<phishcollect_core::ResourceStats, CliError> {
    let stats = store::collect_stats(&args.root).map_err(config_err)?;
    let out = args.out.clone().unwrap_or_else(|| stats_path(&args.root));
    write_file(&out, &store::stats_csv(&stats))?;
    print!("{}", store::stats_table(&stats));
    Ok(stats)
}
