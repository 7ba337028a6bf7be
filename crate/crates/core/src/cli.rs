//! `gtsample` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid arguments or parameters, 3 I/O failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bounds::{rc_max_positive, rc_max_tests, sight_max_positive, sight_max_tests};
use crate::error::Error;
use crate::harness::{self, CellReport, Execution, ExperimentConfig, STANDARD_RATIOS};
use crate::oracle::{generate_family, PlantedFamily};
use crate::rc::{build_schedule, DEFAULT_T_MAX};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const RUN_LOG_FILE: &str = "runs.ndjson";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_ECHO_FILE: &str = "config.txt";

#[derive(Debug, Parser)]
#[command(name = "gtsample", version, about = "Sample minimal defective sets with SIGHT and Random Chemistry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted test family.
    Generate(GenerateArgs),
    /// Run paired SIGHT/RC experiments over an a0 grid.
    Run(RunArgs),
    /// Print worst-case test counts and the RC schedule.
    Bounds(BoundsArgs),
    /// Recompute the summary table from a run log.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Universe size.
    #[arg(long)]
    pub n: usize,
    /// Planted sets of size 1 (must be 0).
    #[arg(long)]
    pub k1: Option<usize>,
    #[arg(long)]
    pub k2: Option<usize>,
    #[arg(long)]
    pub k3: Option<usize>,
    #[arg(long)]
    pub k4: Option<usize>,
    #[arg(long)]
    pub k5: Option<usize>,
    #[arg(long)]
    pub k6: Option<usize>,
    /// Additional counts as `k:count,...`.
    #[arg(long)]
    pub counts: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Key-value config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Comma-separated initial sizes.
    #[arg(long)]
    pub a0: Option<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub kmin: Option<usize>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long)]
    pub tmax: Option<usize>,
    #[arg(long)]
    pub pfn: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated positive:negative cost ratios.
    #[arg(long)]
    pub ratios: Option<String>,
    /// Family label for the summary table.
    #[arg(long)]
    pub label: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub a0: usize,
    #[arg(long, default_value_t = 2)]
    pub kmin: usize,
    #[arg(long, default_value_t = 4)]
    pub kmax: usize,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    pub tmax: usize,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value = "")]
    pub label: String,
    #[arg(long)]
    pub ratios: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(m) => CliError::Io(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a, out, err),
        Command::Run(a) => cmd_run(&a, out),
        Command::Bounds(a) => cmd_bounds(&a, out),
        Command::Stats(a) => cmd_stats(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.exit_code()
        }
    }
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| invalid(format!("{flag}: cannot parse '{s}'"))))
        .collect()
}

fn parse_counts(text: &str) -> CliResult<BTreeMap<usize, usize>> {
    let mut counts = BTreeMap::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, c) = item
            .split_once(':')
            .ok_or_else(|| invalid(format!("--counts: expected k:count, got '{item}'")))?;
        let k: usize = k.trim().parse().map_err(|_| invalid(format!("--counts: bad k in '{item}'")))?;
        let c: usize = c.trim().parse().map_err(|_| invalid(format!("--counts: bad count in '{item}'")))?;
        counts.insert(k, c);
    }
    Ok(counts)
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    if args.k1.unwrap_or(0) > 0 {
        return Err(invalid("--k1: defective sets of size 1 are not allowed"));
    }
    if args.n < 2 {
        return Err(invalid(format!("--n: universe size must be at least 2 (got {})", args.n)));
    }
    let mut counts = match &args.counts {
        Some(text) => parse_counts(text)?,
        None => BTreeMap::new(),
    };
    for (k, c) in [(2, args.k2), (3, args.k3), (4, args.k4), (5, args.k5), (6, args.k6)] {
        if let Some(c) = c {
            counts.insert(k, c);
        }
    }
    if counts.get(&1).copied().unwrap_or(0) > 0 || counts.get(&0).copied().unwrap_or(0) > 0 {
        return Err(invalid("--counts: defective sets need at least 2 members"));
    }
    counts.retain(|_, c| *c > 0);
    let family = generate_family(args.n, &counts, args.seed).map_err(|e| match e {
        Error::InfeasibleCounts { k, .. } => invalid(format!("--k{k}: {e}")),
        other => other.into(),
    })?;
    fs::write(&args.output, family.to_json()).map_err(|e| io_err(&args.output, e))?;
    if family.planted().is_empty() {
        let _ = writeln!(err, "warning: generated family is empty; every test will be negative");
    }
    let mut line = format!("wrote {} planted sets over N={} to {}", family.planted().len(), args.n, args.output.display());
    for (k, c) in family.counts_by_k() {
        let _ = write!(line, " k{k}={c}");
    }
    writeln!(out, "{line}").map_err(|e| CliError::Io(e.to_string()))
}

/// Settings for `run`, merged from a config file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub family: PathBuf,
    pub label: String,
    pub experiment: ExperimentConfig,
}

impl RunSettings {
    /// Key-value text, one `key = value` per line, readable by [`parse_config`].
    pub fn to_config_text(&self) -> String {
        let e = &self.experiment;
        let join = |v: Vec<String>| v.join(",");
        format!(
            "family = {}\nlabel = {}\na0 = {}\nruns = {}\nkmin = {}\nkmax = {}\ntmax = {}\npfn = {}\nseed = {}\nratios = {}\n",
            self.family.display(),
            self.label,
            join(e.a0_grid.iter().map(usize::to_string).collect()),
            e.runs,
            e.k_min,
            e.k_max,
            e.t_max,
            e.false_negative_rate,
            e.seed,
            join(e.cost_ratios.iter().map(f64::to_string).collect()),
        )
    }
}

pub const CONFIG_KEYS: [&str; 11] = [
    "family", "label", "a0", "runs", "kmin", "kmax", "tmax", "pfn", "seed", "ratios", "threads",
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().to_ascii_lowercase();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(invalid(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn resolve_run(args: &RunArgs) -> CliResult<(RunSettings, Option<usize>, PathBuf)> {
    let file = match &args.config {
        Some(path) => parse_config(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)?,
        None => BTreeMap::new(),
    };
    let get = |key: &str| file.get(key).map(String::as_str);
    fn pick<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str) -> CliResult<Option<T>> {
        match (flag, file) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(s)) => s.parse().map(Some).map_err(|_| invalid(format!("--{key}: cannot parse '{s}'"))),
            (None, None) => Ok(None),
        }
    }
    let defaults = ExperimentConfig::default();
    let family = args
        .family
        .clone()
        .or_else(|| get("family").map(PathBuf::from))
        .ok_or_else(|| invalid("--family: required"))?;
    let a0_grid = match args.a0.as_deref().or(get("a0")) {
        Some(text) => parse_list("--a0", text)?,
        None => defaults.a0_grid,
    };
    let cost_ratios = match args.ratios.as_deref().or(get("ratios")) {
        Some(text) => parse_list("--ratios", text)?,
        None => defaults.cost_ratios,
    };
    let experiment = ExperimentConfig {
        a0_grid,
        k_min: pick(args.kmin, get("kmin"), "kmin")?.unwrap_or(defaults.k_min),
        k_max: pick(args.kmax, get("kmax"), "kmax")?.unwrap_or(defaults.k_max),
        t_max: pick(args.tmax, get("tmax"), "tmax")?.unwrap_or(defaults.t_max),
        false_negative_rate: pick(args.pfn, get("pfn"), "pfn")?.unwrap_or(defaults.false_negative_rate),
        runs: pick(args.runs, get("runs"), "runs")?.unwrap_or(defaults.runs),
        seed: pick(args.seed, get("seed"), "seed")?.unwrap_or(defaults.seed),
        cost_ratios,
    };
    let label = args
        .label
        .clone()
        .or_else(|| get("label").map(String::from))
        .unwrap_or_else(|| family.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
    let threads = pick(args.threads, get("threads"), "threads")?;
    let output = args.output.clone().ok_or_else(|| invalid("--output: required"))?;
    Ok((RunSettings { family, label, experiment }, threads, output))
}

/// Prechecks that name the offending flag before the harness validates.
fn check_run_flags(config: &ExperimentConfig, universe: usize) -> CliResult<()> {
    if config.runs == 0 {
        return Err(invalid("--runs: must be at least 1"));
    }
    if config.k_min < 2 || config.k_min > config.k_max {
        return Err(invalid(format!("--kmin/--kmax: need 2 <= kmin <= kmax (got {}, {})", config.k_min, config.k_max)));
    }
    if config.t_max == 0 {
        return Err(invalid("--tmax: must be at least 1"));
    }
    if !(0.0..1.0).contains(&config.false_negative_rate) {
        return Err(invalid(format!("--pfn: must be in [0, 1) (got {})", config.false_negative_rate)));
    }
    if config.a0_grid.is_empty() {
        return Err(invalid("--a0: empty grid"));
    }
    for &a0 in &config.a0_grid {
        if a0 <= config.k_max || a0 >= universe {
            return Err(invalid(format!("--a0: need kmax < a0 < N (a0={a0}, kmax={}, N={universe})", config.k_max)));
        }
    }
    if !config.cost_ratios.iter().all(|&r| harness::is_valid_ratio(r)) {
        return Err(invalid("--ratios: must be positive"));
    }
    Ok(())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(format!("--threads: {e}")))?;
            return Ok(pool.install(f));
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(f())
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let (settings, threads, dir) = resolve_run(args)?;
    let text = fs::read_to_string(&settings.family).map_err(|e| io_err(&settings.family, e))?;
    let family = PlantedFamily::from_json(&text).map_err(|e| invalid(format!("--family: {e}")))?;
    let config = &settings.experiment;
    check_run_flags(config, family.universe_size())?;
    config.validate(family.universe_size())?;

    let cells = with_threads(threads, || harness::run_experiment(&family, config, Execution::Parallel))??;
    let reports = cells
        .iter()
        .map(|(_, pairs)| CellReport::from_pairs(pairs, &config.cost_ratios))
        .collect::<crate::Result<Vec<_>>>()?;

    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let mut log = Vec::new();
    harness::write_run_log(&mut log, &cells, config.seed).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&dir.join(RUN_LOG_FILE), &log)?;
    let mut summary = Vec::new();
    harness::write_summary(&mut summary, &reports, &settings.label, &config.cost_ratios)?;
    write_file(&dir.join(SUMMARY_FILE), &summary)?;
    write_file(&dir.join(CONFIG_ECHO_FILE), settings.to_config_text().as_bytes())?;

    let io = |e: std::io::Error| CliError::Io(e.to_string());
    for report in &reports {
        writeln!(out, "{}", report.digest()).map_err(io)?;
    }
    writeln!(out, "wrote {}, {}, {} in {}", RUN_LOG_FILE, SUMMARY_FILE, CONFIG_ECHO_FILE, dir.display()).map_err(io)
}

fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.a0 < 2 {
        return Err(invalid(format!("--a0: must be at least 2 (got {})", args.a0)));
    }
    if args.kmin < 2 || args.kmin > args.kmax {
        return Err(invalid(format!("--kmin/--kmax: need 2 <= kmin <= kmax (got {}, {})", args.kmin, args.kmax)));
    }
    if args.tmax == 0 {
        return Err(invalid("--tmax: must be at least 1"));
    }
    let mut text = String::new();
    let _ = writeln!(text, "a0               {}", args.a0);
    let _ = writeln!(text, "k_min..k_max     {}..{}", args.kmin, args.kmax);
    let _ = writeln!(text, "t_max            {}", args.tmax);
    let _ = writeln!(text, "sight_max_tests  {}", sight_max_tests(args.a0, args.kmin, args.kmax)?);
    let _ = writeln!(text, "sight_max_pos    {}", sight_max_positive(args.a0, args.kmax)?);
    match build_schedule(args.a0, args.kmax) {
        Ok(schedule) => {
            let sizes: Vec<String> = schedule.sizes().iter().map(usize::to_string).collect();
            let _ = writeln!(text, "schedule         [{}]", sizes.join(","));
            let _ = writeln!(text, "schedule_len     {}", schedule.len());
            let _ = writeln!(text, "rc_max_tests     {}", rc_max_tests(&schedule, args.tmax, args.kmin, args.kmax));
            let _ = writeln!(text, "rc_max_positive  {}", rc_max_positive(schedule.len()));
        }
        Err(e) => {
            let _ = writeln!(text, "schedule         n/a ({e})");
        }
    }
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> CliResult<()> {
    let text = fs::read_to_string(&args.log).map_err(|e| io_err(&args.log, e))?;
    let cells = harness::read_run_log(&text).map_err(|e| invalid(format!("--log: {e}")))?;
    if cells.is_empty() {
        return Err(invalid("--log: no runs in log"));
    }
    let ratios: Vec<f64> = match &args.ratios {
        Some(t) => parse_list("--ratios", t)?,
        None => STANDARD_RATIOS.to_vec(),
    };
    if !ratios.iter().all(|&r| harness::is_valid_ratio(r)) {
        return Err(invalid("--ratios: must be positive"));
    }
    let reports = cells
        .iter()
        .map(|(_, pairs)| CellReport::from_pairs(pairs, &ratios))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut summary = Vec::new();
    harness::write_summary(&mut summary, &reports, &args.label, &ratios)?;
    write_file(&args.output, &summary)?;
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    for report in &reports {
        writeln!(out, "{}", report.digest()).map_err(io)?;
    }
    Ok(())
}
