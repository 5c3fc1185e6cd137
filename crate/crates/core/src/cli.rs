//! Command-line front end.
//!
//! Configuration is resolved in three layers: built-in defaults, an
//! optional config file (`key = value` lines or a JSON object, see
//! [`RunConfig`]), and command-line flags, with later layers winning.
//! The resolved configuration is embedded in every output file; the
//! output path and thread count are left out so results do not depend on
//! them. Wall times go to a sidecar `<out>.log`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 domain error, 4
//! validation failure.

use std::ffi::OsString;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Error;
use crate::experiments::output::{self, CsvSink, CONFIG_PREFIX};
use crate::experiments::{self, cell_seed, table1, Axis, ResultRow, SizeChoice, SweepGrid};
use crate::mc::{self, McSettings};
use crate::optimizer::{find_optimal_n, strategy_scan, Mode, OptimizerSettings};
use crate::stats::{output_distribution, DetectionStrategy, PumpProfile, TruncationPolicy};
use crate::topology::{MultiplexerSpec, SourceFamily, DEFAULT_V_T};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Domain(Error),
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Domain(_) => EXIT_DOMAIN,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            // unreadable or unwritable files are a configuration problem
            Error::Io(m) => CliError::Config(m),
            other => CliError::Domain(other),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Default,
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    #[default]
    All,
    Golden,
}

/// Pump given as a shared value, an explicit list, or `"optimize"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PumpSetting {
    Scalar(f64),
    List(Vec<f64>),
    Keyword(String),
}

impl Default for PumpSetting {
    fn default() -> Self {
        PumpSetting::Keyword("optimize".into())
    }
}

/// Every setting a command can use. Keys of the config file are the
/// field names; list-valued keys (`strategies`, `modes`, `axes`) take
/// `;`-separated values in the flat format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub v_r: f64,
    pub v_t: f64,
    pub v_b: f64,
    pub v_d: f64,
    /// Number of units. Unset means "search for the optimal size" where
    /// that makes sense.
    pub n: Option<usize>,
    pub source: SourceFamily,
    pub pump: PumpSetting,
    pub pump_file: Option<PathBuf>,
    pub strategy: DetectionStrategy,
    pub strategies: Vec<DetectionStrategy>,
    pub mode: Mode,
    pub modes: Vec<Mode>,
    pub search_n: bool,
    pub n_ref: usize,
    pub threshold: f64,
    /// Sweep axes as `param:min:max:step` or `param:step`.
    pub axes: Vec<String>,
    pub baseline_strategy: Option<DetectionStrategy>,
    pub baseline_mode: Option<Mode>,
    pub subset: Subset,
    pub preset: Preset,
    pub population: Option<usize>,
    pub max_generations: Option<usize>,
    pub stall_generations: Option<usize>,
    pub function_tolerance: Option<f64>,
    pub lambda_lower: Option<f64>,
    pub lambda_upper: Option<f64>,
    pub restarts: Option<usize>,
    pub local_refine: Option<bool>,
    pub tail_epsilon: f64,
    pub l_hard_cap: usize,
    pub i_max: usize,
    pub trials: u64,
    pub max_count: usize,
    pub streams: usize,
    pub cases: usize,
    pub corpus_seed: u64,
    pub k_sigma: f64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let trunc = TruncationPolicy::default();
        let mc = McSettings::default();
        RunConfig {
            v_r: 0.99,
            v_t: DEFAULT_V_T,
            v_b: 0.98,
            v_d: 0.98,
            n: None,
            source: SourceFamily::Poisson,
            pump: PumpSetting::default(),
            pump_file: None,
            strategy: DetectionStrategy::spd(),
            strategies: Vec::new(),
            mode: Mode::PerUnit,
            modes: Vec::new(),
            search_n: false,
            n_ref: crate::optimizer::DEFAULT_N_REF,
            threshold: crate::optimizer::DEFAULT_SIZE_THRESHOLD,
            axes: Vec::new(),
            baseline_strategy: None,
            baseline_mode: None,
            subset: Subset::All,
            preset: Preset::Default,
            population: None,
            max_generations: None,
            stall_generations: None,
            function_tolerance: None,
            lambda_lower: None,
            lambda_upper: None,
            restarts: None,
            local_refine: None,
            tail_epsilon: trunc.tail_epsilon,
            l_hard_cap: trunc.l_hard_cap,
            i_max: crate::stats::DEFAULT_I_MAX,
            trials: mc.trials,
            max_count: mc.max_count,
            streams: mc.streams,
            cases: 20,
            corpus_seed: mc::CORPUS_SEED,
            k_sigma: 4.0,
            seed: OptimizerSettings::default().seed,
            out: None,
            format: Format::Csv,
            threads: None,
        }
    }
}

const LIST_KEYS: [&str; 3] = ["strategies", "modes", "axes"];

/// Parses a config file body: a JSON object, or `key = value` lines with
/// `#` comments. Values in the flat format are read as JSON when they
/// parse as such and as plain strings otherwise.
pub fn parse_config_text(text: &str) -> CliResult<Map<String, Value>> {
    if text.trim_start().starts_with('{') {
        return match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(m)) => Ok(m.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect()),
            Ok(_) => Err(config_err("JSON config must be an object")),
            Err(e) => Err(config_err(format!("JSON config: {e}"))),
        };
    }
    let mut map = Map::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key = value", lineno + 1)))?;
        let key = normalize_key(key);
        map.insert(key.clone(), flat_value(&key, value.trim()));
    }
    Ok(map)
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

fn flat_value(key: &str, raw: &str) -> Value {
    if LIST_KEYS.contains(&key) && !raw.starts_with('[') {
        return Value::Array(
            raw.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| Value::String(s.to_string()))
                .collect(),
        );
    }
    if key == "pump" {
        if let Some(list) = parse_number_list(raw) {
            if list.len() > 1 {
                return Value::from(list);
            }
        }
    }
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn parse_number_list(text: &str) -> Option<Vec<f64>> {
    let values: Option<Vec<f64>> = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect();
    values.filter(|v| !v.is_empty())
}

impl RunConfig {
    /// Builds the configuration from an optional file and overrides.
    pub fn resolve(file: Option<&Path>, overrides: Map<String, Value>) -> CliResult<RunConfig> {
        let mut map = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => Map::new(),
        };
        map.extend(overrides);
        serde_json::from_value(Value::Object(map)).map_err(|e| config_err(e.to_string()))
    }

    pub fn spec(&self, n_units: usize) -> CliResult<MultiplexerSpec> {
        let spec = MultiplexerSpec {
            v_r: self.v_r,
            v_t: self.v_t,
            v_b: self.v_b,
            v_d: self.v_d,
            n_units,
            source: self.source,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn truncation(&self) -> TruncationPolicy {
        TruncationPolicy {
            tail_epsilon: self.tail_epsilon,
            l_hard_cap: self.l_hard_cap,
        }
    }

    pub fn optimizer_settings(&self) -> CliResult<OptimizerSettings> {
        let base = match self.preset {
            Preset::Default => OptimizerSettings::default(),
            Preset::Quick => OptimizerSettings::quick(),
        };
        let settings = OptimizerSettings {
            population: self.population.unwrap_or(base.population),
            max_generations: self.max_generations.unwrap_or(base.max_generations),
            stall_generations: self.stall_generations.unwrap_or(base.stall_generations),
            function_tolerance: self.function_tolerance.unwrap_or(base.function_tolerance),
            lambda_lower: self.lambda_lower.unwrap_or(base.lambda_lower),
            lambda_upper: self.lambda_upper.unwrap_or(base.lambda_upper),
            seed: self.seed,
            restarts: self.restarts.unwrap_or(base.restarts),
            local_refine: self.local_refine.unwrap_or(base.local_refine),
            truncation: self.truncation(),
        };
        settings.validate()?;
        Ok(settings)
    }

    pub fn size(&self) -> SizeChoice {
        match self.n {
            Some(n) if !self.search_n => SizeChoice::Fixed(n),
            _ => SizeChoice::Search {
                n_ref: self.n_ref,
                threshold: self.threshold,
            },
        }
    }

    /// Explicit pump profile from `pump_file` or `pump`, if one is given.
    pub fn pump_profile(&self) -> CliResult<Option<Vec<f64>>> {
        if let Some(path) = &self.pump_file {
            let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
            return read_pump_text(&text).map(Some);
        }
        match &self.pump {
            PumpSetting::Scalar(x) => Ok(Some(vec![*x; self.n.unwrap_or(1)])),
            PumpSetting::List(v) => Ok(Some(v.clone())),
            PumpSetting::Keyword(k) if k == "optimize" => Ok(None),
            PumpSetting::Keyword(k) => Err(config_err(format!("pump '{k}' is not a number, list or 'optimize'"))),
        }
    }

    fn strategy_list(&self) -> Vec<DetectionStrategy> {
        if self.strategies.is_empty() {
            vec![self.strategy.clone()]
        } else {
            self.strategies.clone()
        }
    }

    fn mode_list(&self) -> Vec<Mode> {
        if self.modes.is_empty() {
            vec![self.mode]
        } else {
            self.modes.clone()
        }
    }
}

/// Extracts a pump profile from a result file (CSV or JSON as written by
/// this tool), a JSON array, or whitespace/comma separated numbers.
pub fn read_pump_text(text: &str) -> CliResult<Vec<f64>> {
    if text.starts_with(CONFIG_PREFIX) {
        let (_, rows) = output::read_csv(text.as_bytes())?;
        return rows
            .into_iter()
            .next()
            .map(|r| r.lambdas)
            .ok_or_else(|| config_err("pump file has no result rows"));
    }
    if let Ok(value) = serde_json::from_str::<Value>(text) {
        let candidates = [
            value.pointer("/rows/0/lambdas"),
            value.pointer("/lambdas"),
            value.pointer("/best_pump"),
            Some(&value),
        ];
        for candidate in candidates.into_iter().flatten() {
            if let Ok(v) = serde_json::from_value::<Vec<f64>>(candidate.clone()) {
                return Ok(v);
            }
        }
        return Err(config_err("pump file JSON holds no profile"));
    }
    let body: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join(" ");
    parse_number_list(&body).ok_or_else(|| config_err("pump file is not a list of numbers"))
}

#[derive(Debug, Parser)]
#[command(
    name = "asymux",
    version,
    about = "Photon statistics and pump optimisation for asymmetric multiplexed single-photon sources"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// Config file with `key = value` lines or a JSON object.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long = "v-r", global = true)]
    pub v_r: Option<f64>,
    #[arg(long = "v-t", global = true)]
    pub v_t: Option<f64>,
    #[arg(long = "v-b", global = true)]
    pub v_b: Option<f64>,
    #[arg(long = "v-d", global = true)]
    pub v_d: Option<f64>,
    /// Number of units.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// `poisson` or `thermal`.
    #[arg(long, global = true)]
    pub source: Option<String>,
    /// Shared pump value or comma-separated profile.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    #[arg(long = "pump-file", global = true)]
    pub pump_file: Option<PathBuf>,
    /// e.g. `spd`, `thd`, `upto:2`, `S={1,3}`.
    #[arg(long, global = true)]
    pub strategy: Option<String>,
    /// `per-unit`, `uniform` or `scaled-ref`.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Smaller optimizer budget.
    #[arg(long, global = true)]
    pub quick: bool,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Output photon-number distribution for a given pump.
    Eval,
    /// Optimise the pump at a fixed size, or search the size.
    Optimize {
        #[arg(long = "search-n")]
        search_n: bool,
    },
    /// Optimum for every size up to the reference size.
    FindN,
    /// Compare detection strategies at their optimal sizes.
    ScanStrategies,
    /// Grid sweep over up to two efficiency parameters.
    Sweep {
        /// `param:min:max:step` or `param:step`. Repeatable.
        #[arg(long = "axis")]
        axes: Vec<String>,
        #[arg(long = "baseline-strategy")]
        baseline_strategy: Option<String>,
        #[arg(long = "baseline-mode")]
        baseline_mode: Option<String>,
    },
    /// Recompute the reference table of optimal probabilities.
    Table1 {
        /// Only the five regression rows.
        #[arg(long)]
        golden: bool,
        /// Exit with status 4 if a row is outside the reference tolerances.
        #[arg(long)]
        check: bool,
    },
    /// Stability of the per-unit optimum under a common pump shift.
    Stability,
    /// Cross-check the analytic distribution by simulation.
    McValidate {
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        cases: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Optimize { .. } => "optimize",
            Command::FindN => "find-n",
            Command::ScanStrategies => "scan-strategies",
            Command::Sweep { .. } => "sweep",
            Command::Table1 { .. } => "table1",
            Command::Stability => "stability",
            Command::McValidate { .. } => "mc-validate",
        }
    }
}

fn overrides(cli: &Cli) -> CliResult<Map<String, Value>> {
    let c = &cli.common;
    let mut map = Map::new();
    let mut put = |k: &str, v: Value| {
        map.insert(k.to_string(), v);
    };
    if let Some(v) = c.seed {
        put("seed", v.into());
    }
    if let Some(v) = &c.out {
        put("out", v.to_string_lossy().into_owned().into());
    }
    if let Some(v) = &c.format {
        put("format", v.clone().into());
    }
    if let Some(v) = c.threads {
        put("threads", v.into());
    }
    for (k, v) in [("v_r", c.v_r), ("v_t", c.v_t), ("v_b", c.v_b), ("v_d", c.v_d)] {
        if let Some(v) = v {
            put(k, v.into());
        }
    }
    if let Some(v) = c.n {
        put("n", v.into());
    }
    for (k, v) in [("source", &c.source), ("strategy", &c.strategy), ("mode", &c.mode)] {
        if let Some(v) = v {
            put(k, v.clone().into());
        }
    }
    if let Some(v) = &c.lambda {
        let values = parse_number_list(v).ok_or_else(|| config_err(format!("--lambda '{v}' is not numeric")))?;
        put(
            "pump",
            if values.len() == 1 {
                values[0].into()
            } else {
                values.into()
            },
        );
    }
    if let Some(v) = &c.pump_file {
        put("pump_file", v.to_string_lossy().into_owned().into());
    }
    if c.quick {
        put("preset", "quick".into());
    }
    match &cli.command {
        Command::Optimize { search_n: true } => put("search_n", true.into()),
        Command::Sweep {
            axes,
            baseline_strategy,
            baseline_mode,
        } => {
            if !axes.is_empty() {
                put("axes", axes.clone().into());
            }
            if let Some(s) = baseline_strategy {
                put("baseline_strategy", s.clone().into());
            }
            if let Some(m) = baseline_mode {
                put("baseline_mode", m.clone().into());
            }
        }
        Command::Table1 { golden: true, .. } => put("subset", "golden".into()),
        Command::McValidate { trials, cases } => {
            if let Some(t) = trials {
                put("trials", (*t).into());
            }
            if let Some(n) = cases {
                put("cases", (*n).into());
            }
        }
        _ => {}
    }
    for item in &c.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| config_err(format!("--set '{item}' is not key=value")))?;
        let key = normalize_key(k);
        let value = flat_value(&key, v.trim());
        map.insert(key, value);
    }
    Ok(map)
}

/// Runs the tool with the given arguments (including the program name)
/// and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("asymux: {e}");
            e.exit_code()
        }
    }
}

/// Full resolved configuration as embedded in output files.
#[derive(Serialize)]
struct Provenance<'a> {
    command: &'a str,
    version: &'a str,
    #[serde(flatten)]
    config: &'a RunConfig,
}

fn execute(cli: &Cli) -> CliResult<()> {
    let config = RunConfig::resolve(cli.common.config.as_deref(), overrides(cli)?)?;
    if let Some(threads) = config.threads {
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    let name = cli.command.name();
    let provenance = Provenance {
        command: name,
        version: env!("CARGO_PKG_VERSION"),
        config: &config,
    };
    match &cli.command {
        Command::Eval => cmd_eval(&config, &provenance),
        Command::Optimize { .. } => {
            let rows = cmd_optimize(&config)?;
            emit_rows(&config, &provenance, &rows)
        }
        Command::FindN => emit_rows(&config, &provenance, &cmd_find_n(&config)?),
        Command::ScanStrategies => emit_rows(&config, &provenance, &cmd_scan_strategies(&config)?),
        Command::Sweep { .. } => cmd_sweep(&config, &provenance),
        Command::Table1 { check, .. } => {
            let rows = cmd_table1(&config)?;
            emit_rows(&config, &provenance, &rows)?;
            let failures = table1_report(&rows);
            if *check && !failures.is_empty() {
                return Err(CliError::Validation(failures.join("; ")));
            }
            Ok(())
        }
        Command::Stability => emit_rows(&config, &provenance, &[cmd_stability(&config)?]),
        Command::McValidate { .. } => cmd_mc_validate(&config, &provenance),
    }
}

fn open_out(config: &RunConfig) -> CliResult<Box<dyn Write>> {
    Ok(match &config.out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_rows(config: &RunConfig, provenance: &Provenance, rows: &[ResultRow]) -> CliResult<()> {
    let out = open_out(config)?;
    match config.format {
        Format::Csv => output::write_csv(out, provenance, rows)?,
        Format::Json => output::write_json(out, provenance, rows)?,
    }
    log_timings(config, provenance.command, rows)
}

/// Appends job wall times to the sidecar log next to `out`.
fn log_timings(config: &RunConfig, command: &str, rows: &[ResultRow]) -> CliResult<()> {
    let Some(out) = &config.out else { return Ok(()) };
    let mut path = out.clone().into_os_string();
    path.push(".log");
    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| config_err(e.to_string()))?;
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    for row in rows {
        writeln!(
            log,
            "{stamp}\t{command}\t{}\t{:.3}s",
            row.key(),
            row.wall_time.0.as_secs_f64()
        )
        .map_err(|e| config_err(e.to_string()))?;
    }
    Ok(())
}

fn cmd_eval(config: &RunConfig, provenance: &Provenance) -> CliResult<()> {
    let lambdas = config
        .pump_profile()?
        .ok_or_else(|| config_err("eval needs a pump: set --lambda, --pump-file or pump"))?;
    let n = config.n.unwrap_or(lambdas.len());
    if n != lambdas.len() {
        return Err(CliError::Domain(Error::InvalidArgument(format!(
            "pump has {} entries but n = {n}",
            lambdas.len()
        ))));
    }
    let spec = config.spec(n)?;
    let pump = PumpProfile::new(lambdas)?;
    let dist = output_distribution(&spec, &pump, &config.strategy, config.i_max, &config.truncation())?;
    let mut out = open_out(config)?;
    let io = |e: std::io::Error| config_err(e.to_string());
    match config.format {
        Format::Csv => {
            writeln!(
                out,
                "{CONFIG_PREFIX}{}",
                serde_json::to_string(provenance).map_err(Error::from)?
            )
            .map_err(io)?;
            writeln!(out, "quantity,value").map_err(io)?;
            for (i, p) in dist.probs.iter().enumerate() {
                writeln!(out, "P_{i},{p}").map_err(io)?;
            }
            writeln!(out, "truncation_mass,{}", dist.truncation_mass).map_err(io)?;
            writeln!(out, "source_tail_bound,{}", dist.source_tail_bound).map_err(io)?;
        }
        Format::Json => {
            let doc = serde_json::json!({ "config": provenance, "distribution": dist });
            serde_json::to_writer_pretty(&mut out, &doc).map_err(Error::from)?;
            writeln!(out).map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// One optimised row. A sweep over a single cell with the same config
/// produces the same row.
pub fn cmd_optimize(config: &RunConfig) -> CliResult<Vec<ResultRow>> {
    let settings = config.optimizer_settings()?;
    let spec = config.spec(config.n.unwrap_or(1))?;
    Ok(vec![experiments::run_cell(
        &spec,
        &config.strategy,
        config.mode,
        config.size(),
        &settings,
    )?])
}

pub fn cmd_find_n(config: &RunConfig) -> CliResult<Vec<ResultRow>> {
    let settings = config.optimizer_settings()?;
    let spec = config.spec(1)?;
    let seed = cell_seed(settings.seed, &spec);
    let search = find_optimal_n(
        &spec,
        &config.strategy,
        &settings.with_seed(seed),
        config.n_ref,
        config.threshold,
        config.mode,
    )?;
    Ok(search
        .reports
        .iter()
        .map(|r| {
            let mut row = ResultRow::from_report(&spec.with_units(r.n_units).expect("valid size"), r, r.seed_used);
            row.n_opt = Some(search.n_opt);
            row.n_ref = Some(config.n_ref);
            row
        })
        .collect())
}

pub fn cmd_scan_strategies(config: &RunConfig) -> CliResult<Vec<ResultRow>> {
    let settings = config.optimizer_settings()?;
    let spec = config.spec(1)?;
    let seed = cell_seed(settings.seed, &spec);
    let outcomes = strategy_scan(
        &spec,
        &settings.with_seed(seed),
        config.mode,
        config.n_ref,
        config.threshold,
    )?;
    Ok(outcomes
        .iter()
        .map(|o| {
            let sized = spec.with_units(o.n_opt).expect("valid size");
            let mut row = ResultRow::from_report(&sized, &o.report, seed);
            row.n_opt = Some(o.n_opt);
            row.n_ref = Some(config.n_ref);
            row
        })
        .collect())
}

pub fn sweep_grid(config: &RunConfig) -> CliResult<SweepGrid> {
    let axes = config
        .axes
        .iter()
        .map(|a| a.parse::<Axis>())
        .collect::<crate::Result<Vec<_>>>()
        .map_err(|e| config_err(e.to_string()))?;
    let mut grid = SweepGrid::new(config.spec(config.n.unwrap_or(1))?, axes);
    grid.strategies = config.strategy_list();
    grid.modes = config.mode_list();
    grid.size = config.size();
    grid.baseline = match (&config.baseline_strategy, config.baseline_mode) {
        (None, None) => None,
        (s, m) => Some((
            s.clone().unwrap_or_else(|| config.strategy.clone()),
            m.unwrap_or(config.mode),
        )),
    };
    grid.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(grid)
}

fn cmd_sweep(config: &RunConfig, provenance: &Provenance) -> CliResult<()> {
    let settings = config.optimizer_settings()?;
    let grid = sweep_grid(config)?;
    match (&config.out, config.format) {
        (Some(path), Format::Csv) => {
            // an existing file from another configuration is a usage error
            let (mut sink, done) = CsvSink::open(path, provenance).map_err(|e| config_err(e.to_string()))?;
            if !done.is_empty() {
                eprintln!("asymux: resuming, {} jobs already in {}", done.len(), path.display());
            }
            experiments::sweep_with(&grid, &settings, &done, |rows| {
                sink.append(&rows)?;
                log_timings(config, provenance.command, &rows).map_err(|e| Error::Io(e.to_string()))
            })?;
            Ok(())
        }
        _ => {
            let rows = experiments::sweep(&grid, &settings)?;
            emit_rows(config, provenance, &rows)
        }
    }
}

pub fn cmd_table1(config: &RunConfig) -> CliResult<Vec<ResultRow>> {
    let settings = config.optimizer_settings()?;
    let entries = match config.subset {
        Subset::All => table1::TABLE1.to_vec(),
        Subset::Golden => table1::golden_entries(),
    };
    Ok(experiments::reproduce_table1_entries(
        &entries,
        &settings,
        config.n_ref,
    )?)
}

/// Prints a comparison with the reference table to stderr and returns a
/// description of every value outside tolerance: `P_1` within 0.002,
/// `N_opt` within 1 (2 when the reference exceeds 20) and the uniform `λ`
/// within 0.005.
pub fn table1_report(rows: &[ResultRow]) -> Vec<String> {
    let mut failures = Vec::new();
    eprintln!(" V_r  V_D  V_b | P1 ref  P1     | N ref N  | Nu ref Nu | lam ref lam");
    for pair in rows.chunks(2) {
        let [per_unit, uniform] = pair else { continue };
        let Some(e) = table1::lookup(per_unit.v_r, per_unit.v_d, per_unit.v_b) else {
            continue;
        };
        let n = per_unit.n_opt.unwrap_or(per_unit.n_units);
        let nu = uniform.n_opt.unwrap_or(uniform.n_units);
        let lam = uniform.scalar_lambda.unwrap_or(f64::NAN);
        eprintln!(
            "{:.2} {:.2} {:.2} | {:.3}  {:.4} | {:>3} {:>3} | {:>3} {:>4} | {:.3}  {:.4}",
            e.v_r,
            e.v_d,
            e.v_b,
            e.p1_per_unit,
            per_unit.p1_max,
            e.n_opt_per_unit,
            n,
            e.n_opt_uniform,
            nu,
            e.lambda_uniform,
            lam
        );
        let n_tol = |reference: usize| if reference > 20 { 2 } else { 1 };
        let tag = format!("({}, {}, {})", e.v_r, e.v_d, e.v_b);
        if (per_unit.p1_max - e.p1_per_unit).abs() > 0.002 {
            failures.push(format!("{tag} P1 {:.4} vs {}", per_unit.p1_max, e.p1_per_unit));
        }
        if n.abs_diff(e.n_opt_per_unit) > n_tol(e.n_opt_per_unit) {
            failures.push(format!("{tag} N_opt {n} vs {}", e.n_opt_per_unit));
        }
        if nu.abs_diff(e.n_opt_uniform) > n_tol(e.n_opt_uniform) {
            failures.push(format!("{tag} uniform N_opt {nu} vs {}", e.n_opt_uniform));
        }
        if !((lam - e.lambda_uniform).abs() <= 0.005) {
            failures.push(format!("{tag} lambda {lam:.4} vs {}", e.lambda_uniform));
        }
    }
    failures
}

pub fn cmd_stability(config: &RunConfig) -> CliResult<ResultRow> {
    let settings = config.optimizer_settings()?;
    let spec = config.spec(config.n.unwrap_or(1))?;
    Ok(experiments::stability_report(
        &spec,
        &config.strategy,
        config.size(),
        &settings,
    )?)
}

/// Outcome of the simulation cross-check for one corpus entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCaseResult {
    pub case: usize,
    pub spec: MultiplexerSpec,
    pub strategy: DetectionStrategy,
    pub pump: PumpProfile,
    pub seed: u64,
    pub trials: u64,
    /// Largest deviation over all buckets, in standard errors.
    pub max_z: f64,
    pub failing_buckets: Vec<usize>,
}

pub fn mc_validate(config: &RunConfig) -> CliResult<Vec<McCaseResult>> {
    let trunc = config.truncation();
    mc::regression_corpus(config.corpus_seed, config.cases)
        .into_iter()
        .enumerate()
        .map(|(case, c)| {
            let settings = McSettings {
                trials: config.trials,
                seed: c.seed,
                max_count: config.max_count,
                streams: config.streams,
            };
            let estimate = mc::simulate(&c.spec, &c.pump, &c.strategy, &settings)?;
            let dist = output_distribution(&c.spec, &c.pump, &c.strategy, config.max_count, &trunc)?;
            let all = mc::compare(&dist, &estimate, 0.0);
            let max_z = all.iter().map(|d| d.z).fold(0.0, f64::max);
            let failing_buckets = all.iter().filter(|d| d.z > config.k_sigma).map(|d| d.count).collect();
            Ok(McCaseResult {
                case,
                spec: c.spec,
                strategy: c.strategy,
                pump: c.pump,
                seed: c.seed,
                trials: config.trials,
                max_z,
                failing_buckets,
            })
        })
        .collect()
}

fn cmd_mc_validate(config: &RunConfig, provenance: &Provenance) -> CliResult<()> {
    let results = mc_validate(config)?;
    let mut out = open_out(config)?;
    let io = |e: std::io::Error| config_err(e.to_string());
    match config.format {
        Format::Csv => {
            writeln!(
                out,
                "{CONFIG_PREFIX}{}",
                serde_json::to_string(provenance).map_err(Error::from)?
            )
            .map_err(io)?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "case",
                "v_r",
                "v_t",
                "v_b",
                "v_d",
                "n_units",
                "strategy",
                "seed",
                "trials",
                "max_z",
                "failing_buckets",
                "lambdas",
            ])
            .map_err(Error::from)?;
            for r in &results {
                let join = |v: Vec<String>| v.join(";");
                w.write_record([
                    r.case.to_string(),
                    r.spec.v_r.to_string(),
                    r.spec.v_t.to_string(),
                    r.spec.v_b.to_string(),
                    r.spec.v_d.to_string(),
                    r.spec.n_units.to_string(),
                    r.strategy.to_string(),
                    r.seed.to_string(),
                    r.trials.to_string(),
                    r.max_z.to_string(),
                    join(r.failing_buckets.iter().map(ToString::to_string).collect()),
                    join(r.pump.as_slice().iter().map(ToString::to_string).collect()),
                ])
                .map_err(Error::from)?;
            }
            w.flush().map_err(io)?;
        }
        Format::Json => {
            let doc = serde_json::json!({ "config": provenance, "cases": results });
            serde_json::to_writer_pretty(&mut out, &doc).map_err(Error::from)?;
            writeln!(out).map_err(io)?;
        }
    }
    out.flush().map_err(io)?;
    let failing: Vec<String> = results
        .iter()
        .filter(|r| !r.failing_buckets.is_empty())
        .map(|r| format!("case {} (max {:.2} sigma)", r.case, r.max_z))
        .collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "deviation above {} sigma in {}",
            config.k_sigma,
            failing.join(", ")
        )))
    }
}
