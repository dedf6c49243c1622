//! Command-line front end: `gen`, `check` and `sweep`.
//!
//! Output goes to `--out` when given, else into `$CAL_LAB_OUT_DIR` under a
//! default name, else to stdout. Reports carry no timings unless
//! `--timings` is passed, so reruns are byte-identical.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::duality::{check_chain, BenchmarkReport, ChainConfig, Mode, Status, INEQUALITY_NAMES};
use crate::error::{LabError, Result};
use crate::exec;
use crate::instance::{random_prior, Instance, RandomSpec};
use crate::lowerbounds::{
    gen_lb_instance, gen_ph_k, gen_ps_k, gen_regular_graph, verify_lb, LbConfig, LbReport, LowerBoundInstance,
};
use crate::mechanisms::GridConfig;
use crate::model::{Caps, Hyperedge, HypergraphPrior};

pub const OUT_DIR_ENV: &str = "CAL_LAB_OUT_DIR";

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_PARSE: u8 = 3;
pub const EXIT_CAPACITY: u8 = 4;
pub const EXIT_INTERNAL: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "cal-lab", version, about = "Revenue benchmarks for a buyer with complements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an instance file.
    Gen(GenArgs),
    /// Evaluate the benchmark chain (and lower-bound checks) on an instance.
    Check(CheckArgs),
    /// Check many seeded random instances and aggregate slacks.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// Lower-bound prior on an explicit edge list.
    Lb,
    /// Lower-bound prior on a d-regular circulant graph.
    Regular,
    /// Lower-bound prior on all edges of size ≤ k.
    Ph,
    /// Lower-bound prior on a partition into blocks of size k+1.
    Ps,
    /// Seeded random prior.
    Random,
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    /// Item count (the maximum, when --m-min is smaller).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub m_min: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub max_edges: usize,
    #[arg(long, default_value_t = 3)]
    pub max_support: usize,
    #[arg(long, default_value_t = 4.0)]
    pub max_value: f64,
    /// Always use the unrestricted feasibility family.
    #[arg(long)]
    pub no_substitutes: bool,
}

impl RandomArgs {
    fn spec(&self, default_m_min: usize) -> RandomSpec {
        let m = self.m.unwrap_or(3);
        RandomSpec {
            m_min: self.m_min.unwrap_or(default_m_min.min(m)),
            m,
            max_edges: self.max_edges,
            max_support: self.max_support,
            max_value: self.max_value,
            substitutes: !self.no_substitutes,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(value_enum)]
    pub kind: GenKind,
    #[command(flatten)]
    pub random: RandomArgs,
    /// Degree of the regular graph.
    #[arg(long)]
    pub d: Option<usize>,
    /// Edge size bound (ph) or block size minus one (ps).
    #[arg(long)]
    pub k: Option<usize>,
    /// Edge list for `lb`, 0-based items, e.g. "{0,1};{1,2}".
    #[arg(long)]
    pub edges: Option<String>,
    /// Offset of the edge indices in lower-bound priors.
    #[arg(long, default_value_t = 10)]
    pub a: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Sale-probability budget of the copies pricing.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Target tail count of the randomized cutoff.
    #[arg(long, default_value_t = crate::duality::DEFAULT_K)]
    pub k: f64,
    /// Candidate prices per item in the SREV* search.
    #[arg(long, default_value_t = 8)]
    pub grid_density: usize,
    /// `exact` or `mc:N`.
    #[arg(long, default_value = "exact")]
    pub mode: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub cap_profiles: usize,
    #[arg(long, default_value_t = 5_000)]
    pub cap_lp_vars: usize,
    /// Append wall-clock time to reports (makes them non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

impl ChainArgs {
    fn config(&self, seed: u64) -> Result<ChainConfig> {
        let mode: Mode = self.mode.parse()?;
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(LabError::Domain(format!("--q must lie in (0, 1], got {}", self.q)));
        }
        if !(self.k > 0.0) {
            return Err(LabError::Domain(format!("--k must be positive, got {}", self.k)));
        }
        if self.grid_density == 0 {
            return Err(LabError::Domain("--grid-density must be positive".into()));
        }
        Ok(ChainConfig {
            mode,
            seed,
            q: self.q,
            k: self.k,
            grid: GridConfig {
                density: self.grid_density,
                ..GridConfig::default()
            },
            caps: Caps {
                profiles: self.cap_profiles,
                lp_vars: self.cap_lp_vars,
                ..Caps::default()
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Seed for Monte Carlo sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Report path; the CSV row goes next to it with a `.csv` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepGen {
    Random,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = SweepGen::Random)]
    pub generator: SweepGen,
    #[arg(long)]
    pub count: usize,
    /// Instance i uses seed `seed + i`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub chain: ChainArgs,
    /// Aggregate CSV path; per-instance rows go to `<stem>.instances.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Gen(a) => cmd_gen(&a).map(|()| true),
        Command::Check(a) => cmd_check(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &LabError) -> u8 {
    match e {
        LabError::Capacity { .. } => EXIT_CAPACITY,
        LabError::Parse(_) => EXIT_PARSE,
        LabError::Domain(_) | LabError::Invalid(_) => EXIT_USAGE,
        LabError::Solver(_) | LabError::Io(_) => EXIT_INTERNAL,
    }
}

/// Parses `"{0,1};{2}"` (braces optional) into hyperedges.
pub fn parse_edges(text: &str) -> Result<Vec<Hyperedge>> {
    let mut edges = Vec::new();
    for chunk in text.split(';') {
        let chunk = chunk.trim();
        if chunk.is_empty() {
            continue;
        }
        let inner = chunk.strip_prefix('{').and_then(|c| c.strip_suffix('}')).unwrap_or(chunk);
        let items = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| LabError::Domain(format!("bad item `{}` in edge `{chunk}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        edges.push(Hyperedge::from_items(items).map_err(|e| LabError::Domain(e.to_string()))?);
    }
    Ok(edges)
}

fn require(value: Option<usize>, flag: &str, kind: &str) -> Result<usize> {
    value.ok_or_else(|| LabError::Domain(format!("`gen {kind}` needs {flag}")))
}

/// Builds the instance `gen` would write, with its default file stem.
pub fn generate(args: &GenArgs) -> Result<(Instance, String)> {
    let lb = |edges: Vec<Hyperedge>| gen_lb_instance(&edges, args.a).map(|i| Instance::from_prior(&i.prior));
    let a = args.a;
    Ok(match args.kind {
        GenKind::Lb => {
            let text = args.edges.as_deref().ok_or_else(|| LabError::Domain("`gen lb` needs --edges".into()))?;
            let inst = lb(parse_edges(text)?)?;
            let name = format!("lb-a{a}-{}", &inst.hash()[..8]);
            (inst, name)
        }
        GenKind::Regular => {
            let m = require(args.random.m, "--m", "regular")?;
            let d = require(args.d, "--d", "regular")?;
            (lb(gen_regular_graph(m, d)?)?, format!("regular-m{m}-d{d}-a{a}"))
        }
        GenKind::Ph => {
            let m = require(args.random.m, "--m", "ph")?;
            let k = require(args.k, "--k", "ph")?;
            (lb(gen_ph_k(m, k)?)?, format!("ph{k}-m{m}-a{a}"))
        }
        GenKind::Ps => {
            let m = require(args.random.m, "--m", "ps")?;
            let k = require(args.k, "--k", "ps")?;
            (lb(gen_ps_k(m, k)?)?, format!("ps{k}-m{m}-a{a}"))
        }
        GenKind::Random => {
            let spec = args.random.spec(args.random.m.unwrap_or(3));
            let prior = random_prior(&spec, args.seed)?;
            (Instance::from_prior(&prior), format!("random-{}", args.seed))
        }
    })
}

fn destination(out: &Option<PathBuf>, default_name: &str) -> Option<PathBuf> {
    out.clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(default_name)))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn emit(out: &Option<PathBuf>, default_name: &str, contents: &[u8]) -> Result<()> {
    match destination(out, default_name) {
        Some(path) => write_file(&path, contents),
        None => {
            std::io::stdout().write_all(contents)?;
            Ok(())
        }
    }
}

pub fn cmd_gen(args: &GenArgs) -> Result<()> {
    let (inst, name) = generate(args)?;
    emit(&args.out, &format!("{name}.json"), inst.to_json().as_bytes())
}

/// Everything `check` reports about one instance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub instance_id: String,
    pub instance_hash: String,
    pub m: usize,
    pub active_edges: usize,
    pub config: ChainConfig,
    pub chain: Option<BenchmarkReport>,
    /// Why the chain was not evaluated (lower-bound instances past the caps).
    pub chain_skipped: Option<String>,
    pub lower_bound: Option<LbReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.chain.as_ref().is_none_or(BenchmarkReport::all_hold)
            && self.lower_bound.as_ref().is_none_or(LbReport::all_pass)
    }

    /// Names of failed inequalities and lower-bound checks.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut names: Vec<&'static str> = self.chain.iter().flat_map(|c| c.failures().map(|i| i.name)).collect();
        if let Some(lb) = &self.lower_bound {
            names.extend(lb.checks.iter().filter(|c| c.pass == Some(false)).map(|c| c.name));
        }
        names
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}

/// Evaluates one prior. Lower-bound priors (recognized by their `2^e`
/// atoms) also get `verify_lb`, and for them a capacity error in the chain
/// is recorded rather than raised.
pub fn check_prior(prior: &HypergraphPrior, id: &str, cfg: &ChainConfig, timings: bool) -> Result<CheckReport> {
    let start = Instant::now();
    let lb_inst = LowerBoundInstance::detect(prior);
    let (chain, chain_skipped) = match check_chain(prior, cfg) {
        Ok(report) => (Some(report), None),
        Err(e) if e.is_capacity() && lb_inst.is_some() => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let lower_bound = match &lb_inst {
        Some(inst) => Some(verify_lb(
            inst,
            &LbConfig {
                caps: cfg.caps,
                ..LbConfig::default()
            },
        )?),
        None => None,
    };
    let instance = Instance::from_prior(prior);
    Ok(CheckReport {
        instance_id: id.to_string(),
        instance_hash: instance.hash(),
        m: prior.m(),
        active_edges: prior.active_edges().len(),
        config: cfg.clone(),
        chain,
        chain_skipped,
        lower_bound,
        elapsed_ms: timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

const SCALAR_COLUMNS: [&str; 22] = [
    "instance_id",
    "instance_hash",
    "mode",
    "m",
    "active_edges",
    "profiles",
    "d",
    "parts",
    "single",
    "nonfav",
    "core",
    "tail",
    "opt_copies",
    "brev",
    "srev_star_lb",
    "rev_lp",
    "dual_bound",
    "welfare",
    "cutoff_t_lo",
    "cutoff_t_hi",
    "cutoff_theta",
    "failures",
];

const LB_COLUMNS: [&str; 9] = [
    "lb_a",
    "lb_brev",
    "lb_brev_upper",
    "lb_srev_upper_certified",
    "lb_srev_upper_grid",
    "lb_edge_menu",
    "lb_menu_target",
    "lb_ratio",
    "lb_pass",
];

/// The frozen column order of per-instance CSV rows.
pub fn csv_header(timings: bool) -> Vec<String> {
    let mut cols: Vec<String> = SCALAR_COLUMNS.iter().map(|s| s.to_string()).collect();
    for name in INEQUALITY_NAMES {
        cols.push(format!("slack_{name}"));
        cols.push(format!("status_{name}"));
    }
    cols.extend(LB_COLUMNS.iter().map(|s| s.to_string()));
    if timings {
        cols.push("elapsed_ms".into());
    }
    cols
}

/// Shortest round-trip decimal; empty for NaN.
fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn status(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Skipped => "skipped",
    }
}

pub fn csv_row(r: &CheckReport, timings: bool) -> Vec<String> {
    let mut row = vec![
        r.instance_id.clone(),
        r.instance_hash.clone(),
        r.config.mode.to_string(),
        r.m.to_string(),
        r.active_edges.to_string(),
    ];
    match &r.chain {
        Some(c) => {
            row.extend([c.profiles.to_string(), c.d.to_string(), c.parts.to_string()]);
            row.extend(
                [
                    c.single,
                    c.nonfav,
                    c.core,
                    c.tail,
                    c.opt_copies,
                    c.brev,
                    c.srev_star_lb,
                ]
                .map(num),
            );
            row.push(opt(c.rev_lp));
            row.extend([c.dual_bound, c.welfare, c.cutoff.t_lo, c.cutoff.t_hi, c.cutoff.theta].map(num));
        }
        None => row.extend(std::iter::repeat_n(String::new(), SCALAR_COLUMNS.len() - 6)),
    }
    row.push(r.failures().join(" "));
    for name in INEQUALITY_NAMES {
        match r.chain.as_ref().and_then(|c| c.inequality(name)) {
            Some(i) => row.extend([num(i.slack), status(i.status).to_string()]),
            None => row.extend([String::new(), String::new()]),
        }
    }
    match &r.lower_bound {
        Some(lb) => {
            row.push(lb.a.to_string());
            row.extend([lb.brev, lb.brev_upper, lb.srev_upper_certified].map(num));
            row.push(opt(lb.srev_upper_grid));
            row.extend([lb.edge_menu, lb.menu_target, lb.ratio].map(num));
            row.push(if lb.all_pass() { "pass" } else { "fail" }.into());
        }
        None => row.extend(std::iter::repeat_n(String::new(), LB_COLUMNS.len())),
    }
    if timings {
        row.push(opt(r.elapsed_ms));
    }
    row
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_io = |e: csv::Error| LabError::Io(std::io::Error::other(e));
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(row).map_err(to_io)?;
    }
    w.into_inner().map_err(|e| LabError::Io(std::io::Error::other(e.to_string())))
}

fn read_prior(path: &Path) -> Result<HypergraphPrior> {
    let text = std::fs::read_to_string(path)?;
    Instance::parse_prior(&text).map_err(|e| match e {
        LabError::Parse(msg) => LabError::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Returns whether every check passed.
pub fn cmd_check(args: &CheckArgs) -> Result<bool> {
    let cfg = args.chain.config(args.seed)?;
    let prior = read_prior(&args.instance)?;
    let id = args
        .instance
        .file_stem()
        .map_or_else(|| "instance".to_string(), |s| s.to_string_lossy().into_owned());
    let report = check_prior(&prior, &id, &cfg, args.chain.timings)?;

    let json = report.to_json();
    match destination(&args.out, &format!("{id}.report.json")) {
        Some(path) => {
            write_file(&path, json.as_bytes())?;
            let rows = [csv_row(&report, args.chain.timings)];
            write_file(&path.with_extension("csv"), &csv_bytes(&csv_header(args.chain.timings), &rows)?)?;
        }
        None => std::io::stdout().write_all(json.as_bytes())?,
    }
    let failures = report.failures();
    if !failures.is_empty() {
        eprintln!("check failed: {}", failures.join(", "));
    }
    Ok(report.passed())
}

/// Slack statistics of one inequality across a sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlackSummary {
    pub inequality: &'static str,
    pub passed: usize,
    pub failed: usize,
    /// Skipped inequalities plus instances past the caps.
    pub skipped: usize,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub reports: Vec<CheckReport>,
    /// Ids of instances that exceeded a cap.
    pub over_capacity: Vec<String>,
    pub summary: Vec<SlackSummary>,
}

impl SweepResult {
    pub fn failed_instances(&self) -> usize {
        self.reports.iter().filter(|r| !r.passed()).count()
    }
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

pub fn summarize(reports: &[CheckReport], over_capacity: usize) -> Vec<SlackSummary> {
    INEQUALITY_NAMES
        .iter()
        .map(|&name| {
            let mut s = SlackSummary {
                inequality: name,
                passed: 0,
                failed: 0,
                skipped: over_capacity,
                min: None,
                median: None,
                max: None,
            };
            let mut slacks = Vec::new();
            for ineq in reports.iter().filter_map(|r| r.chain.as_ref()?.inequality(name)) {
                match ineq.status {
                    Status::Pass => s.passed += 1,
                    Status::Fail => s.failed += 1,
                    Status::Skipped => s.skipped += 1,
                }
                if ineq.status != Status::Skipped {
                    slacks.push(ineq.slack);
                }
            }
            slacks.sort_by(f64::total_cmp);
            s.min = slacks.first().copied();
            s.max = slacks.last().copied();
            s.median = median(&slacks);
            s
        })
        .collect()
}

/// Checks `count` random priors with seeds `base_seed + i`, in parallel,
/// keeping results in seed order.
pub fn sweep(spec: &RandomSpec, count: usize, base_seed: u64, cfg: &ChainConfig, timings: bool) -> Result<SweepResult> {
    let results = exec::map_range(count, |i| {
        let seed = base_seed.wrapping_add(i as u64);
        let id = format!("random-{seed}");
        let outcome = random_prior(spec, seed).and_then(|prior| {
            let cfg = ChainConfig { seed, ..cfg.clone() };
            check_prior(&prior, &id, &cfg, timings)
        });
        (id, outcome)
    });
    let mut reports = Vec::new();
    let mut over_capacity = Vec::new();
    for (id, outcome) in results {
        match outcome {
            Ok(r) => reports.push(r),
            Err(e) if e.is_capacity() => over_capacity.push(id),
            Err(e) => return Err(e),
        }
    }
    let summary = summarize(&reports, over_capacity.len());
    Ok(SweepResult {
        reports,
        over_capacity,
        summary,
    })
}

pub fn summary_csv(summary: &[SlackSummary]) -> Result<Vec<u8>> {
    let header: Vec<String> = ["inequality", "passed", "failed", "skipped", "min_slack", "median_slack", "max_slack"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.inequality.to_string(),
                s.passed.to_string(),
                s.failed.to_string(),
                s.skipped.to_string(),
                opt(s.min),
                opt(s.median),
                opt(s.max),
            ]
        })
        .collect();
    csv_bytes(&header, &rows)
}

/// Returns whether every checked instance passed.
pub fn cmd_sweep(args: &SweepArgs) -> Result<bool> {
    let SweepGen::Random = args.generator;
    let cfg = args.chain.config(args.seed)?;
    let spec = args.random.spec(1);
    let result = sweep(&spec, args.count, args.seed, &cfg, args.chain.timings)?;

    let aggregate = summary_csv(&result.summary)?;
    match destination(&args.out, &format!("sweep-s{}-n{}.csv", args.seed, args.count)) {
        Some(path) => {
            write_file(&path, &aggregate)?;
            let stem = path.file_stem().map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
            let rows: Vec<Vec<String>> = result.reports.iter().map(|r| csv_row(r, args.chain.timings)).collect();
            let instances = csv_bytes(&csv_header(args.chain.timings), &rows)?;
            write_file(&path.with_file_name(format!("{stem}.instances.csv")), &instances)?;
        }
        None => std::io::stdout().write_all(&aggregate)?,
    }
    eprintln!(
        "sweep: {} instances, {} failed, {} over capacity",
        args.count,
        result.failed_instances(),
        result.over_capacity.len()
    );
    Ok(result.failed_instances() == 0)
}
