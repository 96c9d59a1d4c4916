use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use robust_kep::bip::SolveLimits;
use robust_kep::enumeration::policy_units;
use robust_kep::fixtures::figure_one;
use robust_kep::generator::{random_instance, GeneratorConfig};
use robust_kep::instance::{parse_instance, write_instance, Format, HIGH_PRA};
use robust_kep::oracle::{oracle_robust, oracle_second_stage};
use robust_kep::recourse::solve_recourse_r;
use robust_kep::robust_model::{deterministic_optimum, solve_robust, ModelOptions, PositionMode, RobustConfig, RobustRun};
use robust_kep::second_stage::{solve_second_stage, Algorithm, AlgorithmConfig, SecondStageProblem};
use robust_kep::{Budget, CompatibilityGraph, Policy};

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_TIME_LIMIT: u8 = 4;
const EXIT_DISAGREE: u8 = 1;

#[derive(Parser)]
#[command(name = "rkep", version, about = "Robust kidney exchange under vertex and arc failures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and write artifacts to a directory.
    Solve(SolveArgs),
    /// Run a parameter grid from a manifest and write aggregate CSVs.
    Batch(BatchArgs),
    /// Compare an algorithm against exhaustive enumeration.
    Oracle(OracleArgs),
    /// Write a random or preset instance.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum FormatArg {
    Json,
    Edgelist,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Edgelist => Format::EdgeList,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum PolicyArg {
    Full,
    FirstStageOnly,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Full => Policy::FullRecourse,
            PolicyArg::FirstStageOnly => Policy::FirstStageOnly,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum AlgorithmArg {
    Basic,
    FbsaMb,
    FbsaMe,
    HsaMb,
    HsaMe,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Basic => Algorithm::BasicCovering,
            AlgorithmArg::FbsaMb => Algorithm::FbsaMb,
            AlgorithmArg::FbsaMe => Algorithm::FbsaMe,
            AlgorithmArg::HsaMb => Algorithm::HsaMb,
            AlgorithmArg::HsaMe => Algorithm::HsaMe,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum PositionsArg {
    SimplePaths,
    Bfs,
}

#[derive(Args, Clone, Debug)]
struct ProblemArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Maximum cycle length.
    #[arg(long = "K", default_value_t = 3)]
    k: usize,
    /// Maximum chain length in arcs.
    #[arg(long = "L", default_value_t = 3)]
    l: usize,
    #[arg(long, default_value_t = 0)]
    rv: usize,
    #[arg(long, conflicts_with = "ra_frac")]
    ra: Option<usize>,
    /// Arc budget as a fraction of the arcs in the deterministic optimum.
    #[arg(long)]
    ra_frac: Option<f64>,
    #[arg(long, value_enum, default_value = "full")]
    policy: PolicyArg,
    #[arg(long, value_enum, default_value = "hsa-me")]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 150)]
    tr: usize,
    /// Seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "simple-paths")]
    positions: PositionsArg,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    out: PathBuf,
    /// Leave timing columns empty so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct BatchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum OracleMode {
    Robust,
    SecondStage,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "robust")]
    mode: OracleMode,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum Preset {
    Figure1,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 8)]
    pairs: usize,
    #[arg(long, default_value_t = 1)]
    ndds: usize,
    #[arg(long, default_value_t = 0.3)]
    arc_probability: f64,
    #[arg(long)]
    max_arcs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    out: PathBuf,
}

/// Bad input data or parameters, as opposed to an I/O or internal failure.
#[derive(Debug)]
struct Invalid(String);

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ArcBudget {
    Fixed(usize),
    Fraction(f64),
}

#[derive(Debug, Clone)]
struct RunSpec {
    label: String,
    path: PathBuf,
    format: FormatArg,
    k: usize,
    l: usize,
    rv: usize,
    ra: ArcBudget,
    policy: PolicyArg,
    algorithm: AlgorithmArg,
    tr: usize,
    time_limit: f64,
    seed: u64,
    positions: PositionsArg,
}

impl RunSpec {
    fn from_problem(p: &ProblemArgs) -> Self {
        Self {
            label: p.instance.display().to_string(),
            path: p.instance.clone(),
            format: p.format,
            k: p.k,
            l: p.l,
            rv: p.rv,
            ra: match p.ra_frac {
                Some(f) => ArcBudget::Fraction(f),
                None => ArcBudget::Fixed(p.ra.unwrap_or(0)),
            },
            policy: p.policy,
            algorithm: p.algorithm,
            tr: p.tr,
            time_limit: p.time_limit,
            seed: p.seed,
            positions: p.positions,
        }
    }
}

/// One row of the stats CSV.
#[derive(Debug, Clone, Serialize)]
struct StatsRow {
    instance: String,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    rv: usize,
    ra: Option<usize>,
    policy: String,
    algorithm: String,
    opt: String,
    total_s: Option<String>,
    heur_pct: Option<String>,
    master_pct: Option<String>,
    re_pct: Option<String>,
    cg_pct: Option<String>,
    ssf_pct: Option<String>,
    #[serde(rename = "firstS")]
    first_s: Option<usize>,
    #[serde(rename = "secondS")]
    second_s: Option<usize>,
    heur_true: Option<usize>,
    cg_true: Option<usize>,
    ssf_iters: Option<usize>,
    dom_scen: Option<usize>,
    robust_value: Option<i64>,
    hsp_pct: Option<String>,
}

const COLUMNS: [&str; 22] = [
    "instance", "K", "L", "rv", "ra", "policy", "algorithm", "opt", "total_s", "heur_pct", "master_pct", "re_pct",
    "cg_pct", "ssf_pct", "firstS", "secondS", "heur_true", "cg_true", "ssf_iters", "dom_scen", "robust_value",
    "hsp_pct",
];

fn policy_name(p: PolicyArg) -> String {
    p.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn algorithm_name(a: AlgorithmArg) -> String {
    Algorithm::from(a).name().to_string()
}

struct Outcome {
    graph: CompatibilityGraph,
    run: RobustRun,
    row: StatsRow,
}

fn load(path: &Path, format: FormatArg) -> Result<CompatibilityGraph> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&bytes, format.into()).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn check_params(spec: &RunSpec) -> Result<()> {
    if spec.k < 2 {
        return Err(invalid("K must be at least 2"));
    }
    if spec.l < 1 {
        return Err(invalid("L must be at least 1"));
    }
    if matches!(spec.algorithm, AlgorithmArg::HsaMb | AlgorithmArg::HsaMe) && spec.tr == 0 {
        return Err(invalid("TR must be at least 1 for hybrid algorithms"));
    }
    if !(spec.time_limit > 0.0) {
        return Err(invalid("time limit must be positive"));
    }
    if let ArcBudget::Fraction(f) = spec.ra {
        if !(0.0..=1.0).contains(&f) {
            return Err(invalid("--ra-frac must lie in [0, 1]"));
        }
    }
    Ok(())
}

fn resolve_arc_budget(graph: &CompatibilityGraph, spec: &RunSpec) -> usize {
    match spec.ra {
        ArcBudget::Fixed(n) => n,
        ArcBudget::Fraction(f) => {
            let arcs = deterministic_optimum(graph, spec.k, spec.l).matching.num_arcs();
            (arcs as f64 * f).round() as usize
        }
    }
}

fn model_options(spec: &RunSpec) -> ModelOptions {
    let mut m = ModelOptions::new(spec.k, spec.l, spec.policy.into());
    m.positions = match spec.positions {
        PositionsArg::SimplePaths => PositionMode::SimplePaths,
        PositionsArg::Bfs => PositionMode::BfsLevels,
    };
    m
}

fn algorithm_config(spec: &RunSpec) -> AlgorithmConfig {
    let mut c = AlgorithmConfig::new(spec.algorithm.into());
    c.tr = spec.tr;
    c.seed = spec.seed;
    c
}

/// Share of highly sensitized first-stage pairs that are matched again under
/// the worst case; `None` without such pairs.
fn hsp_pct(graph: &CompatibilityGraph, spec: &RunSpec, run: &RobustRun) -> Option<f64> {
    let sensitized: Vec<usize> = run
        .matching
        .units
        .iter()
        .flat_map(|u| u.vertices.iter().copied())
        .filter(|&v| !graph.is_ndd(v) && graph.pra(v) >= HIGH_PRA)
        .collect();
    if sensitized.is_empty() {
        return None;
    }
    let units = policy_units(graph, spec.k, spec.l, &run.matching, spec.policy.into());
    let recourse = solve_recourse_r(&units, &run.worst_case, &SolveLimits::unlimited());
    let rematched = sensitized
        .iter()
        .filter(|&&v| recourse.selected.iter().any(|&c| units.units[c].contains_vertex(v)))
        .count();
    Some(100.0 * rematched as f64 / sensitized.len() as f64)
}

fn pct(part: Duration, total: Duration) -> String {
    if total.is_zero() {
        return "0.00".into();
    }
    format!("{:.2}", 100.0 * part.as_secs_f64() / total.as_secs_f64())
}

fn execute(spec: &RunSpec, timing: bool) -> Result<Outcome> {
    check_params(spec)?;
    let graph = load(&spec.path, spec.format)?;
    let ra = resolve_arc_budget(&graph, spec);
    let config = RobustConfig {
        model: model_options(spec),
        budget: Budget::new(spec.rv, ra),
        second_stage: algorithm_config(spec),
        time_limit: Some(Duration::from_secs_f64(spec.time_limit)),
    };
    let started = std::time::Instant::now();
    let run = solve_robust(&graph, &config);
    let total = started.elapsed();
    let s = &run.stats;
    let timed = |f: &dyn Fn() -> String| timing.then(f);
    let row = StatsRow {
        instance: spec.label.clone(),
        k: spec.k,
        l: spec.l,
        rv: spec.rv,
        ra: Some(ra),
        policy: policy_name(spec.policy),
        algorithm: algorithm_name(spec.algorithm),
        opt: if run.optimal { "1" } else { "0" }.into(),
        total_s: timed(&|| format!("{:.3}", total.as_secs_f64())),
        heur_pct: timed(&|| pct(s.heuristic_time, total)),
        master_pct: timed(&|| pct(s.master_time, total)),
        re_pct: timed(&|| pct(s.recourse_time, total)),
        cg_pct: timed(&|| pct(s.colgen_time, total)),
        ssf_pct: timed(&|| pct(s.ssf_time, total)),
        first_s: Some(run.first_stage_iterations()),
        second_s: Some(s.second_stage_scenarios()),
        heur_true: Some(s.heuristic_true),
        cg_true: Some(s.colgen_true),
        ssf_iters: Some(s.ssf_solves),
        dom_scen: Some(s.dominated),
        robust_value: Some(run.value),
        hsp_pct: hsp_pct(&graph, spec, &run).map(|p| format!("{p:.2}")),
    };
    Ok(Outcome { graph, run, row })
}

fn failed_row(spec: &RunSpec, err: &anyhow::Error) -> StatsRow {
    eprintln!("run failed for {}: {err:#}", spec.label);
    StatsRow {
        instance: spec.label.clone(),
        k: spec.k,
        l: spec.l,
        rv: spec.rv,
        ra: match spec.ra {
            ArcBudget::Fixed(n) => Some(n),
            ArcBudget::Fraction(_) => None,
        },
        policy: policy_name(spec.policy),
        algorithm: algorithm_name(spec.algorithm),
        opt: "error".into(),
        total_s: None,
        heur_pct: None,
        master_pct: None,
        re_pct: None,
        cg_pct: None,
        ssf_pct: None,
        first_s: None,
        second_s: None,
        heur_true: None,
        cg_true: None,
        ssf_iters: None,
        dom_scen: None,
        robust_value: None,
        hsp_pct: None,
    }
}

fn write_csv(path: &Path, rows: &[StatsRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let spec = RunSpec::from_problem(&args.problem);
    let out = execute(&spec, !args.no_timing)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("run_log.jsonl"), out.run.trace.to_jsonl())?;
    let worst = serde_json::json!({
        "value": out.run.value,
        "scenario": out.run.worst_case.to_record(&out.graph),
    });
    fs::write(args.out.join("worst_case.json"), serde_json::to_string_pretty(&worst)? + "\n")?;
    let solution = serde_json::json!({
        "robust_value": out.run.value,
        "optimal": out.run.optimal,
        "units": out.run.matching.describe(),
        "first_stage_iterations": out.run.first_stage_iterations(),
        "scenarios": out.run.scenarios.iter().map(|s| s.to_record(&out.graph)).collect::<Vec<_>>(),
    });
    fs::write(args.out.join("solution.json"), serde_json::to_string_pretty(&solution)? + "\n")?;
    write_csv(&args.out.join("stats.csv"), std::slice::from_ref(&out.row))?;
    println!("robust value {} ({})", out.run.value, if out.run.optimal { "optimal" } else { "time limit" });
    Ok(if out.run.optimal { 0 } else { EXIT_TIME_LIMIT })
}

#[derive(Debug, Deserialize)]
struct ManifestInstance {
    path: PathBuf,
    #[serde(default = "default_format")]
    format: FormatArg,
}

fn default_format() -> FormatArg {
    FormatArg::Json
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    instances: Vec<ManifestInstance>,
    #[serde(rename = "K", default = "default_len")]
    k: Vec<usize>,
    #[serde(rename = "L", default = "default_len")]
    l: Vec<usize>,
    #[serde(default = "default_zero")]
    rv: Vec<usize>,
    #[serde(default)]
    ra: Vec<usize>,
    #[serde(default)]
    ra_frac: Vec<f64>,
    #[serde(default = "default_policies")]
    policy: Vec<PolicyArg>,
    #[serde(default = "default_algorithms")]
    algorithm: Vec<AlgorithmArg>,
    #[serde(default = "default_tr")]
    tr: usize,
    #[serde(default = "default_time_limit")]
    time_limit: f64,
    #[serde(default)]
    seed: u64,
}

fn default_len() -> Vec<usize> {
    vec![3]
}
fn default_zero() -> Vec<usize> {
    vec![0]
}
fn default_policies() -> Vec<PolicyArg> {
    vec![PolicyArg::Full]
}
fn default_algorithms() -> Vec<AlgorithmArg> {
    vec![AlgorithmArg::HsaMe]
}
fn default_tr() -> usize {
    150
}
fn default_time_limit() -> f64 {
    3600.0
}

fn expand(manifest: &Manifest, base: &Path) -> Vec<RunSpec> {
    let mut arc_budgets: Vec<ArcBudget> = manifest.ra.iter().map(|&n| ArcBudget::Fixed(n)).collect();
    arc_budgets.extend(manifest.ra_frac.iter().map(|&f| ArcBudget::Fraction(f)));
    if arc_budgets.is_empty() {
        arc_budgets.push(ArcBudget::Fixed(0));
    }
    let mut specs = Vec::new();
    for inst in &manifest.instances {
        for &k in &manifest.k {
            for &l in &manifest.l {
                for &rv in &manifest.rv {
                    for &ra in &arc_budgets {
                        for &policy in &manifest.policy {
                            for &algorithm in &manifest.algorithm {
                                specs.push(RunSpec {
                                    label: inst.path.display().to_string(),
                                    path: base.join(&inst.path),
                                    format: inst.format,
                                    k,
                                    l,
                                    rv,
                                    ra,
                                    policy,
                                    algorithm,
                                    tr: manifest.tr,
                                    time_limit: manifest.time_limit,
                                    seed: manifest.seed,
                                    positions: PositionsArg::SimplePaths,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    specs
}

/// Solved-within curves per algorithm: the share of runs finished optimally
/// with measure at most each threshold.
fn performance_profile(path: &Path, rows: &[StatsRow], timing: bool) -> Result<()> {
    let measure_name = if timing { "seconds" } else { "scenarios" };
    let measure = |r: &StatsRow| -> Option<f64> {
        if r.opt != "1" {
            return None;
        }
        if timing {
            r.total_s.as_ref().and_then(|t| t.parse().ok())
        } else {
            r.second_s.map(|n| n as f64)
        }
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["algorithm", "measure", "threshold", "solved_fraction"])?;
    let mut algorithms: Vec<&str> = rows.iter().map(|r| r.algorithm.as_str()).collect();
    algorithms.sort_unstable();
    algorithms.dedup();
    for alg in algorithms {
        let runs: Vec<&StatsRow> = rows.iter().filter(|r| r.algorithm == alg).collect();
        let mut values: Vec<f64> = runs.iter().filter_map(|r| measure(r)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for t in values {
            let solved = runs.iter().filter(|r| measure(r).is_some_and(|m| m <= t)).count();
            w.write_record([
                alg.to_string(),
                measure_name.to_string(),
                format!("{t}"),
                format!("{:.4}", solved as f64 / runs.len() as f64),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_batch(args: BatchArgs) -> Result<u8> {
    let text = fs::read_to_string(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| invalid(format!("manifest: {e}")))?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let specs = expand(&manifest, base);
    let timing = !args.no_timing;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.jobs.max(1)).build()?;
    let rows: Vec<StatsRow> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| match execute(spec, timing) {
                Ok(out) => out.row,
                Err(e) => failed_row(spec, &e),
            })
            .collect()
    });
    fs::create_dir_all(&args.out)?;
    write_csv(&args.out.join("results.csv"), &rows)?;
    performance_profile(&args.out.join("profile.csv"), &rows, timing)?;
    println!("{} runs written to {}", rows.len(), args.out.display());
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> Result<u8> {
    let spec = RunSpec::from_problem(&args.problem);
    check_params(&spec)?;
    let graph = load(&spec.path, spec.format)?;
    let ra = resolve_arc_budget(&graph, &spec);
    let budget = Budget::new(spec.rv, ra);
    let policy: Policy = spec.policy.into();
    let (expected, got, trace) = match args.mode {
        OracleMode::Robust => {
            let oracle = oracle_robust(&graph, spec.k, spec.l, policy, budget).map_err(|e| invalid(e.to_string()))?;
            let run = solve_robust(
                &graph,
                &RobustConfig {
                    model: model_options(&spec),
                    budget,
                    second_stage: algorithm_config(&spec),
                    time_limit: Some(Duration::from_secs_f64(spec.time_limit)),
                },
            );
            (oracle.value, run.value, run.trace)
        }
        OracleMode::SecondStage => {
            let x = deterministic_optimum(&graph, spec.k, spec.l).matching;
            let oracle = oracle_second_stage(&graph, spec.k, spec.l, &x, policy, budget).map_err(|e| invalid(e.to_string()))?;
            let units = policy_units(&graph, spec.k, spec.l, &x, policy);
            let problem = SecondStageProblem {
                graph: &graph,
                units: &units,
                first_stage: &x,
                bound: x.transplants(&graph) as i64,
                budget,
                max_chain: spec.l,
            };
            let ss = solve_second_stage(&problem, &algorithm_config(&spec));
            (oracle.value, ss.value, ss.trace)
        }
    };
    let name = algorithm_name(spec.algorithm);
    if expected == got {
        println!("agree: {name} = {got}, oracle = {expected}");
        Ok(0)
    } else {
        println!("disagree: {name} = {got}, oracle = {expected}");
        print!("{}", trace.to_jsonl());
        Ok(EXIT_DISAGREE)
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<u8> {
    let graph = match args.preset {
        Some(Preset::Figure1) => figure_one(),
        None => {
            if !(0.0..=1.0).contains(&args.arc_probability) {
                return Err(invalid("--arc-probability must lie in [0, 1]"));
            }
            random_instance(
                &GeneratorConfig {
                    pairs: args.pairs,
                    ndds: args.ndds,
                    arc_probability: args.arc_probability,
                    max_arcs: args.max_arcs,
                },
                args.seed,
            )
        }
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&args.out, write_instance(&graph, args.format.into()))?;
    println!("{} vertices, {} arcs written to {}", graph.num_vertices(), graph.num_arcs(), args.out.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Generate(a) => cmd_generate(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) if e.is::<Invalid>() => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_grid_order() {
        let m: Manifest = serde_json::from_str(
            r#"{"instances": [{"path": "a.json"}, {"path": "b.txt", "format": "edgelist"}],
                "K": [3, 4], "ra": [1], "ra_frac": [0.5], "algorithm": ["basic", "hsa-mb"]}"#,
        )
        .unwrap();
        let specs = expand(&m, Path::new("/data"));
        assert_eq!(specs.len(), 2 * 2 * 2 * 2);
        assert_eq!(specs[0].path, Path::new("/data/a.json"));
        assert_eq!((specs[0].k, specs[0].ra, specs[0].algorithm), (3, ArcBudget::Fixed(1), AlgorithmArg::Basic));
        assert_eq!(specs[1].algorithm, AlgorithmArg::HsaMb);
        assert_eq!(specs[2].ra, ArcBudget::Fraction(0.5));
        assert_eq!(specs[8].format, FormatArg::Edgelist);
    }

    #[test]
    fn unknown_manifest_keys_are_rejected() {
        assert!(serde_json::from_str::<Manifest>(r#"{"instances": [], "budget": 3}"#).is_err());
    }
}
