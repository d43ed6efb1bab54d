//! Command-line front end. Exit codes: 0 success, 1 internal or I/O error,
//! 2 invariant breach, 3 infeasible initial state, 4 invalid arguments,
//! scenario or configuration.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::controller::{Controller, Mode};
use crate::error::Error;
use crate::matrix::Vector;
use crate::scenario::{load_scenario, make_default_rendezvous, make_double_integrator, Scenario};
use crate::sets::{project_2d, vertices_2d, Zonotope};
use crate::sim::{
    check_trace, read_trace_json, replay_trace, run_campaign, simulate_with, write_polyline_csv, write_trace_csv,
    write_trace_json, CampaignOptions, CampaignReport, DisturbanceSource, SimOptions, SimTrace,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_BREACH: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INVALID: i32 = 4;

/// Directory of the regression traces shipped with the crate.
pub const REGRESSION_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/regression");

const DISTURBANCE_HELP: &str = "Disturbance model: zero | uniform | uniform:<seed> | persistent:<v1,...,vn> | \
replay:<path>. Bare `uniform` takes its seed from --seed; replay reads a JSON array of vectors or a trace JSON";

#[derive(Debug, Parser)]
#[command(name = "vhmpc", version, about = "Variable-horizon tube MPC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one closed-loop run and print its summary.
    Run(RunArgs),
    /// Paired Monte Carlo campaign over sampled initial states.
    Campaign(CampaignArgs),
    /// Export disturbance tubes S(k) as CSV polylines.
    Sets(SetsArgs),
    /// Check the invariant suite on stored traces.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "atcs")]
    mode: Mode,
    /// Initial state, comma separated. Defaults to the scenario's own.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value = "uniform", help = DISTURBANCE_HELP)]
    disturbance: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for data files and the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the trace as CSV and JSON.
    #[arg(long)]
    emit_traces: bool,
    /// Write S(inf), S(N-bar) and the fixed terminal set as polylines.
    #[arg(long)]
    emit_sets: bool,
    /// Stop at the first invariant violation.
    #[arg(long)]
    strict: bool,
    /// Coordinate pair for set projections (names or indices).
    #[arg(long, value_delimiter = ',')]
    coords: Option<Vec<String>>,
}

#[derive(Debug, Args)]
struct CampaignArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated modes; every run is paired across them.
    #[arg(long, value_delimiter = ',', default_value = "atcs,ftcs")]
    mode: Vec<Mode>,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write every trace under `<out>/traces`.
    #[arg(long)]
    emit_traces: bool,
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct SetsArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Tube indices; `inf` selects the invariant set approximation.
    #[arg(long = "k", value_delimiter = ',', default_value = "1,2,3,inf")]
    k: Vec<String>,
    /// Coordinate pair to project on (names or indices).
    #[arg(long, value_delimiter = ',')]
    coords: Option<Vec<String>>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Directory of trace JSON files. Defaults to the bundled regression set.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Scenario file for the traces. Built-in scenarios are matched by name otherwise.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Skip re-simulating each trace.
    #[arg(long)]
    no_replay: bool,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }
}

/// Exit code for a library error raised while simulating.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvariantBreach { .. } => EXIT_BREACH,
        Error::InfeasibleStart(..) => EXIT_INFEASIBLE,
        Error::InvalidInput(_)
        | Error::Scenario(_)
        | Error::DimensionMismatch { .. }
        | Error::SamplingFailed { .. }
        | Error::NotSchur(_) => EXIT_INVALID,
        _ => EXIT_INTERNAL,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Campaign(a) => cmd_campaign(a),
        Command::Sets(a) => cmd_sets(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> CliResult<Scenario> {
    load_scenario(path).map_err(|e| Failure::invalid(e.to_string()))
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e).into())
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    arguments: Vec<String>,
    files: Vec<String>,
    elapsed_seconds: f64,
}

fn write_manifest(dir: &Path, command: &str, files: &[PathBuf], start: Instant) -> CliResult<()> {
    let manifest = Manifest {
        tool: "vhmpc",
        version: env!("CARGO_PKG_VERSION"),
        command,
        arguments: std::env::args().skip(1).collect(),
        files: files
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            .collect(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

fn parse_disturbance(spec: &str, seed: u64) -> CliResult<DisturbanceSource> {
    if spec.trim() == "uniform" {
        return Ok(DisturbanceSource::uniform(seed));
    }
    DisturbanceSource::from_str(spec).map_err(|e| Failure::invalid(e.to_string()))
}

fn resolve_coords(scenario: &Scenario, coords: Option<&[String]>) -> CliResult<(usize, usize, String, String)> {
    let n = scenario.state_dim();
    let names = |i: usize| scenario.state_names.get(i).cloned().unwrap_or_else(|| format!("x{i}"));
    let pick = |token: &str| -> CliResult<usize> {
        let token = token.trim();
        if let Some(i) = scenario.state_names.iter().position(|s| s == token) {
            return Ok(i);
        }
        match token.parse::<usize>() {
            Ok(i) if i < n => Ok(i),
            _ => Err(Failure::invalid(format!(
                "unknown coordinate '{token}' (known: {})",
                scenario.state_names.join(", ")
            ))),
        }
    };
    let (i, j) = match coords {
        None => (0, 1.min(n.saturating_sub(1))),
        Some([a, b]) => (pick(a)?, pick(b)?),
        Some(other) => {
            return Err(Failure::invalid(format!(
                "expected two coordinates, got {}",
                other.len()
            )))
        }
    };
    if i == j {
        return Err(Failure::invalid("projection coordinates must differ"));
    }
    Ok((i, j, names(i), names(j)))
}

fn emit_polyline(dir: &Path, file: &str, set: &Zonotope, coords: &(usize, usize, String, String)) -> CliResult<PathBuf> {
    let projected = if set.dim() == 2 && (coords.0, coords.1) == (0, 1) {
        set.clone()
    } else {
        project_2d(set, coords.0, coords.1)?
    };
    let vertices = vertices_2d(&projected)?;
    let path = dir.join(file);
    write_polyline_csv(&path, &vertices, (&coords.2, &coords.3))?;
    Ok(path)
}

fn unit_suffix(unit: &str) -> String {
    if unit.is_empty() {
        String::new()
    } else {
        format!(" {unit}")
    }
}

fn summary_line(trace: &SimTrace) -> String {
    let (c1, c2, fixed) = trace.branch_counts();
    let n_bar = trace.n_bar.map_or_else(|| "-".to_string(), |n| n.to_string());
    format!(
        "scenario={} mode={} N_ct={} N_bar={} J0={:.6} final_distance={:.6}{} C1={} C2={} fixed={} violations={}",
        trace.scenario,
        trace.mode,
        trace.completion_step,
        n_bar,
        trace.j0,
        trace.final_distance,
        unit_suffix(&trace.distance_unit),
        c1,
        c2,
        fixed,
        trace.violations.len()
    )
}

fn cmd_run(args: RunArgs) -> CliResult<i32> {
    let start = Instant::now();
    let scenario = load(&args.scenario)?;
    let x0 = match (&args.x0, &scenario.x0) {
        (Some(v), _) => Vector::from_column_slice(v),
        (None, Some(v)) => v.clone(),
        (None, None) => return Err(Failure::invalid("scenario has no initial state; pass --x0")),
    };
    if x0.len() != scenario.state_dim() {
        return Err(Failure::invalid(format!(
            "--x0 has {} components, scenario state has {}",
            x0.len(),
            scenario.state_dim()
        )));
    }
    let disturbance = parse_disturbance(&args.disturbance, args.seed)?;
    disturbance
        .validate(&scenario.w)
        .map_err(|e| Failure::invalid(e.to_string()))?;
    let mut controller = Controller::new(&scenario, args.mode).map_err(|e| Failure::invalid(e.to_string()))?;
    let trace = simulate_with(
        &mut controller,
        &x0,
        &disturbance,
        SimOptions { strict: args.strict },
    )?;
    println!("{}", summary_line(&trace));

    if let Some(dir) = &args.out {
        prepare_dir(dir)?;
        let mut files = Vec::new();
        let stem = format!("{}_{}", trace.scenario, trace.mode);
        if args.emit_traces {
            let csv = dir.join(format!("{stem}.csv"));
            write_trace_csv(&csv, &trace)?;
            let json = dir.join(format!("{stem}.json"));
            write_trace_json(&json, &trace)?;
            files.extend([csv, json]);
        }
        if args.emit_sets {
            let coords = resolve_coords(&scenario, args.coords.as_deref())?;
            let sinf = controller.tubes().sinf().set.clone();
            files.push(emit_polyline(dir, "S_inf.csv", &sinf, &coords)?);
            if let Some(n_bar) = trace.n_bar {
                let tube = controller.tubes().tube_at(n_bar).clone();
                files.push(emit_polyline(dir, &format!("S_{n_bar}.csv"), &tube, &coords)?);
            }
            if let Some(q) = controller.ftcs_q() {
                files.push(emit_polyline(dir, "fixed_terminal.csv", &q, &coords)?);
            }
        }
        write_manifest(dir, "run", &files, start)?;
    }
    Ok(if trace.violations.is_empty() { EXIT_OK } else { EXIT_BREACH })
}

fn print_report(report: &CampaignReport) {
    println!(
        "{:<8} {:>5} {:>6} {:>12} {:>12} {:>12} {:>12} {:>9} {:>9} {:>10}",
        "mode", "runs", "failed", "mean", "median", "min", "max", "mean_Nct", "mode_Nbar", "violations"
    );
    for a in &report.aggregates {
        let modal = a
            .n_bar_histogram
            .iter()
            .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)))
            .map_or_else(|| "-".to_string(), |(k, _)| k.to_string());
        println!(
            "{:<8} {:>5} {:>6} {:>12.6} {:>12.6} {:>12.6} {:>12.6} {:>9.2} {:>9} {:>10}",
            a.mode.as_str(),
            a.completed_runs,
            a.failed_runs,
            a.mean_final_distance,
            a.median_final_distance,
            a.min_final_distance,
            a.max_final_distance,
            a.mean_completion_step,
            modal,
            a.violations
        );
    }
    if !report.distance_unit.is_empty() {
        println!("distance unit: {}", report.distance_unit);
    }
    if let Some(d) = report.paired_dominance {
        println!("paired dominance (adaptive <= fixed): {:.1}%", 100.0 * d);
    }
    for c in &report.caveats {
        println!("note: {c}");
    }
}

fn cmd_campaign(args: CampaignArgs) -> CliResult<i32> {
    let start = Instant::now();
    let scenario = load(&args.scenario)?;
    let mut opts = CampaignOptions::new(args.count, args.seed, args.mode.clone());
    opts.strict = args.strict;
    let outcome = run_campaign(&scenario, &opts)?;
    print_report(&outcome.report);
    if let Some(dir) = &args.out {
        prepare_dir(dir)?;
        let report_path = dir.join("report.json");
        write_json(&report_path, &outcome.report)?;
        let files = vec![report_path];
        if args.emit_traces {
            let traces_dir = dir.join("traces");
            prepare_dir(&traces_dir)?;
            for (run, per_mode) in outcome.traces.iter().enumerate() {
                for trace in per_mode.iter().flatten() {
                    let path = traces_dir.join(format!("run{run:04}_{}.json", trace.mode));
                    write_trace_json(&path, trace)?;
                }
            }
        }
        write_manifest(dir, "campaign", &files, start)?;
    }
    Ok(if outcome.report.violation_count == 0 { EXIT_OK } else { EXIT_BREACH })
}

/// `inf`, `∞` or a non-negative integer.
fn parse_tube_index(token: &str) -> CliResult<Option<usize>> {
    match token.trim() {
        "inf" | "∞" | "infinity" => Ok(None),
        t => t
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::invalid(format!("invalid tube index '{t}'"))),
    }
}

fn cmd_sets(args: SetsArgs) -> CliResult<i32> {
    let start = Instant::now();
    let scenario = load(&args.scenario)?;
    let coords = resolve_coords(&scenario, args.coords.as_deref())?;
    let indices = args
        .k
        .iter()
        .map(|t| parse_tube_index(t))
        .collect::<CliResult<Vec<_>>>()?;
    let mut controller = Controller::new(&scenario, Mode::Atcs).map_err(|e| Failure::invalid(e.to_string()))?;
    prepare_dir(&args.out)?;
    let mut files = Vec::new();
    for index in indices {
        let (label, set) = match index {
            Some(k) => (k.to_string(), controller.tubes().tube_at(k).clone()),
            None => ("inf".to_string(), controller.tubes().sinf().set.clone()),
        };
        let path = emit_polyline(&args.out, &format!("S_{label}.csv"), &set, &coords)?;
        let radii = set.axis_radii();
        println!(
            "S({label}): {} generators, half-widths {}={:.6e} {}={:.6e} -> {}",
            set.num_generators(),
            coords.2,
            radii[coords.0],
            coords.3,
            radii[coords.1],
            path.display()
        );
        files.push(path);
    }
    write_manifest(&args.out, "sets", &files, start)?;
    Ok(EXIT_OK)
}

fn builtin_scenario(name: &str) -> Option<Scenario> {
    match name {
        "double_integrator" => Some(make_double_integrator()),
        "rendezvous" => Some(make_default_rendezvous()),
        _ => None,
    }
}

fn cmd_verify(args: VerifyArgs) -> CliResult<i32> {
    let dir = args.dir.unwrap_or_else(|| PathBuf::from(REGRESSION_DIR));
    let override_scenario = args.scenario.as_deref().map(load).transpose()?;
    let entries = fs::read_dir(&dir).map_err(|e| Failure::invalid(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::invalid(format!("no trace files in {}", dir.display())));
    }
    let mut failed = 0usize;
    for path in &paths {
        let trace = read_trace_json(path).map_err(|e| Failure::invalid(e.to_string()))?;
        let scenario = match &override_scenario {
            Some(s) => s.clone(),
            None => builtin_scenario(&trace.scenario).ok_or_else(|| {
                Failure::invalid(format!(
                    "{}: unknown scenario '{}'; pass --scenario",
                    path.display(),
                    trace.scenario
                ))
            })?,
        };
        let mut violations = check_trace(&scenario, &trace)?.violations;
        if !args.no_replay {
            match replay_trace(&scenario, &trace) {
                Ok(r) => violations.extend(r.violations),
                Err(e) => violations.push(format!("replay failed: {e}")),
            }
        }
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        if violations.is_empty() {
            println!("PASS {name} ({} steps)", trace.records.len());
        } else {
            failed += 1;
            println!("FAIL {name}");
            for v in &violations {
                println!("  {v}");
            }
        }
    }
    println!("{} of {} traces passed", paths.len() - failed, paths.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_BREACH })
}
