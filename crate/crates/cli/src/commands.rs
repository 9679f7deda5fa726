use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use sampleguard::control::{BuildContext, ControllerParams, ControllerSpec};
use sampleguard::grid::{run_episode, EpisodeConfig, EpisodeEvent, GridSpec};
use sampleguard::logic::{format_ltl, format_mtl, formula_lines, parse_mtl, Duration, MtlFormula};
use sampleguard::monitor::{compile_monitor, monitor_run_state, Status};
use sampleguard::semantics::{
    eval_mtl_dense, read_trace_jsonl, sample_dense, write_trace_jsonl, TraceHeader, Verdict,
};
use sampleguard::smc::{paired_bound_check, smc_estimate, SampleSize, SmcConfig, SmcError, SmcResult};
use sampleguard::strengthen::{strengthen, StrengthenError, StrengthenResult};

use crate::scenario::Scenario;
use crate::{exit, CliError};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::failure(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

fn io(e: std::io::Error) -> CliError {
    CliError::failure(format!("cannot write output: {e}"))
}

/// A parsed requirement with its source line.
struct Requirement {
    line: usize,
    formula: MtlFormula,
}

fn read_requirements(path: &Path) -> Result<Vec<Requirement>, CliError> {
    let text = read(path)?;
    let mut out = Vec::new();
    for fl in formula_lines(&text) {
        let formula = parse_mtl(fl.text).map_err(|e| {
            CliError::failure(format!(
                "{}:{}:{}: {e}",
                path.display(),
                fl.line,
                fl.offset + e.position() + 1
            ))
        })?;
        out.push(Requirement { line: fl.line, formula });
    }
    if out.is_empty() {
        return Err(CliError::failure(format!("{}: no formulas", path.display())));
    }
    Ok(out)
}

fn strengthen_error(origin: &str, e: StrengthenError) -> CliError {
    match e {
        StrengthenError::UnsupportedFragment(_) | StrengthenError::NonZeroLowerBound { .. } => CliError {
            code: exit::UNSUPPORTED,
            message: format!("{origin}: {e}"),
        },
        StrengthenError::SamplingTooCoarse { .. } => CliError::failure(format!("{origin}: {e}")),
    }
}

/// Strengthens the conjunction of every requirement in `path`.
fn strengthen_file(path: &Path, delta: Duration) -> Result<StrengthenResult, CliError> {
    let reqs = read_requirements(path)?;
    for r in &reqs {
        strengthen(&r.formula, delta).map_err(|e| strengthen_error(&format!("{}:{}", path.display(), r.line), e))?;
    }
    let phi = MtlFormula::conjunction(reqs.into_iter().map(|r| r.formula)).expect("non-empty");
    strengthen(&phi, delta).map_err(|e| strengthen_error(&path.display().to_string(), e))
}

#[derive(Serialize)]
struct StrengthenLine {
    line: usize,
    #[serde(flatten)]
    report: sampleguard::strengthen::StrengthenReport,
}

/// One JSON object per formula of the file.
pub fn cmd_strengthen(formulas: &Path, delta: Duration, out: &mut dyn Write) -> Result<(), CliError> {
    let reqs = read_requirements(formulas)?;
    let mut lines = Vec::with_capacity(reqs.len());
    for r in reqs {
        let result = strengthen(&r.formula, delta)
            .map_err(|e| strengthen_error(&format!("{}:{}", formulas.display(), r.line), e))?;
        lines.push(StrengthenLine {
            line: r.line,
            report: result.report(),
        });
    }
    for l in lines {
        writeln!(out, "{}", serde_json::to_string(&l).expect("report serializes")).map_err(io)?;
    }
    Ok(())
}

/// Checks a recorded trace against the requirements: the compiled monitor on
/// the Δ-sampling and the dense-time evaluation on the full trace.
pub fn cmd_check_trace(
    trace: &Path,
    formulas: &Path,
    delta: Option<Duration>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let file = read_trace_jsonl(&read(trace)?).map_err(|e| CliError::failure(format!("{}: {e}", trace.display())))?;
    let delta = delta.unwrap_or(file.header.delta_sample);
    let result = strengthen_file(formulas, delta)?;
    let sampled = sample_dense(&file.dense, delta).map_err(|e| CliError::failure(format!("{}: {e}", trace.display())))?;
    let monitor = compile_monitor(&result.ltl).map_err(|e| CliError::failure(e.to_string()))?;
    let state = monitor_run_state(&monitor, &sampled).map_err(|e| CliError::failure(format!("{}: {e}", trace.display())))?;
    let mtl = eval_mtl_dense(&result.source, &file.dense)
        .map_err(|e| CliError::failure(format!("{}: {e}", trace.display())))?;

    match state.status() {
        Status::Alive => writeln!(out, "ltl: sat ({} samples, delta = {delta} min)", sampled.len()),
        Status::Violated { at, window_start } => writeln!(
            out,
            "ltl: violated at sample {at} (t = {} min), obligation from sample {window_start}",
            delta.times(at as i64)
        ),
    }
    .map_err(io)?;
    match &mtl {
        Verdict::Sat => writeln!(out, "mtl: sat"),
        Verdict::Violated(t) => writeln!(out, "mtl: violated at t = {t} min"),
    }
    .map_err(io)?;

    Ok(match (state.is_alive(), mtl.is_sat()) {
        (true, true) => exit::OK,
        (false, _) => exit::LTL_VIOLATED,
        (true, false) => {
            writeln!(
                out,
                "warning: the requirement fails although the sampled formula holds; \
                 the trace breaks the sampling assumptions (e.g. a blackout shorter than delta)"
            )
            .map_err(io)?;
            exit::MTL_ONLY
        }
    })
}

pub struct SimulateArgs {
    pub grid: PathBuf,
    pub controller: String,
    pub horizon: Duration,
    pub delta: Duration,
    pub delta_small: Option<Duration>,
    pub seed: u64,
    pub formulas: Option<PathBuf>,
    pub kappa: Duration,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    seed: u64,
    controller: String,
    samples: usize,
    ltl: &'a Verdict<usize>,
    mtl: &'a Verdict<Duration>,
    events: &'a [EpisodeEvent],
}

fn load_grid(path: &Path) -> Result<GridSpec, CliError> {
    GridSpec::from_json(&read(path)?).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

fn requirements_for(grid: &GridSpec, formulas: Option<&Path>, kappa: Duration, delta: Duration) -> Result<StrengthenResult, CliError> {
    match formulas {
        Some(path) => strengthen_file(path, delta),
        None => {
            let phi = grid
                .safety_requirements(kappa)
                .ok_or_else(|| CliError::failure("the grid has neither lines nor consumers"))?;
            strengthen(&phi, delta).map_err(|e| strengthen_error("grid requirements", e))
        }
    }
}

/// Runs one episode and writes its trace (with the action log) as JSONL.
pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let grid = load_grid(&args.grid)?;
    let spec: ControllerSpec = args.controller.parse().map_err(|e| CliError::failure(format!("{e}")))?;
    let episode = EpisodeConfig {
        horizon: args.horizon,
        delta: args.delta,
        delta_small: args.delta_small.unwrap_or(args.delta / 5),
    };
    episode.validate().map_err(|e| CliError::failure(e.to_string()))?;
    let result = requirements_for(&grid, args.formulas.as_deref(), args.kappa, args.delta)?;
    let monitor = compile_monitor(&result.ltl).map_err(|e| CliError::failure(e.to_string()))?;
    let ctx = BuildContext {
        grid: &grid,
        params: ControllerParams {
            seed: args.seed,
            ..ControllerParams::default()
        },
        episode_seed: args.seed,
        monitor: Some(&monitor),
        episode,
    };
    let mut controller = spec.build(&ctx).map_err(|e| CliError::failure(e.to_string()))?;
    let rec = run_episode(&grid, controller.as_mut(), episode, args.seed).map_err(|e| CliError::failure(e.to_string()))?;

    let header = TraceHeader {
        delta_small: episode.delta_small,
        horizon: episode.horizon,
        delta_sample: episode.delta,
        actions: rec.actions.clone(),
    };
    let trace = write_trace_jsonl(&header, &rec.dense);
    match &args.out {
        None => return out.write_all(trace.as_bytes()).map_err(io),
        Some(path) => write(path, &trace)?,
    }
    let ltl = sampleguard::monitor::monitor_run(&monitor, &rec.sampled).map_err(|e| CliError::failure(e.to_string()))?;
    let mtl = eval_mtl_dense(&result.source, &rec.dense).map_err(|e| CliError::failure(e.to_string()))?;
    let summary = SimulateSummary {
        seed: args.seed,
        controller: spec.to_string(),
        samples: rec.sampled.len(),
        ltl: &ltl,
        mtl: &mtl,
        events: &rec.events,
    };
    writeln!(out, "{}", serde_json::to_string(&summary).expect("summary serializes")).map_err(io)
}

pub struct SmcArgs {
    pub scenario: PathBuf,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub csv: bool,
    /// Master seed from the command line or the environment.
    pub seed: Option<u64>,
    pub seed_from_env: Option<u64>,
}

#[derive(Serialize)]
struct ScenarioEcho {
    grid: PathBuf,
    controller: String,
    delta_min: Duration,
    delta_small_min: Duration,
    horizon_min: Duration,
    padding_min: Duration,
    requirement: String,
    strengthened: String,
    m: Option<u32>,
}

#[derive(Serialize)]
struct SmcReport<'a> {
    /// The only field that varies between identical runs.
    generated_at_unix: u64,
    scenario: ScenarioEcho,
    #[serde(flatten)]
    result: &'a SmcResult,
    strictness_witnesses: Vec<u64>,
}

/// Where `cmd_smc` wrote its files.
#[derive(Debug, Clone)]
pub struct SmcOutputs {
    pub report: PathBuf,
    pub per_trace: PathBuf,
    pub csv: Option<PathBuf>,
}

pub const REPORT_FILE: &str = "smc_report.json";
pub const PER_TRACE_FILE: &str = "per_trace.jsonl";
pub const CSV_FILE: &str = "per_trace.csv";

/// Runs the campaign described by a scenario file and writes the report.
pub fn cmd_smc(args: &SmcArgs, out: &mut dyn Write) -> Result<(i32, SmcOutputs), CliError> {
    let text = read(&args.scenario)?;
    let scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| CliError::failure(format!("{}: {e}", args.scenario.display())))?;
    let base = args.scenario.parent().unwrap_or(Path::new("")).to_path_buf();
    scenario
        .validate(&base)
        .map_err(|e| CliError::failure(format!("{}: {e}", args.scenario.display())))?;

    let grid = load_grid(&base.join(&scenario.grid))?;
    let spec: ControllerSpec = scenario.controller.parse().map_err(|e| CliError::failure(format!("{e}")))?;
    let formulas = scenario.formulas.as_ref().map(|f| base.join(f));
    let result = requirements_for(&grid, formulas.as_deref(), scenario.kappa(), scenario.delta)?;
    let master_seed = args.seed.or(scenario.master_seed).or(args.seed_from_env).unwrap_or(0);
    let size = match (scenario.smc.n, scenario.smc.epsilon) {
        (Some(n), _) => SampleSize::Fixed(n),
        (None, Some(epsilon)) => SampleSize::Accuracy { epsilon },
        (None, None) => unreachable!("validated"),
    };
    let cfg = SmcConfig {
        size,
        alpha: scenario.smc.alpha,
        master_seed,
        jobs: args.jobs,
    };
    let defaults = ControllerParams::default();
    let params = ControllerParams {
        seed: scenario.seed.unwrap_or(master_seed),
        epsilon: scenario.epsilon.unwrap_or(defaults.epsilon),
        episodes: scenario.episodes.unwrap_or(defaults.episodes),
    };
    let res = match smc_estimate(&grid, &spec, params, &result, &cfg, scenario.horizon, scenario.delta_small()) {
        Ok(r) => r,
        Err(SmcError::AssumptionUnsatisfied(reports)) => {
            let lines: Vec<String> = reports
                .iter()
                .map(|r| format!("{}: {}", serde_json::to_string(&r.assumption).unwrap_or_default(), r.note))
                .collect();
            return Err(CliError {
                code: exit::ASSUMPTION,
                message: format!("assumption unsatisfied:\n  {}", lines.join("\n  ")),
            });
        }
        Err(e) => return Err(CliError::failure(e.to_string())),
    };

    let out_dir = match (&args.out, &scenario.output_dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => base.join(dir),
        (None, None) => base.join("out"),
    };
    let pairing = paired_bound_check(&res);
    let report = SmcReport {
        generated_at_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        scenario: ScenarioEcho {
            grid: scenario.grid.clone(),
            controller: spec.to_string(),
            delta_min: scenario.delta,
            delta_small_min: scenario.delta_small(),
            horizon_min: scenario.horizon,
            padding_min: result.padding(),
            requirement: format_mtl(&result.source),
            strengthened: format_ltl(&result.ltl),
            m: result.horizon_m,
        },
        result: &res,
        strictness_witnesses: pairing.strictness_witnesses.clone(),
    };
    let outputs = SmcOutputs {
        report: out_dir.join(REPORT_FILE),
        per_trace: out_dir.join(PER_TRACE_FILE),
        csv: args.csv.then(|| out_dir.join(CSV_FILE)),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write(&outputs.report, &json)?;
    let mut jsonl = String::new();
    for t in &res.per_trace {
        jsonl.push_str(&serde_json::to_string(t).expect("verdicts serialize"));
        jsonl.push('\n');
    }
    write(&outputs.per_trace, &jsonl)?;
    if let Some(path) = &outputs.csv {
        let mut csv = String::from("seed,ltl,ltl_at,mtl,mtl_at_min\n");
        for t in &res.per_trace {
            let (l, la) = match &t.verdict_ltl {
                Verdict::Sat => ("sat", String::new()),
                Verdict::Violated(i) => ("violated", i.to_string()),
            };
            let (m, ma) = match &t.verdict_mtl {
                Verdict::Sat => ("sat", String::new()),
                Verdict::Violated(d) => ("violated", d.to_string()),
            };
            csv.push_str(&format!("{},{l},{la},{m},{ma}\n", t.seed));
        }
        write(path, &csv)?;
    }

    writeln!(
        out,
        "episodes: {}\np_hat_ltl: {:.6} [{:.6}, {:.6}]\np_hat_mtl: {:.6} [{:.6}, {:.6}]\npairing_ok: {}\nreport: {}",
        res.n,
        res.p_hat_ltl,
        res.ci_ltl.0,
        res.ci_ltl.1,
        res.p_hat_mtl,
        res.ci_mtl.0,
        res.ci_mtl.1,
        res.pairing_ok,
        outputs.report.display()
    )
    .map_err(io)?;
    let code = if res.pairing_ok { exit::OK } else { exit::MTL_ONLY };
    Ok((code, outputs))
}
