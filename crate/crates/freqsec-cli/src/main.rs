//! `freqsec` — frequency-secured unit commitment, end to end.
//!
//! Stages map one-to-one onto the library modules: `simulate` exercises the
//! dynamics oracle vs the Bernstein approximation on the case operating
//! point, `calibrate` fits the area threshold from labeled scenarios,
//! `solve` builds and solves a UC variant through the external MILP backend,
//! `verify` re-simulates every credible outage of a solved schedule, and
//! `report` adds the cross-variant cost table. `pipeline` chains them.
//!
//! Every stage owns a distinct nonzero exit code so shell drivers can tell
//! where a run died; a completed verification whose criterion flags fail is
//! its own code (9), distinct from any crash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use freqsec_core::calibration::{
    fit_threshold, generate_scenarios, label_scenarios, write_calibration, write_dataset,
    CalibrationResult, LABEL_DT, LABEL_HORIZON,
};
use freqsec_core::case::CaseData;
use freqsec_core::dynamics::{
    bernstein_simulate, compute_metrics, reference_simulate, SegmentationPlan,
};
use freqsec_core::milp::{locate_solver, solve, Model, SolveOptions};
use freqsec_core::uc::{
    add_area_constraint, add_frequency_dynamics, add_nadir_constraint, build_base_uc,
    contingency_set, extract_solution, SaturationMode, UcSolution,
};
use freqsec_core::verify::{emit_report, verify_solution, CostEntry, VerifyConfig};

const EXIT_USAGE: u8 = 2;
const EXIT_CASE: u8 = 3;
const EXIT_SIMULATE: u8 = 4;
const EXIT_CALIBRATE: u8 = 5;
const EXIT_SOLVE: u8 = 6;
const EXIT_VERIFY: u8 = 7;
const EXIT_REPORT: u8 = 8;
const EXIT_FLAGS: u8 = 9;

#[derive(Parser)]
#[command(
    name = "freqsec",
    version,
    about = "Frequency-secured unit commitment: Bernstein dynamics, calibration, MILP scheduling, oracle verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate each operating-point outage with the RK4 oracle and the
    /// Bernstein model; write the fidelity table
    Simulate(CommonArgs),
    /// Sample synthetic outage scenarios, label them with the oracle, and fit
    /// the area threshold for the target duration
    Calibrate(CalibrateArgs),
    /// Build and solve a UC variant; write the schedule JSON
    Solve(SolveArgs),
    /// Re-simulate every credible outage of a solved schedule and write the
    /// report files; fails (exit 9) if any criterion flag fails
    Verify(VerifyArgs),
    /// Like verify, but folds every solved variant found in --out into the
    /// summary cost table and never fails on criterion flags
    Report(VerifyArgs),
    /// calibrate (when --h-th is given) → solve → verify → report;
    /// exit 0 only if every verification flag passes
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Case file (JSON); defaults to the bundled island11 case
    #[arg(long)]
    case: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Segmentation preset (uniform15 | reduced); defaults to the case's plan
    #[arg(long)]
    plan: Option<String>,
    /// MILP solver binary (takes precedence over FREQSEC_SOLVER_BIN)
    #[arg(long)]
    solver: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of synthetic scenarios
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// RNG seed for scenario generation
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Target excursion duration (s); defaults to the case's h_th
    #[arg(long)]
    h_th: Option<f64>,
    /// Tolerated violation rate in the fit
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Base,
    Nadir,
    Area,
}

impl Variant {
    fn as_str(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Nadir => "nadir",
            Variant::Area => "area",
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Variant::Base)]
    variant: Variant,
    /// Area threshold in Hz·s (area variant only; exclusive with --h-th)
    #[arg(long)]
    a_th: Option<f64>,
    /// Target duration in seconds; uses the calibrated threshold from
    /// --out/calibration.json (area variant only; exclusive with --a-th)
    #[arg(long)]
    h_th: Option<f64>,
    /// Leading segments exempt from the area bound
    #[arg(long, default_value_t = 1)]
    skip: usize,
    /// Solver wall-clock limit in seconds; accepts the incumbent on timeout
    #[arg(long)]
    time_limit: Option<f64>,
    /// Relative MIP optimality gap passed to the solver
    #[arg(long)]
    mip_gap: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Variant::Base)]
    variant: Variant,
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Scenario count for the calibration leg
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// RNG seed for the calibration leg
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Tolerated violation rate in the calibration fit
    #[arg(long, default_value_t = 0.0)]
    tolerance: f64,
}

/// A solved variant on disk: everything verify/report need to re-check it.
#[derive(serde::Serialize, serde::Deserialize)]
struct ScheduleFile {
    case: String,
    variant: String,
    plan: Vec<(f64, usize)>,
    /// Area threshold the solve enforced (per-unit·seconds), if any.
    a_th_pu_s: Option<f64>,
    total_cost: f64,
    rows: usize,
    cols: usize,
    solve_seconds: f64,
    solution: UcSolution,
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate(args) => {
            let case = match load_case(&args) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CASE, e),
            };
            exit_on(EXIT_SIMULATE, run_simulate(&case, &args))
        }
        Command::Calibrate(args) => {
            let case = match load_case(&args.common) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CASE, e),
            };
            exit_on(EXIT_CALIBRATE, run_calibrate(&case, &args).map(|_| ()))
        }
        Command::Solve(args) => {
            if let Err(msg) = validate_variant_flags(args.variant, args.a_th, args.h_th) {
                return usage(&msg);
            }
            let case = match load_case(&args.common) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CASE, e),
            };
            let a_th_pu = match resolve_area_threshold(&case, &args) {
                Ok(v) => v,
                Err(e) => return fail(EXIT_SOLVE, e),
            };
            exit_on(EXIT_SOLVE, run_solve(&case, &args, a_th_pu).map(|_| ()))
        }
        Command::Verify(args) => {
            let case = match load_case(&args.common) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CASE, e),
            };
            match run_verify(&case, &args.common, args.variant.as_str(), false) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(EXIT_FLAGS),
                Err(e) => fail(EXIT_VERIFY, e),
            }
        }
        Command::Report(args) => {
            let case = match load_case(&args.common) {
                Ok(c) => c,
                Err(e) => return fail(EXIT_CASE, e),
            };
            exit_on(EXIT_REPORT, run_verify(&case, &args.common, args.variant.as_str(), true).map(|_| ()))
        }
        Command::Pipeline(args) => run_pipeline(&args),
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn fail(code: u8, err: anyhow::Error) -> ExitCode {
    eprintln!("error: {err:#}");
    ExitCode::from(code)
}

fn exit_on(code: u8, result: anyhow::Result<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(code, e),
    }
}

fn validate_variant_flags(variant: Variant, a_th: Option<f64>, h_th: Option<f64>) -> Result<(), String> {
    match variant {
        Variant::Area => {
            if a_th.is_some() == h_th.is_some() {
                Err("--variant area requires exactly one of --a-th or --h-th".into())
            } else {
                Ok(())
            }
        }
        _ => {
            if a_th.is_some() {
                Err("--a-th only applies to --variant area".into())
            } else if h_th.is_some() {
                Err("--h-th only applies to --variant area (or the calibrate command)".into())
            } else {
                Ok(())
            }
        }
    }
}

fn load_case(common: &CommonArgs) -> anyhow::Result<CaseData> {
    if let Some(bin) = &common.solver {
        std::env::set_var("FREQSEC_SOLVER_BIN", bin);
    }
    match &common.case {
        None => Ok(CaseData::island11()),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            CaseData::from_json(&text).with_context(|| format!("loading {}", path.display()))
        }
    }
}

fn resolve_plan(common: &CommonArgs, case: &CaseData) -> anyhow::Result<SegmentationPlan> {
    match &common.plan {
        None => Ok(case.segmentation()),
        Some(name) => Ok(SegmentationPlan::from_name(name)?),
    }
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.6}")
    }
}

fn run_simulate(case: &CaseData, common: &CommonArgs) -> anyhow::Result<()> {
    let op = case
        .operating_point
        .as_ref()
        .ok_or_else(|| anyhow!("case '{}' has no operating_point to simulate from", case.name))?;
    let plan = resolve_plan(common, case)?;
    let dt = 1e-3;
    let demand: f64 = op.iter().sum();

    let mut csv = String::from(
        "unit,name,p_loss_mw,max_abs_gap_pu,gap_pct_of_nadir,oracle_nadir,bern_nadir,\
         oracle_h_under,bern_h_under,oracle_a_min,bern_a_min\n",
    );
    let mut worst_pct = 0.0f64;
    for l in 0..case.units.len() {
        if op[l] <= 1e-9 {
            continue;
        }
        let survivors: Vec<(usize, f64)> = (0..case.units.len())
            .filter(|&i| i != l && op[i] > 1e-9)
            .map(|i| (i, case.units[i].p_max - op[i]))
            .collect();
        let sc = case.outage_scenario(&survivors, op[l], demand, plan.duration());
        let oracle = reference_simulate(&sc, dt)
            .with_context(|| format!("oracle diverged losing unit {l} ({})", case.units[l].name))?;
        let bern = bernstein_simulate(&sc, &plan)?.sample(dt);

        let n = oracle.delta_f.len().min(bern.delta_f.len());
        let gap = (0..n)
            .map(|k| (oracle.delta_f[k] - bern.delta_f[k]).abs())
            .fold(0.0f64, f64::max);
        let om = compute_metrics(&oracle, case.delta_f_th);
        let bm = compute_metrics(&bern, case.delta_f_th);
        let pct = 100.0 * gap / om.nadir.abs().max(1e-12);
        worst_pct = worst_pct.max(pct);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            l,
            case.units[l].name,
            fmt(op[l]),
            fmt(gap),
            fmt(pct),
            fmt(om.nadir),
            fmt(bm.nadir),
            fmt(om.h_under),
            fmt(bm.h_under),
            fmt(om.a_min),
            fmt(bm.a_min),
        ));
    }

    fs::create_dir_all(&common.out)?;
    let path = common.out.join("fidelity.csv");
    fs::write(&path, &csv)?;
    println!(
        "wrote {} (worst Bernstein gap {:.2}% of oracle nadir over {:.0}s)",
        path.display(),
        worst_pct,
        plan.duration()
    );
    Ok(())
}

fn run_calibrate(case: &CaseData, args: &CalibrateArgs) -> anyhow::Result<CalibrationResult> {
    let h_th = args.h_th.unwrap_or(case.h_th);
    let samples = generate_scenarios(case, args.samples, args.seed)?;
    let outcome = label_scenarios(case, &samples, case.delta_f_th, LABEL_HORIZON, LABEL_DT);
    let result = fit_threshold(&outcome.labeled, h_th, args.tolerance)?;

    fs::create_dir_all(&args.common.out)?;
    write_dataset(&args.common.out.join("dataset.csv"), case, &outcome.labeled)?;
    write_calibration(&args.common.out.join("calibration.json"), &result)?;
    println!(
        "calibrated A_th = {:.6} pu·s ({:.4} Hz·s) for h_th = {h_th}s on {} samples ({} divergent), violation rate {:.4}",
        result.a_th,
        result.a_th * case.f_base,
        result.n,
        outcome.divergent,
        result.violation_rate
    );
    Ok(result)
}

/// Hz·s from --a-th, or the stored calibration for --h-th (solve does not
/// recompute; run `calibrate` or `pipeline` first).
fn resolve_area_threshold(case: &CaseData, args: &SolveArgs) -> anyhow::Result<Option<f64>> {
    if args.variant != Variant::Area {
        return Ok(None);
    }
    if let Some(hz_s) = args.a_th {
        return Ok(Some(case.area_from_hz_s(hz_s)));
    }
    let h_th = args.h_th.expect("clap-validated");
    let path = args.common.out.join("calibration.json");
    let text = fs::read_to_string(&path).with_context(|| {
        format!(
            "no calibration at {} — run `freqsec calibrate` first or use `pipeline`",
            path.display()
        )
    })?;
    let cal: CalibrationResult = serde_json::from_str(&text)?;
    if (cal.h_th - h_th).abs() > 1e-9 {
        bail!(
            "calibration at {} targets h_th = {}s, not the requested {}s",
            path.display(),
            cal.h_th,
            h_th
        );
    }
    Ok(Some(cal.a_th))
}

fn build_variant(
    case: &CaseData,
    variant: Variant,
    a_th_pu: Option<f64>,
    plan: &SegmentationPlan,
    skip: usize,
) -> anyhow::Result<Model> {
    let (mut model, vars) = build_base_uc(case)?;
    if variant == Variant::Base {
        return Ok(model);
    }
    let pairs = contingency_set(case);
    let dynamics =
        add_frequency_dynamics(&mut model, case, &vars, &pairs, plan, SaturationMode::Relaxed)?;
    match variant {
        Variant::Base => unreachable!(),
        Variant::Nadir => add_nadir_constraint(&mut model, &dynamics, case.delta_f_th)?,
        Variant::Area => {
            let a_th = a_th_pu.expect("area variant resolved a threshold");
            add_area_constraint(&mut model, &dynamics, case.delta_f_th, a_th, skip)?;
        }
    }
    Ok(model)
}

fn run_solve(case: &CaseData, args: &SolveArgs, a_th_pu: Option<f64>) -> anyhow::Result<ScheduleFile> {
    let plan = resolve_plan(&args.common, case)?;
    let t0 = Instant::now();
    let model = build_variant(case, args.variant, a_th_pu, &plan, args.skip)?;
    let stats = model.stats()?;
    let spec = locate_solver()?;
    let opts = SolveOptions {
        time_limit: args.time_limit,
        mip_gap: args.mip_gap,
        accept_feasible: args.time_limit.is_some(),
    };
    let res = solve(&model, &spec, &opts)?;
    let solution = extract_solution(&model, &res, case)?;

    let file = ScheduleFile {
        case: case.name.clone(),
        variant: args.variant.as_str().to_string(),
        plan: plan.segments.clone(),
        a_th_pu_s: a_th_pu,
        total_cost: solution.total_cost,
        rows: stats.rows,
        cols: stats.cols,
        solve_seconds: t0.elapsed().as_secs_f64(),
        solution,
    };
    fs::create_dir_all(&args.common.out)?;
    let path = args.common.out.join(format!("schedule_{}.json", file.variant));
    let mut json = serde_json::to_string_pretty(&file)?;
    json.push('\n');
    fs::write(&path, json)?;
    println!(
        "solved {} on '{}': cost {:.3}, {} rows × {} cols, {:.1}s → {}",
        file.variant,
        case.name,
        file.total_cost,
        file.rows,
        file.cols,
        file.solve_seconds,
        path.display()
    );
    Ok(file)
}

fn read_schedule(out: &Path, variant: &str) -> anyhow::Result<ScheduleFile> {
    let path = out.join(format!("schedule_{variant}.json"));
    let text = fs::read_to_string(&path).with_context(|| {
        format!("no schedule at {} — run `freqsec solve` first", path.display())
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn cost_entry(sf: &ScheduleFile) -> CostEntry {
    CostEntry {
        total_cost: sf.total_cost,
        rows: sf.rows,
        cols: sf.cols,
        solve_seconds: Some(sf.solve_seconds),
    }
}

/// Verify `variant`'s schedule and emit its report under `out/<variant>/`.
/// With `all_costs`, every `schedule_*.json` in `out` joins the summary's
/// cost table. Returns whether every criterion flag passed.
fn run_verify(case: &CaseData, common: &CommonArgs, variant: &str, all_costs: bool) -> anyhow::Result<bool> {
    let sf = read_schedule(&common.out, variant)?;
    if sf.case != case.name {
        bail!("schedule was solved on case '{}', not '{}'", sf.case, case.name);
    }
    let mut cfg = VerifyConfig::from_case(case, sf.a_th_pu_s);
    cfg.plan = SegmentationPlan::new(sf.plan.clone())?;
    let records = verify_solution(case, &sf.solution, &cfg);

    let mut costs = BTreeMap::new();
    if all_costs {
        for entry in fs::read_dir(&common.out)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(v) = name.strip_prefix("schedule_").and_then(|n| n.strip_suffix(".json")) {
                let other = read_schedule(&common.out, v)?;
                costs.insert(other.variant.clone(), cost_entry(&other));
            }
        }
    } else {
        costs.insert(sf.variant.clone(), cost_entry(&sf));
    }

    let report_dir = common.out.join(variant);
    emit_report(case, &sf.solution, &records, &costs, &report_dir)?;
    let passed = records.iter().filter(|r| r.pass()).count();
    let all_pass = passed == records.len();
    println!(
        "verified {}: {}/{} outages pass (nadir/duration{}) → {}",
        variant,
        passed,
        records.len(),
        if sf.a_th_pu_s.is_some() { "/area" } else { "" },
        report_dir.display()
    );
    Ok(all_pass)
}

fn run_pipeline(args: &PipelineArgs) -> ExitCode {
    let solve_args = &args.solve;
    if let Err(msg) = validate_variant_flags(solve_args.variant, solve_args.a_th, solve_args.h_th) {
        return usage(&msg);
    }
    let case = match load_case(&solve_args.common) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CASE, e),
    };

    let a_th_pu = if solve_args.variant == Variant::Area {
        if let Some(hz_s) = solve_args.a_th {
            Some(case.area_from_hz_s(hz_s))
        } else {
            let cal_args = CalibrateArgs {
                common: CommonArgs {
                    case: solve_args.common.case.clone(),
                    out: solve_args.common.out.clone(),
                    plan: solve_args.common.plan.clone(),
                    solver: solve_args.common.solver.clone(),
                },
                samples: args.samples,
                seed: args.seed,
                h_th: solve_args.h_th,
                tolerance: args.tolerance,
            };
            match run_calibrate(&case, &cal_args) {
                Ok(result) => Some(result.a_th),
                Err(e) => return fail(EXIT_CALIBRATE, e),
            }
        }
    } else {
        None
    };

    if let Err(e) = run_solve(&case, solve_args, a_th_pu) {
        return fail(EXIT_SOLVE, e);
    }
    match run_verify(&case, &solve_args.common, solve_args.variant.as_str(), true) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("pipeline: verification flags failed");
            ExitCode::from(EXIT_FLAGS)
        }
        Err(e) => fail(EXIT_VERIFY, e),
    }
}
