//! Post-solution verification and report emission.
//!
//! A schedule coming out of the MILP is only as trustworthy as the linearized
//! dynamics inside it, so every credible outage is re-simulated here with the
//! exact RK4 oracle over a horizon *longer* than the embedded one (late
//! threshold crossings must not escape). Criterion flags are derived from the
//! oracle metrics alone; the Bernstein metrics ride along in each record so
//! reports can show the approximation gap, but they never decide pass/fail.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::case::CaseData;
use crate::dynamics::{
    bernstein_simulate, compute_metrics, reference_simulate, FreqMetrics, SegmentationPlan,
};
use crate::par;
use crate::uc::UcSolution;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("report requires at least one verification record")]
    NoRecords,
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, VerifyError>;

/// Oracle horizon: deliberately longer than any embedded segmentation plan.
pub const ORACLE_HORIZON: f64 = 30.0;
/// Oracle integration step.
pub const ORACLE_DT: f64 = 1e-3;

/// Thresholds and oracle settings for one verification pass.
#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// Frequency threshold (per-unit, negative).
    pub delta_f_th: f64,
    /// Maximum tolerated under-threshold duration (seconds).
    pub h_th: f64,
    /// Area threshold in per-unit·seconds; `None` when the run has no area
    /// criterion (base and nadir variants).
    pub a_th: Option<f64>,
    /// Segmentation used for the Bernstein-side metrics (the embedded model).
    pub plan: SegmentationPlan,
    pub horizon: f64,
    pub dt: f64,
}

impl VerifyConfig {
    pub fn from_case(case: &CaseData, a_th: Option<f64>) -> Self {
        Self {
            delta_f_th: case.delta_f_th,
            h_th: case.h_th,
            a_th,
            plan: case.segmentation(),
            horizon: ORACLE_HORIZON,
            dt: ORACLE_DT,
        }
    }
}

/// One credible outage checked against the oracle.
#[derive(Debug, Clone)]
pub struct VerificationRecord {
    pub hour: usize,
    pub lost: usize,
    pub unit_name: String,
    pub p_loss_mw: f64,
    pub oracle: FreqMetrics,
    pub bernstein: FreqMetrics,
    /// oracle nadir ≥ Δf_th
    pub nadir_ok: bool,
    /// oracle h_< ≤ h_th
    pub duration_ok: bool,
    /// oracle A̲-tail ≥ A_th (within a 5 % allowance); `None` when no area
    /// criterion is configured.
    pub area_ok: Option<bool>,
    /// The oracle failed or blew up; all flags are false.
    pub divergent: bool,
}

impl VerificationRecord {
    /// Every active criterion met and the oracle finished cleanly.
    pub fn pass(&self) -> bool {
        !self.divergent && self.nadir_ok && self.duration_ok && self.area_ok.unwrap_or(true)
    }
}

fn nan_metrics() -> FreqMetrics {
    FreqMetrics {
        nadir: f64::NAN,
        h_under: f64::NAN,
        a_min: f64::NAN,
        a_tail: f64::NAN,
        steady_state: f64::NAN,
    }
}

/// Simulate every credible outage of `solution` and flag it against the
/// configured criteria. Records come back in schedule order (hour-major);
/// the map fans out across outages when the `parallel` feature is on.
///
/// A divergent or invalid oracle run (e.g. an hour left with zero surviving
/// inertia) produces a record with NaN metrics and all flags false rather
/// than aborting the pass.
pub fn verify_solution(
    case: &CaseData,
    solution: &UcSolution,
    cfg: &VerifyConfig,
) -> Vec<VerificationRecord> {
    let outages = solution.credible_outages();
    par::map_ordered(&outages, |&(t, l)| {
        let sc = solution.scenario(case, t, l, cfg.horizon);
        let oracle = match reference_simulate(&sc, cfg.dt) {
            Ok(traj) => compute_metrics(&traj, cfg.delta_f_th),
            Err(_) => nan_metrics(),
        };
        let bernstein = match bernstein_simulate(&sc, &cfg.plan) {
            Ok(traj) => compute_metrics(&traj.sample(cfg.dt), cfg.delta_f_th),
            Err(_) => nan_metrics(),
        };
        let divergent = !(oracle.nadir.is_finite()
            && oracle.h_under.is_finite()
            && oracle.a_min.is_finite()
            && oracle.a_tail.is_finite());
        let (nadir_ok, duration_ok, area_ok) = if divergent {
            (false, false, cfg.a_th.map(|_| false))
        } else {
            (
                oracle.nadir >= cfg.delta_f_th - 1e-9,
                oracle.h_under <= cfg.h_th + 1e-9,
                cfg.a_th.map(|a| oracle.a_tail >= a - a.abs() * 0.05 - 1e-6),
            )
        };
        VerificationRecord {
            hour: t,
            lost: l,
            unit_name: case.units[l].name.clone(),
            p_loss_mw: solution.dispatch_mw[t][l],
            oracle,
            bernstein,
            nadir_ok,
            duration_ok,
            area_ok,
            divergent,
        }
    })
}

/// Cost and size of one solved variant, keyed by variant name in
/// [`emit_report`]'s cost map.
#[derive(Debug, Clone, Serialize)]
pub struct CostEntry {
    pub total_cost: f64,
    pub rows: usize,
    pub cols: usize,
    pub solve_seconds: Option<f64>,
}

#[derive(Serialize)]
struct PassRates {
    nadir: f64,
    duration: f64,
    /// `null` when no record carries an area criterion.
    area: Option<f64>,
    divergent: usize,
}

#[derive(Serialize)]
struct Summary<'a> {
    case: &'a str,
    records: usize,
    all_pass: bool,
    pass_rates: PassRates,
    /// 95th percentile of |A̲_Bernstein − A̲_oracle| across records where both
    /// are finite (per-unit·seconds); `null` when none are.
    gap_a_min_p95: Option<f64>,
    costs: &'a BTreeMap<String, CostEntry>,
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.6}")
    }
}

fn fmt_opt_bool(b: Option<bool>) -> &'static str {
    match b {
        Some(true) => "true",
        Some(false) => "false",
        None => "",
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| VerifyError::Io { path: path.clone(), source })?;
    Ok(path)
}

/// Nearest-rank 95th percentile of the finite per-record |A̲| gaps.
pub fn gap_a_min_p95(records: &[VerificationRecord]) -> Option<f64> {
    let mut gaps: Vec<f64> = records
        .iter()
        .map(|r| (r.bernstein.a_min - r.oracle.a_min).abs())
        .filter(|g| g.is_finite())
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((gaps.len() as f64) * 0.95).ceil() as usize;
    Some(gaps[idx.saturating_sub(1).min(gaps.len() - 1)])
}

/// Write the report files into `out_dir` (created if needed) and return their
/// paths in emission order:
///
/// * `summary.json` — costs/sizes per variant, record counts, pass rates, and
///   the Bernstein-vs-oracle A̲ gap percentile;
/// * `outages.csv` — one row per record, oracle and Bernstein metrics side by
///   side plus the criterion flags;
/// * `scatter_amin_hunder.csv` — the (A̲, h_<) plane per outage;
/// * `schedule.csv` — per-hour, per-unit commitment, dispatch and reserve.
///
/// Everything is written single-threaded in deterministic order; identical
/// inputs produce byte-identical files.
pub fn emit_report(
    case: &CaseData,
    solution: &UcSolution,
    records: &[VerificationRecord],
    costs: &BTreeMap<String, CostEntry>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(VerifyError::NoRecords);
    }
    fs::create_dir_all(out_dir).map_err(|source| VerifyError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;

    let n = records.len() as f64;
    let rate = |f: &dyn Fn(&VerificationRecord) -> bool| {
        records.iter().filter(|r| f(r)).count() as f64 / n
    };
    let area_rated: Vec<&VerificationRecord> =
        records.iter().filter(|r| r.area_ok.is_some()).collect();
    let summary = Summary {
        case: &case.name,
        records: records.len(),
        all_pass: records.iter().all(VerificationRecord::pass),
        pass_rates: PassRates {
            nadir: rate(&|r| r.nadir_ok),
            duration: rate(&|r| r.duration_ok),
            area: (!area_rated.is_empty()).then(|| {
                area_rated.iter().filter(|r| r.area_ok == Some(true)).count() as f64
                    / area_rated.len() as f64
            }),
            divergent: records.iter().filter(|r| r.divergent).count(),
        },
        gap_a_min_p95: gap_a_min_p95(records),
        costs,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');

    let mut outages = String::from(
        "hour,unit,unit_name,p_loss_mw,oracle_nadir,oracle_h_under,oracle_a_min,oracle_a_tail,\
         oracle_steady_state,bern_nadir,bern_h_under,bern_a_min,bern_a_tail,bern_steady_state,\
         nadir_ok,duration_ok,area_ok,divergent\n",
    );
    let mut scatter = String::from("hour,unit,a_min_pu_s,h_under_s\n");
    for r in records {
        let o = &r.oracle;
        let b = &r.bernstein;
        outages.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.hour,
            r.lost,
            r.unit_name,
            fmt(r.p_loss_mw),
            fmt(o.nadir),
            fmt(o.h_under),
            fmt(o.a_min),
            fmt(o.a_tail),
            fmt(o.steady_state),
            fmt(b.nadir),
            fmt(b.h_under),
            fmt(b.a_min),
            fmt(b.a_tail),
            fmt(b.steady_state),
            r.nadir_ok,
            r.duration_ok,
            fmt_opt_bool(r.area_ok),
            r.divergent,
        ));
        scatter.push_str(&format!(
            "{},{},{},{}\n",
            r.hour,
            r.lost,
            fmt(o.a_min),
            fmt(o.h_under)
        ));
    }

    let mut schedule = String::from("hour,unit,unit_name,committed,dispatch_mw,reserve_mw\n");
    for t in 0..solution.commitment.len() {
        for i in 0..solution.commitment[t].len() {
            schedule.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t,
                i,
                case.units[i].name,
                solution.commitment[t][i],
                fmt(solution.dispatch_mw[t][i]),
                fmt(solution.reserve_mw[t][i]),
            ));
        }
    }

    Ok(vec![
        write_file(out_dir, "summary.json", &json)?,
        write_file(out_dir, "outages.csv", &outages)?,
        write_file(out_dir, "scatter_amin_hunder.csv", &scatter)?,
        write_file(out_dir, "schedule.csv", &schedule)?,
    ])
}
