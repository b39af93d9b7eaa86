//! Synthetic outage datasets and the data-driven area threshold.
//!
//! The pipeline is: [`generate_scenarios`] samples random-but-feasible
//! operating points from a case (load level, committed subset, balanced
//! dispatch, headroom reserves, one lost unit); [`label_scenarios`] runs the
//! exact ODE oracle on every sample and extracts the area drawdown `A̲`
//! (`a_min`, pu·s) and the under-threshold duration `h_<` (`h_under`, s);
//! [`fit_threshold`] scans a grid of candidate area thresholds and returns
//! the smallest one whose conditional violation rate meets the tolerance.
//!
//! The fitted A_th is what the area-constrained UC variant enforces: samples
//! kept by the constraint (`A̲ ≥ A_th`) should exceed the target duration
//! `h_th` at most a `tolerance` fraction of the time. All areas here are
//! per-unit·s on the case bases; the case-file `a_th` (Hz·s) is converted at
//! the boundary by the callers that bridge the two.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::CaseData;
use crate::dynamics::{compute_metrics, reference_simulate, OutageScenario};
use crate::par;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("cannot generate feasible commitments: {0}")]
    InfeasibleCase(String),
    #[error("no threshold meets tolerance {tolerance}: best achievable violation rate {best_rate:.4}")]
    NoFeasibleThreshold { tolerance: f64, best_rate: f64 },
    #[error("empty labeled dataset")]
    EmptyDataset,
    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, CalibError>;

/// One sampled operating point plus the unit lost in the contingency.
/// Powers are MW; `dispatch_mw`/`reserve_mw` align with `committed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSample {
    pub id: usize,
    /// Served load, MW.
    pub load_mw: f64,
    /// Committed unit indices, ascending.
    pub committed: Vec<usize>,
    pub dispatch_mw: Vec<f64>,
    /// Reserve = headroom P_max − p for each committed unit.
    pub reserve_mw: Vec<f64>,
    /// Lost unit (an element of `committed`).
    pub lost_unit: usize,
}

impl ScenarioSample {
    pub fn p_loss_mw(&self) -> f64 {
        let pos = self
            .committed
            .iter()
            .position(|&u| u == self.lost_unit)
            .expect("lost unit is committed");
        self.dispatch_mw[pos]
    }

    /// Surviving `(unit, reserve MW)` pairs, i.e. committed minus the lost.
    pub fn survivors(&self) -> Vec<(usize, f64)> {
        self.committed
            .iter()
            .zip(&self.reserve_mw)
            .filter(|&(&u, _)| u != self.lost_unit)
            .map(|(&u, &rho)| (u, rho))
            .collect()
    }

    /// The per-unit outage scenario this sample describes.
    pub fn scenario(&self, case: &CaseData, horizon: f64) -> OutageScenario {
        case.outage_scenario(&self.survivors(), self.p_loss_mw(), self.load_mw, horizon)
    }
}

/// A sample with its oracle metrics: area drawdown `A̲` (pu·s, negative iff
/// the trajectory crossed the threshold) and under-threshold duration (s).
#[derive(Debug, Clone, Serialize)]
pub struct LabeledSample {
    pub sample: ScenarioSample,
    pub a_min: f64,
    pub h_under: f64,
}

/// Outcome of a labeling run; divergent simulations are dropped, counted.
#[derive(Debug, Clone)]
pub struct LabelingOutcome {
    pub labeled: Vec<LabeledSample>,
    pub divergent: usize,
}

/// Fitted threshold and the evidence behind it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationResult {
    /// Target maximum under-threshold duration, s.
    pub h_th: f64,
    /// Selected area threshold, pu·s.
    pub a_th: f64,
    pub tolerance: f64,
    /// Fraction of samples with `a_min ≥ a_th` whose `h_under > h_th`.
    pub violation_rate: f64,
    /// Labeled dataset size the fit used.
    pub n: usize,
}

/// Sample `count` operating points from `case`, deterministically under
/// `seed`. Load is uniform in [0.6, 1.0]·peak; commitment is a random greedy
/// fill until capacity covers the load (plus random extra units); dispatch
/// spreads load − ΣP_min proportionally to headroom; reserves are headroom;
/// the lost unit is uniform among committed.
pub fn generate_scenarios(case: &CaseData, count: usize, seed: u64) -> Result<Vec<ScenarioSample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let peak = case.peak_demand();
    let mut out = Vec::with_capacity(count);
    for id in 0..count {
        let load_mw = rng.gen_range(0.6..=1.0) * peak;
        let committed = sample_commitment(case, load_mw, &mut rng)?;
        let p_min: f64 = committed.iter().map(|&u| case.units[u].p_min).sum();
        let headroom: f64 = committed
            .iter()
            .map(|&u| case.units[u].p_max - case.units[u].p_min)
            .sum();
        let spread = load_mw - p_min;
        let dispatch_mw: Vec<f64> = committed
            .iter()
            .map(|&u| {
                let unit = &case.units[u];
                unit.p_min + spread * (unit.p_max - unit.p_min) / headroom
            })
            .collect();
        let reserve_mw: Vec<f64> = committed
            .iter()
            .zip(&dispatch_mw)
            .map(|(&u, &p)| case.units[u].p_max - p)
            .collect();
        let lost_unit = committed[rng.gen_range(0..committed.len())];
        out.push(ScenarioSample {
            id,
            load_mw,
            committed,
            dispatch_mw,
            reserve_mw,
            lost_unit,
        });
    }
    Ok(out)
}

/// Random feasible greedy fill: commit shuffled units until ΣP_max covers
/// the load, admit extras with probability 0.3, and keep ΣP_min ≤ load.
fn sample_commitment(case: &CaseData, load_mw: f64, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    'attempt: for _ in 0..100 {
        let mut order: Vec<usize> = (0..case.units.len()).collect();
        order.shuffle(rng);
        let mut committed = Vec::new();
        let (mut cap, mut floor) = (0.0, 0.0);
        for &u in &order {
            let covered = cap >= load_mw;
            if covered && !rng.gen_bool(0.3) {
                continue;
            }
            if floor + case.units[u].p_min > load_mw {
                if covered {
                    continue;
                }
                continue 'attempt;
            }
            committed.push(u);
            cap += case.units[u].p_max;
            floor += case.units[u].p_min;
        }
        if cap >= load_mw {
            committed.sort_unstable();
            return Ok(committed);
        }
    }
    Err(CalibError::InfeasibleCase(format!(
        "no feasible commitment found for load {load_mw:.2} MW"
    )))
}

fn label_one(
    case: &CaseData,
    sample: &ScenarioSample,
    delta_f_th: f64,
    horizon: f64,
    dt: f64,
) -> std::result::Result<LabeledSample, crate::dynamics::DynamicsError> {
    let sc = sample.scenario(case, horizon);
    reference_simulate(&sc, dt).map(|traj| {
        let m = compute_metrics(&traj, delta_f_th);
        LabeledSample {
            sample: sample.clone(),
            a_min: m.a_min,
            h_under: m.h_under,
        }
    })
}

fn collect_labels(
    results: Vec<std::result::Result<LabeledSample, crate::dynamics::DynamicsError>>,
) -> LabelingOutcome {
    let mut labeled = Vec::with_capacity(results.len());
    let mut divergent = 0;
    for r in results {
        match r {
            Ok(l) => labeled.push(l),
            Err(_) => divergent += 1,
        }
    }
    LabelingOutcome { labeled, divergent }
}

/// Label every sample with oracle metrics, in input order, in parallel.
/// Samples whose simulation diverges are dropped and counted.
pub fn label_scenarios(
    case: &CaseData,
    samples: &[ScenarioSample],
    delta_f_th: f64,
    horizon: f64,
    dt: f64,
) -> LabelingOutcome {
    collect_labels(par::map_ordered(samples, |sample| {
        label_one(case, sample, delta_f_th, horizon, dt)
    }))
}

/// Sequential twin of [`label_scenarios`]: identical results and order, kept
/// unconditionally so the bench suite can compare both paths in one build.
pub fn label_scenarios_seq(
    case: &CaseData,
    samples: &[ScenarioSample],
    delta_f_th: f64,
    horizon: f64,
    dt: f64,
) -> LabelingOutcome {
    collect_labels(par::map_ordered_seq(samples, |sample| {
        label_one(case, sample, delta_f_th, horizon, dt)
    }))
}

/// Default oracle resolution for labeling runs.
pub const LABEL_DT: f64 = 2e-3;
/// Default labeling horizon, long enough to catch late crossings.
pub const LABEL_HORIZON: f64 = 30.0;

/// Grid step of the threshold scan, pu·s.
pub const FIT_GRID_STEP: f64 = 0.01;

/// Smallest grid threshold whose conditional violation rate meets the
/// tolerance (see [`fit_threshold_with_step`]; step [`FIT_GRID_STEP`]).
pub fn fit_threshold(labeled: &[LabeledSample], h_th: f64, tolerance: f64) -> Result<CalibrationResult> {
    fit_threshold_with_step(labeled, h_th, tolerance, FIT_GRID_STEP)
}

/// Scan candidates `k·step` from below the smallest observed `a_min` to the
/// largest, ascending, and return the first whose conditional violation rate
/// — the fraction of samples with `a_min ≥ candidate` that have
/// `h_under > h_th` — is ≤ `tolerance`. Candidates that keep no samples are
/// skipped (a threshold above all evidence certifies nothing); if none
/// qualifies the error reports the best achievable rate.
pub fn fit_threshold_with_step(
    labeled: &[LabeledSample],
    h_th: f64,
    tolerance: f64,
    step: f64,
) -> Result<CalibrationResult> {
    if labeled.is_empty() {
        return Err(CalibError::EmptyDataset);
    }
    assert!(step > 0.0, "grid step must be positive");
    // Sort ascending by a_min; suffix counts make each candidate O(log n).
    let mut by_area: Vec<(f64, bool)> = labeled
        .iter()
        .map(|l| (l.a_min, l.h_under > h_th))
        .collect();
    by_area.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = by_area.len();
    let mut violations_from = vec![0usize; n + 1];
    for i in (0..n).rev() {
        violations_from[i] = violations_from[i + 1] + usize::from(by_area[i].1);
    }
    let lo = (by_area[0].0 / step).floor() as i64;
    let hi = (by_area[n - 1].0 / step).ceil() as i64;
    let mut best_rate = f64::INFINITY;
    for k in lo..=hi {
        let candidate = k as f64 * step;
        // First index with a_min ≥ candidate (tiny slack so a sample exactly
        // on the grid line stays in its own candidate's set).
        let start = by_area.partition_point(|&(a, _)| a < candidate - 1e-12);
        let kept = n - start;
        if kept == 0 {
            continue;
        }
        let rate = violations_from[start] as f64 / kept as f64;
        best_rate = best_rate.min(rate);
        if rate <= tolerance {
            return Ok(CalibrationResult {
                h_th,
                a_th: candidate,
                tolerance,
                violation_rate: rate,
                n,
            });
        }
    }
    Err(CalibError::NoFeasibleThreshold {
        tolerance,
        best_rate,
    })
}

/// Dataset CSV (one row per labeled sample) with the fixed column set.
/// Deterministic bytes for a given input.
pub fn dataset_csv(case: &CaseData, labeled: &[LabeledSample]) -> String {
    let mut out = String::from(
        "sample_id, load_pu, lost_unit, p_loss_pu, h_sys_s, sum_reserve_pu, a_min, h_under_s\n",
    );
    for l in labeled {
        let s = &l.sample;
        let survivors = s.survivors();
        let h_sys: f64 = survivors
            .iter()
            .map(|&(u, _)| case.units[u].h * case.units[u].p_max / case.s_base)
            .sum();
        let sum_reserve: f64 = survivors.iter().map(|&(_, rho)| rho).sum::<f64>() / case.s_base;
        out.push_str(&format!(
            "{}, {:.6}, {}, {:.6}, {:.6}, {:.6}, {:.6}, {:.6}\n",
            s.id,
            s.load_mw / case.s_base,
            s.lost_unit,
            s.p_loss_mw() / case.s_base,
            h_sys,
            sum_reserve,
            l.a_min,
            l.h_under,
        ));
    }
    out
}

/// Write the dataset CSV plus a JSON sidecar with the full scenarios.
pub fn write_dataset(path: &Path, case: &CaseData, labeled: &[LabeledSample]) -> Result<()> {
    let io_err = |p: &Path, source| CalibError::Io {
        path: p.display().to_string(),
        source,
    };
    std::fs::write(path, dataset_csv(case, labeled)).map_err(|e| io_err(path, e))?;
    let sidecar = path.with_extension("scenarios.json");
    let samples: Vec<&ScenarioSample> = labeled.iter().map(|l| &l.sample).collect();
    let body = serde_json::to_string_pretty(&samples).expect("samples serialize");
    std::fs::write(&sidecar, body).map_err(|e| io_err(&sidecar, e))?;
    Ok(())
}

/// Calibration result JSON: `{h_th, a_th, tolerance, violation_rate, n}`.
pub fn write_calibration(path: &Path, result: &CalibrationResult) -> Result<()> {
    let body = serde_json::to_string_pretty(result).expect("result serializes");
    std::fs::write(path, body).map_err(|source| CalibError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn island() -> CaseData {
        CaseData::island11()
    }

    #[test]
    fn count_zero_gives_empty_list() {
        let samples = generate_scenarios(&island(), 0, 1).unwrap();
        assert!(samples.is_empty());
    }

    #[test]
    fn same_seed_same_samples() {
        let case = island();
        let a = generate_scenarios(&case, 50, 42).unwrap();
        let b = generate_scenarios(&case, 50, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_scenarios(&case, 50, 43).unwrap();
        assert_ne!(a, c, "different seeds should differ");
    }

    #[test]
    fn samples_satisfy_scenario_invariants() {
        let case = island();
        let samples = generate_scenarios(&case, 1000, 7).unwrap();
        assert_eq!(samples.len(), 1000);
        for s in &samples {
            // Load in the sampled band.
            let peak = case.peak_demand();
            assert!(s.load_mw >= 0.6 * peak - 1e-9 && s.load_mw <= peak + 1e-9);
            // Committed, sorted, dispatch balanced and within limits.
            assert!(!s.committed.is_empty());
            assert!(s.committed.windows(2).all(|w| w[0] < w[1]));
            let total: f64 = s.dispatch_mw.iter().sum();
            assert!((total - s.load_mw).abs() < 1e-6, "unbalanced dispatch");
            for (&u, (&p, &rho)) in s.committed.iter().zip(s.dispatch_mw.iter().zip(&s.reserve_mw)) {
                let unit = &case.units[u];
                assert!(p >= unit.p_min - 1e-9 && p <= unit.p_max + 1e-9);
                assert!((rho - (unit.p_max - p)).abs() < 1e-9, "reserve is headroom");
            }
            // Lost unit committed with positive dispatch; survivors hold
            // nonnegative aggregate reserve.
            assert!(s.committed.contains(&s.lost_unit));
            assert!(s.p_loss_mw() > 0.0);
            let sum_rho: f64 = s.survivors().iter().map(|&(_, r)| r).sum();
            assert!(sum_rho >= 0.0);
            // Well-formed per-unit scenario.
            let sc = s.scenario(&case, 5.0);
            assert!(sc.h_sys > 0.0);
            assert!(sc.p_loss > 0.0);
        }
    }

    #[test]
    fn zero_loss_label_is_pure_buildup() {
        let case = island();
        // Hand-built sample: lost unit dispatched at zero.
        let sample = ScenarioSample {
            id: 0,
            load_mw: 20.0,
            committed: vec![7, 8, 10],
            dispatch_mw: vec![9.0, 11.0, 0.0],
            reserve_mw: vec![2.5, 0.5, 21.0],
            lost_unit: 10,
        };
        let out = label_scenarios(&case, &[sample], case.delta_f_th, 30.0, 2e-3);
        assert_eq!(out.divergent, 0);
        let l = &out.labeled[0];
        // Δf ≡ 0: the area ramps at −Δf_th forever, so the drawdown statistic
        // is the full accumulated area.
        assert!((l.a_min - (-case.delta_f_th * 30.0)).abs() < 1e-9, "a_min = {}", l.a_min);
        assert_eq!(l.h_under, 0.0);
    }

    #[test]
    fn labels_preserve_order_and_sign_invariant() {
        let case = island();
        let samples = generate_scenarios(&case, 300, 11).unwrap();
        let out = label_scenarios(&case, &samples, case.delta_f_th, LABEL_HORIZON, LABEL_DT);
        assert_eq!(out.divergent, 0, "island samples should not diverge");
        assert_eq!(out.labeled.len(), samples.len());
        for (l, s) in out.labeled.iter().zip(&samples) {
            assert_eq!(l.sample.id, s.id, "order must be preserved");
            if l.a_min >= 0.0 {
                assert_eq!(l.h_under, 0.0, "sample {}: A̲ ≥ 0 must imply h_< = 0", s.id);
            }
            if l.h_under > 0.0 {
                assert!(l.a_min < 0.0, "sample {}: crossing must show as drawdown", s.id);
            }
        }
    }

    #[test]
    fn decile_medians_of_duration_are_nonincreasing() {
        let case = island();
        let samples = generate_scenarios(&case, 2000, 3).unwrap();
        let out = label_scenarios(&case, &samples, case.delta_f_th, LABEL_HORIZON, LABEL_DT);
        let mut pairs: Vec<(f64, f64)> = out.labeled.iter().map(|l| (l.a_min, l.h_under)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let medians: Vec<f64> = pairs
            .chunks(pairs.len().div_ceil(10))
            .map(|chunk| {
                let mut h: Vec<f64> = chunk.iter().map(|&(_, h)| h).collect();
                h.sort_by(f64::total_cmp);
                h[h.len() / 2]
            })
            .collect();
        for w in medians.windows(2) {
            assert!(
                w[0] >= w[1] - 1e-9,
                "decile medians must be nonincreasing: {medians:?}"
            );
        }
    }

    fn labeled_from(pairs: &[(f64, f64)]) -> Vec<LabeledSample> {
        pairs
            .iter()
            .enumerate()
            .map(|(id, &(a_min, h_under))| LabeledSample {
                sample: ScenarioSample {
                    id,
                    load_mw: 30.0,
                    committed: vec![10],
                    dispatch_mw: vec![10.0],
                    reserve_mw: vec![11.0],
                    lost_unit: 10,
                },
                a_min,
                h_under,
            })
            .collect()
    }

    #[test]
    fn fit_zero_tolerance_steps_past_worst_violator() {
        // Violators up to a_min = 0.18; safe mass above.
        let labeled = labeled_from(&[
            (-0.5, 9.0),
            (-0.3, 6.0),
            (0.18, 4.0),
            (0.25, 0.0),
            (0.5, 0.0),
            (1.0, 0.0),
        ]);
        let fit = fit_threshold(&labeled, 3.0, 0.0).unwrap();
        assert!((fit.a_th - 0.19).abs() < 1e-12, "a_th = {}", fit.a_th);
        assert_eq!(fit.violation_rate, 0.0);
        assert_eq!(fit.n, 6);
        // Reported rate matches a recount at the returned threshold.
        let kept: Vec<_> = labeled.iter().filter(|l| l.a_min >= fit.a_th).collect();
        let recount = kept.iter().filter(|l| l.h_under > 3.0).count() as f64 / kept.len() as f64;
        assert_eq!(recount, fit.violation_rate);
    }

    #[test]
    fn fit_all_safe_returns_grid_minimum() {
        let labeled = labeled_from(&[(-0.73, 0.0), (-0.2, 1.0), (0.4, 2.5)]);
        let fit = fit_threshold(&labeled, 3.0, 0.0).unwrap();
        // Grid minimum: the first multiple of 0.01 at or below −0.73.
        assert!((fit.a_th - (-0.73)).abs() < 1e-12, "a_th = {}", fit.a_th);
        assert_eq!(fit.violation_rate, 0.0);
    }

    #[test]
    fn fit_with_positive_tolerance_admits_stragglers() {
        // 1 violator among 10 kept at candidate 0.0 → 10% rate.
        let mut pairs = vec![(0.05, 5.0)];
        pairs.extend((1..10).map(|k| (0.1 * k as f64, 0.0)));
        let labeled = labeled_from(&pairs);
        let fit = fit_threshold(&labeled, 3.0, 0.15).unwrap();
        assert!(fit.a_th <= 0.05, "tolerant fit should not chase the violator");
        assert!(fit.violation_rate <= 0.15);
        let strict = fit_threshold(&labeled, 3.0, 0.0).unwrap();
        assert!(strict.a_th > 0.05 && strict.a_th <= 0.06 + 1e-12);
    }

    #[test]
    fn fit_without_feasible_threshold_reports_best_rate() {
        // The top-a_min sample itself violates: every nonempty candidate set
        // contains it.
        let labeled = labeled_from(&[(-0.1, 0.0), (0.3, 8.0)]);
        match fit_threshold(&labeled, 3.0, 0.0) {
            Err(CalibError::NoFeasibleThreshold { best_rate, .. }) => {
                assert!((best_rate - 0.5).abs() < 1e-12, "best rate {best_rate}");
            }
            other => panic!("expected NoFeasibleThreshold, got {other:?}"),
        }
        assert!(matches!(
            fit_threshold(&[], 3.0, 0.0),
            Err(CalibError::EmptyDataset)
        ));
    }

    #[test]
    fn fit_threshold_weakly_decreases_in_h_th() {
        let case = island();
        let samples = generate_scenarios(&case, 1000, 19).unwrap();
        let out = label_scenarios(&case, &samples, case.delta_f_th, LABEL_HORIZON, LABEL_DT);
        let mut last = f64::INFINITY;
        for h_th in [0.5, 1.0, 2.0, 3.0, 5.0, 8.0] {
            let fit = fit_threshold(&out.labeled, h_th, 0.0).unwrap();
            assert!(
                fit.a_th <= last + 1e-12,
                "a_th must weakly decrease as h_th rises: {} after {last} (h_th {h_th})",
                fit.a_th
            );
            last = fit.a_th;
        }
    }

    #[test]
    fn label_matches_halved_dt() {
        let case = island();
        let samples = generate_scenarios(&case, 20, 23).unwrap();
        let coarse = label_scenarios(&case, &samples, case.delta_f_th, 20.0, 2e-3);
        let fine = label_scenarios(&case, &samples, case.delta_f_th, 20.0, 1e-3);
        for (c, f) in coarse.labeled.iter().zip(&fine.labeled) {
            assert!(
                (c.h_under - f.h_under).abs() < 0.05,
                "sample {}: h_under {} vs {} at dt/2",
                c.sample.id,
                c.h_under,
                f.h_under
            );
        }
    }

    #[test]
    fn sequential_labeling_matches_parallel() {
        let case = island();
        let samples = generate_scenarios(&case, 40, 29).unwrap();
        let par = label_scenarios(&case, &samples, case.delta_f_th, 10.0, 5e-3);
        let seq = label_scenarios_seq(&case, &samples, case.delta_f_th, 10.0, 5e-3);
        assert_eq!(par.divergent, seq.divergent);
        assert_eq!(par.labeled.len(), seq.labeled.len());
        for (p, s) in par.labeled.iter().zip(&seq.labeled) {
            assert_eq!(p.sample.id, s.sample.id);
            assert_eq!(p.a_min, s.a_min);
            assert_eq!(p.h_under, s.h_under);
        }
    }

    #[test]
    fn dataset_csv_is_deterministic_with_fixed_header() {
        let case = island();
        let samples = generate_scenarios(&case, 25, 5).unwrap();
        let out = label_scenarios(&case, &samples, case.delta_f_th, 10.0, 5e-3);
        let a = dataset_csv(&case, &out.labeled);
        let b = dataset_csv(&case, &out.labeled);
        assert_eq!(a, b);
        let header = a.lines().next().unwrap();
        assert_eq!(
            header,
            "sample_id, load_pu, lost_unit, p_loss_pu, h_sys_s, sum_reserve_pu, a_min, h_under_s"
        );
        assert_eq!(a.lines().count(), 26);
        // Every float field rendered with 6 decimals.
        let first = a.lines().nth(1).unwrap();
        let fields: Vec<&str> = first.split(", ").collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[1].split('.').nth(1).unwrap().len(), 6);
    }
}
