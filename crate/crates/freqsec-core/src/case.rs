//! Case files: unit fleet, demand/RES profiles, system constants, and the
//! conversions from case units to the per-unit quantities the dynamics and
//! UC layers work in.
//!
//! Files carry engineering units: MW for powers, MW/h for ramps, hours for
//! timing, € for costs, seconds for time constants. Internally everything
//! dynamic is per-unit on `s_base`; governor gains in case files are
//! machine-base droop gains `K_i` (per-unit reserve on the *unit's* rating
//! per per-unit Δf) and are converted to the system base as
//! `K_i · P_max_i / s_base` when building scenarios — a unit's contribution
//! to system stiffness scales with its size.
//!
//! Area thresholds (`a_th`) and the calibration labels are exchanged in
//! Hz·s: the simulation core integrates per-unit areas, and the boundary
//! multiplies by `f_base`. This keeps case-file numbers in the same scale
//! operators quote excursions in (a 1 Hz·s budget is meaningful; the same
//! number in pu·s would be 50× smaller than any sane threshold).

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::dynamics::{
    aggregate_h_sys, GovernorModel, OutageScenario, OutageUnit, SegmentationPlan,
};

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("case schema error: {0}")]
    Schema(String),
    #[error("invalid case: field '{field}': {reason}")]
    Invalid { field: String, reason: String },
}

type Result<T> = std::result::Result<T, CaseError>;

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> CaseError {
    CaseError::Invalid { field: field.into(), reason: reason.into() }
}

/// One thermal unit as described in a case file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitData {
    pub name: String,
    /// Minimum stable generation when committed, MW.
    pub p_min: f64,
    /// Rated maximum output, MW.
    pub p_max: f64,
    /// Ramp limits, MW per hour.
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// Minimum up/down times, hours.
    pub min_up: u32,
    pub min_down: u32,
    /// Start-up cost, €.
    pub startup_cost: f64,
    /// Quadratic generation cost c0 + c1·p + c2·p² (€/h, €/MWh, €/MWh²).
    pub cost_c0: f64,
    pub cost_c1: f64,
    pub cost_c2: f64,
    /// Inertia constant H, seconds on the unit rating.
    pub h: f64,
    /// Governor gain, machine base.
    pub k: f64,
    /// First-order governor time constant T, seconds.
    pub t: f64,
    /// Frequency-derivative multiplier b, seconds.
    pub b: f64,
    /// Optional second-order governor denominator (a1 s, a2 s²); when absent
    /// the second-order realization uses (T, T²/10) derived from T.
    #[serde(default)]
    pub a1: Option<f64>,
    #[serde(default)]
    pub a2: Option<f64>,
}

impl UnitData {
    /// Governor model with the gain converted to the system base. Uses the
    /// second-order realization when (a1, a2) are given, else first-order.
    pub fn governor(&self, s_base: f64) -> GovernorModel {
        let k_eff = self.k * self.p_max / s_base;
        match (self.a1, self.a2) {
            (Some(a1), Some(a2)) => GovernorModel::second_order(k_eff, self.b, a1, a2),
            _ => GovernorModel::first_order(k_eff, self.b, self.t),
        }
    }

    /// Quadratic generation cost at output `p_mw` (€/h).
    pub fn quadratic_cost(&self, p_mw: f64) -> f64 {
        self.cost_c0 + self.cost_c1 * p_mw + self.cost_c2 * p_mw * p_mw
    }

    /// Chord breakpoints of the quadratic cost over [P_min, P_max] for a
    /// convex piecewise-linear objective. Over-estimates the quadratic
    /// between breakpoints and matches it at them.
    pub fn pwl_breakpoints(&self, segments: usize) -> Vec<(f64, f64)> {
        assert!(segments >= 1, "need at least one segment");
        let width = (self.p_max - self.p_min) / segments as f64;
        (0..=segments)
            .map(|s| {
                let p = self.p_min + width * s as f64;
                (p, self.quadratic_cost(p))
            })
            .collect()
    }
}

/// A full case: fleet, profiles, and system constants, validated.
#[derive(Debug, Clone)]
pub struct CaseData {
    pub name: String,
    pub units: Vec<UnitData>,
    /// Hourly demand, MW (24 entries).
    pub demand: Vec<f64>,
    /// Hourly renewable availability, MW (curtailable; same length).
    pub res_profile: Vec<f64>,
    /// Load damping D (per-unit response per per-unit Δf).
    pub d: f64,
    /// Nominal frequency, Hz.
    pub f_base: f64,
    /// System power base, MVA.
    pub s_base: f64,
    /// Frequency threshold Δf_th (per-unit, negative).
    pub delta_f_th: f64,
    /// Target maximum under-threshold duration, seconds.
    pub h_th: f64,
    /// Optional area threshold, Hz·s.
    pub a_th: Option<f64>,
    /// Units with P_max below this get no embedded dynamics, MW.
    pub contingency_floor_mw: f64,
    /// Segmentation preset name (see [`SegmentationPlan::from_name`]).
    pub plan: String,
    /// Optional reference dispatch (MW per unit), used by fixed-point tests.
    pub operating_point: Option<Vec<f64>>,
    /// Free-form provenance note.
    pub notes: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    name: String,
    units: Vec<UnitData>,
    demand: Vec<f64>,
    res_profile: Vec<f64>,
    #[serde(default = "default_damping")]
    d: f64,
    #[serde(default = "default_f_base")]
    f_base: f64,
    #[serde(default)]
    s_base: Option<f64>,
    #[serde(default = "default_delta_f_th")]
    delta_f_th: f64,
    #[serde(default = "default_h_th")]
    h_th: f64,
    #[serde(default)]
    a_th: Option<f64>,
    #[serde(default)]
    contingency_floor_mw: f64,
    #[serde(default = "default_plan")]
    plan: String,
    #[serde(default)]
    operating_point: Option<Vec<f64>>,
    #[serde(default)]
    notes: Option<String>,
}

fn default_damping() -> f64 {
    1.0
}
fn default_f_base() -> f64 {
    50.0
}
fn default_delta_f_th() -> f64 {
    -0.01
}
fn default_h_th() -> f64 {
    3.0
}
fn default_plan() -> String {
    "uniform15".into()
}

impl CaseData {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Parse and validate. Schema errors carry serde's field/line context;
    /// validation errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawCase =
            serde_json::from_str(text).map_err(|e| CaseError::Schema(e.to_string()))?;
        let s_base = raw
            .s_base
            .unwrap_or_else(|| raw.units.iter().map(|u| u.p_max).sum());
        let case = CaseData {
            name: raw.name,
            units: raw.units,
            demand: raw.demand,
            res_profile: raw.res_profile,
            d: raw.d,
            f_base: raw.f_base,
            s_base,
            delta_f_th: raw.delta_f_th,
            h_th: raw.h_th,
            a_th: raw.a_th,
            contingency_floor_mw: raw.contingency_floor_mw,
            plan: raw.plan,
            operating_point: raw.operating_point,
            notes: raw.notes,
        };
        case.validate()?;
        Ok(case)
    }

    /// The bundled 11-unit island case (cases/island11.json).
    pub fn island11() -> Self {
        Self::from_json(include_str!("../../../cases/island11.json"))
            .expect("bundled island11 case must be valid")
    }

    fn validate(&self) -> Result<()> {
        if self.units.is_empty() {
            return Err(invalid("units", "fleet is empty"));
        }
        if self.demand.len() != 24 {
            return Err(invalid("demand", format!("need 24 hourly entries, got {}", self.demand.len())));
        }
        if self.res_profile.len() != self.demand.len() {
            return Err(invalid(
                "res_profile",
                format!("length {} does not match demand length {}", self.res_profile.len(), self.demand.len()),
            ));
        }
        for (t, &d) in self.demand.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(invalid(format!("demand[{t}]"), format!("must be positive, got {d}")));
            }
        }
        for (t, &r) in self.res_profile.iter().enumerate() {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(invalid(format!("res_profile[{t}]"), format!("must be ≥ 0, got {r}")));
            }
        }
        let peak = self.peak_demand();
        let capacity = self.total_capacity();
        if capacity < peak {
            return Err(invalid(
                "units",
                format!("total capacity {capacity} MW below peak demand {peak} MW"),
            ));
        }
        for (i, u) in self.units.iter().enumerate() {
            let field = |f: &str| format!("units[{i}].{f}");
            let positive = [
                ("p_max", u.p_max),
                ("ramp_up", u.ramp_up),
                ("ramp_down", u.ramp_down),
                ("h", u.h),
                ("k", u.k),
                ("t", u.t),
            ];
            for (name, v) in positive {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(invalid(field(name), format!("must be positive, got {v}")));
                }
            }
            let nonneg = [
                ("p_min", u.p_min),
                ("startup_cost", u.startup_cost),
                ("cost_c0", u.cost_c0),
                ("cost_c1", u.cost_c1),
                ("cost_c2", u.cost_c2),
                ("b", u.b),
            ];
            for (name, v) in nonneg {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(invalid(field(name), format!("must be ≥ 0, got {v}")));
                }
            }
            if u.p_min > u.p_max {
                return Err(invalid(field("p_min"), format!("exceeds p_max ({} > {})", u.p_min, u.p_max)));
            }
            if u.min_up == 0 || u.min_down == 0 {
                return Err(invalid(field("min_up"), "min up/down times must be ≥ 1 h"));
            }
            match (u.a1, u.a2) {
                (Some(a1), Some(a2)) if a1 > 0.0 && a2 > 0.0 => {}
                (None, None) => {}
                _ => {
                    return Err(invalid(
                        field("a1"),
                        "a1 and a2 must be given together and both positive",
                    ))
                }
            }
        }
        if !(self.d >= 0.0) {
            return Err(invalid("d", format!("must be ≥ 0, got {}", self.d)));
        }
        if !(self.f_base > 0.0) {
            return Err(invalid("f_base", format!("must be positive, got {}", self.f_base)));
        }
        if !(self.s_base > 0.0) {
            return Err(invalid("s_base", format!("must be positive, got {}", self.s_base)));
        }
        if !(self.delta_f_th < 0.0) {
            return Err(invalid(
                "delta_f_th",
                format!("threshold is a negative deviation, got {}", self.delta_f_th),
            ));
        }
        if !(self.h_th > 0.0) {
            return Err(invalid("h_th", format!("must be positive, got {}", self.h_th)));
        }
        if let Some(a_th) = self.a_th {
            if !(a_th >= 0.0) || !a_th.is_finite() {
                return Err(invalid("a_th", format!("must be ≥ 0, got {a_th}")));
            }
        }
        if !(self.contingency_floor_mw >= 0.0) {
            return Err(invalid(
                "contingency_floor_mw",
                format!("must be ≥ 0, got {}", self.contingency_floor_mw),
            ));
        }
        SegmentationPlan::from_name(&self.plan)
            .map_err(|e| invalid("plan", e.to_string()))?;
        if let Some(op) = &self.operating_point {
            if op.len() != self.units.len() {
                return Err(invalid(
                    "operating_point",
                    format!("length {} does not match {} units", op.len(), self.units.len()),
                ));
            }
            for (i, (&p, u)) in op.iter().zip(&self.units).enumerate() {
                if !(0.0..=u.p_max + 1e-9).contains(&p) {
                    return Err(invalid(
                        format!("operating_point[{i}]"),
                        format!("dispatch {p} MW outside [0, {}]", u.p_max),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn peak_demand(&self) -> f64 {
        self.demand.iter().cloned().fold(0.0, f64::max)
    }

    pub fn total_capacity(&self) -> f64 {
        self.units.iter().map(|u| u.p_max).sum()
    }

    pub fn hours(&self) -> usize {
        self.demand.len()
    }

    pub fn segmentation(&self) -> SegmentationPlan {
        SegmentationPlan::from_name(&self.plan).expect("validated at load")
    }

    /// Per-unit area scale: pu·s → Hz·s.
    pub fn area_to_hz_s(&self, area_pu_s: f64) -> f64 {
        area_pu_s * self.f_base
    }

    pub fn area_from_hz_s(&self, area_hz_s: f64) -> f64 {
        area_hz_s / self.f_base
    }

    /// Build the post-outage scenario from a schedule slice. `survivors`
    /// lists the committed units that remain after the loss as
    /// `(unit index, reserve MW)`; `p_loss_mw` is the lost dispatch;
    /// `demand_mw` the served demand that hour (sets the damping term).
    pub fn outage_scenario(
        &self,
        survivors: &[(usize, f64)],
        p_loss_mw: f64,
        demand_mw: f64,
        horizon: f64,
    ) -> OutageScenario {
        let units: Vec<OutageUnit> = survivors
            .iter()
            .map(|&(i, rho_mw)| {
                let u = &self.units[i];
                OutageUnit {
                    governor: u.governor(self.s_base),
                    rho: rho_mw / self.s_base,
                    inertia: u.h,
                    rated_power: u.p_max / self.s_base,
                }
            })
            .collect();
        let h_sys = aggregate_h_sys(&units);
        OutageScenario {
            units,
            h_sys,
            d: self.d,
            p_d: demand_mw / self.s_base,
            p_loss: p_loss_mw / self.s_base,
            horizon,
        }
    }
}
