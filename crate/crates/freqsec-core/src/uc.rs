//! Unit commitment and its frequency-secured variants.
//!
//! [`build_base_uc`] assembles the classical MILP schedule: commitment
//! logic, min up/down windows, piecewise-linear generation costs gated by
//! commitment, ramps, hourly balance with curtailable renewables, and
//! reserve adequacy for the loss of any single unit. On top of that,
//! [`add_frequency_dynamics`] embeds the segmented Bernstein frequency
//! response for selected (hour, lost-unit) pairs — the same collocation rows
//! `dynamics::bernstein_simulate` solves, but with commitment-dependent
//! terms (`H^sys·Δḟ`, governor forcing, reserve saturation) linearized so
//! frequency security becomes part of the scheduling problem. The nadir and
//! area constraints then bound the *converted control points* of `Δf` and of
//! the running area `A(t) = ∫(Δf − Δf_th)`: by the Bernstein enclosure
//! property a bound on control points is a conservative bound on the curve.
//!
//! Everything inside the dynamics rows is per-unit on `case.s_base`; the
//! base schedule itself stays in MW and couples in through `x_{t,i}`,
//! `p_{t,ℓ}/S_base`, and `ρ_{t,i}/S_base`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bernstein::{integration_matrix, sample_to_control_matrix, BernsteinError};
use crate::case::CaseData;
use crate::dynamics::{OutageScenario, SegmentationPlan};
use crate::milp::{MilpError, Model, ProductMode, Sense, SolverResult, VarId};

/// Segments per unit in the piecewise-linear generation cost.
pub const PWL_SEGMENTS: usize = 3;

/// Box for the per-unit frequency deviation coefficients. Wide enough to
/// contain any surviving trajectory of interest (collapse beyond −1 pu is
/// not a schedule worth representing), tight enough to give the commitment
/// gating products usable big-M values.
const F_BOUND: (f64, f64) = (-1.0, 0.5);
/// Box for the Δḟ coefficients, pu/s. |Δḟ| ≤ p_loss/(2H_sys) stays well
/// inside this for any fleet that can carry the demand.
const F1_BOUND: (f64, f64) = (-3.0, 3.0);

#[derive(Debug, Error)]
pub enum UcError {
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
    #[error("hour {hour}: demand {demand} MW exceeds total capacity {capacity} MW")]
    Infeasible { hour: usize, demand: f64, capacity: f64 },
    #[error("contingency pair (t = {hour}, unit = {lost}) is outside the case dimensions")]
    BadPair { hour: usize, lost: usize },
    #[error("A_th = {a_th} > 0 with skip = 0 would pin A(0) = 0 below the bound; use skip ≥ 1")]
    BadSkip { a_th: f64 },
    #[error("solution has no variable named {0}")]
    MissingVar(String),
    #[error("solution violates {constraint} by {violation:.3e}")]
    Extraction { constraint: String, violation: f64 },
}

type Result<T> = std::result::Result<T, UcError>;

/// Variable handles of the base schedule, indexed `[hour][unit]`.
#[derive(Debug, Clone)]
pub struct UcVars {
    pub x: Vec<Vec<VarId>>,
    pub y: Vec<Vec<VarId>>,
    pub z: Vec<Vec<VarId>>,
    /// Dispatch, MW.
    pub p: Vec<Vec<VarId>>,
    /// Spinning reserve, MW.
    pub rho: Vec<Vec<VarId>>,
    /// Renewable usage per hour, MW.
    pub pres: Vec<VarId>,
}

/// Base unit commitment (no frequency rows): objective, logic, min up/down,
/// capacity + reserve headroom, ramps, balance, and reserve adequacy for the
/// loss of any single unit.
pub fn build_base_uc(case: &CaseData) -> Result<(Model, UcVars)> {
    let horizon = case.hours();
    let nu = case.units.len();
    let capacity = case.total_capacity();
    for (t, &d) in case.demand.iter().enumerate() {
        if d > capacity + 1e-9 {
            return Err(UcError::Infeasible { hour: t, demand: d, capacity });
        }
    }

    let mut model = Model::new(&case.name);
    let mut vars = UcVars {
        x: vec![Vec::with_capacity(nu); horizon],
        y: vec![Vec::with_capacity(nu); horizon],
        z: vec![Vec::with_capacity(nu); horizon],
        p: vec![Vec::with_capacity(nu); horizon],
        rho: vec![Vec::with_capacity(nu); horizon],
        pres: Vec::with_capacity(horizon),
    };

    for t in 0..horizon {
        for (i, u) in case.units.iter().enumerate() {
            let xv = model.add_binary(&format!("x_{t}_{i}"), 0.0)?;
            let yv = model.add_binary(&format!("y_{t}_{i}"), u.startup_cost)?;
            let zv = model.add_binary(&format!("z_{t}_{i}"), 0.0)?;
            let pv = model.add_continuous(&format!("p_{t}_{i}"), 0.0, u.p_max, 0.0)?;
            let rv = model.add_continuous(&format!("rho_{t}_{i}"), 0.0, u.p_max, 0.0)?;

            // Gated piecewise-linear cost: p = P_min·x + Σ s_k with
            // 0 ≤ s_k ≤ width_k, objective gc(P_min)·x + Σ slope_k·s_k.
            // When x = 0 the fill row forces p = 0 and every s_k = 0, so no
            // cost is charged for an offline unit.
            let bps = u.pwl_breakpoints(PWL_SEGMENTS);
            model.add_obj(xv, bps[0].1);
            let mut fill = vec![(pv, 1.0), (xv, -u.p_min)];
            for k in 0..bps.len() - 1 {
                let width = bps[k + 1].0 - bps[k].0;
                if width <= 1e-12 {
                    continue;
                }
                let slope = (bps[k + 1].1 - bps[k].1) / width;
                let s = model.add_continuous(&format!("seg_{t}_{i}_{k}"), 0.0, width, slope)?;
                fill.push((s, -1.0));
            }
            model.add_row(&format!("fill_{t}_{i}"), Sense::Eq, 0.0, &fill)?;

            // Commitment logic (cold start: x_{-1} = 0) and capacity with
            // reserve headroom.
            let mut logic = vec![(xv, 1.0), (yv, -1.0), (zv, 1.0)];
            if t > 0 {
                logic.push((vars.x[t - 1][i], -1.0));
            }
            model.add_row(&format!("logic_{t}_{i}"), Sense::Eq, 0.0, &logic)?;
            model.add_row(&format!("yz_{t}_{i}"), Sense::Le, 1.0, &[(yv, 1.0), (zv, 1.0)])?;
            model.add_row(
                &format!("cap_{t}_{i}"),
                Sense::Le,
                0.0,
                &[(pv, 1.0), (rv, 1.0), (xv, -u.p_max)],
            )?;

            vars.x[t].push(xv);
            vars.y[t].push(yv);
            vars.z[t].push(zv);
            vars.p[t].push(pv);
            vars.rho[t].push(rv);
        }
    }

    // Min up/down windows, clipped at the cold start. Length-1 windows are
    // already implied by the logic rows and are skipped.
    for t in 0..horizon {
        for (i, u) in case.units.iter().enumerate() {
            let ut = u.min_up as usize;
            if ut >= 2 {
                let lo = t.saturating_sub(ut - 1);
                let mut coeffs: Vec<_> = (lo..=t).map(|tau| (vars.y[tau][i], 1.0)).collect();
                coeffs.push((vars.x[t][i], -1.0));
                model.add_row(&format!("up_{t}_{i}"), Sense::Le, 0.0, &coeffs)?;
            }
            let dt = u.min_down as usize;
            if dt >= 2 {
                let lo = t.saturating_sub(dt - 1);
                let mut coeffs: Vec<_> = (lo..=t).map(|tau| (vars.z[tau][i], 1.0)).collect();
                coeffs.push((vars.x[t][i], 1.0));
                model.add_row(&format!("dn_{t}_{i}"), Sense::Le, 1.0, &coeffs)?;
            }
        }
    }

    // Ramps between consecutive hours; start-up/shut-down hours may move
    // freely within the unit's own limits (the y/z big-M term).
    for t in 1..horizon {
        for (i, u) in case.units.iter().enumerate() {
            model.add_row(
                &format!("ru_{t}_{i}"),
                Sense::Le,
                0.0,
                &[
                    (vars.p[t][i], 1.0),
                    (vars.p[t - 1][i], -1.0),
                    (vars.x[t - 1][i], -u.ramp_up),
                    (vars.y[t][i], -u.p_max),
                ],
            )?;
            model.add_row(
                &format!("rd_{t}_{i}"),
                Sense::Le,
                0.0,
                &[
                    (vars.p[t - 1][i], 1.0),
                    (vars.p[t][i], -1.0),
                    (vars.x[t][i], -u.ramp_down),
                    (vars.z[t][i], -u.p_max),
                ],
            )?;
        }
    }

    // Hourly balance with curtailable renewables.
    for t in 0..horizon {
        let pres = model.add_continuous(&format!("pres_{t}"), 0.0, case.res_profile[t], 0.0)?;
        let mut coeffs: Vec<_> = (0..nu).map(|i| (vars.p[t][i], 1.0)).collect();
        coeffs.push((pres, 1.0));
        model.add_row(&format!("bal_{t}"), Sense::Eq, case.demand[t], &coeffs)?;
        vars.pres.push(pres);
    }

    // Reserve adequacy: the others must be able to pick up any single unit's
    // scheduled output. Uncommitted units contribute nothing (ρ ≤ P_max·x).
    if nu >= 2 {
        for t in 0..horizon {
            for l in 0..nu {
                let mut coeffs: Vec<_> =
                    (0..nu).filter(|&i| i != l).map(|i| (vars.rho[t][i], 1.0)).collect();
                coeffs.push((vars.p[t][l], -1.0));
                model.add_row(&format!("adq_{t}_{l}"), Sense::Ge, 0.0, &coeffs)?;
            }
        }
    }

    Ok((model, vars))
}

/// All (hour, unit) pairs whose loss gets embedded dynamics: every unit at
/// or above the case's contingency floor, every hour. Reserve adequacy in
/// the base model still covers *all* units; the floor only bounds which
/// outages carry frequency rows.
pub fn contingency_set(case: &CaseData) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for t in 0..case.hours() {
        for (l, u) in case.units.iter().enumerate() {
            if u.p_max >= case.contingency_floor_mw {
                pairs.push((t, l));
            }
        }
    }
    pairs
}

/// How the delivered-reserve term `min(r_i, ρ_i)` enters the MILP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaturationMode {
    /// Faithful: one saturation binary per unit, segment, and coefficient
    /// via [`Model::linearize_min`]. Exact but adds many integers — suited
    /// to small studies and to pinning the embedding against the simulator.
    Exact,
    /// Delivered reserve is a free variable `d ≤ r`, `d ≤ ρ`. The true
    /// saturated trajectory stays feasible, and wherever the frequency
    /// constraints bind the optimizer pushes `d` onto `min(r, ρ)`, so the
    /// relaxation is exact at binding optima while keeping the integer count
    /// independent of the segmentation.
    Relaxed,
}

/// Per-pair coefficient variables created by [`add_frequency_dynamics`]:
/// node-value coefficients of `Δf` and `Δḟ`, indexed `[segment][node]`.
#[derive(Debug, Clone)]
pub struct PairDynamics {
    pub hour: usize,
    pub lost: usize,
    pub f: Vec<Vec<VarId>>,
    pub f1: Vec<Vec<VarId>>,
}

/// Handles to every embedded contingency, in the order given to
/// [`add_frequency_dynamics`].
#[derive(Debug, Clone)]
pub struct FrequencyDynamics {
    pub plan: SegmentationPlan,
    pub pairs: Vec<PairDynamics>,
}

/// Embed the segmented frequency response for each (hour, lost-unit) pair.
///
/// Per segment the rows mirror the simulator's collocation system in
/// node-value space — swing, governor, and integration links — with the
/// schedule coupled in:
///
/// * `H^sys = Σ_{i≠ℓ} (H_i·P_max_i/S_base)·x_{t,i}`, so the swing term
///   `2H^sys·Δḟ` expands unit-by-unit through products `x_i·Δḟ_j`;
/// * governor forcing `K_i·(Δf + b_i·Δḟ)` is gated per coefficient by
///   `x_i·Δf_j` and `x_i·Δḟ_j` products (an offline unit's response decays
///   to the zero trajectory);
/// * delivered reserve is `min(r_i, ρ_{t,i}/S_base)` per coefficient, exact
///   or relaxed per [`SaturationMode`];
/// * the lost power is the dispatch variable `p_{t,ℓ}/S_base`;
/// * derivative initial conditions chain across segments via equality rows,
///   starting from rest (`Δf(0) = 0`, zero governor states).
pub fn add_frequency_dynamics(
    model: &mut Model,
    case: &CaseData,
    vars: &UcVars,
    pairs: &[(usize, usize)],
    plan: &SegmentationPlan,
    mode: SaturationMode,
) -> Result<FrequencyDynamics> {
    let horizon = case.hours();
    let nu = case.units.len();
    let s_base = case.s_base;

    struct Seg {
        h: f64,
        m: usize,
        xt: DMatrix<f64>,
    }
    let segs = plan
        .segments
        .iter()
        .map(|&(h, n)| Ok(Seg { h, m: n + 1, xt: integration_matrix(n)?.transpose_matrix() }))
        .collect::<Result<Vec<_>>>()?;

    let govs: Vec<_> = case.units.iter().map(|u| u.governor(s_base)).collect();
    // Contribution of each committed unit to H^sys (pu·s) and the per-unit
    // cap of its reserve variable.
    let h_coef: Vec<f64> = case.units.iter().map(|u| u.h * u.p_max / s_base).collect();
    let rho_cap: Vec<f64> = case.units.iter().map(|u| u.p_max / s_base).collect();
    // Governor response boxes, scaled per level: generous enough to contain
    // any surviving trajectory, finite so exact-mode big-M stays sound.
    let r_bound: Vec<f64> = govs.iter().map(|g| 20.0 * (1.0 + g.k)).collect();

    // ρ_{t,i}/S_base, shared by every pair at hour t.
    let mut rho_pu: BTreeMap<(usize, usize), VarId> = BTreeMap::new();

    let mut out = FrequencyDynamics { plan: plan.clone(), pairs: Vec::with_capacity(pairs.len()) };
    for &(t, l) in pairs {
        if t >= horizon || l >= nu {
            return Err(UcError::BadPair { hour: t, lost: l });
        }
        let q = format!("c{t}_{l}");
        let damping = case.d * case.demand[t] / s_base;
        let inv_s = 1.0 / s_base;

        let mut f_all: Vec<Vec<VarId>> = Vec::with_capacity(segs.len());
        let mut f1_all: Vec<Vec<VarId>> = Vec::with_capacity(segs.len());
        // Previous segment's level grids per unit, for IC chaining.
        let mut prev: Vec<Vec<Vec<VarId>>> = vec![Vec::new(); nu];
        let mut prev_m = 0usize;

        for (tau, seg) in segs.iter().enumerate() {
            let (m, h) = (seg.m, seg.h);
            let f: Vec<VarId> = (0..m)
                .map(|j| model.add_continuous(&format!("{q}_f_{tau}_{j}"), F_BOUND.0, F_BOUND.1, 0.0))
                .collect::<std::result::Result<_, _>>()?;
            let f1: Vec<VarId> = (0..m)
                .map(|j| model.add_continuous(&format!("{q}_f1_{tau}_{j}"), F1_BOUND.0, F1_BOUND.1, 0.0))
                .collect::<std::result::Result<_, _>>()?;

            // F = Δf⁰·1 + h·Xᵀ·F¹; Δf⁰ is the previous segment's endpoint
            // (zero at the event).
            for j in 0..m {
                let mut coeffs = vec![(f[j], 1.0)];
                for col in 0..m {
                    let v = seg.xt[(j, col)];
                    if v != 0.0 {
                        coeffs.push((f1[col], -h * v));
                    }
                }
                if tau > 0 {
                    coeffs.push((f_all[tau - 1][prev_m - 1], -1.0));
                }
                model.add_row(&format!("{q}_fl_{tau}_{j}"), Sense::Eq, 0.0, &coeffs)?;
            }

            // Swing rows accumulate per-unit terms below:
            // 2H^sys·F¹_j + D·P_d·F_j − Σ_i d_{i,j} + p_ℓ/S = 0.
            let mut swing: Vec<Vec<(VarId, f64)>> =
                (0..m).map(|j| vec![(f[j], damping), (vars.p[t][l], inv_s)]).collect();

            for u in 0..nu {
                if u == l {
                    continue;
                }
                let gov = &govs[u];
                let s = gov.order();
                let alpha = gov.denominator();
                let xv = vars.x[t][u];

                let rp = match rho_pu.get(&(t, u)) {
                    Some(&v) => v,
                    None => {
                        let v = model.add_continuous(&format!("rp_{t}_{u}"), 0.0, rho_cap[u], 0.0)?;
                        model.add_row(
                            &format!("rpd_{t}_{u}"),
                            Sense::Eq,
                            0.0,
                            &[(v, 1.0), (vars.rho[t][u], -inv_s)],
                        )?;
                        rho_pu.insert((t, u), v);
                        v
                    }
                };

                // Governor state levels r⁽⁰⁾..r⁽ˢ⁾ as node-value grids.
                let levels: Vec<Vec<VarId>> = (0..=s)
                    .map(|k| {
                        let lb = r_bound[u] * 4f64.powi(k as i32);
                        (0..m)
                            .map(|j| {
                                model.add_continuous(&format!("{q}_r{k}_{tau}_{u}_{j}"), -lb, lb, 0.0)
                            })
                            .collect::<std::result::Result<Vec<_>, _>>()
                    })
                    .collect::<std::result::Result<_, _>>()?;

                // Integration links r⁽ᵏ⁾ = ic_k·1 + h·Xᵀ·r⁽ᵏ⁺¹⁾ with the IC
                // taken from the previous segment's endpoint.
                for k in 0..s {
                    for j in 0..m {
                        let mut coeffs = vec![(levels[k][j], 1.0)];
                        for col in 0..m {
                            let v = seg.xt[(j, col)];
                            if v != 0.0 {
                                coeffs.push((levels[k + 1][col], -h * v));
                            }
                        }
                        if tau > 0 {
                            coeffs.push((prev[u][k][prev_m - 1], -1.0));
                        }
                        model.add_row(&format!("{q}_rl{k}_{tau}_{u}_{j}"), Sense::Eq, 0.0, &coeffs)?;
                    }
                }

                for j in 0..m {
                    // Commitment gating: g = x·F_j, w = x·F¹_j.
                    let g = model.linearize_product(
                        &format!("{q}_g_{tau}_{u}_{j}"),
                        xv,
                        f[j],
                        F_BOUND.0,
                        F_BOUND.1,
                        ProductMode::BigM,
                    )?;
                    let w = model.linearize_product(
                        &format!("{q}_w_{tau}_{u}_{j}"),
                        xv,
                        f1[j],
                        F1_BOUND.0,
                        F1_BOUND.1,
                        ProductMode::BigM,
                    )?;

                    // Governor collocation: Σ_k α_k·r⁽ᵏ⁾_j + K·x·(F_j + b·F¹_j) = 0.
                    let mut coeffs = vec![(g, gov.k), (w, gov.k * gov.b)];
                    for (k, &a) in alpha.iter().enumerate() {
                        coeffs.push((levels[k][j], a));
                    }
                    model.add_row(&format!("{q}_gv_{tau}_{u}_{j}"), Sense::Eq, 0.0, &coeffs)?;

                    swing[j].push((w, 2.0 * h_coef[u]));

                    // Delivered reserve d = min(r, ρ/S).
                    let d = match mode {
                        SaturationMode::Exact => {
                            let (r_lo, r_hi) = model.bounds(levels[0][j]);
                            let (p_lo, p_hi) = model.bounds(rp);
                            let big_m = (r_hi - p_lo).max(p_hi - r_lo).max(0.0);
                            let (d, _sat) = model.linearize_min(
                                &format!("{q}_m_{tau}_{u}_{j}"),
                                levels[0][j],
                                rp,
                                big_m,
                            )?;
                            d
                        }
                        SaturationMode::Relaxed => {
                            let d = model.add_continuous(
                                &format!("{q}_d_{tau}_{u}_{j}"),
                                -r_bound[u],
                                rho_cap[u],
                                0.0,
                            )?;
                            model.add_row(
                                &format!("{q}_dr_{tau}_{u}_{j}"),
                                Sense::Le,
                                0.0,
                                &[(d, 1.0), (levels[0][j], -1.0)],
                            )?;
                            model.add_row(
                                &format!("{q}_dc_{tau}_{u}_{j}"),
                                Sense::Le,
                                0.0,
                                &[(d, 1.0), (rp, -1.0)],
                            )?;
                            d
                        }
                    };
                    swing[j].push((d, -1.0));
                }

                prev[u] = levels;
            }

            for (j, coeffs) in swing.iter().enumerate() {
                model.add_row(&format!("{q}_sw_{tau}_{j}"), Sense::Eq, 0.0, coeffs)?;
            }

            f_all.push(f);
            f1_all.push(f1);
            prev_m = m;
        }

        out.pairs.push(PairDynamics { hour: t, lost: l, f: f_all, f1: f1_all });
    }

    Ok(out)
}

/// Bound every converted control point of `Δf` below by `Δf_th`: a
/// conservative guarantee that the whole curve stays above the threshold.
/// `Δf_th = -inf` is the disabled sentinel and leaves the model untouched.
pub fn add_nadir_constraint(
    model: &mut Model,
    dynamics: &FrequencyDynamics,
    delta_f_th: f64,
) -> Result<()> {
    if delta_f_th.is_infinite() && delta_f_th < 0.0 {
        return Ok(());
    }
    for pair in &dynamics.pairs {
        let q = format!("c{}_{}", pair.hour, pair.lost);
        for (tau, f) in pair.f.iter().enumerate() {
            let conv = sample_to_control_matrix(f.len() - 1)?;
            for j in 0..f.len() {
                let coeffs: Vec<_> = (0..f.len())
                    .filter(|&col| conv[(j, col)] != 0.0)
                    .map(|col| (f[col], conv[(j, col)]))
                    .collect();
                model.add_row(&format!("{q}_nad_{tau}_{j}"), Sense::Ge, delta_f_th, &coeffs)?;
            }
        }
    }
    Ok(())
}

/// Add the running-area coefficients `A(t) = ∫₀ᵗ (Δf − Δf_th) dτ` (chained
/// across segments, `A(0) = 0`) and bound their converted control points
/// below by `a_th` for segments with index ≥ `skip`. Returns the area
/// node-value variables, indexed `[pair][segment][node]`.
///
/// `a_th` is per-unit·seconds. Since the first control point of the first
/// segment *is* `A(0) = 0`, any `a_th > 0` demands `skip ≥ 1`.
pub fn add_area_constraint(
    model: &mut Model,
    dynamics: &FrequencyDynamics,
    delta_f_th: f64,
    a_th: f64,
    skip: usize,
) -> Result<Vec<Vec<Vec<VarId>>>> {
    if a_th > 0.0 && skip == 0 {
        return Err(UcError::BadSkip { a_th });
    }
    let bound = (1.0 + delta_f_th.abs()) * dynamics.plan.duration();
    let mut all = Vec::with_capacity(dynamics.pairs.len());
    for pair in &dynamics.pairs {
        let q = format!("c{}_{}", pair.hour, pair.lost);
        let mut pair_a: Vec<Vec<VarId>> = Vec::with_capacity(pair.f.len());
        for (tau, f) in pair.f.iter().enumerate() {
            let m = f.len();
            let (h, n) = dynamics.plan.segments[tau];
            let xt = integration_matrix(n)?.transpose_matrix();
            let a: Vec<VarId> = (0..m)
                .map(|j| model.add_continuous(&format!("{q}_a_{tau}_{j}"), -bound, bound, 0.0))
                .collect::<std::result::Result<_, _>>()?;
            // A = A⁰·1 + h·Xᵀ·(F − Δf_th·1); the constant integrand lands on
            // the right-hand side.
            for j in 0..m {
                let mut coeffs = vec![(a[j], 1.0)];
                let mut rowsum = 0.0;
                for col in 0..m {
                    let v = xt[(j, col)];
                    if v != 0.0 {
                        coeffs.push((f[col], -h * v));
                        rowsum += v;
                    }
                }
                if tau > 0 {
                    coeffs.push((pair_a[tau - 1][pair.f[tau - 1].len() - 1], -1.0));
                }
                model.add_row(
                    &format!("{q}_al_{tau}_{j}"),
                    Sense::Eq,
                    -delta_f_th * h * rowsum,
                    &coeffs,
                )?;
            }
            if tau >= skip {
                let conv = sample_to_control_matrix(n)?;
                for j in 0..m {
                    let coeffs: Vec<_> = (0..m)
                        .filter(|&col| conv[(j, col)] != 0.0)
                        .map(|col| (a[col], conv[(j, col)]))
                        .collect();
                    model.add_row(&format!("{q}_ac_{tau}_{j}"), Sense::Ge, a_th, &coeffs)?;
                }
            }
            pair_a.push(a);
        }
        all.push(pair_a);
    }
    Ok(all)
}

/// A solved schedule in engineering units.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UcSolution {
    /// Commitment per `[hour][unit]`.
    pub commitment: Vec<Vec<bool>>,
    pub startup: Vec<Vec<bool>>,
    pub shutdown: Vec<Vec<bool>>,
    /// Dispatch, MW.
    pub dispatch_mw: Vec<Vec<f64>>,
    /// Spinning reserve, MW.
    pub reserve_mw: Vec<Vec<f64>>,
    /// Renewable usage per hour, MW.
    pub res_usage_mw: Vec<f64>,
    /// Objective value, €.
    pub total_cost: f64,
}

impl UcSolution {
    /// Units committed at hour `t`.
    pub fn committed(&self, t: usize) -> Vec<usize> {
        (0..self.commitment[t].len()).filter(|&i| self.commitment[t][i]).collect()
    }

    /// Every (hour, unit) pair with the unit committed and dispatching —
    /// the outages a verification pass must simulate.
    pub fn credible_outages(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for t in 0..self.commitment.len() {
            for i in 0..self.commitment[t].len() {
                if self.commitment[t][i] && self.dispatch_mw[t][i] > 1e-6 {
                    pairs.push((t, i));
                }
            }
        }
        pairs
    }

    /// The outage scenario "unit `l` trips at hour `t`": committed survivors
    /// carry their scheduled reserves, the lost infeed is the unit's
    /// dispatch, and damping sees the hour's demand.
    pub fn scenario(&self, case: &CaseData, t: usize, l: usize, horizon: f64) -> OutageScenario {
        let survivors: Vec<(usize, f64)> = self
            .committed(t)
            .into_iter()
            .filter(|&i| i != l)
            .map(|i| (i, self.reserve_mw[t][i]))
            .collect();
        case.outage_scenario(&survivors, self.dispatch_mw[t][l], case.demand[t], horizon)
    }
}

/// Map a solver result back to a schedule and check the schedule invariants
/// (logic consistency, balance, dispatch and reserve limits) at 1e-5.
pub fn extract_solution(model: &Model, result: &SolverResult, case: &CaseData) -> Result<UcSolution> {
    let horizon = case.hours();
    let nu = case.units.len();

    let mut by_name: HashMap<&str, f64> = HashMap::with_capacity(result.values.len());
    for (idx, &v) in result.values.iter().enumerate() {
        by_name.insert(model.var_name(VarId(idx)), v);
    }
    let fetch = |name: String| -> Result<f64> {
        by_name.get(name.as_str()).copied().ok_or(UcError::MissingVar(name))
    };
    let as_bool = |name: String, v: f64| -> Result<bool> {
        let r = v.round();
        if (v - r).abs() > 1e-4 {
            return Err(UcError::Extraction {
                constraint: format!("{name} integrality"),
                violation: (v - r).abs(),
            });
        }
        Ok(r == 1.0)
    };

    let mut sol = UcSolution {
        commitment: vec![Vec::with_capacity(nu); horizon],
        startup: vec![Vec::with_capacity(nu); horizon],
        shutdown: vec![Vec::with_capacity(nu); horizon],
        dispatch_mw: vec![Vec::with_capacity(nu); horizon],
        reserve_mw: vec![Vec::with_capacity(nu); horizon],
        res_usage_mw: Vec::with_capacity(horizon),
        total_cost: result.objective,
    };
    for t in 0..horizon {
        for i in 0..nu {
            sol.commitment[t].push(as_bool(format!("x_{t}_{i}"), fetch(format!("x_{t}_{i}"))?)?);
            sol.startup[t].push(as_bool(format!("y_{t}_{i}"), fetch(format!("y_{t}_{i}"))?)?);
            sol.shutdown[t].push(as_bool(format!("z_{t}_{i}"), fetch(format!("z_{t}_{i}"))?)?);
            sol.dispatch_mw[t].push(fetch(format!("p_{t}_{i}"))?);
            sol.reserve_mw[t].push(fetch(format!("rho_{t}_{i}"))?);
        }
        sol.res_usage_mw.push(fetch(format!("pres_{t}"))?);
    }

    const TOL: f64 = 1e-5;
    for t in 0..horizon {
        for (i, u) in case.units.iter().enumerate() {
            let x = sol.commitment[t][i];
            let xp = t > 0 && sol.commitment[t - 1][i];
            let y = sol.startup[t][i];
            let z = sol.shutdown[t][i];
            if (x as i8 - xp as i8) != (y as i8 - z as i8) {
                return Err(UcError::Extraction { constraint: format!("logic_{t}_{i}"), violation: 1.0 });
            }
            if y && z {
                return Err(UcError::Extraction { constraint: format!("yz_{t}_{i}"), violation: 1.0 });
            }
            let gate = if x { 1.0 } else { 0.0 };
            let p = sol.dispatch_mw[t][i];
            let rho = sol.reserve_mw[t][i];
            if p < u.p_min * gate - TOL {
                return Err(UcError::Extraction {
                    constraint: format!("pmin_{t}_{i}"),
                    violation: u.p_min * gate - p,
                });
            }
            if p + rho > u.p_max * gate + TOL {
                return Err(UcError::Extraction {
                    constraint: format!("cap_{t}_{i}"),
                    violation: p + rho - u.p_max * gate,
                });
            }
        }
        let residual = sol.dispatch_mw[t].iter().sum::<f64>() + sol.res_usage_mw[t] - case.demand[t];
        if residual.abs() > TOL {
            return Err(UcError::Extraction { constraint: format!("bal_{t}"), violation: residual.abs() });
        }
    }

    Ok(sol)
}
