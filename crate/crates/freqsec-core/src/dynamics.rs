//! Post-contingency frequency response models.
//!
//! Convention: `Δf ≤ 0` after a generation loss (per-unit on nominal
//! frequency). The swing equation and governor dynamics are
//!
//! ```text
//! 2·H_sys·dΔf/dt + D·P_d·Δf = −p_loss + Σ_i min(r_i(t), ρ_i)
//! a_{s,i}·r_i⁽ˢ⁾ + … + a_{1,i}·r_i′ + r_i = −K_i·(Δf + b_i·dΔf/dt)
//! ```
//!
//! so reserves come out positive while frequency dips. The quasi-steady state
//! (no saturation) is `Δf_ss = −p_loss / (D·P_d + Σ K_i)`. First-order
//! governors are the `s = 1` case with `a_1 = T_i`; second-order the `s = 2`
//! case with `(a_1, a_2)`.
//!
//! Two solvers are provided: [`reference_simulate`], a fixed-step classical
//! RK4 oracle that applies the reserve cap `min(r_i, ρ_i)` inside the swing
//! summation at every stage evaluation, and [`bernstein_simulate`], the
//! segmented Bernstein collocation in which the cap is resolved per
//! coefficient by a fixed-point label sweep (a coefficient labeled saturated
//! contributes the constant `ρ_i`). The label sweep is what the MILP embedding
//! mirrors with binaries, so the two sides agree coefficient-for-coefficient.
//!
//! Metric extraction follows the area-proxy construction: `A(t) = ∫₀ᵗ (Δf −
//! Δf_th) dt` rises while frequency is healthy and falls below threshold
//! crossings. `A̲` is the post-peak drawdown of `A`: the minimum of `A` over
//! `[t*, horizon]` rebased at `A(t*)`, where `t*` is the first local maximum —
//! so `A̲ < 0` exactly when the trajectory crossed the threshold, and
//! `A̲ = A(horizon)` when `A` never decreases. (Rebasement is what makes
//! `A̲ ≥ 0 ⟹ h_< = 0` hold structurally; see the calibration module.)

use crate::bernstein::{
    self, derivative_chain, integration_matrix, monomial_vector, BernsteinError, BernsteinPoly,
};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("scenario invalid: {0}")]
    BadScenario(String),
    #[error("segmentation plan invalid: {0}")]
    BadPlan(String),
    #[error("dt = {dt} too large for the reference oracle (max 1e-2 s)")]
    DtTooLarge { dt: f64 },
    #[error("state diverged (non-finite) at step {step}, t = {t:.4} s")]
    Divergence { step: usize, t: f64 },
    #[error("saturation labels failed to stabilize after 20 sweeps (unit {unit}, segment {segment})")]
    SaturationAmbiguity { unit: usize, segment: usize },
    #[error(transparent)]
    Bernstein(#[from] BernsteinError),
}

type Result<T> = std::result::Result<T, DynamicsError>;

/// Which dynamic model realization a governor runs under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GovernorKind {
    FirstOrder,
    SecondOrder,
    General,
}

/// Turbine-governor model of one unit. All gains are per-unit on the system
/// base; `t`, `a1`, `a2` are kept side by side so the same unit can be run
/// under either realization (Appendix-IV style comparisons).
#[derive(Debug, Clone)]
pub struct GovernorModel {
    pub kind: GovernorKind,
    /// Gain K: per-unit reserve per per-unit Δf.
    pub k: f64,
    /// Frequency-derivative multiplier b, seconds.
    pub b: f64,
    /// First-order response constant T, seconds.
    pub t: f64,
    /// Second-order denominator a₁ (s), a₂ (s²).
    pub a1: f64,
    pub a2: f64,
    /// General-order denominator a₀..a_s with a₀ = 1 (unused unless
    /// `kind == General`).
    pub denom: Vec<f64>,
}

/// Maximum supported governor ODE order in the Bernstein solver.
pub const MAX_GOVERNOR_ORDER: usize = 4;

impl GovernorModel {
    pub fn first_order(k: f64, b: f64, t: f64) -> Self {
        Self { kind: GovernorKind::FirstOrder, k, b, t, a1: t, a2: 0.0, denom: vec![] }
    }

    pub fn second_order(k: f64, b: f64, a1: f64, a2: f64) -> Self {
        Self { kind: GovernorKind::SecondOrder, k, b, t: a1, a1, a2, denom: vec![] }
    }

    pub fn general(k: f64, b: f64, denom: Vec<f64>) -> Self {
        Self { kind: GovernorKind::General, k, b, t: 0.0, a1: 0.0, a2: 0.0, denom }
    }

    /// Same unit under a different realization.
    pub fn with_kind(&self, kind: GovernorKind) -> Self {
        Self { kind, ..self.clone() }
    }

    /// Active denominator `a_0..a_s` (a_0 multiplies r, a_s the highest
    /// derivative).
    pub fn denominator(&self) -> Vec<f64> {
        match self.kind {
            GovernorKind::FirstOrder => vec![1.0, self.t],
            GovernorKind::SecondOrder => vec![1.0, self.a1, self.a2],
            GovernorKind::General => self.denom.clone(),
        }
    }

    /// ODE order s of the active realization.
    pub fn order(&self) -> usize {
        self.denominator().len() - 1
    }

    fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) {
            return Err(DynamicsError::BadScenario(format!("governor gain K must be > 0, got {}", self.k)));
        }
        let denom = self.denominator();
        let s = denom.len().saturating_sub(1);
        if s < 1 || s > MAX_GOVERNOR_ORDER {
            return Err(DynamicsError::BadScenario(format!(
                "governor order {s} outside 1..={MAX_GOVERNOR_ORDER}"
            )));
        }
        if denom[0] != 1.0 {
            return Err(DynamicsError::BadScenario("governor denominator a_0 must be 1".into()));
        }
        if *denom.last().unwrap() == 0.0 {
            return Err(DynamicsError::BadScenario("governor leading denominator coefficient is zero".into()));
        }
        match self.kind {
            GovernorKind::FirstOrder if !(self.t > 0.0) => Err(DynamicsError::BadScenario(
                format!("first-order T must be > 0, got {}", self.t),
            )),
            GovernorKind::SecondOrder if !(self.a1 > 0.0 && self.a2 > 0.0) => {
                Err(DynamicsError::BadScenario(format!(
                    "second-order (a1, a2) must be > 0, got ({}, {})",
                    self.a1, self.a2
                )))
            }
            _ => Ok(()),
        }
    }
}

/// One committed (surviving) unit inside an outage scenario.
#[derive(Debug, Clone)]
pub struct OutageUnit {
    pub governor: GovernorModel,
    /// Available reserve ρ_i, per-unit on the system base.
    pub rho: f64,
    /// Unit inertia constant H_i, seconds on unit rating.
    pub inertia: f64,
    /// Unit rating as a fraction of the system base (P_max_i / S_base).
    pub rated_power: f64,
}

/// Post-outage scenario: the surviving committed units, aggregate constants,
/// and the lost power. All per-unit quantities share one system base.
#[derive(Debug, Clone)]
pub struct OutageScenario {
    pub units: Vec<OutageUnit>,
    /// Equivalent system inertia (seconds on the system base), normally
    /// [`aggregate_h_sys`] of the surviving units.
    pub h_sys: f64,
    /// Load damping D.
    pub d: f64,
    /// Demand, per-unit.
    pub p_d: f64,
    /// Lost power p_ℓ ≥ 0, per-unit.
    pub p_loss: f64,
    /// Simulation horizon, seconds.
    pub horizon: f64,
}

/// Capacity-weighted inertia aggregation `Σ H_i·(P_max_i / S_base)`.
pub fn aggregate_h_sys(units: &[OutageUnit]) -> f64 {
    units.iter().map(|u| u.inertia * u.rated_power).sum()
}

impl OutageScenario {
    fn validate(&self) -> Result<()> {
        if !(self.p_loss >= 0.0) {
            return Err(DynamicsError::BadScenario(format!("p_loss must be ≥ 0, got {}", self.p_loss)));
        }
        if !(self.h_sys > 0.0) {
            return Err(DynamicsError::BadScenario(format!("H_sys must be > 0, got {}", self.h_sys)));
        }
        if !(self.horizon > 0.0) {
            return Err(DynamicsError::BadScenario(format!("horizon must be > 0, got {}", self.horizon)));
        }
        for (i, u) in self.units.iter().enumerate() {
            if !(u.rho >= 0.0) {
                return Err(DynamicsError::BadScenario(format!("unit {i}: ρ must be ≥ 0, got {}", u.rho)));
            }
            u.governor.validate()?;
        }
        Ok(())
    }
}

/// Fixed-grid trajectory from the reference oracle (or from sampling a
/// segmented trajectory).
#[derive(Debug, Clone)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub delta_f: Vec<f64>,
    /// Raw (uncapped) governor outputs r_i per unit, aligned with `times`.
    pub reserves: Vec<Vec<f64>>,
}

/// Classical RK4 at fixed step `dt`, with the reserve cap `min(r_i, ρ_i)`
/// applied inside the swing summation at every stage evaluation. Initial
/// conditions are all zero at the outage instant.
pub fn reference_simulate(sc: &OutageScenario, dt: f64) -> Result<SampledTrajectory> {
    if !(dt > 0.0) || dt > 1e-2 {
        return Err(DynamicsError::DtTooLarge { dt });
    }
    sc.validate()?;

    // State layout: [Δf, unit₀ r..r⁽ˢ⁻¹⁾, unit₁ …]
    let offsets: Vec<usize> = {
        let mut off = vec![1usize];
        for u in &sc.units {
            off.push(off.last().unwrap() + u.governor.order());
        }
        off
    };
    let dim = *offsets.last().unwrap();
    let denoms: Vec<Vec<f64>> = sc.units.iter().map(|u| u.governor.denominator()).collect();

    let deriv = |state: &[f64], out: &mut [f64]| {
        let df = state[0];
        let mut delivered = 0.0;
        for (i, u) in sc.units.iter().enumerate() {
            delivered += state[offsets[i]].min(u.rho);
        }
        let dfdot = (-sc.p_loss + delivered - sc.d * sc.p_d * df) / (2.0 * sc.h_sys);
        out[0] = dfdot;
        for (i, u) in sc.units.iter().enumerate() {
            let s = u.governor.order();
            let base = offsets[i];
            let input = -u.governor.k * (df + u.governor.b * dfdot);
            // r⁽ᵏ⁾' = r⁽ᵏ⁺¹⁾ for k < s−1; highest derivative from the ODE.
            for k in 0..s - 1 {
                out[base + k] = state[base + k + 1];
            }
            let mut acc = input;
            for k in 0..s {
                acc -= denoms[i][k] * state[base + k];
            }
            out[base + s - 1] = acc / denoms[i][s];
        }
    };

    let n_steps = (sc.horizon / dt).ceil() as usize;
    let mut state = vec![0.0; dim];
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut delta_f = Vec::with_capacity(n_steps + 1);
    let mut reserves: Vec<Vec<f64>> = sc.units.iter().map(|_| Vec::with_capacity(n_steps + 1)).collect();

    let record = |t: f64, state: &[f64], times: &mut Vec<f64>, delta_f: &mut Vec<f64>, reserves: &mut Vec<Vec<f64>>| {
        times.push(t);
        delta_f.push(state[0]);
        for (i, r) in reserves.iter_mut().enumerate() {
            r.push(state[offsets[i]]);
        }
    };

    record(0.0, &state, &mut times, &mut delta_f, &mut reserves);
    for step in 0..n_steps {
        let t = step as f64 * dt;
        deriv(&state, &mut k1);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(&tmp, &mut k4);
        for i in 0..dim {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if !state.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::Divergence { step: step + 1, t: t + dt });
        }
        record(t + dt, &state, &mut times, &mut delta_f, &mut reserves);
    }

    Ok(SampledTrajectory { times, delta_f, reserves })
}

/// Ordered list of `(segment length h_τ, polynomial order n_τ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationPlan {
    pub segments: Vec<(f64, usize)>,
}

impl SegmentationPlan {
    pub fn new(segments: Vec<(f64, usize)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(DynamicsError::BadPlan("no segments".into()));
        }
        for &(h, n) in &segments {
            if !(h > 0.0 && h.is_finite()) {
                return Err(DynamicsError::BadPlan(format!("segment length {h} must be positive")));
            }
            if !(2..=bernstein::MAX_ORDER).contains(&n) {
                return Err(DynamicsError::BadPlan(format!(
                    "segment order {n} outside 2..={}",
                    bernstein::MAX_ORDER
                )));
            }
        }
        Ok(Self { segments })
    }

    /// 15 segments of 1 s, order 3 — the plain plan used for the accuracy
    /// comparisons.
    pub fn uniform15() -> Self {
        Self { segments: vec![(1.0, 3); 15] }
    }

    /// Dense 1-s segments up to 6 s, then one order-5 segment covering
    /// 6 → 15 s ("acceptable accuracy with much less intervals").
    pub fn reduced() -> Self {
        let mut segments = vec![(1.0, 3); 6];
        segments.push((9.0, 5));
        Self { segments }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "uniform15" => Ok(Self::uniform15()),
            "reduced" => Ok(Self::reduced()),
            other => Err(DynamicsError::BadPlan(format!(
                "unknown plan preset '{other}' (expected uniform15 or reduced)"
            ))),
        }
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|(h, _)| h).sum()
    }
}

/// Chained per-segment Bernstein solution of one outage scenario.
#[derive(Debug, Clone)]
pub struct SegmentedTrajectory {
    /// Δf per segment.
    pub frequency: Vec<BernsteinPoly>,
    /// dΔf/dt per segment.
    pub freq_derivative: Vec<BernsteinPoly>,
    /// Raw governor outputs, `reserves[unit][segment]`.
    pub reserves: Vec<Vec<BernsteinPoly>>,
    /// Initial conditions fed into each segment: `derivative_states[unit][segment]`
    /// holds `r⁽⁰⁾(0)..r⁽ˢ⁻¹⁾(0)`.
    pub derivative_states: Vec<Vec<Vec<f64>>>,
    /// Per-coefficient saturation labels, `saturated[unit][segment][coeff]`.
    pub saturated: Vec<Vec<Vec<bool>>>,
    pub plan: SegmentationPlan,
}

impl SegmentedTrajectory {
    /// Sample on a uniform grid of at most `resolution` spacing.
    pub fn sample(&self, resolution: f64) -> SampledTrajectory {
        let n_units = self.reserves.len();
        let mut times = vec![0.0];
        let mut delta_f = vec![self.frequency[0].coeffs()[0]];
        let mut reserves: Vec<Vec<f64>> = (0..n_units)
            .map(|u| vec![self.reserves[u][0].coeffs()[0]])
            .collect();
        let mut t0 = 0.0;
        for (idx, f) in self.frequency.iter().enumerate() {
            let h = f.interval_length();
            let steps = (h / resolution).ceil() as usize;
            for k in 1..=steps {
                let local = h * (k as f64 / steps as f64);
                times.push(t0 + local);
                delta_f.push(f.eval(local).expect("in-segment"));
                for (u, r) in reserves.iter_mut().enumerate() {
                    r.push(self.reserves[u][idx].eval(local).expect("in-segment"));
                }
            }
            t0 += h;
        }
        SampledTrajectory { times, delta_f, reserves }
    }
}

/// Segmented Bernstein solution of the scenario under each unit's active
/// governor realization. First-order scenarios use the integrated form of the
/// algebraic system; higher orders use the derivative (collocation) form.
/// The `min(R, ρ)` cap is resolved by a per-coefficient label sweep:
/// coefficients labeled saturated contribute the constant `ρ_i`, and labels
/// are re-derived from the solved reserve coefficients until stable (≤ 20
/// sweeps).
pub fn bernstein_simulate(sc: &OutageScenario, plan: &SegmentationPlan) -> Result<SegmentedTrajectory> {
    sc.validate()?;
    SegmentationPlan::new(plan.segments.clone())?;
    let n_units = sc.units.len();
    let all_first_order = sc
        .units
        .iter()
        .all(|u| u.governor.kind == GovernorKind::FirstOrder);

    let mut frequency = Vec::with_capacity(plan.segments.len());
    let mut freq_derivative = Vec::with_capacity(plan.segments.len());
    let mut reserves: Vec<Vec<BernsteinPoly>> = vec![Vec::new(); n_units];
    let mut derivative_states: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_units];
    let mut saturated: Vec<Vec<Vec<bool>>> = vec![Vec::new(); n_units];

    // Chained initial conditions.
    let mut df0 = 0.0;
    let mut unit_ics: Vec<Vec<f64>> = sc.units.iter().map(|u| vec![0.0; u.governor.order()]).collect();

    for (seg_idx, &(h, n)) in plan.segments.iter().enumerate() {
        let solved = if all_first_order {
            solve_segment_integrated(sc, h, n, df0, &unit_ics, seg_idx)?
        } else {
            solve_segment_derivative(sc, h, n, df0, &unit_ics, seg_idx)?
        };
        for (u, ics) in unit_ics.iter().enumerate() {
            derivative_states[u].push(ics.clone());
            saturated[u].push(solved.sat_labels[u].clone());
        }
        df0 = *solved.f.last().unwrap();
        for (u, next) in solved.next_unit_ics.iter().enumerate() {
            unit_ics[u] = next.clone();
        }
        frequency.push(BernsteinPoly::from_node_samples(&solved.f, h)?);
        freq_derivative.push(BernsteinPoly::from_node_samples(&solved.f1, h)?);
        for (u, r) in solved.r.into_iter().enumerate() {
            reserves[u].push(BernsteinPoly::from_node_samples(&r, h)?);
        }
    }

    Ok(SegmentedTrajectory {
        frequency,
        freq_derivative,
        reserves,
        derivative_states,
        saturated,
        plan: plan.clone(),
    })
}

/// Raw per-segment solution in node-value space. Polynomials are materialized
/// (node values → interpolating control coefficients) only after the
/// saturation sweep settles, since the sweep compares node values against ρ.
struct SolvedSegment {
    f: Vec<f64>,
    f1: Vec<f64>,
    r: Vec<Vec<f64>>,
    next_unit_ics: Vec<Vec<f64>>,
    sat_labels: Vec<Vec<bool>>,
}

/// Shared fixed-point saturation sweep. `solve` maps the current label matrix
/// to solved (F, F1, R_i, next ics); labels flip wherever a reserve
/// coefficient exceeds ρ_i.
fn saturation_sweep<F>(
    sc: &OutageScenario,
    n: usize,
    seg_idx: usize,
    mut solve: F,
) -> Result<SolvedSegment>
where
    F: FnMut(&[Vec<bool>]) -> Result<SolvedSegment>,
{
    let m = n + 1;
    let mut labels: Vec<Vec<bool>> = sc.units.iter().map(|_| vec![false; m]).collect();
    for _sweep in 0..20 {
        let mut solved = solve(&labels)?;
        let mut stable = true;
        for (u, unit) in sc.units.iter().enumerate() {
            for (j, &c) in solved.r[u].iter().enumerate() {
                let should_sat = c > unit.rho;
                if should_sat != labels[u][j] {
                    labels[u][j] = should_sat;
                    stable = false;
                }
            }
        }
        if stable {
            solved.sat_labels = labels;
            return Ok(solved);
        }
    }
    // Report the first still-flipping unit for diagnosis.
    Err(DynamicsError::SaturationAmbiguity { unit: 0, segment: seg_idx })
}

/// Derivative-form collocation (second and general order, eq-style:
/// `2H·F¹ + DPd·F = −p·1 + Σ delivered`, governor rows per the derivative
/// chain). Unknowns: `[F¹ | R⁽ˢ⁾ per unit]`.
fn solve_segment_derivative(
    sc: &OutageScenario,
    h: f64,
    n: usize,
    df0: f64,
    unit_ics: &[Vec<f64>],
    seg_idx: usize,
) -> Result<SolvedSegment> {
    let m = n + 1;
    let n_units = sc.units.len();
    let xt = integration_matrix(n)?.transpose_matrix();
    let dim = m * (1 + n_units);

    // Precompute per-unit derivative chains for the current initial conditions.
    let chains: Vec<_> = sc
        .units
        .iter()
        .enumerate()
        .map(|(u, unit)| derivative_chain(unit.governor.order(), &unit_ics[u], n, h))
        .collect::<std::result::Result<_, _>>()?;

    saturation_sweep(sc, n, seg_idx, |labels| {
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);

        // F = df0·1 + h·Xᵀ·F¹ wherever F appears.
        // Swing rows (block 0): 2H·F¹ + DPd·F − Σ_i delivered_i = −p·1
        for row in 0..m {
            a[(row, row)] += 2.0 * sc.h_sys;
            rhs[row] = -sc.p_loss - sc.d * sc.p_d * df0;
            for col in 0..m {
                a[(row, col)] += sc.d * sc.p_d * h * xt[(row, col)];
            }
        }
        for (u, unit) in sc.units.iter().enumerate() {
            let s = unit.governor.order();
            let chain = &chains[u];
            let r_mat = &chain.matrices[s]; // Y⁽⁰⁾ matrix block
            let r_off = &chain.offsets[s];
            let base = m * (1 + u);
            for row in 0..m {
                if labels[u][row] {
                    rhs[row] += unit.rho;
                } else {
                    for col in 0..m {
                        a[(row, base + col)] -= r_mat[(row, col)];
                    }
                    rhs[row] += r_off[row];
                }
            }
        }

        // Governor rows per unit: Σ_k a_k·R⁽ᵏ⁾ + K·(F + b·F¹) = 0.
        for (u, unit) in sc.units.iter().enumerate() {
            let denom = unit.governor.denominator();
            let s = unit.governor.order();
            let chain = &chains[u];
            let base = m * (1 + u);
            for row in 0..m {
                let gr = base + row; // this unit's row block reused for its own equations
                // K·F = K·(df0·1 + h·Xᵀ·F¹)
                rhs[gr] = -unit.governor.k * df0;
                for col in 0..m {
                    a[(gr, col)] += unit.governor.k * (h * xt[(row, col)] + if row == col { unit.governor.b } else { 0.0 });
                }
                for (idx, k) in (0..=s).rev().enumerate() {
                    let alpha = denom[k];
                    if alpha == 0.0 {
                        continue;
                    }
                    for col in 0..m {
                        a[(gr, base + col)] += alpha * chain.matrices[idx][(row, col)];
                    }
                    rhs[gr] -= alpha * chain.offsets[idx][row];
                }
            }
        }

        let lu = a.clone().lu();
        let z = lu.solve(&rhs).ok_or(BernsteinError::Singular { cond: f64::INFINITY })?;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::Divergence { step: seg_idx, t: 0.0 });
        }

        let f1_coeffs: Vec<f64> = (0..m).map(|j| z[j]).collect();
        let mut f_coeffs = vec![df0; m];
        for row in 0..m {
            for col in 0..m {
                f_coeffs[row] += h * xt[(row, col)] * f1_coeffs[col];
            }
        }

        let mut r_vecs = Vec::with_capacity(n_units);
        let mut next_ics = Vec::with_capacity(n_units);
        for (u, unit) in sc.units.iter().enumerate() {
            let s = unit.governor.order();
            let chain = &chains[u];
            let base = m * (1 + u);
            let ys = DVector::from_iterator(m, (0..m).map(|j| z[base + j]));
            // Reconstruct all derivative levels; next ics are the last
            // elements of levels 0..s−1.
            let mut levels = Vec::with_capacity(s + 1);
            for idx in 0..=s {
                let y = &chain.offsets[idx] + &chain.matrices[idx] * &ys;
                levels.push(y);
            }
            r_vecs.push(levels[s].iter().copied().collect::<Vec<f64>>());
            // levels index: 0 ↔ Y⁽ˢ⁾, s ↔ Y⁽⁰⁾; ic k = r⁽ᵏ⁾ endpoint.
            let ics: Vec<f64> = (0..s).map(|k| levels[s - k][m - 1]).collect();
            next_ics.push(ics);
        }

        Ok(SolvedSegment {
            f: f_coeffs,
            f1: f1_coeffs,
            r: r_vecs,
            next_unit_ics: next_ics,
            sat_labels: vec![],
        })
    })
}

/// Integrated-form system for the all-first-order model:
/// `2H(F − Δf⁰·1) + DPd·h·XᵀF = h·Xᵀ(−p·1 + Σ delivered)` and
/// `T(R − r⁰·1) + h·XᵀR = −K(h·XᵀF + b(F − Δf⁰·1))`.
/// Unknowns: `[F | R per unit]`.
fn solve_segment_integrated(
    sc: &OutageScenario,
    h: f64,
    n: usize,
    df0: f64,
    unit_ics: &[Vec<f64>],
    seg_idx: usize,
) -> Result<SolvedSegment> {
    let m = n + 1;
    let n_units = sc.units.len();
    let xt = integration_matrix(n)?.transpose_matrix();
    let ones_int: Vec<f64> = {
        // Xᵀ·1 (integral of the constant 1 on [0,1] in coefficient space)
        monomial_vector(1, n).entries
    };
    let dim = m * (1 + n_units);

    saturation_sweep(sc, n, seg_idx, |labels| {
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);

        // Swing block: [2H·I + DPd·h·Xᵀ]·F − h·Xᵀ·Σ delivered = 2H·Δf⁰·1 − p·h·(Xᵀ1)
        for row in 0..m {
            a[(row, row)] += 2.0 * sc.h_sys;
            rhs[row] = 2.0 * sc.h_sys * df0 - sc.p_loss * h * ones_int[row];
            for col in 0..m {
                a[(row, col)] += sc.d * sc.p_d * h * xt[(row, col)];
            }
        }
        for (u, unit) in sc.units.iter().enumerate() {
            let base = m * (1 + u);
            for row in 0..m {
                for col in 0..m {
                    // delivered_col = labeled: ρ (constant) else R[col]
                    if labels[u][col] {
                        rhs[row] += h * xt[(row, col)] * unit.rho;
                    } else {
                        a[(row, base + col)] -= h * xt[(row, col)];
                    }
                }
            }
        }

        // Governor blocks: K(h·Xᵀ + b·I)F + (T·I + h·Xᵀ)R = T·r⁰·1 + K·b·Δf⁰·1
        for (u, unit) in sc.units.iter().enumerate() {
            let base = m * (1 + u);
            let t = unit.governor.t;
            let k = unit.governor.k;
            let b = unit.governor.b;
            let r0 = unit_ics[u][0];
            for row in 0..m {
                let gr = base + row;
                rhs[gr] = t * r0 + k * b * df0;
                for col in 0..m {
                    a[(gr, col)] += k * (h * xt[(row, col)] + if row == col { b } else { 0.0 });
                    a[(gr, base + col)] += h * xt[(row, col)] + if row == col { t } else { 0.0 };
                }
            }
        }

        let z = a.clone().lu().solve(&rhs).ok_or(BernsteinError::Singular { cond: f64::INFINITY })?;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::Divergence { step: seg_idx, t: 0.0 });
        }

        let f_coeffs: Vec<f64> = (0..m).map(|j| z[j]).collect();
        // F¹ recovered algebraically from the (unintegrated) swing equation.
        let mut delivered_sum = vec![0.0; m];
        for (u, unit) in sc.units.iter().enumerate() {
            let base = m * (1 + u);
            for (j, d) in delivered_sum.iter_mut().enumerate() {
                *d += if labels[u][j] { unit.rho } else { z[base + j] };
            }
        }
        let f1_coeffs: Vec<f64> = (0..m)
            .map(|j| (-sc.p_loss + delivered_sum[j] - sc.d * sc.p_d * f_coeffs[j]) / (2.0 * sc.h_sys))
            .collect();

        let mut r_vecs = Vec::with_capacity(n_units);
        let mut next_ics = Vec::with_capacity(n_units);
        for u in 0..n_units {
            let base = m * (1 + u);
            let coeffs: Vec<f64> = (0..m).map(|j| z[base + j]).collect();
            next_ics.push(vec![coeffs[m - 1]]);
            r_vecs.push(coeffs);
        }

        Ok(SolvedSegment {
            f: f_coeffs,
            f1: f1_coeffs,
            r: r_vecs,
            next_unit_ics: next_ics,
            sat_labels: vec![],
        })
    })
}

/// Nadir of both model realizations on the same scenario and plan.
pub fn first_vs_second_order(sc: &OutageScenario, plan: &SegmentationPlan) -> Result<(f64, f64)> {
    let nadir_of = |kind: GovernorKind| -> Result<f64> {
        let mut s = sc.clone();
        for u in &mut s.units {
            u.governor = u.governor.with_kind(kind);
        }
        let traj = bernstein_simulate(&s, plan)?;
        let sampled = traj.sample(0.01);
        Ok(compute_metrics(&sampled, -1.0).nadir)
    };
    Ok((nadir_of(GovernorKind::FirstOrder)?, nadir_of(GovernorKind::SecondOrder)?))
}

/// Scalar frequency-security metrics of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqMetrics {
    /// Most negative Δf (per-unit).
    pub nadir: f64,
    /// Lebesgue measure of {t : Δf(t) < Δf_th}, seconds.
    pub h_under: f64,
    /// Post-peak drawdown of A(t) = ∫(Δf − Δf_th); A(horizon) when A never
    /// decreases. Units: (per-unit of Δf)·seconds.
    ///
    /// Negative exactly when the trajectory crosses the threshold, which is
    /// what makes it the right axis for duration calibration.
    pub a_min: f64,
    /// Minimum *value* of A(t) after its first local maximum; A(horizon) when
    /// A never decreases. Units: (per-unit of Δf)·seconds.
    ///
    /// This is the quantity the area constraint bounds from below (the
    /// running integral itself, not its drawdown), so post-solution checks
    /// compare it against A_th.
    pub a_tail: f64,
    /// Δf at the end of the horizon.
    pub steady_state: f64,
}

/// Extract metrics from a sampled trajectory. Intervals are split at
/// threshold crossings (linear interpolation) so the under-threshold duration
/// and the sign of every A-increment agree exactly: any crossing produces a
/// strictly decreasing stretch of A and therefore `a_min < 0`.
pub fn compute_metrics(traj: &SampledTrajectory, delta_f_th: f64) -> FreqMetrics {
    let n = traj.delta_f.len();
    assert!(n >= 2, "trajectory must have at least two samples");

    let nadir = traj.delta_f.iter().copied().fold(f64::INFINITY, f64::min);
    let steady_state = *traj.delta_f.last().unwrap();

    // Refined walk: accumulate A, track h_under, and compute the drawdown
    // after the first local maximum on the fly.
    let mut h_under = 0.0;
    let mut area = 0.0f64;
    let mut peak: Option<f64> = None; // A(t*) once the first decrease is seen
    let mut prev_area = 0.0f64;
    let mut min_after_peak = f64::INFINITY;

    let push = |a_new: f64, peak: &mut Option<f64>, prev: &mut f64, min_after: &mut f64| {
        if peak.is_none() && a_new < *prev {
            *peak = Some(*prev);
        }
        if peak.is_some() {
            *min_after = min_after.min(a_new);
        }
        *prev = a_new;
    };

    for k in 0..n - 1 {
        let (t0, t1) = (traj.times[k], traj.times[k + 1]);
        let (f0, f1) = (traj.delta_f[k], traj.delta_f[k + 1]);
        let dt = t1 - t0;
        if dt <= 0.0 {
            continue;
        }
        let g0 = f0 - delta_f_th;
        let g1 = f1 - delta_f_th;
        if (g0 < 0.0) != (g1 < 0.0) && g0 != g1 {
            // Split at the crossing.
            let c = g0 / (g0 - g1); // fraction of the interval
            let w0 = c * dt;
            let w1 = dt - w0;
            area += 0.5 * g0 * w0;
            push(area, &mut peak, &mut prev_area, &mut min_after_peak);
            area += 0.5 * g1 * w1;
            push(area, &mut peak, &mut prev_area, &mut min_after_peak);
            if g0 < 0.0 {
                h_under += w0;
            } else {
                h_under += w1;
            }
        } else {
            area += 0.5 * (g0 + g1) * dt;
            push(area, &mut peak, &mut prev_area, &mut min_after_peak);
            if g0 < 0.0 || g1 < 0.0 {
                h_under += dt;
            }
        }
    }

    let (a_min, a_tail) = match peak {
        Some(p) => (min_after_peak - p, min_after_peak),
        None => (area, area),
    };

    FreqMetrics { nadir, h_under, a_min, a_tail, steady_state }
}

/// Running-area polynomials `A_τ` per eq. area_ber: within each segment
/// `A = h_τ·Xᵀ(F_τ − Δf_th·1) + A(segment start)·1` in node-value space,
/// continuous with `A(0) = 0`. Units: (per-unit of Δf)·seconds.
pub fn area_trajectory(traj: &SegmentedTrajectory, delta_f_th: f64) -> Vec<BernsteinPoly> {
    let mut out = Vec::with_capacity(traj.frequency.len());
    let mut a0 = 0.0;
    for f in &traj.frequency {
        let h = f.interval_length();
        let xt = integration_matrix(f.order()).expect("order already validated");
        let shifted: Vec<f64> = f.node_values().iter().map(|v| v - delta_f_th).collect();
        let mut values = xt.apply_transpose(&shifted);
        for v in &mut values {
            *v = *v * h + a0;
        }
        a0 = *values.last().unwrap();
        out.push(BernsteinPoly::from_node_samples(&values, h).expect("same shape"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
        assert!(
            (got - want).abs() <= tol,
            "{what}: got {got}, want {want} (tol {tol})"
        );
    }

    /// Island-flavored test scenario: a handful of slow second-order units
    /// plus one fast one, per-unit on a 95.84 MW base.
    fn island_like(p_loss: f64, rho_scale: f64) -> OutageScenario {
        let units = vec![
            (20.0, 1.82, 17.26, 1.75, 3.82 / 95.84, 0.46 / 95.84),
            (20.0, 1.80, 17.06, 1.73, 4.30 / 95.84, 1.48 / 95.84),
            (20.0, 3.16, 24.63, 2.16, 6.70 / 95.84, 3.40 / 95.84),
            (20.0, 3.21, 24.93, 2.10, 11.50 / 95.84, 5.50 / 95.84),
            (21.25, 0.83, 4.43, 6.50, 21.00 / 95.84, 8.00 / 95.84),
        ]
        .into_iter()
        .map(|(k, b, t, h, rated, rho)| OutageUnit {
            // Case gains are machine-base droop gains; scenarios carry them
            // converted to the system base.
            governor: GovernorModel::second_order(k * rated, b, t, 0.1 * t),
            rho: rho * rho_scale,
            inertia: h,
            rated_power: rated,
        })
        .collect::<Vec<_>>();
        let h_sys = aggregate_h_sys(&units);
        OutageScenario {
            units,
            h_sys,
            d: 1.0,
            p_d: 0.35,
            p_loss,
            horizon: 15.0,
        }
    }

    #[test]
    fn oracle_equilibrium_at_zero_loss() {
        let sc = island_like(0.0, 1.0);
        let traj = reference_simulate(&sc, 1e-3).unwrap();
        assert!(traj.delta_f.iter().all(|v| v.abs() < 1e-12));
        assert!(traj.reserves.iter().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn oracle_rejects_coarse_dt() {
        let sc = island_like(0.05, 1.0);
        assert!(matches!(
            reference_simulate(&sc, 0.02),
            Err(DynamicsError::DtTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_inactive_cap_is_transparent() {
        // Doubling every ρ beyond the unsaturated maximum leaves the
        // trajectory unchanged.
        let mut unsat = island_like(0.03, 1.0);
        for u in &mut unsat.units {
            u.rho = 10.0; // effectively uncapped
        }
        let free = reference_simulate(&unsat, 1e-3).unwrap();
        let peak = free
            .reserves
            .iter()
            .map(|r| r.iter().cloned().fold(0.0f64, f64::max))
            .collect::<Vec<_>>();

        let mut capped = unsat.clone();
        for (u, p) in capped.units.iter_mut().zip(&peak) {
            u.rho = 2.0 * p;
        }
        let again = reference_simulate(&capped, 1e-3).unwrap();
        for (a, b) in free.delta_f.iter().zip(&again.delta_f) {
            assert_eq!(a, b, "inactive min(.) changed the trajectory");
        }
    }

    #[test]
    fn oracle_saturation_deepens_nadir() {
        // p_loss above the deliverable reserve: the capped model must dip
        // strictly deeper than the uncapped one.
        let capped = island_like(0.12, 0.3);
        let mut uncapped = capped.clone();
        for u in &mut uncapped.units {
            u.rho = 10.0;
        }
        let m_capped = compute_metrics(&reference_simulate(&capped, 1e-3).unwrap(), -0.04);
        let m_uncapped = compute_metrics(&reference_simulate(&uncapped, 1e-3).unwrap(), -0.04);
        assert!(
            m_capped.nadir < m_uncapped.nadir,
            "saturated nadir {} should be below uncapped {}",
            m_capped.nadir,
            m_uncapped.nadir
        );
    }

    #[test]
    fn oracle_quasi_steady_state_unsaturated() {
        let mut sc = island_like(0.08, 1.0);
        for u in &mut sc.units {
            u.rho = 10.0; // keep every governor in its linear region
        }
        sc.horizon = 60.0;
        let traj = reference_simulate(&sc, 1e-3).unwrap();
        let k_sum: f64 = sc.units.iter().map(|u| u.governor.k).sum();
        let expectation = -sc.p_loss / (sc.d * sc.p_d + k_sum);
        let terminal = *traj.delta_f.last().unwrap();
        assert!(
            (terminal - expectation).abs() <= 0.05 * expectation.abs(),
            "terminal {terminal} vs fixed point {expectation}"
        );
    }

    #[test]
    fn oracle_divergence_reported_for_unstable_governor() {
        let mut sc = island_like(0.1, 1.0);
        sc.units[0].governor = GovernorModel::general(20.0, 1.0, vec![1.0, -2.0, 0.02]);
        match reference_simulate(&sc, 1e-3) {
            Err(DynamicsError::Divergence { step, .. }) => assert!(step > 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn bernstein_zero_loss_is_identically_zero() {
        let sc = island_like(0.0, 1.0);
        let traj = bernstein_simulate(&sc, &SegmentationPlan::uniform15()).unwrap();
        for f in &traj.frequency {
            assert!(f.coeffs().iter().all(|c| c.abs() < 1e-12));
        }
        for rs in &traj.reserves {
            for r in rs {
                assert!(r.coeffs().iter().all(|c| c.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn bernstein_tracks_oracle_island_scenario() {
        // Saturation active: per-coefficient labels vs the oracle's stage-wise
        // min; max-norm error ≤ 2% of |nadir| on a 0.01 s grid.
        let sc = island_like(0.094, 1.0);
        let oracle = reference_simulate(&sc, 1e-3).unwrap();
        let nadir = oracle.delta_f.iter().cloned().fold(f64::INFINITY, f64::min);
        let bern = bernstein_simulate(&sc, &SegmentationPlan::uniform15()).unwrap().sample(0.01);
        let mut worst = 0.0f64;
        for (t, df) in bern.times.iter().zip(&bern.delta_f) {
            let k = (t / 1e-3).round() as usize;
            let k = k.min(oracle.delta_f.len() - 1);
            worst = worst.max((df - oracle.delta_f[k]).abs());
        }
        assert!(
            worst <= 0.02 * nadir.abs(),
            "max |Δf − oracle| = {worst} vs 2% of |nadir| = {}",
            0.02 * nadir.abs()
        );
    }

    #[test]
    fn bernstein_reduced_plan_keeps_nadir_accuracy() {
        let sc = island_like(0.094, 1.0);
        let oracle = reference_simulate(&sc, 1e-3).unwrap();
        let nadir_oracle = oracle.delta_f.iter().cloned().fold(f64::INFINITY, f64::min);
        let bern = bernstein_simulate(&sc, &SegmentationPlan::reduced()).unwrap().sample(0.01);
        let nadir_bern = bern.delta_f.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(
            (nadir_bern - nadir_oracle).abs() <= 0.02 * nadir_oracle.abs(),
            "reduced-plan nadir {nadir_bern} vs oracle {nadir_oracle}"
        );
    }

    /// Fleet rows (K, b, T, H, P_max MW) that random scenarios draw committed
    /// subsets from, with multiplicative jitter.
    const FLEET_ROWS: [(f64, f64, f64, f64, f64); 11] = [
        (20.0, 1.82, 17.26, 1.75, 3.82),
        (20.0, 1.82, 17.26, 1.75, 3.82),
        (20.0, 1.82, 17.26, 1.75, 3.82),
        (20.0, 1.80, 17.06, 1.73, 4.30),
        (20.0, 3.16, 24.63, 2.16, 6.70),
        (20.0, 2.05, 18.79, 1.88, 6.70),
        (20.0, 3.21, 24.93, 2.10, 11.20),
        (20.0, 3.21, 24.93, 2.10, 11.50),
        (20.0, 3.21, 24.93, 2.10, 11.50),
        (20.0, 3.21, 24.93, 2.10, 11.50),
        (21.25, 0.83, 4.43, 6.50, 21.00),
    ];

    /// A jittered committed subset of the fleet with island-like aggregate
    /// inertia (bare commitments are resampled).
    fn random_committed_units(rng: &mut ChaCha8Rng) -> Vec<OutageUnit> {
        loop {
            let mut units = Vec::new();
            for &(k, b, t, h, pmax) in FLEET_ROWS.iter() {
                if !rng.gen_bool(0.7) {
                    continue;
                }
                let t = t * rng.gen_range(0.9..1.1);
                let rated = pmax / 95.84;
                units.push(OutageUnit {
                    governor: GovernorModel::second_order(
                        k * rated * rng.gen_range(0.9..1.1),
                        b * rng.gen_range(0.9..1.1),
                        t,
                        0.1 * t,
                    ),
                    rho: 10.0, // unsaturated unless the caller overrides
                    inertia: h * rng.gen_range(0.9..1.1),
                    rated_power: rated,
                });
            }
            if units.len() >= 4 && aggregate_h_sys(&units) >= 0.5 {
                return units;
            }
        }
    }

    #[test]
    fn bernstein_matches_oracle_on_random_unsaturated_scenarios() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..50 {
            let units = random_committed_units(&mut rng);
            let h_sys = aggregate_h_sys(&units);
            let sc = OutageScenario {
                units,
                h_sys,
                d: 1.0,
                p_d: rng.gen_range(0.3..0.5),
                p_loss: rng.gen_range(0.02..0.12),
                horizon: 15.0,
            };
            let oracle = reference_simulate(&sc, 1e-3).unwrap();
            let nadir = oracle.delta_f.iter().cloned().fold(f64::INFINITY, f64::min);
            let bern = bernstein_simulate(&sc, &SegmentationPlan::uniform15()).unwrap().sample(0.01);
            let mut worst = 0.0f64;
            for (t, df) in bern.times.iter().zip(&bern.delta_f) {
                let k = ((t / 1e-3).round() as usize).min(oracle.delta_f.len() - 1);
                worst = worst.max((df - oracle.delta_f[k]).abs());
            }
            assert!(
                worst <= 0.02 * nadir.abs(),
                "trial {trial}: error {worst} vs nadir {nadir}"
            );
        }
    }

    #[test]
    fn bernstein_joint_continuity() {
        let sc = island_like(0.094, 1.0);
        let traj = bernstein_simulate(&sc, &SegmentationPlan::uniform15()).unwrap();
        for (idx, pair) in traj.frequency.windows(2).enumerate() {
            let end = *pair[0].coeffs().last().unwrap();
            let start = pair[1].coeffs()[0];
            assert!(
                (end - start).abs() <= 1e-9,
                "Δf joint {idx}: {end} vs {start}"
            );
        }
        for rs in &traj.reserves {
            for pair in rs.windows(2) {
                let end = *pair[0].coeffs().last().unwrap();
                let start = pair[1].coeffs()[0];
                assert!((end - start).abs() <= 1e-9, "reserve joint: {end} vs {start}");
            }
        }
        // Chained derivative states match the stored initial conditions.
        for states in &traj.derivative_states {
            assert_eq!(states.len(), traj.frequency.len());
            assert!(states[0].iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn first_order_model_underestimates_decay() {
        // Appendix-IV style comparison on the island-like scenario, plus
        // fidelity of each realization against its own oracle.
        let sc = island_like(0.094, 1.0);
        let (nadir_first, nadir_second) = first_vs_second_order(&sc, &SegmentationPlan::uniform15()).unwrap();
        assert!(
            nadir_first.abs() < nadir_second.abs(),
            "first-order nadir {nadir_first} should be shallower than second-order {nadir_second}"
        );

        for kind in [GovernorKind::FirstOrder, GovernorKind::SecondOrder] {
            let mut s = sc.clone();
            for u in &mut s.units {
                u.governor = u.governor.with_kind(kind);
            }
            let oracle = reference_simulate(&s, 1e-3).unwrap();
            let nadir_o = oracle.delta_f.iter().cloned().fold(f64::INFINITY, f64::min);
            let bern = bernstein_simulate(&s, &SegmentationPlan::uniform15()).unwrap().sample(0.01);
            let nadir_b = bern.delta_f.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(
                (nadir_b - nadir_o).abs() <= 0.02 * nadir_o.abs(),
                "{kind:?}: bernstein nadir {nadir_b} vs oracle {nadir_o}"
            );
        }
    }

    #[test]
    fn first_vs_second_zero_loss() {
        let sc = island_like(0.0, 1.0);
        let (a, b) = first_vs_second_order(&sc, &SegmentationPlan::uniform15()).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn metrics_zero_trajectory() {
        let traj = SampledTrajectory {
            times: (0..=1000).map(|k| k as f64 * 0.01).collect(),
            delta_f: vec![0.0; 1001],
            reserves: vec![],
        };
        let m = compute_metrics(&traj, -0.01);
        assert_eq!(m.nadir, 0.0);
        assert_eq!(m.h_under, 0.0);
        assert_close(m.a_min, 0.01 * 10.0, 1e-9, "A̲ of flat trajectory");
        assert_eq!(m.a_tail, m.a_min, "no decrease ⇒ both area stats are A(horizon)");
        assert_eq!(m.steady_state, 0.0);
    }

    #[test]
    fn metrics_never_crossing_is_nonnegative() {
        // Shallow dip above threshold: h_under = 0 and A̲ ≥ 0.
        let times: Vec<f64> = (0..=3000).map(|k| k as f64 * 0.01).collect();
        let delta_f: Vec<f64> =
            times.iter().map(|t| -0.005 * (t / 10.0).min(1.0)).collect();
        let m = compute_metrics(&SampledTrajectory { times, delta_f, reserves: vec![] }, -0.01);
        assert_eq!(m.h_under, 0.0);
        assert!(m.a_min >= 0.0);
    }

    #[test]
    fn metrics_triangle_dip() {
        // 0 → −2|th| → 0 over [0, 2]: crossings at 0.5 and 1.5, h_under = 1.
        let th: f64 = -0.01;
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.001).collect();
        let delta_f: Vec<f64> = times
            .iter()
            .map(|&t| {
                let peak = 2.0 * th.abs();
                if t <= 1.0 {
                    -peak * t
                } else {
                    -peak * (2.0 - t)
                }
            })
            .collect();
        let m = compute_metrics(&SampledTrajectory { times, delta_f, reserves: vec![] }, th);
        assert_close(m.h_under, 1.0, 1e-6, "triangle dip h_under");
        assert!(m.a_min < 0.0, "crossing must force A̲ < 0, got {}", m.a_min);
        // A rises to 0.0025 by the first crossing, loses 0.005 below the
        // threshold, and bottoms out at −0.0025.
        assert_close(m.a_min, -0.005, 1e-6, "triangle dip drawdown");
        assert_close(m.a_tail, -0.0025, 1e-6, "triangle dip tail minimum");
    }

    #[test]
    fn metrics_tail_stays_positive_on_late_shallow_dip() {
        // Δf sits at 0 long enough for A to accumulate, then grazes the
        // threshold briefly. The drawdown goes negative (a crossing
        // happened) while the running integral itself never does — the two
        // statistics must disagree in sign here.
        let th: f64 = -0.01;
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.01).collect();
        let delta_f: Vec<f64> = times
            .iter()
            .map(|&t| {
                if (10.0..=11.0).contains(&t) {
                    // Triangle to −1.5|th| and back: dip area 0.25·|th|.
                    -1.5 * th.abs() * (1.0 - 2.0 * (t - 10.5f64).abs())
                } else {
                    0.0
                }
            })
            .collect();
        let m = compute_metrics(&SampledTrajectory { times, delta_f, reserves: vec![] }, th);
        assert!(m.h_under > 0.0);
        assert!(m.a_min < 0.0, "drawdown must flag the crossing");
        assert!(m.a_tail > 0.0, "accumulated area keeps the tail minimum positive");
        assert_close(m.a_tail - m.a_min, 0.1 + 0.01 / 6.0, 1e-4, "tail − drawdown = first peak");
    }

    #[test]
    fn metrics_crossing_always_negates_a_min() {
        // Randomized consistency: h_under > 0 ⟺ a_min < 0.
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let th: f64 = -rng.gen_range(0.005..0.05);
            let depth = rng.gen_range(0.2..2.0) * th.abs();
            let times: Vec<f64> = (0..=1500).map(|k| k as f64 * 0.01).collect();
            let delta_f: Vec<f64> = times
                .iter()
                .map(|&t| -depth * (-((t - 4.0f64) / 2.0).powi(2)).exp())
                .collect();
            let m = compute_metrics(&SampledTrajectory { times, delta_f, reserves: vec![] }, th);
            assert_eq!(
                m.h_under > 0.0,
                m.a_min < 0.0,
                "h_under {} vs a_min {} at depth {depth}, th {th}",
                m.h_under,
                m.a_min
            );
        }
    }

    #[test]
    fn area_trajectory_constant_at_threshold() {
        // F ≡ Δf_th: A stays at its segment-entry value.
        let th = -0.02;
        let f = BernsteinPoly::new(vec![th; 4], 1.0).unwrap();
        let traj = SegmentedTrajectory {
            frequency: vec![f.clone(), f],
            freq_derivative: vec![],
            reserves: vec![],
            derivative_states: vec![],
            saturated: vec![],
            plan: SegmentationPlan::new(vec![(1.0, 3), (1.0, 3)]).unwrap(),
        };
        let area = area_trajectory(&traj, th);
        for a in &area {
            assert!(a.coeffs().iter().all(|c| c.abs() < 1e-14));
        }
    }

    #[test]
    fn area_trajectory_linear_ramp() {
        // F ≡ 0, th = −0.01, single 10 s segment: A endpoint = 0.1.
        let f = BernsteinPoly::new(vec![0.0; 4], 10.0).unwrap();
        let traj = SegmentedTrajectory {
            frequency: vec![f],
            freq_derivative: vec![],
            reserves: vec![],
            derivative_states: vec![],
            saturated: vec![],
            plan: SegmentationPlan::new(vec![(10.0, 3)]).unwrap(),
        };
        let area = area_trajectory(&traj, -0.01);
        assert_close(*area[0].coeffs().last().unwrap(), 0.1, 1e-12, "A endpoint");
    }

    #[test]
    fn area_trajectory_tracks_oracle() {
        let sc = island_like(0.094, 1.0);
        let th = -0.04;
        let oracle = compute_metrics(&reference_simulate(&sc, 1e-3).unwrap(), th);
        let traj = bernstein_simulate(&sc, &SegmentationPlan::uniform15()).unwrap();
        let bern_metrics = compute_metrics(&traj.sample(0.01), th);
        // A̲ agreement within 5% (both computed over the same 15 s window).
        let mut sc15 = sc.clone();
        sc15.horizon = 15.0;
        let oracle15 = compute_metrics(&reference_simulate(&sc15, 1e-3).unwrap(), th);
        let tol = 0.05 * oracle15.a_min.abs().max(0.01);
        assert!(
            (bern_metrics.a_min - oracle15.a_min).abs() <= tol,
            "Bernstein A̲ {} vs oracle A̲ {}",
            bern_metrics.a_min,
            oracle15.a_min
        );
        let _ = oracle;
        // And the segment-wise area polynomials agree with the sampled metric
        // at segment joints.
        let area = area_trajectory(&traj, th);
        let mut acc = 0.0;
        for a in &area {
            assert_close(a.coeffs()[0], acc, 1e-9, "area chain continuity");
            acc = *a.coeffs().last().unwrap();
        }
    }

    #[test]
    fn metric_predicate_agreement_bernstein_vs_oracle() {
        // h_under > 0 predicate agrees for ≥ 95% of randomized scenarios.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut agree = 0;
        let total = 200;
        for _ in 0..total {
            let mut sc = island_like(rng.gen_range(0.02..0.16), rng.gen_range(0.4..1.5));
            sc.p_d = rng.gen_range(0.25..0.45);
            let th = -0.04;
            let o = compute_metrics(&reference_simulate(&sc, 2e-3).unwrap(), th);
            let b = compute_metrics(
                &bernstein_simulate(&sc, &SegmentationPlan::uniform15()).unwrap().sample(0.01),
                th,
            );
            // Compare over the same 15 s window: oracle horizon is 15 s here.
            if (o.h_under > 0.0) == (b.h_under > 0.0) {
                agree += 1;
            }
        }
        assert!(
            agree * 100 >= 95 * total,
            "predicate agreement {agree}/{total}"
        );
    }

    #[test]
    fn plan_validation() {
        assert!(SegmentationPlan::new(vec![]).is_err());
        assert!(SegmentationPlan::new(vec![(1.0, 1)]).is_err());
        assert!(SegmentationPlan::new(vec![(0.0, 3)]).is_err());
        assert!(SegmentationPlan::from_name("uniform15").is_ok());
        assert!(SegmentationPlan::from_name("reduced").is_ok());
        assert!(SegmentationPlan::from_name("bogus").is_err());
        assert_close(SegmentationPlan::uniform15().duration(), 15.0, 1e-12, "uniform15");
        assert_close(SegmentationPlan::reduced().duration(), 15.0, 1e-12, "reduced");
    }

}
