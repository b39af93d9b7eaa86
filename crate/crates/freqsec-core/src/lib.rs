//! Frequency-secured unit commitment toolkit.
//!
//! The crate is organized around one pipeline:
//!
//! 1. [`bernstein`] — Bernstein-basis numerics: basis evaluation, the
//!    operational matrix of integration, and per-segment solution of
//!    general-order linear ODEs as small collocation systems.
//! 2. [`dynamics`] — post-contingency frequency response (swing equation +
//!    governor models) solved two ways: a fixed-step RK4 reference oracle with
//!    reserve saturation, and the segmented Bernstein approximation. Metric
//!    extraction (nadir, under-threshold duration `h_<`, area minimum `A̲`).
//! 3. [`calibration`] — synthetic outage datasets labeled with `(A̲, h_<)` by
//!    the oracle, and selection of the area threshold `A_th` that enforces a
//!    target excursion duration `h_th`.
//! 4. [`milp`] — solver-agnostic MILP layer: model building, big-M/indicator
//!    linearizations, piecewise-linear costs, free-format MPS export, and
//!    external-solver invocation via subprocess.
//! 5. [`uc`] — the base unit-commitment model and its frequency-secured
//!    variants (nadir-constrained, area-constrained), embedding the linearized
//!    Bernstein dynamics per (hour, contingency) pair.
//! 6. [`verify`] — post-solution verification of every credible outage against
//!    the exact ODE oracle, plus CSV/JSON report emission.
//! 7. [`case`] — case-file schema (units, profiles, system constants) and
//!    validation.
//!
//! Per-unit conventions: all dynamic quantities are per-unit on the case
//! `s_base`; frequency deviation `Δf` is per-unit on `f_base` and negative
//! after a generation loss. Area quantities (`A̲`, `A_th`) are per-unit·seconds
//! throughout; only the case file's `a_th` field is Hz·s, converted on load
//! (see `case` docs).
//!
//! With the default `parallel` feature, scenario labeling and outage
//! verification fan out via rayon; disabling it yields a dependency-free
//! sequential fallback with identical (order-preserving) results.

pub mod bernstein;
pub mod calibration;
pub mod case;
pub mod dynamics;
pub mod milp;
pub mod uc;
pub mod verify;

mod par;
