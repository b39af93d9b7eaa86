//! Mixed-integer linear model container and solver subprocess layer.
//!
//! [`Model`] holds variables, sparse rows, indicator links, and a
//! minimization objective in insertion order (exports are byte-deterministic
//! for a given model). The nonlinear pieces of the unit-commitment
//! formulations are added through three builders:
//!
//! * [`Model::linearize_product`] — `a = x·c` for binary `x` and bounded
//!   continuous `c`, either as big-M rows (signed bounds supported) or as an
//!   indicator pair,
//! * [`Model::linearize_min`] — `r_min = min(r, ρ)` for two continuous
//!   variables with one indicator binary and six inequalities, exact at any
//!   feasible point,
//! * [`Model::add_pwl_cost`] — convex piecewise-linear cost via segment fill
//!   (no binaries; convexity is validated).
//!
//! Solving shells out to an external MILP solver over free-format MPS:
//! [`solve`] writes the model to a temp directory, runs the configured solver
//! binary, parses its solution file, and validates the claimed solution
//! against every row and bound at 1e-6 before returning it. Two adapters are
//! built in: the bundled `freqsec-highs` executable (flat `name value`
//! solution format) and stock `cbc`.
//!
//! Neither backend's MPS dialect has an indicator section, so indicator
//! links are expanded into big-M rows at export time, with the big-M derived
//! from the referenced variables' bounds (never a global constant). Names
//! longer than the 255-character dialect limit are mangled deterministically
//! and reported in a sidecar map rather than rejected.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use thiserror::Error;

/// Free-format MPS name limit; longer names are mangled at export.
const MPS_NAME_LIMIT: usize = 255;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("invalid name '{0}': must be nonempty, contain no whitespace, and be unique")]
    BadName(String),
    #[error("variable '{name}': invalid bounds [{lb}, {ub}]")]
    BadBounds { name: String, lb: f64, ub: f64 },
    #[error("row '{0}' references unknown variable id")]
    UnknownVar(String),
    #[error("'{name}': big-M expansion needs finite bounds on every referenced variable")]
    UnboundedBigM { name: String },
    #[error("linearize_min '{name}': M = {m} is smaller than the attainable |r − ρ| = {needed}")]
    UnsoundBound { name: String, m: f64, needed: f64 },
    #[error("piecewise cost for '{name}' is not convex: slope {prev} followed by {next}")]
    NonConvexPwl { name: String, prev: f64, next: f64 },
    #[error("piecewise cost for '{name}': {reason}")]
    BadPwl { name: String, reason: String },
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no MILP solver found: set FREQSEC_SOLVER_BIN, or put freqsec-highs/cbc on PATH")]
    SolverNotFound,
    #[error("solver '{bin}' failed: {detail}")]
    SolverFailed { bin: String, detail: String },
    #[error("solver reported '{0}'")]
    NotOptimal(String),
    #[error("cannot parse solver output: {0}")]
    ParseError(String),
    #[error("claimed solution violates '{row}' by {violation:.3e}")]
    InvalidSolution { row: String, violation: f64 },
}

type Result<T> = std::result::Result<T, MilpError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// How [`Model::linearize_product`] encodes the product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductMode {
    /// Explicit big-M rows derived from the bounds of `c`.
    #[default]
    BigM,
    /// Indicator links ("x = 0 ⇒ a = 0, x = 1 ⇒ a = c"), expanded to big-M
    /// rows at export for dialects without indicator sections. Requires
    /// `c ≥ 0`.
    Indicator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone)]
struct Variable {
    name: String,
    kind: VarKind,
    lb: f64,
    ub: f64,
    obj: f64,
}

#[derive(Debug, Clone)]
struct Row {
    name: String,
    sense: Sense,
    rhs: f64,
    coeffs: Vec<(usize, f64)>,
}

/// `bin = active_value ⟹ row holds`.
#[derive(Debug, Clone)]
struct IndicatorLink {
    bin: VarId,
    active_value: bool,
    row: Row,
}

/// Row/column/nonzero counts, as computed locally or reported by a solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelStats {
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
}

#[derive(Debug, Clone)]
pub struct Model {
    name: String,
    vars: Vec<Variable>,
    rows: Vec<Row>,
    links: Vec<IndicatorLink>,
    used_names: HashSet<String>,
    /// Constant added to the objective (not part of the MPS file).
    pub obj_offset: f64,
}

impl Model {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            vars: Vec::new(),
            rows: Vec::new(),
            links: Vec::new(),
            used_names: HashSet::new(),
            obj_offset: 0.0,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Row count including expanded indicator links (Eq links expand to two).
    pub fn num_rows(&self) -> usize {
        self.rows.len()
            + self
                .links
                .iter()
                .map(|l| if l.row.sense == Sense::Eq { 2 } else { 1 })
                .sum::<usize>()
    }

    pub fn var_name(&self, id: VarId) -> &str {
        &self.vars[id.0].name
    }

    pub fn bounds(&self, id: VarId) -> (f64, f64) {
        (self.vars[id.0].lb, self.vars[id.0].ub)
    }

    /// Tighten or pin the box of an existing variable (e.g. to freeze a
    /// schedule before a re-solve). The kind is unchanged.
    pub fn set_bounds(&mut self, id: VarId, lb: f64, ub: f64) -> Result<()> {
        if !(lb <= ub) {
            return Err(MilpError::BadBounds { name: self.vars[id.0].name.clone(), lb, ub });
        }
        self.vars[id.0].lb = lb;
        self.vars[id.0].ub = ub;
        Ok(())
    }

    /// Local statistics in solver terms: constraint rows (sans objective),
    /// columns, and constraint-matrix nonzeros, with indicator links in
    /// expanded form — i.e. the dimensions of the exported file.
    pub fn stats(&self) -> Result<ModelStats> {
        let rows = self.effective_rows()?;
        Ok(ModelStats {
            rows: rows.len(),
            cols: self.vars.len(),
            nonzeros: rows.iter().map(|r| r.coeffs.len()).sum(),
        })
    }

    fn claim_name(&mut self, name: &str) -> Result<()> {
        if name.is_empty() || name.chars().any(|c| c.is_whitespace()) {
            return Err(MilpError::BadName(name.to_string()));
        }
        if !self.used_names.insert(name.to_string()) {
            return Err(MilpError::BadName(name.to_string()));
        }
        Ok(())
    }

    pub fn add_var(&mut self, name: &str, kind: VarKind, lb: f64, ub: f64, obj: f64) -> Result<VarId> {
        self.claim_name(name)?;
        if !(lb <= ub) {
            return Err(MilpError::BadBounds { name: name.into(), lb, ub });
        }
        self.vars.push(Variable { name: name.into(), kind, lb, ub, obj });
        Ok(VarId(self.vars.len() - 1))
    }

    pub fn add_continuous(&mut self, name: &str, lb: f64, ub: f64, obj: f64) -> Result<VarId> {
        self.add_var(name, VarKind::Continuous, lb, ub, obj)
    }

    pub fn add_binary(&mut self, name: &str, obj: f64) -> Result<VarId> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0, obj)
    }

    fn merge_coeffs(&self, name: &str, coeffs: &[(VarId, f64)]) -> Result<Vec<(usize, f64)>> {
        // Matrix products upstream (basis conversion, collocation) leave
        // ~1e-15 residue on entries that are zero analytically; dropping them
        // keeps exports clean. Far below any genuine model coefficient.
        const ZERO_TOL: f64 = 1e-12;
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
        for &(VarId(idx), c) in coeffs {
            if idx >= self.vars.len() {
                return Err(MilpError::UnknownVar(name.into()));
            }
            if c == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, acc)) => *acc += c,
                None => merged.push((idx, c)),
            }
        }
        merged.retain(|&(_, c)| c.abs() > ZERO_TOL);
        Ok(merged)
    }

    /// Add `Σ coeffs ⋛ rhs`. Duplicate variable references are merged.
    pub fn add_row(&mut self, name: &str, sense: Sense, rhs: f64, coeffs: &[(VarId, f64)]) -> Result<()> {
        self.claim_name(name)?;
        let merged = self.merge_coeffs(name, coeffs)?;
        self.rows.push(Row { name: name.into(), sense, rhs, coeffs: merged });
        Ok(())
    }

    /// Add the conditional row `bin = active_value ⟹ Σ coeffs ⋛ rhs`. Kept
    /// symbolic in the model; expanded to big-M rows at export.
    pub fn add_indicator(
        &mut self,
        name: &str,
        bin: VarId,
        active_value: bool,
        sense: Sense,
        rhs: f64,
        coeffs: &[(VarId, f64)],
    ) -> Result<()> {
        self.claim_name(name)?;
        if bin.0 >= self.vars.len() || self.vars[bin.0].kind != VarKind::Binary {
            return Err(MilpError::UnknownVar(name.into()));
        }
        let merged = self.merge_coeffs(name, coeffs)?;
        self.links.push(IndicatorLink {
            bin,
            active_value,
            row: Row { name: name.into(), sense, rhs, coeffs: merged },
        });
        Ok(())
    }

    pub fn add_obj(&mut self, var: VarId, delta: f64) {
        self.vars[var.0].obj += delta;
    }

    /// Extreme values of `Σ coeffs` over the variable box; error if any
    /// referenced variable is unbounded in the needed direction.
    fn row_range(&self, name: &str, coeffs: &[(usize, f64)]) -> Result<(f64, f64)> {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for &(c, v) in coeffs {
            let var = &self.vars[c];
            let (a, b) = (v * var.lb, v * var.ub);
            lo += a.min(b);
            hi += a.max(b);
        }
        if !lo.is_finite() || !hi.is_finite() {
            return Err(MilpError::UnboundedBigM { name: name.into() });
        }
        Ok((lo, hi))
    }

    /// `a = x·c` for binary `x` and continuous `c ∈ [lo, hi]`. In big-M mode
    /// the rows are (with signed bounds supported)
    ///
    /// ```text
    /// a ≤ hi·x            a ≥ lo·x            (skipped when redundant at lo = 0)
    /// a ≤ c − lo·(1−x)    a ≥ c − hi·(1−x)
    /// ```
    ///
    /// which pin `a = 0` when `x = 0` and `a = c` when `x = 1`. Indicator
    /// mode instead adds `a ≤ c` plus the links `x = 0 ⟹ a ≤ 0` and
    /// `x = 1 ⟹ a ≥ c` (the same three rows after big-M expansion), and
    /// requires `lo = 0`.
    pub fn linearize_product(
        &mut self,
        prefix: &str,
        x: VarId,
        c: VarId,
        lo: f64,
        hi: f64,
        mode: ProductMode,
    ) -> Result<VarId> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(MilpError::BadBounds { name: prefix.into(), lb: lo, ub: hi });
        }
        let a = self.add_continuous(&format!("{prefix}_a"), lo.min(0.0), hi.max(0.0), 0.0)?;
        match mode {
            ProductMode::BigM => {
                self.add_row(&format!("{prefix}_ub_x"), Sense::Le, 0.0, &[(a, 1.0), (x, -hi)])?;
                if lo != 0.0 {
                    self.add_row(&format!("{prefix}_lb_x"), Sense::Ge, 0.0, &[(a, 1.0), (x, -lo)])?;
                    self.add_row(
                        &format!("{prefix}_ub_c"),
                        Sense::Le,
                        -lo,
                        &[(a, 1.0), (c, -1.0), (x, -lo)],
                    )?;
                } else {
                    self.add_row(&format!("{prefix}_ub_c"), Sense::Le, 0.0, &[(a, 1.0), (c, -1.0)])?;
                }
                self.add_row(
                    &format!("{prefix}_lb_c"),
                    Sense::Ge,
                    -hi,
                    &[(a, 1.0), (c, -1.0), (x, -hi)],
                )?;
            }
            ProductMode::Indicator => {
                if lo != 0.0 {
                    return Err(MilpError::BadBounds { name: prefix.into(), lb: lo, ub: hi });
                }
                self.add_row(&format!("{prefix}_ub_c"), Sense::Le, 0.0, &[(a, 1.0), (c, -1.0)])?;
                self.add_indicator(&format!("{prefix}_off"), x, false, Sense::Le, 0.0, &[(a, 1.0)])?;
                self.add_indicator(
                    &format!("{prefix}_on"),
                    x,
                    true,
                    Sense::Ge,
                    0.0,
                    &[(a, 1.0), (c, -1.0)],
                )?;
            }
        }
        Ok(a)
    }

    /// `r_min = min(r, ρ)` for two continuous variables, with indicator
    /// binary `z` (`z = 1` on the `ρ ≤ r` branch). Adds the six inequalities
    ///
    /// ```text
    /// r_min ≥ ρ − M(1−z)    r_min ≤ ρ
    /// r_min ≥ r − Mz        r_min ≤ r
    /// r_min ≤ ρ + Mz        ρ − r ≤ M(1−z)
    /// ```
    ///
    /// `M` must dominate the attainable `|r − ρ|`; anything smaller is
    /// rejected as unsound using the two variables' declared bounds.
    pub fn linearize_min(
        &mut self,
        prefix: &str,
        r: VarId,
        rho: VarId,
        m: f64,
    ) -> Result<(VarId, VarId)> {
        let (r_lo, r_hi) = self.bounds(r);
        let (rho_lo, rho_hi) = self.bounds(rho);
        let needed = (r_hi - rho_lo).max(rho_hi - r_lo).max(0.0);
        if !needed.is_finite() {
            return Err(MilpError::UnboundedBigM { name: prefix.into() });
        }
        if m < needed {
            return Err(MilpError::UnsoundBound { name: prefix.into(), m, needed });
        }
        let r_min = self.add_continuous(
            &format!("{prefix}_min"),
            r_lo.min(rho_lo),
            r_hi.min(rho_hi),
            0.0,
        )?;
        let z = self.add_binary(&format!("{prefix}_z"), 0.0)?;
        self.add_row(&format!("{prefix}_ge_rho"), Sense::Ge, -m, &[(r_min, 1.0), (rho, -1.0), (z, -m)])?;
        self.add_row(&format!("{prefix}_le_rho"), Sense::Le, 0.0, &[(r_min, 1.0), (rho, -1.0)])?;
        self.add_row(&format!("{prefix}_ge_r"), Sense::Ge, 0.0, &[(r_min, 1.0), (r, -1.0), (z, m)])?;
        self.add_row(&format!("{prefix}_le_r"), Sense::Le, 0.0, &[(r_min, 1.0), (r, -1.0)])?;
        self.add_row(&format!("{prefix}_le_rho_m"), Sense::Le, 0.0, &[(r_min, 1.0), (rho, -1.0), (z, -m)])?;
        self.add_row(&format!("{prefix}_branch"), Sense::Le, m, &[(rho, 1.0), (r, -1.0), (z, m)])?;
        Ok((r_min, z))
    }

    /// Convex piecewise-linear cost of `var` over `[breakpoints[0].0,
    /// breakpoints[last].0]` by segment fill: `var = x₀ + Σ s_k` with
    /// `0 ≤ s_k ≤ width_k` and objective `Σ slope_k·s_k` (+ intercept in
    /// [`Model::obj_offset`]). Slopes must be nondecreasing — with a
    /// minimization objective the fill order is then optimal automatically.
    pub fn add_pwl_cost(&mut self, prefix: &str, var: VarId, breakpoints: &[(f64, f64)]) -> Result<()> {
        if breakpoints.len() < 2 {
            return Err(MilpError::BadPwl {
                name: prefix.into(),
                reason: "need at least two breakpoints".into(),
            });
        }
        let mut prev_slope = f64::NEG_INFINITY;
        let mut segments = Vec::with_capacity(breakpoints.len() - 1);
        for pair in breakpoints.windows(2) {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            if !(x1 > x0) {
                return Err(MilpError::BadPwl {
                    name: prefix.into(),
                    reason: format!("breakpoints not strictly increasing at x = {x1}"),
                });
            }
            let slope = (y1 - y0) / (x1 - x0);
            if slope < prev_slope - 1e-12 {
                return Err(MilpError::NonConvexPwl {
                    name: prefix.into(),
                    prev: prev_slope,
                    next: slope,
                });
            }
            prev_slope = slope;
            segments.push((x1 - x0, slope));
        }
        let mut fill_terms: Vec<(VarId, f64)> = vec![(var, -1.0)];
        for (k, (width, slope)) in segments.iter().enumerate() {
            let s = self.add_continuous(&format!("{prefix}_s{k}"), 0.0, *width, *slope)?;
            fill_terms.push((s, 1.0));
        }
        self.obj_offset += breakpoints[0].1;
        self.add_row(&format!("{prefix}_fill"), Sense::Eq, -breakpoints[0].0, &fill_terms)?;
        Ok(())
    }

    /// Expand one indicator link into big-M rows (two for Eq senses). The
    /// slack is only added on the inactive side, sized from variable bounds.
    fn expand_link(&self, link: &IndicatorLink) -> Result<Vec<Row>> {
        let (lo, hi) = self.row_range(&link.row.name, &link.row.coeffs)?;
        // bin term that vanishes when bin == active_value:
        // active_value = 1 → use (1 − x); active_value = 0 → use x.
        let mut out = Vec::new();
        let mut emit = |sense: Sense, suffix: &str| {
            let mut coeffs = link.row.coeffs.clone();
            let (m, rhs) = match sense {
                // Σ ≤ rhs + M·(inactive): M = hi − rhs
                Sense::Le => (hi - link.row.rhs, link.row.rhs),
                // Σ ≥ rhs − M·(inactive): M = rhs − lo
                Sense::Ge => (link.row.rhs - lo, link.row.rhs),
                Sense::Eq => unreachable!(),
            };
            let m = m.max(0.0);
            let sign = if sense == Sense::Le { 1.0 } else { -1.0 };
            let rhs = if link.active_value {
                // inactive = 1 − x: fold the constant M into the rhs.
                coeffs.push((link.bin.0, sign * m));
                rhs + sign * m
            } else {
                // inactive = x.
                coeffs.push((link.bin.0, -sign * m));
                rhs
            };
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(coeffs.len());
            for (idx, c) in coeffs {
                if c == 0.0 {
                    continue;
                }
                match merged.iter_mut().find(|(i, _)| *i == idx) {
                    Some((_, acc)) => *acc += c,
                    None => merged.push((idx, c)),
                }
            }
            out.push(Row {
                name: if suffix.is_empty() {
                    link.row.name.clone()
                } else {
                    format!("{}_{suffix}", link.row.name)
                },
                sense,
                rhs,
                coeffs: merged,
            });
        };
        match link.row.sense {
            Sense::Le => emit(Sense::Le, ""),
            Sense::Ge => emit(Sense::Ge, ""),
            Sense::Eq => {
                emit(Sense::Le, "up");
                emit(Sense::Ge, "dn");
            }
        }
        Ok(out)
    }

    fn effective_rows(&self) -> Result<Vec<Row>> {
        let mut rows = self.rows.clone();
        for link in &self.links {
            rows.extend(self.expand_link(link)?);
        }
        Ok(rows)
    }

    /// Free-format MPS serialization (NAME/ROWS/COLUMNS/RHS/BOUNDS/ENDATA
    /// with INTORG/INTEND markers around integer columns). Indicator links
    /// are expanded to big-M rows; names beyond the 255-char dialect limit
    /// are mangled deterministically and reported in the returned map
    /// (original → exported).
    pub fn to_mps(&self) -> Result<(String, HashMap<String, String>)> {
        let rows = self.effective_rows()?;
        let mut mangle_map = HashMap::new();
        let mut mangled = |name: &str, tag: char, k: usize| -> String {
            if name.len() <= MPS_NAME_LIMIT {
                return name.to_string();
            }
            let short = format!("{tag}{k}_{}", &name[..24]);
            mangle_map.insert(name.to_string(), short.clone());
            short
        };
        let col_names: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .map(|(k, v)| mangled(&v.name, 'c', k))
            .collect();
        let row_names: Vec<String> = rows
            .iter()
            .enumerate()
            .map(|(k, r)| mangled(&r.name, 'r', k))
            .collect();

        let mut out = String::new();
        let _ = writeln!(out, "NAME {}", self.name);
        out.push_str("ROWS\n");
        out.push_str(" N COST\n");
        for (row, name) in rows.iter().zip(&row_names) {
            let tag = match row.sense {
                Sense::Le => 'L',
                Sense::Ge => 'G',
                Sense::Eq => 'E',
            };
            let _ = writeln!(out, " {} {}", tag, name);
        }
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vars.len()];
        for (r, row) in rows.iter().enumerate() {
            for &(c, v) in &row.coeffs {
                by_col[c].push((r, v));
            }
        }
        out.push_str("COLUMNS\n");
        let mut in_integer = false;
        let mut marker = 0usize;
        for (c, var) in self.vars.iter().enumerate() {
            let integral = matches!(var.kind, VarKind::Binary | VarKind::Integer);
            if integral != in_integer {
                let tag = if integral { "'INTORG'" } else { "'INTEND'" };
                let _ = writeln!(out, " MARKER{marker} 'MARKER' {tag}");
                marker += 1;
                in_integer = integral;
            }
            if var.obj != 0.0 {
                let _ = writeln!(out, " {} COST {:.12e}", col_names[c], var.obj);
            }
            for &(r, v) in &by_col[c] {
                let _ = writeln!(out, " {} {} {:.12e}", col_names[c], row_names[r], v);
            }
            if var.obj == 0.0 && by_col[c].is_empty() {
                // Keep the column present so the solver reports a value.
                let _ = writeln!(out, " {} COST 0", col_names[c]);
            }
        }
        if in_integer {
            let _ = writeln!(out, " MARKER{marker} 'MARKER' 'INTEND'");
        }
        out.push_str("RHS\n");
        for (row, name) in rows.iter().zip(&row_names) {
            if row.rhs != 0.0 {
                let _ = writeln!(out, " RHS {} {:.12e}", name, row.rhs);
            }
        }
        out.push_str("BOUNDS\n");
        for (var, name) in self.vars.iter().zip(&col_names) {
            if var.lb == var.ub {
                let _ = writeln!(out, " FX BND {} {:.12e}", name, var.lb);
                continue;
            }
            if var.lb.is_finite() {
                if var.lb != 0.0 {
                    let _ = writeln!(out, " LO BND {} {:.12e}", name, var.lb);
                }
            } else {
                let _ = writeln!(out, " MI BND {}", name);
            }
            if var.ub.is_finite() {
                let _ = writeln!(out, " UP BND {} {:.12e}", name, var.ub);
            }
        }
        out.push_str("ENDATA\n");
        Ok((out, mangle_map))
    }

    /// Write the MPS file; if any names were mangled, a sidecar
    /// `<path>.names.json` records the original → exported map.
    pub fn write_mps(&self, path: &Path) -> Result<()> {
        let (text, map) = self.to_mps()?;
        std::fs::write(path, text).map_err(|source| MilpError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if !map.is_empty() {
            let sidecar = path.with_extension("names.json");
            let body = serde_json::to_string_pretty(&map).expect("string map serializes");
            std::fs::write(&sidecar, body).map_err(|source| MilpError::Io {
                path: sidecar.clone(),
                source,
            })?;
        }
        Ok(())
    }

    /// Check a candidate assignment against every row (links expanded),
    /// bound, and integrality requirement at tolerance `tol` (scaled by row
    /// magnitude).
    pub fn validate(&self, values: &[f64], tol: f64) -> Result<()> {
        assert_eq!(values.len(), self.vars.len(), "value vector length mismatch");
        for (var, &v) in self.vars.iter().zip(values) {
            let slack = tol * (1.0 + var.lb.abs().max(var.ub.abs().min(f64::MAX)));
            if v < var.lb - slack || v > var.ub + slack {
                return Err(MilpError::InvalidSolution {
                    row: format!("bounds of {}", var.name),
                    violation: (var.lb - v).max(v - var.ub),
                });
            }
            if matches!(var.kind, VarKind::Binary | VarKind::Integer) && (v - v.round()).abs() > tol {
                return Err(MilpError::InvalidSolution {
                    row: format!("integrality of {}", var.name),
                    violation: (v - v.round()).abs(),
                });
            }
        }
        for row in self.effective_rows()? {
            let mut lhs = 0.0;
            let mut scale = 1.0f64;
            for &(c, coef) in &row.coeffs {
                lhs += coef * values[c];
                scale = scale.max((coef * values[c]).abs());
            }
            let slack = tol * scale.max(1.0 + row.rhs.abs());
            let violation = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            if violation > slack {
                return Err(MilpError::InvalidSolution {
                    row: row.name.clone(),
                    violation,
                });
            }
        }
        Ok(())
    }

    /// Objective value of an assignment (including the constant offset).
    pub fn objective_of(&self, values: &[f64]) -> f64 {
        self.obj_offset
            + self
                .vars
                .iter()
                .zip(values)
                .map(|(var, &v)| var.obj * v)
                .sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Incumbent found but optimality not proven (time limit hit).
    Feasible,
    Infeasible,
    Unbounded,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub status: SolveStatus,
    /// Objective recomputed from the validated assignment (offset included).
    pub objective: f64,
    /// One value per model variable, in insertion order.
    pub values: Vec<f64>,
    /// Locally computed model dimensions.
    pub stats: ModelStats,
    /// Dimensions as reported by the solver for its input model, if the
    /// adapter surfaces them.
    pub solver_stats: Option<ModelStats>,
    /// Subprocess wall time, seconds.
    pub wall_time: f64,
}

impl SolverResult {
    pub fn value(&self, id: VarId) -> f64 {
        self.values[id.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverFlavor {
    /// Bundled `freqsec-highs` executable: `<bin> model.mps --out sol.txt`,
    /// flat `status/objective/name value` output.
    FreqsecHighs,
    /// COIN-OR `cbc model.mps solve solution sol.txt`.
    Cbc,
}

#[derive(Debug, Clone)]
pub struct SolverSpec {
    pub bin: PathBuf,
    pub flavor: SolverFlavor,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub time_limit: Option<f64>,
    pub mip_gap: Option<f64>,
    /// Accept a feasible-but-unproven incumbent instead of erroring.
    pub accept_feasible: bool,
}

fn flavor_of(path: &Path) -> SolverFlavor {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    if stem.contains("cbc") {
        SolverFlavor::Cbc
    } else {
        SolverFlavor::FreqsecHighs
    }
}

/// Locate the MILP solver: `FREQSEC_SOLVER_BIN`, then `freqsec-highs` or
/// `cbc` on PATH, then a `freqsec-highs` binary next to the current
/// executable (covering `target/debug[/deps]` layouts in test runs).
pub fn locate_solver() -> Result<SolverSpec> {
    if let Ok(bin) = std::env::var("FREQSEC_SOLVER_BIN") {
        let path = PathBuf::from(bin);
        return Ok(SolverSpec { flavor: flavor_of(&path), bin: path });
    }
    let on_path = |name: &str| -> Option<PathBuf> {
        let paths = std::env::var_os("PATH")?;
        std::env::split_paths(&paths)
            .map(|dir| dir.join(name))
            .find(|cand| cand.is_file())
    };
    if let Some(bin) = on_path("freqsec-highs") {
        return Ok(SolverSpec { bin, flavor: SolverFlavor::FreqsecHighs });
    }
    if let Some(bin) = on_path("cbc") {
        return Ok(SolverSpec { bin, flavor: SolverFlavor::Cbc });
    }
    if let Ok(exe) = std::env::current_exe() {
        let mut dirs: Vec<PathBuf> = Vec::new();
        if let Some(dir) = exe.parent() {
            dirs.push(dir.to_path_buf());
            if let Some(up) = dir.parent() {
                dirs.push(up.to_path_buf());
            }
        }
        for dir in dirs {
            let cand = dir.join("freqsec-highs");
            if cand.is_file() {
                return Ok(SolverSpec { bin: cand, flavor: SolverFlavor::FreqsecHighs });
            }
        }
    }
    Err(MilpError::SolverNotFound)
}

/// Solve `model` with the given solver. The solution is parsed, re-validated
/// against the model at 1e-6, and its objective recomputed locally.
pub fn solve(model: &Model, spec: &SolverSpec, opts: &SolveOptions) -> Result<SolverResult> {
    let dir = tempfile::tempdir().map_err(|source| MilpError::Io {
        path: PathBuf::from("tempdir"),
        source,
    })?;
    let mps_path = dir.path().join("model.mps");
    let sol_path = dir.path().join("model.sol");
    let (text, mangle_map) = model.to_mps()?;
    std::fs::write(&mps_path, text).map_err(|source| MilpError::Io {
        path: mps_path.clone(),
        source,
    })?;

    let mut cmd = Command::new(&spec.bin);
    match spec.flavor {
        SolverFlavor::FreqsecHighs => {
            cmd.arg(&mps_path).arg("--out").arg(&sol_path);
            if let Some(t) = opts.time_limit {
                cmd.arg("--time-limit").arg(t.to_string());
            }
            if let Some(g) = opts.mip_gap {
                cmd.arg("--mip-gap").arg(g.to_string());
            }
        }
        SolverFlavor::Cbc => {
            cmd.arg(&mps_path);
            if let Some(t) = opts.time_limit {
                cmd.arg("sec").arg(t.to_string());
            }
            if let Some(g) = opts.mip_gap {
                cmd.arg("ratio").arg(g.to_string());
            }
            cmd.arg("solve").arg("solution").arg(&sol_path);
        }
    }
    if let Ok(extra) = std::env::var("FREQSEC_SOLVER_OPTS") {
        cmd.args(extra.split_whitespace());
    }

    let started = Instant::now();
    let output = cmd.output().map_err(|source| MilpError::Io {
        path: spec.bin.clone(),
        source,
    })?;
    let wall_time = started.elapsed().as_secs_f64();
    if !output.status.success() {
        return Err(MilpError::SolverFailed {
            bin: spec.bin.display().to_string(),
            detail: format!(
                "exit {:?}; stderr: {}",
                output.status.code(),
                String::from_utf8_lossy(&output.stderr).trim()
            ),
        });
    }
    let text = std::fs::read_to_string(&sol_path).map_err(|source| MilpError::Io {
        path: sol_path.clone(),
        source,
    })?;
    let parsed = match spec.flavor {
        SolverFlavor::FreqsecHighs => parse_flat_solution(&text)?,
        SolverFlavor::Cbc => parse_cbc_solution(&text)?,
    };
    match parsed.status {
        SolveStatus::Optimal => {}
        SolveStatus::Feasible if opts.accept_feasible => {}
        SolveStatus::Feasible => return Err(MilpError::NotOptimal("feasible (not proven optimal)".into())),
        SolveStatus::Infeasible => return Err(MilpError::NotOptimal("infeasible".into())),
        SolveStatus::Unbounded => return Err(MilpError::NotOptimal("unbounded".into())),
        SolveStatus::TimeLimit => return Err(MilpError::NotOptimal("time limit without incumbent".into())),
    }
    let mut values = vec![0.0; model.num_vars()];
    for (c, var) in model.vars.iter().enumerate() {
        let exported: &str = match mangle_map.get(&var.name) {
            Some(short) => short,
            None => &var.name,
        };
        if let Some(&v) = parsed.values.get(exported) {
            values[c] = v;
        }
    }
    model.validate(&values, 1e-6)?;
    Ok(SolverResult {
        status: parsed.status,
        objective: model.objective_of(&values),
        values,
        stats: model.stats()?,
        solver_stats: parsed.stats,
        wall_time,
    })
}

struct ParsedSolution {
    status: SolveStatus,
    values: HashMap<String, f64>,
    stats: Option<ModelStats>,
}

/// Parse the bundled solver's flat format: `status <word>`,
/// `objective <num>`, `rows/cols/nonzeros <n>`, then `<name> <value>` lines.
fn parse_flat_solution(text: &str) -> Result<ParsedSolution> {
    let mut status = None;
    let mut values = HashMap::new();
    let (mut rows, mut cols, mut nonzeros) = (None, None, None);
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        let (Some(key), Some(val)) = (parts.next(), parts.next()) else {
            continue;
        };
        let parse_count = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| MilpError::ParseError(format!("bad count '{v}'")))
        };
        match key {
            "status" => {
                status = Some(match val {
                    "optimal" => SolveStatus::Optimal,
                    "feasible" => SolveStatus::Feasible,
                    "infeasible" => SolveStatus::Infeasible,
                    "unbounded" => SolveStatus::Unbounded,
                    "time-limit" => SolveStatus::TimeLimit,
                    other => return Err(MilpError::ParseError(format!("unknown status '{other}'"))),
                });
            }
            "objective" => {}
            "rows" => rows = Some(parse_count(val)?),
            "cols" => cols = Some(parse_count(val)?),
            "nonzeros" => nonzeros = Some(parse_count(val)?),
            name => {
                let v: f64 = val
                    .parse()
                    .map_err(|_| MilpError::ParseError(format!("bad value for {name}: '{val}'")))?;
                values.insert(name.to_string(), v);
            }
        }
    }
    let status = status.ok_or_else(|| MilpError::ParseError("missing status line".into()))?;
    let stats = match (rows, cols, nonzeros) {
        (Some(rows), Some(cols), Some(nonzeros)) => Some(ModelStats { rows, cols, nonzeros }),
        _ => None,
    };
    Ok(ParsedSolution { status, values, stats })
}

/// Parse CBC's `solution` file: a header line (`Optimal - objective value X`
/// or `Infeasible - …`), then `index name value reduced-cost` rows.
fn parse_cbc_solution(text: &str) -> Result<ParsedSolution> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| MilpError::ParseError("empty CBC solution".into()))?;
    let lowered = header.to_ascii_lowercase();
    let status = if lowered.contains("optimal") {
        SolveStatus::Optimal
    } else if lowered.contains("infeasible") {
        SolveStatus::Infeasible
    } else if lowered.contains("unbounded") {
        SolveStatus::Unbounded
    } else if lowered.contains("stopped on time") {
        // CBC prints the incumbent (if any) after this header.
        SolveStatus::Feasible
    } else {
        return Err(MilpError::ParseError(format!("unrecognized CBC header '{header}'")));
    };
    let mut values = HashMap::new();
    for line in lines {
        let mut parts = line.split_whitespace();
        let Some(first) = parts.next() else { continue };
        // Index column may carry a leading "**" marker on infeasible rows.
        let (name, value) = if first.chars().all(|c| c.is_ascii_digit()) {
            (parts.next(), parts.next())
        } else if first == "**" {
            let _idx = parts.next();
            (parts.next(), parts.next())
        } else {
            continue;
        };
        if let (Some(name), Some(value)) = (name, value) {
            let v: f64 = value
                .parse()
                .map_err(|_| MilpError::ParseError(format!("bad value for {name}: '{value}'")))?;
            values.insert(name.to_string(), v);
        }
    }
    Ok(ParsedSolution { status, values, stats: None })
}
