//! Bernstein-basis numerics on a closed interval `[0, h]`.
//!
//! A polynomial is stored by its *control coefficients* `C_0..C_n` with the
//! sampling rule `C_j = g(j·h/n)`: coefficients are the function's values at
//! the uniformly spaced Bernstein nodes. Under this rule the basis gives
//! endpoint interpolation and the convex-hull enclosure
//! `min_j C_j ≤ B(t) ≤ max_j C_j`, which is what the MILP side of the crate
//! relies on to turn trajectory bounds into finitely many coefficient bounds.
//!
//! The operational matrix of integration `X_n` maps coefficients of `g` to
//! coefficients of `∫₀ᵗ g` on the reference interval `[0, 1]` (callers apply
//! the interval length `h`, as in the `h·Xᵀ` terms of the derivative chain).
//! `X_n` is built node-exactly: interpolate the samples by the unique degree-n
//! polynomial, integrate that, and resample at the nodes. For any polynomial
//! of degree ≤ n−1 the integral is then reproduced exactly (to rounding) in
//! coefficient space, which is the property the ODE collocation below needs.
//!
//! A linear ODE of order `s` with constant coefficients,
//! `α_s·y⁽ˢ⁾ + … + α_1·y′ + α_0·y = f(t)`,
//! is solved per segment by writing every lower derivative as an affine
//! function of the highest one,
//! `Y⁽ᵏ⁾ = Σ_i hⁱ·(y⁽ᵏ⁺ⁱ⁾(0)/i!)·d_i + h^(s−k)·(Xᵀ)^(s−k)·Y⁽ˢ⁾`,
//! substituting into the ODE, and solving the resulting (n+1)×(n+1) linear
//! system for the coefficient vector `Y⁽ˢ⁾`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Hard cap on polynomial order. Binomial weights and the collocation
/// Vandermonde degrade beyond this; the frequency models stay in single
/// digits.
pub const MAX_ORDER: usize = 12;

#[derive(Debug, Error)]
pub enum BernsteinError {
    #[error("basis index {j} out of range for order {n}")]
    IndexOutOfRange { j: usize, n: usize },
    #[error("order {n} outside supported range 1..={MAX_ORDER}")]
    UnsupportedOrder { n: usize },
    #[error("t = {t} outside segment [0, {h}]")]
    TimeOutOfRange { t: f64, h: f64 },
    #[error("interval length must be positive and finite, got {h}")]
    BadInterval { h: f64 },
    #[error("coefficient vector has {got} entries, order {n} needs {want}")]
    LengthMismatch { got: usize, n: usize, want: usize },
    #[error("ode spec invalid: {0}")]
    BadSpec(String),
    #[error("singular collocation system (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
}

type Result<T> = std::result::Result<T, BernsteinError>;

fn check_order(n: usize) -> Result<()> {
    if n < 1 || n > MAX_ORDER {
        return Err(BernsteinError::UnsupportedOrder { n });
    }
    Ok(())
}

fn check_interval(h: f64) -> Result<()> {
    if !(h.is_finite() && h > 0.0) {
        return Err(BernsteinError::BadInterval { h });
    }
    Ok(())
}

/// Binomial coefficient C(n, j) as f64; exact for n ≤ [`MAX_ORDER`].
fn binomial(n: usize, j: usize) -> f64 {
    let j = j.min(n - j);
    let mut acc = 1.0;
    for i in 0..j {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Bernstein basis function `β_{j,n}(t) = C(n,j)·t^j·(h−t)^(n−j) / h^n`.
pub fn basis_eval(j: usize, n: usize, h: f64, t: f64) -> Result<f64> {
    check_order(n)?;
    check_interval(h)?;
    if j > n {
        return Err(BernsteinError::IndexOutOfRange { j, n });
    }
    if !(0.0..=h).contains(&t) {
        return Err(BernsteinError::TimeOutOfRange { t, h });
    }
    let u = t / h;
    Ok(binomial(n, j) * u.powi(j as i32) * (1.0 - u).powi((n - j) as i32))
}

/// Monomial node vector `d_{i,n}`: entry `j` is `(j/n)^i`, the evaluations of
/// `tⁱ` at the uniformly spaced Bernstein nodes of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialVector {
    pub power: usize,
    pub order: usize,
    pub entries: Vec<f64>,
}

pub fn monomial_vector(i: usize, n: usize) -> MonomialVector {
    let entries = (0..=n)
        .map(|j| {
            if i == 0 {
                1.0
            } else {
                (j as f64 / n as f64).powi(i as i32)
            }
        })
        .collect();
    MonomialVector {
        power: i,
        order: n,
        entries,
    }
}

/// An order-n polynomial on `[0, h]` stored as n+1 control coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinPoly {
    order: usize,
    interval_length: f64,
    coeffs: Vec<f64>,
}

impl BernsteinPoly {
    /// Build from control coefficients (`coeffs.len()` must be order+1).
    pub fn new(coeffs: Vec<f64>, h: f64) -> Result<Self> {
        check_interval(h)?;
        if coeffs.len() < 2 {
            return Err(BernsteinError::LengthMismatch {
                got: coeffs.len(),
                n: coeffs.len().saturating_sub(1),
                want: 2,
            });
        }
        let n = coeffs.len() - 1;
        check_order(n)?;
        Ok(Self {
            order: n,
            interval_length: h,
            coeffs,
        })
    }

    /// The paper's coefficient rule `C_j = g(j·h/n)`: coefficients are the
    /// provided node samples, taken verbatim.
    pub fn from_samples(samples: &[f64], h: f64) -> Result<Self> {
        Self::new(samples.to_vec(), h)
    }

    /// Sample `g` at the nodes `j·h/n` and build the order-n approximation.
    pub fn from_fn(g: impl Fn(f64) -> f64, n: usize, h: f64) -> Result<Self> {
        check_order(n)?;
        check_interval(h)?;
        let samples: Vec<f64> = (0..=n).map(|j| g(j as f64 * h / n as f64)).collect();
        Self::new(samples, h)
    }

    /// The polynomial that *interpolates* the given node values: control
    /// coefficients are recovered by solving the Bernstein collocation system
    /// `Σ_k c_k·β_k(j·h/n) = samples[j]`. This is how solved coefficient
    /// vectors (which live in node-value space) are turned into evaluable
    /// polynomials — unlike [`Self::from_samples`], which keeps the raw values
    /// as control coefficients and therefore only approximates `g` in the
    /// Bernstein-operator sense.
    pub fn from_node_samples(samples: &[f64], h: f64) -> Result<Self> {
        check_interval(h)?;
        if samples.len() < 2 {
            return Err(BernsteinError::LengthMismatch {
                got: samples.len(),
                n: samples.len().saturating_sub(1),
                want: 2,
            });
        }
        let n = samples.len() - 1;
        check_order(n)?;
        let b = collocation_matrix(n)?;
        let rhs = DVector::from_column_slice(samples);
        let cp = b
            .lu()
            .solve(&rhs)
            .ok_or(BernsteinError::Singular { cond: f64::INFINITY })?;
        Self::new(cp.iter().copied().collect(), h)
    }

    /// Node values `p(j·h/n)` of this polynomial (inverse of
    /// [`Self::from_node_samples`], exact up to rounding).
    pub fn node_values(&self) -> Vec<f64> {
        let n = self.order;
        (0..=n)
            .map(|j| {
                self.eval(self.interval_length * (j as f64 / n as f64))
                    .expect("nodes lie inside the interval")
            })
            .collect()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn interval_length(&self) -> f64 {
        self.interval_length
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Evaluate at `t ∈ [0, h]` by de Casteljau's algorithm.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let h = self.interval_length;
        if !(0.0..=h).contains(&t) {
            return Err(BernsteinError::TimeOutOfRange { t, h });
        }
        let u = t / h;
        let mut work = self.coeffs.clone();
        for round in (1..=self.order).rev() {
            for i in 0..round {
                work[i] = (1.0 - u) * work[i] + u * work[i + 1];
            }
        }
        Ok(work[0])
    }

    /// Running integral `∫₀ᵗ` as a same-order polynomial on the same segment
    /// (coefficients `h·Xᵀ·C`, zero at t = 0).
    pub fn integrate(&self) -> Self {
        let x = integration_matrix(self.order).expect("order already validated");
        let integrated = x.apply_transpose(&self.coeffs);
        let coeffs = integrated
            .iter()
            .map(|c| c * self.interval_length)
            .collect();
        Self {
            order: self.order,
            interval_length: self.interval_length,
            coeffs,
        }
    }
}

/// Operational matrix of integration `X_n` on the reference interval `[0, 1]`:
/// `coeffs(∫₀ᵗ g) = X_nᵀ · coeffs(g)` under the node-sampling coefficient
/// rule. Exact (to rounding) whenever `g` has polynomial degree ≤ n−1, and an
/// approximation for degree-n input (the integral would need order n+1).
#[derive(Debug, Clone)]
pub struct IntegrationMatrix {
    pub order: usize,
    /// `X_n` itself; apply as `X_nᵀ·G` via [`IntegrationMatrix::apply_transpose`].
    pub entries: DMatrix<f64>,
}

pub fn integration_matrix(n: usize) -> Result<IntegrationMatrix> {
    check_order(n)?;
    let m = n + 1;
    // Node-space construction: V interpolates samples to monomial coefficients
    // (Vandermonde at nodes j/n), W evaluates the term-wise antiderivative at
    // the same nodes. Then Xᵀ = W·V⁻¹.
    let mut v = DMatrix::zeros(m, m);
    let mut w = DMatrix::zeros(m, m);
    for row in 0..m {
        let node = row as f64 / n as f64;
        for k in 0..m {
            v[(row, k)] = node.powi(k as i32);
            w[(row, k)] = node.powi(k as i32 + 1) / (k as f64 + 1.0);
        }
    }
    // Xᵀ = W·V⁻¹  ⇔  X = (Vᵀ)⁻¹·Wᵀ.
    let x = v
        .transpose()
        .lu()
        .solve(&w.transpose())
        .ok_or(BernsteinError::Singular { cond: f64::INFINITY })?;
    Ok(IntegrationMatrix { order: n, entries: x })
}

impl IntegrationMatrix {
    /// `X_nᵀ · g`.
    pub fn apply_transpose(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.order + 1, "coefficient length mismatch");
        let gv = DVector::from_column_slice(g);
        let out = self.entries.transpose() * gv;
        out.iter().copied().collect()
    }

    /// Dense `X_nᵀ` for callers assembling their own linear systems.
    pub fn transpose_matrix(&self) -> DMatrix<f64> {
        self.entries.transpose()
    }
}

/// Bernstein collocation matrix `B` on `[0, 1]`: `B[(j, k)] = β_{k,n}(j/n)`,
/// mapping control coefficients to node values. Its inverse (see
/// [`sample_to_control_matrix`]) recovers the interpolating control polygon
/// from node values.
pub fn collocation_matrix(n: usize) -> Result<DMatrix<f64>> {
    check_order(n)?;
    let m = n + 1;
    let mut b = DMatrix::zeros(m, m);
    for j in 0..m {
        let node = j as f64 / n as f64;
        for k in 0..m {
            b[(j, k)] = basis_eval(k, n, 1.0, node)?;
        }
    }
    Ok(b)
}

/// `B⁻¹`: node values → control coefficients of the interpolant. Used when a
/// linear embedding needs the conversion as explicit rows (e.g. enclosure
/// bounds on a vector solved in node-value space).
pub fn sample_to_control_matrix(n: usize) -> Result<DMatrix<f64>> {
    let b = collocation_matrix(n)?;
    let m = n + 1;
    b.lu()
        .try_inverse()
        .ok_or(BernsteinError::Singular { cond: f64::INFINITY })
        .map(|inv| {
            debug_assert_eq!(inv.nrows(), m);
            inv
        })
}

/// Forcing term of an [`OdeSpec`] on one segment.
#[derive(Debug, Clone)]
pub enum Forcing {
    Constant(f64),
    /// Coefficient vector of a polynomial on the same segment and order as the
    /// solve. (The frequency models never need anything richer.)
    Poly(Vec<f64>),
}

/// Linear constant-coefficient ODE of order `s` on one segment:
/// `α_s·y⁽ˢ⁾ + … + α_0·y = f(t)` with initial values `y(0)..y⁽ˢ⁻¹⁾(0)`.
#[derive(Debug, Clone)]
pub struct OdeSpec {
    pub order: usize,
    /// `α_0..α_s`, `α_s ≠ 0`.
    pub alpha: Vec<f64>,
    pub forcing: Forcing,
    /// `y⁽⁰⁾(0)..y⁽ˢ⁻¹⁾(0)`.
    pub initial_conditions: Vec<f64>,
}

/// Affine representation of `Y⁽ᵏ⁾` in terms of `Y⁽ˢ⁾`:
/// `Y⁽ᵏ⁾ = offset + matrix·Y⁽ˢ⁾` per the derivative chain. Exposed so the
/// MILP embedding can reuse the identical algebra row-by-row.
pub struct DerivativeChain {
    /// For k = s, s−1, …, 0: the constant (initial-condition) part.
    pub offsets: Vec<DVector<f64>>,
    /// For k = s, s−1, …, 0: the matrix applied to `Y⁽ˢ⁾` (`h^(s−k)·(Xᵀ)^(s−k)`).
    pub matrices: Vec<DMatrix<f64>>,
}

/// Build the derivative chain for order `s`, polynomial order `n`, segment
/// length `h`, and initial conditions `y⁽⁰⁾(0)..y⁽ˢ⁻¹⁾(0)`.
pub fn derivative_chain(s: usize, ics: &[f64], n: usize, h: f64) -> Result<DerivativeChain> {
    check_order(n)?;
    check_interval(h)?;
    if ics.len() != s {
        return Err(BernsteinError::BadSpec(format!(
            "expected {s} initial conditions, got {}",
            ics.len()
        )));
    }
    let m = n + 1;
    let xt = integration_matrix(n)?.transpose_matrix();
    let mut offsets = Vec::with_capacity(s + 1);
    let mut matrices = Vec::with_capacity(s + 1);
    // k walks s, s−1, …, 0; powers of (h·Xᵀ) accumulate alongside.
    let mut power = DMatrix::identity(m, m);
    for k in (0..=s).rev() {
        let mut offset = DVector::zeros(m);
        let mut factorial = 1.0;
        for i in 0..(s - k) {
            if i > 0 {
                factorial *= i as f64;
            }
            let d = monomial_vector(i, n);
            let scale = h.powi(i as i32) * ics[k + i] / factorial;
            for (row, dj) in d.entries.iter().enumerate() {
                offset[row] += scale * dj;
            }
        }
        offsets.push(offset);
        matrices.push(power.clone());
        if k > 0 {
            power = h * (&xt * &power);
        }
    }
    Ok(DerivativeChain { offsets, matrices })
}

/// Solve one segment of an [`OdeSpec`] by Bernstein collocation. Returns the
/// coefficient vectors `[Y⁽ˢ⁾, Y⁽ˢ⁻¹⁾, …, Y⁽⁰⁾]`.
pub fn solve_ode_segment(spec: &OdeSpec, n: usize, h: f64) -> Result<Vec<Vec<f64>>> {
    check_order(n)?;
    check_interval(h)?;
    let s = spec.order;
    if s < 1 {
        return Err(BernsteinError::BadSpec("ode order must be ≥ 1".into()));
    }
    if spec.alpha.len() != s + 1 {
        return Err(BernsteinError::BadSpec(format!(
            "alpha has {} entries, order {s} needs {}",
            spec.alpha.len(),
            s + 1
        )));
    }
    if spec.alpha[s] == 0.0 {
        return Err(BernsteinError::BadSpec("leading coefficient α_s is zero".into()));
    }
    let m = n + 1;
    let forcing = match &spec.forcing {
        Forcing::Constant(c) => DVector::from_element(m, *c),
        Forcing::Poly(coeffs) => {
            if coeffs.len() != m {
                return Err(BernsteinError::LengthMismatch {
                    got: coeffs.len(),
                    n,
                    want: m,
                });
            }
            DVector::from_column_slice(coeffs)
        }
    };

    let chain = derivative_chain(s, &spec.initial_conditions, n, h)?;
    // Σ_k α_k·(offset_k + M_k·Ys) = F  ⇒  A·Ys = F − Σ_k α_k·offset_k.
    let mut a = DMatrix::zeros(m, m);
    let mut rhs = forcing;
    for (idx, k) in (0..=s).rev().enumerate() {
        let alpha = spec.alpha[k];
        if alpha == 0.0 {
            continue;
        }
        a += alpha * &chain.matrices[idx];
        rhs -= alpha * &chain.offsets[idx];
    }

    let lu = a.clone().lu();
    let ys = lu.solve(&rhs).ok_or_else(|| BernsteinError::Singular {
        cond: condition_estimate(&a),
    })?;

    let mut result = Vec::with_capacity(s + 1);
    for idx in 0..=s {
        let y = &chain.offsets[idx] + &chain.matrices[idx] * &ys;
        result.push(y.iter().copied().collect());
    }
    Ok(result)
}

/// 1-norm condition estimate; cheap at collocation sizes (≤ 13×13).
fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    match a.clone().try_inverse() {
        Some(inv) => norm1(a) * norm1(&inv),
        None => f64::INFINITY,
    }
}

fn norm1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
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

    #[test]
    fn basis_endpoint_values() {
        assert_eq!(basis_eval(0, 3, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(basis_eval(3, 3, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(basis_eval(1, 3, 1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn basis_hand_expansion() {
        // C(2,1)·1·1/4 = 0.5
        assert_close(basis_eval(1, 2, 2.0, 1.0).unwrap(), 0.5, 1e-15, "β_{1,2}(1) on [0,2]");
    }

    #[test]
    fn basis_domain_errors() {
        assert!(matches!(
            basis_eval(4, 3, 1.0, 0.5),
            Err(BernsteinError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            basis_eval(1, 3, 1.0, 1.5),
            Err(BernsteinError::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            basis_eval(1, 3, 1.0, -0.1),
            Err(BernsteinError::TimeOutOfRange { .. })
        ));
        assert!(matches!(
            basis_eval(0, 0, 1.0, 0.0),
            Err(BernsteinError::UnsupportedOrder { .. })
        ));
        assert!(matches!(
            basis_eval(2, 13, 1.0, 0.5),
            Err(BernsteinError::UnsupportedOrder { .. })
        ));
    }

    #[test]
    fn partition_of_unity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.gen_range(1..=10);
            let h = rng.gen_range(0.1..20.0);
            let t = rng.gen_range(0.0..=h);
            let sum: f64 = (0..=n).map(|j| basis_eval(j, n, h, t).unwrap()).sum();
            assert_close(sum, 1.0, 1e-12, &format!("Σβ n={n} h={h} t={t}"));
        }
    }

    #[test]
    fn poly_eval_constant_is_partition_of_unity() {
        let p = BernsteinPoly::new(vec![5.0; 6], 3.0).unwrap();
        for t in [0.0, 0.3, 1.5, 2.99, 3.0] {
            assert_close(p.eval(t).unwrap(), 5.0, 1e-12, "constant poly");
        }
    }

    #[test]
    fn poly_eval_linear_nodes() {
        // coefficients of t on [0, h]: endpoint interpolation gives h at t=h.
        let h = 4.0;
        let p = BernsteinPoly::from_fn(|t| t, 4, h).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_close(p.eval(h).unwrap(), h, 1e-12, "endpoint");
        // a linear function is reproduced exactly everywhere
        assert_close(p.eval(1.7).unwrap(), 1.7, 1e-12, "interior");
    }

    #[test]
    fn poly_eval_symbolic_expansion() {
        // [0, 0.5, 1] on order 2 expands to exactly t.
        let p = BernsteinPoly::new(vec![0.0, 0.5, 1.0], 1.0).unwrap();
        assert_close(p.eval(0.5).unwrap(), 0.5, 1e-15, "t at 0.5");
    }

    #[test]
    fn poly_eval_domain_error() {
        let p = BernsteinPoly::new(vec![0.0, 1.0], 1.0).unwrap();
        assert!(matches!(p.eval(1.01), Err(BernsteinError::TimeOutOfRange { .. })));
    }

    #[test]
    fn from_samples_constant_and_monomials() {
        let c = BernsteinPoly::from_fn(|_| 5.0, 3, 1.0).unwrap();
        assert_eq!(c.coeffs(), &[5.0; 4]);

        let t1 = BernsteinPoly::from_fn(|t| t, 4, 1.0).unwrap();
        assert_eq!(t1.coeffs(), monomial_vector(1, 4).entries.as_slice());
    }

    #[test]
    fn from_samples_quantifies_sampling_error() {
        // g(t)=t² at order 2: coefficients are the samples [0, 0.25, 1] and the
        // represented polynomial is NOT t² (order-2 sampling error).
        let p = BernsteinPoly::from_fn(|t| t * t, 2, 1.0).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 0.25, 1.0]);
        assert_close(p.eval(0.5).unwrap(), 0.375, 1e-15, "sampled t² at 0.5");
    }

    #[test]
    fn endpoint_interpolation_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..=10);
            let h = rng.gen_range(0.1..10.0);
            let coeffs: Vec<f64> = (0..=n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let p = BernsteinPoly::new(coeffs.clone(), h).unwrap();
            assert_close(p.eval(0.0).unwrap(), coeffs[0], 1e-12, "left endpoint");
            assert_close(p.eval(h).unwrap(), coeffs[n], 1e-12, "right endpoint");
        }
    }

    #[test]
    fn convex_hull_enclosure_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=10);
            let h = rng.gen_range(0.1..10.0);
            let coeffs: Vec<f64> = (0..=n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let lo = coeffs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = coeffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let p = BernsteinPoly::new(coeffs, h).unwrap();
            for k in 0..100 {
                let t = h * (k as f64 / 99.0);
                let v = p.eval(t).unwrap();
                assert!(
                    v >= lo - 1e-12 && v <= hi + 1e-12,
                    "enclosure violated: {v} outside [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn integration_matrix_constant() {
        // n=2, G = 1 → coefficients of t = [0, 0.5, 1].
        let x = integration_matrix(2).unwrap();
        let out = x.apply_transpose(&[1.0, 1.0, 1.0]);
        for (got, want) in out.iter().zip([0.0, 0.5, 1.0]) {
            assert_close(*got, want, 1e-12, "∫1 on [0,1], n=2");
        }
    }

    #[test]
    fn integration_matrix_linear() {
        // n=3, G = samples of t → samples of t²/2: [0, 1/18, 2/9, 1/2].
        let x = integration_matrix(3).unwrap();
        let g: Vec<f64> = (0..=3).map(|j| j as f64 / 3.0).collect();
        let out = x.apply_transpose(&g);
        let want = [0.0, 1.0 / 18.0, 2.0 / 9.0, 0.5];
        for (got, want) in out.iter().zip(want) {
            assert_close(*got, want, 1e-12, "∫t on [0,1], n=3");
        }
    }

    #[test]
    fn integration_matrix_zero() {
        let x = integration_matrix(5).unwrap();
        let out = x.apply_transpose(&[0.0; 6]);
        assert!(out.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn integration_exactness_class() {
        // For every monomial t^k with k ≤ n−1, integrating the sampled
        // coefficients reproduces the sampled coefficients of t^(k+1)/(k+1).
        for n in 2..=8usize {
            for k in 0..n {
                let p = BernsteinPoly::from_fn(|t| t.powi(k as i32), n, 1.0).unwrap();
                let integral = p.integrate();
                let want =
                    BernsteinPoly::from_fn(|t| t.powi(k as i32 + 1) / (k as f64 + 1.0), n, 1.0)
                        .unwrap();
                for (got, want) in integral.coeffs().iter().zip(want.coeffs()) {
                    assert_close(*got, *want, 1e-10, &format!("∫t^{k} at n={n}"));
                }
            }
        }
    }

    #[test]
    fn integrate_constant_on_stretched_interval() {
        // ∫1 on [0,2] matches t at all control nodes.
        let p = BernsteinPoly::from_fn(|_| 1.0, 3, 2.0).unwrap();
        let integral = p.integrate();
        let want = BernsteinPoly::from_fn(|t| t, 3, 2.0).unwrap();
        for (got, want) in integral.coeffs().iter().zip(want.coeffs()) {
            assert_close(*got, *want, 1e-12, "∫1 on [0,2]");
        }
    }

    #[test]
    fn integrate_zero_poly() {
        let p = BernsteinPoly::new(vec![0.0; 4], 1.0).unwrap();
        assert!(p.integrate().coeffs().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn monomial_vectors() {
        assert_eq!(monomial_vector(0, 3).entries, vec![1.0; 4]);
        assert_eq!(monomial_vector(1, 4).entries, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(monomial_vector(2, 2).entries, vec![0.0, 0.25, 1.0]);
        // nondecreasing, entries[0] = 0 for i ≥ 1, entries[n] = 1
        let d = monomial_vector(3, 7);
        assert_eq!(d.entries[0], 0.0);
        assert_eq!(d.entries[7], 1.0);
        assert!(d.entries.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ode_first_order_decay() {
        // y' = −y, y(0) = 1: endpoint within 1e−3 of e⁻¹.
        let spec = OdeSpec {
            order: 1,
            alpha: vec![1.0, 1.0], // y' + y = 0
            forcing: Forcing::Constant(0.0),
            initial_conditions: vec![1.0],
        };
        let sol = solve_ode_segment(&spec, 5, 1.0).unwrap();
        let y = sol.last().unwrap();
        assert_close(*y.last().unwrap(), (-1.0f64).exp(), 1e-3, "e⁻¹ endpoint");
        assert_close(y[0], 1.0, 1e-12, "initial value");
    }

    #[test]
    fn ode_harmonic_oscillator() {
        // y'' + y = 0, y(0)=1, y'(0)=0: endpoint within 1e−3 of cos(0.5).
        let spec = OdeSpec {
            order: 2,
            alpha: vec![1.0, 0.0, 1.0],
            forcing: Forcing::Constant(0.0),
            initial_conditions: vec![1.0, 0.0],
        };
        let sol = solve_ode_segment(&spec, 5, 0.5).unwrap();
        let y = sol.last().unwrap();
        assert_close(*y.last().unwrap(), 0.5f64.cos(), 1e-3, "cos(0.5) endpoint");
    }

    #[test]
    fn ode_trivial_constant() {
        // y' = 0, y(0) = c → Y constant c.
        let spec = OdeSpec {
            order: 1,
            alpha: vec![0.0, 1.0],
            forcing: Forcing::Constant(0.0),
            initial_conditions: vec![3.25],
        };
        let sol = solve_ode_segment(&spec, 4, 2.0).unwrap();
        for c in sol.last().unwrap() {
            assert_close(*c, 3.25, 1e-12, "constant solution");
        }
    }

    #[test]
    fn ode_order_convergence() {
        // endpoint error for y' = −y strictly decreases over n = 2, 3, 5.
        let spec = OdeSpec {
            order: 1,
            alpha: vec![1.0, 1.0],
            forcing: Forcing::Constant(0.0),
            initial_conditions: vec![1.0],
        };
        let exact = (-1.0f64).exp();
        let errs: Vec<f64> = [2, 3, 5]
            .iter()
            .map(|&n| {
                let sol = solve_ode_segment(&spec, n, 1.0).unwrap();
                (sol.last().unwrap().last().unwrap() - exact).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors not decreasing: {errs:?}");
    }

    #[test]
    fn ode_forced_polynomial() {
        // y' + y = t with y(0)=0 has solution t − 1 + e⁻ᵗ.
        let forcing = BernsteinPoly::from_fn(|t| t, 6, 1.0).unwrap();
        let spec = OdeSpec {
            order: 1,
            alpha: vec![1.0, 1.0],
            forcing: Forcing::Poly(forcing.coeffs().to_vec()),
            initial_conditions: vec![0.0],
        };
        let sol = solve_ode_segment(&spec, 6, 1.0).unwrap();
        let got = *sol.last().unwrap().last().unwrap();
        let want = 1.0 - 1.0 + (-1.0f64).exp();
        assert_close(got, want, 1e-4, "forced ODE endpoint");
    }

    #[test]
    fn ode_segment_chaining() {
        // [0,1] then [1,2] with chained initial condition matches e⁻² within 1e−4.
        let mut y0 = 1.0;
        for _ in 0..2 {
            let spec = OdeSpec {
                order: 1,
                alpha: vec![1.0, 1.0],
                forcing: Forcing::Constant(0.0),
                initial_conditions: vec![y0],
            };
            let sol = solve_ode_segment(&spec, 5, 1.0).unwrap();
            y0 = *sol.last().unwrap().last().unwrap();
        }
        assert_close(y0, (-2.0f64).exp(), 1e-4, "chained e⁻²");
    }

    #[test]
    fn ode_second_order_chaining_passes_derivative() {
        // y'' = −y over two half-second segments vs cos(1).
        let mut ics = vec![1.0, 0.0];
        for _ in 0..2 {
            let spec = OdeSpec {
                order: 2,
                alpha: vec![1.0, 0.0, 1.0],
                forcing: Forcing::Constant(0.0),
                initial_conditions: ics.clone(),
            };
            let sol = solve_ode_segment(&spec, 5, 0.5).unwrap();
            let y1 = &sol[1]; // Y⁽¹⁾
            let y0 = &sol[2]; // Y⁽⁰⁾
            ics = vec![*y0.last().unwrap(), *y1.last().unwrap()];
        }
        assert_close(ics[0], 1.0f64.cos(), 1e-4, "cos(1) after chaining");
        assert_close(ics[1], -(1.0f64.sin()), 1e-3, "−sin(1) after chaining");
    }

    #[test]
    fn ode_rejects_bad_specs() {
        let spec = OdeSpec {
            order: 1,
            alpha: vec![1.0, 0.0],
            forcing: Forcing::Constant(0.0),
            initial_conditions: vec![1.0],
        };
        assert!(matches!(
            solve_ode_segment(&spec, 4, 1.0),
            Err(BernsteinError::BadSpec(_))
        ));
        let spec = OdeSpec {
            order: 2,
            alpha: vec![1.0, 0.0, 1.0],
            forcing: Forcing::Constant(0.0),
            initial_conditions: vec![1.0], // missing y'(0)
        };
        assert!(matches!(
            solve_ode_segment(&spec, 4, 1.0),
            Err(BernsteinError::BadSpec(_))
        ));
    }
}
