//! Admissible nonlinearities `f(x, u)`, their primitives `F`, the convex
//! minorant `H` of `min{|u|^β, |u|^α}`, and the energy functional
//!
//! ```text
//! E_λ(u) = ½ Q_λ(u) − h Σ F(x_n, u_n)
//! ```
//!
//! with its discrete gradient `(D − λ) u − f(x, u)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg;
use crate::report::{PropertyReport, Verdict};
use crate::spectral::{quadratic_form, DiscreteOperator, SpectralError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlinearityError {
    #[error("exponent domain violation: {0}")]
    Exponents(String),
    #[error("invalid weight: {0}")]
    Weight(String),
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Critical Sobolev exponent `2* = 2N/(N−2)` (infinite for `N ≤ 2`).
pub fn critical_exponent(dim: usize) -> f64 {
    if dim <= 2 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 2.0)
    }
}

/// Nonnegative 1-periodic weight `B(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Weight {
    Constant { value: f64 },
    /// `B(x) = 1 + cos(2πx)`.
    OnePlusCos,
    /// Values on `x_i = i / len`, linearly interpolated.
    Table { values: Vec<f64> },
}

impl Weight {
    pub fn constant(value: f64) -> Result<Self, NonlinearityError> {
        let w = Weight::Constant { value };
        w.validate()?;
        Ok(w)
    }

    pub fn table(values: Vec<f64>) -> Result<Self, NonlinearityError> {
        let w = Weight::Table { values };
        w.validate()?;
        Ok(w)
    }

    fn validate(&self) -> Result<(), NonlinearityError> {
        match self {
            Weight::Constant { value } if !(*value > 0.0 && value.is_finite()) => {
                Err(NonlinearityError::Weight(format!("constant weight must be positive, got {value}")))
            }
            Weight::Table { values } => {
                if values.is_empty() || values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(NonlinearityError::Weight("table weight must be finite and nonnegative".into()));
                }
                if values.iter().all(|v| *v == 0.0) {
                    return Err(NonlinearityError::Weight("weight must not vanish identically".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Weight::Constant { value } => *value,
            Weight::OnePlusCos => 1.0 + (2.0 * PI * x).cos(),
            Weight::Table { values } => {
                let n = values.len();
                let t = x.rem_euclid(1.0) * n as f64;
                let i = (t.floor() as usize).min(n - 1);
                let frac = t - i as f64;
                values[i] * (1.0 - frac) + values[(i + 1) % n] * frac
            }
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            Weight::Constant { value } => *value,
            Weight::OnePlusCos => 2.0,
            Weight::Table { values } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Weight at every grid point of `op` (the domain centre sits on a cell edge).
    pub fn sample(&self, op: &DiscreteOperator) -> Vec<f64> {
        (0..op.len()).map(|n| self.eval(op.x_centered(n))).collect()
    }

    pub fn describe(&self) -> String {
        match self {
            Weight::Constant { value } => format!("constant({value})"),
            Weight::OnePlusCos => "1+cos(2pi x)".into(),
            Weight::Table { values } => format!("table[{}]", values.len()),
        }
    }
}

/// `h(u) = sign(u) · min{β|u|^{β−1}, α|u|^{α−1}}`.
pub fn minorant_h(u: f64, alpha: f64, beta: f64) -> Result<f64, NonlinearityError> {
    check_minorant_exponents(alpha, beta)?;
    Ok(h_unchecked(u, alpha, beta))
}

fn h_unchecked(u: f64, alpha: f64, beta: f64) -> f64 {
    let a = u.abs();
    let v = (beta * a.powf(beta - 1.0)).min(alpha * a.powf(alpha - 1.0));
    v.copysign(u) * if u == 0.0 { 0.0 } else { 1.0 }
}

fn check_minorant_exponents(alpha: f64, beta: f64) -> Result<(), NonlinearityError> {
    if !(alpha > 2.0 && alpha <= beta && beta.is_finite()) {
        return Err(NonlinearityError::Exponents(format!("need 2 < alpha <= beta < inf, got alpha={alpha}, beta={beta}")));
    }
    Ok(())
}

/// Even convex minorant `H` of `G(u) = min{|u|^β, |u|^α}` with the same
/// behaviour at `0` (like `|u|^β`) and at infinity (like `|u|^α`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexMinorant {
    pub alpha: f64,
    pub beta: f64,
    /// Crossover point of the two branches of `h`.
    pub rho: f64,
    /// `ρ^β − ρ^α`.
    pub kappa: f64,
}

impl ConvexMinorant {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, NonlinearityError> {
        check_minorant_exponents(alpha, beta)?;
        let rho = if beta > alpha { (alpha / beta).powf(1.0 / (beta - alpha)) } else { 1.0 };
        Ok(Self { alpha, beta, rho, kappa: rho.powf(beta) - rho.powf(alpha) })
    }

    pub fn h(&self, u: f64) -> f64 {
        h_unchecked(u, self.alpha, self.beta)
    }

    /// `h'(u)` (the kink at `|u| = ρ` takes the outer branch).
    pub fn dh(&self, u: f64) -> f64 {
        let a = u.abs();
        if a <= self.rho {
            self.beta * (self.beta - 1.0) * a.powf(self.beta - 2.0)
        } else {
            self.alpha * (self.alpha - 1.0) * a.powf(self.alpha - 2.0)
        }
    }

    #[allow(non_snake_case)]
    pub fn H(&self, u: f64) -> f64 {
        let a = u.abs();
        if a <= self.rho {
            a.powf(self.beta)
        } else {
            self.kappa + a.powf(self.alpha)
        }
    }

    /// Comparator `G(u) = min{|u|^β, |u|^α}`.
    pub fn g(&self, u: f64) -> f64 {
        let a = u.abs();
        a.powf(self.beta).min(a.powf(self.alpha))
    }
}

#[allow(non_snake_case)]
pub fn minorant_H(u: f64, m: &ConvexMinorant) -> f64 {
    m.H(u)
}

/// Checks (i)–(v) of the minorant on random samples plus a quadrature cross-check.
pub fn check_minorant_properties<R: Rng>(m: &ConvexMinorant, n_samples: usize, rng: &mut R) -> PropertyReport {
    const TOL: f64 = 1e-12;
    let anchor = "Lemma B.1";
    let mut report = PropertyReport::new(
        format!("convex minorant alpha={} beta={}", m.alpha, m.beta),
        anchor,
        vec!["property".into(), "samples".into(), "worst_violation".into()],
    );
    let record = |report: &mut PropertyReport, name: &str, idx: f64, worst: f64, detail: String| {
        report.rows.push(vec![idx, n_samples as f64, worst]);
        report.push(Verdict {
            name: name.into(),
            anchor: anchor.into(),
            passed: worst <= 0.0,
            value: worst,
            threshold: 0.0,
            detail,
        });
    };

    // (i) H ≤ G
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0.0;
    for _ in 0..n_samples {
        let u = rng.gen_range(-10.0..10.0);
        let excess = m.H(u) - m.g(u) * (1.0 + TOL);
        if excess > worst {
            worst = excess;
            at = u;
        }
    }
    record(&mut report, "(i) H <= min(|u|^beta, |u|^alpha)", 1.0, worst, format!("worst at u={at}"));

    // (ii) midpoint convexity
    let mut worst = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0);
    for _ in 0..n_samples {
        let u = rng.gen_range(-10.0..10.0);
        let v = rng.gen_range(-10.0..10.0);
        let rhs = 0.5 * (m.H(u) + m.H(v));
        let excess = m.H(0.5 * (u + v)) - rhs * (1.0 + TOL);
        if excess > worst {
            worst = excess;
            at = (u, v);
        }
    }
    record(&mut report, "(ii) convexity", 2.0, worst, format!("worst at (u,v)={at:?}"));

    // (iii) H(u)/|u|^β → 1 at 0: exact below ρ
    let u0 = 1e-3;
    let r0 = m.H(u0) / u0.powf(m.beta);
    let dev = if (1.0 - 1e-6..=1.0 + TOL).contains(&r0) { -1.0 } else { (r0 - 1.0).abs() };
    record(&mut report, "(iii) H(u)|u|^-beta -> 1 as u -> 0", 3.0, dev, format!("ratio at u=1e-3: {r0}"));

    // (iv) H(u)/|u|^α → 1 at infinity, within |κ|/u^α
    let u1 = 1e3;
    let r1 = m.H(u1) / u1.powf(m.alpha);
    let bound = m.kappa.abs() / u1.powf(m.alpha);
    let dev = (r1 - 1.0).abs() - bound * (1.0 + 1e-6) - 4.0 * f64::EPSILON;
    record(&mut report, "(iv) H(u)|u|^-alpha -> 1 as |u| -> inf", 4.0, dev, format!("ratio at u=1e3: {r1}"));

    // (v) min{t^α, t^β} H(u) ≤ H(tu) ≤ max{t^α, t^β} H(u)
    let mut worst = f64::NEG_INFINITY;
    let mut at = (0.0, 0.0);
    for _ in 0..n_samples {
        let u = rng.gen_range(-10.0..10.0);
        let t: f64 = rng.gen_range(0.0..5.0);
        let (ta, tb) = (t.powf(m.alpha), t.powf(m.beta));
        let hu = m.H(u);
        let htu = m.H(t * u);
        let scale = htu.abs().max(ta.max(tb) * hu).max(f64::MIN_POSITIVE);
        let lower = ta.min(tb) * hu - htu;
        let upper = htu - ta.max(tb) * hu;
        let excess = (lower.max(upper) - TOL * scale) / scale;
        if excess > worst {
            worst = excess;
            at = (u, t);
        }
    }
    record(&mut report, "(v) pseudo-homogeneity", 5.0, worst, format!("worst at (u,t)={at:?}"));

    // closed form against quadrature of h
    let n_quad = (n_samples / 10).clamp(10, 1000);
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0.0;
    for _ in 0..n_quad {
        let u: f64 = rng.gen_range(-10.0..10.0);
        let numeric = integrate_h(m, u.abs());
        let err = (numeric - m.H(u)).abs() / m.H(u).abs().max(1.0) - 1e-10;
        if err > worst {
            worst = err;
            at = u;
        }
    }
    record(&mut report, "closed-form H = integral of h", 6.0, worst, format!("{n_quad} points, worst at u={at}"));
    report
}

/// `∫_0^a h` by composite Gauss–Legendre, split at the kink `ρ`.
pub fn integrate_h(m: &ConvexMinorant, a: f64) -> f64 {
    let h = |v: f64| m.h(v);
    let first = a.min(m.rho);
    let mut total = linalg::integrate(h, 0.0, first, 16, 20);
    if a > m.rho {
        total += linalg::integrate(h, m.rho, a, 16, 20);
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `F = B(x)|u|^β`.
    PurePower,
    /// `F = B(x) H(u)` with the convex minorant `H`.
    Minorant,
    Custom,
}

impl Family {
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "pure_power" => Some(Family::PurePower),
            "minorant" => Some(Family::Minorant),
            "custom" => Some(Family::Custom),
            _ => None,
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// User-supplied `f(x, u)` and its primitive `F(x, u)`.
#[derive(Clone)]
pub struct CustomNonlinearity {
    pub f: ScalarFn,
    pub primitive: ScalarFn,
}

/// `f(x, u)` with its primitive, exponents and weight.
#[derive(Clone)]
pub struct Nonlinearity {
    pub family: Family,
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub c: f64,
    pub weight: Weight,
    minorant: Option<ConvexMinorant>,
    custom: Option<CustomNonlinearity>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("family", &self.family)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("p", &self.p)
            .field("c", &self.c)
            .field("weight", &self.weight)
            .finish()
    }
}

/// Built-in families; `dim` fixes the subcritical window `β < 2*`.
pub fn builtin_nonlinearity(family: Family, alpha: f64, beta: f64, weight: Weight, dim: usize) -> Result<Nonlinearity, NonlinearityError> {
    weight.validate()?;
    let crit = critical_exponent(dim);
    if !(beta > 2.0 && beta < crit && beta.is_finite()) {
        return Err(NonlinearityError::Exponents(format!("beta={beta} outside (2, {crit}) for N={dim}")));
    }
    let c = beta * weight.max();
    match family {
        Family::PurePower => Ok(Nonlinearity { family, alpha: beta, beta, p: beta, c, weight, minorant: None, custom: None }),
        Family::Minorant => {
            let m = ConvexMinorant::new(alpha, beta)?;
            Ok(Nonlinearity { family, alpha, beta, p: beta, c, weight, minorant: Some(m), custom: None })
        }
        Family::Custom => Err(NonlinearityError::Exponents("custom family needs Nonlinearity::custom".into())),
    }
}

impl Nonlinearity {
    /// A user-supplied nonlinearity; the weight is the `B` claimed for the pinching bound.
    pub fn custom(custom: CustomNonlinearity, alpha: f64, beta: f64, p: f64, c: f64, weight: Weight) -> Self {
        Self { family: Family::Custom, alpha, beta, p, c, weight, minorant: None, custom: Some(custom) }
    }

    pub fn minorant(&self) -> Option<&ConvexMinorant> {
        self.minorant.as_ref()
    }

    /// `f` at position `x` with precomputed weight `b = B(x)`.
    pub fn f_at(&self, x: f64, b: f64, u: f64) -> f64 {
        match self.family {
            Family::PurePower => b * self.beta * u.abs().powf(self.beta - 2.0) * u,
            Family::Minorant => b * self.minorant.as_ref().expect("minorant family").h(u),
            Family::Custom => (self.custom.as_ref().expect("custom family").f)(x, u),
        }
    }

    #[allow(non_snake_case)]
    pub fn F_at(&self, x: f64, b: f64, u: f64) -> f64 {
        match self.family {
            Family::PurePower => b * u.abs().powf(self.beta),
            Family::Minorant => b * self.minorant.as_ref().expect("minorant family").H(u),
            Family::Custom => (self.custom.as_ref().expect("custom family").primitive)(x, u),
        }
    }

    /// `∂f/∂u`; one-sided difference for custom (possibly non-smooth) `f`.
    pub fn df_at(&self, x: f64, b: f64, u: f64) -> f64 {
        match self.family {
            Family::PurePower => b * self.beta * (self.beta - 1.0) * u.abs().powf(self.beta - 2.0),
            Family::Minorant => b * self.minorant.as_ref().expect("minorant family").dh(u),
            Family::Custom => {
                let step = 1e-7 * (1.0 + u.abs());
                (self.f_at(x, b, u + step) - self.f_at(x, b, u)) / step
            }
        }
    }

    pub fn f(&self, x: f64, u: f64) -> f64 {
        self.f_at(x, self.weight.eval(x), u)
    }

    #[allow(non_snake_case)]
    pub fn F(&self, x: f64, u: f64) -> f64 {
        self.F_at(x, self.weight.eval(x), u)
    }

    /// Evaluator bound to the grid of `op`.
    pub fn on_grid<'a>(&'a self, op: &DiscreteOperator) -> GridNonlinearity<'a> {
        let xs: Vec<f64> = (0..op.len()).map(|n| op.x_centered(n)).collect();
        let weights = xs.iter().map(|x| self.weight.eval(*x)).collect();
        GridNonlinearity { nl: self, xs, weights }
    }

    pub fn describe(&self) -> String {
        format!("{:?}(alpha={}, beta={}, B={})", self.family, self.alpha, self.beta, self.weight.describe())
    }
}

/// Nonlinearity evaluated at the grid points of one operator.
pub struct GridNonlinearity<'a> {
    nl: &'a Nonlinearity,
    xs: Vec<f64>,
    weights: Vec<f64>,
}

impl GridNonlinearity<'_> {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn f(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(n, v)| self.nl.f_at(self.xs[n], self.weights[n], *v)).collect()
    }

    pub fn df(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(n, v)| self.nl.df_at(self.xs[n], self.weights[n], *v)).collect()
    }

    /// `h Σ F(x_n, u_n)`.
    pub fn potential_energy(&self, u: &[f64], h: f64) -> f64 {
        h * u.iter().enumerate().map(|(n, v)| self.nl.F_at(self.xs[n], self.weights[n], *v)).sum::<f64>()
    }

    /// `h Σ (½ f u − F)`.
    pub fn nehari_gap(&self, u: &[f64], h: f64) -> f64 {
        h * u
            .iter()
            .enumerate()
            .map(|(n, v)| {
                let (x, b) = (self.xs[n], self.weights[n]);
                0.5 * self.nl.f_at(x, b, *v) * v - self.nl.F_at(x, b, *v)
            })
            .sum::<f64>()
    }
}

/// `E_λ(u) = ½ Q_λ(u) − h Σ F(x, u)`.
pub fn energy(u: &[f64], lambda: f64, op: &DiscreteOperator, nl: &Nonlinearity) -> Result<f64, NonlinearityError> {
    let q = quadratic_form(u, lambda, op)?;
    Ok(0.5 * q - nl.on_grid(op).potential_energy(u, op.spacing()))
}

/// `L²` gradient `(D − λ) u − f(x, u)`; `dE(u)v = h ⟨∇E(u), v⟩`.
pub fn energy_gradient(u: &[f64], lambda: f64, op: &DiscreteOperator, nl: &Nonlinearity) -> Result<Vec<f64>, NonlinearityError> {
    let mut g = op.apply_shifted(u, lambda)?;
    for (gi, fi) in g.iter_mut().zip(nl.on_grid(op).f(u)) {
        *gi -= fi;
    }
    Ok(g)
}

/// `∫_0^u g` over dyadic shells `[u/2^{k+1}, u/2^k]`, each integrated adaptively,
/// so that features at every scale near the origin are resolved.
fn integrate_from_zero<G: Fn(f64) -> f64>(g: G, u: f64, tol: f64) -> f64 {
    const SHELLS: i32 = 80;
    let mut total = 0.0;
    for k in 0..SHELLS {
        let hi = u * 0.5f64.powi(k);
        let lo = if k + 1 == SHELLS { 0.0 } else { hi * 0.5 };
        total += linalg::integrate_adaptive(&g, lo, hi, tol / SHELLS as f64, 30);
    }
    total
}

/// Sample windows for assumption checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleGrid {
    pub xs: Vec<f64>,
    /// Positive magnitudes; each is tested with both signs.
    pub magnitudes: Vec<f64>,
    /// `U` for the (f5) check.
    pub u_large: f64,
    /// Largest radius probed in the (f6) check.
    pub pinching_radius: f64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        let xs = (0..64).map(|i| i as f64 / 64.0).collect();
        let magnitudes = (0..=100).map(|i| 10f64.powf(-8.0 + 11.0 * i as f64 / 100.0)).collect();
        Self { xs, magnitudes, u_large: 1e3, pinching_radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub worst_x: f64,
    pub worst_u: f64,
    pub worst_value: f64,
    pub window: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub nonlinearity: String,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name.starts_with(name))
    }
}

/// Numerical certification of (f2)–(f6) and `F = ∫f` on finite sample windows.
pub fn check_assumptions(nl: &Nonlinearity, grid: &SampleGrid) -> AssumptionReport {
    let us: Vec<f64> = grid.magnitudes.iter().flat_map(|a| [*a, -*a]).chain(std::iter::once(0.0)).collect();
    let u_min = grid.magnitudes.iter().cloned().fold(f64::INFINITY, f64::min);
    let u_max = grid.magnitudes.iter().cloned().fold(0.0, f64::max);
    let window = format!("x in {} points of [0,1), |u| in [{u_min:e}, {u_max:e}]", grid.xs.len());
    let mut checks = Vec::new();

    let worst = |score: &dyn Fn(f64, f64) -> f64| {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for &x in &grid.xs {
            for &u in &us {
                let s = score(x, u);
                if s > best.0 || s.is_nan() {
                    best = (if s.is_nan() { f64::INFINITY } else { s }, x, u);
                }
            }
        }
        best
    };

    // F(x,u) = ∫_0^u f(x,v) dv
    let (s, x, u) = worst(&|x, u| {
        let primitive = nl.F(x, u);
        let numeric = integrate_from_zero(|v| nl.f(x, v), u, 1e-13 * primitive.abs());
        (numeric - primitive).abs() / primitive.abs().max(numeric.abs()).max(f64::MIN_POSITIVE) - 1e-8
    });
    checks.push(AssumptionCheck { name: "F = integral of f".into(), passed: s <= 0.0, worst_x: x, worst_u: u, worst_value: s, window: window.clone() });

    // (f2) |f| ≤ c(1 + |u|^{p−1})
    let (s, x, u) = worst(&|x, u| nl.f(x, u).abs() / (nl.c * (1.0 + u.abs().powf(nl.p - 1.0))) - (1.0 + 1e-12));
    checks.push(AssumptionCheck { name: "(f2) growth".into(), passed: s <= 0.0, worst_x: x, worst_u: u, worst_value: s, window: window.clone() });

    // (f3) |f|/|u| ≤ ε on |u| ≤ δ(ε)
    for eps in [1e-2, 1e-4] {
        let mut mags: Vec<f64> = grid.magnitudes.clone();
        mags.sort_by(f64::total_cmp);
        let mut delta = 0.0;
        let mut worst_ratio = f64::INFINITY;
        for &a in &mags {
            let ratio = grid
                .xs
                .iter()
                .flat_map(|&x| [nl.f(x, a).abs() / a, nl.f(x, -a).abs() / a])
                .fold(0.0, f64::max);
            if ratio <= eps {
                delta = a;
            } else {
                worst_ratio = ratio;
                break;
            }
        }
        checks.push(AssumptionCheck {
            name: format!("(f3) f = o(|u|), eps={eps:e}"),
            passed: delta > 0.0,
            worst_x: f64::NAN,
            worst_u: delta,
            worst_value: worst_ratio,
            window: format!("delta(eps) = {delta:e} on the magnitude ladder"),
        });
    }

    // (f4) 0 ≤ αF ≤ f u
    let (s, x, u) = worst(&|x, u| {
        let big = nl.alpha * nl.F(x, u);
        let fu = nl.f(x, u) * u;
        let scale = big.abs().max(fu.abs()).max(f64::MIN_POSITIVE);
        ((-big).max(big - fu) - 1e-12 * scale) / scale
    });
    checks.push(AssumptionCheck { name: "(f4) 0 <= alpha F <= f u".into(), passed: s <= 0.0, worst_x: x, worst_u: u, worst_value: s, window: window.clone() });

    // (f5) min_x F(x, ±U) > 0
    let mut min_f = f64::INFINITY;
    let mut at = (0.0, 0.0);
    for &x in &grid.xs {
        for u in [grid.u_large, -grid.u_large] {
            let v = nl.F(x, u);
            if v < min_f {
                min_f = v;
                at = (x, u);
            }
        }
    }
    checks.push(AssumptionCheck {
        name: "(f5) min_x F(x, +-U) > 0".into(),
        passed: min_f > 0.0,
        worst_x: at.0,
        worst_u: at.1,
        worst_value: min_f,
        window: format!("U = {:e}", grid.u_large),
    });

    // (f6) F ≥ B|u|^β on some |u| ≤ r: report the largest r on the ladder
    let mut mags: Vec<f64> = grid.magnitudes.iter().cloned().filter(|a| *a <= grid.pinching_radius).collect();
    mags.sort_by(f64::total_cmp);
    let mut radius = 0.0;
    let mut first_fail = (f64::NAN, f64::NAN, 0.0);
    'ladder: for &a in &mags {
        for &x in &grid.xs {
            for u in [a, -a] {
                let lower = nl.weight.eval(x) * a.powf(nl.beta);
                let excess = lower - nl.F(x, u) - 1e-12 * lower;
                if excess > 0.0 {
                    first_fail = (x, u, excess);
                    break 'ladder;
                }
            }
        }
        radius = a;
    }
    checks.push(AssumptionCheck {
        name: "(f6) F >= B |u|^beta near 0".into(),
        passed: radius > 0.0,
        worst_x: first_fail.0,
        worst_u: first_fail.1,
        worst_value: first_fail.2,
        window: format!("holds for |u| <= r = {radius:e} (probed up to {})", grid.pinching_radius),
    });

    AssumptionReport { nonlinearity: nl.describe(), checks }
}

/// Largest `c₁` on the sample grid with `F(x,u) ≥ c₁|u|^α − δ|u|²`.
pub fn lower_bound_c1(nl: &Nonlinearity, delta: f64, grid: &SampleGrid) -> Result<f64, NonlinearityError> {
    if !(delta > 0.0) {
        return Err(NonlinearityError::Assumption(format!("delta must be positive, got {delta}")));
    }
    let mut c1 = f64::INFINITY;
    for &x in &grid.xs {
        for &a in &grid.magnitudes {
            for u in [a, -a] {
                let v = (nl.F(x, u) + delta * u * u) / u.abs().powf(nl.alpha);
                c1 = c1.min(v);
            }
        }
    }
    if c1 > 0.0 && c1.is_finite() {
        Ok(c1)
    } else {
        Err(NonlinearityError::Assumption(format!("no positive c1 for delta={delta} (grid minimum {c1:e})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::PeriodicPotential;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn h_examples() {
        assert_eq!(minorant_h(0.0, 3.0, 4.0).unwrap(), 0.0);
        assert!((minorant_h(0.5, 4.0, 4.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((minorant_h(0.75, 3.0, 4.0).unwrap() - 1.6875).abs() < 1e-14);
        assert!((minorant_h(-0.75, 3.0, 4.0).unwrap() + 1.6875).abs() < 1e-14);
        assert!(minorant_h(1.0, 2.0, 4.0).is_err());
        assert!(minorant_h(1.0, 4.0, 3.0).is_err());
    }

    #[test]
    fn big_h_examples_against_quadrature() {
        let m = ConvexMinorant::new(4.0, 4.0).unwrap();
        assert_eq!((m.rho, m.kappa), (1.0, 0.0));
        assert!((m.H(0.5) - 0.0625).abs() < 1e-15);
        let m = ConvexMinorant::new(3.0, 4.0).unwrap();
        assert!((m.rho - 0.75).abs() < 1e-15);
        assert!((m.kappa + 0.10546875).abs() < 1e-15);
        // oracle values by quadrature of h
        let h1 = integrate_h(&m, 1.0);
        let h05 = integrate_h(&m, 0.5);
        assert!((h1 - 0.89453125).abs() < 1e-12);
        assert!((h05 - 0.0625).abs() < 1e-13);
        assert!((m.H(1.0) - h1).abs() < 1e-12);
        assert!((m.H(-0.5) - h05).abs() < 1e-13);
    }

    #[test]
    fn pseudo_homogeneity_example() {
        let m = ConvexMinorant::new(3.0, 4.0).unwrap();
        let h = m.H(0.3);
        assert!(8.0 * h <= m.H(0.6) && m.H(0.6) <= 16.0 * h);
        assert_eq!(m.H(0.0), 0.0);
        assert!(m.H(0.3 * 1.0) == h);
    }

    #[test]
    fn minorant_property_report_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = ConvexMinorant::new(2.5, 5.5).unwrap();
        let report = check_minorant_properties(&m, 10_000, &mut rng);
        assert!(report.passed(), "{:#?}", report.verdicts);
    }

    #[test]
    fn pure_power_derivative_and_assumptions() {
        let nl = builtin_nonlinearity(Family::PurePower, 0.0, 4.0, Weight::constant(1.0).unwrap(), 1).unwrap();
        assert_eq!(nl.alpha, 4.0);
        assert!((nl.f(0.3, 0.5) - 4.0 * 0.125).abs() < 1e-15);
        let report = check_assumptions(&nl, &SampleGrid::default());
        assert!(report.passed(), "{report:#?}");
        // equality αF = fu
        let u = 1.7;
        assert!((nl.alpha * nl.F(0.0, u) - nl.f(0.0, u) * u).abs() < 1e-12);
    }

    #[test]
    fn minorant_family_assumptions() {
        let nl = builtin_nonlinearity(Family::Minorant, 3.0, 4.0, Weight::constant(1.0).unwrap(), 1).unwrap();
        let report = check_assumptions(&nl, &SampleGrid::default());
        assert!(report.passed(), "{report:#?}");
        assert_eq!(nl.c, 4.0);
        assert_eq!(nl.p, 4.0);
    }

    #[test]
    fn vanishing_weight_violates_f5_only() {
        let nl = builtin_nonlinearity(Family::PurePower, 0.0, 4.0, Weight::OnePlusCos, 1).unwrap();
        let report = check_assumptions(&nl, &SampleGrid::default());
        assert!(!report.get("(f5)").unwrap().passed);
        for c in &report.checks {
            if !c.name.starts_with("(f5)") {
                assert!(c.passed, "{c:?}");
            }
        }
    }

    #[test]
    fn linear_f_fails_f3() {
        let custom = CustomNonlinearity { f: Arc::new(|_, u| u), primitive: Arc::new(|_, u| 0.5 * u * u) };
        let nl = Nonlinearity::custom(custom, 2.0, 2.0, 2.0, 1.0, Weight::constant(1.0).unwrap());
        let report = check_assumptions(&nl, &SampleGrid::default());
        assert!(!report.get("(f3) f = o(|u|), eps=1e-2").unwrap().passed);
    }

    #[test]
    fn exponent_window() {
        let w = Weight::constant(1.0).unwrap();
        assert!(builtin_nonlinearity(Family::PurePower, 0.0, 2.0, w.clone(), 1).is_err());
        assert!(builtin_nonlinearity(Family::PurePower, 0.0, 6.0, w.clone(), 3).is_err());
        assert!(builtin_nonlinearity(Family::PurePower, 0.0, 5.0, w.clone(), 3).is_ok());
        assert!(builtin_nonlinearity(Family::Minorant, 4.5, 4.0, w, 1).is_err());
        assert!(Weight::table(vec![0.0, 0.0]).is_err());
        assert!(Weight::table(vec![0.0, -1.0]).is_err());
    }

    #[test]
    fn c1_examples() {
        let grid = SampleGrid::default();
        let quartic = builtin_nonlinearity(Family::PurePower, 0.0, 4.0, Weight::constant(1.0).unwrap(), 1).unwrap();
        assert!(lower_bound_c1(&quartic, 1.0, &grid).unwrap() >= 1.0);
        let m = builtin_nonlinearity(Family::Minorant, 3.0, 4.0, Weight::constant(1.0).unwrap(), 1).unwrap();
        let deltas = [1.0, 0.1, 0.01, 0.001];
        let c: Vec<f64> = deltas.iter().map(|d| lower_bound_c1(&m, *d, &grid).unwrap()).collect();
        assert!(c.iter().all(|v| *v > 0.0));
        assert!(c.windows(2).all(|w| w[1] <= w[0]));
        assert!(lower_bound_c1(&m, 0.0, &grid).is_err());
    }

    #[test]
    fn energy_of_zero_and_linear_case() {
        let op = DiscreteOperator::new(PeriodicPotential::mathieu(1.0).unwrap().shifted(9.8), 4, 16).unwrap();
        let nl = builtin_nonlinearity(Family::PurePower, 0.0, 4.0, Weight::OnePlusCos, 1).unwrap();
        let zero = vec![0.0; op.len()];
        assert_eq!(energy(&zero, 0.3, &op, &nl).unwrap(), 0.0);
        assert!(energy_gradient(&zero, 0.3, &op, &nl).unwrap().iter().all(|g| *g == 0.0));
        let custom = CustomNonlinearity { f: Arc::new(|_, _| 0.0), primitive: Arc::new(|_, _| 0.0) };
        let flat = Nonlinearity::custom(custom, 3.0, 3.0, 3.0, 1.0, Weight::constant(1.0).unwrap());
        let u: Vec<f64> = (0..op.len()).map(|n| (n as f64 * 0.1).sin()).collect();
        let q = quadratic_form(&u, 0.3, &op).unwrap();
        assert!((energy(&u, 0.3, &op, &flat).unwrap() - 0.5 * q).abs() < 1e-12 * q.abs().max(1.0));
    }

    fn random_field(op: &DiscreteOperator, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
        (0..op.len()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let op = DiscreteOperator::new(PeriodicPotential::mathieu(1.0).unwrap().shifted(9.8), 4, 16).unwrap();
        let h = op.spacing();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for family in [Family::PurePower, Family::Minorant] {
            let nl = builtin_nonlinearity(family, 3.0, 4.0, Weight::OnePlusCos, 1).unwrap();
            for _ in 0..20 {
                let u = random_field(&op, &mut rng, 1.5);
                let v = random_field(&op, &mut rng, 1.0);
                let eps = 1e-5;
                let shift = |t: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + t * b).collect() };
                let fd = (energy(&shift(eps), 0.2, &op, &nl).unwrap() - energy(&shift(-eps), 0.2, &op, &nl).unwrap()) / (2.0 * eps);
                let g = energy_gradient(&u, 0.2, &op, &nl).unwrap();
                let exact = linalg::inner(&g, &v, h);
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{family:?}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn energy_identity_and_nehari_sign() {
        let op = DiscreteOperator::new(PeriodicPotential::mathieu(1.0).unwrap().shifted(9.8), 4, 16).unwrap();
        let h = op.spacing();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let nl = builtin_nonlinearity(Family::Minorant, 3.0, 4.0, Weight::OnePlusCos, 1).unwrap();
        let grid = nl.on_grid(&op);
        for _ in 0..10 {
            let u = random_field(&op, &mut rng, 2.0);
            let e = energy(&u, -0.1, &op, &nl).unwrap();
            let g = energy_gradient(&u, -0.1, &op, &nl).unwrap();
            let lhs = e - 0.5 * linalg::inner(&g, &u, h);
            let rhs = grid.nehari_gap(&u, h);
            assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
            assert!(rhs >= (nl.alpha / 2.0 - 1.0) * grid.potential_energy(&u, h) * (1.0 - 1e-12));
        }
    }
}
