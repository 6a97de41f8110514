//! Periodic Schrödinger operators `-Δ + V` on a finite-difference grid.
//!
//! The operator lives on a periodic domain of `cells` whole period cells with
//! `points_per_cell` grid points each. Because the domain is an integer number
//! of cells, the matrix is block-circulant over cells and diagonalizes exactly
//! in the Bloch basis: quasi-momenta `k_j = 2πj / cells`, one `m × m`
//! Hermitian cell problem per `k_j`. [`SpectralSplit`] uses that structure to
//! apply the spectral projectors onto the negative (`Y`) and positive (`Z`)
//! parts of the spectrum in `O(cells · m²)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid potential: {0}")]
    Potential(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("eigensolver failed at k index {k_index}: residual {residual:e}")]
    Eigensolver { k_index: usize, residual: f64 },
    #[error("gap margin too small: eigenvalue {eigenvalue:e} within {margin:e} of 0")]
    GapMarginTooSmall { eigenvalue: f64, margin: f64 },
    #[error("lambda = {lambda} not in gap ({a}, {b})")]
    LambdaOutsideGap { lambda: f64, a: f64, b: f64 },
    #[error("grid mismatch: operator has {expected} points, function has {got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("invalid band request: {0}")]
    Bands(String),
}

/// Closed-form or tabulated shape of a 1-periodic potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PotentialShape {
    /// `V(x) = 2q cos(2πx)`.
    Mathieu { q: f64 },
    Constant { value: f64 },
    /// Values on a uniform cell grid `x_i = i / len`, linearly interpolated.
    Table { values: Vec<f64> },
}

/// A bounded, 1-periodic potential plus a constant offset (`V(x) + offset`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicPotential {
    shape: PotentialShape,
    offset: f64,
}

impl PeriodicPotential {
    pub fn mathieu(q: f64) -> Result<Self, SpectralError> {
        if !q.is_finite() {
            return Err(SpectralError::Potential(format!("mathieu q must be finite, got {q}")));
        }
        Ok(Self { shape: PotentialShape::Mathieu { q }, offset: 0.0 })
    }

    pub fn constant(value: f64) -> Result<Self, SpectralError> {
        if !value.is_finite() {
            return Err(SpectralError::Potential(format!("constant must be finite, got {value}")));
        }
        Ok(Self { shape: PotentialShape::Constant { value }, offset: 0.0 })
    }

    pub fn zero() -> Self {
        Self { shape: PotentialShape::Constant { value: 0.0 }, offset: 0.0 }
    }

    pub fn from_table(values: Vec<f64>) -> Result<Self, SpectralError> {
        if values.is_empty() {
            return Err(SpectralError::Potential("empty potential table".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::Potential("potential table has non-finite entries (V must be bounded)".into()));
        }
        Ok(Self { shape: PotentialShape::Table { values }, offset: 0.0 })
    }

    pub fn shape(&self) -> &PotentialShape {
        &self.shape
    }

    /// Constant added to the shape; `shifted(s)` subtracts `s` from it.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dimension(&self) -> usize {
        1
    }

    /// `V − s`.
    pub fn shifted(&self, s: f64) -> Self {
        Self { shape: self.shape.clone(), offset: self.offset - s }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let base = match &self.shape {
            PotentialShape::Mathieu { q } => 2.0 * q * (2.0 * PI * x).cos(),
            PotentialShape::Constant { value } => *value,
            PotentialShape::Table { values } => {
                let n = values.len();
                let t = x.rem_euclid(1.0) * n as f64;
                let i = (t.floor() as usize).min(n - 1);
                let frac = t - i as f64;
                values[i] * (1.0 - frac) + values[(i + 1) % n] * frac
            }
        };
        base + self.offset
    }

    /// Values on the cell grid `x_i = i / m`, `i = 0..m`.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        match &self.shape {
            PotentialShape::Table { values } if values.len() == m => {
                values.iter().map(|v| v + self.offset).collect()
            }
            _ => (0..m).map(|i| self.eval(i as f64 / m as f64)).collect(),
        }
    }

    pub fn describe(&self) -> String {
        match &self.shape {
            PotentialShape::Mathieu { q } => format!("mathieu(q={q}) {:+}", self.offset),
            PotentialShape::Constant { value } => format!("constant({value}) {:+}", self.offset),
            PotentialShape::Table { values } => format!("table[{}] {:+}", values.len(), self.offset),
        }
    }
}

/// Hermitian cell problem at quasi-momentum `k`: `u_{i+m} = e^{ik} u_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellProblem {
    v: Vec<f64>,
}

impl CellProblem {
    pub fn new(v: Vec<f64>) -> Result<Self, SpectralError> {
        if v.len() < 4 {
            return Err(SpectralError::Grid(format!("need at least 4 points per cell, got {}", v.len())));
        }
        Ok(Self { v })
    }

    pub fn points(&self) -> usize {
        self.v.len()
    }

    pub fn potential(&self) -> &[f64] {
        &self.v
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.v.len() as f64
    }

    /// Kinetic part `-Δ_h` with twisted boundary condition, plus `shift · I`.
    pub fn kinetic(&self, k: f64, shift: f64) -> DMatrix<Complex64> {
        let m = self.v.len();
        let inv_h2 = (m * m) as f64;
        let mut a = DMatrix::<Complex64>::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = Complex64::new(2.0 * inv_h2 + shift, 0.0);
            if i + 1 < m {
                a[(i, i + 1)] = Complex64::new(-inv_h2, 0.0);
                a[(i + 1, i)] = Complex64::new(-inv_h2, 0.0);
            }
        }
        let phase = Complex64::from_polar(1.0, k);
        a[(m - 1, 0)] += -inv_h2 * phase;
        a[(0, m - 1)] += -inv_h2 * phase.conj();
        a
    }

    pub fn hamiltonian(&self, k: f64) -> DMatrix<Complex64> {
        let mut a = self.kinetic(k, 0.0);
        for (i, v) in self.v.iter().enumerate() {
            a[(i, i)] += Complex64::new(*v, 0.0);
        }
        a
    }

    /// Eigenvalues ascending and matching eigenvector columns.
    pub fn solve(&self, k: f64) -> (Vec<f64>, DMatrix<Complex64>) {
        let h = self.hamiltonian(k);
        let eig = SymmetricEigen::new(h.clone());
        let (values, vectors) = jacobi_refine(&h, eig.eigenvectors);
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let m = self.v.len();
        let sorted = order.iter().map(|&i| values[i]).collect();
        let mut out = DMatrix::<Complex64>::zeros(m, m);
        for (c, &i) in order.iter().enumerate() {
            out.set_column(c, &vectors.column(i));
        }
        (sorted, out)
    }

    /// Relative residual `‖H v − E v‖ / max(|E|, 1)` for a unit vector `v`.
    pub fn residual(&self, k: f64, value: f64, vector: &DVector<Complex64>) -> f64 {
        let h = self.hamiltonian(k);
        let r = &h * vector - vector * Complex64::new(value, 0.0);
        r.norm() / (vector.norm() * value.abs().max(1.0))
    }

    pub fn band_energy(&self, k: f64, band: usize) -> f64 {
        self.solve(k).0[band]
    }
}

/// Polish an approximate unitary eigenbasis `v` of the Hermitian `h` by
/// cyclic Jacobi sweeps on `vᴴ h v`; returns the diagonal and the updated basis.
fn jacobi_refine(h: &DMatrix<Complex64>, mut v: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let m = h.nrows();
    let mut a = v.adjoint() * h * &v;
    let scale = (0..m).map(|i| a[(i, i)].norm()).fold(1.0, f64::max);
    for _ in 0..6 {
        let mut off: f64 = 0.0;
        for p in 0..m {
            for q in (p + 1)..m {
                let beta = a[(p, q)];
                let mag = beta.norm();
                off = off.max(mag);
                if mag <= 1e-18 * scale {
                    continue;
                }
                let w = beta / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, w̄) · [[c, s], [−s, c]] on the (p, q) plane
                let (upp, upq, uqp, uqq) =
                    (Complex64::new(c, 0.0), Complex64::new(s, 0.0), -w.conj() * s, w.conj() * c);
                for r in 0..m {
                    let (x, y) = (a[(r, p)], a[(r, q)]);
                    a[(r, p)] = x * upp + y * uqp;
                    a[(r, q)] = x * upq + y * uqq;
                }
                for col in 0..m {
                    let (x, y) = (a[(p, col)], a[(q, col)]);
                    a[(p, col)] = upp.conj() * x + uqp.conj() * y;
                    a[(q, col)] = upq.conj() * x + uqq.conj() * y;
                }
                for r in 0..m {
                    let (x, y) = (v[(r, p)], v[(r, q)]);
                    v[(r, p)] = x * upp + y * uqp;
                    v[(r, q)] = x * upq + y * uqq;
                }
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
    }
    ((0..m).map(|i| a[(i, i)].re).collect(), v)
}

/// The operator `-Δ_h + V` on a periodic domain of whole cells.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    potential: PeriodicPotential,
    cell: CellProblem,
    cells: usize,
}

impl DiscreteOperator {
    pub fn new(potential: PeriodicPotential, cells: usize, points_per_cell: usize) -> Result<Self, SpectralError> {
        if cells == 0 {
            return Err(SpectralError::Grid("domain needs at least one cell".into()));
        }
        if cells * points_per_cell < 3 {
            return Err(SpectralError::Grid("domain needs at least 3 grid points".into()));
        }
        let cell = CellProblem::new(potential.sample(points_per_cell))?;
        Ok(Self { potential, cell, cells })
    }

    pub fn potential(&self) -> &PeriodicPotential {
        &self.potential
    }

    pub fn cell(&self) -> &CellProblem {
        &self.cell
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn points_per_cell(&self) -> usize {
        self.cell.points()
    }

    pub fn len(&self) -> usize {
        self.cells * self.cell.points()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.cell.spacing()
    }

    /// Spectral shift `s0` already folded into the potential (`V_shifted = V − s0`).
    pub fn shift(&self) -> f64 {
        -self.potential.offset()
    }

    /// Grid index of the domain centre: left edge of cell `cells / 2`.
    pub fn center_index(&self) -> usize {
        (self.cells / 2) * self.cell.points()
    }

    pub fn x(&self, n: usize) -> f64 {
        n as f64 * self.spacing()
    }

    /// Coordinate of grid point `n` relative to the domain centre.
    pub fn x_centered(&self, n: usize) -> f64 {
        (n as f64 - self.center_index() as f64) * self.spacing()
    }

    pub fn potential_at(&self, n: usize) -> f64 {
        self.cell.v[n % self.cell.points()]
    }

    pub fn check_grid(&self, u: &[f64]) -> Result<(), SpectralError> {
        if u.len() != self.len() {
            return Err(SpectralError::GridMismatch { expected: self.len(), got: u.len() });
        }
        Ok(())
    }

    /// `(D − λ) u`.
    pub fn apply_shifted(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>, SpectralError> {
        self.check_grid(u)?;
        let n = u.len();
        let inv_h2 = 1.0 / (self.spacing() * self.spacing());
        Ok((0..n)
            .map(|i| {
                let l = u[(i + n - 1) % n];
                let r = u[(i + 1) % n];
                (2.0 * u[i] - l - r) * inv_h2 + (self.potential_at(i) - lambda) * u[i]
            })
            .collect())
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>, SpectralError> {
        self.apply_shifted(u, 0.0)
    }

    /// Dense matrix of `D` (tests and small oracles only).
    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let inv_h2 = 1.0 / (self.spacing() * self.spacing());
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] += 2.0 * inv_h2 + self.potential_at(i);
            a[(i, (i + 1) % n)] -= inv_h2;
            a[(i, (i + n - 1) % n)] -= inv_h2;
        }
        a
    }

    /// Same domain and grid with potential `V − s`.
    pub fn shifted(&self, s: f64) -> Result<Self, SpectralError> {
        Self::new(self.potential.shifted(s), self.cells, self.points_per_cell())
    }

    /// Same potential and resolution on a domain of a different number of cells.
    pub fn resized(&self, cells: usize) -> Result<Self, SpectralError> {
        Self::new(self.potential.clone(), cells, self.points_per_cell())
    }
}

/// Band functions `E_j(k)` on a uniform quasi-momentum grid over `[-π, π]`.
#[derive(Debug, Clone)]
pub struct BandStructure {
    pub ks: Vec<f64>,
    /// `energies[i][j]` = `E_j(ks[i])`, ascending in `j`.
    pub energies: Vec<Vec<f64>>,
    cell: CellProblem,
}

impl BandStructure {
    pub fn n_bands(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    pub fn band(&self, j: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[j]).collect()
    }

    pub fn cell(&self) -> &CellProblem {
        &self.cell
    }
}

/// Bands of the cell problem for `n_k` quasi-momenta `k_i = −π + 2πi/(n_k − 1)`.
pub fn bloch_bands(
    potential: &PeriodicPotential,
    points_per_cell: usize,
    n_bands: usize,
    n_k: usize,
) -> Result<BandStructure, SpectralError> {
    if n_bands < 2 || n_k < 8 {
        return Err(SpectralError::Bands(format!("need n_bands >= 2 and n_k >= 8, got {n_bands}, {n_k}")));
    }
    if n_bands > points_per_cell {
        return Err(SpectralError::Bands(format!(
            "{n_bands} bands requested but the cell has only {points_per_cell} points"
        )));
    }
    let cell = CellProblem::new(potential.sample(points_per_cell))?;
    let ks: Vec<f64> = (0..n_k).map(|i| -PI + 2.0 * PI * i as f64 / (n_k - 1) as f64).collect();
    let energies = ks
        .par_iter()
        .enumerate()
        .map(|(ik, &k)| {
            let (values, vectors) = cell.solve(k);
            for (j, &value) in values.iter().enumerate().take(n_bands) {
                let v = vectors.column(j).into_owned();
                let res = cell.residual(k, value, &v);
                if !(res <= 1e-8) {
                    return Err(SpectralError::Eigensolver { k_index: ik, residual: res });
                }
            }
            Ok(values[..n_bands].to_vec())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BandStructure { ks, energies, cell })
}

/// A spectral gap `(a, b)` between bands `lower_band` and `lower_band + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralGap {
    pub a: f64,
    pub b: f64,
    pub lower_band: usize,
    pub upper_band: usize,
    /// Quasi-momentum at which the lower band attains `a`.
    pub k_lower: f64,
    /// Quasi-momentum at which the upper band attains `b`.
    pub k_upper: f64,
    pub contains_zero: bool,
}

impl SpectralGap {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.a < lambda && lambda < self.b
    }

    pub fn check_lambda(&self, lambda: f64) -> Result<(), SpectralError> {
        if self.contains(lambda) {
            Ok(())
        } else {
            Err(SpectralError::LambdaOutsideGap { lambda, a: self.a, b: self.b })
        }
    }

    fn translated(&self, s: f64) -> Self {
        let a = self.a - s;
        let b = self.b - s;
        Self { a, b, contains_zero: a < 0.0 && 0.0 < b, ..*self }
    }
}

const K_SNAP: f64 = 1e-12;

fn is_symmetric_point(k: f64) -> bool {
    k.abs() < K_SNAP || (k.abs() - PI).abs() < K_SNAP
}

/// Golden-section refinement of an extremum of band `j` near the sampled `k0`.
fn refine_extremum(cell: &CellProblem, band: usize, k0: f64, dk: f64, maximize: bool) -> (f64, f64) {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |k: f64| sign * cell.band_energy(k, band);
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (k0 - dk, k0 + dk);
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while hi - lo > 1e-10 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = g(x2);
        }
    }
    let k = 0.5 * (lo + hi);
    let best = [(k0, g(k0)), (k, g(k))].into_iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    (best.0, sign * best.1)
}

fn band_extremum(bands: &BandStructure, j: usize, maximize: bool) -> (f64, f64) {
    let values = bands.band(j);
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        let better = if maximize { *v > values[best] } else { *v < values[best] };
        if better {
            best = i;
        }
    }
    let k0 = bands.ks[best];
    if is_symmetric_point(k0) {
        return (k0.abs(), values[best]);
    }
    let dk = bands.ks[1] - bands.ks[0];
    refine_extremum(&bands.cell, j, k0, dk, maximize)
}

/// Gaps between consecutive bands wider than `threshold`, sorted by `a`.
pub fn find_gaps(bands: &BandStructure, threshold: f64) -> Vec<SpectralGap> {
    let mut gaps = Vec::new();
    for j in 0..bands.n_bands().saturating_sub(1) {
        let (k_lower, a) = band_extremum(bands, j, true);
        let (k_upper, b) = band_extremum(bands, j + 1, false);
        if b - a > threshold {
            gaps.push(SpectralGap {
                a,
                b,
                lower_band: j,
                upper_band: j + 1,
                k_lower,
                k_upper,
                contains_zero: a < 0.0 && 0.0 < b,
            });
        }
    }
    gaps.sort_by(|x, y| x.a.total_cmp(&y.a));
    gaps
}

/// Where to put zero inside the gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum GapShift {
    /// `s0 = (a + b) / 2`.
    Midpoint,
    /// `s0 = a + t (b − a)`.
    Fraction(f64),
    /// `s0` given explicitly.
    Absolute(f64),
}

impl GapShift {
    pub fn amount(&self, gap: &SpectralGap) -> f64 {
        match *self {
            GapShift::Midpoint => 0.5 * (gap.a + gap.b),
            GapShift::Fraction(t) => gap.a + t * (gap.b - gap.a),
            GapShift::Absolute(s) => s,
        }
    }
}

/// Shift the potential so that zero lies inside `gap`.
pub fn shift_to_gap(potential: &PeriodicPotential, gap: &SpectralGap, rule: GapShift) -> (PeriodicPotential, SpectralGap) {
    let s = rule.amount(gap);
    (potential.shifted(s), gap.translated(s))
}

/// One Bloch block of the truncated operator.
#[derive(Debug, Clone)]
struct BlochBlock {
    values: Vec<f64>,
    vectors: DMatrix<Complex64>,
    n_neg: usize,
}

/// Orthogonal splitting `Y ⊕ Z` of grid functions by the sign of the spectrum.
///
/// `P` projects onto `Y` (negative eigenvalues), `Q = 1 − P` onto `Z`.
/// `alpha0`, `beta0` are the optimal constants in
/// `Q_0(y) ≤ −α_0 ‖y‖²`, `Q_0(z) ≥ β_0 ‖z‖²` for the discrete `H¹` norm.
#[derive(Clone)]
pub struct SpectralSplit {
    cells: usize,
    m: usize,
    h: f64,
    blocks: Vec<BlochBlock>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    pub alpha0: f64,
    pub beta0: f64,
    pub dim_y: usize,
    pub dim_z: usize,
    /// Largest negative eigenvalue of the truncated operator.
    pub y_top: f64,
    /// Smallest positive eigenvalue of the truncated operator.
    pub z_bottom: f64,
    /// Smallest eigenvalue overall.
    pub spectrum_min: f64,
}

impl std::fmt::Debug for SpectralSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralSplit")
            .field("cells", &self.cells)
            .field("points_per_cell", &self.m)
            .field("dim_y", &self.dim_y)
            .field("dim_z", &self.dim_z)
            .field("alpha0", &self.alpha0)
            .field("beta0", &self.beta0)
            .field("y_top", &self.y_top)
            .field("z_bottom", &self.z_bottom)
            .finish()
    }
}

pub const GAP_MARGIN: f64 = 1e-8;

/// Smallest `θ` with `A x = θ K x` on the columns `cols` of the eigenbasis, where
/// `A = diag(sign · μ)` and `K` is the `H¹` Gram matrix of the cell block.
fn min_generalized(block: &BlochBlock, kmat: &DMatrix<Complex64>, cols: std::ops::Range<usize>, sign: f64) -> f64 {
    let n = cols.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let basis = block.vectors.columns(cols.start, n).into_owned();
    let gram = basis.adjoint() * kmat * &basis;
    let gram = (&gram + gram.adjoint()) * Complex64::new(0.5, 0.0);
    let chol = Cholesky::new(gram).expect("H1 Gram matrix is positive definite");
    let l = chol.l();
    let a = DMatrix::<Complex64>::from_diagonal(&DVector::from_iterator(
        n,
        block.values[cols].iter().map(|mu| Complex64::new(sign * mu, 0.0)),
    ));
    let x = l.solve_lower_triangular(&a).expect("triangular solve");
    let c = l.solve_lower_triangular(&x.adjoint()).expect("triangular solve").adjoint();
    let c = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(c).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

impl SpectralSplit {
    pub fn build(op: &DiscreteOperator) -> Result<Self, SpectralError> {
        let cells = op.cells();
        let m = op.points_per_cell();
        let cell = op.cell().clone();
        let blocks: Vec<(BlochBlock, f64, f64)> = (0..cells)
            .into_par_iter()
            .map(|j| {
                let k = 2.0 * PI * j as f64 / cells as f64;
                let (values, vectors) = cell.solve(k);
                if let Some(mu) = values.iter().find(|mu| mu.abs() < GAP_MARGIN) {
                    return Err(SpectralError::GapMarginTooSmall { eigenvalue: *mu, margin: GAP_MARGIN });
                }
                let n_neg = values.iter().filter(|mu| **mu < 0.0).count();
                let block = BlochBlock { values, vectors, n_neg };
                let kmat = cell.kinetic(k, 1.0);
                let alpha = min_generalized(&block, &kmat, 0..n_neg, -1.0);
                let beta = min_generalized(&block, &kmat, n_neg..m, 1.0);
                Ok((block, alpha, beta))
            })
            .collect::<Result<_, _>>()?;

        let alpha0 = blocks.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
        let beta0 = blocks.iter().map(|b| b.2).fold(f64::INFINITY, f64::min);
        let blocks: Vec<BlochBlock> = blocks.into_iter().map(|b| b.0).collect();
        let dim_y: usize = blocks.iter().map(|b| b.n_neg).sum();
        let all = || blocks.iter().flat_map(|b| b.values.iter().copied());
        let y_top = all().filter(|mu| *mu < 0.0).fold(f64::NEG_INFINITY, f64::max);
        let z_bottom = all().filter(|mu| *mu > 0.0).fold(f64::INFINITY, f64::min);
        let spectrum_min = all().fold(f64::INFINITY, f64::min);

        let mut planner = FftPlanner::new();
        Ok(Self {
            cells,
            m,
            h: op.spacing(),
            fft: planner.plan_fft_forward(cells),
            ifft: planner.plan_fft_inverse(cells),
            blocks,
            alpha0,
            beta0,
            dim_y,
            dim_z: cells * m - dim_y,
            y_top,
            z_bottom,
            spectrum_min,
        })
    }

    pub fn len(&self) -> usize {
        self.cells * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// All eigenvalues of the truncated operator, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    fn forward(&self, u: &[f64]) -> Vec<DVector<Complex64>> {
        let (cells, m) = (self.cells, self.m);
        let norm = 1.0 / (cells as f64).sqrt();
        let mut out = vec![DVector::<Complex64>::zeros(m); cells];
        let mut buf = vec![Complex64::new(0.0, 0.0); cells];
        for i in 0..m {
            for c in 0..cells {
                buf[c] = Complex64::new(u[c * m + i], 0.0);
            }
            self.fft.process(&mut buf);
            for j in 0..cells {
                out[j][i] = buf[j] * norm;
            }
        }
        out
    }

    fn inverse(&self, coeffs: &[DVector<Complex64>]) -> Vec<f64> {
        let (cells, m) = (self.cells, self.m);
        let norm = 1.0 / (cells as f64).sqrt();
        let mut out = vec![0.0; cells * m];
        let mut buf = vec![Complex64::new(0.0, 0.0); cells];
        for i in 0..m {
            for j in 0..cells {
                buf[j] = coeffs[j][i];
            }
            self.ifft.process(&mut buf);
            for c in 0..cells {
                out[c * m + i] = buf[c].re * norm;
            }
        }
        out
    }

    /// `g(D) u` for a real function `g` of the eigenvalue.
    pub fn apply_function<G: Fn(f64) -> f64 + Sync>(&self, u: &[f64], g: G) -> Result<Vec<f64>, SpectralError> {
        if u.len() != self.len() {
            return Err(SpectralError::GridMismatch { expected: self.len(), got: u.len() });
        }
        let coeffs = self.forward(u);
        let mapped: Vec<DVector<Complex64>> = coeffs
            .par_iter()
            .zip(self.blocks.par_iter())
            .map(|(c, block)| {
                let mut w = block.vectors.adjoint() * c;
                for (wi, mu) in w.iter_mut().zip(&block.values) {
                    *wi *= g(*mu);
                }
                &block.vectors * w
            })
            .collect();
        Ok(self.inverse(&mapped))
    }

    /// `P u`, the component in `Y`.
    pub fn apply_p(&self, u: &[f64]) -> Result<Vec<f64>, SpectralError> {
        self.apply_function(u, |mu| if mu < 0.0 { 1.0 } else { 0.0 })
    }

    /// `Q u = u − P u`, the component in `Z`.
    pub fn apply_q(&self, u: &[f64]) -> Result<Vec<f64>, SpectralError> {
        let p = self.apply_p(u)?;
        Ok(u.iter().zip(&p).map(|(a, b)| a - b).collect())
    }

    /// `(D − λ)^{-1}` restricted to `Y` (zero on `Z`), for `λ` above the `Y` spectrum.
    pub fn solve_on_y(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>, SpectralError> {
        self.apply_function(u, |mu| if mu < 0.0 { 1.0 / (mu - lambda) } else { 0.0 })
    }
}

/// Lemma-type coercivity constants of `Q_λ` on `Y` and `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapCoercivity {
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub n_lambda: f64,
}

/// `α_λ`, `β_λ` and `N_λ = ½ min{α_λ, β_λ}` from the `λ = 0` constants.
pub fn coercivity_from(lambda: f64, alpha0: f64, beta0: f64, gap: &SpectralGap) -> Result<GapCoercivity, SpectralError> {
    gap.check_lambda(lambda)?;
    let (alpha, beta) = if lambda <= 0.0 {
        (alpha0 * (1.0 - lambda / gap.a), beta0)
    } else {
        (alpha0, beta0 * (1.0 - lambda / gap.b))
    };
    Ok(GapCoercivity { lambda, alpha, beta, n_lambda: 0.5 * alpha.min(beta) })
}

pub fn coercivity(lambda: f64, split: &SpectralSplit, gap: &SpectralGap) -> Result<GapCoercivity, SpectralError> {
    coercivity_from(lambda, split.alpha0, split.beta0, gap)
}

/// `Q_λ(u) = h Σ [((u_{n+1} − u_n)/h)² + (V_n − λ) u_n²] = ⟨(D − λ)u, u⟩`.
pub fn quadratic_form(u: &[f64], lambda: f64, op: &DiscreteOperator) -> Result<f64, SpectralError> {
    op.check_grid(u)?;
    let h = op.spacing();
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        let du = (u[(i + 1) % n] - u[i]) / h;
        acc += du * du + (op.potential_at(i) - lambda) * u[i] * u[i];
    }
    Ok(h * acc)
}

/// Discrete `H¹` norm `(h Σ [((u_{n+1} − u_n)/h)² + u_n²])^{1/2}`.
pub fn h1_norm(u: &[f64], op: &DiscreteOperator) -> Result<f64, SpectralError> {
    op.check_grid(u)?;
    let h = op.spacing();
    let n = u.len();
    let acc: f64 = (0..n)
        .map(|i| {
            let du = (u[(i + 1) % n] - u[i]) / h;
            du * du + u[i] * u[i]
        })
        .sum();
    Ok((h * acc).sqrt())
}

/// Band curvature `E''(k)` at the edge of `band`, by a centred difference.
pub fn band_curvature(cell: &CellProblem, band: usize, k: f64) -> f64 {
    let dk = 1e-3;
    let e0 = cell.band_energy(k, band);
    let ep = cell.band_energy(k + dk, band);
    let em = cell.band_energy(k - dk, band);
    (ep - 2.0 * e0 + em) / (dk * dk)
}
