//! Critical points of `E_λ` and an upper bound for the minimax level.
//!
//! Solutions come from damped Newton iteration on the discrete
//! Euler–Lagrange equation `(D − λ)u = f(x, u)`, seeded along the gap
//! direction. The level is bracketed from above by maximising `E_λ` over the
//! half-plane `{y + sζ_λ : y ∈ Y, s ≥ 0}`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use crate::blochtest::{make_psi_r, radius_for, BlochError, BlochWave, Cutoff};
use crate::domain::{cells_for_radius, round_up_even, Domain};
use crate::linalg::{self, CyclicTridiag, LinalgError};
use crate::nonlinearity::{energy, Family, GridNonlinearity, Nonlinearity, NonlinearityError};
use crate::spectral::{h1_norm, quadratic_form, DiscreteOperator, GapCoercivity, SpectralError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("Newton converged to the trivial solution (H1 norm {norm:e} below threshold {threshold:e})")]
    ConvergedToTrivial { norm: f64, threshold: f64 },
    #[error("no convergence after {iterations} Newton iterations (relative residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("line search stalled at iteration {iteration} (relative residual {residual:e})")]
    LineSearch { iteration: usize, residual: f64 },
    #[error("Jacobian singular at iteration {iteration}: {source}")]
    SingularJacobian { iteration: usize, source: LinalgError },
    #[error("linking geometry failure: {0}")]
    Geometry(String),
    #[error("minimax upper bound must be positive, got {0}")]
    NonPositiveLevel(f64),
    #[error("guess has {got} points, domain has {expected}")]
    GuessSize { expected: usize, got: usize },
    #[error(transparent)]
    Bloch(#[from] BlochError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Stop when `|∇E_λ(u)|_2 ≤ tol · |u|_2`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial (largest) Newton step length in `(0, 1]`.
    pub damping: f64,
    /// Lower bound on the `H¹` norm of an accepted solution.
    pub trivial_threshold: f64,
    /// Enforce reflection symmetry about the domain centre when the data allow it.
    pub use_symmetry: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 100, damping: 1.0, trivial_threshold: 1e-6, use_symmetry: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkingConfig {
    pub ascent_iters: usize,
    pub boundary_samples: usize,
}

impl Default for LinkingConfig {
    fn default() -> Self {
        Self { ascent_iters: 50, boundary_samples: 200 }
    }
}

/// Maximiser of `E_λ(sζ)` over `s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberMax {
    pub s_star: f64,
    pub e_star: f64,
    /// `Q_λ(ζ)`.
    pub q: f64,
}

/// Bracket and golden-section search for a maximum of `phi` on `s > 0`,
/// where `phi(0) = 0` and `phi` is positive for small `s`.
fn maximize_ray<G: Fn(f64) -> f64>(phi: G, s0: f64) -> Option<(f64, f64)> {
    let mut s2 = s0;
    let mut f2 = phi(s2);
    let mut halvings = 0;
    while !(f2 > 0.0) {
        s2 *= 0.5;
        f2 = phi(s2);
        halvings += 1;
        if halvings > 200 {
            return None;
        }
    }
    let mut s1 = 0.0;
    let mut s3 = 2.0 * s2;
    let mut f3 = phi(s3);
    let mut doublings = 0;
    while f3 > f2 {
        s1 = s2;
        s2 = s3;
        f2 = f3;
        s3 *= 2.0;
        f3 = phi(s3);
        doublings += 1;
        if doublings > 200 || !f3.is_finite() {
            return None;
        }
    }
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (s1, s3);
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let (mut g1, mut g2) = (phi(x1), phi(x2));
    while hi - lo > 1e-11 * hi {
        if g1 > g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - invphi * (hi - lo);
            g1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + invphi * (hi - lo);
            g2 = phi(x2);
        }
    }
    let s = 0.5 * (lo + hi);
    Some((s, phi(s)))
}

/// `max_{s ≥ 0} E_λ(sζ)`.
pub fn fiber_maximize(lambda: f64, zeta: &[f64], op: &DiscreteOperator, nl: &Nonlinearity) -> Result<FiberMax, SolverError> {
    let q = quadratic_form(zeta, lambda, op)?;
    if !(q > 0.0) {
        return Err(SolverError::Geometry(format!("Q_lambda(zeta) = {q:e} is not positive; E is nonpositive along the ray")));
    }
    let grid = nl.on_grid(op);
    let h = op.spacing();
    let phi = |s: f64| {
        let su: Vec<f64> = zeta.iter().map(|z| s * z).collect();
        0.5 * s * s * q - grid.potential_energy(&su, h)
    };
    let s0 = 1.0 / linalg::sup_norm(zeta).max(f64::MIN_POSITIVE);
    let (s_star, e_star) =
        maximize_ray(phi, s0).ok_or_else(|| SolverError::Geometry("E_lambda(s zeta) has no interior maximum".into()))?;
    Ok(FiberMax { s_star, e_star, q })
}

/// `s* ζ_λ`, the point of the gap direction with the largest energy.
pub fn initial_guess(lambda: f64, zeta: &[f64], op: &DiscreteOperator, nl: &Nonlinearity) -> Result<Vec<f64>, SolverError> {
    let fm = fiber_maximize(lambda, zeta, op, nl)?;
    Ok(zeta.iter().map(|z| fm.s_star * z).collect())
}

/// Gap-direction guess with the packet width tuned to the solution:
/// minimise `R ↦ max_s E_λ(s Q Ψ_R)` over `R ∈ [R(λ)/4, 8 R(λ)]` (clipped to the
/// domain) and return `s* Q Ψ_R` at the minimiser.
pub fn refined_guess(
    lambda: f64,
    domain: &Domain,
    wave: &BlochWave,
    cutoff: Cutoff,
    nl: &Nonlinearity,
) -> Result<(f64, Vec<f64>), SolverError> {
    let r0 = radius_for(lambda, wave.b)?;
    let r_max = (8.0 * r0).min((domain.cells() as f64 - 2.0) / 4.0);
    let r_min = (0.25 * r0).min(r_max);
    let level = |log_r: f64| -> Result<(f64, Vec<f64>), SolverError> {
        let psi = make_psi_r(wave, cutoff, log_r.exp(), &domain.op)?;
        let zeta = domain.split.apply_q(&psi.values)?;
        let fm = fiber_maximize(lambda, &zeta, &domain.op, nl)?;
        Ok((fm.e_star, zeta.into_iter().map(|z| fm.s_star * z).collect()))
    };
    let invphi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (r_min.ln(), r_max.ln());
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let (mut g1, mut g2) = (level(x1)?.0, level(x2)?.0);
    while hi - lo > 1e-3 {
        if g1 < g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - invphi * (hi - lo);
            g1 = level(x1)?.0;
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + invphi * (hi - lo);
            g2 = level(x2)?.0;
        }
    }
    let log_r = 0.5 * (lo + hi);
    Ok((log_r.exp(), level(log_r)?.1))
}

/// Result of maximising `E_λ(y + sζ)` over `Y × [0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkingBound {
    pub c_ub: f64,
    pub s: f64,
    /// `H¹` norm of the optimal `y`.
    pub y_norm: f64,
    pub fiber: FiberMax,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternating maximisation of `E_λ(y + sζ)`: golden search in `s`, then the
/// fixed-point step `y ← (D − λ)|_Y^{−1} P f(y + sζ)` with backtracking.
pub fn linking_upper_bound(
    lambda: f64,
    domain: &Domain,
    zeta: &[f64],
    nl: &Nonlinearity,
    ascent_iters: usize,
) -> Result<LinkingBound, SolverError> {
    let op = &domain.op;
    let fiber = fiber_maximize(lambda, zeta, op, nl)?;
    let grid = nl.on_grid(op);
    let e = |w: &[f64]| -> Result<f64, SolverError> { Ok(energy(w, lambda, op, nl)?) };
    let combine = |y: &[f64], s: f64| -> Vec<f64> { y.iter().zip(zeta).map(|(a, z)| a + s * z).collect() };

    let mut y = vec![0.0; op.len()];
    let mut s = fiber.s_star;
    let mut best = fiber.e_star;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..ascent_iters {
        iterations = it + 1;
        let w = combine(&y, s);
        let target = domain.split.solve_on_y(&grid.f(&w), lambda)?;
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-8 {
            let trial: Vec<f64> = y.iter().zip(&target).map(|(a, b)| a + t * (b - a)).collect();
            let val = e(&combine(&trial, s))?;
            if val >= best {
                accepted = Some((trial, val));
                break;
            }
            t *= 0.5;
        }
        let Some((y_new, after_y)) = accepted else {
            converged = true;
            break;
        };
        y = y_new;
        let e_base = e(&y)?;
        let phi = |r: f64| e(&combine(&y, r)).unwrap_or(f64::NEG_INFINITY) - e_base;
        let mut after_s = after_y;
        if let Some((r, _)) = maximize_ray(phi, s) {
            let val = e(&combine(&y, r))?;
            if val >= after_y {
                s = r;
                after_s = val;
            }
        }
        let gain = after_s - best;
        best = best.max(after_s);
        if gain <= 1e-13 * best.abs() {
            converged = true;
            break;
        }
    }
    Ok(LinkingBound { c_ub: best, s, y_norm: h1_norm(&y, op)?, fiber, iterations, converged })
}

/// The half-cylinder `{y + sζ_λ : y ∈ Y, s ≥ 0, ‖y + sζ_λ‖ ≤ ρ_λ}` with a sampled boundary check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkingProblem {
    pub lambda: f64,
    pub rho: f64,
    pub zeta_norm: f64,
    /// Largest energy seen on the sampled boundary (origin excluded).
    pub boundary_max: f64,
    pub samples: usize,
    pub doublings: usize,
}

/// Choose `ρ_λ`: start at `10‖s*ζ‖` and double until every sampled boundary
/// point other than the origin has negative energy.
pub fn linking_problem<R: Rng>(
    lambda: f64,
    domain: &Domain,
    zeta: &[f64],
    nl: &Nonlinearity,
    s_star: f64,
    samples: usize,
    rng: &mut R,
) -> Result<LinkingProblem, SolverError> {
    const BASIS: usize = 8;
    const MAX_DOUBLINGS: usize = 60;
    let op = &domain.op;
    let zeta_norm = h1_norm(zeta, op)?;
    let ys = (0..BASIS)
        .map(|_| {
            let v: Vec<f64> = (0..op.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let y = domain.split.apply_p(&v)?;
            let n = h1_norm(&y, op)?;
            Ok(y.into_iter().map(|a| a / n).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>, SolverError>>()?;
    // directions: (angle, weights of the Y basis, fraction along the ray for the s = 0 face)
    let dirs: Vec<(f64, Vec<f64>, f64)> = (0..samples)
        .map(|_| {
            let theta = rng.gen_range(0.0..std::f64::consts::FRAC_PI_2);
            let c: Vec<f64> = (0..BASIS).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let frac = rng.gen_range(1e-3..1.0);
            (theta, c, frac)
        })
        .collect();
    let boundary_points = |rho: f64| -> Result<f64, SolverError> {
        let mut worst = f64::NEG_INFINITY;
        for (i, (theta, c, frac)) in dirs.iter().enumerate() {
            let mut y = vec![0.0; op.len()];
            for (ci, yi) in c.iter().zip(&ys) {
                for (a, b) in y.iter_mut().zip(yi) {
                    *a += ci * b;
                }
            }
            let yn = h1_norm(&y, op)?;
            let point: Vec<f64> = if i % 4 == 3 {
                // flat face s = 0
                y.iter().map(|a| rho * frac * a / yn).collect()
            } else {
                let v: Vec<f64> = y.iter().zip(zeta).map(|(a, z)| theta.sin() * a / yn + theta.cos() * z / zeta_norm).collect();
                let vn = h1_norm(&v, op)?;
                v.into_iter().map(|a| rho * a / vn).collect()
            };
            worst = worst.max(energy(&point, lambda, op, nl)?);
        }
        Ok(worst)
    };
    let mut rho = 10.0 * s_star * zeta_norm;
    if !(rho > 0.0) {
        return Err(SolverError::Geometry(format!("initial radius {rho} is not positive")));
    }
    for doublings in 0..=MAX_DOUBLINGS {
        let boundary_max = boundary_points(rho)?;
        if boundary_max < 0.0 {
            return Ok(LinkingProblem { lambda, rho, zeta_norm, boundary_max, samples, doublings });
        }
        rho *= 2.0;
    }
    Err(SolverError::Geometry(format!("boundary energy still nonnegative at rho = {rho:e}")))
}

/// Converged nontrivial solution of `(D − λ)u = f(x, u)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub lambda: f64,
    #[serde(skip)]
    pub u: Vec<f64>,
    pub energy: f64,
    /// `|∇E_λ(u)|_2`.
    pub residual: f64,
    pub h1_norm: f64,
    pub l2_norm: f64,
    pub sup_norm: f64,
    pub y_norm: f64,
    pub z_norm: f64,
    pub iterations: usize,
    /// Whole-cell translation applied before reporting.
    pub shift_cells: i64,
    /// `+1`/`−1` when reflection symmetry was enforced, `0` otherwise.
    pub parity: i32,
}

/// Index map of `x ↦ −x` about the domain centre (an even number of cells).
fn reflect(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|i| u[(n - i) % n]).collect()
}

fn symmetric_data(op: &DiscreteOperator, nl: &Nonlinearity) -> bool {
    if !op.cells().is_multiple_of(2) {
        return false;
    }
    let m = op.points_per_cell();
    let v: Vec<f64> = (0..m).map(|i| op.potential_at(i)).collect();
    let even_v = (0..m).all(|i| (v[i] - v[(m - i) % m]).abs() <= 1e-12 * v[i].abs().max(1.0));
    let probes = [0.0, 0.13, 0.31, 0.5, 0.77];
    let amplitudes = [1e-3, 0.4, 2.5];
    let even_f = match nl.family {
        Family::Custom => probes.iter().all(|x| amplitudes.iter().all(|u| (nl.f(*x, *u) - nl.f(-x, *u)).abs() <= 1e-12 * nl.f(*x, *u).abs().max(1e-300))),
        _ => probes.iter().all(|x| (nl.weight.eval(*x) - nl.weight.eval(-x)).abs() <= 1e-12),
    };
    even_v && even_f
}

fn parity_of(u: &[f64]) -> i32 {
    let r = reflect(u);
    let uu: f64 = u.iter().map(|a| a * a).sum();
    if uu == 0.0 {
        return 0;
    }
    let c = u.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / uu;
    if c > 0.5 {
        1
    } else if c < -0.5 {
        -1
    } else {
        0
    }
}

fn symmetrize(u: &mut [f64], parity: i32) {
    if parity == 0 {
        return;
    }
    let r = reflect(u);
    for (a, b) in u.iter_mut().zip(r) {
        *a = 0.5 * (*a + parity as f64 * b);
    }
}

fn residual(op: &DiscreteOperator, grid: &GridNonlinearity, u: &[f64], lambda: f64) -> Result<Vec<f64>, SolverError> {
    let mut r = op.apply_shifted(u, lambda)?;
    for (ri, fi) in r.iter_mut().zip(grid.f(u)) {
        *ri -= fi;
    }
    Ok(r)
}

fn l2(u: &[f64], h: f64) -> f64 {
    linalg::inner(u, u, h).sqrt()
}

/// Whole-cell shift `u(· + k)` with periodic wrap.
fn shift_cells(u: &[f64], cells: i64, m: usize) -> Vec<f64> {
    let n = u.len() as i64;
    let off = cells * m as i64;
    (0..n).map(|i| u[((i + off).rem_euclid(n)) as usize]).collect()
}

pub fn solve_critical_point(
    lambda: f64,
    guess: &[f64],
    domain: &Domain,
    nl: &Nonlinearity,
    cfg: &SolverConfig,
) -> Result<CriticalPoint, SolverError> {
    let op = &domain.op;
    if guess.len() != op.len() {
        return Err(SolverError::GuessSize { expected: op.len(), got: guess.len() });
    }
    let h = op.spacing();
    let inv_h2 = 1.0 / (h * h);
    let grid = nl.on_grid(op);
    let mut u = guess.to_vec();
    let parity = if cfg.use_symmetry && symmetric_data(op, nl) { parity_of(&u) } else { 0 };
    symmetrize(&mut u, parity);

    let n = op.len();
    let mut r = residual(op, &grid, &u, lambda)?;
    let mut rnorm = l2(&r, h);
    let mut iterations = 0;
    loop {
        let unorm = l2(&u, h);
        if rnorm <= cfg.tol * unorm.max(f64::MIN_POSITIVE) || (unorm == 0.0 && rnorm == 0.0) {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(SolverError::MaxIterations { iterations, residual: rnorm / unorm.max(f64::MIN_POSITIVE) });
        }
        iterations += 1;
        let df = grid.df(&u);
        let diag: Vec<f64> = (0..n).map(|i| 2.0 * inv_h2 + op.potential_at(i) - lambda - df[i]).collect();
        let off = vec![-inv_h2; n - 1];
        let jac = CyclicTridiag::new(off.clone(), diag, off, -inv_h2, -inv_h2)
            .map_err(|source| SolverError::SingularJacobian { iteration: iterations, source })?;
        let step = jac.solve(&r).map_err(|source| SolverError::SingularJacobian { iteration: iterations, source })?;
        let mut t = cfg.damping.clamp(1e-3, 1.0);
        loop {
            let mut trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a - t * d).collect();
            symmetrize(&mut trial, parity);
            let rt = residual(op, &grid, &trial, lambda)?;
            let rt_norm = l2(&rt, h);
            if rt_norm < (1.0 - 1e-4 * t) * rnorm || (t == 1.0 && rt_norm <= rnorm * (1.0 + 1e-12) && rt_norm <= 1e3 * cfg.tol * l2(&trial, h)) {
                u = trial;
                r = rt;
                rnorm = rt_norm;
                break;
            }
            t *= 0.5;
            if t < 1e-10 {
                return Err(SolverError::LineSearch { iteration: iterations, residual: rnorm / l2(&u, h).max(f64::MIN_POSITIVE) });
            }
        }
    }

    let norm = h1_norm(&u, op)?;
    if norm < cfg.trivial_threshold {
        return Err(SolverError::ConvergedToTrivial { norm, threshold: cfg.trivial_threshold });
    }
    // pin the translation: move the |u| maximum into the centre cell
    let mut shift = 0;
    if parity == 0 {
        let peak = u.iter().map(|a| a.abs()).fold(0.0, f64::max);
        let idx = u.iter().position(|a| a.abs() >= peak - 1e-10).unwrap_or(0);
        let m = op.points_per_cell();
        shift = (idx / m) as i64 - (op.cells() / 2) as i64;
        if shift != 0 {
            u = shift_cells(&u, shift, m);
            r = residual(op, &grid, &u, lambda)?;
            rnorm = l2(&r, h);
        }
    }
    let y = domain.split.apply_p(&u)?;
    let z: Vec<f64> = u.iter().zip(&y).map(|(a, b)| a - b).collect();
    Ok(CriticalPoint {
        lambda,
        energy: energy(&u, lambda, op, nl)?,
        residual: rnorm,
        h1_norm: norm,
        l2_norm: l2(&u, h),
        sup_norm: linalg::sup_norm(&u),
        y_norm: h1_norm(&y, op)?,
        z_norm: h1_norm(&z, op)?,
        iterations,
        shift_cells: shift,
        parity,
        u,
    })
}

/// `N_λ ‖u_λ‖² / c_ub`, bounded along the branch when the norm estimate holds.
pub fn verify_norm_estimate(cp: &CriticalPoint, c_ub: f64, coer: &GapCoercivity) -> Result<f64, SolverError> {
    if !(c_ub > 0.0) {
        return Err(SolverError::NonPositiveLevel(c_ub));
    }
    Ok(coer.n_lambda * cp.h1_norm * cp.h1_norm / c_ub)
}

/// Both sides of `β_λ‖z‖² + α_λ‖y‖² ≤ Q_λ(z) − Q_λ(y)` for `u = y + z`.
pub fn splitting_inequality(u: &[f64], domain: &Domain, coer: &GapCoercivity) -> Result<(f64, f64), SolverError> {
    let op = &domain.op;
    let y = domain.split.apply_p(u)?;
    let z: Vec<f64> = u.iter().zip(&y).map(|(a, b)| a - b).collect();
    let (ny, nz) = (h1_norm(&y, op)?, h1_norm(&z, op)?);
    let lhs = coer.beta * nz * nz + coer.alpha * ny * ny;
    let rhs = quadratic_form(&z, coer.lambda, op)? - quadratic_form(&y, coer.lambda, op)?;
    Ok((lhs, rhs))
}

/// `‖u‖` threshold separating genuine solutions from the trivial one:
/// `min{base, d^θ / 10}` with `θ = 1/(β−2) − N/4`.
pub fn trivial_threshold(base: f64, d: f64, beta: f64, dim: usize) -> f64 {
    let theta = 1.0 / (beta - 2.0) - dim as f64 / 4.0;
    base.min(d.powf(theta) / 10.0)
}

/// Envelope width `sqrt(c/d)` in cells for an edge with effective mass
/// coefficient `c = E''/2` at distance `d` below the edge.
pub fn envelope_width(curvature: f64, d: f64) -> f64 {
    (0.5 * curvature / d).sqrt()
}

/// Even cell count large enough for `Ψ_{R(λ)}` and for an envelope of width
/// `w` to decay to `tail` at the boundary.
pub fn solver_cells(radius: f64, width: f64, tail: f64) -> usize {
    let tails = (2.0 * width * (1.0 / tail).ln()).ceil() as usize;
    round_up_even(cells_for_radius(radius).max(tails).max(4))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blochtest::{edge_bloch_wave, gap_direction};
    use crate::nonlinearity::{builtin_nonlinearity, Weight};
    use crate::spectral::{band_curvature, bloch_bands, coercivity, find_gaps, shift_to_gap, GapShift, PeriodicPotential, SpectralGap};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Setup {
        pot: PeriodicPotential,
        gap: SpectralGap,
        wave: BlochWave,
        curvature: f64,
    }

    fn setup() -> Setup {
        let v = PeriodicPotential::mathieu(1.0).unwrap();
        let bands = bloch_bands(&v, 32, 4, 33).unwrap();
        let gap = find_gaps(&bands, 1e-3)[0];
        let curvature = band_curvature(bands.cell(), gap.upper_band, gap.k_upper);
        let (pot, gap) = shift_to_gap(&v, &gap, GapShift::Midpoint);
        let wave = edge_bloch_wave(&bands, &gap).unwrap();
        Setup { pot, gap, wave, curvature }
    }

    fn quartic(weight: Weight) -> Nonlinearity {
        builtin_nonlinearity(Family::PurePower, 0.0, 4.0, weight, 1).unwrap()
    }

    #[test]
    fn fiber_max_matches_closed_form() {
        let s = setup();
        let op = DiscreteOperator::new(s.pot.clone(), 42, 32).unwrap();
        let domain = Domain::new(op.clone()).unwrap();
        let nl = quartic(Weight::constant(1.0).unwrap());
        let lambda = s.gap.b - 0.01;
        let dir = gap_direction(lambda, &domain, &s.wave, Cutoff::SmoothStep, &[]).unwrap();
        let fm = fiber_maximize(lambda, &dir.zeta, &op, &nl).unwrap();
        let q = quadratic_form(&dir.zeta, lambda, &op).unwrap();
        let w: f64 = op.spacing() * dir.zeta.iter().map(|z| z.powi(4)).sum::<f64>();
        assert!((fm.s_star - (q / (4.0 * w)).sqrt()).abs() < 1e-8 * fm.s_star);
        assert!((fm.e_star - q * q / (16.0 * w)).abs() < 1e-12 * fm.e_star);
        // doubling ζ halves s*, keeps E*
        let z2: Vec<f64> = dir.zeta.iter().map(|z| 2.0 * z).collect();
        let fm2 = fiber_maximize(lambda, &z2, &op, &nl).unwrap();
        assert!((fm2.s_star - 0.5 * fm.s_star).abs() < 1e-8 * fm.s_star);
        assert!((fm2.e_star - fm.e_star).abs() < 1e-12 * fm.e_star);
    }

    #[test]
    fn fiber_level_decreases_toward_edge() {
        let s = setup();
        let op = DiscreteOperator::new(s.pot.clone(), 130, 32).unwrap();
        let domain = Domain::new(op.clone()).unwrap();
        let nl = quartic(Weight::OnePlusCos);
        let mut prev = f64::INFINITY;
        for d in [0.1, 0.03, 0.01, 0.003] {
            let dir = gap_direction(s.gap.b - d, &domain, &s.wave, Cutoff::SmoothStep, &[]).unwrap();
            let fm = fiber_maximize(s.gap.b - d, &dir.zeta, &op, &nl).unwrap();
            assert!(fm.e_star > 0.0 && fm.e_star < prev);
            prev = fm.e_star;
        }
    }

    #[test]
    fn nonpositive_ray_is_a_geometry_failure() {
        let s = setup();
        let op = DiscreteOperator::new(s.pot.clone(), 8, 32).unwrap();
        let domain = Domain::new(op.clone()).unwrap();
        let y = domain.split.apply_p(&(0..op.len()).map(|i| (i as f64 * 0.37).sin()).collect::<Vec<_>>()).unwrap();
        let nl = quartic(Weight::OnePlusCos);
        assert!(matches!(fiber_maximize(0.5, &y, &op, &nl), Err(SolverError::Geometry(_))));
    }

    #[test]
    fn linking_bound_dominates_fiber_and_has_negative_boundary() {
        let s = setup();
        let d = 0.05;
        let lambda = s.gap.b - d;
        let op = DiscreteOperator::new(s.pot.clone(), cells_for_radius(d.powf(-0.5)), 32).unwrap();
        let domain = Domain::new(op).unwrap();
        let nl = quartic(Weight::OnePlusCos);
        let dir = gap_direction(lambda, &domain, &s.wave, Cutoff::SmoothStep, &[]).unwrap();
        let lb = linking_upper_bound(lambda, &domain, &dir.zeta, &nl, 50).unwrap();
        assert!(lb.c_ub >= lb.fiber.e_star && lb.c_ub > 0.0);
        assert!((lb.c_ub - lb.fiber.e_star) <= 0.05 * lb.fiber.e_star, "{} vs {}", lb.c_ub, lb.fiber.e_star);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lp = linking_problem(lambda, &domain, &dir.zeta, &nl, lb.fiber.s_star, 200, &mut rng).unwrap();
        assert!(lp.boundary_max < 0.0 && lp.rho > 0.0);
    }

    #[test]
    fn zero_guess_converges_to_trivial() {
        let s = setup();
        let domain = Domain::new(DiscreteOperator::new(s.pot.clone(), 8, 32).unwrap()).unwrap();
        let nl = quartic(Weight::OnePlusCos);
        let err = solve_critical_point(0.5, &vec![0.0; domain.len()], &domain, &nl, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, SolverError::ConvergedToTrivial { .. }), "{err:?}");
    }

    #[test]
    fn newton_from_gap_direction_finds_a_gap_soliton() {
        let s = setup();
        let d = 0.05;
        let lambda = s.gap.b - d;
        let cells = solver_cells(d.powf(-0.5), envelope_width(s.curvature, d), 1e-6);
        let domain = Domain::new(DiscreteOperator::new(s.pot.clone(), cells, 32).unwrap()).unwrap();
        let nl = quartic(Weight::OnePlusCos);
        let dir = gap_direction(lambda, &domain, &s.wave, Cutoff::SmoothStep, &[]).unwrap();
        let guess = initial_guess(lambda, &dir.zeta, &domain.op, &nl).unwrap();
        let cp = solve_critical_point(lambda, &guess, &domain, &nl, &SolverConfig::default()).unwrap();
        assert!(cp.residual <= 1e-9 * cp.l2_norm);
        assert!(cp.energy >= -1e-8);
        // independent residual: assemble −Δ_h + V − λ from the potential formula
        let h = domain.spacing();
        let n = cp.u.len();
        let b = Weight::OnePlusCos;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let x = (i as f64 - domain.op.center_index() as f64) * h;
            let v = 2.0 * (2.0 * std::f64::consts::PI * x).cos() + s.pot.offset();
            let lap = (2.0 * cp.u[i] - cp.u[(i + 1) % n] - cp.u[(i + n - 1) % n]) / (h * h);
            let r = lap + (v - lambda) * cp.u[i] - 4.0 * b.eval(x) * cp.u[i].powi(3);
            worst = worst.max(r.abs());
        }
        assert!(worst < 1e-8 * linalg::sup_norm(&cp.u), "{worst}");
        // E − ½⟨∇E, u⟩ = Σ(½fu − F)h ≥ 0
        let gap_term = nl.on_grid(&domain.op).nehari_gap(&cp.u, h);
        assert!(gap_term >= 0.0);
        let coer = coercivity(lambda, &domain.split, &s.gap).unwrap();
        let (lhs, rhs) = splitting_inequality(&cp.u, &domain, &coer).unwrap();
        assert!(lhs <= rhs + 1e-6);
        let lb = linking_upper_bound(lambda, &domain, &dir.zeta, &nl, 50).unwrap();
        assert!(cp.energy <= lb.c_ub + 1e-6, "{} vs {}", cp.energy, lb.c_ub);
        assert!(verify_norm_estimate(&cp, lb.c_ub, &coer).unwrap() > 0.0);
    }

    #[test]
    fn threshold_and_sizing() {
        assert_eq!(trivial_threshold(1e-6, 0.5, 4.0, 1), 1e-6);
        assert!((trivial_threshold(1.0, 1e-4, 4.0, 1) - 1e-2).abs() < 1e-15);
        assert_eq!(solver_cells(1.0, 0.1, 1e-6), 6);
        assert!(solver_cells(10.0, 100.0, 1e-6) >= 2763);
        assert!((envelope_width(40.0, 0.2) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_and_shift_helpers() {
        let u: Vec<f64> = (0..8).map(|i| i as f64).collect();
        assert_eq!(reflect(&u), vec![0.0, 7.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
        assert_eq!(shift_cells(&u, 1, 2), vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 0.0, 1.0]);
        let mut w = vec![0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(parity_of(&w), 1);
        symmetrize(&mut w, 1);
        assert_eq!(w, vec![0.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0, 1.0]);
    }
}
