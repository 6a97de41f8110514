//! Small dense/banded kernels shared by the spectral and solver modules.
//!
//! The periodic finite-difference operators in this crate are cyclic
//! tridiagonal, so every linear solve (Newton steps, resolvents on a
//! complex contour) goes through [`CyclicTridiag`]: an LU factorization with
//! partial pivoting of the banded part plus a Sherman–Morrison correction
//! for the two corner entries.

use nalgebra::ComplexField;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is numerically singular (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },
    #[error("system too small: need at least {min} unknowns, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// LU factors of a tridiagonal matrix with row interchanges (LAPACK `gttrf` layout).
#[derive(Debug, Clone)]
pub struct TridiagLu<T> {
    d: Vec<T>,
    du: Vec<T>,
    du2: Vec<T>,
    mult: Vec<T>,
    swapped: Vec<bool>,
}

impl<T> TridiagLu<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    /// Factor the matrix with sub-diagonal `dl`, diagonal `d` and super-diagonal `du`.
    pub fn factor(mut dl: Vec<T>, mut d: Vec<T>, mut du: Vec<T>) -> Result<Self, LinalgError> {
        let n = d.len();
        if n == 0 {
            return Err(LinalgError::TooSmall { min: 1, got: 0 });
        }
        if dl.len() + 1 != n || du.len() + 1 != n {
            return Err(LinalgError::Dimension { expected: n - 1, got: dl.len().min(du.len()) });
        }
        let scale = d
            .iter()
            .chain(dl.iter())
            .chain(du.iter())
            .map(|x| x.modulus())
            .fold(0.0_f64, f64::max)
            .max(f64::MIN_POSITIVE);
        let tiny = scale * f64::EPSILON * 1e-3;

        let mut du2 = vec![T::zero(); n.saturating_sub(2)];
        let mut mult = vec![T::zero(); n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].modulus() >= dl[i].modulus() {
                if d[i].modulus() <= tiny {
                    return Err(LinalgError::Singular { row: i, pivot: d[i].modulus() });
                }
                let f = dl[i] / d[i];
                mult[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                mult[i] = f;
                swapped[i] = true;
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                du[i] = tmp;
            }
            dl[i] = T::zero();
        }
        if d[n - 1].modulus() <= tiny {
            return Err(LinalgError::Singular { row: n - 1, pivot: d[n - 1].modulus() });
        }
        Ok(Self { d, du, du2, mult, swapped })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.d.len();
        debug_assert_eq!(b.len(), n);
        for i in 0..n.saturating_sub(1) {
            let f = self.mult[i];
            if self.swapped[i] {
                let old_i = b[i];
                b[i] = b[i + 1];
                b[i + 1] = old_i - f * b[i + 1];
            } else {
                let bi = b[i];
                b[i + 1] -= f * bi;
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Cyclic tridiagonal system: tridiagonal plus entries `A[0][n-1]` and `A[n-1][0]`.
#[derive(Debug, Clone)]
pub struct CyclicTridiag<T> {
    lu: TridiagLu<T>,
    // Sherman–Morrison data: A = T + u vᵀ
    q: Vec<T>,
    v_first: T,
    v_last: T,
    denom: T,
}

impl<T> CyclicTridiag<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    /// `sub[i] = A[i+1][i]`, `sup[i] = A[i][i+1]`, `lower_corner = A[n-1][0]`,
    /// `upper_corner = A[0][n-1]`.
    pub fn new(
        sub: Vec<T>,
        mut diag: Vec<T>,
        sup: Vec<T>,
        lower_corner: T,
        upper_corner: T,
    ) -> Result<Self, LinalgError> {
        let n = diag.len();
        if n < 3 {
            return Err(LinalgError::TooSmall { min: 3, got: n });
        }
        let mut gamma = -diag[0];
        if gamma.modulus() == 0.0 {
            gamma = T::one();
        }
        diag[0] -= gamma;
        diag[n - 1] -= lower_corner * upper_corner / gamma;
        let lu = TridiagLu::factor(sub, diag, sup)?;

        let mut q = vec![T::zero(); n];
        q[0] = gamma;
        q[n - 1] = lower_corner;
        lu.solve_in_place(&mut q);
        let v_first = T::one();
        let v_last = upper_corner / gamma;
        let denom = T::one() + v_first * q[0] + v_last * q[n - 1];
        let scale = 1.0 + (v_first * q[0]).modulus() + (v_last * q[n - 1]).modulus();
        if denom.modulus() <= scale * 1e3 * f64::EPSILON {
            return Err(LinalgError::Singular { row: 0, pivot: denom.modulus() });
        }
        Ok(Self { lu, q, v_first, v_last, denom })
    }

    pub fn len(&self) -> usize {
        self.lu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lu.is_empty()
    }

    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.len();
        if rhs.len() != n {
            return Err(LinalgError::Dimension { expected: n, got: rhs.len() });
        }
        let mut y = rhs.to_vec();
        self.lu.solve_in_place(&mut y);
        let t = (self.v_first * y[0] + self.v_last * y[n - 1]) / self.denom;
        for (yi, qi) in y.iter_mut().zip(&self.q) {
            *yi -= t * *qi;
        }
        Ok(y)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule for `∫_a^b g`, `panels` equal panels of `order` nodes.
pub fn integrate<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * g(mid + 0.5 * width * xi);
        }
        total += 0.5 * width * acc;
    }
    total
}

/// Adaptive Gauss–Legendre quadrature: a panel is accepted when its
/// 10-point and two-half 10-point estimates agree to `tol` (absolute, scaled
/// by panel width), otherwise it is bisected up to `max_depth` times.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(g: F, a: f64, b: f64, tol: f64, max_depth: usize) -> f64 {
    let (x, w) = gauss_legendre(10);
    let panel = |lo: f64, hi: f64| {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        half * x.iter().zip(&w).map(|(xi, wi)| wi * g(mid + half * xi)).sum::<f64>()
    };
    let total_width = (b - a).abs().max(f64::MIN_POSITIVE);
    let mut stack = vec![(a, b, panel(a, b), 0usize)];
    let mut total = 0.0;
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let (left, right) = (panel(lo, mid), panel(mid, hi));
        let local_tol = tol * (hi - lo).abs() / total_width;
        if depth >= max_depth || (left + right - whole).abs() <= local_tol {
            total += left + right;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    total
}

/// Discrete inner product `h Σ u_i v_i`.
pub fn inner(u: &[f64], v: &[f64], h: f64) -> f64 {
    h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

/// Discrete `L^p` norm with rectangle quadrature; `p = ∞` gives the grid max-norm.
pub fn lp_norm(u: &[f64], p: f64, h: f64) -> f64 {
    if p.is_infinite() {
        return sup_norm(u);
    }
    let s: f64 = u.iter().map(|x| x.abs().powf(p)).sum();
    (h * s).powf(1.0 / p)
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn dense_cyclic(sub: &[f64], diag: &[f64], sup: &[f64], lo: f64, up: f64) -> nalgebra::DMatrix<f64> {
        let n = diag.len();
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = diag[i];
            if i + 1 < n {
                a[(i + 1, i)] = sub[i];
                a[(i, i + 1)] = sup[i];
            }
        }
        a[(n - 1, 0)] += lo;
        a[(0, n - 1)] += up;
        a
    }

    #[test]
    fn cyclic_solve_matches_dense_lu_on_indefinite_system() {
        let n = 9;
        let sub: Vec<f64> = (0..n - 1).map(|i| 1.0 + 0.1 * i as f64).collect();
        let sup: Vec<f64> = (0..n - 1).map(|i| -0.7 + 0.05 * i as f64).collect();
        // zero and small diagonal entries force row interchanges
        let diag: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.0 } else { 0.3 * (i as f64) - 1.0 }).collect();
        let a = dense_cyclic(&sub, &diag, &sup, 0.9, -1.3);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 0.5).collect();
        let solver = CyclicTridiag::new(sub, diag, sup, 0.9, -1.3).unwrap();
        let x = solver.solve(&b).unwrap();
        let r = &a * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(b);
        assert!(r.norm() < 1e-12, "residual {}", r.norm());
    }

    #[test]
    fn complex_shifted_laplacian_solve() {
        let n = 16;
        let z = Complex64::new(-0.3, 0.8);
        let one = Complex64::new(1.0, 0.0);
        let sub = vec![-one; n - 1];
        let sup = vec![-one; n - 1];
        let diag = vec![2.0 * one - z; n];
        let solver = CyclicTridiag::new(sub, diag, sup, -one, -one).unwrap();
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = solver.solve(&b).unwrap();
        for i in 0..n {
            let l = x[(i + n - 1) % n];
            let r = x[(i + 1) % n];
            let ax = -l + (2.0 * one - z) * x[i] - r;
            assert!((ax - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_cyclic_laplacian_is_detected() {
        // periodic Laplacian has the constant vector in its kernel
        let n = 8;
        let res = CyclicTridiag::new(vec![-1.0; n - 1], vec![2.0; n], vec![-1.0; n - 1], -1.0, -1.0);
        assert!(matches!(res, Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m12: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(12)).sum();
        assert!((m12 - 2.0 / 13.0).abs() < 1e-14);
        let v = integrate(|t| t.exp(), 0.0, 1.0, 4, 10);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn lp_norms() {
        let u = vec![3.0, -4.0];
        assert!((lp_norm(&u, 2.0, 1.0) - 5.0).abs() < 1e-15);
        assert_eq!(lp_norm(&u, f64::INFINITY, 0.1), 4.0);
        assert!((inner(&u, &u, 0.5) - 12.5).abs() < 1e-15);
    }

    #[test]
    fn adaptive_quadrature_handles_kinks() {
        let kink = |x: f64| if x < 0.3 { x * x } else { 0.09 + 2.0 * (x - 0.3) };
        let exact = 0.3f64.powi(3) / 3.0 + 0.09 * 0.7 + 0.49;
        let v = integrate_adaptive(kink, 0.0, 1.0, 1e-13, 40);
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }
}
