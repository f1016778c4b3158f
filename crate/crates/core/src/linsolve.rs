//! Linear solvers for the lagged-diffusivity implicit step.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Thomas algorithm for `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`.
///
/// Requires a diagonally dominant system (no pivoting).
pub fn solve_tridiagonal<T: Real>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = if i + 1 < n { upper[i] / m } else { T::zero() };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] = x[i] - c[i] * next;
    }
    x
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned BiCGSTAB for a matrix-free operator.
///
/// Stops when `|b - A x| <= tol |b|`; returns the iteration count.
pub fn bicgstab<T: Real>(
    apply: impl Fn(&[T], &mut [T]),
    diag: &[T],
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let mut r = vec![T::zero(); n];
    let mut tmp = vec![T::zero(); n];
    apply(x, &mut tmp);
    for i in 0..n {
        r[i] = b[i] - tmp[i];
    }
    let bnorm = norm(b).max(T::min_positive_value());
    let mut rnorm = norm(&r);
    if rnorm <= tol * bnorm {
        return Ok(0);
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (T::one(), T::one(), T::one());
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let mut y = vec![T::zero(); n];
    let mut s = vec![T::zero(); n];
    let mut z = vec![T::zero(); n];
    let mut t = vec![T::zero(); n];
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == T::zero() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
            y[i] = p[i] / diag[i];
        }
        apply(&y, &mut v);
        alpha = rho / dot(&r_hat, &v);
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol * bnorm {
            for i in 0..n {
                x[i] = x[i] + alpha * y[i];
            }
            return Ok(it);
        }
        for i in 0..n {
            z[i] = s[i] / diag[i];
        }
        apply(&z, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for i in 0..n {
            x[i] = x[i] + alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        rnorm = norm(&r);
        if rnorm <= tol * bnorm {
            return Ok(it);
        }
        if omega == T::zero() {
            break;
        }
    }
    Err(Error::Solver { iterations: max_iter, residual: (rnorm / bnorm).to_f64_lossy() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_matches_dense_product() {
        let n = 12;
        let lower: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { -1.0 - 0.1 * i as f64 }).collect();
        let upper: Vec<f64> = (0..n).map(|i| if i + 1 == n { 0.0 } else { -0.7 }).collect();
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + (i as f64).sin()).collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = diag[i] * x_true[i];
                if i > 0 {
                    v += lower[i] * x_true[i - 1];
                }
                if i + 1 < n {
                    v += upper[i] * x_true[i + 1];
                }
                v
            })
            .collect();
        let x = solve_tridiagonal(&lower, &diag, &upper, &rhs);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        let n = 40;
        // Upwinded 1-D operator: diagonally dominant, nonsymmetric.
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let mut v = 4.0 * x[i];
                if i > 0 {
                    v -= 1.5 * x[i - 1];
                }
                if i + 1 < n {
                    v -= 0.5 * x[i + 1];
                }
                y[i] = v;
            }
        };
        let diag = vec![4.0; n];
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 / n as f64).collect();
        let mut x = vec![0.0; n];
        bicgstab(apply, &diag, &b, &mut x, 1e-12, 200).unwrap();
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let res: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(res < 1e-10);
    }

    #[test]
    fn bicgstab_reports_non_convergence() {
        let n = 30;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                y[i] = 2.0 * x[i] - if i > 0 { x[i - 1] } else { 0.0 } - if i + 1 < n { x[i + 1] } else { 0.0 };
            }
        };
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let err = bicgstab(apply, &vec![2.0; n], &b, &mut x, 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::Solver { iterations: 2, .. }));
    }
}
