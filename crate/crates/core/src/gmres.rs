//! Restarted GMRES with Givens rotations, generic over real and complex scalars.
//!
//! The D-bar equations are only real-linear, so they are solved with `f64`
//! scalars on the realified unknown; the Lippmann-Schwinger equation is
//! complex-linear and uses `Complex64` directly, which halves the Krylov
//! dimension needed for the same accuracy.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Field of scalars the solver works over.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn abs(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresConfig {
    /// Krylov subspace dimension between restarts.
    pub restart: usize,
    /// Total number of operator applications allowed.
    pub max_iters: usize,
    /// Target for `||b - A x|| / ||b||`.
    pub tol: f64,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            restart: 60,
            max_iters: 400,
            tol: 1e-10,
        }
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresInfo {
    /// Operator applications spent in Arnoldi steps.
    pub iterations: usize,
    /// Final `||b - A x|| / ||b||` (0 when `b = 0`).
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        s += x.conj() * y;
    }
    s
}

fn norm<T: Scalar>(a: &[T]) -> f64 {
    let mut s = 0.0;
    for &x in a {
        let v = x.abs();
        s += v * v;
    }
    s.sqrt()
}

/// Givens rotation `(c, s)` zeroing `b` in `[a, b]`, with real cosine.
fn givens<T: Scalar>(a: T, b: T) -> (T, T) {
    let (na, nb) = (a.abs(), b.abs());
    if nb == 0.0 {
        return (T::from_real(1.0), T::zero());
    }
    if na == 0.0 {
        return (T::zero(), T::from_real(1.0));
    }
    let r = (na * na + nb * nb).sqrt();
    let c = na / r;
    // s = (a/|a|) conj(b) / r so that c a + s b = (a/|a|) r.
    let phase = a / T::from_real(na);
    let s = phase * b.conj() / T::from_real(r);
    (T::from_real(c), s)
}

/// Solves `A x = b`, starting from the contents of `x`.
///
/// `apply(v, out)` must write `A v` into `out`.
pub fn gmres<T: Scalar>(
    mut apply: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    cfg: &GmresConfig,
) -> GmresInfo {
    let n = b.len();
    assert_eq!(x.len(), n);
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = T::zero());
        return GmresInfo {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let m = cfg.restart.max(1);
    let mut iterations = 0;
    let mut r = vec![T::zero(); n];
    let mut w = vec![T::zero(); n];
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![T::zero(); m]; m + 1];
    let mut cs = vec![T::zero(); m];
    let mut sn = vec![T::zero(); m];
    let mut g = vec![T::zero(); m + 1];

    loop {
        apply(x, &mut r);
        for (ri, &bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= cfg.tol || iterations >= cfg.max_iters {
            return GmresInfo {
                iterations,
                relative_residual: rel,
                converged: rel <= cfg.tol,
            };
        }
        basis.clear();
        basis.push(r.iter().map(|&v| v / T::from_real(beta)).collect());
        g.iter_mut().for_each(|v| *v = T::zero());
        g[0] = T::from_real(beta);
        let mut steps = 0;
        for j in 0..m {
            if iterations >= cfg.max_iters {
                break;
            }
            apply(&basis[j], &mut w);
            iterations += 1;
            // Modified Gram-Schmidt.
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                h[i][j] = hij;
                for (wk, &vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hnext = norm(&w);
            h[j + 1][j] = T::from_real(hnext);
            for i in 0..j {
                let (a, bb) = (h[i][j], h[i + 1][j]);
                h[i][j] = cs[i] * a + sn[i] * bb;
                h[i + 1][j] = -sn[i].conj() * a + cs[i] * bb;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            h[j][j] = c * h[j][j] + s * h[j + 1][j];
            h[j + 1][j] = T::zero();
            g[j + 1] = -s.conj() * g[j];
            g[j] = c * g[j];
            steps = j + 1;
            if g[j + 1].abs() / bnorm <= cfg.tol || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|&v| v / T::from_real(hnext)).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![T::zero(); steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for k in i + 1..steps {
                acc -= h[i][k] * y[k];
            }
            y[i] = acc / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, &vi) in x.iter_mut().zip(&basis[k]) {
                *xi += *yk * vi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply<T: Scalar>(a: &[Vec<T>]) -> impl FnMut(&[T], &mut [T]) + '_ {
        move |v, out| {
            for (row, o) in a.iter().zip(out.iter_mut()) {
                *o = row.iter().zip(v).fold(T::zero(), |s, (&aij, &vj)| s + aij * vj);
            }
        }
    }

    #[test]
    fn solves_real_nonsymmetric_system() {
        let n = 30;
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let base = if i == j { 3.0 } else { 0.0 };
                        base + ((i * 7 + j * 3) as f64).sin() * 0.2
                    })
                    .collect()
            })
            .collect();
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).cos()).collect();
        let mut b = vec![0.0; n];
        dense_apply(&a)(&x_true, &mut b);
        let mut x = vec![0.0; n];
        let cfg = GmresConfig {
            restart: 7,
            max_iters: 400,
            tol: 1e-12,
        };
        let info = gmres(dense_apply(&a), &b, &mut x, &cfg);
        assert!(info.converged, "{info:?}");
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).abs() < 1e-9);
        }
    }

    #[test]
    fn solves_complex_system() {
        let n = 20;
        let a: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = if i == j { Complex64::new(2.0, 1.0) } else { Complex64::new(0.0, 0.0) };
                        d + Complex64::new(((i + 2 * j) as f64).sin(), ((3 * i + j) as f64).cos()) * 0.1
                    })
                    .collect()
            })
            .collect();
        let x_true: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        dense_apply(&a)(&x_true, &mut b);
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let info = gmres(dense_apply(&a), &b, &mut x, &GmresConfig::default());
        assert!(info.converged);
        assert!(info.iterations <= n);
        for (xi, ti) in x.iter().zip(&x_true) {
            assert!((xi - ti).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_takes_no_iterations() {
        let mut x = vec![1.0; 4];
        let info = gmres(|v: &[f64], o: &mut [f64]| o.copy_from_slice(v), &[0.0; 4], &mut x, &GmresConfig::default());
        assert_eq!(info.iterations, 0);
        assert_eq!(x, vec![0.0; 4]);
    }

    #[test]
    fn reports_non_convergence() {
        // A rotation-like operator that restarted GMRES(1) cannot reduce.
        let apply = |v: &[f64], o: &mut [f64]| {
            o[0] = -v[1];
            o[1] = v[0];
        };
        let mut x = vec![0.0; 2];
        let cfg = GmresConfig {
            restart: 1,
            max_iters: 20,
            tol: 1e-12,
        };
        let info = gmres(apply, &[1.0, 0.0], &mut x, &cfg);
        assert!(!info.converged);
        assert_eq!(info.iterations, 20);
    }
}
