//! Restarted GMRES with right preconditioning.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target relative residual `||b - A x|| / ||b||`.
    pub tol: f64,
    /// Krylov dimension before restart, lowered so the basis fits in [`BASIS_MEMORY`].
    pub restart: usize,
    pub max_iterations: usize,
}

/// Memory budget for the Krylov basis in bytes.
pub const BASIS_MEMORY: usize = 1 << 30;

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 150,
            max_iterations: 3000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.par_iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
}

/// Solves `A x = b` with `A = apply`, right preconditioner `precond` (applied in place).
pub fn gmres<A, P>(apply: A, precond: P, b: &[Complex64], opts: &SolverOptions) -> Result<(Vec<Complex64>, SolveStats)>
where
    A: Fn(&[Complex64], &mut [Complex64]),
    P: Fn(&mut [Complex64]),
{
    let len = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; len];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let cap = (BASIS_MEMORY / (len * std::mem::size_of::<Complex64>())).max(20);
    let m = opts.restart.min(cap).max(1);
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut work = vec![zero; len];
    loop {
        // true residual r = b - A x
        apply(&x, &mut work);
        r.par_iter_mut()
            .zip(b.par_iter().zip(work.par_iter()))
            .for_each(|(r, (b, w))| *r = b - w);
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= opts.tol {
            return Ok((
                x,
                SolveStats {
                    iterations,
                    relative_residual: rel,
                },
            ));
        }
        if iterations >= opts.max_iterations || !rel.is_finite() {
            return Err(Error::Solver {
                achieved: rel,
                iterations,
                target: opts.tol,
            });
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![zero; m]; m + 1];
        let mut cs = vec![zero; m];
        let mut sn = vec![zero; m];
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k_used = 0;
        for j in 0..m {
            let mut z = basis[j].clone();
            precond(&mut z);
            let mut w = vec![zero; len];
            apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                hess[i][j] = hij;
                axpy(-hij, v, &mut w);
            }
            let wn = norm(&w);
            hess[j + 1][j] = Complex64::new(wn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * hess[i][j] + sn[i].conj() * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (a, bb) = (hess[j][j], hess[j + 1][j]);
            let d = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if d == 0.0 {
                cs[j] = Complex64::new(1.0, 0.0);
                sn[j] = zero;
            } else {
                cs[j] = a / d;
                sn[j] = bb / d;
            }
            hess[j][j] = cs[j].conj() * a + sn[j].conj() * bb;
            hess[j + 1][j] = zero;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            iterations += 1;
            k_used = j + 1;
            let est = g[j + 1].norm() / bnorm;
            if wn > 0.0 {
                basis.push(w.into_iter().map(|v| v / wn).collect());
            }
            if est <= 0.5 * opts.tol || wn == 0.0 || iterations >= opts.max_iterations {
                break;
            }
        }
        // back substitution
        let mut y = vec![zero; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for l in i + 1..k_used {
                s -= hess[i][l] * y[l];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![zero; len];
        for (i, yi) in y.iter().enumerate() {
            axpy(*yi, &basis[i], &mut update);
        }
        precond(&mut update);
        x.par_iter_mut().zip(update.par_iter()).for_each(|(x, u)| *x += u);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_nonsymmetric_system() {
        let n = 60;
        let apply = |x: &[Complex64], out: &mut [Complex64]| {
            for i in 0..n {
                let mut s = Complex64::new(3.0 + i as f64 * 0.05, 0.4) * x[i];
                if i > 0 {
                    s += Complex64::new(-1.0, 0.2) * x[i - 1];
                }
                if i + 1 < n {
                    s += Complex64::new(-0.5, 0.0) * x[i + 1];
                }
                out[i] = s;
            }
        };
        let b: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let opts = SolverOptions {
            restart: 10,
            ..Default::default()
        };
        let (x, stats) = gmres(apply, |_| {}, &b, &opts).unwrap();
        let mut ax = vec![Complex64::new(0.0, 0.0); n];
        apply(&x, &mut ax);
        let res = ax.iter().zip(&b).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt() / norm(&b);
        assert!(res <= 1e-10 && stats.relative_residual <= 1e-10);
    }

    #[test]
    fn reports_failure() {
        let b = vec![Complex64::new(1.0, 0.0); 50];
        let opts = SolverOptions {
            tol: 1e-14,
            restart: 2,
            max_iterations: 3,
        };
        let apply = |x: &[Complex64], out: &mut [Complex64]| {
            for i in 0..50 {
                out[i] = x[i] * (1.0 + i as f64) + if i > 0 { x[i - 1] * 3.0 } else { Complex64::new(0.0, 0.0) };
            }
        };
        match gmres(apply, |_| {}, &b, &opts) {
            Err(Error::Solver { achieved, .. }) => assert!(achieved > 1e-14),
            other => panic!("expected a solver error, got {other:?}"),
        }
    }
}
