//! Restarted GMRES for complex non-Hermitian systems.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual target `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    /// Total Arnoldi steps across all restart cycles.
    pub max_iter: usize,
    /// Krylov dimension per cycle.
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            restart: 30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec<Complex64>,
    pub iterations: usize,
    /// True relative residual of the returned solution.
    pub residual: f64,
    /// Relative residual after every restart cycle.
    pub history: Vec<f64>,
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn cdot(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn residual(op: &dyn LinearOperator, x: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut ax = vec![Complex64::new(0.0, 0.0); b.len()];
    op.apply(x, &mut ax);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// The Krylov space is taken as invariant once orthogonalization leaves less
/// than this fraction of `‖A v_j‖`; normalizing the remainder would only
/// amplify rounding noise.
const BREAKDOWN: f64 = 1e-12;

/// Solve `A x = b`. Returns `Error::NotConverged` (carrying the residual history)
/// if the tolerance is not reached within `max_iter` Arnoldi steps.
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    cfg: &SolverConfig,
) -> Result<GmresOutcome> {
    let n = op.dim();
    assert_eq!(b.len(), n, "right-hand side has wrong length");
    let zero = Complex64::new(0.0, 0.0);
    let b_norm = norm(b);
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![zero; n],
    };
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            solution: vec![zero; n],
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
        });
    }

    let mut history = Vec::new();
    let mut total = 0usize;
    let m = cfg.restart.max(1).min(n.max(1));

    loop {
        let r = residual(op, &x, b);
        let beta = norm(&r);
        let rel = beta / b_norm;
        history.push(rel);
        if rel <= cfg.tol {
            return Ok(GmresOutcome {
                solution: x,
                iterations: total,
                residual: rel,
                history,
            });
        }
        if total >= cfg.max_iter {
            return Err(Error::NotConverged {
                iterations: total,
                residual: rel,
                history,
            });
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|z| z / beta).collect());
        // Hessenberg columns, already rotated
        let mut hess: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex64> = Vec::with_capacity(m);
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut steps = 0;

        for j in 0..m {
            let mut w = vec![zero; n];
            op.apply(&basis[j], &mut w);
            let av_norm = norm(&w);
            let mut col = vec![zero; j + 2];
            for (i, vi) in basis.iter().enumerate() {
                let hij = cdot(vi, &w);
                w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
                col[i] = hij;
            }
            let w_norm = norm(&w);
            col[j + 1] = Complex64::new(w_norm, 0.0);

            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (c, s, rr) = givens(col[j], col[j + 1]);
            col[j] = rr;
            col[j + 1] = zero;
            cs.push(c);
            sn.push(s);
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            hess.push(col);
            steps += 1;
            total += 1;

            let est = g[j + 1].norm() / b_norm;
            if est <= cfg.tol * 0.5 || total >= cfg.max_iter || w_norm <= BREAKDOWN * av_norm {
                break;
            }
            basis.push(w.iter().map(|z| z / w_norm).collect());
        }

        // back substitution on the rotated Hessenberg system
        let mut y = vec![zero; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for k in i + 1..steps {
                acc -= hess[k][i] * y[k];
            }
            y[i] = acc / hess[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[k]).for_each(|(xi, vi)| *xi += yk * vi);
        }
    }
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0), a);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn, Complex64::new(bn, 0.0));
    }
    let r = an.hypot(bn);
    let c = an / r;
    let phase = a / an;
    let s = phase * b.conj() / r;
    (c, s, phase * r)
}
