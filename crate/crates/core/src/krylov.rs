//! Restarted GMRES with right preconditioning.

use crate::error::{Error, Result};

/// Outcome of a GMRES solve.
#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// Final residual `‖b − Ax‖ / ‖b‖` as tracked by the Arnoldi recurrence.
    pub relative_residual: f64,
    pub iterations: usize,
    /// Whether `tol` was met; otherwise the solve stagnated at a roundoff floor.
    pub converged: bool,
}

/// Solves `A x = b` by restarted GMRES with right preconditioner `M⁻¹`,
/// starting from `x = 0`.
///
/// A restart cycle that fails to halve the true residual counts as
/// stagnation and returns the current iterate with `converged == false`.
pub fn gmres<A, P>(
    mut apply: A,
    mut precond: P,
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> Result<GmresOutcome>
where
    A: FnMut(&[f64]) -> Result<Vec<f64>>,
    P: FnMut(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            relative_residual: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let mut total = 0;
    let mut trace = Vec::new();
    loop {
        let ax = if total == 0 { vec![0.0; n] } else { apply(&x)? };
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / bnorm;
        let stalled = trace.last().is_some_and(|&prev: &f64| rel > 0.5 * prev);
        trace.push(rel);
        if rel <= tol || stalled {
            return Ok(GmresOutcome {
                x,
                relative_residual: rel,
                iterations: total,
                converged: rel <= tol,
            });
        }
        if total >= max_iter {
            return Err(Error::solver("GMRES did not reach the tolerance", trace));
        }
        let m = restart.min(max_iter - total).max(1);
        let mut v: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        v.push(r.iter().map(|ri| ri / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk)?;
            z.push(zk);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                h[i][k] = hik;
                w.iter_mut().zip(vi).for_each(|(wj, vj)| *wj -= hik * vj);
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let tmp = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = tmp;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                return Err(Error::solver("GMRES breakdown", trace));
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            total += 1;
            let est = g[k + 1].abs() / bnorm;
            if est <= tol * 0.5 || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            x.iter_mut().zip(zi).for_each(|(xj, zj)| *xj += yi * zj);
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
