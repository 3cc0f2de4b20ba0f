//! The distinguished Painlevé III transcendent.
//!
//! Solves `(x∂ₓ)²ψ = (x²/2)·sinh 2ψ` for the positive decreasing solution with
//! `ψ ~ −(1/3) log x` at the origin and exponential decay at infinity. In
//! `s = log x` the equation reads `ψ_ss = (e^{2s}/2)·sinh 2ψ`, which is
//! discretized with second-order central differences on a uniform `s` grid
//! and solved by damped Newton iteration on the tridiagonal system.

use crate::banded::BandMatrix;
use crate::bessel::{k0_scaled, k1_scaled};
use crate::error::{Error, Result};

/// Solver defaults.
pub const DEFAULT_X_MIN: f64 = 1e-3;
/// Solver defaults.
pub const DEFAULT_X_MAX: f64 = 25.0;
/// Solver defaults.
pub const DEFAULT_NODES: usize = 2048;
/// Solver defaults.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Grid samples of the Painlevé solution.
#[derive(Debug, Clone, PartialEq)]
pub struct PainleveSolution {
    /// Strictly increasing abscissae, log-spaced.
    pub grid: Vec<f64>,
    /// `ψ` at each node.
    pub psi: Vec<f64>,
    /// `dψ/dx` at each node.
    pub dpsi: Vec<f64>,
    /// Discrete ODE residual at each node.
    pub residual: Vec<f64>,
    /// Maximum of `|residual|`.
    pub residual_max: f64,
    /// Newton residual history.
    pub history: Vec<f64>,
    s0: f64,
    h: f64,
    series_a: f64,
}

/// Which representation produced a value in [`eval_psi_branch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiBranch {
    /// Small-x series below the grid.
    Series,
    /// Interpolated grid data.
    Grid,
    /// Decaying Bessel tail above the grid.
    Tail,
    /// The singular point `x = 0`.
    Singular,
}

fn left_slope(x: f64, psi: f64) -> (f64, f64) {
    let e = 0.1875 * x * x * (2.0 * psi).exp();
    (-1.0 / 3.0 + e, 2.0 * e)
}

fn robin_ratio(x: f64) -> f64 {
    -x * k1_scaled(x) / k0_scaled(x)
}

struct Discretization {
    s0: f64,
    h: f64,
    n: usize,
    robin: f64,
}

impl Discretization {
    fn x(&self, i: usize) -> f64 {
        (self.s0 + self.h * i as f64).exp()
    }

    fn ghosts(&self, psi: &[f64]) -> (f64, f64) {
        let n = self.n;
        let (g0, _) = left_slope(self.x(0), psi[0]);
        let left = psi[1] - 2.0 * self.h * g0;
        let right = psi[n - 2] + 2.0 * self.h * self.robin * psi[n - 1];
        (left, right)
    }

    fn residual(&self, psi: &[f64]) -> Vec<f64> {
        let n = self.n;
        let (gl, gr) = self.ghosts(psi);
        let ih2 = 1.0 / (self.h * self.h);
        (0..n)
            .map(|i| {
                let lm = if i == 0 { gl } else { psi[i - 1] };
                let rp = if i == n - 1 { gr } else { psi[i + 1] };
                let x = self.x(i);
                (lm - 2.0 * psi[i] + rp) * ih2 - 0.5 * x * x * (2.0 * psi[i]).sinh()
            })
            .collect()
    }

    fn jacobian(&self, psi: &[f64]) -> BandMatrix {
        let n = self.n;
        let ih2 = 1.0 / (self.h * self.h);
        let mut j = BandMatrix::zeros(n, 1, 1);
        for i in 0..n {
            let x = self.x(i);
            let mut diag = -2.0 * ih2 - x * x * (2.0 * psi[i]).cosh();
            if i == 0 {
                let (_, dg) = left_slope(x, psi[0]);
                diag += -2.0 * self.h * dg * ih2;
                j.add(0, 1, 2.0 * ih2).unwrap();
            } else if i == n - 1 {
                diag += 2.0 * self.h * self.robin * ih2;
                j.add(i, i - 1, 2.0 * ih2).unwrap();
            } else {
                j.add(i, i - 1, ih2).unwrap();
                j.add(i, i + 1, ih2).unwrap();
            }
            j.add(i, i, diag).unwrap();
        }
        j
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn newton(
    disc: &Discretization,
    mut psi: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut r = disc.residual(&psi);
    let mut norm = sup(&r);
    let mut history = vec![norm];
    for _ in 0..max_iter {
        if norm <= tol {
            return Ok((psi, history));
        }
        let lu = disc.jacobian(&psi).factor()?;
        let mut step = r.clone();
        lu.solve(&mut step);
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = psi
                .iter()
                .zip(&step)
                .map(|(p, d)| p - damping * d)
                .collect();
            let rt = disc.residual(&trial);
            let nt = sup(&rt);
            if nt.is_finite() && (nt < norm || damping < 1.0 / 1024.0) {
                psi = trial;
                r = rt;
                norm = nt;
                break;
            }
            damping *= 0.5;
            if damping < 1e-6 {
                return Err(Error::solver("Painlevé Newton line search failed", history));
            }
        }
        history.push(norm);
        if psi.iter().any(|p| !p.is_finite()) {
            return Err(Error::solver("Painlevé Newton iterate diverged", history));
        }
    }
    if norm <= tol {
        Ok((psi, history))
    } else {
        Err(Error::solver("Painlevé Newton did not converge", history))
    }
}

/// Solves the two-point boundary value problem on `[x_min, x_max]` with
/// `n_nodes` log-spaced nodes until the discrete residual is below `tol`.
pub fn solve_painleve(
    x_min: f64,
    x_max: f64,
    n_nodes: usize,
    tol: f64,
) -> Result<PainleveSolution> {
    if !(x_min > 0.0 && x_min < 1.0 && x_max > 1.0 && x_max.is_finite()) {
        return Err(Error::domain(format!(
            "need 0 < x_min < 1 < x_max, got [{x_min}, {x_max}]"
        )));
    }
    if n_nodes < 64 {
        return Err(Error::domain(format!(
            "need at least 64 nodes, got {n_nodes}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let s0 = x_min.ln();
    let h = (x_max.ln() - s0) / (n_nodes - 1) as f64;
    let disc = Discretization {
        s0,
        h,
        n: n_nodes,
        robin: robin_ratio(x_max),
    };
    let guess: Vec<f64> = (0..n_nodes)
        .map(|i| {
            let x = disc.x(i);
            k0_scaled(x) * (-x).exp() / 3.0
        })
        .collect();
    let (psi, history) = match newton(&disc, guess.clone(), tol, 60) {
        Ok(v) => v,
        Err(_) => continuation(&disc, guess, tol)?,
    };
    if psi.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::solver("Painlevé solution lost positivity", history));
    }
    let residual = disc.residual(&psi);
    let (gl, gr) = disc.ghosts(&psi);
    let dpsi: Vec<f64> = (0..n_nodes)
        .map(|i| {
            let lm = if i == 0 { gl } else { psi[i - 1] };
            let rp = if i == n_nodes - 1 { gr } else { psi[i + 1] };
            (rp - lm) / (2.0 * h) / disc.x(i)
        })
        .collect();
    let grid: Vec<f64> = (0..n_nodes).map(|i| disc.x(i)).collect();
    let series_a = fit_series_constant(grid[0], psi[0]);
    Ok(PainleveSolution {
        residual_max: sup(&residual),
        grid,
        psi,
        dpsi,
        residual,
        history,
        s0,
        h,
        series_a,
    })
}

fn continuation(
    disc: &Discretization,
    mut psi: Vec<f64>,
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut history = Vec::new();
    for stage in [1e-2, 1e-4, 1e-6, tol] {
        let (p, h) = newton(disc, psi, stage.max(tol), 200)?;
        psi = p;
        history.extend(h);
    }
    Ok((psi, history))
}

fn fit_series_constant(x0: f64, psi0: f64) -> f64 {
    let mut a = psi0 + x0.ln() / 3.0;
    for _ in 0..50 {
        a = psi0 + x0.ln() / 3.0 - (9.0 / 64.0) * (2.0 * a).exp() * x0.powf(4.0 / 3.0);
    }
    a
}

impl PainleveSolution {
    /// Lower end of the grid.
    pub fn x_min(&self) -> f64 {
        self.grid[0]
    }

    /// Upper end of the grid.
    pub fn x_max(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Constant `a` of the small-x expansion `ψ ≈ −(1/3) log x + a`.
    pub fn series_constant(&self) -> f64 {
        self.series_a
    }

    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    /// True for an empty grid, which a solved instance never has.
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// `(ψ(x), ψ′(x))` using the grid interpolant inside the grid and the matched
/// asymptotic forms outside it.
pub fn eval_psi(sol: &PainleveSolution, x: f64) -> (f64, f64) {
    let (p, d, _) = eval_psi_branch(sol, x);
    (p, d)
}

/// [`eval_psi`] together with the branch that produced the value.
pub fn eval_psi_branch(sol: &PainleveSolution, x: f64) -> (f64, f64, PsiBranch) {
    let n = sol.grid.len();
    if !(x > 0.0) {
        return (f64::INFINITY, f64::NEG_INFINITY, PsiBranch::Singular);
    }
    if x < sol.grid[0] {
        let a = sol.series_a;
        let e = (2.0 * a).exp() * x.powf(4.0 / 3.0);
        let psi = -x.ln() / 3.0 + a + (9.0 / 64.0) * e;
        let dpsi = (-1.0 / 3.0 + (3.0 / 16.0) * e) / x;
        return (psi, dpsi, PsiBranch::Series);
    }
    let xn = sol.grid[n - 1];
    if x > xn {
        let ratio = (xn - x).exp() / k0_scaled(xn);
        let psi = sol.psi[n - 1] * k0_scaled(x) * ratio;
        let dpsi = -sol.psi[n - 1] * k1_scaled(x) * ratio;
        return (psi, dpsi, PsiBranch::Tail);
    }
    let pos = (x.ln() - sol.s0) / sol.h;
    let nearest = pos.round();
    if (pos - nearest).abs() < 1e-9 {
        let k = (nearest.max(0.0) as usize).min(n - 1);
        if sol.grid[k] == x || (pos - nearest).abs() < 1e-12 {
            return (sol.psi[k], sol.dpsi[k], PsiBranch::Grid);
        }
    }
    let i = (pos.floor().max(0.0) as usize).min(n - 2);
    let u = (pos - i as f64).clamp(0.0, 1.0);
    let h = sol.h;
    let (x0, x1) = (sol.grid[i], sol.grid[i + 1]);
    let (p0, p1) = (sol.psi[i], sol.psi[i + 1]);
    let (d0, d1) = (sol.dpsi[i] * x0, sol.dpsi[i + 1] * x1);
    let (c0, c1) = (
        0.5 * x0 * x0 * (2.0 * p0).sinh(),
        0.5 * x1 * x1 * (2.0 * p1).sinh(),
    );
    let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
    let h10 = u * (1.0 - u) * (1.0 - u);
    let h01 = u * u * (3.0 - 2.0 * u);
    let h11 = u * u * (u - 1.0);
    let psi = h00 * p0 + h10 * h * d0 + h01 * p1 + h11 * h * d1;
    let ds = h00 * d0 + h10 * h * c0 + h01 * d1 + h11 * h * c1;
    (psi, ds / x, PsiBranch::Grid)
}

/// `η(x) = (1 + 3x·ψ′(x))/8`.
pub fn eta(sol: &PainleveSolution, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let (_, d) = eval_psi(sol, x);
    (1.0 + 3.0 * x * d) / 8.0
}

/// Argument `(8/3)·t·ρ^{3/2}` at which [`psi_p`] samples `ψ`.
pub fn psi_p_argument(t: f64, rho: f64) -> f64 {
    (8.0 / 3.0) * t * rho.powf(1.5)
}

/// `ψ_P(t, ρ) = ψ((8/3)·t·ρ^{3/2})`; infinite at `ρ = 0`.
pub fn psi_p(sol: &PainleveSolution, t: f64, rho: f64) -> f64 {
    eval_psi(sol, psi_p_argument(t, rho)).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn sol() -> &'static PainleveSolution {
        static S: OnceLock<PainleveSolution> = OnceLock::new();
        S.get_or_init(|| {
            solve_painleve(DEFAULT_X_MIN, DEFAULT_X_MAX, DEFAULT_NODES, DEFAULT_TOL).unwrap()
        })
    }

    #[test]
    fn sign_structure_and_residual() {
        let s = sol();
        assert!(s.psi.iter().all(|&p| p > 0.0));
        assert!(s.dpsi.iter().all(|&d| d < 0.0));
        assert!(s.psi.windows(2).all(|w| w[1] < w[0]));
        assert!(s.residual_max <= DEFAULT_TOL);
    }

    #[test]
    fn nodes_are_reproduced() {
        let s = sol();
        for i in [0, 17, 1000, s.len() - 1] {
            let (p, d) = eval_psi(s, s.grid[i]);
            assert!((p - s.psi[i]).abs() <= 1e-14 * s.psi[i].abs().max(1e-300));
            assert!((d - s.dpsi[i]).abs() <= 1e-12 * s.dpsi[i].abs());
        }
    }

    #[test]
    fn small_x_behaviour() {
        let s = sol();
        for x in [1e-4, 1e-6, 1e-9] {
            let (p, _) = eval_psi(s, x);
            assert!((p + x.ln() / 3.0 - s.series_constant()).abs() < 1e-3);
            assert!(eta(s, x) / x.powf(4.0 / 3.0) < 1.0);
        }
    }

    #[test]
    fn tail_and_eta_limits() {
        let s = sol();
        let (p2, _) = eval_psi(s, 2.0 * s.x_max());
        assert!(p2 < 1e-6 * s.psi[s.len() - 1]);
        assert!((eta(s, 50.0) - 0.125).abs() < 1e-6);
        for &x in s.grid.iter().step_by(7) {
            let e = eta(s, x);
            assert!((0.0..=0.125).contains(&e), "eta({x}) = {e}");
        }
    }

    #[test]
    fn psi_p_argument_identity() {
        let s = sol();
        let a = psi_p(s, 1.0, 0.7);
        let b = psi_p(s, 8.0, 0.7 / 4.0);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(psi_p(s, 4.0, 1.0), eval_psi(s, 32.0 / 3.0).0);
        assert!(psi_p(s, 1.0, 0.0).is_infinite());
    }

    #[test]
    fn second_order_refinement() {
        let coarse = solve_painleve(1e-3, 25.0, 513, 1e-10).unwrap();
        let fine = solve_painleve(1e-3, 25.0, 1025, 1e-10).unwrap();
        let finer = solve_painleve(1e-3, 25.0, 2049, 1e-10).unwrap();
        let e1 = (0..513)
            .map(|i| (coarse.psi[i] - fine.psi[2 * i]).abs())
            .fold(0.0, f64::max);
        let e2 = (0..1025)
            .map(|i| (fine.psi[i] - finer.psi[2 * i]).abs())
            .fold(0.0, f64::max);
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "refinement ratio {ratio}");
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(solve_painleve(2.0, 25.0, 100, 1e-10)
            .unwrap_err()
            .is_domain());
        assert!(solve_painleve(1e-3, 25.0, 10, 1e-10)
            .unwrap_err()
            .is_domain());
    }
}
