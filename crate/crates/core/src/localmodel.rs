//! The λ-family of rank-2 local model metrics.
//!
//! In the frame where the metric is the radial matrix `M_λ(r)` the
//! equation reduces, with `N = rM` and `σ = log r`, to
//! `N_σσ = N_σN⁻¹N_σ + 4r³[det N·N E₂₂ N − E₂₂/det N]`. The positive
//! matrix `N` is parametrized by
//! `N₁₁ = e^P cosh ω`, `N₁₂ = e^P sinh ω`, `N₂₂ = (e^P sinh²ω + e^Q)/cosh ω`,
//! and `P = 2L + δP`, `Q = −L + δQ` with `L = κ − 2λσ`, `κ = log(4/c_λ)`.
//! The first-order system in `(δP, δQ, ω, δP_σ, δQ_σ, ω_σ, κ)` is solved by
//! Hermite–Simpson collocation on a grid uniform in `ξ = σ + α·e^{3σ/2}`,
//! with damped Newton iteration, a complex-step Jacobian and a banded LU.
//! Regularity at the origin is imposed at `r = 10⁻⁴` and decay to the
//! decoupled asymptote at `r_max`.

use crate::banded::BandMatrix;
use crate::error::{Error, Result};
use crate::fit::aitken;
use crate::hermlin::{CMat2, CMat3, HermMatrix2, HermMatrix3};
use crate::operator::{hitchin_operator_fd, HiggsForms};
use crate::painleve::{self, PainleveSolution};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Default number of collocation nodes.
pub const DEFAULT_NODES: usize = 2048;
/// Default Newton tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default outer radius at `t = 1`.
pub const DEFAULT_RHO_MAX: f64 = 40.0;
/// Inner scaled radius where regularity is imposed.
pub const SCALED_RHO_MIN: f64 = 1e-4;
/// Default grid stretching parameter `α`.
pub const DEFAULT_STRETCH: f64 = 0.1;
/// Largest admissible `|λ|`.
pub const LAMBDA_BOUND: f64 = 0.25;

const NV: usize = 7;
const CSTEP: f64 = 1e-30;

type C = Complex64;

/// Solver configuration for [`solve_local_model_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalModelConfig {
    pub rho_max: f64,
    pub n_nodes: usize,
    pub tol: f64,
    /// Grid stretching parameter `α`.
    pub stretch: f64,
    /// Largest λ increment of the continuation.
    pub lambda_step: f64,
    pub max_iter: usize,
}

impl Default for LocalModelConfig {
    fn default() -> Self {
        LocalModelConfig {
            rho_max: DEFAULT_RHO_MAX,
            n_nodes: DEFAULT_NODES,
            tol: DEFAULT_TOL,
            stretch: DEFAULT_STRETCH,
            lambda_step: 0.05,
            max_iter: 60,
        }
    }
}

/// Radial profiles of a solved local model.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModelSolution {
    pub lambda: f64,
    pub t: f64,
    /// Radii `|ζ|` of the nodes.
    pub grid: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
    pub c_lambda: f64,
    /// Spread of the tail extrapolation of `c_λ`.
    pub c_error: f64,
    /// Maximum collocation residual at termination.
    pub residual_max: f64,
    /// Newton residual history of the final continuation stage.
    pub history: Vec<f64>,
    tol: f64,
    sigma: Vec<f64>,
    state: Vec<[f64; NV]>,
    accel: Vec<[f64; 3]>,
    tail: TailMatch,
}

/// The decoupled asymptote data `(λ, c_λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticModel {
    pub lambda: f64,
    pub c_lambda: f64,
}

impl AsymptoticModel {
    /// Validated constructor.
    pub fn new(lambda: f64, c_lambda: f64) -> Result<Self> {
        if !(c_lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::domain(format!(
                "asymptotic model needs c_λ > 0, got {c_lambda}"
            )));
        }
        Ok(AsymptoticModel { lambda, c_lambda })
    }

    /// `μ_λ(ρ) = 4c_λ⁻¹ρ^{−2λ}`.
    pub fn mu(&self, rho: f64) -> f64 {
        4.0 / self.c_lambda * rho.powf(-2.0 * self.lambda)
    }

    /// `c^{(2)}_λ = 32 c_λ⁻²`.
    pub fn c2(&self) -> f64 {
        32.0 / (self.c_lambda * self.c_lambda)
    }
}

fn cexpm1(z: C) -> C {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    C::new(z.re.exp_m1() * c - 2.0 * half * half, z.re.exp() * s)
}

fn clog1p(z: C) -> C {
    let m = 2.0 * z.re + z.re * z.re + z.im * z.im;
    C::new(0.5 * m.ln_1p(), z.im.atan2(1.0 + z.re))
}

fn log_cosh(om: C) -> C {
    let h = (om * 0.5).sinh();
    clog1p(h * h * 2.0)
}

/// Right-hand side of the first-order system at `σ`.
fn rhs(sigma: f64, y: &[C; NV], lambda: f64) -> [C; NV] {
    let [dp, dq, om, p, q, w, ka] = *y;
    let l = ka - 2.0 * lambda * sigma;
    let d = p - q - 6.0 * lambda;
    let tau = (3.0 * sigma).exp();
    let (c, s) = (om.cosh(), om.sinh());
    let th = s / c;
    let ell = log_cosh(om);
    let a = dp + 2.0 * dq;
    let pmq = l * 3.0 + dp - dq;
    let e1m1 = cexpm1(pmq);
    let epq = (l + dp + dq).exp();
    let eq = (dq - l).exp();
    let w2c = w * w / (c * c);
    let ea_s = a.exp() * s * (4.0 * tau);
    let om_ss = -d * w + ea_s;
    let dp_ss = e1m1 * w2c + epq * (s * s / c) * eq * e1m1 * (4.0 * tau) + th * d * w;
    let dq_ss = th * (ea_s - d * w) - e1m1 * w2c + (a - ell).sinh() * (8.0 * tau);
    let z = C::new(0.0, 0.0);
    [p, q, w, dp_ss, dq_ss, om_ss, z]
}

/// Left regularity conditions at `σ₀`.
fn left_bc(sigma: f64, y: &[C; NV], lambda: f64) -> [C; 3] {
    let [dp, dq, om, p, q, w, ka] = *y;
    let l = ka - 2.0 * lambda * sigma;
    let ps = p - 4.0 * lambda;
    let qs = q + 2.0 * lambda;
    let th = om.tanh();
    let qmp = dq - dp - l * 3.0;
    let g1 = (C::new(1.0, 0.0) + (qmp - om * 2.0).exp()).inv();
    let g2 = (C::new(1.0, 0.0) + (qmp + om * 2.0).exp()).inv();
    let one = C::new(1.0, 0.0);
    let b1 = one + (ps + w * 2.0) * g1 + qs * (one - g1) - th * w;
    let b2 = -one + (ps - w * 2.0) * g2 + qs * (one - g2) - th * w;
    let r = qmp.exp();
    let b3 = qs * r - ps - (r - one) * (one + th * w);
    [b1, b2, b3]
}

fn to_c(y: &[f64; NV]) -> [C; NV] {
    let mut out = [C::new(0.0, 0.0); NV];
    for (o, v) in out.iter_mut().zip(y) {
        *o = C::new(*v, 0.0);
    }
    out
}

fn interval_residual(s0: f64, s1: f64, y0: &[C; NV], y1: &[C; NV], lambda: f64) -> [C; NV] {
    let h = s1 - s0;
    let f0 = rhs(s0, y0, lambda);
    let f1 = rhs(s1, y1, lambda);
    let mut ym = [C::new(0.0, 0.0); NV];
    for k in 0..NV {
        ym[k] = (y0[k] + y1[k]) * 0.5 + (f0[k] - f1[k]) * (h / 8.0);
    }
    let fm = rhs(0.5 * (s0 + s1), &ym, lambda);
    let mut r = [C::new(0.0, 0.0); NV];
    for k in 0..NV {
        r[k] = (y1[k] - y0[k]) / h - (f0[k] + fm[k] * 4.0 + f1[k]) / 6.0;
    }
    r
}

struct Problem {
    sigma: Vec<f64>,
    lambda: f64,
}

impl Problem {
    fn n(&self) -> usize {
        self.sigma.len()
    }

    fn residual(&self, y: &[[f64; NV]]) -> Vec<f64> {
        let n = self.n();
        let mut r = Vec::with_capacity(NV * n);
        let bc = left_bc(self.sigma[0], &to_c(&y[0]), self.lambda);
        r.extend(bc.iter().map(|z| z.re));
        for i in 0..n - 1 {
            let ri = interval_residual(
                self.sigma[i],
                self.sigma[i + 1],
                &to_c(&y[i]),
                &to_c(&y[i + 1]),
                self.lambda,
            );
            r.extend(ri.iter().map(|z| z.re));
        }
        let last = &y[n - 1];
        r.extend_from_slice(&[last[0], last[3], last[1], last[2]]);
        r
    }

    fn jacobian(&self, y: &[[f64; NV]]) -> BandMatrix {
        let n = self.n();
        let mut jac = BandMatrix::zeros(NV * n, 9, 10);
        let y0 = to_c(&y[0]);
        for k in 0..NV {
            let mut yp = y0;
            yp[k] += C::new(0.0, CSTEP);
            let bc = left_bc(self.sigma[0], &yp, self.lambda);
            for (row, v) in bc.iter().enumerate() {
                jac.add(row, k, v.im / CSTEP).unwrap();
            }
        }
        for i in 0..n - 1 {
            let a = to_c(&y[i]);
            let b = to_c(&y[i + 1]);
            let row0 = 3 + NV * i;
            for k in 0..2 * NV {
                let (mut ap, mut bp) = (a, b);
                if k < NV {
                    ap[k] += C::new(0.0, CSTEP);
                } else {
                    bp[k - NV] += C::new(0.0, CSTEP);
                }
                let ri = interval_residual(self.sigma[i], self.sigma[i + 1], &ap, &bp, self.lambda);
                for (m, v) in ri.iter().enumerate() {
                    if v.im != 0.0 {
                        jac.add(row0 + m, NV * i + k, v.im / CSTEP).unwrap();
                    }
                }
            }
        }
        let row0 = 3 + NV * (n - 1);
        let col0 = NV * (n - 1);
        for (m, k) in [0usize, 3, 1, 2].iter().enumerate() {
            jac.add(row0 + m, col0 + k, 1.0).unwrap();
        }
        jac
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn newton(prob: &Problem, y: &mut Vec<[f64; NV]>, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let mut r = prob.residual(y);
    let mut norm = sup(&r);
    let mut history = vec![norm];
    let mut polish = 0;
    let mut iter = 0;
    while polish < 2 {
        if !norm.is_finite() {
            return Err(Error::solver("local model residual is not finite", history));
        }
        if norm <= tol {
            polish += 1;
        } else if iter >= max_iter {
            return Err(Error::solver(
                "local model Newton did not converge",
                history,
            ));
        }
        iter += 1;
        let lu = prob.jacobian(y).factor().map_err(|e| match e {
            Error::Solver { message, .. } => Error::solver(message, history.clone()),
            other => other,
        })?;
        let mut step = r.clone();
        lu.solve(&mut step);
        let mut damping = 1.0;
        loop {
            let trial: Vec<[f64; NV]> = y
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut out = *v;
                    for k in 0..NV {
                        out[k] -= damping * step[NV * i + k];
                    }
                    out
                })
                .collect();
            let rt = prob.residual(&trial);
            let nt = sup(&rt);
            let accept = nt.is_finite() && (nt < norm || norm <= tol || nt <= tol);
            if accept {
                *y = trial;
                r = rt;
                norm = nt;
                break;
            }
            damping *= 0.5;
            if damping < 1e-4 {
                return Err(Error::solver("local model line search failed", history));
            }
        }
        history.push(norm);
    }
    Ok(history)
}

fn stretched_grid(sigma_min: f64, sigma_max: f64, n: usize, alpha: f64) -> Vec<f64> {
    let xi = |s: f64| s + alpha * (1.5 * s).exp();
    let (a, b) = (xi(sigma_min), xi(sigma_max));
    let mut out = Vec::with_capacity(n);
    let mut s = sigma_min;
    for i in 0..n {
        let target = a + (b - a) * i as f64 / (n - 1) as f64;
        for _ in 0..100 {
            let f = xi(s) - target;
            let df = 1.0 + 1.5 * alpha * (1.5 * s).exp();
            let ds = f / df;
            s -= ds;
            if ds.abs() < 1e-15 * (1.0 + s.abs()) {
                break;
            }
        }
        out.push(s);
    }
    out[0] = sigma_min;
    out[n - 1] = sigma_max;
    out
}

/// Shared Painlevé solution used to seed the continuation and by the
/// closed-form λ = 0 model.
pub fn default_painleve() -> &'static PainleveSolution {
    static SOL: OnceLock<PainleveSolution> = OnceLock::new();
    SOL.get_or_init(|| {
        painleve::solve_painleve(
            painleve::DEFAULT_X_MIN,
            painleve::DEFAULT_X_MAX,
            painleve::DEFAULT_NODES,
            painleve::DEFAULT_TOL,
        )
        .expect("default Painlevé problem is solvable")
    })
}

/// Argument `(4/3)·t·ρ^{3/2}` of `ψ` in the closed-form λ = 0 model.
pub fn lambda0_argument(t: f64, rho: f64) -> f64 {
    (4.0 / 3.0) * t * rho.powf(1.5)
}

fn painleve_seed(sigma: &[f64]) -> Vec<[f64; NV]> {
    let sol = default_painleve();
    sigma
        .iter()
        .map(|&s| {
            let x = lambda0_argument(1.0, s.exp());
            let (psi, dpsi) = painleve::eval_psi(sol, x);
            let mut y = [0.0; NV];
            y[2] = 2.0 * psi;
            y[5] = 3.0 * x * dpsi;
            y
        })
        .collect()
}

/// Solves with default settings except for the listed parameters.
pub fn solve_local_model(
    t: f64,
    lambda: f64,
    rho_max: f64,
    n_nodes: usize,
    tol: f64,
) -> Result<LocalModelSolution> {
    let cfg = LocalModelConfig {
        rho_max,
        n_nodes,
        tol,
        ..LocalModelConfig::default()
    };
    solve_local_model_with(t, lambda, &cfg)
}

/// Solves the local model for `(t, λ)` with an explicit configuration.
pub fn solve_local_model_with(
    t: f64,
    lambda: f64,
    cfg: &LocalModelConfig,
) -> Result<LocalModelSolution> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    if !(lambda.abs() < LAMBDA_BOUND) {
        return Err(Error::domain(format!("need |λ| < 1/4, got {lambda}")));
    }
    if cfg.n_nodes < 16 || !(cfg.tol > 0.0) {
        return Err(Error::domain(
            "need at least 16 nodes and a positive tolerance",
        ));
    }
    let scale = t.powf(2.0 / 3.0);
    let r_max = scale * cfg.rho_max;
    if !(r_max > 10.0) {
        return Err(Error::domain(format!(
            "scaled outer radius t^(2/3)·rho_max = {r_max} must exceed 10"
        )));
    }
    let sigma = stretched_grid(SCALED_RHO_MIN.ln(), r_max.ln(), cfg.n_nodes, cfg.stretch);
    let mut y = painleve_seed(&sigma);
    let steps = (lambda.abs() / cfg.lambda_step).ceil().max(1.0) as usize;
    let mut history = Vec::new();
    for k in 0..=steps {
        let lam_k = if lambda == 0.0 {
            0.0
        } else {
            lambda * k as f64 / steps as f64
        };
        if k > 0 && lambda == 0.0 {
            break;
        }
        let prob = Problem {
            sigma: sigma.clone(),
            lambda: lam_k,
        };
        history = newton(&prob, &mut y, cfg.tol, cfg.max_iter)?;
    }
    let prob = Problem {
        sigma: sigma.clone(),
        lambda,
    };
    let residual_max = sup(&prob.residual(&y));
    build_solution(t, lambda, cfg.tol, sigma, y, residual_max, history)
}

fn build_solution(
    t: f64,
    lambda: f64,
    tol: f64,
    sigma: Vec<f64>,
    state: Vec<[f64; NV]>,
    residual_max: f64,
    history: Vec<f64>,
) -> Result<LocalModelSolution> {
    let scale = t.powf(2.0 / 3.0);
    let accel: Vec<[f64; 3]> = sigma
        .iter()
        .zip(&state)
        .map(|(&s, y)| {
            let f = rhs(s, &to_c(y), lambda);
            [f[3].re, f[4].re, f[5].re]
        })
        .collect();
    let mut f1 = Vec::with_capacity(sigma.len());
    let mut f2 = Vec::with_capacity(sigma.len());
    let mut f3 = Vec::with_capacity(sigma.len());
    for (&s, y) in sigma.iter().zip(&state) {
        let p = profile_from_state(s, y, lambda);
        if !(p.0 > 0.0 && p.1 > 0.0) || !p.2.is_finite() {
            return Err(Error::solver(
                format!("local model lost positivity at r = {}", s.exp()),
                history,
            ));
        }
        f1.push(p.0);
        f2.push(p.1);
        f3.push(p.2);
    }
    let grid = sigma.iter().map(|s| s.exp() / scale).collect();
    let mut sol = LocalModelSolution {
        lambda,
        t,
        grid,
        f1,
        f2,
        f3,
        c_lambda: f64::NAN,
        c_error: f64::NAN,
        residual_max,
        history,
        tol,
        tail: TailMatch::at_node(&sigma, &state, lambda),
        sigma,
        state,
        accel,
    };
    let (c, err) = tail_coefficient(&sol);
    sol.c_lambda = c;
    sol.c_error = err;
    Ok(sol)
}

/// `(f₁, f₂, f₃)` from a state vector.
fn profile_from_state(sigma: f64, y: &[f64; NV], lambda: f64) -> (f64, f64, f64) {
    let l = y[6] - 2.0 * lambda * sigma;
    let p = 2.0 * l + y[0];
    let q = -l + y[1];
    let om = y[2];
    let c = om.cosh();
    let f1 = ((p + 2.0 * om).exp() + q.exp()) / (2.0 * c);
    let f2 = ((p - 2.0 * om).exp() + q.exp()) / (2.0 * c);
    let f3 = q.exp() * (-(p - q).exp_m1()) / (2.0 * c);
    (f1, f2, f3)
}

/// Argument `x = (4/3)e^{3σ/2}` of the linearized tail where the grid
/// solution is matched to it.
pub const TAIL_MATCH_X: f64 = 20.0;

/// `e^x√(2x/π)K_ν(x)` and its `x`-derivative from the large-argument
/// expansion, accurate for `|ν| < 1/2` and `x ≥ 15`.
fn scaled_bessel_k(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let (mut term, mut sum, mut dsum) = (1.0, 1.0, 0.0);
    for k in 1..40 {
        let j = (2 * k - 1) as f64;
        term *= (mu - j * j) / (k as f64 * 8.0 * x);
        sum += term;
        dsum -= k as f64 * term / x;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    (sum, dsum)
}

/// Decaying solution of the linearization about the asymptote, matched to
/// the grid at the first node with `x ≥ TAIL_MATCH_X`.
///
/// There `ω ∝ e^{3λσ}K_{2λ}((4/3)e^{3σ/2})` and the quadratically driven
/// `δP, δQ` scale with `ω²`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TailMatch {
    sigma: f64,
    x: f64,
    scaled_k: f64,
    omega: f64,
    dp: f64,
    dq: f64,
    kappa: f64,
    lambda: f64,
}

impl TailMatch {
    fn at_node(sigma: &[f64], state: &[[f64; NV]], lambda: f64) -> Self {
        let n = sigma.len();
        let i = (0..n)
            .find(|&i| lambda0_argument(1.0, sigma[i].exp()) >= TAIL_MATCH_X)
            .unwrap_or(n - 1);
        let x = lambda0_argument(1.0, sigma[i].exp());
        TailMatch {
            sigma: sigma[i],
            x,
            scaled_k: scaled_bessel_k(2.0 * lambda, x).0,
            omega: state[i][2],
            dp: state[i][0],
            dq: state[i][1],
            kappa: state[i][6],
            lambda,
        }
    }

    fn state(&self, sigma: f64) -> [f64; NV] {
        let x = lambda0_argument(1.0, sigma.exp());
        let (sk, dsk) = scaled_bessel_k(2.0 * self.lambda, x);
        let log_ratio = 3.0 * self.lambda * (sigma - self.sigma) - (x - self.x)
            + 0.5 * (self.x / x).ln()
            + (sk / self.scaled_k).ln();
        let g = log_ratio.exp();
        let dlog = 3.0 * self.lambda + 1.5 * x * (-1.0 - 0.5 / x + dsk / sk);
        let g2 = g * g;
        [
            self.dp * g2,
            self.dq * g2,
            self.omega * g,
            2.0 * dlog * self.dp * g2,
            2.0 * dlog * self.dq * g2,
            dlog * self.omega * g,
            self.kappa,
        ]
    }
}

/// Interpolated state at scaled log-radius `σ` inside the grid.
#[derive(Debug, Clone, Copy)]
struct StateAt {
    sigma: f64,
    y: [f64; NV],
}

impl LocalModelSolution {
    /// Scaled inner and outer radii `t^{2/3}ρ`.
    pub fn scaled_range(&self) -> (f64, f64) {
        (self.sigma[0].exp(), self.sigma[self.sigma.len() - 1].exp())
    }

    /// Tolerance the solution was computed with.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `κ = log(4/c_λ)` as solved.
    pub fn kappa(&self) -> f64 {
        self.state[0][6]
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    /// True for an empty grid, which a solved instance never has.
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Asymptotic model with the extracted coefficient.
    pub fn asymptotic(&self) -> AsymptoticModel {
        AsymptoticModel {
            lambda: self.lambda,
            c_lambda: self.c_lambda,
        }
    }

    /// State at `σ ≥ σ₀`, from the matched tail beyond the matching node.
    fn state_at(&self, sigma: f64) -> Option<StateAt> {
        if sigma >= self.tail.sigma {
            return Some(StateAt {
                sigma,
                y: self.tail.state(sigma),
            });
        }
        self.grid_state_at(sigma)
    }

    fn grid_state_at(&self, sigma: f64) -> Option<StateAt> {
        let n = self.sigma.len();
        if sigma < self.sigma[0] || sigma > self.sigma[n - 1] {
            return None;
        }
        let i = match self.sigma.partition_point(|&v| v <= sigma) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let (s0, s1) = (self.sigma[i], self.sigma[i + 1]);
        let h = s1 - s0;
        let u = (sigma - s0) / h;
        let mut y = self.state[i];
        if u == 0.0 {
            return Some(StateAt { sigma, y });
        }
        // Quintic Hermite basis on [0, 1].
        let u2 = u * u;
        let u3 = u2 * u;
        let u4 = u3 * u;
        let u5 = u4 * u;
        let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
        let h1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
        let h2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5;
        let g0 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
        let g1 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
        let g2 = 0.5 * u3 - u4 + 0.5 * u5;
        // First derivatives of the basis (per unit u).
        let dh0 = -30.0 * u2 + 60.0 * u3 - 30.0 * u4;
        let dh1 = 1.0 - 18.0 * u2 + 32.0 * u3 - 15.0 * u4;
        let dh2 = u - 4.5 * u2 + 6.0 * u3 - 2.5 * u4;
        let dg0 = 30.0 * u2 - 60.0 * u3 + 30.0 * u4;
        let dg1 = -12.0 * u2 + 28.0 * u3 - 15.0 * u4;
        let dg2 = 1.5 * u2 - 4.0 * u3 + 2.5 * u4;
        let (a, b) = (&self.state[i], &self.state[i + 1]);
        let (aa, ba) = (&self.accel[i], &self.accel[i + 1]);
        for k in 0..3 {
            y[k] = h0 * a[k]
                + h * h1 * a[k + 3]
                + h * h * h2 * aa[k]
                + g0 * b[k]
                + h * g1 * b[k + 3]
                + h * h * g2 * ba[k];
            y[k + 3] = (dh0 * a[k] + dg0 * b[k]) / h
                + dh1 * a[k + 3]
                + dg1 * b[k + 3]
                + h * (dh2 * aa[k] + dg2 * ba[k]);
        }
        Some(StateAt { sigma, y })
    }

    /// `(f₁, f₂, f₃)` at scaled radius `r = t^{2/3}ρ`.
    ///
    /// Below the grid the regular behaviour `f₁ ∝ r⁻¹`, `f₂, f₃ ∝ r` is used
    /// and in the far field the matched linearized tail.
    pub fn profiles_at_scaled(&self, r: f64) -> (f64, f64, f64) {
        let sigma = r.ln();
        match self.state_at(sigma) {
            Some(st) => profile_from_state(st.sigma, &st.y, self.lambda),
            None => {
                let r0 = self.sigma[0].exp();
                let (a, b, c) = profile_from_state(self.sigma[0], &self.state[0], self.lambda);
                (a * r0 / r, b * r / r0, c * r / r0)
            }
        }
    }

    /// `N = rM_λ(r)` entries `(N₁₁, N₁₂, N₂₂)` at scaled radius `r`.
    pub fn n_matrix_at_scaled(&self, r: f64) -> (f64, f64, f64) {
        let (f1, f2, f3) = self.profiles_at_scaled(r);
        let sum = 0.5 * (f1 + f2);
        (sum - f3, 0.5 * (f1 - f2), sum + f3)
    }

    /// Entrywise `M_λ(r) − M_{∞,λ}(r)` computed without cancellation, and
    /// `r²m_λ(r) − μ_λ(r)`.
    pub fn deviation_at_scaled(&self, r: f64) -> (CMat2, f64) {
        let sigma = r.ln();
        let kappa = self.kappa();
        let l = kappa - 2.0 * self.lambda * sigma;
        let y = match self.state_at(sigma) {
            Some(st) => st.y,
            None => {
                let n = self.n_matrix_at_scaled(r);
                let mu = l.exp();
                let m = CMat2::real((n.0 - mu * mu) / r, n.1 / r, n.1 / r, (n.2 - 1.0 / mu) / r);
                return (m, n.0 * n.2 - n.1 * n.1 - mu);
            }
        };
        let (dp, dq, om) = (y[0], y[1], y[2]);
        let c = om.cosh();
        let s = om.sinh();
        let ell = (2.0 * (0.5 * om).sinh().powi(2)).ln_1p();
        let d11 = (2.0 * l).exp() * (dp + ell).exp_m1();
        let d12 = (2.0 * l + dp).exp() * s;
        let d22 = (-l).exp() * ((3.0 * l + dp).exp() * s * s / c + (dq - ell).exp_m1());
        let m = CMat2::real(d11 / r, d12 / r, d12 / r, d22 / r);
        let det_dev = l.exp() * (dp + dq).exp_m1();
        (m, det_dev)
    }
}

/// Tail value of `c(r) = 4N₂₂(r)·r^{−2λ}` on the grid solution with Aitken
/// extrapolation over the last decade, returning `(c_λ, spread)`.
fn tail_coefficient(sol: &LocalModelSolution) -> (f64, f64) {
    let (_, rmax) = sol.scaled_range();
    let c_at = |r: f64| {
        let sigma = r.ln().min(sol.sigma[sol.sigma.len() - 1]);
        let st = sol
            .grid_state_at(sigma)
            .expect("tail radius lies on the grid");
        let (f1, f2, f3) = profile_from_state(st.sigma, &st.y, sol.lambda);
        4.0 * (0.5 * (f1 + f2) + f3) * r.powf(-2.0 * sol.lambda)
    };
    let a0 = c_at(rmax / 10.0);
    let a1 = c_at(rmax / 10f64.sqrt());
    let a2 = c_at(rmax);
    let c = aitken(a0, a1, a2);
    (c, (a2 - c).abs())
}

/// Extracted `c_λ`, failing when the tail spread exceeds `10·tol`.
pub fn extract_c_lambda(sol: &LocalModelSolution) -> Result<f64> {
    let limit = 10.0 * sol.tol;
    if !(sol.c_error <= limit) {
        return Err(Error::UnreliableTail {
            spread: sol.c_error,
            limit,
        });
    }
    Ok(sol.c_lambda)
}

/// `c(r) = 4·M₂₂(r)·r^{1−2λ}` at a single scaled radius.
pub fn c_estimate_at(sol: &LocalModelSolution, r: f64) -> f64 {
    let (_, _, n22) = sol.n_matrix_at_scaled(r);
    4.0 * n22 * r.powf(-2.0 * sol.lambda)
}

/// `M_λ(r)` at scaled radius `r`.
pub fn eval_m_lambda(sol: &LocalModelSolution, r: f64) -> HermMatrix2 {
    let (f1, f2, f3) = sol.profiles_at_scaled(r);
    m_from_profiles(r, f1, f2, f3)
}

/// `M = (1/2r)[[f₁+f₂−2f₃, f₁−f₂], [f₁−f₂, f₁+f₂+2f₃]]`.
pub fn m_from_profiles(r: f64, f1: f64, f2: f64, f3: f64) -> HermMatrix2 {
    let k = 0.5 / r;
    HermMatrix2::new(
        k * (f1 + f2 - 2.0 * f3),
        Complex64::new(k * (f1 - f2), 0.0),
        k * (f1 + f2 + 2.0 * f3),
    )
}

/// `H_{t,λ}(ζ)` in the regular frame.
pub fn eval_h_t_lambda(sol: &LocalModelSolution, zeta: Complex64) -> HermMatrix2 {
    let rho = zeta.norm();
    let scale = sol.t.powf(2.0 / 3.0);
    if rho == 0.0 {
        let r0 = sol.sigma[0].exp();
        let (a, _, _) = profile_from_state(sol.sigma[0], &sol.state[0], sol.lambda);
        let (_, b, _) = profile_from_state(sol.sigma[0], &sol.state[0], sol.lambda);
        return HermMatrix2::diag(a * r0 / scale, b * scale / r0);
    }
    let (f1, f2, f3) = sol.profiles_at_scaled(scale * rho);
    h_from_profiles(zeta, f1, f2, f3)
}

/// `[[ρf₁, f₃e^{−iψ}], [f₃e^{iψ}, ρ⁻¹f₂]]` at `ζ = ρe^{iψ}`.
pub fn h_from_profiles(zeta: Complex64, f1: f64, f2: f64, f3: f64) -> HermMatrix2 {
    let rho = zeta.norm();
    let phase = zeta.conj() / rho;
    HermMatrix2::new(rho * f1, phase * f3, f2 / rho)
}

/// `M_{∞,λ}(ρ) = diag(ρ⁻¹μ², ρ⁻¹μ⁻¹)`.
pub fn m_infty_lambda(model: &AsymptoticModel, rho: f64) -> HermMatrix2 {
    let mu = model.mu(rho);
    HermMatrix2::diag(mu * mu / rho, 1.0 / (mu * rho))
}

/// Closed-form `H_{t,0}(ρ) = diag(ρe^{2ψ}, ρ⁻¹e^{−2ψ})` with
/// `ψ = ψ((4/3)tρ^{3/2})`.
pub fn lambda0_oracle(painleve: &PainleveSolution, t: f64, rho: f64) -> HermMatrix2 {
    let (psi, _) = painleve::eval_psi(painleve, lambda0_argument(t, rho));
    HermMatrix2::diag(rho * (2.0 * psi).exp(), (-2.0 * psi).exp() / rho)
}

/// `M₀(r)` from the closed form, through the frame change
/// `M = (S*)⁻¹ H_{1,0} S⁻¹`.
pub fn lambda0_oracle_m(painleve: &PainleveSolution, r: f64) -> HermMatrix2 {
    let h = lambda0_oracle(painleve, 1.0, r);
    m_from_h(&h, Complex64::new(r, 0.0))
}

/// `S(ζ) = (1/√2)[[ζ, −1], [ζ, 1]]`.
pub fn frame_s(zeta: Complex64) -> CMat2 {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    CMat2::new(zeta * k, C::new(-k, 0.0), zeta * k, C::new(k, 0.0))
}

/// `(S*)⁻¹ H S⁻¹`.
pub fn m_from_h(h: &HermMatrix2, zeta: Complex64) -> HermMatrix2 {
    let si = frame_s(zeta).inv();
    h.congruence(&si)
}

/// Higgs data of the regular R-type frame, `β₀ = (ζ, 1)/√2` and
/// `γ₀ = (1, ζ)ᵀ/√2`.
pub fn r_type_regular_forms() -> HiggsForms {
    let k = std::f64::consts::FRAC_1_SQRT_2;
    HiggsForms::zero()
        .with_beta(0, 1, k)
        .with_beta(1, 0, k)
        .with_gamma(0, 0, k)
        .with_gamma(1, 1, k)
}

/// Default log-radial and angular finite-difference steps of
/// [`pde_residual`].
pub const PDE_STEP: f64 = 2e-3;

/// Maximum entry modulus of the finite-difference Hitchin operator applied
/// to [`eval_h_t_lambda`] at the sample points.
pub fn pde_residual(sol: &LocalModelSolution, samples: &[Complex64]) -> f64 {
    pde_residual_with_step(sol, samples, PDE_STEP)
}

/// [`pde_residual`] with an explicit finite-difference step.
pub fn pde_residual_with_step(sol: &LocalModelSolution, samples: &[Complex64], step: f64) -> f64 {
    let field = |r: f64, th: f64| eval_h_t_lambda(sol, Complex64::from_polar(r, th)).to_cmat();
    field_residual(&field, sol.t, samples, step)
}

/// Maximum operator residual of a regular-frame R-type field.
pub fn field_residual<F>(field: &F, t: f64, samples: &[Complex64], step: f64) -> f64
where
    F: Fn(f64, f64) -> CMat2,
{
    let forms = r_type_regular_forms();
    samples
        .iter()
        .map(|z| hitchin_operator_fd(field, &forms, t, z.norm(), z.arg(), step, step).max_abs())
        .fold(0.0, f64::max)
}

/// One row of [`c_lambda_table`].
#[derive(Debug, Clone, PartialEq)]
pub struct CLambdaRow {
    pub lambda: f64,
    pub outcome: std::result::Result<(f64, f64), Error>,
}

/// `c_λ` with error estimates over a λ grid; each row is solved
/// independently and failures are kept per row.
pub fn c_lambda_table(
    lambda_grid: &[f64],
    t: f64,
    cfg: &LocalModelConfig,
    margin: f64,
) -> Result<Vec<CLambdaRow>> {
    if lambda_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::domain("λ grid must be strictly increasing"));
    }
    if let Some(bad) = lambda_grid
        .iter()
        .find(|l| !(l.abs() <= LAMBDA_BOUND - margin))
    {
        return Err(Error::domain(format!(
            "λ = {bad} outside [−1/4 + {margin}, 1/4 − {margin}]"
        )));
    }
    use rayon::prelude::*;
    Ok(lambda_grid
        .par_iter()
        .map(|&lambda| CLambdaRow {
            lambda,
            outcome: solve_local_model_with(t, lambda, cfg)
                .and_then(|s| extract_c_lambda(&s).map(|c| (c, s.c_error))),
        })
        .collect())
}

/// The stability-set predicate `Σc = 3`, `c_j > 0`, `c_i + c_j > 1`.
pub fn in_stability_set(c: [f64; 3]) -> bool {
    let sum_ok = (c[0] + c[1] + c[2] - 3.0).abs() <= 1e-12;
    let pos = c.iter().all(|&v| v > 0.0);
    let pairs = c[0] + c[1] > 1.0 && c[0] + c[2] > 1.0 && c[1] + c[2] > 1.0;
    sum_ok && pos && pairs
}

/// Weights `(1+2λ, 1+2λ, 1−4λ)` attached to λ.
pub fn stability_weights(lambda: f64) -> [f64; 3] {
    [1.0 + 2.0 * lambda, 1.0 + 2.0 * lambda, 1.0 - 4.0 * lambda]
}

/// Frame matrix `T(z)` whose columns are `v₀, v₁, v₂`.
pub fn frame_t(z: Complex64) -> CMat3 {
    let r2 = std::f64::consts::SQRT_2;
    let one = C::new(1.0, 0.0);
    let z2 = z * z;
    CMat3([
        [z * r2, -z * r2, C::new(0.0, 0.0)],
        [one, one, one],
        [z2, z2, -z2],
    ])
}

/// Block form `diag(det K⁻¹, K)` with `K(z) = H_{1,λ}(z²)` on a `t = 1`
/// solution.
pub fn block_form_tilde_k(sol: &LocalModelSolution, z: Complex64) -> HermMatrix3 {
    HermMatrix3::block_form(&eval_h_t_lambda(sol, z * z))
}

/// Gram matrix `h̃(v_i, v_j)` of the frame `v₀, v₁, v₂`.
pub fn tilde_h_gram(sol: &LocalModelSolution, z: Complex64) -> CMat3 {
    let t = frame_t(z);
    let k = block_form_tilde_k(sol, z);
    t.adjoint().mul(&k.0).mul(&t)
}
