//! Admissible parabolic weights: stability of zero partitions, the face
//! polytope with its vertices and barycenter, and the `t`-compatible
//! weights obtained as fixed points.
//!
//! Weights are ordered as the `D_β` block, then `D_γ`, then `D_r`. The
//! `D_β` entries are `+1/4` and the `D_γ` entries `−1/4`.

use crate::error::{Error, Result};
use crate::fit::MonotoneCubic;
use num_rational::Rational64;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Genus and line-bundle degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceData {
    pub genus: i64,
    pub deg_l: i64,
}

impl SurfaceData {
    /// Validated constructor.
    pub fn new(genus: i64, deg_l: i64) -> Result<Self> {
        if genus < 2 {
            return Err(Error::domain(format!(
                "genus must be at least 2, got {genus}"
            )));
        }
        Ok(SurfaceData { genus, deg_l })
    }

    /// Number of zeros `N = 4g − 4`.
    pub fn n_zeros(&self) -> i64 {
        4 * self.genus - 4
    }
}

/// Sizes `(d_β, d_γ, d_r)` of the zero partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZeroPartition {
    pub d_beta: i64,
    pub d_gamma: i64,
    pub d_r: i64,
}

impl ZeroPartition {
    /// Partition with `d_r = 4g − 4 − d_β − d_γ`.
    pub fn from_counts(s: &SurfaceData, d_beta: i64, d_gamma: i64) -> Result<Self> {
        let p = ZeroPartition {
            d_beta,
            d_gamma,
            d_r: s.n_zeros() - d_beta - d_gamma,
        };
        p.check(s)?;
        Ok(p)
    }

    /// Checks nonnegativity and `d_β + d_γ + d_r = 4g − 4`.
    pub fn check(&self, s: &SurfaceData) -> Result<()> {
        if self.d_beta < 0 || self.d_gamma < 0 || self.d_r < 0 {
            return Err(Error::domain(format!(
                "negative partition entry in {self:?}"
            )));
        }
        if self.d_beta + self.d_gamma + self.d_r != s.n_zeros() {
            return Err(Error::domain(format!(
                "partition {self:?} does not sum to 4g − 4 = {}",
                s.n_zeros()
            )));
        }
        Ok(())
    }

    /// Total number of zeros.
    pub fn len(&self) -> usize {
        (self.d_beta + self.d_gamma + self.d_r) as usize
    }

    /// True when the partition has no zeros.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Stability class of a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    StrictlyPolystable,
    Unstable,
}

/// Exact weight tuple.
pub type WeightVector = Vec<Rational64>;

/// Classifies a partition by `d_β < 2(g−1+d)` and `d_γ < 2(g−1−d)`, with
/// equality in both for strict polystability. Degrees outside the
/// Milnor–Wood range `|d| < g − 1` are unstable.
pub fn check_stability(s: &SurfaceData, p: &ZeroPartition) -> Result<Stability> {
    p.check(s)?;
    if s.deg_l.abs() >= s.genus - 1 {
        return Ok(Stability::Unstable);
    }
    let a = 2 * (s.genus - 1 + s.deg_l);
    let b = 2 * (s.genus - 1 - s.deg_l);
    Ok(if p.d_beta < a && p.d_gamma < b {
        Stability::Stable
    } else if p.d_beta == a && p.d_gamma == b {
        Stability::StrictlyPolystable
    } else {
        Stability::Unstable
    })
}

fn quarter() -> Rational64 {
    Rational64::new(1, 4)
}

/// Common `D_r` value `λ_c = −(d + (d_β − d_γ)/4)/d_r`.
pub fn lambda_c(s: &SurfaceData, p: &ZeroPartition) -> Result<Rational64> {
    if p.d_r == 0 {
        return Err(Error::domain("λ_c needs d_r > 0"));
    }
    let num = Rational64::from_integer(s.deg_l) + Rational64::new(p.d_beta - p.d_gamma, 4);
    Ok(-num / Rational64::from_integer(p.d_r))
}

/// Barycenter of the face of a stable partition.
pub fn barycenter(s: &SurfaceData, p: &ZeroPartition) -> Result<WeightVector> {
    match check_stability(s, p)? {
        Stability::Stable => {}
        other => {
            return Err(Error::domain(format!(
                "barycenter needs a stable partition, got {other:?}"
            )));
        }
    }
    let lc = lambda_c(s, p)?;
    let mut w = Vec::with_capacity(p.len());
    w.extend(std::iter::repeat_n(quarter(), p.d_beta as usize));
    w.extend(std::iter::repeat_n(-quarter(), p.d_gamma as usize));
    w.extend(std::iter::repeat_n(lc, p.d_r as usize));
    Ok(w)
}

/// Numbers of `D_r` entries equal to `+1/4` and `−1/4` at a vertex.
pub fn vertex_counts(s: &SurfaceData, p: &ZeroPartition) -> (i64, i64) {
    (
        2 * (s.genus - 1 - s.deg_l) - p.d_beta,
        2 * (s.genus - 1 + s.deg_l) - p.d_gamma,
    )
}

/// Binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// All vertices of the closed face of a stable partition.
pub fn polytope_vertices(s: &SurfaceData, p: &ZeroPartition) -> Result<Vec<WeightVector>> {
    if check_stability(s, p)? != Stability::Stable {
        return Err(Error::domain(
            "vertices are enumerated for stable partitions",
        ));
    }
    let (plus, minus) = vertex_counts(s, p);
    if plus < 0 || minus < 0 || plus + minus != p.d_r {
        return Err(Error::Inconsistent(format!(
            "vertex counts (+1/4: {plus}, −1/4: {minus}) are incompatible with d_r = {}",
            p.d_r
        )));
    }
    let n = p.d_r as usize;
    let head: Vec<Rational64> = std::iter::repeat_n(quarter(), p.d_beta as usize)
        .chain(std::iter::repeat_n(-quarter(), p.d_gamma as usize))
        .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        if mask.count_ones() as i64 != plus {
            continue;
        }
        let mut v = head.clone();
        v.extend((0..n).map(|k| {
            if mask >> k & 1 == 1 {
                quarter()
            } else {
                -quarter()
            }
        }));
        out.push(v);
    }
    out.reverse();
    Ok(out)
}

/// Exact mean of a list of weight vectors.
pub fn mean(vs: &[WeightVector]) -> Result<WeightVector> {
    let first = vs
        .first()
        .ok_or_else(|| Error::domain("mean of an empty list"))?;
    let n = Rational64::from_integer(vs.len() as i64);
    Ok((0..first.len())
        .map(|k| vs.iter().map(|v| v[k]).sum::<Rational64>() / n)
        .collect())
}

/// Admissibility of an exact weight tuple.
pub fn is_admissible(w: &[Rational64], s: &SurfaceData, p: &ZeroPartition) -> bool {
    if p.check(s).is_err() || w.len() != p.len() {
        return false;
    }
    let (nb, ng) = (p.d_beta as usize, p.d_gamma as usize);
    let blocks = w[..nb].iter().all(|v| *v == quarter())
        && w[nb..nb + ng].iter().all(|v| *v == -quarter())
        && w[nb + ng..]
            .iter()
            .all(|v| *v > -quarter() && *v < quarter());
    blocks && w.iter().sum::<Rational64>() == Rational64::from_integer(-s.deg_l)
}

/// Admissibility of a floating-point weight tuple with tolerance `tol` on
/// the block values and the sum.
pub fn is_admissible_f64(w: &[f64], s: &SurfaceData, p: &ZeroPartition, tol: f64) -> bool {
    if p.check(s).is_err() || w.len() != p.len() {
        return false;
    }
    let (nb, ng) = (p.d_beta as usize, p.d_gamma as usize);
    let blocks = w[..nb].iter().all(|v| (v - 0.25).abs() <= tol)
        && w[nb..nb + ng].iter().all(|v| (v + 0.25).abs() <= tol)
        && w[nb + ng..].iter().all(|v| v.abs() < 0.25);
    blocks && (w.iter().sum::<f64>() + s.deg_l as f64).abs() <= tol * w.len().max(1) as f64
}

/// Converts an exact vector to floating point.
pub fn to_f64(w: &[Rational64]) -> Vec<f64> {
    w.iter()
        .map(|r| *r.numer() as f64 / *r.denom() as f64)
        .collect()
}

/// `p/q` string form of a rational.
pub fn rational_string(r: &Rational64) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Affine data `ψ_k(λ) = constant[k] + Σ_l linear[k][l]·λ_l` for the `D_r`
/// zeros, in block order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiAffine {
    pub constant: Vec<f64>,
    #[serde(default)]
    pub linear: Vec<Vec<f64>>,
}

impl PsiAffine {
    /// `ψ ≡ 0` on `d_r` zeros.
    pub fn zero(d_r: usize) -> Self {
        PsiAffine {
            constant: vec![0.0; d_r],
            linear: Vec::new(),
        }
    }

    /// Parses the JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Checks shapes against a partition.
    pub fn check(&self, p: &ZeroPartition) -> Result<()> {
        if self.constant.len() != p.d_r as usize {
            return Err(Error::Config(format!(
                "ψ data has {} constants but d_r = {}",
                self.constant.len(),
                p.d_r
            )));
        }
        if !self.linear.is_empty()
            && (self.linear.len() != p.d_r as usize
                || self.linear.iter().any(|r| r.len() != p.len()))
        {
            return Err(Error::Config("ψ linear part must be d_r × (4g − 4)".into()));
        }
        if self
            .constant
            .iter()
            .chain(self.linear.iter().flatten())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Config("ψ data must be finite".into()));
        }
        Ok(())
    }

    /// `ψ_k(λ)`.
    pub fn eval(&self, k: usize, lambda: &[f64]) -> f64 {
        let lin = self
            .linear
            .get(k)
            .map_or(0.0, |row| row.iter().zip(lambda).map(|(a, b)| a * b).sum());
        self.constant[k] + lin
    }
}

/// Bundled `ψ ≡ 0` example for `g = 2`, `d = 0`, partition `(0, 0, 4)`.
pub const PSI_ZERO_JSON: &str = include_str!("../data/psi_zero.json");
/// Bundled bounded example for `g = 2`, `d = 0`, partition `(1, 0, 3)`.
pub const PSI_BOUNDED_JSON: &str = include_str!("../data/psi_bounded.json");

/// Monotone interpolant of `λ ↦ c_λ` without extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct CInterp(MonotoneCubic);

impl CInterp {
    /// Builds the interpolant from `(λ, c_λ)` rows.
    pub fn from_rows(rows: &[(f64, f64)]) -> Result<Self> {
        if rows.iter().any(|(_, c)| !(*c > 0.0)) {
            return Err(Error::domain("c_λ values must be positive"));
        }
        let (x, y) = rows.iter().cloned().unzip();
        Ok(CInterp(MonotoneCubic::new(x, y)?))
    }

    /// `c_λ`; outside the table range this is an error.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        self.0.eval(lambda)
    }

    /// Tabulated λ range.
    pub fn range(&self) -> (f64, f64) {
        self.0.range()
    }
}

/// Inputs of the fixed-point problem for one partition.
#[derive(Debug, Clone)]
pub struct TCompatibleProblem<'a> {
    pub surface: SurfaceData,
    pub partition: ZeroPartition,
    pub psi: &'a PsiAffine,
    pub c_interp: &'a CInterp,
}

/// Fixed-point iteration controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            tol: 1e-10,
            max_iter: 500,
            damping: 0.5,
        }
    }
}

/// A converged `t`-compatible weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TCompatible {
    pub t: f64,
    pub lambda: Vec<f64>,
    /// Offsets `μ_k` of the `D_r` entries from `λ_c`.
    pub mu: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Projection onto `Σμ = 0`, exact on constant vectors.
pub fn project_sum_zero(v: &[f64]) -> Vec<f64> {
    let base = v[0];
    let shift = v.iter().map(|x| x - base).sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - base) - shift).collect()
}

impl<'a> TCompatibleProblem<'a> {
    /// Validates the inputs and returns `λ_c` in floating point.
    fn prepare(&self) -> Result<f64> {
        if check_stability(&self.surface, &self.partition)? != Stability::Stable {
            return Err(Error::domain(
                "t-compatible weights need a stable partition",
            ));
        }
        self.psi.check(&self.partition)?;
        let lc = lambda_c(&self.surface, &self.partition)?;
        Ok(to_f64(&[lc])[0])
    }

    fn full_lambda(&self, lc: f64, mu: &[f64]) -> Vec<f64> {
        let p = &self.partition;
        let mut w = Vec::with_capacity(p.len());
        w.extend(std::iter::repeat_n(0.25, p.d_beta as usize));
        w.extend(std::iter::repeat_n(-0.25, p.d_gamma as usize));
        w.extend(mu.iter().map(|m| lc + m));
        w
    }

    /// `G_t(μ)`.
    pub fn g_map(&self, t: f64, mu: &[f64]) -> Result<Vec<f64>> {
        let lc = self.prepare()?;
        self.g_map_with(t, lc, mu)
    }

    fn g_map_with(&self, t: f64, lc: f64, mu: &[f64]) -> Result<Vec<f64>> {
        let lambda = self.full_lambda(lc, mu);
        let k = 1.5 / t.ln();
        mu.iter()
            .enumerate()
            .map(|(i, m)| {
                let c = self.c_interp.eval(lc + m)?;
                Ok(k * (self.psi.eval(i, &lambda) - (0.5 * c.ln() - 2f64.ln())))
            })
            .collect()
    }

    /// `F_t(μ) = π(G_t(μ))`.
    pub fn f_map(&self, t: f64, mu: &[f64]) -> Result<Vec<f64>> {
        Ok(project_sum_zero(&self.g_map(t, mu)?))
    }

    fn inside(&self, lc: f64, mu: &[f64]) -> bool {
        let (lo, hi) = self.c_interp.range();
        mu.iter().all(|m| {
            let l = lc + m;
            l > -0.25 && l < 0.25 && l >= lo && l <= hi
        })
    }

    /// Solves `F_t(μ) = μ` by damped fixed-point iteration with adaptive
    /// damping and step halving at the boundary.
    pub fn solve(&self, t: f64, cfg: &FixedPointConfig) -> Result<TCompatible> {
        if !(t > 1.0 && t.is_finite()) {
            return Err(Error::domain(format!("t must exceed 1, got {t}")));
        }
        let lc = self.prepare()?;
        if !self.inside(lc, &[0.0]) {
            return Err(Error::Config(format!(
                "λ_c = {lc} lies outside the c_λ table"
            )));
        }
        let n = self.partition.d_r as usize;
        let mut mu = vec![0.0; n];
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let defect = |mu: &[f64]| -> Result<(Vec<f64>, f64)> {
            let f = project_sum_zero(&self.g_map_with(t, lc, mu)?);
            let d: Vec<f64> = f.iter().zip(mu).map(|(a, b)| a - b).collect();
            let r = sup(&d);
            Ok((d, r))
        };
        let (mut d, mut res) = defect(&mu)?;
        let mut alpha = cfg.damping;
        let mut history = vec![res];
        let mut iterations = 0;
        while res > cfg.tol {
            if iterations >= cfg.max_iter {
                return Err(Error::solver(
                    "t-compatible fixed point did not converge",
                    history,
                ));
            }
            iterations += 1;
            loop {
                let trial: Vec<f64> = mu.iter().zip(&d).map(|(m, s)| m + alpha * s).collect();
                if self.inside(lc, &trial) {
                    let (dt, rt) = defect(&trial)?;
                    if rt < res {
                        mu = trial;
                        d = dt;
                        res = rt;
                        alpha = (alpha * 1.5).min(1.0);
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-12 {
                    return Err(Error::solver("t-compatible step halving failed", history));
                }
            }
            history.push(res);
        }
        Ok(TCompatible {
            t,
            lambda: self.full_lambda(lc, &mu),
            mu,
            residual: res,
            iterations,
        })
    }

    /// Largest radius `r` on a geometric ladder for which `F_t` maps every
    /// sampled point of `H ∩ B(0, r)` into `H ∩ B(0, r)`.
    pub fn verified_self_map_radius(&self, t: f64, samples: usize, seed: u64) -> Result<f64> {
        let lc = self.prepare()?;
        let n = self.partition.d_r as usize;
        let (lo, hi) = self.c_interp.range();
        let limit = (0.25 - lc.abs()).min(hi - lc).min(lc - lo);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = 0.0;
        let mut r = limit * 0.999;
        for _ in 0..40 {
            let mut ok = true;
            for _ in 0..samples {
                let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let dir = project_sum_zero(&raw);
                let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    continue;
                }
                let scale = r * rng.gen::<f64>().powf(1.0 / n.max(1) as f64) / norm;
                let mu: Vec<f64> = dir.iter().map(|x| x * scale).collect();
                if !self.inside(lc, &mu) {
                    ok = false;
                    break;
                }
                let f = project_sum_zero(&self.g_map_with(t, lc, &mu)?);
                if f.iter().map(|x| x * x).sum::<f64>().sqrt() > r {
                    ok = false;
                    break;
                }
            }
            if ok {
                best = r;
                break;
            }
            r *= 0.7;
        }
        Ok(best)
    }
}

/// One drift row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub t: f64,
    pub drift: f64,
    pub drift_times_log_t: f64,
    pub lambda: Vec<f64>,
}

/// `‖λ(t) − λ_∞‖∞` and its product with `log t` for each `t`, solved in
/// parallel; failures are reported per row.
pub fn weight_drift_table(
    problem: &TCompatibleProblem<'_>,
    t_list: &[f64],
    cfg: &FixedPointConfig,
) -> Vec<Result<DriftRow>> {
    use rayon::prelude::*;
    t_list
        .par_iter()
        .map(|&t| {
            let sol = problem.solve(t, cfg)?;
            let drift = sol.mu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok(DriftRow {
                t,
                drift,
                drift_times_log_t: drift * t.ln(),
                lambda: sol.lambda,
            })
        })
        .collect()
}
