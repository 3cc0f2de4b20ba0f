//! Discrete Hitchin solve on a polar model disk.
//!
//! Metrics live on a grid with log-spaced radii and uniform angles. A
//! Hermitian endomorphism `u` is stored by its coefficients in an
//! `h`-unitary frame, and an update maps `H` to `H^{1/2}e^{u}H^{1/2}`.
//! The nonlinear map is `u ↦ −4P*ℋ(PP*)P^{-*}` with `P = H^{1/2}e^{u/2}`,
//! whose derivative at `u = 0` is the linear operator `L_t`.

use crate::error::{Error, Result};
use crate::gluing::{exact_local_metric, h_app_at, local_higgs_forms, GluedMetricSpec, ZeroType};
use crate::hermlin::{psd_sqrt_unchecked, CMat2, HermMatrix2};
use crate::krylov::gmres;
use crate::localmodel::{default_painleve, frame_s, lambda0_oracle_m};
use crate::operator::{curvature_term, higgs_terms, stencil_combine, HiggsForms};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest relative linear residual accepted from a stagnated GMRES solve.
pub const STALL_ACCEPT: f64 = 1e-6;

/// Inner radius of the model disk relative to its outer radius.
pub const RHO_MIN_FACTOR: f64 = 1e-3;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// Polar grid with `n_r` log-spaced radii in `[ρ_min, ρ_max]` and `n_a`
/// uniform angles. Rows `0` and `n_r − 1` carry Dirichlet data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_r: usize,
    pub n_a: usize,
}

impl DiskGrid {
    /// Validated constructor.
    pub fn new(rho_min: f64, rho_max: f64, n_r: usize, n_a: usize) -> Result<Self> {
        if !(rho_min > 0.0 && rho_max > rho_min && rho_max.is_finite()) {
            return Err(Error::domain(format!(
                "need 0 < ρ_min < ρ_max, got {rho_min}, {rho_max}"
            )));
        }
        if n_r < 3 || n_a < 4 {
            return Err(Error::domain(format!(
                "grid needs n_r ≥ 3 and n_a ≥ 4, got {n_r}×{n_a}"
            )));
        }
        Ok(DiskGrid {
            rho_min,
            rho_max,
            n_r,
            n_a,
        })
    }

    /// The model disk of radius `R` with `ρ_min = R·10⁻³`.
    pub fn model_disk(radius: f64, n_r: usize, n_a: usize) -> Result<Self> {
        Self::new(radius * RHO_MIN_FACTOR, radius, n_r, n_a)
    }

    /// Step in `log ρ`.
    pub fn hs(&self) -> f64 {
        (self.rho_max / self.rho_min).ln() / (self.n_r - 1) as f64
    }

    /// Angular step.
    pub fn dth(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n_a as f64
    }

    /// Radius of row `i`.
    pub fn radius(&self, i: usize) -> f64 {
        if i + 1 == self.n_r {
            self.rho_max
        } else {
            self.rho_min * (self.hs() * i as f64).exp()
        }
    }

    /// Angle of column `j`.
    pub fn theta(&self, j: usize) -> f64 {
        self.dth() * j as f64
    }

    /// Node `(i, j)` as a point of the plane.
    pub fn zeta(&self, i: usize, j: usize) -> Complex64 {
        Complex64::from_polar(self.radius(i), self.theta(j))
    }

    /// Flat index of node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_a + j
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.n_r * self.n_a
    }

    /// Always false for a validated grid.
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area element `ρ²·Δs·Δθ` of row `i`.
    pub fn weight(&self, i: usize) -> f64 {
        let r = self.radius(i);
        r * r * self.hs() * self.dth()
    }

    /// The grid with half the steps; its even nodes coincide with `self`.
    pub fn refined(&self) -> DiskGrid {
        DiskGrid {
            n_r: 2 * self.n_r - 1,
            n_a: 2 * self.n_a,
            ..*self
        }
    }

    fn n_interior(&self) -> usize {
        (self.n_r - 2) * self.n_a
    }

    fn jp(&self, j: usize) -> usize {
        (j + 1) % self.n_a
    }

    fn jm(&self, j: usize) -> usize {
        (j + self.n_a - 1) % self.n_a
    }
}

/// Moves an R-type metric from the singular frame of the glued solution to
/// the regular frame `H = S*MS`; other types are unchanged.
fn to_disk_frame(frame: ZeroType, zeta: Complex64, h: &HermMatrix2) -> HermMatrix2 {
    match frame {
        ZeroType::R => h.congruence(&frame_s(zeta)),
        _ => *h,
    }
}

/// A metric on the grid in a fixed holomorphic frame.
///
/// R-type fields use the regular frame, where the metric stays well
/// conditioned near the zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskField {
    pub grid: DiskGrid,
    /// Selects `β₀, γ₀` through [`local_higgs_forms`].
    pub frame: ZeroType,
    pub values: Vec<HermMatrix2>,
}

impl DiskField {
    /// Samples `f(ζ)` at every node and checks positivity.
    pub fn from_fn<F>(grid: DiskGrid, frame: ZeroType, f: F) -> Result<Self>
    where
        F: Fn(Complex64) -> Result<HermMatrix2> + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|n| {
                let h = f(grid.zeta(n / grid.n_a, n % grid.n_a))?;
                h.check_posdef()?;
                Ok(h)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiskField {
            grid,
            frame,
            values,
        })
    }

    /// The glued approximate solution; needs `ρ_max ≤ R`.
    pub fn glued(grid: DiskGrid, spec: &GluedMetricSpec) -> Result<Self> {
        Self::from_fn(grid, spec.zero_type, |z| {
            Ok(to_disk_frame(spec.zero_type, z, &h_app_at(spec, z)?))
        })
    }

    /// The exact local solution. For R-type zeros with `λ = 0` the
    /// Painlevé closed form is used.
    pub fn oracle(grid: DiskGrid, spec: &GluedMetricSpec) -> Result<Self> {
        spec.validate()?;
        if spec.zero_type == ZeroType::R && spec.lambda == Some(0.0) {
            let p = default_painleve();
            let s = spec.t.powf(2.0 / 3.0);
            return Self::from_fn(grid, ZeroType::R, |z| {
                let m = lambda0_oracle_m(p, s * z.norm());
                Ok(to_disk_frame(
                    ZeroType::R,
                    z,
                    &HermMatrix2::new(s * m.a11, m.a12 * s, s * m.a22),
                ))
            });
        }
        Self::from_fn(grid, spec.zero_type, |z| {
            Ok(to_disk_frame(
                spec.zero_type,
                z,
                &exact_local_metric(spec, z.norm())?,
            ))
        })
    }

    /// Value at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> HermMatrix2 {
        self.values[self.grid.index(i, j)]
    }

    /// Higgs data of the frame.
    pub fn forms(&self) -> HiggsForms {
        local_higgs_forms(self.frame)
    }

    /// `max_n ‖H_n − K_n‖ / ‖K_n‖` over nodes of equal grids.
    pub fn relative_sup_diff(&self, other: &DiskField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Config("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.to_cmat() - b.to_cmat()).max_abs() / b.max_abs())
            .fold(0.0, f64::max))
    }

    /// Restriction of a field on `coarse.refined()` to `coarse`.
    pub fn restrict_to(&self, coarse: &DiskGrid) -> Result<DiskField> {
        if self.grid != coarse.refined() {
            return Err(Error::Config("field is not on the refined grid".into()));
        }
        let values = (0..coarse.len())
            .map(|n| self.at(2 * (n / coarse.n_a), 2 * (n % coarse.n_a)))
            .collect();
        Ok(DiskField {
            grid: *coarse,
            frame: self.frame,
            values,
        })
    }
}

/// Coefficients of Hermitian endomorphisms in the basis
/// `σ₀ = diag(2, −1)`, `σ₁`, `σ₂`, `σ₃`, one entry per node.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliField {
    pub coeffs: Vec<[f64; 4]>,
}

impl PauliField {
    /// The zero field on `n` nodes.
    pub fn zeros(n: usize) -> Self {
        PauliField {
            coeffs: vec![[0.0; 4]; n],
        }
    }

    /// Nodewise reconstruction.
    pub fn compose(&self) -> Vec<CMat2> {
        self.coeffs.iter().map(pauli_compose).collect()
    }
}

/// `u₀σ₀ + u₁σ₁ + u₂σ₂ + u₃σ₃`.
pub fn pauli_compose(c: &[f64; 4]) -> CMat2 {
    CMat2::new(
        Complex64::new(2.0 * c[0] + c[3], 0.0),
        Complex64::new(c[1], -c[2]),
        Complex64::new(c[1], c[2]),
        Complex64::new(-c[0] - c[3], 0.0),
    )
}

/// Coefficients of the Hermitian part of `u`.
fn pauli_coeffs(u: &CMat2) -> [f64; 4] {
    let h = HermMatrix2::from_cmat_unchecked(u);
    let u0 = h.a11 + h.a22;
    [u0, h.a12.re, -h.a12.im, h.a11 - 2.0 * u0]
}

/// Coefficients of a Hermitian matrix.
pub fn pauli_decompose(u: &CMat2) -> Result<[f64; 4]> {
    if u.hermitian_defect() > 1e-12 * u.max_abs().max(1.0) {
        return Err(Error::domain("matrix is not Hermitian"));
    }
    Ok(pauli_coeffs(u))
}

/// Nodewise [`pauli_decompose`].
pub fn pauli_decompose_field(u: &[CMat2]) -> Result<PauliField> {
    Ok(PauliField {
        coeffs: u.iter().map(pauli_decompose).collect::<Result<_>>()?,
    })
}

/// `û = u + (tr u)·Id`.
pub fn hat(u: &CMat2) -> CMat2 {
    *u + CMat2::scalar(u.trace())
}

/// `(γ̃γ̃*, β̃*β̃)` in the unitary frame `H^{-1/2}`, with
/// `γ̃ = H^{1/2}γ₀(det H)^{1/2}` and `β̃ = β₀H^{-1/2}(det H)^{-1/2}`.
fn higgs_parts(
    h: &HermMatrix2,
    s: &CMat2,
    forms: &HiggsForms,
    zeta: Complex64,
) -> ([Complex64; 2], [Complex64; 2]) {
    let det = h.det();
    let g = forms.gamma_at(zeta);
    let b = forms.beta_at(zeta);
    let si = s.inv();
    let sd = det.sqrt();
    let gt = [
        (s.0[0][0] * g[0] + s.0[0][1] * g[1]) * sd,
        (s.0[1][0] * g[0] + s.0[1][1] * g[1]) * sd,
    ];
    let bt = [
        (b[0] * si.0[0][0] + b[1] * si.0[1][0]) / sd,
        (b[0] * si.0[0][1] + b[1] * si.0[1][1]) / sd,
    ];
    (gt, bt)
}

fn outer(a: &[Complex64; 2], b: &[Complex64; 2]) -> CMat2 {
    CMat2::new(
        a[0] * b[0].conj(),
        a[0] * b[1].conj(),
        a[1] * b[0].conj(),
        a[1] * b[1].conj(),
    )
}

/// `ψ_{β,γ,h} = 2(γ̃γ̃* + β̃*β̃)` at every node, in the unitary frame
/// `H^{-1/2}`.
pub fn psi_beta_gamma(field: &DiskField) -> Vec<CMat2> {
    let forms = field.forms();
    let g = field.grid;
    (0..g.len())
        .map(|n| {
            let h = field.values[n];
            let s = psd_sqrt_unchecked(&h).to_cmat();
            let (gt, bt) = higgs_parts(&h, &s, &forms, g.zeta(n / g.n_a, n % g.n_a));
            let bc = [bt[0].conj(), bt[1].conj()];
            (outer(&gt, &gt) + outer(&bc, &bc)).scale_re(2.0)
        })
        .collect()
}

/// Nodewise data shared by every evaluation at a fixed metric.
struct Base<'a> {
    grid: &'a DiskGrid,
    forms: HiggsForms,
    t: f64,
    h: Vec<CMat2>,
    s: Vec<CMat2>,
}

impl<'a> Base<'a> {
    fn new(field: &'a DiskField, t: f64) -> Self {
        Self::from_values(&field.grid, field.forms(), t, &field.values)
    }

    fn from_values(grid: &'a DiskGrid, forms: HiggsForms, t: f64, values: &[HermMatrix2]) -> Self {
        let h = values.iter().map(|v| v.to_cmat()).collect();
        let s = values
            .iter()
            .map(|v| psd_sqrt_unchecked(v).to_cmat())
            .collect();
        Base {
            grid,
            forms,
            t,
            h,
            s,
        }
    }

    /// `−4P*ℋ(H)P^{-*}` at interior node `(i, j)`.
    fn node_map(&self, h: &[CMat2], p: &[CMat2], i: usize, j: usize) -> CMat2 {
        let g = self.grid;
        let get = |n: usize| h[n];
        let c = g.index(i, j);
        let pc = p[c];
        let rho = g.radius(i);
        let theta = g.theta(j);
        let hc = get(c);
        let jet = stencil_combine(
            rho,
            theta,
            g.hs(),
            g.dth(),
            &hc,
            &get(g.index(i + 1, j)),
            &get(g.index(i - 1, j)),
            &get(g.index(i, g.jp(j))),
            &get(g.index(i, g.jm(j))),
        );
        let zeta = Complex64::from_polar(rho, theta);
        let op = curvature_term(&jet) + higgs_terms(&jet.h, &self.forms, zeta, self.t);
        let pa = pc.adjoint();
        (pa * op * pa.inv()).scale_re(-4.0)
    }

    /// Perturbed `(H', P)` with `P = S e^{εv/2}`.
    fn perturb(&self, v: &[[f64; 4]], eps: f64) -> (Vec<CMat2>, Vec<CMat2>) {
        let g = self.grid;
        let mut h = self.h.clone();
        let mut p = self.s.clone();
        h.par_iter_mut()
            .zip(p.par_iter_mut())
            .enumerate()
            .for_each(|(n, (hn, pn))| {
                let i = n / g.n_a;
                if i == 0 || i + 1 == g.n_r {
                    return;
                }
                let vn = &v[n - g.n_a];
                if vn.iter().all(|x| *x == 0.0) {
                    return;
                }
                let e = pauli_compose(vn).scale_re(0.5 * eps).exp();
                let pp = self.s[n] * e;
                *pn = pp;
                *hn = (pp * pp.adjoint()).hermitian_part();
            });
        (h, p)
    }

    /// Map values at interior nodes, flattened as `(row − 1, column)`.
    fn map_all(&self, h: &[CMat2], p: &[CMat2], scaled: bool) -> Vec<[f64; 4]> {
        let g = self.grid;
        (0..g.n_interior())
            .into_par_iter()
            .map(|m| {
                let i = m / g.n_a + 1;
                let j = m % g.n_a;
                let mut r = self.node_map(h, p, i, j);
                if scaled {
                    let rho = g.radius(i);
                    r = r.scale_re(rho * rho);
                }
                pauli_coeffs(&r)
            })
            .collect()
    }

    fn residual(&self, scaled: bool) -> Vec<[f64; 4]> {
        self.map_all(&self.h, &self.s, scaled)
    }

    /// Exact derivative of the map at interior node `(i, j)` given the
    /// tangents `dh` of `H` at every node and `dp` of `P` at the node.
    fn node_map_tangent<F>(&self, i: usize, j: usize, dh: F, dp: &CMat2) -> CMat2
    where
        F: Fn(usize) -> CMat2,
    {
        let g = self.grid;
        let idx = [
            g.index(i, j),
            g.index(i + 1, j),
            g.index(i - 1, j),
            g.index(i, g.jp(j)),
            g.index(i, g.jm(j)),
        ];
        let rho = g.radius(i);
        let theta = g.theta(j);
        let (hs, dth) = (g.hs(), g.dth());
        let h = |k: usize| self.h[idx[k]];
        let jv = stencil_combine(rho, theta, hs, dth, &h(0), &h(1), &h(2), &h(3), &h(4));
        let jd = stencil_combine(
            rho,
            theta,
            hs,
            dth,
            &dh(idx[0]),
            &dh(idx[1]),
            &dh(idx[2]),
            &dh(idx[3]),
            &dh(idx[4]),
        );
        let hi = jv.h.inv();
        let dhi = -(hi * jd.h * hi);
        let curv = hi * jv.lap_quarter - hi * jv.dzbar * hi * jv.dz;
        let dcurv = dhi * jv.lap_quarter + hi * jd.lap_quarter
            - (dhi * jv.dzbar * hi * jv.dz
                + hi * jd.dzbar * hi * jv.dz
                + hi * jv.dzbar * dhi * jv.dz
                + hi * jv.dzbar * hi * jd.dz);
        let zeta = Complex64::from_polar(rho, theta);
        let gg = self.forms.gamma_gamma_star(zeta);
        let bb = self.forms.beta_star_beta(zeta);
        let hv = jv.h.0;
        let hd = jd.h.0;
        let det = jv.h.det();
        let ddet =
            hv[0][0] * hd[1][1] + hd[0][0] * hv[1][1] - hv[0][1] * hd[1][0] - hd[0][1] * hv[1][0];
        let t2 = self.t * self.t;
        let op = curv + higgs_terms(&jv.h, &self.forms, zeta, self.t);
        let dop = dcurv
            + (gg * jd.h).scale(det * (-t2))
            + (gg * jv.h).scale(ddet * (-t2))
            + (dhi * bb).scale(det.inv() * t2)
            - (hi * bb).scale(ddet / (det * det) * t2);
        let pa = self.s[idx[0]].adjoint();
        let pai = pa.inv();
        let dpa = dp.adjoint();
        (dpa * op * pai + pa * dop * pai - pa * op * pai * dpa * pai).scale_re(-4.0)
    }

    /// Tangents `(dH, dP) = (S V S, S V / 2)` of the update at node `n`.
    fn tangents(&self, n: usize, v: &[f64; 4]) -> (CMat2, CMat2) {
        let vm = pauli_compose(v);
        (self.s[n] * vm * self.s[n], (self.s[n] * vm).scale_re(0.5))
    }

    /// Directional derivative of the map along `v` (interior layout).
    fn jvp(&self, v: &[[f64; 4]], scaled: bool) -> Vec<[f64; 4]> {
        let g = self.grid;
        let n_a = g.n_a;
        let tang: Vec<(CMat2, CMat2)> = (0..g.len())
            .into_par_iter()
            .map(|n| {
                let i = n / n_a;
                if i == 0 || i + 1 == g.n_r {
                    (CMat2::ZERO, CMat2::ZERO)
                } else {
                    self.tangents(n, &v[n - n_a])
                }
            })
            .collect();
        (0..g.n_interior())
            .into_par_iter()
            .map(|m| {
                let i = m / n_a + 1;
                let j = m % n_a;
                let mut d = self.node_map_tangent(i, j, |n| tang[n].0, &tang[g.index(i, j)].1);
                if scaled {
                    let rho = g.radius(i);
                    d = d.scale_re(rho * rho);
                }
                pauli_coeffs(&d)
            })
            .collect()
    }
}

type C4 = [[Complex64; 4]; 4];
type R4 = [[f64; 4]; 4];

fn c4_from_real(a: &R4) -> C4 {
    let mut out = [[C0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            out[r][c] = Complex64::new(a[r][c], 0.0);
        }
    }
    out
}

fn c4_mul(a: &C4, b: &C4) -> C4 {
    let mut out = [[C0; 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            let mut s = C0;
            for k in 0..4 {
                s += a[r][k] * b[k][c];
            }
            out[r][c] = s;
        }
    }
    out
}

fn c4_vec(a: &C4, x: &[Complex64; 4]) -> [Complex64; 4] {
    let mut out = [C0; 4];
    for r in 0..4 {
        for k in 0..4 {
            out[r] += a[r][k] * x[k];
        }
    }
    out
}

fn c4_inv(a: &C4) -> Result<C4> {
    let mut m = *a;
    let mut inv = [[C0; 4]; 4];
    for (k, row) in inv.iter_mut().enumerate() {
        row[k] = Complex64::new(1.0, 0.0);
    }
    for col in 0..4 {
        let piv = (col..4)
            .max_by(|x, y| m[*x][col].norm().total_cmp(&m[*y][col].norm()))
            .unwrap_or(col);
        if m[piv][col].norm() == 0.0 {
            return Err(Error::solver(
                "singular block in the preconditioner",
                vec![],
            ));
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col].inv();
        for c in 0..4 {
            m[col][c] *= d;
            inv[col][c] *= d;
        }
        for r in 0..4 {
            if r != col {
                let f = m[r][col];
                if f != C0 {
                    for c in 0..4 {
                        let (mc, ic) = (m[col][c], inv[col][c]);
                        m[r][c] -= f * mc;
                        inv[r][c] -= f * ic;
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Angle-averaged Jacobian blocks of one interior row: couplings to the
/// rows below and above, the node itself and its angular neighbours.
#[derive(Debug, Clone, Copy)]
struct RowBlocks {
    below: R4,
    diag: R4,
    above: R4,
    left: R4,
    right: R4,
}

/// Exact inverse of the angle-averaged Jacobian through a Fourier
/// transform in the angle and block-tridiagonal elimination in the radius.
struct FourierPrecond {
    n_rows: usize,
    n_a: usize,
    /// Per mode: `(pivot inverses, eliminators, upper blocks)`.
    modes: Vec<(Vec<C4>, Vec<C4>, Vec<C4>)>,
}

impl FourierPrecond {
    fn build(base: &Base, scaled: bool) -> Result<Self> {
        let blocks = jacobian_blocks(base, scaled);
        let g = base.grid;
        let n_rows = g.n_r - 2;
        let n_a = g.n_a;
        let modes = (0..n_a)
            .into_par_iter()
            .map(|m| {
                let phi = 2.0 * std::f64::consts::PI * m as f64 / n_a as f64;
                let em = Complex64::from_polar(1.0, -phi);
                let ep = Complex64::from_polar(1.0, phi);
                let mut pinv = Vec::with_capacity(n_rows);
                let mut elim = Vec::with_capacity(n_rows);
                let mut upper = Vec::with_capacity(n_rows);
                for (r, b) in blocks.iter().enumerate() {
                    let mut d = [[C0; 4]; 4];
                    for x in 0..4 {
                        for y in 0..4 {
                            d[x][y] = Complex64::new(b.diag[x][y], 0.0)
                                + em * b.left[x][y]
                                + ep * b.right[x][y];
                        }
                    }
                    let below = c4_from_real(&b.below);
                    let w = if r == 0 {
                        [[C0; 4]; 4]
                    } else {
                        let w = c4_mul(&below, &pinv[r - 1]);
                        let wc = c4_mul(&w, &upper[r - 1]);
                        for x in 0..4 {
                            for y in 0..4 {
                                d[x][y] -= wc[x][y];
                            }
                        }
                        w
                    };
                    pinv.push(c4_inv(&d)?);
                    elim.push(w);
                    upper.push(c4_from_real(&b.above));
                }
                Ok((pinv, elim, upper))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FourierPrecond { n_rows, n_a, modes })
    }

    fn apply(&self, rhs: &[f64]) -> Vec<f64> {
        let n_a = self.n_a;
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(n_a);
        let inv = planner.plan_fft_inverse(n_a);
        let mut spec = vec![[C0; 4]; self.n_rows * n_a];
        let mut buf = vec![C0; n_a];
        for r in 0..self.n_rows {
            for k in 0..4 {
                for j in 0..n_a {
                    buf[j] = Complex64::new(rhs[(r * n_a + j) * 4 + k], 0.0);
                }
                fwd.process(&mut buf);
                for m in 0..n_a {
                    spec[r * n_a + m][k] = buf[m];
                }
            }
        }
        let solved: Vec<Vec<[Complex64; 4]>> = self
            .modes
            .par_iter()
            .enumerate()
            .map(|(m, (pinv, elim, upper))| {
                let mut y = vec![[C0; 4]; self.n_rows];
                for r in 0..self.n_rows {
                    let mut b = spec[r * n_a + m];
                    if r > 0 {
                        let wy = c4_vec(&elim[r], &y[r - 1]);
                        for k in 0..4 {
                            b[k] -= wy[k];
                        }
                    }
                    y[r] = b;
                }
                let mut x = vec![[C0; 4]; self.n_rows];
                for r in (0..self.n_rows).rev() {
                    let mut b = y[r];
                    if r + 1 < self.n_rows {
                        let ux = c4_vec(&upper[r], &x[r + 1]);
                        for k in 0..4 {
                            b[k] -= ux[k];
                        }
                    }
                    x[r] = c4_vec(&pinv[r], &b);
                }
                x
            })
            .collect();
        let mut out = vec![0.0; rhs.len()];
        for r in 0..self.n_rows {
            for k in 0..4 {
                for (m, sm) in solved.iter().enumerate() {
                    buf[m] = sm[r][k];
                }
                inv.process(&mut buf);
                for j in 0..n_a {
                    out[(r * n_a + j) * 4 + k] = buf[j].re / n_a as f64;
                }
            }
        }
        out
    }
}

/// Angle-averaged 5-point Jacobian blocks from local fourth-order
/// differences.
fn jacobian_blocks(base: &Base, scaled: bool) -> Vec<RowBlocks> {
    let g = base.grid;
    let n_rows = g.n_r - 2;
    let zero = [[0.0; 4]; 4];
    let per_node: Vec<(usize, [R4; 5])> = (0..g.n_interior())
        .into_par_iter()
        .map(|m| {
            let i = m / g.n_a + 1;
            let j = m % g.n_a;
            let q = g.index(i, j);
            let scale = |ii: usize| {
                if scaled {
                    let r = g.radius(ii);
                    r * r
                } else {
                    1.0
                }
            };
            let targets: [(usize, usize); 5] =
                [(i, j), (i + 1, j), (i - 1, j), (i, g.jp(j)), (i, g.jm(j))];
            let mut cols = [zero; 5];
            for k in 0..4 {
                let mut e = [0.0; 4];
                e[k] = 1.0;
                let (dhq, dpq) = base.tangents(q, &e);
                for (tn, &(ti, tj)) in targets.iter().enumerate() {
                    if ti == 0 || ti + 1 == g.n_r {
                        continue;
                    }
                    let dp = if tn == 0 { dpq } else { CMat2::ZERO };
                    let d = base.node_map_tangent(
                        ti,
                        tj,
                        |n| if n == q { dhq } else { CMat2::ZERO },
                        &dp,
                    );
                    let c = pauli_coeffs(&d.scale_re(scale(ti)));
                    for (r, cr) in c.iter().enumerate() {
                        cols[tn][r][k] = *cr;
                    }
                }
            }
            (i - 1, cols)
        })
        .collect();
    let mut blocks = vec![
        RowBlocks {
            below: zero,
            diag: zero,
            above: zero,
            left: zero,
            right: zero,
        };
        n_rows
    ];
    let w = 1.0 / g.n_a as f64;
    let add = |dst: &mut R4, src: &R4| {
        for x in 0..4 {
            for y in 0..4 {
                dst[x][y] += w * src[x][y];
            }
        }
    };
    for (r, cols) in &per_node {
        let r = *r;
        add(&mut blocks[r].diag, &cols[0]);
        if r + 1 < n_rows {
            add(&mut blocks[r + 1].below, &cols[1]);
        }
        if r > 0 {
            add(&mut blocks[r - 1].above, &cols[2]);
        }
        add(&mut blocks[r].left, &cols[3]);
        add(&mut blocks[r].right, &cols[4]);
    }
    blocks
}

fn flatten(v: &[[f64; 4]]) -> Vec<f64> {
    v.iter().flat_map(|x| x.iter().copied()).collect()
}

fn unflatten(v: &[f64]) -> Vec<[f64; 4]> {
    v.chunks_exact(4)
        .map(|c| [c[0], c[1], c[2], c[3]])
        .collect()
}

fn sup_norm(r: &[[f64; 4]]) -> f64 {
    r.iter()
        .map(|c| pauli_compose(c).max_abs())
        .fold(0.0, f64::max)
}

fn interior_of(grid: &DiskGrid, u: &PauliField) -> Result<Vec<[f64; 4]>> {
    if u.coeffs.len() != grid.len() {
        return Err(Error::Config("Pauli field does not match the grid".into()));
    }
    let n_a = grid.n_a;
    let last = grid.len() - n_a;
    if u.coeffs[..n_a]
        .iter()
        .chain(&u.coeffs[last..])
        .any(|c| c.iter().any(|x| *x != 0.0))
    {
        return Err(Error::domain("u must vanish on the boundary rings"));
    }
    Ok(u.coeffs[n_a..last].to_vec())
}

/// `L_t u` at every node in the unitary frame `H^{-1/2}`; boundary rows
/// are zero.
pub fn apply_lt(field: &DiskField, t: f64, u: &PauliField) -> Result<Vec<CMat2>> {
    let v = interior_of(&field.grid, u)?;
    let base = Base::new(field, t);
    let d = base.jvp(&v, false);
    let n_a = field.grid.n_a;
    let mut out = vec![CMat2::ZERO; field.grid.len()];
    for (m, c) in d.iter().enumerate() {
        out[m + n_a] = pauli_compose(c);
    }
    Ok(out)
}

/// Discrete `((a, u)) = Σ w·tr(a û)` over interior nodes.
pub fn pairing(field: &DiskField, a: &[CMat2], u: &PauliField) -> f64 {
    let g = field.grid;
    let mut acc = 0.0;
    for i in 1..g.n_r - 1 {
        let w = g.weight(i);
        for j in 0..g.n_a {
            let n = g.index(i, j);
            acc += w * (a[n] * hat(&pauli_compose(&u.coeffs[n]))).trace().re;
        }
    }
    acc
}

/// Discrete `Q_t(u) = ‖d tr u‖² + 2‖∂̄u‖² + 2t²‖û∘γ‖² + 2t²‖β∘û‖²` with
/// `|dζ|² = 2`.
pub fn quadratic_form_qt(field: &DiskField, t: f64, u: &PauliField) -> Result<f64> {
    let g = field.grid;
    if u.coeffs.len() != g.len() {
        return Err(Error::Config("Pauli field does not match the grid".into()));
    }
    let forms = field.forms();
    let s: Vec<CMat2> = field
        .values
        .iter()
        .map(|h| psd_sqrt_unchecked(h).to_cmat())
        .collect();
    let ut: Vec<CMat2> = u.compose();
    let hol: Vec<CMat2> = (0..g.len()).map(|n| s[n].inv() * ut[n] * s[n]).collect();
    let (hs, dth) = (g.hs(), g.dth());
    let rows: Vec<f64> = (1..g.n_r - 1)
        .into_par_iter()
        .map(|i| {
            let rho = g.radius(i);
            let mut acc = 0.0;
            for j in 0..g.n_a {
                let n = g.index(i, j);
                let (rp, rm) = (g.index(i + 1, j), g.index(i - 1, j));
                let (tp, tm) = (g.index(i, g.jp(j)), g.index(i, g.jm(j)));
                let f = |k: usize| u.coeffs[k][0];
                let ds = (f(rp) - f(rm)) / (2.0 * hs.sinh());
                let dt = (f(tp) - f(tm)) / (2.0 * dth.sin());
                let grad = (ds * ds + dt * dt) / (rho * rho);
                let jet = stencil_combine(
                    rho,
                    g.theta(j),
                    hs,
                    dth,
                    &hol[n],
                    &hol[rp],
                    &hol[rm],
                    &hol[tp],
                    &hol[tm],
                );
                let dbar = s[n] * jet.dzbar * s[n].inv();
                let dbar2: f64 = dbar
                    .0
                    .iter()
                    .flat_map(|r| r.iter())
                    .map(|z| z.norm_sqr())
                    .sum();
                let (gt, bt) = higgs_parts(&field.values[n], &s[n], &forms, g.zeta(i, j));
                let uh = hat(&ut[n]);
                let ug: f64 = (0..2)
                    .map(|r| (uh.0[r][0] * gt[0] + uh.0[r][1] * gt[1]).norm_sqr())
                    .sum();
                let bu: f64 = (0..2)
                    .map(|c| (bt[0] * uh.0[0][c] + bt[1] * uh.0[1][c]).norm_sqr())
                    .sum();
                acc += grad + 4.0 * dbar2 + 4.0 * t * t * (ug + bu);
            }
            acc * g.weight(i)
        })
        .collect();
    Ok(rows.iter().sum())
}

/// Maximum entry of `ρ²·(−4P*ℋP^{-*})` over interior nodes.
pub fn disk_residual(field: &DiskField, t: f64) -> f64 {
    sup_norm(&Base::new(field, t).residual(true))
}

/// Iteration scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Operator refreshed at every step, solved by preconditioned GMRES.
    Newton,
    /// Fixed operator at the initial metric.
    Picard,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Newton => "newton",
            Scheme::Picard => "picard",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Scheme::Newton),
            "picard" => Ok(Scheme::Picard),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub scheme: Scheme,
    pub tol: f64,
    pub max_iter: usize,
    pub linear_tol: f64,
    pub restart: usize,
    pub max_linear_iter: usize,
    pub max_halvings: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            scheme: Scheme::Newton,
            tol: 1e-10,
            max_iter: 50,
            linear_tol: 1e-12,
            restart: 40,
            max_linear_iter: 400,
            max_halvings: 20,
        }
    }
}

/// Result of [`solve_hitchin_disk`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiskSolution {
    pub field: DiskField,
    /// `g_t = H₀^{-1/2}H H₀^{-1/2}` at every node.
    pub g: Vec<HermMatrix2>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    /// `max ‖g_t − Id‖`.
    pub gt_sup_norm: f64,
    /// Largest Hermitian defect removed by re-symmetrization.
    pub hermitian_defect: f64,
}

/// Solves `ℋ(H) = 0` with the boundary rows of `init` as Dirichlet data.
pub fn solve_hitchin_disk(init: &DiskField, t: f64, cfg: &SolveConfig) -> Result<DiskSolution> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be positive, got {t}")));
    }
    for h in &init.values {
        h.check_posdef()?;
    }
    let grid = init.grid;
    let forms = init.forms();
    let mut values = init.values.clone();
    let mut base = Base::from_values(&grid, forms, t, &values);
    let mut res = base.residual(true);
    let mut norm = sup_norm(&res);
    let mut history = vec![norm];
    let mut lin_its = Vec::new();
    let mut defect: f64 = 0.0;
    let mut iterations = 0;
    let frozen = match cfg.scheme {
        Scheme::Picard => Some((
            Base::from_values(&grid, forms, t, &values),
            FourierPrecond::build(&base, true)?,
        )),
        Scheme::Newton => None,
    };
    while norm > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(Error::solver(
                "maximum number of iterations exceeded",
                history,
            ));
        }
        let rhs: Vec<f64> = flatten(&res).iter().map(|x| -x).collect();
        let fresh;
        let (op, pre) = match &frozen {
            Some((b, p)) => (b, p),
            None => {
                fresh = FourierPrecond::build(&base, true)?;
                (&base, &fresh)
            }
        };
        let out = gmres(
            |x| Ok(flatten(&op.jvp(&unflatten(x), true))),
            |x| pre.apply(x),
            &rhs,
            cfg.linear_tol,
            cfg.restart,
            cfg.max_linear_iter,
        )?;
        if !out.converged && out.relative_residual > STALL_ACCEPT {
            return Err(Error::solver(
                "GMRES stagnated above the acceptance level",
                history.clone(),
            ));
        }
        lin_its.push(out.iterations);
        let step = out.x;
        let step = unflatten(&step);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let (h, _) = base.perturb(&step, alpha);
            let mut trial = values.clone();
            let mut worst: f64 = 0.0;
            for (n, hn) in h.iter().enumerate() {
                worst = worst.max(hn.hermitian_defect());
                trial[n] = HermMatrix2::from_cmat_unchecked(hn);
            }
            if trial.iter().all(|x| x.is_posdef()) {
                let tb = Base::from_values(&grid, forms, t, &trial);
                let tr = tb.residual(true);
                let tn = sup_norm(&tr);
                if tn < norm {
                    accepted = Some((trial, tr, tn, worst));
                    break;
                }
            }
            alpha *= 0.5;
        }
        let (trial, tr, tn, worst) = accepted.ok_or_else(|| {
            Error::solver(
                "step halving failed to reduce the residual",
                history.clone(),
            )
        })?;
        defect = defect.max(worst);
        values = trial;
        base = Base::from_values(&grid, forms, t, &values);
        res = tr;
        norm = tn;
        history.push(norm);
        iterations += 1;
    }
    let g: Vec<HermMatrix2> = init
        .values
        .iter()
        .zip(&values)
        .map(|(h0, h)| {
            let si = psd_sqrt_unchecked(h0).inv().to_cmat();
            HermMatrix2::from_cmat_unchecked(&(si * h.to_cmat() * si))
        })
        .collect();
    let gt_sup_norm = g
        .iter()
        .map(|x| (x.to_cmat() - CMat2::IDENTITY).max_abs())
        .fold(0.0, f64::max);
    Ok(DiskSolution {
        field: DiskField {
            grid,
            frame: init.frame,
            values,
        },
        g,
        iterations,
        residual_history: history,
        linear_iterations: lin_its,
        gt_sup_norm,
        hermitian_defect: defect,
    })
}

/// The solution of the discrete equations nearest to `field`, with the
/// same boundary values, solved to `tol`.
pub fn discretely_exact_seed(field: &DiskField, t: f64, tol: f64) -> Result<DiskField> {
    let cfg = SolveConfig {
        tol,
        ..SolveConfig::default()
    };
    Ok(solve_hitchin_disk(field, t, &cfg)?.field)
}

/// Comparison of a disk solution against the exact local model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    /// `max ‖H − H_exact‖/‖H_exact‖` on the grid.
    pub sup_relative_diff: f64,
    /// The same distance between the solutions on the grid and on its
    /// refinement, at common nodes.
    pub discretization_error: f64,
}

/// Solves from the glued seed on `grid` and on `grid.refined()` and
/// compares both with the oracle.
pub fn compare_with_oracle(
    grid: &DiskGrid,
    spec: &GluedMetricSpec,
    cfg: &SolveConfig,
) -> Result<(DiskSolution, OracleComparison)> {
    let coarse = solve_hitchin_disk(&DiskField::glued(*grid, spec)?, spec.t, cfg)?;
    let fine_grid = grid.refined();
    let fine = solve_hitchin_disk(&DiskField::glued(fine_grid, spec)?, spec.t, cfg)?;
    let oracle = DiskField::oracle(*grid, spec)?;
    let restricted = fine.field.restrict_to(grid)?;
    let cmp = OracleComparison {
        sup_relative_diff: coarse.field.relative_sup_diff(&oracle)?,
        discretization_error: coarse.field.relative_sup_diff(&restricted)?,
    };
    Ok((coarse, cmp))
}
