//! The local Hitchin operator on rank-2 metrics and its polar
//! finite-difference evaluation.
//!
//! For a Hermitian matrix field `H` and Higgs data `β₀` (row) and `γ₀`
//! (column) the operator is
//! `ℋ(H) = ∂_ζ̄(H⁻¹∂_ζH) − t²γ₀γ₀*H·det H + t²(det H)⁻¹H⁻¹β₀*β₀`.

use crate::hermlin::CMat2;
use num_complex::Complex64;

/// Lowest power of `ζ` carried by [`HiggsForms`].
pub const MIN_POWER: i32 = -1;
/// Highest power of `ζ` carried by [`HiggsForms`].
pub const MAX_POWER: i32 = 2;
const NCOEF: usize = (MAX_POWER - MIN_POWER + 1) as usize;

/// Laurent coefficients of `β₀` (a row) and `γ₀` (a column), each entry a
/// polynomial in `ζ, ζ⁻¹` with powers `-1..=2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiggsForms {
    /// `beta[k][p + 1]` is the coefficient of `ζ^p` in entry `k`.
    pub beta: [[Complex64; NCOEF]; 2],
    /// `gamma[k][p + 1]` is the coefficient of `ζ^p` in entry `k`.
    pub gamma: [[Complex64; NCOEF]; 2],
}

impl HiggsForms {
    /// Forms with all coefficients zero.
    pub fn zero() -> Self {
        let z = [[Complex64::new(0.0, 0.0); NCOEF]; 2];
        HiggsForms { beta: z, gamma: z }
    }

    /// Sets the coefficient of `ζ^power` in `β₀[entry]`.
    pub fn with_beta(mut self, entry: usize, power: i32, coef: f64) -> Self {
        self.beta[entry][(power - MIN_POWER) as usize] = Complex64::new(coef, 0.0);
        self
    }

    /// Sets the coefficient of `ζ^power` in `γ₀[entry]`.
    pub fn with_gamma(mut self, entry: usize, power: i32, coef: f64) -> Self {
        self.gamma[entry][(power - MIN_POWER) as usize] = Complex64::new(coef, 0.0);
        self
    }

    fn eval_poly(c: &[Complex64; NCOEF], zeta: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pow = zeta.inv();
        for coef in c.iter() {
            if *coef != Complex64::new(0.0, 0.0) {
                acc += coef * pow;
            }
            pow *= zeta;
        }
        acc
    }

    /// `β₀(ζ)` as a row vector.
    pub fn beta_at(&self, zeta: Complex64) -> [Complex64; 2] {
        [
            Self::eval_poly(&self.beta[0], zeta),
            Self::eval_poly(&self.beta[1], zeta),
        ]
    }

    /// `γ₀(ζ)` as a column vector.
    pub fn gamma_at(&self, zeta: Complex64) -> [Complex64; 2] {
        [
            Self::eval_poly(&self.gamma[0], zeta),
            Self::eval_poly(&self.gamma[1], zeta),
        ]
    }

    /// Coefficient of the quadratic differential, `β₀(ζ)·γ₀(ζ)`.
    pub fn q_at(&self, zeta: Complex64) -> Complex64 {
        let b = self.beta_at(zeta);
        let g = self.gamma_at(zeta);
        b[0] * g[0] + b[1] * g[1]
    }

    /// `γ₀γ₀*` at `ζ`.
    pub fn gamma_gamma_star(&self, zeta: Complex64) -> CMat2 {
        let g = self.gamma_at(zeta);
        CMat2::new(
            g[0] * g[0].conj(),
            g[0] * g[1].conj(),
            g[1] * g[0].conj(),
            g[1] * g[1].conj(),
        )
    }

    /// `β₀*β₀` at `ζ`.
    pub fn beta_star_beta(&self, zeta: Complex64) -> CMat2 {
        let b = self.beta_at(zeta);
        CMat2::new(
            b[0].conj() * b[0],
            b[0].conj() * b[1],
            b[1].conj() * b[0],
            b[1].conj() * b[1],
        )
    }
}

/// The Higgs-field terms `−t²γ₀γ₀*H·det H + t²(det H)⁻¹H⁻¹β₀*β₀`.
pub fn higgs_terms(h: &CMat2, forms: &HiggsForms, zeta: Complex64, t: f64) -> CMat2 {
    let det = h.det();
    let gg = forms.gamma_gamma_star(zeta);
    let bb = forms.beta_star_beta(zeta);
    let t2 = t * t;
    (gg * *h).scale(det * (-t2)) + (h.inv() * bb).scale(det.inv() * t2)
}

/// Polar finite-difference data of a matrix field at one point.
#[derive(Debug, Clone, Copy)]
pub struct PolarJet {
    pub h: CMat2,
    pub dz: CMat2,
    pub dzbar: CMat2,
    /// `∂_ζ̄∂_ζ H = ΔH / 4`.
    pub lap_quarter: CMat2,
}

/// Computes `H`, `∂_ζ H`, `∂_ζ̄ H` and `ΔH/4` with a 5-point stencil in
/// `(log ρ, θ)` using steps `hs` and `dth`.
///
/// The first differences are normalized by `2 sinh hs` and `2 sin dth` and
/// the second differences by `2(cosh hs − 1)` and `2(1 − cos dth)`, which
/// makes the stencil exact on `ρ^{±1}` and `e^{±iθ}`.
pub fn polar_jet<F>(field: &F, rho: f64, theta: f64, hs: f64, dth: f64) -> PolarJet
where
    F: Fn(f64, f64) -> CMat2,
{
    let c = field(rho, theta);
    let rp = field(rho * hs.exp(), theta);
    let rm = field(rho * (-hs).exp(), theta);
    let tp = field(rho, theta + dth);
    let tm = field(rho, theta - dth);
    stencil_combine(rho, theta, hs, dth, &c, &rp, &rm, &tp, &tm)
}

/// Combines five stencil values into a [`PolarJet`].
#[allow(clippy::too_many_arguments)]
pub fn stencil_combine(
    rho: f64,
    theta: f64,
    hs: f64,
    dth: f64,
    c: &CMat2,
    rp: &CMat2,
    rm: &CMat2,
    tp: &CMat2,
    tm: &CMat2,
) -> PolarJet {
    let d_s = (*rp - *rm).scale_re(1.0 / (2.0 * hs.sinh()));
    let d_th = (*tp - *tm).scale_re(1.0 / (2.0 * dth.sin()));
    let dd_s = (*rp + *rm - c.scale_re(2.0)).scale_re(1.0 / (2.0 * (hs.cosh() - 1.0)));
    let dd_th = (*tp + *tm - c.scale_re(2.0)).scale_re(1.0 / (2.0 * (1.0 - dth.cos())));
    let i = Complex64::new(0.0, 1.0);
    let e_minus = Complex64::from_polar(0.5 / rho, -theta);
    let e_plus = Complex64::from_polar(0.5 / rho, theta);
    let dz = (d_s - d_th.scale(i)).scale(e_minus);
    let dzbar = (d_s + d_th.scale(i)).scale(e_plus);
    let lap_quarter = (dd_s + dd_th).scale_re(0.25 / (rho * rho));
    PolarJet {
        h: *c,
        dz,
        dzbar,
        lap_quarter,
    }
}

/// `∂_ζ̄(H⁻¹∂_ζH) = H⁻¹(ΔH/4) − H⁻¹(∂_ζ̄H)H⁻¹(∂_ζH)` from a jet.
pub fn curvature_term(jet: &PolarJet) -> CMat2 {
    let hi = jet.h.inv();
    hi * jet.lap_quarter - hi * jet.dzbar * hi * jet.dz
}

/// Pointwise finite-difference value of the Hitchin operator.
pub fn hitchin_operator_fd<F>(
    field: &F,
    forms: &HiggsForms,
    t: f64,
    rho: f64,
    theta: f64,
    hs: f64,
    dth: f64,
) -> CMat2
where
    F: Fn(f64, f64) -> CMat2,
{
    let jet = polar_jet(field, rho, theta, hs, dth);
    let zeta = Complex64::from_polar(rho, theta);
    curvature_term(&jet) + higgs_terms(&jet.h, forms, zeta, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencil_is_exact_on_first_harmonics() {
        let field = |r: f64, th: f64| {
            let z = Complex64::from_polar(r, th);
            CMat2::new(z, z.conj(), z.inv(), Complex64::new(1.0, 0.0))
        };
        let (rho, theta) = (0.7, 0.3);
        let jet = polar_jet(&field, rho, theta, 0.05, 0.05);
        let z = Complex64::from_polar(rho, theta);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let want_dz = CMat2::new(one, zero, -(z * z).inv(), zero);
        let want_dzbar = CMat2::new(zero, one, zero, zero);
        assert!((jet.dz - want_dz).max_abs() < 1e-13);
        assert!((jet.dzbar - want_dzbar).max_abs() < 1e-13);
        assert!(jet.lap_quarter.max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_of_modulus_squared() {
        let field = |r: f64, _th: f64| CMat2::scalar(Complex64::new(r * r, 0.0));
        let jet = polar_jet(&field, 1.3, 0.0, 1e-3, 1e-3);
        assert!((jet.lap_quarter.at(0, 0).re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn q_coefficient_of_r_type_forms() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let f = HiggsForms::zero()
            .with_beta(0, 1, s)
            .with_beta(1, 0, s)
            .with_gamma(0, 0, s)
            .with_gamma(1, 1, s);
        let z = Complex64::new(0.4, -0.9);
        assert!((f.q_at(z) - z).norm() < 1e-15);
    }
}
