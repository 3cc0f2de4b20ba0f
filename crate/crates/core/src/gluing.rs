//! Approximate solutions on a model disk around a zero of the quadratic
//! differential, and finite-difference evaluation of their residual.
//!
//! Each zero type carries its own local frame and Higgs data. The glued
//! field interpolates between an interior model and the decoupled exterior
//! metric through the cutoff `χ` on the annulus `[R/3, 2R/3]`.

use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::hermlin::{CMat2, HermMatrix2};
use crate::localmodel::{m_infty_lambda, AsymptoticModel, LocalModelSolution};
use crate::operator::{hitchin_operator_fd, HiggsForms};
use crate::painleve::{psi_p, PainleveSolution};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Type of a zero of the quadratic differential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZeroType {
    Beta,
    Gamma,
    R,
}

impl ZeroType {
    /// All zero types.
    pub const ALL: [ZeroType; 3] = [ZeroType::Beta, ZeroType::Gamma, ZeroType::R];
}

impl fmt::Display for ZeroType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZeroType::Beta => "beta",
            ZeroType::Gamma => "gamma",
            ZeroType::R => "r",
        })
    }
}

impl FromStr for ZeroType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "beta" | "b" => Ok(ZeroType::Beta),
            "gamma" | "g" => Ok(ZeroType::Gamma),
            "r" => Ok(ZeroType::R),
            other => Err(Error::Config(format!("unknown zero type '{other}'"))),
        }
    }
}

/// Quintic smoothstep `10u³ − 15u⁴ + 6u⁵`.
fn smoothstep(u: f64) -> (f64, f64, f64) {
    let u = u.clamp(0.0, 1.0);
    let u2 = u * u;
    let v = u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
    let d = 30.0 * u2 * (1.0 - u) * (1.0 - u);
    let dd = 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    (v, d, dd)
}

/// Cutoff `χ(ρ)`: `1` on `[0, R/3]`, `0` on `[2R/3, ∞)`, a `C²` quintic in
/// `3ρ/R − 1` in between.
pub fn cutoff_chi(rho: f64, radius: f64) -> f64 {
    1.0 - smoothstep(3.0 * rho / radius - 1.0).0
}

/// `(χ, χ′, χ″)` with derivatives in `ρ`.
pub fn cutoff_chi_derivs(rho: f64, radius: f64) -> (f64, f64, f64) {
    let (v, d, dd) = smoothstep(3.0 * rho / radius - 1.0);
    let k = 3.0 / radius;
    (1.0 - v, -k * d, -k * k * dd)
}

/// Higgs data `(β₀, γ₀)` in the regular frame of each zero type.
pub fn local_higgs_forms(zero_type: ZeroType) -> HiggsForms {
    match zero_type {
        ZeroType::R => crate::localmodel::r_type_regular_forms(),
        ZeroType::Beta => HiggsForms::zero()
            .with_beta(0, 1, 1.0)
            .with_gamma(0, 0, 1.0),
        ZeroType::Gamma => HiggsForms::zero()
            .with_beta(0, 0, 1.0)
            .with_gamma(0, 1, 1.0),
    }
}

/// Higgs data of the singular R-type frame, `β₀ = (0, ζ⁻¹)` and
/// `γ₀ = (0, ζ²)ᵀ`.
pub fn r_type_singular_forms() -> HiggsForms {
    HiggsForms::zero()
        .with_beta(1, -1, 1.0)
        .with_gamma(1, 2, 1.0)
}

/// Higgs data in the frame where [`h_app_at`] is expressed.
pub fn glued_frame_forms(zero_type: ZeroType) -> HiggsForms {
    match zero_type {
        ZeroType::R => r_type_singular_forms(),
        other => local_higgs_forms(other),
    }
}

/// Decoupled metric `diag(f⁻²ρ⁻¹, fρ⁻¹)`.
pub fn decoupled_local(f: f64, rho: f64) -> Result<HermMatrix2> {
    if !(f > 0.0 && rho > 0.0) {
        return Err(Error::domain(format!(
            "decoupled metric needs f > 0 and ρ > 0, got f = {f}, ρ = {rho}"
        )));
    }
    Ok(HermMatrix2::diag(1.0 / (f * f * rho), f / rho))
}

/// Model attached to a glued metric.
#[derive(Debug, Clone, Copy)]
pub enum ModelHandle<'a> {
    Local(&'a LocalModelSolution),
    Painleve(&'a PainleveSolution),
}

/// Parameters of a glued approximate solution on the disk `|ζ| ≤ R`.
#[derive(Debug, Clone, Copy)]
pub struct GluedMetricSpec<'a> {
    pub zero_type: ZeroType,
    pub t: f64,
    pub radius: f64,
    pub lambda: Option<f64>,
    pub model: Option<ModelHandle<'a>>,
}

impl<'a> GluedMetricSpec<'a> {
    /// R-type parameters from a local model solution.
    pub fn r_type(sol: &'a LocalModelSolution, t: f64, radius: f64) -> Self {
        GluedMetricSpec {
            zero_type: ZeroType::R,
            t,
            radius,
            lambda: Some(sol.lambda),
            model: Some(ModelHandle::Local(sol)),
        }
    }

    /// β- or γ-type parameters from a Painlevé solution.
    pub fn painleve_type(
        zero_type: ZeroType,
        sol: &'a PainleveSolution,
        t: f64,
        radius: f64,
    ) -> Self {
        GluedMetricSpec {
            zero_type,
            t,
            radius,
            lambda: None,
            model: Some(ModelHandle::Painleve(sol)),
        }
    }

    /// Checks the model handle, the parameters and their compatibility.
    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::domain(format!("t must be positive, got {}", self.t)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::domain(format!(
                "R must be positive, got {}",
                self.radius
            )));
        }
        match (self.zero_type, self.model) {
            (ZeroType::R, Some(ModelHandle::Local(sol))) => {
                let lambda = self
                    .lambda
                    .ok_or_else(|| Error::Config("R-type metric needs λ".into()))?;
                if !(lambda.abs() < 0.25) {
                    return Err(Error::domain(format!("need |λ| < 1/4, got {lambda}")));
                }
                if lambda != sol.lambda {
                    return Err(Error::Config(format!(
                        "λ = {lambda} differs from the local model's λ = {}",
                        sol.lambda
                    )));
                }
                Ok(())
            }
            (ZeroType::R, _) => Err(Error::Config("R-type metric needs a local model".into())),
            (_, Some(ModelHandle::Painleve(_))) => {
                if self.lambda.is_some() {
                    return Err(Error::Config("λ applies only to R-type zeros".into()));
                }
                Ok(())
            }
            _ => Err(Error::Config(
                "β/γ-type metric needs a Painlevé solution".into(),
            )),
        }
    }
}

/// Asymptotic model consistent with the solved `κ`.
fn model_of(sol: &LocalModelSolution) -> AsymptoticModel {
    AsymptoticModel {
        lambda: sol.lambda,
        c_lambda: 4.0 * (-sol.kappa()).exp(),
    }
}

/// Exterior branch `t^{2/3}M_{∞,λ}(t^{2/3}ρ)` of the R-type metric.
pub fn r_type_exterior(sol: &LocalModelSolution, t: f64, rho: f64) -> HermMatrix2 {
    let s = t.powf(2.0 / 3.0);
    let m = m_infty_lambda(&model_of(sol), s * rho);
    HermMatrix2::diag(s * m.a11, s * m.a22)
}

/// Interior branch `t^{2/3}G_λ(χ)M_λ(t^{2/3}ρ/χ)G_λ(χ)` written as the
/// exterior branch plus the conjugated deviation `M_λ − M_{∞,λ}`.
pub fn r_type_interior(sol: &LocalModelSolution, t: f64, rho: f64, chi: f64) -> HermMatrix2 {
    let s = t.powf(2.0 / 3.0);
    let ext = r_type_exterior(sol, t, rho);
    if chi <= 0.0 {
        return ext;
    }
    let r = s * rho / chi;
    let (dev, _) = sol.deviation_at_scaled(r);
    let g1 = chi.powf(-2.0 * sol.lambda - 0.5);
    let g2 = chi.powf(sol.lambda - 0.5);
    let d11 = dev.at(0, 0).re * g1 * g1;
    let d12 = dev.at(0, 1).re * g1 * g2;
    let d22 = dev.at(1, 1).re * g2 * g2;
    HermMatrix2::new(
        ext.a11 + s * d11,
        Complex64::new(s * d12, 0.0),
        ext.a22 + s * d22,
    )
}

/// The glued approximate solution at `ζ`.
///
/// R-type values are in the singular frame of [`r_type_singular_forms`];
/// β- and γ-type values are in the frames of [`local_higgs_forms`].
pub fn h_app_at(spec: &GluedMetricSpec, zeta: Complex64) -> Result<HermMatrix2> {
    spec.validate()?;
    let rho = zeta.norm();
    if rho > spec.radius * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "|ζ| = {rho} exceeds R = {}",
            spec.radius
        )));
    }
    Ok(h_app_unchecked(spec, rho))
}

fn h_app_unchecked(spec: &GluedMetricSpec, rho: f64) -> HermMatrix2 {
    let chi = cutoff_chi(rho, spec.radius);
    match (spec.zero_type, spec.model) {
        (ZeroType::R, Some(ModelHandle::Local(sol))) => {
            if chi <= 0.0 {
                r_type_exterior(sol, spec.t, rho)
            } else {
                r_type_interior(sol, spec.t, rho, chi)
            }
        }
        (zt, Some(ModelHandle::Painleve(p))) => {
            let u = if chi > 0.0 {
                chi * psi_p(p, spec.t, rho)
            } else {
                0.0
            };
            match zt {
                ZeroType::Beta => HermMatrix2::diag(rho.sqrt() * u.exp(), 1.0),
                _ => HermMatrix2::diag((-u).exp() / rho.sqrt(), 1.0),
            }
        }
        _ => unreachable!("validated spec"),
    }
}

/// The exact local solution at radius `ρ`, i.e. the interior branch with
/// `χ = 1`, in the frame of [`glued_frame_forms`].
pub fn exact_local_metric(spec: &GluedMetricSpec, rho: f64) -> Result<HermMatrix2> {
    spec.validate()?;
    if !(rho > 0.0) {
        return Err(Error::domain(format!("ρ must be positive, got {rho}")));
    }
    Ok(match (spec.zero_type, spec.model) {
        (ZeroType::R, Some(ModelHandle::Local(sol))) => r_type_interior(sol, spec.t, rho, 1.0),
        (zt, Some(ModelHandle::Painleve(p))) => {
            let s = if zt == ZeroType::Beta { 1.0 } else { -1.0 };
            let u = psi_p(p, spec.t, rho);
            HermMatrix2::diag(rho.powf(0.5 * s) * (s * u).exp(), 1.0)
        }
        _ => unreachable!("validated spec"),
    })
}

/// Relative sup-norm gap `‖H_int − H_ext‖/‖H_ext‖` at radius `ρ`, using the
/// interior formula with `χ = 1`.
pub fn interior_exterior_mismatch(spec: &GluedMetricSpec, rho: f64) -> Result<f64> {
    let int = exact_local_metric(spec, rho)?;
    let ext = match (spec.zero_type, spec.model) {
        (ZeroType::R, Some(ModelHandle::Local(sol))) => r_type_exterior(sol, spec.t, rho),
        (zt, _) => {
            let s = if zt == ZeroType::Beta { 1.0 } else { -1.0 };
            HermMatrix2::diag(rho.powf(0.5 * s), 1.0)
        }
    };
    Ok((int.to_cmat() - ext.to_cmat()).max_abs() / ext.max_abs())
}

/// One-sided jumps of the value and of the first two radial derivatives of
/// the glued field across `|ζ| = 2R/3`, measured with step `h`.
pub fn continuity_jumps(spec: &GluedMetricSpec, h: f64) -> Result<[f64; 3]> {
    spec.validate()?;
    let r0 = 2.0 * spec.radius / 3.0;
    let f = |r: f64| h_app_unchecked(spec, r).to_cmat();
    let left: Vec<CMat2> = (0..4).map(|k| f(r0 - h * k as f64)).collect();
    let right: Vec<CMat2> = (0..4).map(|k| f(r0 + h * k as f64)).collect();
    let scale = left[0].max_abs();
    let extrap = |v: &[CMat2]| v[1].scale_re(3.0) - v[2].scale_re(3.0) + v[3];
    let d1 = |v: &[CMat2]| (v[0].scale_re(3.0) - v[1].scale_re(4.0) + v[2]).scale_re(0.5 / h);
    let d2 = |v: &[CMat2]| {
        (v[0].scale_re(2.0) - v[1].scale_re(5.0) + v[2].scale_re(4.0) - v[3])
            .scale_re(1.0 / (h * h))
    };
    Ok([
        (extrap(&left) - extrap(&right)).max_abs() / scale,
        (d1(&left) + d1(&right)).max_abs() / scale,
        (d2(&left) - d2(&right)).max_abs() / scale,
    ])
}

/// Polar sampling of an annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    pub r_in: f64,
    pub r_out: f64,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Annulus {
    /// Default `256 × 128` grid on `[R/3, 2R/3]`.
    pub fn transition(radius: f64) -> Self {
        Annulus {
            r_in: radius / 3.0,
            r_out: 2.0 * radius / 3.0,
            n_radial: 256,
            n_angular: 128,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.r_in > 0.0 && self.r_out > self.r_in) {
            return Err(Error::domain(format!(
                "annulus needs 0 < r_in < r_out, got [{}, {}]",
                self.r_in, self.r_out
            )));
        }
        if self.n_radial < 2 || self.n_angular < 4 {
            return Err(Error::domain(
                "annulus grid needs ≥ 2 radial and ≥ 4 angular points",
            ));
        }
        Ok(())
    }

    /// Log-radial and angular spacings.
    pub fn steps(&self) -> (f64, f64) {
        (
            (self.r_out / self.r_in).ln() / (self.n_radial - 1) as f64,
            std::f64::consts::TAU / self.n_angular as f64,
        )
    }

    /// Sample radii, log-uniform.
    pub fn radii(&self) -> Vec<f64> {
        let (hs, _) = self.steps();
        (0..self.n_radial)
            .map(|i| self.r_in * (hs * i as f64).exp())
            .collect()
    }
}

/// One point of a residual field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSample {
    pub rho: f64,
    pub theta: f64,
    pub h11: f64,
    pub h22: f64,
    pub h12_re: f64,
    pub h12_im: f64,
    pub residual: f64,
}

/// Sampled residual of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualField {
    pub max_residual: f64,
    pub samples: Vec<ResidualSample>,
}

/// Finite-difference residual of the Hitchin operator on an annulus.
///
/// The operator is evaluated with the grid spacings and with twice the
/// spacings, and combined by Richardson extrapolation, which gives fourth
/// order consistency for smooth fields.
pub fn hitchin_residual_field<F>(
    field: &F,
    forms: &HiggsForms,
    t: f64,
    region: &Annulus,
) -> Result<ResidualField>
where
    F: Fn(f64, f64) -> Result<HermMatrix2> + Sync,
{
    region.validate()?;
    let (hs, dth) = region.steps();
    let radii = region.radii();
    use rayon::prelude::*;
    let rows: Vec<Result<Vec<ResidualSample>>> = radii
        .par_iter()
        .map(|&rho| {
            let mut out = Vec::with_capacity(region.n_angular);
            for j in 0..region.n_angular {
                let theta = dth * j as f64;
                let h = field(rho, theta)?;
                if !h.is_posdef() {
                    return Err(Error::domain(format!(
                        "field is not positive definite at ρ = {rho}, θ = {theta}"
                    )));
                }
                let residual = residual_at(field, forms, t, rho, theta, hs, dth)?;
                out.push(ResidualSample {
                    rho,
                    theta,
                    h11: h.a11,
                    h22: h.a22,
                    h12_re: h.a12.re,
                    h12_im: h.a12.im,
                    residual,
                });
            }
            Ok(out)
        })
        .collect();
    let mut samples = Vec::with_capacity(radii.len() * region.n_angular);
    for row in rows {
        samples.extend(row?);
    }
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    Ok(ResidualField {
        max_residual,
        samples,
    })
}

fn residual_at<F>(
    field: &F,
    forms: &HiggsForms,
    t: f64,
    rho: f64,
    theta: f64,
    hs: f64,
    dth: f64,
) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<HermMatrix2>,
{
    let failure = std::cell::RefCell::new(None);
    let cm = |r: f64, th: f64| match field(r, th) {
        Ok(h) => h.to_cmat(),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            CMat2::IDENTITY
        }
    };
    let fine = hitchin_operator_fd(&cm, forms, t, rho, theta, hs, dth);
    let coarse = hitchin_operator_fd(&cm, forms, t, rho, theta, 2.0 * hs, 2.0 * dth);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok((fine.scale_re(4.0) - coarse).scale_re(1.0 / 3.0).max_abs())
}

/// Residual of a glued metric on an annulus in its own frame.
pub fn glued_residual(spec: &GluedMetricSpec, region: &Annulus) -> Result<ResidualField> {
    spec.validate()?;
    let forms = glued_frame_forms(spec.zero_type);
    let field = |rho: f64, _theta: f64| Ok(h_app_unchecked(spec, rho));
    hitchin_residual_field(&field, &forms, spec.t, region)
}

/// One row of a residual sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub t: f64,
    /// Abscissa of the decay fit, `t^{2/3}` for R-type and `t` otherwise.
    pub t_pow: f64,
    pub max_residual: f64,
}

/// Result of [`residual_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub zero_type: ZeroType,
    pub rows: Vec<SweepRow>,
    /// Fit of `log max_residual` against `t_pow`.
    pub fit: LinearFit,
}

/// Decay-fit abscissa for a zero type.
pub fn decay_abscissa(zero_type: ZeroType, t: f64) -> f64 {
    match zero_type {
        ZeroType::R => t.powf(2.0 / 3.0),
        _ => t,
    }
}

/// Maximum glued residual over `t_list` with a log-linear decay fit.
pub fn residual_sweep(
    zero_type: ZeroType,
    t_list: &[f64],
    radius: f64,
    model: ModelHandle<'_>,
    region: &Annulus,
) -> Result<SweepResult> {
    if t_list.len() < 2 {
        return Err(Error::domain(
            "residual sweep needs at least two values of t",
        ));
    }
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let spec = match model {
            ModelHandle::Local(sol) => GluedMetricSpec::r_type(sol, t, radius),
            ModelHandle::Painleve(p) => GluedMetricSpec::painleve_type(zero_type, p, t, radius),
        };
        if spec.zero_type != zero_type {
            return Err(Error::Config(format!(
                "{zero_type}-type sweep given an R-type model"
            )));
        }
        let res = glued_residual(&spec, region)?;
        rows.push(SweepRow {
            t,
            t_pow: decay_abscissa(zero_type, t),
            max_residual: res.max_residual,
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.t_pow).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.max_residual.ln()).collect();
    let fit = linear_fit(&x, &y)?;
    Ok(SweepResult {
        zero_type,
        rows,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localmodel::{default_painleve, solve_local_model};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn model(lambda: f64) -> &'static LocalModelSolution {
        static A: OnceLock<LocalModelSolution> = OnceLock::new();
        static B: OnceLock<LocalModelSolution> = OnceLock::new();
        let cell = if lambda == 0.0 { &A } else { &B };
        cell.get_or_init(|| solve_local_model(1.0, lambda, 40.0, 1024, 1e-10).unwrap())
    }

    #[test]
    fn cutoff_examples() {
        assert_eq!(cutoff_chi(0.0, 1.0), 1.0);
        assert_eq!(cutoff_chi(1.0, 1.0), 0.0);
        assert!((cutoff_chi(0.5, 1.0) - 0.5).abs() < 1e-15);
        assert_eq!(cutoff_chi(0.2, 0.9), 1.0);
    }

    proptest! {
        #[test]
        fn cutoff_is_monotone_with_scaled_derivatives(a in 0.0f64..2.0, b in 0.0f64..2.0, r in 0.1f64..10.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(cutoff_chi(lo * r, r) >= cutoff_chi(hi * r, r));
            let (_, d, dd) = cutoff_chi_derivs(a * r, r);
            prop_assert!(d.abs() * r <= 5.7);
            prop_assert!(dd.abs() * r * r <= 52.0);
        }
    }

    #[test]
    fn cutoff_derivatives_match_differences() {
        let r = 1.7;
        for k in 1..20 {
            let rho = r * (0.3 + 0.02 * k as f64);
            let h = 1e-5;
            let (_, d, dd) = cutoff_chi_derivs(rho, r);
            let fd = (cutoff_chi(rho + h, r) - cutoff_chi(rho - h, r)) / (2.0 * h);
            let fdd = (cutoff_chi(rho + h, r) - 2.0 * cutoff_chi(rho, r) + cutoff_chi(rho - h, r))
                / (h * h);
            assert!((d - fd).abs() < 1e-7);
            assert!((dd - fdd).abs() < 1e-3);
        }
    }

    #[test]
    fn forms_compose_to_zeta() {
        let z = Complex64::new(0.3, 0.8);
        for zt in ZeroType::ALL {
            assert!((local_higgs_forms(zt).q_at(z) - z).norm() < 1e-15, "{zt}");
        }
        assert!((r_type_singular_forms().q_at(z) - z).norm() < 1e-15);
    }

    #[test]
    fn decoupled_examples() {
        let h = decoupled_local(1.0, 1.0).unwrap();
        assert_eq!(h, HermMatrix2::identity());
        let h = decoupled_local(2.5, 0.4).unwrap();
        assert!((h.det() - 1.0 / (2.5 * 0.16)).abs() < 1e-14);
        assert!(decoupled_local(0.0, 1.0).unwrap_err().is_domain());
    }

    #[test]
    fn decoupled_reproduces_scaled_asymptote() {
        let m = AsymptoticModel::new(0.1, 5.3).unwrap();
        let (t, rho) = (6.0f64, 0.7f64);
        let s = t.powf(2.0 / 3.0);
        let inf = m_infty_lambda(&m, s * rho);
        let got = decoupled_local(1.0 / m.mu(s * rho), rho).unwrap();
        assert!((got.a11 - s * inf.a11).abs() < 1e-13 * got.a11);
        assert!((got.a22 - s * inf.a22).abs() < 1e-13 * got.a22);
    }

    #[test]
    fn gamma_type_exterior_is_exact() {
        let p = default_painleve();
        let spec = GluedMetricSpec::painleve_type(ZeroType::Gamma, p, 5.0, 1.0);
        let h = h_app_at(&spec, Complex64::new(0.8, 0.0)).unwrap();
        assert_eq!(h, HermMatrix2::diag(0.8f64.powf(-0.5), 1.0));
    }

    #[test]
    fn beta_and_gamma_are_inverse() {
        let p = default_painleve();
        for k in 1..10 {
            let z = Complex64::from_polar(0.1 * k as f64, 0.3);
            let b = h_app_at(
                &GluedMetricSpec::painleve_type(ZeroType::Beta, p, 3.0, 1.0),
                z,
            )
            .unwrap();
            let g = h_app_at(
                &GluedMetricSpec::painleve_type(ZeroType::Gamma, p, 3.0, 1.0),
                z,
            )
            .unwrap();
            assert!((b.to_cmat() * g.to_cmat() - CMat2::IDENTITY).max_abs() < 1e-14);
        }
    }

    #[test]
    fn missing_model_is_config_error() {
        let spec = GluedMetricSpec {
            zero_type: ZeroType::R,
            t: 1.0,
            radius: 1.0,
            lambda: Some(0.0),
            model: None,
        };
        assert!(matches!(
            h_app_at(&spec, Complex64::new(0.1, 0.0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn r_type_branches_agree_at_outer_circle() {
        let sol = model(0.1);
        for t in [1.0, 4.0, 16.0] {
            let spec = GluedMetricSpec::r_type(sol, t, 1.0);
            let ext = r_type_exterior(sol, t, 2.0 / 3.0);
            let int = h_app_at(&spec, Complex64::new(2.0 / 3.0, 0.0)).unwrap();
            assert!((int.to_cmat() - ext.to_cmat()).max_abs() <= 1e-12 * ext.max_abs());
            let jumps = continuity_jumps(&spec, 1e-3).unwrap();
            assert!(jumps.iter().all(|j| *j < 1e-3), "{jumps:?}");
        }
    }

    #[test]
    fn glued_fields_are_positive() {
        let sol = model(0.1);
        let p = default_painleve();
        for k in 1..=40 {
            let z = Complex64::new(0.025 * k as f64, 0.0);
            for spec in [
                GluedMetricSpec::r_type(sol, 8.0, 1.0),
                GluedMetricSpec::painleve_type(ZeroType::Beta, p, 8.0, 1.0),
                GluedMetricSpec::painleve_type(ZeroType::Gamma, p, 8.0, 1.0),
            ] {
                assert!(h_app_at(&spec, z).unwrap().is_posdef());
            }
        }
    }

    #[test]
    fn exterior_branch_has_fourth_order_residual() {
        let sol = model(0.1);
        let forms = r_type_singular_forms();
        let field = |rho: f64, _th: f64| Ok(r_type_exterior(sol, 4.0, rho));
        let mut region = Annulus::transition(1.0);
        region.n_radial = 64;
        region.n_angular = 8;
        let coarse = hitchin_residual_field(&field, &forms, 4.0, &region)
            .unwrap()
            .max_residual;
        region.n_radial = 127;
        let fine = hitchin_residual_field(&field, &forms, 4.0, &region)
            .unwrap()
            .max_residual;
        assert!(fine < 1e-6, "{fine}");
        assert!(coarse / fine > 8.0, "{coarse} {fine}");
    }

    #[test]
    fn interior_model_solves_equation() {
        let sol = model(0.1);
        let forms = r_type_singular_forms();
        let field = |rho: f64, _th: f64| Ok(r_type_interior(sol, 4.0, rho, 1.0));
        let region = Annulus {
            r_in: 0.2,
            r_out: 0.9,
            n_radial: 64,
            n_angular: 8,
        };
        let res = hitchin_residual_field(&field, &forms, 4.0, &region).unwrap();
        let scale = res
            .samples
            .iter()
            .map(|s| s.h11.max(s.h22))
            .fold(0.0, f64::max);
        assert!(
            res.max_residual < 1e-5 * scale * 16.0,
            "{}",
            res.max_residual
        );
    }

    #[test]
    fn painleve_interior_solves_equation() {
        let p = default_painleve();
        for zt in [ZeroType::Beta, ZeroType::Gamma] {
            let field = |rho: f64, _th: f64| {
                let u = psi_p(p, 2.0, rho);
                Ok(if zt == ZeroType::Beta {
                    HermMatrix2::diag(rho.sqrt() * u.exp(), 1.0)
                } else {
                    HermMatrix2::diag((-u).exp() / rho.sqrt(), 1.0)
                })
            };
            let region = Annulus {
                r_in: 0.2,
                r_out: 0.9,
                n_radial: 64,
                n_angular: 8,
            };
            let res = hitchin_residual_field(&field, &local_higgs_forms(zt), 2.0, &region).unwrap();
            assert!(res.max_residual < 1e-4, "{zt}: {}", res.max_residual);
        }
    }

    #[test]
    fn residual_detects_non_posdef() {
        let field = |_r: f64, _th: f64| Ok(HermMatrix2::diag(-1.0, 1.0));
        let region = Annulus::transition(1.0);
        let err = hitchin_residual_field(&field, &HiggsForms::zero(), 1.0, &region).unwrap_err();
        assert!(err.is_domain());
    }

    #[test]
    fn zero_type_round_trip() {
        for zt in ZeroType::ALL {
            assert_eq!(zt.to_string().parse::<ZeroType>().unwrap(), zt);
        }
        assert!("delta".parse::<ZeroType>().is_err());
    }
}
