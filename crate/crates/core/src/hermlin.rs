//! Fixed-size Hermitian linear algebra.
//!
//! [`CMat2`] and [`CMat3`] are plain complex matrices; [`HermMatrix2`] and
//! [`HermMatrix3`] are Hermitian by construction. The matrix absolute value
//! `|M|` used throughout the crate is the maximum entry modulus
//! ([`CMat2::max_abs`]).

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A general complex 2×2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2(pub [[Complex64; 2]; 2]);

impl CMat2 {
    /// The zero matrix.
    pub const ZERO: CMat2 = CMat2([[ZERO, ZERO], [ZERO, ZERO]]);
    /// The identity matrix.
    pub const IDENTITY: CMat2 = CMat2([[ONE, ZERO], [ZERO, ONE]]);

    /// Builds a matrix from its four entries.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        CMat2([[a, b], [c, d]])
    }

    /// Builds a real matrix.
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        CMat2::new(a.into(), b.into(), c.into(), d.into())
    }

    /// Diagonal matrix.
    pub fn diag(a: Complex64, d: Complex64) -> Self {
        CMat2::new(a, ZERO, ZERO, d)
    }

    /// Scalar multiple of the identity.
    pub fn scalar(s: Complex64) -> Self {
        CMat2::diag(s, s)
    }

    /// Entry `(i, j)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    /// Determinant.
    #[inline]
    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Trace.
    #[inline]
    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    /// Inverse by the adjugate formula. No singularity check.
    #[inline]
    pub fn inv(&self) -> CMat2 {
        let d = self.det();
        let [[a, b], [c, e]] = self.0;
        CMat2([[e / d, -b / d], [-c / d, a / d]])
    }

    /// Conjugate transpose.
    #[inline]
    pub fn adjoint(&self) -> CMat2 {
        let [[a, b], [c, d]] = self.0;
        CMat2([[a.conj(), c.conj()], [b.conj(), d.conj()]])
    }

    /// Transpose without conjugation.
    #[inline]
    pub fn transpose(&self) -> CMat2 {
        let [[a, b], [c, d]] = self.0;
        CMat2([[a, c], [b, d]])
    }

    /// Multiplies every entry by `s`.
    #[inline]
    pub fn scale(&self, s: Complex64) -> CMat2 {
        let [[a, b], [c, d]] = self.0;
        CMat2([[a * s, b * s], [c * s, d * s]])
    }

    /// Multiplies every entry by a real factor.
    #[inline]
    pub fn scale_re(&self, s: f64) -> CMat2 {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Maximum entry modulus, the matrix absolute value `|M|`.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Commutator `[self, other]`.
    #[inline]
    pub fn commutator(&self, other: &CMat2) -> CMat2 {
        *self * *other - *other * *self
    }

    /// Anticommutator `self·other + other·self`.
    #[inline]
    pub fn anticommutator(&self, other: &CMat2) -> CMat2 {
        *self * *other + *other * *self
    }

    /// Matrix exponential by the closed form for 2×2 matrices.
    ///
    /// The formula is analytic in the entries, so it is safe under
    /// complex-step differentiation.
    pub fn exp(&self) -> CMat2 {
        let m = self.trace() * 0.5;
        let n = *self - CMat2::scalar(m);
        let q = -n.det();
        let (c, s) = cosh_sinhc_sqrt(q);
        (CMat2::scalar(c) + n.scale(s)).scale(m.exp())
    }

    /// Hermitian part `(M + M*)/2`.
    pub fn hermitian_part(&self) -> CMat2 {
        (*self + self.adjoint()).scale_re(0.5)
    }

    /// Largest entry modulus of `M − M*`.
    pub fn hermitian_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }
}

/// Returns `(cosh √q, sinh √q / √q)` as entire functions of `q`.
pub fn cosh_sinhc_sqrt(q: Complex64) -> (Complex64, Complex64) {
    if q.norm() < 1e-2 {
        let mut c = ONE;
        let mut s = ONE;
        let mut term_c = ONE;
        let mut term_s = ONE;
        for k in 1..12 {
            let kf = k as f64;
            term_c = term_c * q / ((2.0 * kf - 1.0) * (2.0 * kf));
            term_s = term_s * q / ((2.0 * kf) * (2.0 * kf + 1.0));
            c += term_c;
            s += term_s;
        }
        (c, s)
    } else {
        let r = q.sqrt();
        (r.cosh(), r.sinh() / r)
    }
}

impl Add for CMat2 {
    type Output = CMat2;
    #[inline]
    fn add(self, o: CMat2) -> CMat2 {
        CMat2([
            [self.0[0][0] + o.0[0][0], self.0[0][1] + o.0[0][1]],
            [self.0[1][0] + o.0[1][0], self.0[1][1] + o.0[1][1]],
        ])
    }
}

impl Sub for CMat2 {
    type Output = CMat2;
    #[inline]
    fn sub(self, o: CMat2) -> CMat2 {
        CMat2([
            [self.0[0][0] - o.0[0][0], self.0[0][1] - o.0[0][1]],
            [self.0[1][0] - o.0[1][0], self.0[1][1] - o.0[1][1]],
        ])
    }
}

impl Neg for CMat2 {
    type Output = CMat2;
    #[inline]
    fn neg(self) -> CMat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for CMat2 {
    type Output = CMat2;
    #[inline]
    fn mul(self, o: CMat2) -> CMat2 {
        let a = &self.0;
        let b = &o.0;
        CMat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// A general complex 3×3 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat3(pub [[Complex64; 3]; 3]);

impl CMat3 {
    /// The identity matrix.
    pub fn identity() -> Self {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        CMat3(m)
    }

    /// Matrix product.
    pub fn mul(&self, o: &CMat3) -> CMat3 {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        CMat3(m)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat3 {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                *e = self.0[j][i].conj();
            }
        }
        CMat3(m)
    }

    /// Trace.
    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Determinant by cofactor expansion.
    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by the adjugate formula. No singularity check.
    pub fn inv(&self) -> CMat3 {
        let m = &self.0;
        let d = self.det();
        let mut r = [[ZERO; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, e) in row.iter_mut().enumerate() {
                let (a0, a1) = ((j + 1) % 3, (j + 2) % 3);
                let (b0, b1) = ((i + 1) % 3, (i + 2) % 3);
                *e = (m[a0][b0] * m[a1][b1] - m[a0][b1] * m[a1][b0]) / d;
            }
        }
        CMat3(r)
    }

    /// Maximum entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// A 2×2 Hermitian matrix `[[a11, a12], [conj(a12), a22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermMatrix2 {
    pub a11: f64,
    pub a22: f64,
    pub a12: Complex64,
}

impl HermMatrix2 {
    /// Builds a Hermitian matrix from its independent entries.
    pub fn new(a11: f64, a12: Complex64, a22: f64) -> Self {
        HermMatrix2 { a11, a22, a12 }
    }

    /// Real diagonal matrix.
    pub fn diag(a11: f64, a22: f64) -> Self {
        HermMatrix2::new(a11, ZERO, a22)
    }

    /// The identity.
    pub fn identity() -> Self {
        HermMatrix2::diag(1.0, 1.0)
    }

    /// Accepts a matrix whose Hermitian defect is at most `tol` relative to
    /// its size and returns its Hermitian part.
    pub fn from_cmat(m: &CMat2, tol: f64) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > tol * m.max_abs().max(1.0) {
            return Err(Error::domain(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(Self::from_cmat_unchecked(m))
    }

    /// Hermitian part of `m` without any check.
    pub fn from_cmat_unchecked(m: &CMat2) -> Self {
        HermMatrix2 {
            a11: m.0[0][0].re,
            a22: m.0[1][1].re,
            a12: (m.0[0][1] + m.0[1][0].conj()) * 0.5,
        }
    }

    /// Dense representation.
    pub fn to_cmat(&self) -> CMat2 {
        CMat2::new(self.a11.into(), self.a12, self.a12.conj(), self.a22.into())
    }

    /// Determinant (real).
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12.norm_sqr()
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    /// Maximum entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.a11.abs().max(self.a22.abs()).max(self.a12.norm())
    }

    /// Positive-definiteness predicate: `a11 > 0` and `det > 0`.
    pub fn is_posdef(&self) -> bool {
        self.a11 > 0.0 && self.det() > 0.0
    }

    /// Rejects matrices that are not positive definite or whose determinant
    /// is below machine precision relative to their scale.
    pub fn check_posdef(&self) -> Result<()> {
        let scale = self.max_abs();
        let det = self.det();
        if !(self.a11 > 0.0) || !(det > f64::EPSILON * scale * scale) {
            return Err(Error::domain(format!(
                "matrix not positive definite (a11 = {:e}, det = {:e})",
                self.a11, det
            )));
        }
        Ok(())
    }

    /// Inverse, which is again Hermitian.
    pub fn inv(&self) -> HermMatrix2 {
        let d = self.det();
        HermMatrix2::new(self.a22 / d, -self.a12 / d, self.a11 / d)
    }

    /// `self · x · self` style congruence `P* self P` for a general `P`.
    pub fn congruence(&self, p: &CMat2) -> HermMatrix2 {
        HermMatrix2::from_cmat_unchecked(&(p.adjoint() * self.to_cmat() * *p))
    }
}

/// A 3×3 Hermitian matrix stored densely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermMatrix3(pub CMat3);

impl HermMatrix3 {
    /// Accepts a dense matrix after a Hermitian check.
    pub fn from_cmat(m: CMat3, tol: f64) -> Result<Self> {
        let mut defect: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                defect = defect.max((m.0[i][j] - m.0[j][i].conj()).norm());
            }
        }
        if defect > tol * m.max_abs().max(1.0) {
            return Err(Error::domain(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(HermMatrix3(m))
    }

    /// The block form `diag(det K⁻¹, K)` built from a 2×2 metric `K`.
    pub fn block_form(k: &HermMatrix2) -> Self {
        let mut m = [[ZERO; 3]; 3];
        m[0][0] = Complex64::new(1.0 / k.det(), 0.0);
        let kc = k.to_cmat();
        for i in 0..2 {
            for j in 0..2 {
                m[i + 1][j + 1] = kc.0[i][j];
            }
        }
        HermMatrix3(CMat3(m))
    }

    /// Positive definiteness through leading principal minors.
    pub fn is_posdef(&self) -> bool {
        let m = &self.0 .0;
        let d1 = m[0][0].re;
        let d2 = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
        let d3 = self.0.det().re;
        d1 > 0.0 && d2 > 0.0 && d3 > 0.0
    }

    /// Determinant (real).
    pub fn det(&self) -> f64 {
        self.0.det().re
    }
}

/// H-weighted norm `sqrt(tr(A H⁻¹ A* H))` for 2×2 matrices.
pub fn hnorm(a: &CMat2, h: &HermMatrix2) -> Result<f64> {
    h.check_posdef()?;
    let hc = h.to_cmat();
    let v = (*a * h.inv().to_cmat() * a.adjoint() * hc).trace().re;
    Ok(v.max(0.0).sqrt())
}

/// H-weighted norm `sqrt(tr(A H⁻¹ A* H))` for 3×3 matrices.
pub fn hnorm3(a: &CMat3, h: &HermMatrix3) -> Result<f64> {
    if !h.is_posdef() {
        return Err(Error::domain("metric not positive definite"));
    }
    let v = a.mul(&h.0.inv()).mul(&a.adjoint()).mul(&h.0).trace().re;
    Ok(v.max(0.0).sqrt())
}

/// Positive square root by the trace/determinant closed form
/// `B = (A + √det A · I) / √(tr A + 2√det A)`.
pub fn psd_sqrt(a: &HermMatrix2) -> Result<HermMatrix2> {
    a.check_posdef()?;
    Ok(psd_sqrt_unchecked(a))
}

/// [`psd_sqrt`] without the positivity check.
#[inline]
pub fn psd_sqrt_unchecked(a: &HermMatrix2) -> HermMatrix2 {
    let s = a.det().sqrt();
    let n = (a.trace() + 2.0 * s).sqrt();
    HermMatrix2::new((a.a11 + s) / n, a.a12 / n, (a.a22 + s) / n)
}

/// Eigenvalues `(α₁, α₂)` with `0 < α₁ ≤ α₂`.
pub fn eig2(h: &HermMatrix2) -> Result<(f64, f64)> {
    h.check_posdef()?;
    let tr = h.trace();
    let half_gap = (0.25 * (h.a11 - h.a22).powi(2) + h.a12.norm_sqr()).sqrt();
    let a2 = 0.5 * tr + half_gap;
    let a1 = h.det() / a2;
    Ok((a1, a2))
}

/// The ratio `|A|²_H / |A|²_I`, which lies in `[α₁/α₂, α₂/α₁]`.
pub fn comparison_ratio(a: &CMat2, h: &HermMatrix2) -> Result<f64> {
    let num = hnorm(a, h)?.powi(2);
    let den = a.frobenius().powi(2);
    if den == 0.0 {
        return Err(Error::domain("zero matrix has no comparison ratio"));
    }
    Ok(num / den)
}

/// Measured constants of the determinant Lipschitz bounds: returns
/// `|det A − det B| / (M|A−B|)` and `|(det A)A − (det B)B| / (M²|A−B|)`.
pub fn matrest_ratios(a: &CMat2, b: &CMat2, m: f64) -> (f64, f64) {
    let diff = (*a - *b).max_abs();
    if diff == 0.0 {
        return (0.0, 0.0);
    }
    let r1 = (a.det() - b.det()).norm() / (m * diff);
    let r2 = (a.scale(a.det()) - b.scale(b.det())).max_abs() / (m * m * diff);
    (r1, r2)
}

/// Measured constant of the square-root Lipschitz bound:
/// `|A^{1/2} − B^{1/2}| / |A − B|`.
pub fn boundsqrt_ratio(a: &HermMatrix2, b: &HermMatrix2) -> Result<f64> {
    let sa = psd_sqrt(a)?;
    let sb = psd_sqrt(b)?;
    let diff = (a.to_cmat() - b.to_cmat()).max_abs();
    if diff == 0.0 {
        return Ok(0.0);
    }
    Ok((sa.to_cmat() - sb.to_cmat()).max_abs() / diff)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hnorm_identity_cases() {
        let i = HermMatrix2::identity();
        assert!((hnorm(&CMat2::IDENTITY, &i).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let a = CMat2::real(2.0, 0.0, 0.0, 0.0);
        assert!((hnorm(&a, &i).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sqrt_examples() {
        let b = psd_sqrt(&HermMatrix2::identity()).unwrap();
        assert!((b.a11 - 1.0).abs() < 1e-15 && (b.a22 - 1.0).abs() < 1e-15);
        let b = psd_sqrt(&HermMatrix2::diag(4.0, 9.0)).unwrap();
        assert!((b.a11 - 2.0).abs() < 1e-14 && (b.a22 - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eig_examples() {
        assert_eq!(eig2(&HermMatrix2::diag(1.0, 1.0)).unwrap(), (1.0, 1.0));
        let (a, b) = eig2(&HermMatrix2::diag(1.0, 4.0)).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 4.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(psd_sqrt(&HermMatrix2::diag(1.0, 0.0)).is_err());
        assert!(hnorm(&CMat2::IDENTITY, &HermMatrix2::diag(-1.0, 1.0)).is_err());
        assert!(eig2(&HermMatrix2::new(1.0, c(1.0, 0.0), 1.0)).is_err());
    }

    #[test]
    fn exp_matches_series() {
        let m = CMat2::new(c(0.3, 0.1), c(-0.2, 0.5), c(0.7, -0.1), c(-0.4, 0.2));
        let mut term = CMat2::IDENTITY;
        let mut sum = CMat2::IDENTITY;
        for k in 1..30 {
            term = (term * m).scale_re(1.0 / k as f64);
            sum = sum + term;
        }
        assert!((m.exp() - sum).max_abs() < 1e-14);
        let tiny = CMat2::real(1e-9, 2e-9, -3e-9, 0.0);
        assert!((tiny.exp() - (CMat2::IDENTITY + tiny)).max_abs() < 1e-17);
    }

    #[test]
    fn block_form_has_unit_determinant() {
        let k = HermMatrix2::new(2.0, c(0.3, -0.4), 1.5);
        let b = HermMatrix3::block_form(&k);
        assert!((b.det() - 1.0).abs() < 1e-14);
        assert!(b.is_posdef());
    }

    #[test]
    fn inverse_3x3() {
        let k = HermMatrix3::block_form(&HermMatrix2::new(2.0, c(0.3, -0.4), 1.5));
        let p = k.0.mul(&k.0.inv());
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - e).norm() < 1e-14);
            }
        }
    }

    fn posdef() -> impl Strategy<Value = HermMatrix2> {
        (
            0.1f64..5.0,
            0.1f64..5.0,
            -1.0f64..1.0,
            -1.0f64..1.0,
            0.05f64..0.95,
        )
            .prop_map(|(a, d, re, im, frac)| {
                let z = c(re, im);
                let z = if z.norm() == 0.0 {
                    c(1.0, 0.0)
                } else {
                    z / z.norm()
                };
                HermMatrix2::new(a, z * (frac * (a * d).sqrt()), d)
            })
    }

    fn cmat() -> impl Strategy<Value = CMat2> {
        proptest::collection::vec(-2.0f64..2.0, 8)
            .prop_map(|v| CMat2::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7])))
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn hnorm_matches_cholesky_oracle(h in posdef(), a in cmat()) {
            let l11 = h.a11.sqrt();
            let l21 = h.a12.conj() / l11;
            let l22 = (h.a22 - l21.norm_sqr()).sqrt();
            let l = CMat2::new(c(l11, 0.0), ZERO, l21, c(l22, 0.0));
            let u = l.adjoint().inv();
            let lhs = hnorm(&a, &h).unwrap();
            let rhs = hnorm(&(u.inv() * a * u), &HermMatrix2::identity()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs));
        }

        #[test]
        fn hnorm_is_a_norm(h in posdef(), a in cmat(), b in cmat(), s in -3.0f64..3.0) {
            let na = hnorm(&a, &h).unwrap();
            let nb = hnorm(&b, &h).unwrap();
            prop_assert!(hnorm(&(a + b), &h).unwrap() <= na + nb + 1e-12);
            prop_assert!((hnorm(&a.scale_re(s), &h).unwrap() - s.abs() * na).abs() < 1e-10 * (1.0 + na));
        }

        #[test]
        fn sqrt_squares_back(a in posdef()) {
            let b = psd_sqrt(&a).unwrap();
            prop_assert!(b.is_posdef());
            let sq = b.to_cmat() * b.to_cmat();
            prop_assert!((sq - a.to_cmat()).max_abs() <= 1e-12 * a.max_abs().max(1.0));
            prop_assert!((b.a12 - a.a12 / b.trace()).norm() <= 1e-12);
        }

        #[test]
        fn comparison_ratio_within_eigen_bounds(h in posdef(), a in cmat()) {
            let (a1, a2) = eig2(&h).unwrap();
            prop_assume!(a.frobenius() > 1e-6);
            let r = comparison_ratio(&a, &h).unwrap();
            prop_assert!(r >= a1 / a2 * (1.0 - 1e-12) && r <= a2 / a1 * (1.0 + 1e-12));
        }

        #[test]
        fn sqrt_monotone_on_diagonals(a in 0.01f64..10.0, b in 0.01f64..10.0, da in 0.0f64..5.0, db in 0.0f64..5.0) {
            let s1 = psd_sqrt(&HermMatrix2::diag(a, b)).unwrap();
            let s2 = psd_sqrt(&HermMatrix2::diag(a + da, b + db)).unwrap();
            prop_assert!(s2.a11 >= s1.a11 - 1e-14 && s2.a22 >= s1.a22 - 1e-14);
        }
    }
}
