//! Cylinder functions of orders 0 and 1.
//!
//! `J` and `Y` use the ascending series below 8, Miller's backward recurrence
//! with Neumann sums on `[8, 25)` and the Hankel expansion beyond. The
//! modified functions are returned in exponentially scaled form
//! (`e^{-x} I_n(x)` and `e^{x} K_n(x)`) so that callers never overflow.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_2_PI, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_MAX: f64 = 8.0;
const HANKEL_MIN: f64 = 25.0;

/// Selector for [`bessel_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselKind {
    J0,
    J1,
    Y0,
    Y1,
    I0,
    I1,
}

/// Unscaled cylinder function value.
pub fn bessel_eval(kind: BesselKind, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("non-finite Bessel argument {x}")));
    }
    match kind {
        BesselKind::J0 => Ok(j0(x.abs())),
        BesselKind::J1 => Ok(x.signum() * j1(x.abs())),
        BesselKind::Y0 | BesselKind::Y1 if x <= 0.0 => Err(Error::domain(format!(
            "Y-kind Bessel function needs x > 0, got {x}"
        ))),
        BesselKind::Y0 => Ok(jy(x).2),
        BesselKind::Y1 => Ok(jy(x).3),
        BesselKind::I0 => Ok(i0_scaled(x.abs()) * x.abs().exp()),
        BesselKind::I1 => Ok(x.signum() * i1_scaled(x.abs()) * x.abs().exp()),
    }
}

/// `J0(x)` for `x ≥ 0`.
pub fn j0(x: f64) -> f64 {
    if x < SERIES_MAX {
        series_j(x).0
    } else {
        jy(x).0
    }
}

/// `J1(x)` for `x ≥ 0`.
pub fn j1(x: f64) -> f64 {
    if x < SERIES_MAX {
        series_j(x).1
    } else {
        jy(x).1
    }
}

/// `(J0, J1, Y0, Y1)` at `x > 0`.
pub fn jy(x: f64) -> (f64, f64, f64, f64) {
    if x < SERIES_MAX {
        let (j0, j1) = series_j(x);
        let (y0, y1) = series_y(x, j0, j1);
        (j0, j1, y0, y1)
    } else if x < HANKEL_MIN {
        miller_jy(x)
    } else {
        hankel_jy(x)
    }
}

fn series_j(x: f64) -> (f64, f64) {
    let q = -0.25 * x * x;
    let mut t0 = 1.0;
    let mut t1 = 0.5 * x;
    let mut s0 = t0;
    let mut s1 = t1;
    for k in 1..60 {
        let kf = k as f64;
        t0 *= q / (kf * kf);
        t1 *= q / (kf * (kf + 1.0));
        s0 += t0;
        s1 += t1;
        if t0.abs() < 1e-18 * s0.abs().max(1e-300) && t1.abs() < 1e-18 * s1.abs().max(1e-300) {
            break;
        }
    }
    (s0, s1)
}

fn series_y(x: f64, j0: f64, j1: f64) -> (f64, f64) {
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let q = -0.25 * x * x;
    // Y0: (2/π)[(ln(x/2)+γ)J0 − Σ_{k≥1} (−x²/4)^k H_k/(k!)²]
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut sum0 = 0.0;
    // Y1: (2/π)(ln(x/2)+γ)J1 − 2/(πx) − (1/π)Σ_{k≥0} (−x²/4)^k (H_k + H_{k+1}) (x/2)/(k!(k+1)!)
    let mut term1 = 0.5 * x;
    let mut sum1 = term1;
    for k in 1..60 {
        let kf = k as f64;
        term *= q / (kf * kf);
        harmonic += 1.0 / kf;
        sum0 += term * harmonic;
        term1 *= q / (kf * (kf + 1.0));
        sum1 += term1 * (2.0 * harmonic + 1.0 / (kf + 1.0));
        if term.abs() * harmonic < 1e-18 && term1.abs() * harmonic < 1e-18 {
            break;
        }
    }
    let y0 = FRAC_2_PI * (lg * j0 - sum0);
    let y1 = FRAC_2_PI * lg * j1 - FRAC_2_PI / x - sum1 / PI;
    (y0, y1)
}

fn miller_jy(x: f64) -> (f64, f64, f64, f64) {
    let start = (x as usize + 40) & !1usize;
    let mut j = vec![0.0f64; start + 2];
    j[start + 1] = 0.0;
    j[start] = 1e-30;
    for n in (1..=start).rev() {
        j[n - 1] = 2.0 * n as f64 / x * j[n] - j[n + 1];
        if j[n - 1].abs() > 1e250 {
            for v in j.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * (1..=start / 2).map(|k| j[2 * k]).sum::<f64>();
    for v in j.iter_mut() {
        *v /= norm;
    }
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let mut s = 0.0;
    let mut ds = 0.0;
    for k in 1..start / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s += sign * j[2 * k] / kf;
        ds += sign * (j[2 * k - 1] - j[2 * k + 1]) / (2.0 * kf);
    }
    let y0 = FRAC_2_PI * lg * j[0] - 2.0 * FRAC_2_PI * s;
    let dy0 = FRAC_2_PI * (j[0] / x - lg * j[1]) - 2.0 * FRAC_2_PI * ds;
    (j[0], j[1], y0, -dy0)
}

fn hankel_pq(nu: f64, x: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        a *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        if a.abs() > last || a == 0.0 {
            break;
        }
        last = a.abs();
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    (p, q)
}

fn hankel_jy(x: f64) -> (f64, f64, f64, f64) {
    let amp = (FRAC_2_PI / x).sqrt();
    let (p0, q0) = hankel_pq(0.0, x);
    let (p1, q1) = hankel_pq(1.0, x);
    let c0 = x - 0.25 * PI;
    let c1 = x - 0.75 * PI;
    let (s0, k0) = c0.sin_cos();
    let (s1, k1) = c1.sin_cos();
    (
        amp * (p0 * k0 - q0 * s0),
        amp * (p1 * k1 - q1 * s1),
        amp * (p0 * s0 + q0 * k0),
        amp * (p1 * s1 + q1 * k1),
    )
}

fn i_series(nu: u32, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
    let mut sum = term;
    let n = nu as f64;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + n));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn i_asymptotic_scaled(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut sum = 1.0;
    let mut a = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        a *= -(mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
        sum += a;
        if a.abs() < 1e-17 {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// `e^{-x} I0(x)` for `x ≥ 0`.
pub fn i0_scaled(x: f64) -> f64 {
    if x <= 20.0 {
        i_series(0, x) * (-x).exp()
    } else {
        i_asymptotic_scaled(0.0, x)
    }
}

/// `e^{-x} I1(x)` for `x ≥ 0`.
pub fn i1_scaled(x: f64) -> f64 {
    if x <= 20.0 {
        i_series(1, x) * (-x).exp()
    } else {
        i_asymptotic_scaled(1.0, x)
    }
}

fn k_scaled(nu: f64, x: f64) -> f64 {
    let h = 0.1;
    let mut sum = 0.5;
    let mut k = 1;
    loop {
        let u = k as f64 * h;
        let v = (-x * (u.cosh() - 1.0)).exp() * (nu * u).cosh();
        sum += v;
        if v < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * h
}

/// `e^{x} K0(x)` for `x > 0`.
pub fn k0_scaled(x: f64) -> f64 {
    k_scaled(0.0, x)
}

/// `e^{x} K1(x)` for `x > 0`.
pub fn k1_scaled(x: f64) -> f64 {
    k_scaled(1.0, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_terms() {
        assert_eq!(bessel_eval(BesselKind::J0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_eval(BesselKind::J1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_eval(BesselKind::I0, 0.0).unwrap(), 1.0);
        assert!(bessel_eval(BesselKind::Y0, 0.0).is_err());
        assert!(bessel_eval(BesselKind::Y1, -1.0).is_err());
    }

    #[test]
    fn reference_values() {
        let cases = [
            (BesselKind::J0, 1.0, 0.765_197_686_557_966_6),
            (BesselKind::J1, 1.0, 0.440_050_585_744_933_5),
            (BesselKind::Y0, 1.0, 0.088_256_964_215_676_96),
            (BesselKind::Y1, 1.0, -0.781_212_821_300_288_7),
            (BesselKind::J0, 10.0, -0.245_935_764_451_348_3),
            (BesselKind::Y0, 10.0, 0.055_671_167_283_599_39),
            (BesselKind::Y1, 10.0, 0.249_015_424_206_953_9),
            (BesselKind::J1, 30.0, -0.118_751_062_616_623_2),
            (BesselKind::I0, 1.0, 1.266_065_877_752_008),
            (BesselKind::I1, 1.0, 0.565_159_103_992_485),
        ];
        for (kind, x, want) in cases {
            let got = bessel_eval(kind, x).unwrap();
            assert!(
                (got - want).abs() < 1e-13,
                "{kind:?}({x}) = {got}, want {want}"
            );
        }
        assert!((k0_scaled(1.0) * (-1.0f64).exp() - 0.421_024_438_240_708_3).abs() < 1e-14);
        assert!((k1_scaled(1.0) * (-1.0f64).exp() - 0.601_907_230_197_234_6).abs() < 1e-14);
    }

    #[test]
    fn wronskian_identity() {
        for i in 1..400 {
            let x = 0.1 * i as f64;
            let (j0, j1, y0, y1) = jy(x);
            let w = j1 * y0 - j0 * y1;
            let want = 2.0 / (PI * x);
            assert!((w - want).abs() <= 1e-10 * want, "x = {x}: {w} vs {want}");
        }
    }

    #[test]
    fn modified_wronskian() {
        for i in 1..200 {
            let x = 0.25 * i as f64;
            let w = i0_scaled(x) * k1_scaled(x) + i1_scaled(x) * k0_scaled(x);
            assert!((w * x - 1.0).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn first_zero_of_j0() {
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if j0(a) * j0(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        assert!((0.5 * (a + b) - 2.404_825_557_695_773).abs() < 1e-10);
    }
}
