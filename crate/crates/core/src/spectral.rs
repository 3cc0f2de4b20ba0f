//! First Neumann eigenvalue of `−Δ + G_t` on the unit disk, where `G_t` is
//! the radial well of height `A·t²` on `|ρ| < δ/t`.
//!
//! The eigenvalue comes from the Bessel secular determinant. An independent
//! finite-volume discretization of the radial operator serves as an oracle.

use crate::bessel::{i0_scaled, i1_scaled, jy};
use crate::error::{Error, Result};
use crate::fit::brent_root;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest `λ` probed by the bracket search.
pub const BRACKET_START: f64 = 1e-8;
/// Upper cap of the bracket search.
pub const BRACKET_CAP: f64 = 10.0;
/// Smallest admissible number of radial cells in the oracle.
pub const MIN_RADIAL: usize = 256;

/// A radial potential well `G_t = A·t²·1_{ρ < δ/t}` on the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellSpec {
    pub t: f64,
    pub a: f64,
    pub delta: f64,
}

impl WellSpec {
    /// Validated constructor.
    pub fn new(t: f64, a: f64, delta: f64) -> Result<Self> {
        let s = WellSpec { t, a, delta };
        s.validate()?;
        Ok(s)
    }

    /// Checks `t > 1`, `A > 0`, `δ ∈ (0, 1]` and `t/δ > 1`.
    pub fn validate(&self) -> Result<()> {
        if !(self.t.is_finite() && self.t > 1.0) {
            return Err(Error::domain(format!("t must exceed 1, got {}", self.t)));
        }
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::domain(format!(
                "well height must be positive, got {}",
                self.a
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if self.t / self.delta <= 1.0 {
            return Err(Error::domain("the well must lie strictly inside the disk"));
        }
        Ok(())
    }

    /// Well radius `δ/t`.
    pub fn radius(&self) -> f64 {
        self.delta / self.t
    }

    /// Well height `A·t²`.
    pub fn height(&self) -> f64 {
        self.a * self.t * self.t
    }
}

/// The secular determinant `δ_t(λ)` in the exponentially scaled gauge.
///
/// Rows encode `v′(1) = 0` and continuity of `v`, `v′` at the well edge.
/// The `I`-column is divided by `e^{κs}` with `κ = √(At² − λ)`, `s = δ/t`,
/// which leaves the zero set unchanged.
pub fn secular_delta(spec: &WellSpec, lambda: f64) -> Result<f64> {
    spec.validate()?;
    let height = spec.height();
    if !(lambda > 0.0 && lambda < height) {
        return Err(Error::domain(format!(
            "lambda must lie in (0, {height}), got {lambda}"
        )));
    }
    let s = spec.radius();
    let kappa = (height - lambda).sqrt();
    let k = lambda.sqrt();
    let (_, j1_b, _, y1_b) = jy(k);
    let (j0_s, j1_s, y0_s, y1_s) = jy(k * s);
    let i0 = i0_scaled(kappa * s);
    let i1 = i1_scaled(kappa * s);
    let m = [
        [0.0, j1_b, y1_b],
        [-i0, j0_s, y0_s],
        [kappa * i1, k * j1_s, k * y1_s],
    ];
    Ok(det3(&m))
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Smallest positive root of [`secular_delta`].
///
/// The bracket grows by doubling from [`BRACKET_START`] up to
/// `min(A·t², BRACKET_CAP)`; the root is then polished by Brent's method.
pub fn lambda1_of_t(spec: &WellSpec) -> Result<f64> {
    spec.validate()?;
    let cap = spec.height().min(BRACKET_CAP);
    let mut lo = BRACKET_START;
    let mut f_lo = secular_delta(spec, lo)?;
    loop {
        let hi = (2.0 * lo).min(cap * (1.0 - 1e-12));
        if hi <= lo {
            return Err(Error::Search(format!(
                "no sign change of the secular determinant below {cap}"
            )));
        }
        let f_hi = secular_delta(spec, hi)?;
        if f_lo == 0.0 {
            return Ok(lo);
        }
        if f_lo.signum() != f_hi.signum() {
            let f = |l: f64| secular_delta(spec, l).unwrap_or(f64::NAN);
            return brent_root(f, lo, hi, 1e-15 * hi, 200);
        }
        lo = hi;
        f_lo = f_hi;
    }
}

/// Faces of the graded radial grid: uniform on the well, geometric outside.
fn radial_faces(radius: f64, n_radial: usize) -> Vec<f64> {
    let n_in = (n_radial / 4).max(1);
    let n_out = n_radial - n_in;
    let mut faces = Vec::with_capacity(n_radial + 1);
    for i in 0..=n_in {
        faces.push(radius * i as f64 / n_in as f64);
    }
    let ratio = (1.0 / radius).ln() / n_out as f64;
    for j in 1..=n_out {
        faces.push(if j == n_out {
            1.0
        } else {
            radius * (ratio * j as f64).exp()
        });
    }
    faces
}

/// Smallest eigenvalue of the finite-volume radial operator
/// `−(ρv′)′/ρ + V v` on the given faces with zero flux at both ends.
///
/// `potential[i]` is the cell average of `V` on cell `i`.
fn radial_fv_eigen(faces: &[f64], potential: &[f64]) -> Result<f64> {
    let n = faces.len() - 1;
    let centers: Vec<f64> = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mass: Vec<f64> = faces
        .windows(2)
        .map(|w| 0.5 * (w[1] * w[1] - w[0] * w[0]))
        .collect();
    let mut flux = vec![0.0; n + 1];
    for i in 1..n {
        flux[i] = faces[i] / (centers[i] - centers[i - 1]);
    }
    let sq: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let shift = 1.0;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        diag[i] = (flux[i] + flux[i + 1] + potential[i] * mass[i]) / mass[i];
        if i + 1 < n {
            off[i] = -flux[i + 1] / (sq[i] * sq[i + 1]);
        }
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut y = diag[i] * x[i];
                if i > 0 {
                    y += off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += off[i] * x[i + 1];
                }
                y
            })
            .collect()
    };
    let shifted: Vec<f64> = diag.iter().map(|d| d + shift).collect();
    let mut x: Vec<f64> = sq.clone();
    normalize(&mut x);
    let mut last = f64::INFINITY;
    let mut trace = Vec::new();
    for _ in 0..200 {
        let mut y = thomas(&off, &shifted, &x)?;
        normalize(&mut y);
        x = y;
        let ax = apply(&x);
        let rq: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        trace.push(rq);
        if (rq - last).abs() <= 1e-11 * rq.abs().max(1e-3) {
            return Ok(rq);
        }
        last = rq;
    }
    Err(Error::solver("inverse iteration did not converge", trace))
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= n);
}

/// Solves a symmetric tridiagonal system with diagonal `d` and off-diagonal `e`.
fn thomas(e: &[f64], d: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut piv = d[0];
    if piv == 0.0 {
        return Err(Error::solver("singular tridiagonal system", vec![]));
    }
    y[0] = rhs[0] / piv;
    for i in 1..n {
        c[i - 1] = e[i - 1] / piv;
        piv = d[i] - e[i - 1] * c[i - 1];
        if piv == 0.0 {
            return Err(Error::solver("singular tridiagonal system", vec![]));
        }
        y[i] = (rhs[i] - e[i - 1] * y[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    Ok(y)
}

/// Finite-volume oracle for the first Neumann eigenvalue.
///
/// The grid has a face at the well edge, `n_radial / 4` uniform cells on the
/// well and geometric cells outside.
pub fn fd_neumann_oracle(spec: &WellSpec, n_radial: usize) -> Result<f64> {
    spec.validate()?;
    if n_radial < MIN_RADIAL {
        return Err(Error::domain(format!(
            "n_radial must be at least {MIN_RADIAL}, got {n_radial}"
        )));
    }
    let s = spec.radius();
    let faces = radial_faces(s, n_radial);
    let h = spec.height();
    let potential: Vec<f64> = faces
        .windows(2)
        .map(|w| if w[1] <= s * (1.0 + 1e-12) { h } else { 0.0 })
        .collect();
    radial_fv_eigen(&faces, &potential)
}

/// One row of the eigenvalue table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub t: f64,
    pub lambda1_secular: f64,
    pub lambda1_fd: f64,
    pub lambda1_times_logt: f64,
}

impl EigenRow {
    /// Relative disagreement between the two computations.
    pub fn relative_gap(&self) -> f64 {
        (self.lambda1_secular - self.lambda1_fd).abs() / self.lambda1_secular.abs()
    }

    /// `λ₁·(log log(t/(2δ)))²`.
    pub fn upper_bound_ratio(&self, delta: f64) -> f64 {
        let ll = (self.t / (2.0 * delta)).ln().ln();
        self.lambda1_secular * ll * ll
    }
}

/// Secular and oracle eigenvalues for every `t`, evaluated in parallel.
pub fn eigen_table(t_list: &[f64], a: f64, delta: f64, n_radial: usize) -> Result<Vec<EigenRow>> {
    t_list
        .par_iter()
        .map(|&t| {
            let spec = WellSpec::new(t, a, delta)?;
            let sec = lambda1_of_t(&spec)?;
            let fd = fd_neumann_oracle(&spec, n_radial)?;
            Ok(EigenRow {
                t,
                lambda1_secular: sec,
                lambda1_fd: fd,
                lambda1_times_logt: sec * t.ln(),
            })
        })
        .collect()
}
