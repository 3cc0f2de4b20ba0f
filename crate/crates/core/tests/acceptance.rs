//! Acceptance checks, one PASS/FAIL line per criterion.

use hitchin_core::disksolver::{
    apply_lt, compare_with_oracle, discretely_exact_seed, pairing, quadratic_form_qt,
    solve_hitchin_disk, DiskField, DiskGrid, PauliField, SolveConfig,
};
use hitchin_core::fit::{aitken, linear_fit};
use hitchin_core::gluing::{residual_sweep, Annulus, GluedMetricSpec, ModelHandle, ZeroType};
use hitchin_core::hermlin::{comparison_ratio, eig2, matrest_ratios, psd_sqrt};
use hitchin_core::localmodel::{
    c_lambda_table, default_painleve, eval_h_t_lambda, eval_m_lambda, extract_c_lambda,
    lambda0_oracle_m, solve_local_model, solve_local_model_with, LocalModelConfig,
};
use hitchin_core::painleve::{
    eta, solve_painleve, DEFAULT_NODES, DEFAULT_TOL, DEFAULT_X_MAX, DEFAULT_X_MIN,
};
use hitchin_core::spectral::{eigen_table, lambda1_of_t, WellSpec};
use hitchin_core::weights::{
    barycenter, binomial, check_stability, polytope_vertices, rational_string, vertex_counts,
    weight_drift_table, CInterp, FixedPointConfig, PsiAffine, Stability, SurfaceData,
    TCompatibleProblem, ZeroPartition, PSI_BOUNDED_JSON, PSI_ZERO_JSON,
};
use hitchin_core::{CMat2, Complex64, HermMatrix2, Result};
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn rel_diff(a: &CMat2, b: &CMat2) -> f64 {
    (*a - *b).max_abs() / b.max_abs()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
        .collect()
}

fn painleve_solution() -> Result<Outcome> {
    let sol = solve_painleve(DEFAULT_X_MIN, DEFAULT_X_MAX, DEFAULT_NODES, DEFAULT_TOL)?;
    let signs = sol.psi.iter().all(|&p| p > 0.0) && sol.dpsi.iter().all(|&d| d < 0.0);
    let (x, y): (Vec<f64>, Vec<f64>) = sol
        .grid
        .iter()
        .zip(&sol.psi)
        .filter(|(x, _)| (5.0..=20.0).contains(*x))
        .map(|(x, p)| (*x, p.ln()))
        .unzip();
    let fit = linear_fit(&x, &y)?;
    let eta_ok = sol
        .grid
        .iter()
        .all(|&x| (0.0..=0.125).contains(&eta(&sol, x)));
    outcome(
        signs && sol.residual_max <= 1e-8 && fit.slope <= -0.9 && eta_ok,
        format!(
            "signs {signs}, residual {:.3e}, tail slope {:.4}, eta in [0, 1/8] {eta_ok}",
            sol.residual_max, fit.slope
        ),
    )
}

fn c_zero() -> Result<Outcome> {
    let cs = [20.0, 40.0, 80.0]
        .iter()
        .map(|&rho_max| extract_c_lambda(&solve_local_model(1.0, 0.0, rho_max, 2048, 1e-10)?))
        .collect::<Result<Vec<f64>>>()?;
    let direct = (cs[1] - 4.0).abs() / 4.0;
    let extrap = aitken(cs[0], cs[1], cs[2]);
    let extrap_err = (extrap - 4.0).abs() / 4.0;
    outcome(
        direct <= 0.01 && extrap_err <= 1e-3,
        format!("c0 {:.10} (rel err {direct:.2e}), extrapolated {extrap:.10} (rel err {extrap_err:.2e})", cs[1]),
    )
}

fn closed_form() -> Result<Outcome> {
    let sol = solve_local_model(1.0, 0.0, 40.0, 2048, 1e-10)?;
    let p = default_painleve();
    let worst = logspace(0.05, 20.0, 400)
        .into_iter()
        .map(|r| {
            rel_diff(
                &eval_m_lambda(&sol, r).to_cmat(),
                &lambda0_oracle_m(p, r).to_cmat(),
            )
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-3, format!("relative sup mismatch {worst:.3e}"))
}

fn scaling_law() -> Result<Outcome> {
    let cfg = LocalModelConfig::default();
    let one = solve_local_model_with(1.0, 0.1, &cfg)?;
    let eight = solve_local_model_with(8.0, 0.1, &cfg)?;
    let s = 8f64.powf(1.0 / 3.0);
    let gamma_inv = CMat2::diag(Complex64::new(1.0 / s, 0.0), Complex64::new(s, 0.0));
    let mut worst: f64 = 0.0;
    for rho in logspace(0.01, 5.0, 120) {
        for k in 0..6 {
            let z = Complex64::from_polar(rho, 0.9 * k as f64);
            let direct = eval_h_t_lambda(&eight, z).to_cmat();
            let scaled =
                gamma_inv.adjoint() * eval_h_t_lambda(&one, z * s * s).to_cmat() * gamma_inv;
            worst = worst.max(rel_diff(&direct, &scaled));
        }
    }
    outcome(
        worst <= 1e-4,
        format!("relative sup gap t=8 vs scaled t=1: {worst:.3e}"),
    )
}

fn asymptotic_decay() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [-0.15, 0.0, 0.1] {
        let sol = solve_local_model_with(1.0, lambda, &LocalModelConfig::default())?;
        let (x, y): (Vec<f64>, Vec<f64>) = (0..=100)
            .map(|k| {
                let r = 5.0 + 0.25 * k as f64;
                (r, sol.deviation_at_scaled(r).0.max_abs().ln())
            })
            .unzip();
        let fit = linear_fit(&x, &y)?;
        pass &= fit.slope <= -0.5 && fit.r_squared >= 0.98;
        parts.push(format!(
            "λ={lambda}: slope {:.3}, R² {:.4}",
            fit.slope, fit.r_squared
        ));
    }
    outcome(pass, parts.join("; "))
}

fn glued_residual_decay() -> Result<Outcome> {
    let ts = [4.0, 8.0, 16.0, 32.0];
    let sol = solve_local_model(1.0, 0.0, 40.0, 2048, 1e-10)?;
    let region = Annulus::transition(1.0);
    let r = residual_sweep(ZeroType::R, &ts, 1.0, ModelHandle::Local(&sol), &region)?;
    let g = residual_sweep(
        ZeroType::Gamma,
        &ts,
        1.0,
        ModelHandle::Painleve(default_painleve()),
        &region,
    )?;
    outcome(
        r.fit.slope < 0.0 && r.fit.r_squared >= 0.99 && g.fit.slope < 0.0,
        format!(
            "R-type vs t^(2/3): slope {:.4}, R² {:.5}; γ-type vs t: slope {:.4}, R² {:.5}",
            r.fit.slope, r.fit.r_squared, g.fit.slope, g.fit.r_squared
        ),
    )
}

fn brute_force_stability(g: i64, d: i64, p: &ZeroPartition) -> Stability {
    let (lo, hi) = (
        Rational64::from_integer(-(g - 1)) + Rational64::new(p.d_beta, 2),
        Rational64::from_integer(g - 1) - Rational64::new(p.d_gamma, 2),
    );
    let d = Rational64::from_integer(d);
    if lo < d && d < hi {
        Stability::Stable
    } else if lo == d && d == hi {
        Stability::StrictlyPolystable
    } else {
        Stability::Unstable
    }
}

fn weight_combinatorics() -> Result<Outcome> {
    let mut checked = 0;
    let mut failures = Vec::new();
    for g in 2..=3i64 {
        for d in -(g - 2)..=(g - 2) {
            let s = SurfaceData::new(g, d)?;
            for b in 0..=s.n_zeros() {
                for gm in 0..=s.n_zeros() - b {
                    let p = ZeroPartition::from_counts(&s, b, gm)?;
                    checked += 1;
                    let class = check_stability(&s, &p)?;
                    if class != brute_force_stability(g, d, &p) {
                        failures.push(format!("class {g},{d},{p:?}"));
                    }
                    if class != Stability::Stable {
                        continue;
                    }
                    let bc = barycenter(&s, &p)?;
                    if bc.iter().sum::<Rational64>() != Rational64::from_integer(-d) {
                        failures.push(format!("sum {g},{d},{p:?}"));
                    }
                    if let Ok(v) = polytope_vertices(&s, &p) {
                        let (plus, _) = vertex_counts(&s, &p);
                        if v.len() as u64 != binomial(p.d_r as u64, plus as u64) {
                            failures.push(format!("vertices {g},{d},{p:?}"));
                        }
                    }
                }
            }
        }
    }
    let s = SurfaceData::new(2, 0)?;
    let bc = barycenter(&s, &ZeroPartition::from_counts(&s, 1, 0)?)?;
    let want = [
        Rational64::new(1, 4),
        Rational64::new(-1, 12),
        Rational64::new(-1, 12),
        Rational64::new(-1, 12),
    ];
    let shown: Vec<String> = bc.iter().map(rational_string).collect();
    if bc != want {
        failures.push(format!("barycenter {shown:?}"));
    }
    outcome(
        failures.is_empty(),
        format!(
            "{checked} partitions checked, mismatches {failures:?}, (1,0,3) barycenter {shown:?}"
        ),
    )
}

fn weight_drift() -> Result<Outcome> {
    let grid: Vec<f64> = (-8..=8).map(|k| 0.025 * k as f64).collect();
    let rows = c_lambda_table(&grid, 1.0, &LocalModelConfig::default(), 0.0)?
        .into_iter()
        .map(|row| row.outcome.map(|(c, _)| (row.lambda, c)))
        .collect::<Result<Vec<_>>>()?;
    let interp = CInterp::from_rows(&rows)?;
    let s = SurfaceData::new(2, 0)?;
    let ts = [1e2, 1e4, 1e6, 1e8];
    let cfg = FixedPointConfig::default();
    let bounded = PsiAffine::from_json(PSI_BOUNDED_JSON)?;
    let problem = TCompatibleProblem {
        surface: s,
        partition: ZeroPartition::from_counts(&s, 1, 0)?,
        psi: &bounded,
        c_interp: &interp,
    };
    let prods = weight_drift_table(&problem, &ts, &cfg)
        .into_iter()
        .map(|r| r.map(|row| row.drift_times_log_t))
        .collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = prods
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
    let zero = PsiAffine::from_json(PSI_ZERO_JSON)?;
    let zero_problem = TCompatibleProblem {
        surface: s,
        partition: ZeroPartition::from_counts(&s, 0, 0)?,
        psi: &zero,
        c_interp: &interp,
    };
    let mut exact_zero = true;
    for &t in &ts {
        exact_zero &= zero_problem
            .solve(t, &cfg)?
            .lambda
            .iter()
            .all(|l| *l == 0.0);
    }
    outcome(
        lo > 0.0 && hi / lo <= 2.0 && exact_zero,
        format!(
            "drift·log t {prods:.4?}, variation {:.3}, ψ ≡ 0 gives λ ≡ 0 {exact_zero}",
            hi / lo
        ),
    )
}

fn eigenvalue_bounds() -> Result<Outcome> {
    let (a, delta) = (1.0, 1.0);
    let rows = eigen_table(&[10.0, 1e2, 1e3, 1e4], a, delta, 4096)?;
    let gap = rows.iter().map(|r| r.relative_gap()).fold(0.0, f64::max);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for t in logspace(1e2, 1e8, 13) {
        let l1 = lambda1_of_t(&WellSpec::new(t, a, delta)?)?;
        lower.push(l1 * t.ln());
        let ll = (t / 2.0).ln().ln();
        upper.push(l1 * ll * ll);
    }
    let span = |v: &[f64]| {
        v.iter()
            .fold((f64::MAX, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)))
    };
    let (lo_min, lo_max) = span(&lower);
    let (up_min, up_max) = span(&upper);
    outcome(
        gap <= 0.01 && lo_min > 0.0 && lo_max / lo_min <= 2.0 && up_max / up_min <= 2.0,
        format!(
            "max secular/FD gap {gap:.3e}; λ1·log t in [{lo_min:.4}, {lo_max:.4}]; λ1·(log log(t/2))² in [{up_min:.4}, {up_max:.4}]"
        ),
    )
}

fn disk_solve() -> Result<Outcome> {
    let t = 8.0;
    let sol = solve_local_model_with(t, 0.0, &LocalModelConfig::default())?;
    let spec = GluedMetricSpec::r_type(&sol, t, 1.0);
    let grid = DiskGrid::model_disk(1.0, 128, 128)?;
    let cfg = SolveConfig::default();
    let seed = discretely_exact_seed(&DiskField::oracle(grid, &spec)?, t, cfg.tol)?;
    let exact = solve_hitchin_disk(&seed, t, &cfg)?;
    let (glued, cmp) = compare_with_oracle(&grid, &spec, &cfg)?;
    let final_residual = *glued.residual_history.last().unwrap_or(&f64::INFINITY);
    outcome(
        exact.iterations <= 2
            && exact.gt_sup_norm <= 1e-8
            && final_residual <= 1e-8
            && cmp.sup_relative_diff <= 5.0 * cmp.discretization_error,
        format!(
            "exact seed: {} iterations, ‖g−Id‖∞ {:.3e}; glued: residual {final_residual:.3e}, oracle gap {:.3e} vs doubling error {:.3e}",
            exact.iterations, exact.gt_sup_norm, cmp.sup_relative_diff, cmp.discretization_error
        ),
    )
}

fn random_posdef(rng: &mut ChaCha8Rng) -> HermMatrix2 {
    let a = rng.gen_range(0.01..10.0);
    let d = rng.gen_range(0.01..10.0);
    let z = Complex64::from_polar(
        rng.gen_range(0.0..0.99) * f64::sqrt(a * d),
        rng.gen_range(0.0..std::f64::consts::TAU),
    );
    HermMatrix2::new(a, z, d)
}

fn random_cmat(rng: &mut ChaCha8Rng, scale: f64) -> CMat2 {
    let mut c = || Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
    CMat2::new(c(), c(), c(), c())
}

fn bump(r: f64, a: f64, b: f64) -> f64 {
    if r <= a || r >= b {
        return 0.0;
    }
    let x = (r - a) / (b - a);
    (-1.0 / (x * (1.0 - x)) + 4.0).exp()
}

fn property_suites() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut offdiag, mut comp_ok, mut r1_max, mut r2_max) = (0.0f64, true, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let h = random_posdef(&mut rng);
        let b = psd_sqrt(&h)?;
        offdiag = offdiag.max((b.a12 - h.a12 / b.trace()).norm() / h.max_abs());
        let a = random_cmat(&mut rng, 3.0);
        let (l1, l2) = eig2(&h)?;
        let r = comparison_ratio(&a, &h)?;
        comp_ok &= r >= l1 / l2 * (1.0 - 1e-12) && r <= l2 / l1 * (1.0 + 1e-12);
        let bm = a + random_cmat(&mut rng, 1.0);
        let m = a.max_abs().max((a - bm).max_abs());
        let (r1, r2) = matrest_ratios(&a, &bm, m);
        r1_max = r1_max.max(r1);
        r2_max = r2_max.max(r2);
    }
    let t = 4.0;
    let sol = solve_local_model_with(t, 0.0, &LocalModelConfig::default())?;
    let spec = GluedMetricSpec::r_type(&sol, t, 1.0);
    let mut errs = Vec::new();
    for (n_r, n_a) in [(48, 32), (95, 64)] {
        let grid = DiskGrid::new(0.1, 1.0, n_r, n_a)?;
        let field = DiskField::glued(grid, &spec)?;
        let coeffs = (0..grid.len())
            .map(|n| {
                let b = bump(grid.radius(n / n_a), 0.25, 0.8);
                let th = grid.theta(n % n_a);
                [0.3 * b, b * th.cos(), -0.5 * b * (2.0 * th).sin(), 0.7 * b]
            })
            .collect();
        let u = PauliField { coeffs };
        let lu = apply_lt(&field, t, &u)?;
        let q = quadratic_form_qt(&field, t, &u)?;
        errs.push((pairing(&field, &lu, &u) - q).abs() / q);
    }
    let order = (errs[0] / errs[1]).log2();
    outcome(
        offdiag <= 1e-12 && comp_ok && r1_max <= 6.0 && r2_max <= 14.0 && order >= 1.5,
        format!(
            "sqrt off-diagonal identity {offdiag:.2e}, comparison bound {comp_ok}, matrest constants {r1_max:.3} ≤ 6 and {r2_max:.3} ≤ 14, pairing order {order:.2} ({:.2e} → {:.2e})",
            errs[0], errs[1]
        ),
    )
}

type Check = fn() -> Result<Outcome>;

fn main() {
    let checks: [(&str, Check, u64); 11] = [
        ("Painlevé solution", painleve_solution, 10),
        ("c0 = 4", c_zero, 60),
        ("λ = 0 closed form", closed_form, 60),
        ("scaling law", scaling_law, 120),
        ("asymptotic decay", asymptotic_decay, 180),
        ("glued residual decay", glued_residual_decay, 300),
        ("weight combinatorics", weight_combinatorics, 5),
        ("t-compatible drift", weight_drift, 120),
        ("eigenvalue bounds", eigenvalue_bounds, 30),
        ("disk solve", disk_solve, 600),
        ("property suites", property_suites, 120),
    ];
    let mut all = true;
    for (k, (name, check, limit)) in checks.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*limit);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        all &= pass;
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s of {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64()
        );
    }
    if !all {
        std::process::exit(1);
    }
}
