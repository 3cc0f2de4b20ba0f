//! Subcommand implementations.

use crate::error::CliError;
use crate::output::{num, read_text, sibling, write_csv, write_json};
use crate::report;
use crate::{
    ClambdaArgs, EigenArgs, GlueArgs, LocalModelArgs, Outcome, PainleveArgs, ReportArgs,
    SolveDiskArgs, SweepArgs, WeightsArgs,
};
use hitchin_core::disksolver::{compare_with_oracle, DiskGrid, SolveConfig};
use hitchin_core::gluing::{self, glued_residual, Annulus, GluedMetricSpec, ModelHandle, ZeroType};
use hitchin_core::localmodel::{
    c_lambda_table, default_painleve, eval_h_t_lambda, eval_m_lambda, solve_local_model,
    solve_local_model_with, LocalModelConfig,
};
use hitchin_core::painleve::{eta, solve_painleve};
use hitchin_core::spectral::eigen_table;
use hitchin_core::weights::{
    barycenter, binomial, check_stability, polytope_vertices, rational_string, vertex_counts,
    weight_drift_table, CInterp, FixedPointConfig, PsiAffine, Stability, SurfaceData,
    TCompatibleProblem, WeightVector, ZeroPartition,
};
use hitchin_core::{Complex64, Error, LocalModelSolution};
use serde::Serialize;
use serde_json::json;
use std::path::Path;

/// Largest `d_r` for which vertices are listed explicitly.
const MAX_LISTED_DR: i64 = 20;
/// Samples drawn when verifying the self-map radius.
const SELF_MAP_SAMPLES: usize = 256;

fn done(out: &Path) -> Outcome {
    Outcome {
        out: out.to_path_buf(),
        inputs: Vec::new(),
    }
}

pub fn painleve(a: &PainleveArgs) -> Result<Outcome, CliError> {
    let sol = solve_painleve(a.x_min, a.x_max, a.nodes, a.tol)?;
    let rows: Vec<Vec<String>> = (0..sol.len())
        .map(|k| {
            let x = sol.grid[k];
            vec![
                num(x),
                num(sol.psi[k]),
                num(sol.dpsi[k]),
                num(eta(&sol, x)),
                num(sol.residual[k]),
            ]
        })
        .collect();
    write_csv(&a.out, &["x", "psi", "dpsi", "eta", "residual"], &rows)?;
    Ok(done(&a.out))
}

pub fn local_model(a: &LocalModelArgs) -> Result<Outcome, CliError> {
    let sol = solve_local_model(a.t, a.lambda, a.rho_max, a.nodes, a.tol)?;
    let scale = a.t.powf(2.0 / 3.0);
    let rows: Vec<Vec<String>> = sol
        .grid
        .iter()
        .enumerate()
        .map(|(k, &rho)| {
            let m = eval_m_lambda(&sol, scale * rho);
            let det = eval_h_t_lambda(&sol, Complex64::new(rho, 0.0)).det();
            vec![
                num(rho),
                num(sol.f1[k]),
                num(sol.f2[k]),
                num(sol.f3[k]),
                num(m.a11),
                num(m.a12.re),
                num(m.a22),
                num(det),
            ]
        })
        .collect();
    write_csv(
        &a.out,
        &["rho", "f1", "f2", "f3", "M11", "M12", "M22", "detH"],
        &rows,
    )?;
    Ok(done(&a.out))
}

/// `n` evenly spaced points with exact endpoints.
fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let d = (n - 1) as f64;
    (0..n)
        .map(|k| (lo * (d - k as f64) + hi * k as f64) / d)
        .collect()
}

pub fn clambda(a: &ClambdaArgs) -> Result<Outcome, CliError> {
    if a.steps == 0
        || (a.steps > 1
            && a.lambda_max.partial_cmp(&a.lambda_min) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::domain("need steps ≥ 1 and lambda-max > lambda-min").into());
    }
    let cfg = LocalModelConfig {
        rho_max: a.rho_max,
        n_nodes: a.nodes,
        tol: a.tol,
        ..LocalModelConfig::default()
    };
    let table = c_lambda_table(
        &linspace(a.lambda_min, a.lambda_max, a.steps),
        1.0,
        &cfg,
        0.0,
    )?;
    let mut first_err = None;
    let rows: Vec<Vec<String>> = table
        .into_iter()
        .map(|row| match row.outcome {
            Ok((c, err)) => vec![num(row.lambda), num(c), num(err)],
            Err(e) => {
                eprintln!("warning: λ = {}: {e}", row.lambda);
                first_err.get_or_insert(e);
                vec![num(row.lambda), "NaN".into(), "NaN".into()]
            }
        })
        .collect();
    write_csv(&a.out, &["lambda", "c_lambda", "err"], &rows)?;
    match first_err {
        Some(e) => Err(e.into()),
        None => Ok(done(&a.out)),
    }
}

/// Scaled local model for R-type zeros; one `t = 1` solve serves every `t`.
fn r_model(lambda: f64) -> Result<LocalModelSolution, Error> {
    solve_local_model_with(1.0, lambda, &LocalModelConfig::default())
}

fn check_lambda(zero_type: ZeroType, lambda: f64) -> Result<(), Error> {
    if zero_type != ZeroType::R && lambda != 0.0 {
        return Err(Error::Config(format!(
            "--lambda applies to R-type zeros only, got {zero_type}"
        )));
    }
    Ok(())
}

fn annulus(radius: f64, (n_radial, n_angular): (usize, usize)) -> Annulus {
    Annulus {
        n_radial,
        n_angular,
        ..Annulus::transition(radius)
    }
}

pub fn glue(a: &GlueArgs) -> Result<Outcome, CliError> {
    check_lambda(a.zero_type, a.lambda)?;
    let model = match a.zero_type {
        ZeroType::R => Some(r_model(a.lambda)?),
        _ => None,
    };
    let spec = match &model {
        Some(sol) => GluedMetricSpec::r_type(sol, a.t, a.radius),
        None => GluedMetricSpec::painleve_type(a.zero_type, default_painleve(), a.t, a.radius),
    };
    let field = glued_residual(&spec, &annulus(a.radius, a.grid))?;
    let rows: Vec<Vec<String>> = field
        .samples
        .iter()
        .map(|s| {
            [s.rho, s.theta, s.h11, s.h22, s.h12_re, s.h12_im, s.residual]
                .iter()
                .map(|&v| num(v))
                .collect()
        })
        .collect();
    write_csv(
        &a.out,
        &["rho", "theta", "h11", "h22", "h12_re", "h12_im", "residual"],
        &rows,
    )?;
    Ok(done(&a.out))
}

pub fn residual_sweep(a: &SweepArgs) -> Result<Outcome, CliError> {
    check_lambda(a.zero_type, a.lambda)?;
    let model = match a.zero_type {
        ZeroType::R => Some(r_model(a.lambda)?),
        _ => None,
    };
    let handle = match &model {
        Some(sol) => ModelHandle::Local(sol),
        None => ModelHandle::Painleve(default_painleve()),
    };
    let sweep = gluing::residual_sweep(
        a.zero_type,
        &a.t_list,
        a.radius,
        handle,
        &annulus(a.radius, a.grid),
    )?;
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .map(|r| vec![num(r.t), num(r.t_pow), num(r.max_residual)])
        .collect();
    write_csv(&a.out, &["t", "t_pow", "max_residual"], &rows)?;
    write_json(
        &sibling(&a.out, "fit.json"),
        &json!({
            "zero_type": sweep.zero_type.to_string(),
            "abscissa": if a.zero_type == ZeroType::R { "t^(2/3)" } else { "t" },
            "fit_slope": sweep.fit.slope,
            "fit_intercept": sweep.fit.intercept,
            "r_squared": sweep.fit.r_squared,
        }),
    )?;
    Ok(done(&a.out))
}

#[derive(Serialize)]
struct WeightRow {
    t: f64,
    lambda: Vec<f64>,
    self_map_radius: f64,
}

#[derive(Serialize)]
struct DriftEntry {
    t: f64,
    drift: f64,
    drift_times_log_t: f64,
}

#[derive(Serialize)]
struct WeightsReport {
    stability: Stability,
    vertex_count: Option<u64>,
    barycenter: Option<Vec<String>>,
    vertices: Option<Vec<Vec<String>>>,
    lambda_t: Option<Vec<WeightRow>>,
    drift: Option<Vec<DriftEntry>>,
    note: Option<String>,
}

fn strings(w: &WeightVector) -> Vec<String> {
    w.iter().map(rational_string).collect()
}

/// Reads `(λ, c_λ)` rows from a `clambda` CSV, skipping failed rows.
fn read_c_table(path: &Path) -> Result<CInterp, CliError> {
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: format!("{}: {e}", path.display()),
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| -> Result<f64, Error> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!(
                        "{}: expected numeric 'lambda,c_lambda' fields",
                        path.display()
                    ),
                })
        };
        let (l, c) = (field(0)?, field(1)?);
        if c.is_finite() {
            rows.push((l, c));
        }
    }
    Ok(CInterp::from_rows(&rows)?)
}

pub fn weights(a: &WeightsArgs, seed: u64) -> Result<Outcome, CliError> {
    let surface = SurfaceData::new(a.genus, a.deg_l)?;
    let partition = ZeroPartition::from_counts(&surface, a.dbeta, a.dgamma)?;
    let stability = check_stability(&surface, &partition)?;
    let mut inputs = Vec::new();
    let mut report = WeightsReport {
        stability,
        vertex_count: None,
        barycenter: None,
        vertices: None,
        lambda_t: None,
        drift: None,
        note: None,
    };
    if stability != Stability::Stable {
        report.note = Some("faces are defined for stable partitions only".into());
        if !a.t.is_empty() {
            return Err(Error::domain("t-compatible weights need a stable partition").into());
        }
    } else {
        let (plus, _) = vertex_counts(&surface, &partition);
        report.barycenter = Some(strings(&barycenter(&surface, &partition)?));
        if (0..=partition.d_r).contains(&plus) {
            report.vertex_count = Some(binomial(partition.d_r as u64, plus as u64));
        }
        if partition.d_r <= MAX_LISTED_DR {
            report.vertices = Some(
                polytope_vertices(&surface, &partition)?
                    .iter()
                    .map(strings)
                    .collect(),
            );
        } else {
            report.note = Some(format!("vertices are listed for d_r ≤ {MAX_LISTED_DR}"));
        }
    }
    if !a.t.is_empty() {
        let c_path = a
            .clambda_file
            .as_ref()
            .ok_or_else(|| Error::Config("--t needs --clambda-file".into()))?;
        let c_interp = read_c_table(c_path)?;
        inputs.push(c_path.clone());
        let psi = match &a.psi_file {
            Some(p) => {
                inputs.push(p.clone());
                PsiAffine::from_json(&read_text(p)?)?
            }
            None => PsiAffine::zero(partition.d_r as usize),
        };
        let problem = TCompatibleProblem {
            surface,
            partition,
            psi: &psi,
            c_interp: &c_interp,
        };
        let cfg = FixedPointConfig::default();
        let mut lambda_t = Vec::new();
        let mut drift = Vec::new();
        for row in weight_drift_table(&problem, &a.t, &cfg) {
            let row = row?;
            lambda_t.push(WeightRow {
                t: row.t,
                lambda: row.lambda,
                self_map_radius: problem.verified_self_map_radius(row.t, SELF_MAP_SAMPLES, seed)?,
            });
            drift.push(DriftEntry {
                t: row.t,
                drift: row.drift,
                drift_times_log_t: row.drift_times_log_t,
            });
        }
        let csv_rows: Vec<Vec<String>> = drift
            .iter()
            .map(|d| vec![num(d.t), num(d.drift), num(d.drift_times_log_t)])
            .collect();
        write_csv(
            &sibling(&a.out, "drift.csv"),
            &["t", "drift", "drift_times_log_t"],
            &csv_rows,
        )?;
        report.lambda_t = Some(lambda_t);
        report.drift = Some(drift);
    }
    write_json(&a.out, &report)?;
    Ok(Outcome {
        out: a.out.clone(),
        inputs,
    })
}

pub fn eigen(a: &EigenArgs) -> Result<Outcome, CliError> {
    let rows: Vec<Vec<String>> = eigen_table(&a.t_list, a.a, a.delta, a.n_radial)?
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                num(r.lambda1_secular),
                num(r.lambda1_fd),
                num(r.lambda1_times_logt),
            ]
        })
        .collect();
    write_csv(
        &a.out,
        &["t", "lambda1_secular", "lambda1_fd", "lambda1_times_logt"],
        &rows,
    )?;
    Ok(done(&a.out))
}

pub fn solve_disk(a: &SolveDiskArgs) -> Result<Outcome, CliError> {
    check_lambda(a.zero_type, a.lambda)?;
    let model = match a.zero_type {
        ZeroType::R => Some(solve_local_model_with(
            a.t,
            a.lambda,
            &LocalModelConfig::default(),
        )?),
        _ => None,
    };
    let spec = match &model {
        Some(sol) => GluedMetricSpec::r_type(sol, a.t, a.radius),
        None => GluedMetricSpec::painleve_type(a.zero_type, default_painleve(), a.t, a.radius),
    };
    let grid = DiskGrid::model_disk(a.radius, a.grid.0, a.grid.1)?;
    let cfg = SolveConfig {
        scheme: a.scheme,
        tol: a.tol,
        ..SolveConfig::default()
    };
    let (sol, cmp) = compare_with_oracle(&grid, &spec, &cfg)?;
    write_json(
        &a.out,
        &json!({
            "iterations": sol.iterations,
            "residual_history": sol.residual_history,
            "linear_iterations": sol.linear_iterations,
            "gt_sup_norm": sol.gt_sup_norm,
            "hermitian_defect": sol.hermitian_defect,
            "comparison_to_oracle": cmp,
        }),
    )?;
    Ok(done(&a.out))
}

pub fn convergence_report(a: &ReportArgs) -> Result<Outcome, CliError> {
    let mut series = Vec::with_capacity(a.inputs.len());
    for path in &a.inputs {
        let name = path.display().to_string();
        let parsed = report::parse_series(&read_text(path)?).map_err(|e| match e {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{name}: {message}"),
            },
            other => other,
        })?;
        series.push(report::assess(&name, &parsed, a.tag)?);
    }
    write_json(&a.out, &report::combine(series))?;
    Ok(Outcome {
        out: a.out.clone(),
        inputs: a.inputs.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_hits_zero_on_symmetric_ranges() {
        let g = linspace(-0.2, 0.2, 21);
        assert_eq!(g.len(), 21);
        assert_eq!(g[10], 0.0);
        assert_eq!(g[0], -0.2);
        assert_eq!(g[20], 0.2);
    }
}
