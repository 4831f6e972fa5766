//! Sweep orchestration: the ε ladder (warm-started by default), a common
//! bad-disc multiplier, aggregation, summary checks with their thresholds,
//! and run-directory persistence with an atomically written manifest.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use vortexlab::analysis::{canonical_map_eval, compare_to_canonical, energy_scaling, observed_orders};
use vortexlab::domain::Grid2D;
use vortexlab::Real;

use crate::runner::{analyze_eps, delta2_of, probe_lambda, solve_eps, EpsReport};
use crate::scenario::Prepared;
use crate::svg;

/// Tolerances of the summary checks.
pub const SLOPE_REL_TOL: f64 = 0.10;
pub const MASS_REL_TOL: f64 = 0.15;
pub const MASS_REMAINDER_FRAC: f64 = 0.10;
pub const BOUNDEDNESS_FACTOR: f64 = 2.0;
pub const VALUE_ORDER_RANGE: (f64, f64) = (1.5, 2.5);
pub const GRAD_ORDER_RANGE: (f64, f64) = (0.5, 1.5);
pub const GRAD_BOUND_DRIFT: f64 = 2.0;
pub const HOPF_REFINEMENT_RATIO: f64 = 2.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunEntry {
    pub eps: f64,
    pub grid_n: usize,
    pub report_file: String,
    pub checkpoint_file: Option<String>,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub fit_residual: Option<f64>,
    pub expected_slope: Option<f64>,
    pub value_orders: Vec<f64>,
    pub grad_orders: Vec<f64>,
    pub hopf_ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario_hash: String,
    pub version: String,
    pub created_unix: u64,
    pub canonical_scenario: String,
    pub grids: Vec<usize>,
    pub eps: Vec<f64>,
    pub runs: Vec<RunEntry>,
    pub failures: Vec<String>,
    pub aggregate: Aggregate,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

pub struct SweepOutput {
    pub manifest: Manifest,
    pub dir: PathBuf,
    pub reports: Vec<EpsReport>,
}

pub struct SweepOptions {
    pub out_dir: Option<String>,
    pub grid: Option<usize>,
    pub warm_start: Option<bool>,
    pub checks: Option<Vec<String>>,
    pub seed: Option<u64>,
    /// Stop after the first ε (the `solve` subcommand).
    pub first_eps_only: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            out_dir: None,
            grid: None,
            warm_start: None,
            checks: None,
            seed: None,
            first_eps_only: false,
        }
    }
}

/// Creates `<out>/<hash>/run-N` with the first unused N; results are never
/// overwritten.
fn fresh_run_dir(base: &Path, hash: &str) -> Result<PathBuf> {
    let root = base.join(hash);
    std::fs::create_dir_all(&root)?;
    for k in 1..10_000 {
        let dir = root.join(format!("run-{k}"));
        if !dir.exists() {
            std::fs::create_dir_all(&dir)?;
            return Ok(dir);
        }
    }
    anyhow::bail!("run directory space exhausted under {}", root.display());
}

pub fn run_sweep(mut prep: Prepared, opts: &SweepOptions) -> Result<SweepOutput> {
    if let Some(g) = opts.grid {
        prep.scenario.sweep.grid = vec![g];
    }
    if let Some(wsflag) = opts.warm_start {
        prep.scenario.sweep.warm_start = wsflag;
    }
    if let Some(checks) = &opts.checks {
        prep.scenario.analysis.checks = checks.clone();
    }
    if let Some(seed) = opts.seed {
        prep.scenario.solver.seed = seed;
    }
    let out_base = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| prep.scenario.output.dir.clone());

    for wmsg in &prep.warnings {
        eprintln!("warning: {wmsg}");
    }

    let hash = prep.hash();
    let dir = fresh_run_dir(Path::new(&out_base), &hash)?;
    let constants = prep
        .potential
        .compute_constants()
        .context("computing the constants table")?;

    let mut eps_list = prep.eps_list();
    if opts.first_eps_only {
        eps_list.truncate(1);
    }
    let grids = prep.scenario.sweep.grid.clone();
    let warm_start = prep.scenario.sweep.warm_start;

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut reports: Vec<EpsReport> = Vec::new();
    // Reports of the last (finest) grid drive the aggregate checks;
    // per-grid Hopf residuals feed the refinement ratios.
    let mut hopf_by_grid: Vec<Vec<f64>> = Vec::new();
    let want_rates = prep.datum.degree() == 0 && prep.enabled("rates");
    let mut kept_states: Vec<(f64, vortexlab::field::FieldR2<Real>)> = Vec::new();

    for &n in &grids {
        let grid = Arc::new(Grid2D::rasterize(prep.domain.clone(), n).context("rasterizing")?);
        let mut phases = Vec::new();
        let mut warm = None;
        for &eps in &eps_list {
            match solve_eps(&prep, grid.clone(), eps, warm.take()) {
                Ok(phase) => {
                    if warm_start {
                        warm = Some(phase.field.clone());
                    }
                    phases.push((eps, Some(phase)));
                }
                Err(e) => {
                    failures.push(format!("eps = {eps}, n = {n}: {e:#}"));
                    phases.push((eps, None));
                    warm = None;
                }
            }
        }

        // Sweep-wide disc multiplier: the largest automatic choice.
        let lambda_common = match prep.scenario.analysis.lambda {
            Some(l) => Some(l),
            None => {
                let mut best: Option<f64> = None;
                for (eps, phase) in &phases {
                    if let Some(p) = phase {
                        if let Ok(l) = probe_lambda(&prep, &constants, &p.field, *eps) {
                            best = Some(best.map_or(l, |b: f64| b.max(l)));
                        }
                    }
                }
                best
            }
        };

        let mut grid_reports = Vec::new();
        let mut hopf_res = Vec::new();
        if want_rates {
            kept_states = phases
                .iter()
                .filter_map(|(eps, p)| p.as_ref().map(|p| (*eps, p.field.clone())))
                .collect();
        }
        for (eps, phase) in &phases {
            let Some(phase) = phase else { continue };
            match analyze_eps(&prep, &constants, *eps, phase, lambda_common) {
                Ok(outcome) => {
                    let eps_dir = dir.join(format!("n{:04}_eps{:.4}", n, eps));
                    std::fs::create_dir_all(&eps_dir)?;
                    let report_file = eps_dir.join("report.json");
                    std::fs::write(
                        &report_file,
                        serde_json::to_string_pretty(&outcome.report)?,
                    )?;
                    let checkpoint_file = if prep.scenario.output.checkpoints {
                        let f = eps_dir.join("field.bin");
                        phase.field.write_checkpoint(&f, *eps)?;
                        Some(f.strip_prefix(&dir).unwrap().display().to_string())
                    } else {
                        None
                    };
                    if prep.scenario.output.svg {
                        svg::write_state_maps(&eps_dir, &phase.field, &prep.curve, &outcome.vortices)?;
                    }
                    hopf_res.push(outcome.report.hopf_residual_max);
                    runs.push(RunEntry {
                        eps: *eps,
                        grid_n: n,
                        report_file: report_file
                            .strip_prefix(&dir)
                            .unwrap()
                            .display()
                            .to_string(),
                        checkpoint_file,
                        wall_ms: outcome.report.wall_ms,
                    });
                    grid_reports.push(outcome.report);
                }
                Err(e) => failures.push(format!("analysis eps = {eps}, n = {n}: {e:#}")),
            }
        }
        hopf_by_grid.push(hopf_res);
        reports = grid_reports;
    }

    let (value_orders, grad_orders) = if want_rates && kept_states.len() >= 2 {
        let (value_errs, grad_errs) = rate_errors(&prep, &kept_states)?;
        (observed_orders(&value_errs), observed_orders(&grad_errs))
    } else {
        (Vec::new(), Vec::new())
    };
    let aggregate = aggregate(&reports, &hopf_by_grid, value_orders, grad_orders)?;
    let checks = evaluate_checks(&prep, &reports, &aggregate);
    let all_pass = failures.is_empty() && checks.iter().all(|c| c.pass);

    write_series_csv(&dir.join("series.csv"), &reports, &aggregate)?;

    let manifest = Manifest {
        scenario_hash: hash,
        version: env!("CARGO_PKG_VERSION").to_string(),
        created_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        canonical_scenario: prep.canonical_toml(),
        grids,
        eps: eps_list,
        runs,
        failures,
        aggregate,
        checks,
        all_pass,
    };

    // Atomic finish: a manifest exists only for completed sweeps.
    let tmp = dir.join("manifest.json.tmp");
    std::fs::write(&tmp, serde_json::to_string_pretty(&manifest)?)?;
    std::fs::rename(&tmp, dir.join("manifest.json"))?;

    Ok(SweepOutput {
        manifest,
        dir,
        reports,
    })
}

fn aggregate(
    reports: &[EpsReport],
    hopf_by_grid: &[Vec<f64>],
    value_orders: Vec<f64>,
    grad_orders: Vec<f64>,
) -> Result<Aggregate> {
    let mut slope = None;
    let mut intercept = None;
    let mut fit_residual = None;
    let mut expected_slope = None;
    if reports.len() >= 3 {
        let pts: Vec<(Real, Real)> = reports
            .iter()
            .map(|r| (r.eps, r.energy_total))
            .collect();
        if let Ok(fit) = energy_scaling(&pts) {
            slope = Some(fit.slope);
            intercept = Some(fit.intercept);
            fit_residual = Some(fit.residual);
        }
        let sum_d2 = reports.last().map(|r| r.sum_d2).unwrap_or(0);
        expected_slope = Some(PI * sum_d2 as f64);
    }

    let mut hopf_ratios = Vec::new();
    if hopf_by_grid.len() >= 2 {
        for pair in hopf_by_grid.windows(2) {
            for (coarse, fine) in pair[0].iter().zip(&pair[1]) {
                if *fine > 0.0 {
                    hopf_ratios.push(coarse / fine);
                }
            }
        }
    }
    Ok(Aggregate {
        slope,
        intercept,
        fit_residual,
        expected_slope,
        value_orders,
        grad_orders,
        hopf_ratios,
    })
}

fn evaluate_checks(
    prep: &Prepared,
    reports: &[EpsReport],
    agg: &Aggregate,
) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut push = |name: &str, pass: bool, detail: String| {
        out.push(CheckResult {
            name: name.to_string(),
            pass,
            detail,
        });
    };
    if reports.is_empty() {
        push("degrees", false, "no completed runs".into());
        return out;
    }

    if prep.enabled("degrees") {
        let ok = reports
            .iter()
            .all(|r| r.sum_degrees == r.boundary_degree && r.boundary_winding == r.boundary_degree);
        push(
            "degrees",
            ok,
            format!(
                "Σd_j per eps: {:?}, boundary degree {}",
                reports.iter().map(|r| r.sum_degrees).collect::<Vec<_>>(),
                prep.datum.degree()
            ),
        );
    }

    if prep.enabled("energy_slope") && reports.len() >= 3 {
        match (agg.slope, agg.expected_slope) {
            (Some(s), Some(e)) => {
                let tol = SLOPE_REL_TOL * PI * (reports.last().unwrap().sum_d2.max(1) as f64);
                let pass = (s - e).abs() <= tol;
                push(
                    "energy_slope",
                    pass,
                    format!("slope {s:.4} vs π·ΣD² = {e:.4} (tol ±{tol:.4})"),
                );
            }
            _ => push("energy_slope", false, "fit unavailable".into()),
        }
    }

    if prep.enabled("hopf_mass") {
        let last = reports.last().unwrap();
        if last.n_clusters == 0 {
            let pass = prep.datum.degree() == 0;
            push(
                "hopf_mass",
                pass,
                format!("no clusters; total potential mass {:.3e}", last.mass_remainder),
            );
        } else if last.masses.is_empty() {
            push("hopf_mass", false, "mass discs overlapped".into());
        } else {
            let mut pass = true;
            let mut detail = String::new();
            for (m, d) in last.masses.iter().zip(&last.cluster_degrees) {
                let expect = PI * (*d as f64) * (*d as f64) / 2.0;
                let ok = (m - expect).abs() <= MASS_REL_TOL * expect;
                pass &= ok;
                detail.push_str(&format!("m = {m:.4} vs πD²/2 = {expect:.4}; "));
            }
            let m_min = last.masses.iter().cloned().fold(f64::INFINITY, f64::min);
            let rem_ok = last.mass_remainder <= MASS_REMAINDER_FRAC * m_min;
            pass &= rem_ok;
            detail.push_str(&format!(
                "remainder {:.3e} vs 10% of {m_min:.4}",
                last.mass_remainder
            ));
            push("hopf_mass", pass, detail);
        }
    }

    if prep.enabled("boundedness") && reports.len() >= 2 {
        let mut pass = true;
        let mut detail = String::new();
        for (label, values) in [
            (
                "potential/eps^2",
                reports.iter().map(|r| r.energy_potential).collect::<Vec<_>>(),
            ),
            ("t_energy", reports.iter().map(|r| r.t_energy).collect()),
            ("dist_grad", reports.iter().map(|r| r.dist_grad).collect()),
            ("lp15", reports.iter().map(|r| r.lp15_gradient).collect()),
            ("masked_h1", reports.iter().map(|r| r.masked_h1).collect()),
        ] {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(0.0f64, f64::max);
            let factor = if lo > 0.0 { hi / lo } else { f64::INFINITY };
            let ok = factor <= BOUNDEDNESS_FACTOR;
            pass &= ok;
            detail.push_str(&format!("{label}: ×{factor:.2}; "));
        }
        push("boundedness", pass, detail);
    }

    if prep.enabled("rates") && prep.datum.degree() == 0 && agg.value_orders.len() >= 1 {
        let vo_ok = agg
            .value_orders
            .iter()
            .all(|&o| (VALUE_ORDER_RANGE.0..=VALUE_ORDER_RANGE.1).contains(&o));
        let go_ok = agg
            .grad_orders
            .iter()
            .all(|&o| (GRAD_ORDER_RANGE.0..=GRAD_ORDER_RANGE.1).contains(&o));
        push(
            "rates",
            vo_ok && go_ok,
            format!(
                "value orders {:?} in {:?}, gradient orders {:?} in {:?}",
                agg.value_orders, VALUE_ORDER_RANGE, agg.grad_orders, GRAD_ORDER_RANGE
            ),
        );
    }

    if prep.enabled("max_principle") && prep.datum.degree() == 0 {
        let mut pass = true;
        let mut detail = String::new();
        for r in reports {
            match &r.max_principle {
                Some(rep) => {
                    pass &= rep.pass && rep.phase_bound_pass;
                    detail.push_str(&format!(
                        "eps {}: pass={} phase_bound={} τ_h={:.2e}; ",
                        r.eps, rep.pass, rep.phase_bound_pass, rep.tau_h
                    ));
                }
                None => {
                    pass = false;
                    detail.push_str(&format!(
                        "eps {}: blocked ({}); ",
                        r.eps,
                        r.max_principle_blocked.as_deref().unwrap_or("?")
                    ));
                }
            }
        }
        push("max_principle", pass, detail);
    }

    if prep.enabled("ustar_monotone") && reports.len() >= 2 {
        let vals: Vec<Option<f64>> = reports.iter().map(|r| r.ustar_l2_masked).collect();
        if vals.iter().all(|v| v.is_some()) {
            let vals: Vec<f64> = vals.into_iter().map(|v| v.unwrap()).collect();
            let pass = vals.windows(2).all(|w| w[1] < w[0]);
            push("ustar_monotone", pass, format!("‖u - u*‖_L² ladder: {vals:?}"));
        } else {
            push("ustar_monotone", false, "comparison unavailable".into());
        }
    }

    if prep.enabled("linfty_bound") {
        let r0 = prep.potential.r0();
        let mut pass = true;
        let mut detail = String::new();
        for r in reports {
            let ok = r.max_u <= r0 + 10.0 * r.h;
            pass &= ok;
            detail.push_str(&format!("eps {}: max|u| = {:.4}; ", r.eps, r.max_u));
        }
        push("linfty_bound", pass, format!("{detail}R0 = {r0}"));
    }

    if prep.enabled("grad_bound") && reports.len() >= 2 {
        let consts: Vec<f64> = reports.iter().map(|r| r.grad_bound_const).collect();
        let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = consts.iter().cloned().fold(0.0f64, f64::max);
        let pass = lo > 0.0 && hi / lo < GRAD_BOUND_DRIFT;
        push(
            "grad_bound",
            pass,
            format!("ε·max|∇u| over sweep: {consts:?} (drift ×{:.2})", hi / lo),
        );
    }

    out
}

fn write_series_csv(path: &Path, reports: &[EpsReport], agg: &Aggregate) -> Result<()> {
    let mut s = String::from(
        "eps,energy_dirichlet,energy_potential,n_vortices,sum_d2,m_1,m_2,m_3,m_4,slope,intercept,fit_residual\n",
    );
    for r in reports {
        let mut m = [f64::NAN; 4];
        for (slot, &v) in m.iter_mut().zip(&r.masses) {
            *slot = v;
        }
        let fmt = |v: f64| {
            if v.is_nan() {
                String::new()
            } else {
                format!("{v:.10e}")
            }
        };
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.eps,
            fmt(r.energy_dirichlet),
            fmt(r.energy_potential),
            r.n_clusters,
            r.sum_d2,
            fmt(m[0]),
            fmt(m[1]),
            fmt(m[2]),
            fmt(m[3]),
            fmt(agg.slope.unwrap_or(f64::NAN)),
            fmt(agg.intercept.unwrap_or(f64::NAN)),
            fmt(agg.fit_residual.unwrap_or(f64::NAN)),
        ));
    }
    std::fs::write(path, s)?;
    Ok(())
}

/// Sup-norm rate errors of stored states against a fine canonical reference.
pub fn rate_errors(
    prep: &Prepared,
    states: &[(f64, vortexlab::field::FieldR2<Real>)],
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let fine = Arc::new(Grid2D::rasterize(
        prep.domain.clone(),
        prep.scenario.analysis.reference_grid,
    )?);
    let reference = canonical_map_eval(
        fine,
        prep.curve.clone(),
        &prep.datum,
        &[],
        prep.scenario.solver.lin_tol,
    )?;
    let margin = prep.scenario.analysis.compare_margin;
    let mut value = Vec::new();
    let mut grad = Vec::new();
    for (eps, u) in states {
        let (sup, supg, _l2) = compare_to_canonical(u, &reference, margin, &[])?;
        value.push((*eps, sup));
        grad.push((*eps, supg));
    }
    Ok((value, grad))
}

/// Orders from rate errors via consecutive pairs.
pub fn orders_of(errs: &[(f64, f64)]) -> Vec<f64> {
    observed_orders(errs)
}

