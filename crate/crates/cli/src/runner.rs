//! Per-ε solve and analysis phases.
//!
//! The sweep separates them so the bad-disc multiplier can be fixed once per
//! sweep (the tube-energy integrals compare across ε only when the excluded
//! discs scale identically).

use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use vortexlab::analysis::{
    bad_discs, boundary_loop, canonical_map_eval, check_max_principle, compare_to_canonical,
    extract_eta, full_energy_breakdown, hopf_differential, hopf_masses, lp_gradient_norms,
    masked_h1, pohozaev, winding_number, MaxPrincipleReport, NodeRect, VortexSet,
};
use vortexlab::domain::Grid2D;
use vortexlab::field::FieldR2;
use vortexlab::potential::ConstantsTable;
use vortexlab::solver::{
    default_vortices, gradient_flow, init_field, newton_refine, InitStrategy, SolveConfig,
};
use vortexlab::vec2::Vec2;
use vortexlab::Real;

use crate::scenario::{DtSpec, Prepared};

/// Everything measured on one converged state.
#[derive(Clone, Debug, Serialize)]
pub struct EpsReport {
    pub eps: f64,
    pub grid_n: usize,
    pub h: f64,
    pub flow_iterations: usize,
    pub newton_iterations: usize,
    pub converged: bool,
    pub fallback: bool,
    pub final_residual: f64,
    pub energy_total: f64,
    pub energy_dirichlet: f64,
    pub energy_potential: f64,
    pub boundary_normal: f64,
    pub t_energy: f64,
    pub dist_grad: f64,
    pub boundary_degree: i32,
    pub boundary_winding: i32,
    pub n_discs: usize,
    pub n_clusters: usize,
    pub cluster_degrees: Vec<i32>,
    pub cluster_centers: Vec<(f64, f64)>,
    pub sum_degrees: i32,
    pub sum_d2: i32,
    pub lambda: f64,
    pub delta2: f64,
    pub masses: Vec<f64>,
    pub mass_remainder: f64,
    pub mass_radius: f64,
    pub lp15_gradient: f64,
    pub masked_h1: f64,
    pub sup_eta: Option<f64>,
    pub max_principle: Option<MaxPrincipleReport<f64>>,
    pub max_principle_blocked: Option<String>,
    pub pohozaev_potential: f64,
    pub pohozaev_boundary: f64,
    pub pohozaev_residual: f64,
    pub hopf_residual_max: f64,
    pub ustar_l2_masked: Option<f64>,
    pub ustar_sup_interior: Option<f64>,
    pub max_u: f64,
    pub grad_bound_const: f64,
    pub wall_ms: u64,
}

pub struct SolvePhase {
    pub field: FieldR2<Real>,
    pub flow_iterations: usize,
    pub newton_iterations: usize,
    pub converged: bool,
    pub fallback: bool,
    pub final_residual: f64,
    pub wall_ms: u64,
}

pub struct EpsOutcome {
    pub report: EpsReport,
    pub vortices: VortexSet<Real>,
}

pub fn solve_config(prep: &Prepared, eps: f64) -> SolveConfig<Real> {
    let s = &prep.scenario.solver;
    let mut cfg = SolveConfig::new(eps);
    cfg.dt = match s.dt {
        DtSpec::Value(v) => Some(v),
        DtSpec::Auto(_) => None,
    };
    cfg.tol = s.tol;
    cfg.max_iters = s.max_iters;
    cfg.lin_tol = s.lin_tol;
    cfg
}

/// Initialization (or warm start), relaxation, optional Newton sharpening.
pub fn solve_eps(
    prep: &Prepared,
    grid: Arc<Grid2D<Real>>,
    eps: f64,
    warm: Option<FieldR2<Real>>,
) -> Result<SolvePhase> {
    let start = Instant::now();
    let cfg = solve_config(prep, eps);
    let w = prep.potential.as_ref();
    let radial_branch = prep.scenario.solver.init == "radial";

    let u0 = match warm {
        Some(prev) => prev,
        None => {
            let strategy = match prep.init_strategy(eps) {
                InitStrategy::Canonical { vortices } if vortices.is_empty() => {
                    InitStrategy::Canonical {
                        vortices: default_vortices(grid.as_ref(), prep.datum.degree()),
                    }
                }
                other => other,
            };
            init_field(&strategy, grid.clone(), w, &prep.datum, eps, cfg.lin_tol)
                .context("initializing the field")?
        }
    };

    // The radial branch is a non-minimizer: the flow would leave it, so it
    // goes straight to Newton. Everything else relaxes first.
    if radial_branch {
        let out = newton_refine(u0, w, &cfg).context("newton refinement")?;
        return Ok(SolvePhase {
            final_residual: out.final_residual(),
            flow_iterations: 0,
            newton_iterations: out.iterations,
            converged: out.converged,
            fallback: out.fallback,
            field: out.field,
            wall_ms: start.elapsed().as_millis() as u64,
        });
    }

    let mut flow_cfg = cfg.clone();
    if prep.scenario.solver.newton {
        // The flow only needs to reach the Newton basin.
        flow_cfg.tol = cfg.tol.max(1e-4 * (1.0 + 1.0 / eps));
    }
    let relaxed = gradient_flow(u0, w, &flow_cfg).context("gradient flow")?;
    let flow_iterations = relaxed.iterations;
    if prep.scenario.solver.newton {
        let out = newton_refine(relaxed.field, w, &cfg).context("newton refinement")?;
        Ok(SolvePhase {
            final_residual: out.final_residual(),
            flow_iterations,
            newton_iterations: out.iterations,
            converged: out.converged,
            fallback: out.fallback,
            field: out.field,
            wall_ms: start.elapsed().as_millis() as u64,
        })
    } else {
        Ok(SolvePhase {
            final_residual: relaxed.final_residual(),
            flow_iterations,
            newton_iterations: 0,
            converged: relaxed.converged,
            fallback: false,
            field: relaxed.field,
            wall_ms: start.elapsed().as_millis() as u64,
        })
    }
}

pub fn delta2_of(prep: &Prepared, constants: &ConstantsTable<Real>) -> f64 {
    prep.scenario
        .analysis
        .delta2
        .unwrap_or(0.5 * constants.delta1)
}

/// The automatic bad-disc multiplier a state would choose.
pub fn probe_lambda(
    prep: &Prepared,
    constants: &ConstantsTable<Real>,
    u: &FieldR2<Real>,
    eps: f64,
) -> Result<f64> {
    let vs = bad_discs(u, &prep.curve, eps, delta2_of(prep, constants), None)?;
    Ok(vs.lambda)
}

/// Full diagnostics of a solved state.
pub fn analyze_eps(
    prep: &Prepared,
    constants: &ConstantsTable<Real>,
    eps: f64,
    phase: &SolvePhase,
    lambda: Option<f64>,
) -> Result<EpsOutcome> {
    let start = Instant::now();
    let u = &phase.field;
    let grid = u.grid().clone();
    let w = prep.potential.as_ref();
    let delta2 = delta2_of(prep, constants);
    let vortices =
        bad_discs(u, &prep.curve, eps, delta2, lambda).context("bad-disc detection")?;

    let breakdown = full_energy_breakdown(u, w, eps, &vortices);
    let poh = pohozaev(u, w, eps, &prep.datum);
    let lp = lp_gradient_norms(u, &[1.5]);
    let holes: Vec<(Vec2<Real>, Real)> = vortices
        .clusters
        .iter()
        .map(|c| (c.center, prep.scenario.analysis.mass_radius))
        .collect();
    let mh1 = masked_h1(u, &holes);

    let (masses, remainder) = if vortices.clusters.is_empty() {
        let total =
            vortexlab::analysis::integrate_nodes(u, |idx| w.value(u.get(idx))) / (eps * eps);
        (Vec::new(), total)
    } else {
        match hopf_masses(u, w, eps, &vortices.clusters, prep.scenario.analysis.mass_radius) {
            Ok(rep) => (rep.masses, rep.remainder),
            Err(e) => {
                eprintln!("warning: {e}");
                (Vec::new(), f64::NAN)
            }
        }
    };

    let sup_eta = extract_eta(u, &prep.curve, &vortices)
        .ok()
        .map(|dec| dec.sup_eta());

    let (max_principle, max_principle_blocked) = if vortices.discs.is_empty() {
        match check_max_principle(u, &prep.curve, constants, NodeRect::full(grid.n())) {
            Ok(rep) => (Some(rep), None),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, Some("vortices present; full-domain check skipped".into()))
    };

    let hopf = hopf_differential(u, w, eps);

    let cluster_vortices: Vec<(Vec2<Real>, i32)> = vortices
        .clusters
        .iter()
        .map(|c| (c.center, c.total_degree))
        .collect();
    let (ustar_l2, ustar_sup) = if cluster_vortices.iter().map(|&(_, d)| d).sum::<i32>()
        == prep.datum.degree()
    {
        match canonical_map_eval(
            grid.clone(),
            prep.curve.clone(),
            &prep.datum,
            &cluster_vortices,
            prep.scenario.solver.lin_tol,
        ) {
            Ok(reference) => match compare_to_canonical(
                u,
                &reference,
                prep.scenario.analysis.compare_margin,
                &holes,
            ) {
                Ok((sup, _supg, l2)) => (Some(l2), Some(sup)),
                Err(_) => (None, None),
            },
            Err(_) => (None, None),
        }
    } else {
        (None, None)
    };

    let boundary_winding =
        winding_number(u, &prep.curve, &boundary_loop(&grid)).unwrap_or(i32::MIN);

    let report = EpsReport {
        eps,
        grid_n: grid.n(),
        h: grid.h(),
        flow_iterations: phase.flow_iterations,
        newton_iterations: phase.newton_iterations,
        converged: phase.converged,
        fallback: phase.fallback,
        final_residual: phase.final_residual,
        energy_total: breakdown.dirichlet + breakdown.potential,
        energy_dirichlet: breakdown.dirichlet,
        energy_potential: breakdown.potential,
        boundary_normal: breakdown.boundary_normal,
        t_energy: breakdown.t_energy,
        dist_grad: breakdown.dist_grad,
        boundary_degree: prep.datum.degree(),
        boundary_winding,
        n_discs: vortices.discs.len(),
        n_clusters: vortices.clusters.len(),
        cluster_degrees: vortices.clusters.iter().map(|c| c.total_degree).collect(),
        cluster_centers: vortices
            .clusters
            .iter()
            .map(|c| (c.center.x, c.center.y))
            .collect(),
        sum_degrees: vortices.sum_degrees(),
        sum_d2: vortices.sum_d2(),
        lambda: vortices.lambda,
        delta2,
        masses,
        mass_remainder: remainder,
        mass_radius: prep.scenario.analysis.mass_radius,
        lp15_gradient: lp[0],
        masked_h1: mh1,
        sup_eta,
        max_principle,
        max_principle_blocked,
        pohozaev_potential: poh.potential_term,
        pohozaev_boundary: poh.boundary_term,
        pohozaev_residual: poh.identity_residual,
        hopf_residual_max: hopf.residual_max,
        ustar_l2_masked: ustar_l2,
        ustar_sup_interior: ustar_sup,
        max_u: u.max_norm(),
        grad_bound_const: eps * u.max_grad_norm(),
        wall_ms: phase.wall_ms + start.elapsed().as_millis() as u64,
    };

    Ok(EpsOutcome { report, vortices })
}
