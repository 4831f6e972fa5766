//! Critical-point solver: discrete energy/gradient, semi-implicit gradient
//! flow, Newton refinement, radial profiles, and initialization strategies.

mod energy;
mod flow;
mod init;
mod linsolve;
mod newton;
mod radial;

pub use energy::{
    boundary_normal_integral, discrete_energy, discrete_gradient, energy_split, residual_norm,
    EnergyBreakdown, InteriorStencil,
};
pub use flow::gradient_flow;
pub use init::{
    default_vortices, harmonic_extension, init_field, phase_correction_boundary,
    vortex_angle_sum,
};
pub use linsolve::{cg, minres, par_dot, par_norm, LinInfo, LinearOp};
pub use newton::newton_refine;
pub use radial::{solve_radial, RadialProfile, DEFAULT_RADIAL_MESH};

use crate::field::FieldR2;
use crate::scalar::Scalar;
use crate::vec2::Vec2;

/// How to construct the starting field.
#[derive(Clone, Debug)]
pub enum InitStrategy<S> {
    /// Curve-valued ansatz carrying the listed vortices, harmonically matched
    /// to the boundary lift.
    Canonical { vortices: Vec<(Vec2<S>, i32)> },
    /// Lift of the equivariant radial profile (unit-circle vacuum curve only).
    Radial { degree: i32 },
    /// Canonical ansatz with default vortex placement plus seeded interior
    /// noise; boundary values untouched.
    Perturbed { seed: u64, amplitude: S },
}

#[derive(Clone, Debug)]
pub struct SolveConfig<S> {
    pub eps: S,
    /// Time step; `None` selects ε²/4, the stability budget of the explicit
    /// reaction term.
    pub dt: Option<S>,
    /// L² tolerance on the Euler–Lagrange residual.
    pub tol: S,
    pub max_iters: usize,
    /// Relative residual of the inner symmetric solves.
    pub lin_tol: S,
    pub init: InitStrategy<S>,
    /// Residual level below which Newton is trusted; above it, refinement
    /// falls back to the gradient flow.
    pub newton_switch: S,
    /// Residual/energy recording stride of the flow.
    pub check_every: usize,
}

impl<S: Scalar> SolveConfig<S> {
    pub fn new(eps: S) -> Self {
        Self {
            eps,
            dt: None,
            tol: S::lit(1e-8),
            max_iters: 200_000,
            lin_tol: S::lit(1e-8),
            init: InitStrategy::Canonical { vortices: vec![] },
            newton_switch: S::lit(0.5),
            check_every: 25,
        }
    }

    pub fn dt_value(&self) -> S {
        self.dt.unwrap_or(self.eps * self.eps / S::lit(4.0))
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult<S> {
    pub field: FieldR2<S>,
    pub residual_history: Vec<S>,
    pub energy_history: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
    /// Newton refinement handed over to the gradient flow.
    pub fallback: bool,
}

impl<S: Scalar> SolveResult<S> {
    pub fn final_residual(&self) -> S {
        self.residual_history.last().copied().unwrap_or(S::infinity())
    }

    pub fn final_energy(&self) -> S {
        self.energy_history.last().copied().unwrap_or(S::infinity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{build_curve, CurveSpec};
    use crate::domain::{BoundaryDatum, DomainSpec, Grid2D, StarDomain};
    use crate::potential::PotentialW;
    use std::sync::Arc;

    fn setup(
        n: usize,
        degree: i32,
    ) -> (Arc<Grid2D<f64>>, PotentialW<f64>, BoundaryDatum<f64>) {
        let domain = Arc::new(StarDomain::build(&DomainSpec::Disc { r: 1.0 }).unwrap());
        let grid = Arc::new(Grid2D::rasterize(domain, n).unwrap());
        let curve = Arc::new(build_curve(&CurveSpec::Circle).unwrap());
        let w = PotentialW::gl();
        let datum = BoundaryDatum::new(curve, degree, |_| 0.0).unwrap();
        (grid, w, datum)
    }

    #[test]
    fn constant_datum_converges_immediately() {
        let (grid, w, _) = setup(64, 0);
        let curve = Arc::new(build_curve(&CurveSpec::Circle).unwrap());
        let datum = BoundaryDatum::new(curve.clone(), 0, |_| 1.2).unwrap();
        let gamma = curve.tau(1.2);
        let mut u = crate::field::FieldR2::bind(grid.clone(), &datum);
        for &idx in grid.interior_nodes() {
            u.set(idx as usize, gamma);
        }
        let cfg = SolveConfig::new(0.2);
        let out = gradient_flow(u, &w, &cfg).unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 0);
        assert!(out.final_residual() <= cfg.tol);
    }

    #[test]
    fn d1_flow_converges_with_monotone_energy() {
        let (grid, w, datum) = setup(96, 1);
        let eps = 0.15;
        let mut cfg = SolveConfig::new(eps);
        cfg.tol = 1e-6;
        cfg.max_iters = 30_000;
        let u0 = init_field(
            &InitStrategy::Canonical {
                vortices: vec![(Vec2::zero(), 1)],
            },
            grid,
            &w,
            &datum,
            eps,
            cfg.lin_tol,
        )
        .unwrap();
        let out = gradient_flow(u0, &w, &cfg).unwrap();
        assert!(out.converged, "residuals: {:?}", out.residual_history.last());
        for k in 1..out.energy_history.len() {
            let (prev, cur) = (out.energy_history[k - 1], out.energy_history[k]);
            assert!(
                cur <= prev * (1.0 + 1e-12) + 1e-12,
                "energy rose at record {k}: {prev} -> {cur}"
            );
        }
        // Solutions stay under the coercivity radius (plus grid slack).
        assert!(out.field.max_norm() <= w.r0() + 10.0 * out.field.grid().h());
    }

    #[test]
    fn oversized_timestep_diverges() {
        let (grid, w, datum) = setup(64, 1);
        let eps = 0.1;
        let mut cfg = SolveConfig::new(eps);
        cfg.dt = Some(10.0 * eps * eps);
        cfg.check_every = 5;
        cfg.max_iters = 4000;
        let u0 = init_field(
            &InitStrategy::Perturbed {
                seed: 3,
                amplitude: 0.3,
            },
            grid,
            &w,
            &datum,
            eps,
            cfg.lin_tol,
        )
        .unwrap();
        match gradient_flow(u0, &w, &cfg) {
            Err(SolveError::Diverged { .. }) | Err(SolveError::NotFinite(_)) => {}
            Ok(out) => panic!(
                "expected divergence, got converged={} res={:?}",
                out.converged,
                out.final_residual()
            ),
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn newton_sharpens_flow_output_quadratically() {
        let (grid, w, datum) = setup(96, 1);
        let eps = 0.15;
        let mut cfg = SolveConfig::new(eps);
        cfg.tol = 1e-4;
        cfg.max_iters = 30_000;
        let u0 = init_field(
            &InitStrategy::Canonical {
                vortices: vec![(Vec2::zero(), 1)],
            },
            grid,
            &w,
            &datum,
            eps,
            cfg.lin_tol,
        )
        .unwrap();
        let relaxed = gradient_flow(u0, &w, &cfg).unwrap();
        assert!(relaxed.converged);

        let mut ncfg = cfg.clone();
        ncfg.tol = 1e-11;
        let refined = newton_refine(relaxed.field, &w, &ncfg).unwrap();
        assert!(refined.converged);
        assert!(!refined.fallback);
        let hist = &refined.residual_history;
        assert!(
            hist[hist.len() - 1] <= hist[0] / 10.0,
            "history {hist:?}"
        );
        assert!(refined.iterations <= 6, "took {} steps", refined.iterations);
        // Quadratic contraction: fit C in r_{k+1} ≤ C r_k² over the tail.
        let mut cs = Vec::new();
        for k in 0..hist.len() - 1 {
            if hist[k] < 1e-2 && hist[k + 1] > 1e-14 {
                cs.push(hist[k + 1] / (hist[k] * hist[k]));
            }
        }
        assert!(
            cs.iter().all(|&c| c < 1e3),
            "no quadratic regime: {hist:?} (C = {cs:?})"
        );
    }

    #[test]
    fn newton_far_field_takes_fallback() {
        let (grid, w, datum) = setup(64, 0);
        let eps = 0.2;
        let mut cfg = SolveConfig::new(eps);
        cfg.tol = 1e-6;
        cfg.max_iters = 20_000;
        let u0 = init_field(
            &InitStrategy::Perturbed {
                seed: 11,
                amplitude: 0.8,
            },
            grid,
            &w,
            &datum,
            eps,
            cfg.lin_tol,
        )
        .unwrap();
        let out = newton_refine(u0, &w, &cfg).unwrap();
        assert!(out.fallback, "expected the flow fallback to engage");
        assert!(out.converged);
    }

    #[test]
    fn perturbed_init_leaves_boundary_untouched() {
        let (grid, w, datum) = setup(64, 1);
        let clean = init_field(
            &InitStrategy::Canonical {
                vortices: vec![(Vec2::zero(), 1)],
            },
            grid.clone(),
            &w,
            &datum,
            0.1,
            1e-8,
        )
        .unwrap();
        let noisy = init_field(
            &InitStrategy::Perturbed {
                seed: 42,
                amplitude: 0.2,
            },
            grid.clone(),
            &w,
            &datum,
            0.1,
            1e-8,
        )
        .unwrap();
        for cn in grid.cut_nodes() {
            assert_eq!(clean.get(cn.idx as usize).x, noisy.get(cn.idx as usize).x);
            assert_eq!(clean.get(cn.idx as usize).y, noisy.get(cn.idx as usize).y);
        }
        let mut changed = 0;
        for &idx in grid.interior_nodes() {
            if (clean.get(idx as usize) - noisy.get(idx as usize)).norm() > 1e-12 {
                changed += 1;
            }
        }
        assert!(changed > grid.interior_nodes().len() / 2);
    }

    #[test]
    fn init_degree_mismatch_rejected() {
        let (grid, w, datum) = setup(64, 2);
        let err = init_field(
            &InitStrategy::Canonical {
                vortices: vec![(Vec2::zero(), 1)],
            },
            grid,
            &w,
            &datum,
            0.1,
            1e-8,
        );
        assert!(matches!(
            err,
            Err(SolveError::InitDegreeMismatch { got: 1, want: 2 })
        ));
    }

    use crate::error::SolveError;
}
